"""Gas records, datasets, normalization statistics and CSV I/O."""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import DegenerateVariable, ParseError, SchemaError

GASES = ("H2", "CH4", "C2H6", "C2H4", "C2H2", "CO", "CO2", "O2", "N2", "TDCG")
N_VARS = len(GASES)

# normalized range; the sigmoid output layer cannot reach 0 or 1
LOW, HIGH = 0.1, 0.9


class Label(str, enum.Enum):
    ACCEPTABLE = "acceptable"
    UNUSABLE = "unusable"


@dataclass(eq=False)
class GasRecord:
    """One bushing observation.

    ``mask[j]`` is True when variable ``j`` is missing. Whatever sits in
    ``values[j]`` under a mask is ground truth kept for scoring (or NaN when
    read from file) and is never used by the imputation routines.
    """

    values: np.ndarray
    mask: np.ndarray = None
    label: Optional[Label] = None
    id: str = ""

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64).copy()
        if self.mask is None:
            self.mask = np.zeros(self.values.shape, dtype=bool)
        else:
            self.mask = np.asarray(self.mask, dtype=bool).copy()
        if self.values.ndim != 1:
            raise SchemaError("record values must be one-dimensional")
        if self.mask.shape != self.values.shape:
            raise SchemaError(
                f"mask length {self.mask.size} != value length {self.values.size}")
        if self.label is not None and not isinstance(self.label, Label):
            self.label = Label(self.label)
        present = self.values[~self.mask]
        if not np.all(np.isfinite(present)) or np.any(present < 0):
            raise ValueError(f"record {self.id!r}: present values must be finite and >= 0")

    @property
    def n_missing(self) -> int:
        return int(self.mask.sum())

    @property
    def complete(self) -> bool:
        return not self.mask.any()

    def known(self) -> np.ndarray:
        return self.values[~self.mask]

    def copy(self, **changes) -> "GasRecord":
        return replace(self, **changes)

    def same_as(self, other: "GasRecord") -> bool:
        """Equality on (id, label, mask, present values)."""
        return (self.id == other.id and self.label == other.label
                and np.array_equal(self.mask, other.mask)
                and np.array_equal(self.values[~self.mask], other.values[~other.mask]))


@dataclass
class Dataset:
    records: list = field(default_factory=list)
    schema: tuple = GASES

    def __post_init__(self):
        self.records = list(self.records)
        self.schema = tuple(self.schema)
        for r in self.records:
            if r.values.size != len(self.schema):
                raise SchemaError(
                    f"record {r.id!r} has {r.values.size} values, schema has {len(self.schema)}")

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return Dataset(self.records[i], self.schema)
        return self.records[i]

    @property
    def values(self) -> np.ndarray:
        """(n, p) matrix of stored values, NaN where missing."""
        if not self.records:
            return np.empty((0, len(self.schema)))
        out = np.vstack([r.values for r in self.records])
        out[self.mask] = np.nan
        return out

    @property
    def mask(self) -> np.ndarray:
        if not self.records:
            return np.zeros((0, len(self.schema)), dtype=bool)
        return np.vstack([r.mask for r in self.records])

    @property
    def labels(self) -> list:
        return [r.label for r in self.records]

    def complete_only(self) -> "Dataset":
        return Dataset([r for r in self.records if r.complete], self.schema)

    def same_as(self, other: "Dataset") -> bool:
        return (self.schema == other.schema and len(self) == len(other)
                and all(a.same_as(b) for a, b in zip(self.records, other.records)))


@dataclass(frozen=True)
class NormStats:
    """Per-variable min/max/mean/sample-std in raw ppm."""

    min: np.ndarray
    max: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    names: tuple = GASES

    @property
    def span(self) -> np.ndarray:
        return self.max - self.min

    def check(self):
        bad = [n for n, s in zip(self.names, self.span) if not s > 0]
        if bad:
            raise DegenerateVariable(f"zero-spread variable(s): {', '.join(bad)}")

    def scale(self, raw):
        """Affine map of raw values (any shape broadcasting over variables) onto [0.1, 0.9]."""
        self.check()
        return LOW + (HIGH - LOW) * (np.asarray(raw, dtype=float) - self.min) / self.span

    def unscale(self, norm):
        self.check()
        return self.min + (np.asarray(norm, dtype=float) - LOW) * self.span / (HIGH - LOW)


def fit_normalizer(dataset: Dataset) -> NormStats:
    """Compute min, max, mean and sample std of each variable over present entries."""
    X = dataset.values
    names = dataset.schema
    counts = np.sum(~np.isnan(X), axis=0)
    if np.any(counts < 2):
        j = int(np.argmin(counts))
        raise DegenerateVariable(f"variable {names[j]} has fewer than 2 present values")
    stats = NormStats(
        min=np.nanmin(X, axis=0),
        max=np.nanmax(X, axis=0),
        mean=np.nanmean(X, axis=0),
        std=np.nanstd(X, axis=0, ddof=1),
        names=names,
    )
    stats.check()
    return stats


def normalize(record: GasRecord, stats: NormStats) -> GasRecord:
    """Map present values onto [0.1, 0.9]; masked slots become NaN."""
    vals = np.where(record.mask, np.nan, stats.scale(np.where(record.mask, 0.0, record.values)))
    return _rebuild(record, vals)


def denormalize(record: GasRecord, stats: NormStats) -> GasRecord:
    vals = np.where(record.mask, np.nan, stats.unscale(np.where(record.mask, LOW, record.values)))
    return _rebuild(record, vals)


def _rebuild(record, vals):
    # normalized values may legitimately leave [0, inf), so bypass validation
    out = object.__new__(GasRecord)
    out.values = vals
    out.mask = record.mask.copy()
    out.label = record.label
    out.id = record.id
    return out


def within_std_correct(imputed_raw: float, true_raw: float, var_std: float) -> bool:
    """True when the imputed value is non-negative and within one std of the truth."""
    if not var_std > 0:
        raise ValueError("var_std must be positive")
    return bool(abs(imputed_raw - true_raw) <= var_std and imputed_raw >= 0)


# ---------------------------------------------------------------- CSV I/O

def _header(schema: Sequence[str]) -> list:
    return ["id", *schema, "label"]


def read_records(path, schema: Sequence[str] = GASES) -> Dataset:
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        return parse_records(fh, schema, source=str(path))


def parse_records(lines: Iterable[str], schema: Sequence[str] = GASES, source="<input>") -> Dataset:
    width = len(schema) + 2
    records = []
    reader = csv.reader(lines)
    for rowno, row in enumerate(reader, start=1):
        if not row:
            continue
        if rowno == 1 and row[0] == "id":
            if row != _header(schema):
                raise SchemaError(f"{source}: unexpected header {row}")
            continue
        if len(row) != width:
            raise SchemaError(f"{source}:{rowno}: expected {width} columns, got {len(row)}")
        values = np.empty(len(schema))
        mask = np.zeros(len(schema), dtype=bool)
        for j, cell in enumerate(row[1:-1]):
            cell = cell.strip()
            if cell == "":
                mask[j] = True
                values[j] = np.nan
                continue
            try:
                v = float(cell)
            except ValueError:
                raise ParseError(f"{source}:{rowno}: column {schema[j]!r}: bad number {cell!r}",
                                 row=rowno, column=schema[j]) from None
            if not math.isfinite(v) or v < 0:
                raise ParseError(f"{source}:{rowno}: column {schema[j]!r}: value {cell!r} "
                                 "must be finite and non-negative", row=rowno, column=schema[j])
            values[j] = v
        lab = row[-1].strip().lower()
        try:
            label = Label(lab) if lab else None
        except ValueError:
            raise ParseError(f"{source}:{rowno}: unknown label {row[-1]!r}",
                             row=rowno, column="label") from None
        records.append(GasRecord(values, mask, label, row[0]))
    return Dataset(records, schema)


def format_value(v: float) -> str:
    return repr(float(v))


def write_records(dataset: Dataset, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(_header(dataset.schema))
        for r in dataset.records:
            cells = ["" if m else format_value(v) for v, m in zip(r.values, r.mask)]
            w.writerow([r.id, *cells, r.label.value if r.label else ""])
