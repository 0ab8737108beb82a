"""Synthetic DGA data: a log-normal latent-factor generator, threshold labelling
and controlled missingness.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import rankdata

from .data import GASES, Dataset, GasRecord, Label
from .errors import IncompleteRecord, InvalidConfig, InvalidK

# roughly typical magnitudes (ppm) for a healthy oil-paper bushing
DEFAULT_SCALES = (50.0, 30.0, 25.0, 15.0, 1.0, 250.0, 2000.0, 4000.0, 5000.0, 400.0)

DEFAULT_THRESHOLDS = {"H2": 100.0, "C2H2": 2.0, "CO": 500.0}


@dataclass(frozen=True)
class RuleTable:
    """Per-variable thresholds; a record is unusable when any thresholded gas
    strictly exceeds its limit."""

    thresholds: dict = field(default_factory=lambda: dict(DEFAULT_THRESHOLDS))
    schema: tuple = GASES

    def __post_init__(self):
        if not self.thresholds:
            raise InvalidConfig("rule table needs at least one threshold")
        for name, t in self.thresholds.items():
            if name not in self.schema:
                raise InvalidConfig(f"unknown variable in rule table: {name}")
            if not (np.isfinite(t) and t > 0):
                raise InvalidConfig(f"threshold for {name} must be positive, got {t}")

    def vector(self) -> np.ndarray:
        """Thresholds aligned with the schema, +inf where unset."""
        return np.array([self.thresholds.get(n, np.inf) for n in self.schema], dtype=float)

    def dumps(self) -> str:
        lines = ["# gas=threshold (ppm); any exceedance => unusable"]
        lines += [f"{n}={self.thresholds[n]!r}" for n in self.schema if n in self.thresholds]
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str, schema=GASES) -> "RuleTable":
        th = {}
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            name, sep, value = line.partition("=")
            if not sep:
                raise InvalidConfig(f"rule line {lineno}: expected NAME=THRESHOLD")
            try:
                th[name.strip()] = float(value)
            except ValueError:
                raise InvalidConfig(f"rule line {lineno}: bad threshold {value.strip()!r}") from None
        return cls(th, tuple(schema))

    def save(self, path):
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def load(cls, path, schema=GASES) -> "RuleTable":
        return cls.loads(Path(path).read_text(encoding="utf-8"), schema)


@dataclass(frozen=True)
class GenConfig:
    n_records: int = 500
    latent_rank: int = 3
    loading_seed: int = 0
    scales: tuple = DEFAULT_SCALES
    noise_fraction: float = 0.05
    rule: RuleTable = field(default_factory=RuleTable)
    seed: int = 0
    id_prefix: str = "b"

    def validate(self):
        p = len(self.scales)
        if self.n_records < 0:
            raise InvalidConfig("n_records must be >= 0")
        if not 1 <= self.latent_rank <= p:
            raise InvalidConfig(f"latent_rank must lie in [1, {p}]")
        if any(not s > 0 for s in self.scales):
            raise InvalidConfig("scales must be positive")
        if not 0 <= self.noise_fraction < 1:
            raise InvalidConfig("noise_fraction must lie in [0, 1)")
        if p != len(self.rule.schema):
            raise InvalidConfig("scale vector and rule schema differ in width")


def loading_matrix(n_vars: int, rank: int, seed: int) -> np.ndarray:
    """Fixed (n_vars, rank) loadings. The first factor loads positively on every
    gas (a common ageing/fault intensity); the others are signed."""
    rng = np.random.default_rng([seed, 0x10AD])
    L = np.empty((n_vars, rank))
    L[:, 0] = rng.uniform(0.3, 0.8, n_vars)
    if rank > 1:
        L[:, 1:] = rng.normal(0.0, 0.4, (n_vars, rank - 1))
    return L


def generate(config: GenConfig) -> Dataset:
    config.validate()
    scales = np.asarray(config.scales, dtype=float)
    p = scales.size
    L = loading_matrix(p, config.latent_rank, config.loading_seed)
    records = []
    for i in range(config.n_records):
        # per-record stream keeps output independent of generation order
        rng = np.random.default_rng([config.seed, i])
        z = rng.standard_normal(config.latent_rank)
        eps = config.noise_fraction * rng.standard_normal(p)
        values = scales * np.exp(L @ z + eps)
        rec = GasRecord(values, id=f"{config.id_prefix}{i}")
        rec.label = apply_rule(rec, config.rule)
        records.append(rec)
    return Dataset(records, config.rule.schema)


def apply_rule(record: GasRecord, rule: RuleTable) -> Label:
    th = rule.vector()
    used = np.isfinite(th)
    if np.any(record.mask & used):
        raise IncompleteRecord(f"record {record.id!r}: a thresholded gas is missing")
    return Label.UNUSABLE if np.any(record.values[used] > th[used]) else Label.ACCEPTABLE


def relabel(dataset: Dataset, rule: RuleTable) -> Dataset:
    return Dataset([r.copy(label=apply_rule(r, rule)) for r in dataset], dataset.schema)


def mask_missing(dataset: Dataset, k: int, mechanism: str = "MCAR", seed: int = 0) -> Dataset:
    """Mask exactly ``k`` variables of every record.

    MCAR picks positions uniformly without replacement. MAR never masks
    variable 0; the other variables are weighted by the percentile rank ``q``
    of the record's variable-0 value, variable ``j`` getting weight
    ``(1 - q) * j + q * (p - j)``, so which gases go missing depends only on
    an always-observed gas. Stored values are untouched under the mask.
    """
    p = len(dataset.schema)
    mechanism = mechanism.upper()
    if mechanism not in ("MCAR", "MAR"):
        raise InvalidConfig(f"unknown missingness mechanism {mechanism!r}")
    limit = p if mechanism == "MCAR" else p - 1
    if not 0 <= k <= limit:
        raise InvalidK(f"k must lie in [0, {limit}] for {mechanism}, got {k}")

    n = len(dataset)
    if mechanism == "MAR" and n:
        first = np.array([r.values[0] for r in dataset])
        q = (rankdata(first) - 1) / max(n - 1, 1)
    out = []
    for i, rec in enumerate(dataset):
        rng = np.random.default_rng([seed, i, 0x3A5C])
        mask = np.zeros(p, dtype=bool)
        if k:
            if mechanism == "MCAR":
                idx = rng.choice(p, size=k, replace=False)
            else:
                j = np.arange(1, p)
                w = (1 - q[i]) * j + q[i] * (p - j)
                idx = rng.choice(j, size=k, replace=False, p=w / w.sum())
            mask[idx] = True
        out.append(rec.copy(mask=mask, values=rec.values.copy()))
    return Dataset(out, dataset.schema)


def split(dataset: Dataset, test_fraction: float = 0.2):
    """Head/tail split; generated records are already i.i.d."""
    n_test = int(round(len(dataset) * test_fraction))
    cut = len(dataset) - n_test
    return dataset[:cut], dataset[cut:]
