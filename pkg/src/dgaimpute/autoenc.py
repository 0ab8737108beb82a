"""Autoencoder trained on complete records; its reconstruction error is the
signal the imputer minimizes."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import List

import numpy as np

from . import mlp
from .data import Dataset, GasRecord, NormStats, fit_normalizer
from .errors import AllMissing, DimensionMismatch, IncompleteTrainingData, NoValidPairs, ModelMismatch

MIN_TRAINING_RECORDS = 50

DEFAULT_TRAIN = mlp.TrainConfig(epochs=2000, method="scg", target_error=1e-4)


@dataclass
class AutoencoderModel:
    net: mlp.Network
    stats: NormStats
    trace: List[float] = field(default_factory=list)

    def __post_init__(self):
        if self.net.n_inputs != self.net.n_outputs:
            raise DimensionMismatch("autoencoder input and output widths differ")
        if self.net.n_inputs != len(self.stats.names):
            raise DimensionMismatch("network width does not match normalization stats")

    @property
    def width(self) -> int:
        return self.net.n_inputs

    def reconstruct(self, x_norm):
        return mlp.forward(self.net, x_norm)

    def assemble(self, record: GasRecord, candidates) -> np.ndarray:
        """Normalized full inputs with masked slots taken from ``candidates``.

        ``candidates`` is (m,) or (P, m) in normalized units; values stored
        under the mask are never read.
        """
        if record.values.size != self.width:
            raise ModelMismatch(f"record has {record.values.size} variables, model expects {self.width}")
        C = np.asarray(candidates, dtype=np.float64)
        single = C.ndim == 1
        C = np.atleast_2d(C)
        m = record.n_missing
        if C.shape[1] != m:
            raise DimensionMismatch(f"{C.shape[1]} candidate values for {m} missing slots")
        known = self.stats.scale(np.where(record.mask, self.stats.min, record.values))
        X = np.repeat(known[None, :], C.shape[0], axis=0)
        X[:, record.mask] = C
        return X[0] if single else X

    def equals(self, other: "AutoencoderModel") -> bool:
        return dumps_model(self) == dumps_model(other)


def train_autoencoder(dataset: Dataset, hidden: int = 7,
                      config: mlp.TrainConfig = DEFAULT_TRAIN, c: float = 1.0) -> AutoencoderModel:
    """Fit a width-hidden-width tanh/sigmoid autoencoder to complete records."""
    if any(not r.complete for r in dataset):
        raise IncompleteTrainingData("autoencoder training requires complete records")
    if len(dataset) < MIN_TRAINING_RECORDS:
        raise IncompleteTrainingData(
            f"need at least {MIN_TRAINING_RECORDS} records, got {len(dataset)}")
    stats = fit_normalizer(dataset)
    width = len(dataset.schema)
    if not 1 <= hidden < width:
        raise ValueError(f"hidden layer ({hidden}) must be narrower than the input ({width})")
    net = mlp.Network.init(mlp.mlp_specs((width, hidden, width), c=c), config.seed)
    X = stats.scale(dataset.values)
    result = mlp.train(net, X, X, config)
    return AutoencoderModel(result.net, stats, list(result.trace))


def reconstruction_error(model: AutoencoderModel, dataset: Dataset) -> float:
    """Average half-SSE reconstruction error of complete records, normalized units."""
    X = model.stats.scale(dataset.values)
    return mlp.average_error(model.net, X, X)


def known_error_batch(model: AutoencoderModel, record: GasRecord, candidates) -> np.ndarray:
    known = ~record.mask
    if not known.any():
        raise AllMissing(f"record {record.id!r}: every variable is missing")
    X = model.assemble(record, np.atleast_2d(np.asarray(candidates, dtype=np.float64)))
    E =(X - model.reconstruct(X))[:, known]
    return np.mean(E * E, axis=1)


def known_error(model: AutoencoderModel, record: GasRecord, candidate_missing=()) -> float:
    """Mean squared input-output mismatch over the known variables only."""
    cand = np.asarray(candidate_missing, dtype=np.float64).reshape(1, -1)
    return float(known_error_batch(model, record, cand)[0])


def contractivity_probe(model: AutoencoderModel, X, Y) -> dict:
    """Ratios ||f(x) - f(y)|| / ||x - y|| over normalized record pairs."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    if X.shape != Y.shape:
        raise DimensionMismatch("pair arrays differ in shape")
    din = np.linalg.norm(X - Y, axis=1)
    keep = din >= 1e-12
    if not keep.any():
        raise NoValidPairs("no pair of distinct points to probe")
    dout = np.linalg.norm(model.reconstruct(X[keep]) - model.reconstruct(Y[keep]), axis=1)
    ratios = dout / din[keep]
    return {"max": float(ratios.max()), "mean": float(ratios.mean()), "pairs": int(keep.sum())}


# ---------------------------------------------------------- serialization

def _stats_block(stats: NormStats) -> str:
    f = lambda v: format(float(v), ".17g")
    rows = [f"{n} {f(a)} {f(b)} {f(c)} {f(d)}"
            for n, a, b, c, d in zip(stats.names, stats.min, stats.max, stats.mean, stats.std)]
    return "stats\n" + "\n".join(rows) + "\n"


def _parse_stats(lines) -> NormStats:
    if not lines or lines[0].strip() != "stats":
        raise ValueError("missing 'stats' section")
    names, cols = [], []
    for ln in lines[1:]:
        parts = ln.split()
        names.append(parts[0])
        cols.append([float(v) for v in parts[1:5]])
    a = np.array(cols)
    return NormStats(a[:, 0], a[:, 1], a[:, 2], a[:, 3], tuple(names))


def dumps_model(model) -> str:
    return mlp.dumps_network(model.net) + _stats_block(model.stats)


def loads_parts(text: str):
    lines = [ln for ln in text.splitlines() if ln.strip()]
    net, used = mlp._parse_network(lines)
    return net, _parse_stats(lines[used:])


def loads_model(text: str) -> AutoencoderModel:
    return AutoencoderModel(*loads_parts(text))


def save_model(model, path) -> None:
    Path(path).write_text(dumps_model(model), encoding="utf-8")


def load_model(path) -> AutoencoderModel:
    return loads_model(Path(path).read_text(encoding="utf-8"))
