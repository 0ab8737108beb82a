"""Missing-value recovery against the autoencoder.

Candidate values for the masked variables are proposed by a GA or PSO that
minimizes the reconstruction error of the assembled record. When the error
on the known variables stays above the tolerance, the search is repeated
with a fresh seed, up to a fixed number of attempts; the best attempt wins.
"""

from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import List, Tuple

import numpy as np

from .autoenc import AutoencoderModel, known_error_batch
from .data import Dataset, GasRecord, NormStats
from .errors import InvalidConfig, ModelMismatch, TooManyMissing
from .evo import Bounds, GAConfig, PSOConfig, ga_minimize, pso_minimize

OPTIMIZERS = ("ga", "pso", "mean", "zero")
MODES = ("full", "known")

# upper search bound as a multiple of the largest training value
HEADROOM = 1.1


def derive_seed(*keys: int) -> int:
    """Stable 32-bit seed from a tuple of non-negative integers."""
    return int(np.random.SeedSequence([int(k) for k in keys]).generate_state(1)[0])


@dataclass(frozen=True)
class ImputeConfig:
    optimizer: str = "ga"
    ga: GAConfig = GAConfig()
    pso: PSOConfig = PSOConfig()
    mode: str = "full"
    tolerance: float = 1e-3
    max_restarts: int = 3
    seed: int = 0

    def __post_init__(self):
        if self.optimizer not in OPTIMIZERS:
            raise InvalidConfig(f"optimizer must be one of {OPTIMIZERS}, got {self.optimizer!r}")
        if self.mode not in MODES:
            raise InvalidConfig(f"objective mode must be one of {MODES}, got {self.mode!r}")
        if not self.tolerance > 0:
            raise InvalidConfig("tolerance must be positive")
        if self.max_restarts < 1:
            raise InvalidConfig("max_restarts must be >= 1")

    @property
    def budget(self) -> int:
        if self.optimizer == "ga":
            return self.ga.budget
        if self.optimizer == "pso":
            return self.pso.budget
        return 0


@dataclass
class ImputeResult:
    record: GasRecord
    imputed: np.ndarray          # which variables were filled in
    objective: float
    known_error: float
    evaluations: int
    converged: bool
    restarts: int

    @property
    def imputed_values(self) -> np.ndarray:
        return self.record.values[self.imputed]


def em_objective_batch(model: AutoencoderModel, record: GasRecord, candidates,
                       mode: str = "full") -> np.ndarray:
    if mode == "known":
        return known_error_batch(model, record, candidates)
    X = model.assemble(record, np.atleast_2d(np.asarray(candidates, dtype=np.float64)))
    E = X - model.reconstruct(X)
    return np.einsum("ij,ij->i", E, E)


def em_objective(model: AutoencoderModel, record: GasRecord, candidate=(), mode: str = "full") -> float:
    """Reconstruction error of the record completed with ``candidate``.

    ``full`` is the squared norm of input minus output over every variable;
    ``known`` is the mean squared error over the observed variables only.
    Candidates are in normalized units.
    """
    cand = np.asarray(candidate, dtype=np.float64).reshape(1, -1)
    return float(em_objective_batch(model, record, cand, mode)[0])


def search_bounds(stats: NormStats, mask) -> Bounds:
    """Normalized box for the masked variables: raw [0, 1.1 * observed max]."""
    lo = stats.scale(np.zeros_like(stats.max))
    hi = stats.scale(HEADROOM * stats.max)
    return Bounds(lo[mask], hi[mask])


def impute_baseline(record: GasRecord, stats: NormStats, kind: str = "mean") -> GasRecord:
    """Fill masked slots with the training mean or with zero."""
    if kind not in ("mean", "zero"):
        raise InvalidConfig(f"baseline kind must be 'mean' or 'zero', got {kind!r}")
    fill = stats.mean if kind == "mean" else np.zeros_like(stats.mean)
    vals = np.where(record.mask, fill, record.values)
    return GasRecord(vals, None, record.label, record.id)


def _finish(model, record, raw_fill, evaluations, restarts, config) -> ImputeResult:
    raw_fill = np.maximum(raw_fill, 0.0)
    vals = np.where(record.mask, 0.0, record.values)
    vals[record.mask] = raw_fill
    done = GasRecord(vals, None, record.label, record.id)
    cand = model.stats.scale(vals)[record.mask]
    obj = em_objective(model, record, cand, config.mode)
    kerr = em_objective(model, record, cand, "known") if (~record.mask).any() else float("nan")
    return ImputeResult(done, record.mask.copy(), obj, kerr, evaluations,
                        bool(kerr <= config.tolerance), restarts)


def impute(model: AutoencoderModel, record: GasRecord, config: ImputeConfig = ImputeConfig()) -> ImputeResult:
    if record.values.size != model.width:
        raise ModelMismatch(f"record has {record.values.size} variables, model expects {model.width}")
    stats = model.stats
    mask = record.mask
    if not mask.any():
        res = _finish(model, record, np.empty(0), 0, 0, config)
        res.converged = True
        return res
    if config.optimizer in ("mean", "zero"):
        filled = impute_baseline(record, stats, config.optimizer)
        return _finish(model, record, filled.values[mask], 0, 0, config)

    bounds = search_bounds(stats, mask)
    start = stats.scale(stats.mean)[mask]

    def objective(P):
        return em_objective_batch(model, record, P, config.mode)

    best, evaluations, attempts = None, 0, 0
    for attempt in range(config.max_restarts):
        seed = derive_seed(config.seed, attempt)
        if config.optimizer == "ga":
            res = ga_minimize(objective, bounds, replace(config.ga, seed=seed), initial=start)
        else:
            res = pso_minimize(objective, bounds, replace(config.pso, seed=seed), initial=start)
        evaluations += res.evaluations
        attempts += 1
        if best is None or res.value < best.value:
            best = res
        # an all-missing record has nothing to check against; one attempt only
        if mask.all() or known_error_batch(model, record, best.point[None, :])[0] <= config.tolerance:
            break

    full = np.full(mask.size, 0.5)
    full[mask] = best.point
    return _finish(model, record, stats.unscale(full)[mask], evaluations, attempts - 1, config)


def grid_oracle(model: AutoencoderModel, record: GasRecord, step: float = 1e-3,
                mode: str = "full") -> Tuple[np.ndarray, float]:
    """Exhaustive search of the normalized grid [0, 1]^m, m in {1, 2}.

    Ties go to the lexicographically smallest grid point.
    """
    m = record.n_missing
    if m > 2:
        raise TooManyMissing(f"grid search supports at most 2 missing values, got {m}")
    if m == 0:
        raise ValueError("record has no missing values")
    if not 0 < step <= 0.5:
        raise ValueError("step must lie in (0, 0.5]")
    n = 1.0 / step
    if abs(n - round(n)) < 1e-9:
        # i / n keeps nested grids bit-identical
        axis = np.arange(round(n) + 1) / round(n)
    else:
        axis = np.arange(int(np.floor(n + 1e-9)) + 1) * step
    grids = np.meshgrid(*([axis] * m), indexing="ij")
    P = np.stack([g.ravel() for g in grids], axis=1)
    vals = np.concatenate([em_objective_batch(model, record, chunk, mode)
                           for chunk in np.array_split(P, max(1, len(P) // 100_000))])
    i = int(np.argmin(vals))
    return P[i], float(vals[i])


# ------------------------------------------------------------- batch mode

def _impute_one(args):
    model, record, config = args
    return impute(model, record, config)


def impute_dataset(model: AutoencoderModel, dataset: Dataset, config: ImputeConfig = ImputeConfig(),
                   jobs: int = 1) -> Tuple[Dataset, List[ImputeResult]]:
    """Impute every record with its own seed derived from ``config.seed`` and
    the record index, so results do not depend on ``jobs``."""
    tasks = [(model, rec, replace(config, seed=derive_seed(config.seed, i)))
             for i, rec in enumerate(dataset)]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_impute_one, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        results = [_impute_one(t) for t in tasks]
    return Dataset([r.record for r in results], dataset.schema), results


REPORT_HEADER = ["id", "k_missing", "objective", "known_error", "evaluations", "converged"]


def write_report(results: List[ImputeResult], path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_HEADER)
        for r in results:
            w.writerow([r.record.id, int(r.imputed.sum()), repr(r.objective), repr(r.known_error),
                        r.evaluations, int(r.converged)])
