"""Bounded real-vector minimizers: a real-coded genetic algorithm and
global-best particle swarm optimization.

Objectives are *batch* callables: they receive an ``(n, d)`` array of points
and return ``n`` objective values. Wrap a scalar function with ``batched``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, List, Optional

import numpy as np

from .errors import BudgetZero, DimensionMismatch, EmptyPopulation, InvalidConfig

BatchObjective = Callable[[np.ndarray], np.ndarray]


def batched(f: Callable[[np.ndarray], float]) -> BatchObjective:
    """Turn ``f(x) -> float`` into a batch objective."""
    return lambda P: np.array([f(p) for p in P], dtype=np.float64)


@dataclass(frozen=True)
class Bounds:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=np.float64))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=np.float64))
        if lo.shape != hi.shape or lo.ndim != 1 or lo.size == 0:
            raise DimensionMismatch("bounds need matching non-empty 1-D lower/upper")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise InvalidConfig("bounds must be finite")
        if np.any(lo >= hi):
            raise InvalidConfig("every lower bound must be below its upper bound")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def box(cls, lo: float, hi: float, dim: int) -> "Bounds":
        return cls(np.full(dim, lo), np.full(dim, hi))

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def span(self) -> np.ndarray:
        return self.upper - self.lower

    def contains(self, X) -> bool:
        X = np.asarray(X)
        return bool(np.all(X >= self.lower) and np.all(X <= self.upper))

    def clip(self, X):
        return np.clip(X, self.lower, self.upper)

    def sample(self, rng, n: int) -> np.ndarray:
        return rng.uniform(self.lower, self.upper, (n, self.dim))


@dataclass(frozen=True)
class GAConfig:
    population: int = 20
    generations: int = 25
    crossover_prob: float = 0.8
    # per-gene; None means max(0.1, 1/d): at least one expected mutation per chromosome
    mutation_prob: Optional[float] = None
    mutation_shape: float = 3.0
    seed: int = 0

    def __post_init__(self):
        if self.population < 2:
            raise InvalidConfig("GA population must be >= 2")
        pm = 0.0 if self.mutation_prob is None else self.mutation_prob
        if not 0 <= self.crossover_prob <= 1 or not 0 <= pm <= 1:
            raise InvalidConfig("GA probabilities must lie in [0, 1]")
        if self.mutation_shape <= 0:
            raise InvalidConfig("non-uniform mutation shape must be positive")

    @property
    def budget(self) -> int:
        return self.population * self.generations

    def gene_mutation_prob(self, dim: int) -> float:
        if self.mutation_prob is not None:
            return self.mutation_prob
        return max(0.1, 1.0 / dim)


@dataclass(frozen=True)
class PSOConfig:
    swarm: int = 20
    iterations: int = 50
    c1: float = 2.0
    c2: float = 2.0
    inertia: float = 1.0
    vmax_fraction: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.swarm < 1:
            raise InvalidConfig("swarm size must be >= 1")
        if not (self.c1 > 0 and self.c2 > 0):
            raise InvalidConfig("learning factors must be positive")
        if not 0 < self.vmax_fraction <= 1:
            raise InvalidConfig("vmax fraction must lie in (0, 1]")

    @property
    def budget(self) -> int:
        return self.swarm * self.iterations


@dataclass
class BestResult:
    point: np.ndarray
    value: float
    evaluations: int
    trace: List[float] = field(default_factory=list)


class _Counter:
    """Counts evaluations and checks every candidate stays inside the box."""

    def __init__(self, objective, bounds):
        self.objective = objective
        self.bounds = bounds
        self.count = 0

    def __call__(self, X):
        assert self.bounds.contains(X), "candidate left the search box"
        vals = np.asarray(self.objective(X), dtype=np.float64).reshape(-1)
        if vals.size != X.shape[0]:
            raise DimensionMismatch("objective returned the wrong number of values")
        if not np.all(np.isfinite(vals)):
            raise ValueError("objective returned non-finite values")
        self.count += X.shape[0]
        return vals


def _seed_population(X, initial, bounds):
    if initial is not None:
        init = np.atleast_2d(np.asarray(initial, dtype=np.float64))
        if init.shape[1] != bounds.dim:
            raise DimensionMismatch("initial points do not match the bounds dimension")
        n = min(len(init), len(X))
        X[:n] = bounds.clip(init[:n])
    return X


# ------------------------------------------------------------------- GA

def roulette_probabilities(objective_values) -> np.ndarray:
    """Selection probabilities for a minimization problem.

    Fitness is the objective flipped about its maximum plus a floor of 1% of
    the spread, so the worst individual keeps a small nonzero chance.
    """
    f = np.asarray(objective_values, dtype=np.float64)
    if f.size == 0:
        raise EmptyPopulation("cannot select from an empty population")
    fmax, fmin = f.max(), f.min()
    fit = (fmax - f) + 0.01 * (fmax - fmin + 1e-12)
    return fit / fit.sum()


def roulette_select(objective_values, rng, u: Optional[float] = None) -> int:
    """Spin the wheel once; ``u`` in [0, 1) replaces the random draw."""
    p = roulette_probabilities(objective_values)
    if u is None:
        u = rng.random()
    idx = int(np.searchsorted(np.cumsum(p), u, side="right"))
    return min(idx, p.size - 1)


def arithmetic_crossover(p1, p2, rng, alpha: Optional[float] = None):
    p1 = np.asarray(p1, dtype=np.float64)
    p2 = np.asarray(p2, dtype=np.float64)
    if p1.shape != p2.shape:
        raise DimensionMismatch("parents differ in length")
    if alpha is None:
        alpha = rng.random()
    return alpha * p1 + (1 - alpha) * p2, (1 - alpha) * p1 + alpha * p2


def nonuniform_mutate(x, t: int, T: int, b: float, bounds: Bounds, rng,
                      prob: float = 0.1, r=None, direction=None):
    """Non-uniform mutation: each gene moves, with probability ``prob``, toward
    a random bound by ``y * (1 - r**((1 - t/T)**b))`` where ``y`` is the distance
    to that bound. Steps shrink to zero as ``t`` reaches ``T``.

    ``r`` and ``direction`` (+1 up, -1 down) override the random draws.
    """
    x = np.array(x, dtype=np.float64)
    d = x.size
    fire = rng.random(d) < prob
    up = rng.random(d) < 0.5 if direction is None else np.broadcast_to(np.asarray(direction) > 0, (d,))
    rr = rng.random(d) if r is None else np.broadcast_to(np.asarray(r, dtype=np.float64), (d,))
    shrink = 1.0 - rr ** ((1.0 - t / T) ** b)
    step_up = (bounds.upper - x) * shrink
    step_down = (x - bounds.lower) * shrink
    x = np.where(fire, np.where(up, x + step_up, x - step_down), x)
    return bounds.clip(x)


def ga_minimize(objective: BatchObjective, bounds: Bounds, config: GAConfig = GAConfig(),
                initial=None) -> BestResult:
    """Roulette selection, arithmetic crossover, non-uniform mutation and one elite.

    The first generation is uniform in the box (rows of ``initial`` replace
    the leading individuals). Exactly ``population * generations`` points
    are evaluated.
    """
    if config.generations < 1:
        raise BudgetZero("GA needs at least one generation")
    rng = np.random.default_rng(config.seed)
    evaluate = _Counter(objective, bounds)
    P, G = config.population, config.generations
    pm = config.gene_mutation_prob(bounds.dim)

    pop = _seed_population(bounds.sample(rng, P), initial, bounds)
    vals = evaluate(pop)
    best = int(np.argmin(vals))
    best_x, best_f = pop[best].copy(), float(vals[best])
    trace = [best_f]

    for gen in range(1, G):
        children = [pop[int(np.argmin(vals))].copy()]
        while len(children) < P:
            a = pop[roulette_select(vals, rng)]
            b = pop[roulette_select(vals, rng)]
            if rng.random() < config.crossover_prob:
                a, b = arithmetic_crossover(a, b, rng)
            children.append(nonuniform_mutate(a, gen, G, config.mutation_shape, bounds, rng, pm))
            children.append(nonuniform_mutate(b, gen, G, config.mutation_shape, bounds, rng, pm))
        pop = np.array(children[:P])
        vals = evaluate(pop)
        i = int(np.argmin(vals))
        if vals[i] < best_f:
            best_x, best_f = pop[i].copy(), float(vals[i])
        trace.append(best_f)

    return BestResult(best_x, best_f, evaluate.count, trace)


# ------------------------------------------------------------------ PSO

def pso_step(positions, velocities, pbest, gbest, config: PSOConfig, bounds: Bounds, rng,
             r1=None, r2=None):
    """One velocity/position update; returns new (positions, velocities).

    ``r1``/``r2`` override the uniform draws of the cognitive and social terms.
    """
    x = np.atleast_2d(np.asarray(positions, dtype=np.float64))
    v = np.atleast_2d(np.asarray(velocities, dtype=np.float64))
    pb = np.atleast_2d(np.asarray(pbest, dtype=np.float64))
    gb = np.asarray(gbest, dtype=np.float64).reshape(-1)
    if not (x.shape == v.shape == pb.shape and gb.size == x.shape[1] == bounds.dim):
        raise DimensionMismatch("particle arrays have inconsistent shapes")
    if r1 is None:
        r1 = rng.random(x.shape)
    if r2 is None:
        r2 = rng.random(x.shape)

    v = config.inertia * v + config.c1 * r1 * (pb - x) + config.c2 * r2 * (gb - x)
    vmax = config.vmax_fraction * bounds.span
    v = np.clip(v, -vmax, vmax)
    x = x + v
    hit = (x < bounds.lower) | (x > bounds.upper)
    x = bounds.clip(x)
    v = np.where(hit, 0.0, v)
    return x, v


def pso_minimize(objective: BatchObjective, bounds: Bounds, config: PSOConfig = PSOConfig(),
                 initial=None) -> BestResult:
    """Global-best PSO from uniform positions and zero velocity.

    Exactly ``swarm * iterations`` points are evaluated; the first iteration
    scores the initial swarm.
    """
    if config.iterations < 1:
        raise BudgetZero("PSO needs at least one iteration")
    rng = np.random.default_rng(config.seed)
    evaluate = _Counter(objective, bounds)

    x = _seed_population(bounds.sample(rng, config.swarm), initial, bounds)
    v = np.zeros_like(x)
    f = evaluate(x)
    pbest, pbest_f = x.copy(), f.copy()
    g = int(np.argmin(pbest_f))
    trace = [float(pbest_f[g])]

    for _ in range(1, config.iterations):
        x, v = pso_step(x, v, pbest, pbest[g], config, bounds, rng)
        f = evaluate(x)
        better = f < pbest_f
        pbest[better] = x[better]
        pbest_f[better] = f[better]
        g = int(np.argmin(pbest_f))
        trace.append(float(pbest_f[g]))

    return BestResult(pbest[g].copy(), float(pbest_f[g]), evaluate.count, trace)


def write_trace(result: BestResult, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iteration", "best_value"])
        for i, v in enumerate(result.trace, start=1):
            w.writerow([i, repr(v)])
