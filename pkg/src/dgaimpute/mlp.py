"""Feed-forward multilayer perceptron.

Each layer computes ``a = W @ x + b`` followed by an activation: ``tanh(c*a)``,
the logistic sigmoid, or identity. The training loss is the batch average of
the half sum-of-squares output error. Parameters are handled as one flat
vector (layer by layer, row-major ``W`` then ``b``) so trainers stay generic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Sequence

import numpy as np

from .errors import DimensionMismatch, EmptyBatch, InvalidConfig, NonFiniteLoss

ACTIVATIONS = ("tanh", "sigmoid", "identity")


@dataclass(frozen=True)
class LayerSpec:
    fan_in: int
    fan_out: int
    activation: str = "tanh"
    c: float = 1.0

    def __post_init__(self):
        if self.fan_in < 1 or self.fan_out < 1:
            raise InvalidConfig("layer dimensions must be >= 1")
        if self.activation not in ACTIVATIONS:
            raise InvalidConfig(f"unknown activation {self.activation!r}")
        if not self.c > 0:
            raise InvalidConfig("tanh gain c must be positive")

    @property
    def n_params(self) -> int:
        return self.fan_out * (self.fan_in + 1)


def _act(spec: LayerSpec, a):
    if spec.activation == "tanh":
        return np.tanh(spec.c * a)
    if spec.activation == "sigmoid":
        # tanh form avoids overflow warnings for large |a|
        return 0.5 * (1.0 + np.tanh(0.5 * a))
    return a


def _act_deriv(spec: LayerSpec, z):
    """Derivative expressed through the activation output ``z``."""
    if spec.activation == "tanh":
        return spec.c * (1.0 - z * z)
    if spec.activation == "sigmoid":
        return z * (1.0 - z)
    return np.ones_like(z)


class Network:
    """Immutable layered perceptron; ``weights[i]`` has shape (fan_out, fan_in)."""

    def __init__(self, specs: Sequence[LayerSpec], weights, biases):
        specs = tuple(specs)
        if not specs:
            raise InvalidConfig("network needs at least one layer")
        for prev, nxt in zip(specs, specs[1:]):
            if prev.fan_out != nxt.fan_in:
                raise DimensionMismatch(
                    f"layer output {prev.fan_out} does not feed next input {nxt.fan_in}")
        if len(weights) != len(specs) or len(biases) != len(specs):
            raise DimensionMismatch("one weight matrix and bias vector per layer required")
        ws, bs = [], []
        for s, w, b in zip(specs, weights, biases):
            w = np.array(w, dtype=np.float64)
            b = np.array(b, dtype=np.float64).reshape(-1)
            if w.shape != (s.fan_out, s.fan_in) or b.shape != (s.fan_out,):
                raise DimensionMismatch(f"parameter shapes do not match {s}")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ValueError("network parameters must be finite")
            w.flags.writeable = False
            b.flags.writeable = False
            ws.append(w)
            bs.append(b)
        self.specs = specs
        self.weights = tuple(ws)
        self.biases = tuple(bs)

    @classmethod
    def init(cls, specs: Sequence[LayerSpec], seed: int = 0) -> "Network":
        """Uniform weights and biases in +-1/sqrt(fan_in)."""
        rng = np.random.default_rng(seed)
        ws, bs = [], []
        for s in specs:
            lim = 1.0 / np.sqrt(s.fan_in)
            ws.append(rng.uniform(-lim, lim, (s.fan_out, s.fan_in)))
            bs.append(rng.uniform(-lim, lim, s.fan_out))
        return cls(specs, ws, bs)

    @classmethod
    def zeros(cls, specs: Sequence[LayerSpec]) -> "Network":
        return cls(specs, [np.zeros((s.fan_out, s.fan_in)) for s in specs],
                   [np.zeros(s.fan_out) for s in specs])

    @property
    def n_inputs(self) -> int:
        return self.specs[0].fan_in

    @property
    def n_outputs(self) -> int:
        return self.specs[-1].fan_out

    @property
    def n_params(self) -> int:
        return sum(s.n_params for s in self.specs)

    @property
    def params(self) -> np.ndarray:
        return np.concatenate([np.concatenate([w.ravel(), b]) for w, b in zip(self.weights, self.biases)])

    def with_params(self, theta) -> "Network":
        ws, bs = _unpack(self.specs, np.asarray(theta, dtype=np.float64))
        return Network(self.specs, ws, bs)

    def __eq__(self, other):
        return (isinstance(other, Network) and self.specs == other.specs
                and np.array_equal(self.params, other.params))

    def __repr__(self):
        dims = "-".join([str(self.n_inputs)] + [str(s.fan_out) for s in self.specs])
        return f"Network({dims}, {self.n_params} params)"

    def __call__(self, x):
        return forward(self, x)


def _unpack(specs, theta):
    if theta.size != sum(s.n_params for s in specs):
        raise DimensionMismatch(f"parameter vector has {theta.size} entries")
    ws, bs, pos = [], [], 0
    for s in specs:
        n = s.fan_out * s.fan_in
        ws.append(theta[pos:pos + n].reshape(s.fan_out, s.fan_in))
        pos += n
        bs.append(theta[pos:pos + s.fan_out])
        pos += s.fan_out
    return ws, bs


def mlp_specs(sizes: Sequence[int], hidden: str = "tanh", output: str = "sigmoid", c: float = 1.0):
    """Layer specs for e.g. ``sizes=(10, 7, 10)``."""
    n = len(sizes) - 1
    return [LayerSpec(sizes[i], sizes[i + 1], output if i == n - 1 else hidden,
                      c if (output if i == n - 1 else hidden) == "tanh" else 1.0)
            for i in range(n)]


# ------------------------------------------------------------- evaluation

def _as_batch(net: Network, x) -> np.ndarray:
    X = np.asarray(x, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != net.n_inputs:
        raise DimensionMismatch(f"expected {net.n_inputs} inputs, got shape {np.shape(x)}")
    return X


def _forward_layers(specs, ws, bs, X) -> List[np.ndarray]:
    outs = [X]
    for s, w, b in zip(specs, ws, bs):
        outs.append(_act(s, outs[-1] @ w.T + b))
    return outs


def forward(net: Network, x) -> np.ndarray:
    """Network output for one input vector (returns a vector) or an (N, d) batch."""
    X = _as_batch(net, x)
    Y = _forward_layers(net.specs, net.weights, net.biases, X)[-1]
    return Y[0] if np.ndim(x) == 1 else Y


def hidden_activations(net: Network, x) -> List[np.ndarray]:
    X = _as_batch(net, x)
    outs = _forward_layers(net.specs, net.weights, net.biases, X)[1:-1]
    return [o[0] for o in outs] if np.ndim(x) == 1 else outs


def sse(y, t) -> float:
    """Half the summed squared error of one output vector."""
    y = np.asarray(y, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    if y.shape != t.shape:
        raise DimensionMismatch(f"output shape {y.shape} != target shape {t.shape}")
    e = y - t
    return 0.5 * float(e @ e)


def _batch_pair(net, X, T):
    X = _as_batch(net, X)
    T = np.asarray(T, dtype=np.float64)
    if T.ndim == 1:
        T = T[None, :]
    if T.shape != (X.shape[0], net.n_outputs):
        raise DimensionMismatch(f"targets of shape {T.shape} for {X.shape[0]} patterns")
    if X.shape[0] == 0:
        raise EmptyBatch("empty batch")
    return X, T


def average_error(net: Network, X, T) -> float:
    """Mean over patterns of ``sse(forward(x), t)``."""
    X, T = _batch_pair(net, X, T)
    return _loss(net.specs, net.weights, net.biases, X, T)


def _loss(specs, ws, bs, X, T):
    E = _forward_layers(specs, ws, bs, X)[-1] - T
    return 0.5 * float(np.einsum("ij,ij->", E, E)) / X.shape[0]


def _loss_grad(specs, theta, X, T):
    ws, bs = _unpack(specs, theta)
    outs = _forward_layers(specs, ws, bs, X)
    E = outs[-1] - T
    loss = 0.5 * float(np.einsum("ij,ij->", E, E)) / X.shape[0]
    delta = E / X.shape[0] * _act_deriv(specs[-1], outs[-1])
    grads = []
    for i in range(len(specs) - 1, -1, -1):
        grads.append(delta.sum(axis=0))
        grads.append((delta.T @ outs[i]).ravel())
        if i:
            delta = (delta @ ws[i]) * _act_deriv(specs[i - 1], outs[i])
    return loss, np.concatenate(grads[::-1])


def gradient(net: Network, X, T) -> np.ndarray:
    """Exact gradient of ``average_error`` as a flat vector ordered like ``net.params``."""
    X, T = _batch_pair(net, X, T)
    return _loss_grad(net.specs, net.params, X, T)[1]


def gradient_layers(net: Network, X, T):
    """Gradient split into per-layer ``(dW, db)`` pairs."""
    return list(zip(*_unpack(net.specs, gradient(net, X, T))))


# --------------------------------------------------------------- training

@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 1000
    method: str = "scg"
    learning_rate: float = 0.1
    momentum: float = 0.9
    target_error: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 0:
            raise InvalidConfig("epochs must be >= 0")
        if self.method not in ("gd", "scg"):
            raise InvalidConfig(f"unknown training method {self.method!r}")
        if not self.learning_rate > 0:
            raise InvalidConfig("learning rate must be positive")
        if not 0 <= self.momentum < 1:
            raise InvalidConfig("momentum must lie in [0, 1)")


@dataclass
class TrainResult:
    net: Network
    trace: List[float] = field(default_factory=list)

    def __iter__(self):
        return iter((self.net, self.trace))


def train(net: Network, X, T, config: TrainConfig = TrainConfig()) -> TrainResult:
    """Batch-train ``net`` and return the new network and per-epoch loss trace."""
    X, T = _batch_pair(net, X, T)
    if config.epochs == 0:
        return TrainResult(net, [])
    fit = _train_gd if config.method == "gd" else _train_scg
    theta, trace = fit(net.specs, net.params, X, T, config)
    return TrainResult(net.with_params(theta), trace)


def _check_finite(loss):
    if not np.isfinite(loss):
        raise NonFiniteLoss("training loss became non-finite; reduce the learning rate")


def _train_gd(specs, theta, X, T, cfg):
    theta = theta.copy()
    step = np.zeros_like(theta)
    trace = []
    for _ in range(cfg.epochs):
        loss, g = _loss_grad(specs, theta, X, T)
        _check_finite(loss)
        step = cfg.momentum * step - cfg.learning_rate * g
        theta = theta + step
        loss = _loss(specs, *_unpack(specs, theta), X, T)
        _check_finite(loss)
        trace.append(loss)
        if loss < cfg.target_error:
            break
    return theta, trace


def _train_scg(specs, theta, X, T, cfg):
    """Scaled conjugate gradient (Moller, 1993); one epoch per iteration."""
    sigma0 = 1e-4
    lam, lam_min, lam_max = 1.0, 1e-15, 1e100
    n = theta.size
    x = theta.copy()

    f_old, g_new = _loss_grad(specs, x, X, T)
    _check_finite(f_old)
    g_old = g_new
    d = -g_new
    success, n_success = True, 0
    trace = []
    for _ in range(cfg.epochs):
        if success:
            mu = d @ g_new
            if mu >= 0:
                d = -g_new
                mu = d @ g_new
            kappa = d @ d
            if kappa < np.finfo(float).eps:
                break
            sigma = sigma0 / np.sqrt(kappa)
            _, g_plus = _loss_grad(specs, x + sigma * d, X, T)
            theta_ = d @ (g_plus - g_new) / sigma

        delta = theta_ + lam * kappa
        if delta <= 0:
            delta = lam * kappa
            lam = lam - theta_ / kappa
        alpha = -mu / delta
        x_new = x + alpha * d
        f_new = _loss(specs, *_unpack(specs, x_new), X, T)
        comparison = 2.0 * (f_new - f_old) / (alpha * mu)

        if comparison >= 0 and np.isfinite(f_new):
            success = True
            n_success += 1
            x = x_new
            f_now = f_new
        else:
            success = False
            f_now = f_old
        _check_finite(f_now)
        trace.append(f_now)

        if success:
            if f_now < cfg.target_error:
                break
            f_old = f_new
            g_old = g_new
            _, g_new = _loss_grad(specs, x, X, T)
            if g_new @ g_new == 0:
                break

        if comparison < 0.25:
            lam = min(4.0 * lam, lam_max)
        if comparison > 0.75:
            lam = max(0.5 * lam, lam_min)

        if n_success == n:
            d = -g_new
            n_success = 0
        elif success:
            beta = (g_old - g_new) @ g_new / mu
            d = beta * d - g_new
    return x, trace


# ---------------------------------------------------------- serialization

def _fmt(v) -> str:
    return format(float(v), ".17g")


def dumps_network(net: Network) -> str:
    lines = [f"layers={len(net.specs)}"]
    for s in net.specs:
        tail = f" {_fmt(s.c)}" if s.activation == "tanh" else ""
        lines.append(f"spec {s.fan_in} {s.fan_out} {s.activation}{tail}")
    for w, b in zip(net.weights, net.biases):
        lines.extend(" ".join(_fmt(v) for v in row) for row in w)
        lines.append(" ".join(_fmt(v) for v in b))
    return "\n".join(lines) + "\n"


def loads_network(text: str) -> Network:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    return _parse_network(lines)[0]


def _parse_network(lines):
    """Parse a network from the head of ``lines``; returns (net, lines consumed)."""
    head = lines[0].strip()
    if not head.startswith("layers="):
        raise ValueError("network text must start with 'layers=<n>'")
    n_layers = int(head.split("=", 1)[1])
    specs = []
    for ln in lines[1:1 + n_layers]:
        parts = ln.split()
        if parts[0] != "spec":
            raise ValueError(f"expected a spec line, got {ln!r}")
        c = float(parts[4]) if len(parts) > 4 else 1.0
        specs.append(LayerSpec(int(parts[1]), int(parts[2]), parts[3], c))
    pos = 1 + n_layers
    ws, bs = [], []
    for s in specs:
        rows = [[float(v) for v in lines[pos + r].split()] for r in range(s.fan_out)]
        pos += s.fan_out
        ws.append(np.array(rows).reshape(s.fan_out, s.fan_in))
        bs.append(np.array([float(v) for v in lines[pos].split()]))
        pos += 1
    return Network(specs, ws, bs), pos


def save_network(net: Network, path) -> None:
    Path(path).write_text(dumps_network(net), encoding="utf-8")


def load_network(path) -> Network:
    return loads_network(Path(path).read_text(encoding="utf-8"))
