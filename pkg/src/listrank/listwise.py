"""Zero-shot listwise learning to rank.

The model maximises the power-law order-statistic likelihood

    prod_{i,j} x_ij ** x_ij,    x_ij = U_i . V_j

by stochastic gradient ascent over uniformly sampled (user, item) pairs. The
update for one pair depends only on ``U_i`` and ``V_j``: no rating value is
ever consulted, which is what makes the trainer zero-shot. Its signature
takes the matrix shape and rating scale, nothing else from the data.

Because the likelihood is unbounded, factors are kept non-negative and
capped at ``sqrt(r_max / d)`` after every update, so each dot product stays
on the rating scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from . import kernels
from .errors import NumericError, UsageError
from .factors import FactorModel, InitSpec, init_factors

DEFAULT_EPS = 1e-3
MAX_DEFAULT_STEPS = 2_000_000
_CHUNK = 1 << 20


@dataclass(frozen=True)
class TrainConfig:
    """Hyper-parameters shared by every trainer.

    ``steps`` counts sampled pair updates for the listwise and BPR trainers
    and epochs for MF; ``None`` picks the trainer's default budget.
    """

    learning_rate: float = 1e-3
    steps: int | None = None
    d: int = 10
    seed: int = 42
    eps: float = DEFAULT_EPS

    def __post_init__(self):
        if not (self.learning_rate >= 0 and math.isfinite(self.learning_rate)):
            raise UsageError(f"learning_rate must be finite and >= 0, got {self.learning_rate}")
        if self.steps is not None and self.steps < 0:
            raise UsageError(f"steps must be >= 0, got {self.steps}")
        if self.d < 1:
            raise UsageError(f"dimension must be >= 1, got {self.d}")
        if not 0 <= int(self.seed) < 2**64:
            raise UsageError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if not 0 < self.eps < 1 / math.e:
            raise UsageError(f"eps must lie in (0, 1/e), got {self.eps}")


class PairGradient(NamedTuple):
    g_u: np.ndarray
    g_v: np.ndarray
    x: float


def power_self(x: float) -> float:
    """``x ** x`` evaluated as ``exp(x ln x)``."""
    return math.exp(x * math.log(x))


def gradient_scalar(x: float) -> float:
    """d/dx of x**x in closed form, ``x**x (1 + ln x)``."""
    lx = math.log(x)
    return math.exp(x * lx) * (1.0 + lx)


def two_term_gradient_scalar(x: float) -> float:
    """d/dx of x**x as the sum ``x * x**(x-1) + x**x * ln x``."""
    lx = math.log(x)
    return x * math.exp((x - 1.0) * lx) + math.exp(x * lx) * lx


def pair_gradient(u, v, eps: float = DEFAULT_EPS) -> PairGradient:
    """Gradient of ``x**x`` for one pair with respect to ``u`` and ``v``.

    ``x = max(u . v, eps)``; the shared scalar uses the two-term form and
    equals ``x**x (1 + ln x)``.
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape or u.ndim != 1:
        raise UsageError(f"factor rows must be equal-length vectors, got {u.shape} and {v.shape}")
    if not (np.isfinite(u).all() and np.isfinite(v).all()):
        raise NumericError("non-finite factor entry in pair_gradient")
    x = max(float(u @ v), eps)
    s = two_term_gradient_scalar(x)
    return PairGradient(s * v, s * u, x)


def log_objective(model: FactorModel, eps: float = DEFAULT_EPS) -> float:
    """Log of the listwise likelihood up to its constant: sum of x ln x."""
    if not model.constrained:
        raise UsageError("log_objective is defined for constrained models only")
    x = np.maximum(model.U @ model.V.T, eps)
    return float(np.sum(x * np.log(x)))


def default_steps(n_users: int, n_items: int) -> int:
    return min(10 * n_users * n_items, MAX_DEFAULT_STEPS)


def _run(model, users, items, lr, eps, offset=0):
    failed = kernels.listwise_steps(model.U, model.V, users, items, float(lr), float(eps), model.entry_cap)
    if failed >= 0:
        step = offset + failed
        raise NumericError(f"non-finite factor at listwise step {step}", step=step)


def train_zeroshot(n_users: int, n_items: int, cfg: TrainConfig, scale) -> FactorModel:
    """Train the listwise model from its shape alone.

    Initialises ``uniform_capped`` factors from ``cfg.seed``, then applies
    ``cfg.steps`` ascent updates on pairs drawn uniformly from the N x M grid,
    projecting the two touched rows back onto ``[0, entry_cap]``.
    """
    model = init_factors(n_users, n_items, cfg.d, scale, InitSpec(cfg.seed, "uniform_capped"))
    steps = default_steps(n_users, n_items) if cfg.steps is None else cfg.steps
    rng = np.random.default_rng([int(cfg.seed), 1])
    done = 0
    while done < steps:
        n = min(_CHUNK, steps - done)
        users = rng.integers(0, n_users, size=n, dtype=np.int64)
        items = rng.integers(0, n_items, size=n, dtype=np.int64)
        _run(model, users, items, cfg.learning_rate, cfg.eps, offset=done)
        done += n
    return model


def ascend_sweeps(
    model: FactorModel,
    lr: float,
    sweeps: int,
    eps: float = DEFAULT_EPS,
    callback: Callable[[int, FactorModel], None] | None = None,
) -> list[float]:
    """Deterministic full sweeps over every (i, j) pair in row-major order.

    Updates ``model`` in place and returns the log objective after each
    sweep.
    """
    if not model.constrained:
        raise UsageError("listwise ascent requires a constrained model")
    users = np.repeat(np.arange(model.n_users, dtype=np.int64), model.n_items)
    items = np.tile(np.arange(model.n_items, dtype=np.int64), model.n_users)
    trace = []
    for s in range(sweeps):
        _run(model, users, items, lr, eps, offset=s * len(users))
        trace.append(log_objective(model, eps))
        if callback is not None:
            callback(s, model)
    return trace
