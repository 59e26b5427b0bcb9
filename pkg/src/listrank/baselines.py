"""Comparison algorithms: classic MF, BPR-MF and simple heuristics.

The heuristics (global/user/item mean, random uniform) are stand-ins; which
heuristics the original comparison used is not known.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from . import kernels
from .dataset import RatingsDataset
from .errors import DataError, NumericError, UsageError
from .factors import FactorModel, InitSpec, init_factors
from .listwise import MAX_DEFAULT_STEPS, TrainConfig

HEURISTIC_MODES = ("global_mean", "user_mean", "item_mean", "random_uniform")
DEFAULT_MF_EPOCHS = 50
REJECTION_FACTOR = 100


class Quadruple(NamedTuple):
    """Indices (i, j, k, t) with R[i, j] > R[k, t]."""

    i: int
    j: int
    k: int
    t: int


def train_mf(train: RatingsDataset, cfg: TrainConfig) -> FactorModel:
    """Plain squared-error MF trained by SGD over shuffled observed ratings.

    ``cfg.steps`` is the number of epochs (default 50).
    """
    if len(train) == 0:
        raise DataError("cannot train MF on an empty dataset")
    model = init_factors(train.n_users, train.n_items, cfg.d, train.scale, InitSpec(cfg.seed, "gaussian"))
    epochs = DEFAULT_MF_EPOCHS if cfg.steps is None else cfg.steps
    rng = np.random.default_rng([int(cfg.seed), 2])
    n = len(train)
    for epoch in range(epochs):
        order = rng.permutation(n)
        failed = kernels.mf_steps(
            model.U, model.V,
            np.ascontiguousarray(train.users[order]),
            np.ascontiguousarray(train.items[order]),
            np.ascontiguousarray(train.values[order]),
            float(cfg.learning_rate),
        )
        if failed >= 0:
            step = epoch * n + failed
            raise NumericError(f"MF diverged at epoch {epoch}, step {step}", step=step)
    return model


def mf_loss(r: float, u, v) -> float:
    """Squared error ``(r - u . v) ** 2`` for one rating."""
    return float((r - np.dot(u, v)) ** 2)


def mf_gradient(r: float, u, v) -> tuple[np.ndarray, np.ndarray]:
    """Gradients of :func:`mf_loss` with respect to ``u`` and ``v``."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    e = r - float(u @ v)
    return -2.0 * e * v, -2.0 * e * u


def bpr_pair_prob(x_ij: float, x_kt: float) -> float:
    """Logistic probability that score ``x_ij`` ranks above ``x_kt``."""
    z = float(x_ij) - float(x_kt)
    if z >= 0:
        return float(1.0 / (1.0 + np.exp(-z)))
    ez = np.exp(z)
    return float(ez / (1.0 + ez))


def sample_quadruples(train: RatingsDataset, n: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Draw ``n`` ordered quadruples by rejection over pairs of observed ratings.

    Returns the index arrays ``[i, j, k, t]``. Raises :class:`DataError` when
    fewer than ``n`` orderable pairs turn up within ``100 * n`` draws.
    """
    if len(np.unique(train.values)) < 2:
        raise DataError("BPR needs at least two distinct rating values; no pair is orderable")
    budget = REJECTION_FACTOR * n
    parts_a, parts_b = [], []
    have = drawn = 0
    m = len(train)
    while have < n and drawn < budget:
        size = min(max(2 * (n - have), 1024), budget - drawn)
        a = rng.integers(0, m, size=size)
        b = rng.integers(0, m, size=size)
        drawn += size
        keep = train.values[a] != train.values[b]
        a, b = a[keep], b[keep]
        hi = np.where(train.values[a] > train.values[b], a, b)
        lo = np.where(train.values[a] > train.values[b], b, a)
        parts_a.append(hi)
        parts_b.append(lo)
        have += len(hi)
    if have < n:
        raise DataError(f"found only {have} of {n} orderable rating pairs in {budget} draws")
    hi = np.concatenate(parts_a)[:n]
    lo = np.concatenate(parts_b)[:n]
    return [
        np.ascontiguousarray(train.users[hi]), np.ascontiguousarray(train.items[hi]),
        np.ascontiguousarray(train.users[lo]), np.ascontiguousarray(train.items[lo]),
    ]


def calibrate(model: FactorModel, train: RatingsDataset) -> tuple[float, float]:
    """Least-squares ``rating ~ a * score + b`` over the training ratings."""
    x = np.einsum("ij,ij->i", model.U[train.users], model.V[train.items])
    y = train.values
    if np.ptp(x) == 0:
        return 0.0, float(y.mean())
    A = np.column_stack([x, np.ones_like(x)])
    (a, b), *_ = np.linalg.lstsq(A, y, rcond=None)
    return float(a), float(b)


def train_bpr(train: RatingsDataset, cfg: TrainConfig, calibrated: bool = True) -> FactorModel:
    """BPR-MF: ascend sum of ln sigmoid(x_ij - x_kt) over ordered quadruples.

    ``cfg.steps`` counts quadruple updates (default ``min(10 |train|, 2e6)``).
    With ``calibrated`` the returned model maps scores to ratings through an
    affine fit on the training data.
    """
    steps = min(10 * len(train), MAX_DEFAULT_STEPS) if cfg.steps is None else cfg.steps
    rng = np.random.default_rng([int(cfg.seed), 3])
    quads = sample_quadruples(train, steps, rng)
    model = init_factors(train.n_users, train.n_items, cfg.d, train.scale, InitSpec(cfg.seed, "gaussian"))
    failed = kernels.bpr_steps(model.U, model.V, *quads, float(cfg.learning_rate))
    if failed >= 0:
        raise NumericError(f"BPR diverged at step {failed}", step=failed)
    if calibrated:
        model.affine = calibrate(model, train)
    return model


def _mix64(z):
    # splitmix64 finaliser on uint64 arrays
    z = z + np.uint64(0x9E3779B97F4A7C15)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def hashed_uniform(seed: int, users, items) -> np.ndarray:
    """Uniform [0, 1) draws that depend only on ``(seed, user, item)``."""
    users = np.asarray(users, dtype=np.int64).astype(np.uint64)
    items = np.asarray(items, dtype=np.int64).astype(np.uint64)
    with np.errstate(over="ignore"):
        h = _mix64(np.full(np.broadcast(users, items).shape, seed, dtype=np.uint64))
        h = _mix64(h ^ users)
        h = _mix64(h ^ items)
    return (h >> np.uint64(11)).astype(np.float64) * 2.0**-53


class HeuristicPredictor:
    """Rating predictor for one of the heuristic modes.

    ``random_uniform`` draws uniformly from the integer levels of the scale
    when the scale bounds and all training ratings are integers, and
    uniformly from the continuous interval otherwise.
    """

    def __init__(self, train: RatingsDataset, mode: str, seed: int = 0):
        if mode not in HEURISTIC_MODES:
            raise UsageError(f"unknown heuristic {mode!r}; expected one of {HEURISTIC_MODES}")
        if len(train) == 0:
            raise DataError("heuristics need at least one training rating")
        self.mode = mode
        self.seed = int(seed)
        self.n_users, self.n_items = train.n_users, train.n_items
        self.r_min, self.r_max = train.r_min, train.r_max
        self.global_mean = float(train.values.mean())
        self.discrete = (
            float(self.r_min).is_integer()
            and float(self.r_max).is_integer()
            and bool(np.all(train.values == np.round(train.values)))
        )
        if mode == "user_mean":
            self.means = self._group_means(train.users, train.values, self.n_users)
        elif mode == "item_mean":
            self.means = self._group_means(train.items, train.values, self.n_items)

    def _group_means(self, keys, values, size):
        sums = np.bincount(keys, weights=values, minlength=size)
        counts = np.bincount(keys, minlength=size)
        means = np.full(size, self.global_mean)
        seen = counts > 0
        means[seen] = sums[seen] / counts[seen]
        return means

    def _random(self, users, items):
        u = hashed_uniform(self.seed, users, items)
        if self.discrete:
            levels = int(self.r_max - self.r_min) + 1
            return self.r_min + np.floor(u * levels)
        return self.r_min + u * (self.r_max - self.r_min)

    def predict(self, users, items) -> np.ndarray:
        users = np.asarray(users, dtype=np.int64)
        items = np.asarray(items, dtype=np.int64)
        if users.size and (users.min() < 0 or users.max() >= self.n_users):
            raise UsageError("user index out of range")
        if items.size and (items.min() < 0 or items.max() >= self.n_items):
            raise UsageError("item index out of range")
        users, items = np.broadcast_arrays(users, items)
        if self.mode == "global_mean":
            return np.full(users.shape, self.global_mean)
        if self.mode == "user_mean":
            return self.means[users]
        if self.mode == "item_mean":
            return self.means[items]
        return self._random(users, items)

    def score_matrix(self, users=None) -> np.ndarray:
        users = np.arange(self.n_users) if users is None else np.asarray(users)
        return self.predict(users[:, None], np.arange(self.n_items)[None, :])


def heuristic_predict(train: RatingsDataset, mode: str, user: int, item: int, seed: int = 0) -> float:
    return float(HeuristicPredictor(train, mode, seed).predict([user], [item])[0])
