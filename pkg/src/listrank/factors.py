"""Latent factor matrices, prediction and the feasibility projection."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import DataError, UsageError

INIT_MODES = ("uniform_capped", "gaussian")
GAUSSIAN_STD = 0.1
DUMP_VERSION = 1


@dataclass(frozen=True)
class InitSpec:
    seed: int = 42
    mode: str = "uniform_capped"

    def __post_init__(self):
        if self.mode not in INIT_MODES:
            raise UsageError(f"unknown init mode {self.mode!r}; expected one of {INIT_MODES}")


def entry_cap(r_max: float, d: int) -> float:
    return math.sqrt(r_max / d)


@dataclass(eq=False)
class FactorModel:
    """User factors ``U`` (N x d) and item factors ``V`` (M x d).

    ``constrained`` models keep every entry in ``[0, entry_cap]`` so every
    dot product lies in ``[0, r_max]``. ``affine`` maps a raw dot product to
    a rating before clamping; it is the identity except for calibrated
    ranking models.
    """

    U: np.ndarray
    V: np.ndarray
    r_min: float
    r_max: float
    constrained: bool = True
    affine: tuple[float, float] = field(default=(1.0, 0.0))

    def __post_init__(self):
        self.U = np.ascontiguousarray(self.U, dtype=np.float64)
        self.V = np.ascontiguousarray(self.V, dtype=np.float64)
        if self.U.ndim != 2 or self.V.ndim != 2 or self.U.shape[1] != self.V.shape[1]:
            raise UsageError(f"incompatible factor shapes {self.U.shape} and {self.V.shape}")
        if not self.r_min < self.r_max:
            raise UsageError(f"invalid rating scale [{self.r_min}, {self.r_max}]")
        self.affine = (float(self.affine[0]), float(self.affine[1]))

    @property
    def n_users(self) -> int:
        return self.U.shape[0]

    @property
    def n_items(self) -> int:
        return self.V.shape[0]

    @property
    def d(self) -> int:
        return self.U.shape[1]

    @property
    def entry_cap(self) -> float:
        return entry_cap(self.r_max, self.d)

    @property
    def scale(self) -> tuple[float, float]:
        return (self.r_min, self.r_max)

    def copy(self) -> FactorModel:
        return replace(self, U=self.U.copy(), V=self.V.copy())

    def dot(self, user: int, item: int) -> float:
        self._check_index(user, item)
        return float(self.U[user] @ self.V[item])

    def _check_index(self, user, item):
        if not 0 <= user < self.n_users:
            raise UsageError(f"user index {user} out of range [0, {self.n_users})")
        if not 0 <= item < self.n_items:
            raise UsageError(f"item index {item} out of range [0, {self.n_items})")

    def _to_rating(self, x):
        a, b = self.affine
        return np.clip(a * x + b, self.r_min, self.r_max)

    def predict(self, users, items) -> np.ndarray:
        """Vectorised :func:`predict_rating` over paired index arrays."""
        users = np.asarray(users, dtype=np.int64)
        items = np.asarray(items, dtype=np.int64)
        if users.size and (users.min() < 0 or users.max() >= self.n_users):
            raise UsageError("user index out of range")
        if items.size and (items.min() < 0 or items.max() >= self.n_items):
            raise UsageError("item index out of range")
        x = np.einsum("ij,ij->i", self.U[users], self.V[items])
        return self._to_rating(x)

    def score_matrix(self, users=None) -> np.ndarray:
        """Predicted ratings for ``users`` (default all) against every item."""
        U = self.U if users is None else self.U[np.asarray(users)]
        return self._to_rating(U @ self.V.T)


def init_factors(n_users: int, n_items: int, d: int, scale, spec: InitSpec) -> FactorModel:
    if n_users < 1 or n_items < 1 or d < 1:
        raise UsageError(f"factor dimensions must be positive, got N={n_users}, M={n_items}, d={d}")
    r_min, r_max = map(float, scale)
    if not r_min < r_max:
        raise UsageError(f"invalid rating scale [{r_min}, {r_max}]")
    rng = np.random.default_rng(int(spec.seed))
    if spec.mode == "uniform_capped":
        cap = entry_cap(r_max, d)
        U = rng.uniform(0.0, cap, size=(n_users, d))
        V = rng.uniform(0.0, cap, size=(n_items, d))
        return FactorModel(U, V, r_min, r_max, constrained=True)
    U = rng.normal(0.0, GAUSSIAN_STD, size=(n_users, d))
    V = rng.normal(0.0, GAUSSIAN_STD, size=(n_items, d))
    return FactorModel(U, V, r_min, r_max, constrained=False)


def predict_rating(model: FactorModel, user: int, item: int) -> float:
    model._check_index(user, item)
    return float(model._to_rating(model.U[user] @ model.V[item]))


def project(model: FactorModel) -> FactorModel:
    if not model.constrained:
        raise UsageError("projection applies to constrained models only")
    cap = model.entry_cap
    return replace(model, U=np.clip(model.U, 0.0, cap), V=np.clip(model.V, 0.0, cap))


def save_model(model: FactorModel, path) -> None:
    """Write a versioned ``.npz`` dump that reloads bit-exactly."""
    header = np.array(
        [DUMP_VERSION, model.n_users, model.n_items, model.d, int(model.constrained)],
        dtype=np.int64,
    )
    scale = np.array([model.r_min, model.r_max, *model.affine], dtype=np.float64)
    buf = io.BytesIO()
    np.savez(buf, header=header, scale=scale, U=model.U, V=model.V)
    Path(path).write_bytes(buf.getvalue())


def load_model(path) -> FactorModel:
    try:
        with np.load(path) as z:
            header, scale, U, V = z["header"], z["scale"], z["U"], z["V"]
    except (OSError, KeyError, ValueError) as exc:
        raise DataError(f"cannot read model dump {path}: {exc}") from exc
    version, n, m, d, constrained = header.tolist()
    if version != DUMP_VERSION:
        raise DataError(f"{path}: unsupported model dump version {version}")
    if U.shape != (n, d) or V.shape != (m, d):
        raise DataError(f"{path}: factor shapes do not match header")
    r_min, r_max, a, b = scale.tolist()
    return FactorModel(U, V, r_min, r_max, constrained=bool(constrained), affine=(a, b))
