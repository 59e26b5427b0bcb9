"""Accuracy and popularity-bias metrics.

The Matthew degree is the magnitude of the OLS slope of ln(count) on
ln(rank), where counts tally how often each item appears across all users'
top-K lists. Items never recommended are left out of the fit. A flatter
popularity curve (smaller degree) means a fairer recommender.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .dataset import RatingsDataset
from .errors import DataError, UsageError

DEFAULT_K = 10
MATTHEW_DEFINITION = "|OLS slope| of ln(top-K recommendation count) vs ln(popularity rank)"
_USER_BLOCK = 512


@dataclass
class MetricsReport:
    algorithm: str
    mae: float
    matthew_degree: float
    k: int
    runtime_ms: float
    lr: float
    dim: int
    steps: int
    seed: int
    failed: bool = False
    notes: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return asdict(self)


class LogLogFit(NamedTuple):
    slope: float
    intercept: float
    r_squared: float


@dataclass
class PopularityProfile:
    counts: dict[int, float]
    fitted_slope: float
    r_squared: float


def mae(predictions: Sequence[tuple[float, float]]) -> float:
    """Mean absolute error over ``(predicted, actual)`` pairs."""
    arr = np.asarray(predictions, dtype=np.float64)
    if arr.size == 0:
        raise UsageError("mae of an empty sequence")
    arr = arr.reshape(-1, 2)
    return float(np.mean(np.abs(arr[:, 0] - arr[:, 1])))


def loglog_slope(points: Sequence[tuple[float, float]]) -> LogLogFit:
    """Ordinary least squares of ln(count) on ln(rank)."""
    arr = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    if len(arr) < 2:
        raise UsageError("loglog_slope needs at least two points")
    if np.any(arr <= 0) or not np.all(np.isfinite(arr)):
        raise UsageError("loglog_slope needs strictly positive finite ranks and counts")
    x = np.log(arr[:, 0])
    y = np.log(arr[:, 1])
    xc = x - x.mean()
    yc = y - y.mean()
    sxx = float(xc @ xc)
    if sxx == 0:
        raise UsageError("loglog_slope needs at least two distinct ranks")
    slope = float(xc @ yc) / sxx
    intercept = float(y.mean() - slope * x.mean())
    ss_tot = float(yc @ yc)
    if ss_tot == 0:
        r2 = 1.0
    else:
        resid = yc - slope * xc
        r2 = min(max(1.0 - float(resid @ resid) / ss_tot, 0.0), 1.0)
    return LogLogFit(slope, intercept, r2)


def _topk_rows(scores: np.ndarray, k: int) -> list[np.ndarray]:
    # scores: (users, items) with -inf marking excluded items
    out = []
    n_items = scores.shape[1]
    idx = np.arange(n_items)
    for row in scores:
        order = np.lexsort((idx, -row))
        out.append(order[row[order] > -np.inf][:k])
    return out


def topk_from_scores(scores, k: int, exclude=()) -> np.ndarray:
    """Top-``k`` item indices of one score vector, highest first.

    Ties go to the lower item index. Excluded items are skipped; fewer than
    ``k`` candidates give a shorter list.
    """
    if k < 1:
        raise UsageError(f"k must be >= 1, got {k}")
    row = np.array(scores, dtype=np.float64, copy=True)
    row[np.asarray(list(exclude), dtype=np.int64)] = -np.inf
    if not np.any(row > -np.inf):
        raise DataError("no candidate items left after exclusion")
    return _topk_rows(row[None, :], k)[0]


def topk_recommend(predictor, user: int, k: int, exclude=()) -> np.ndarray:
    """Top-``k`` items for ``user`` by predicted rating."""
    return topk_from_scores(predictor.score_matrix([user])[0], k, exclude)


def matthew_from_counts(counts) -> tuple[float, PopularityProfile]:
    """Degree from per-item recommendation counts (zero counts dropped).

    Counts are normally integer tallies, but any non-negative reals work.
    """
    counts = np.asarray(counts, dtype=np.float64)
    if np.any(counts < 0) or not np.all(np.isfinite(counts)):
        raise UsageError("counts must be finite and non-negative")
    items = np.flatnonzero(counts > 0)
    if len(items) == 0:
        raise DataError("no recommendations to measure")
    order = np.lexsort((items, -counts[items]))
    ranked = items[order]
    tallies = counts[ranked]
    as_num = int if np.all(tallies == np.floor(tallies)) else float
    profile_counts = {int(i): as_num(c) for i, c in zip(ranked, tallies)}
    if len(np.unique(tallies)) == 1:
        return 0.0, PopularityProfile(profile_counts, 0.0, 1.0)
    fit = loglog_slope(np.column_stack([np.arange(1, len(tallies) + 1), tallies]))
    return abs(fit.slope), PopularityProfile(profile_counts, fit.slope, fit.r_squared)


def recommendation_counts(predictor, train: RatingsDataset, k: int = DEFAULT_K) -> np.ndarray:
    """How often each item appears across every user's top-``k`` list."""
    if k < 1:
        raise UsageError(f"k must be >= 1, got {k}")
    seen = train.items_by_user()
    counts = np.zeros(train.n_items, dtype=np.int64)
    col = np.arange(train.n_items)
    for start in range(0, train.n_users, _USER_BLOCK):
        users = np.arange(start, min(start + _USER_BLOCK, train.n_users))
        scores = np.array(predictor.score_matrix(users), dtype=np.float64)
        for r, u in enumerate(users):
            scores[r, seen[u]] = -np.inf
        kk = min(k, train.n_items)
        # stable top-k: sort by (-score, item) within each row
        order = np.lexsort((np.broadcast_to(col, scores.shape), -scores), axis=1)[:, :kk]
        picked = np.take_along_axis(scores, order, axis=1) > -np.inf
        np.add.at(counts, order[picked], 1)
    return counts


def matthew_degree(predictor, train: RatingsDataset, k: int = DEFAULT_K) -> tuple[float, PopularityProfile]:
    """Degree of Matthew effect of ``predictor``'s top-``k`` lists over all users."""
    counts = recommendation_counts(predictor, train, k)
    if counts.sum() == 0:
        raise DataError("every user has rated every item; nothing to recommend")
    return matthew_from_counts(counts)
