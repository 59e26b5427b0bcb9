"""Seeded synthetic rating data.

``rank2_ratings`` is a low-rank generate-and-fit fixture for the MF baseline.
``movielens_like`` produces a MovieLens-100K-shaped table (943 users, 1682
items, 100,000 integer ratings) with heavy-tailed user activity, Zipf-like
item popularity and the 1-5 star marginals of the public 100K release. It
stands in for the real file when that is not available.
"""

from __future__ import annotations

import numpy as np

from .dataset import RatingsDataset

# share of 1..5 star ratings in MovieLens-100K
ML100K_STAR_SHARES = (0.0611, 0.1137, 0.2715, 0.3417, 0.2120)


def rank2_ratings(
    n_users: int = 50,
    n_items: int = 50,
    observed: float = 0.3,
    noise: float = 0.1,
    seed: int = 0,
    rank: int = 2,
) -> tuple[RatingsDataset, np.ndarray]:
    """Observed cells of ``R = clip(1 + 2 U* V*^T + noise, 1, 5)``.

    Entries of ``U*`` and ``V*`` are Uniform[0, 1], so with rank 2 the clean
    matrix spans [1, 5]. Returns the observed dataset and the full noisy
    matrix ``R``; its unobserved cells are the held-out ground truth.
    """
    rng = np.random.default_rng(seed)
    Us = rng.uniform(0, 1, size=(n_users, rank))
    Vs = rng.uniform(0, 1, size=(n_items, rank))
    R = np.clip(1.0 + (4.0 / rank) * (Us @ Vs.T) + rng.normal(0, noise, size=(n_users, n_items)), 1.0, 5.0)
    n_obs = int(round(observed * n_users * n_items))
    cells = np.sort(rng.choice(n_users * n_items, size=n_obs, replace=False))
    users, items = np.divmod(cells, n_items)
    return RatingsDataset(users, items, R[users, items], n_users, n_items, 1.0, 5.0), R


def _quantize(scores, shares):
    cuts = np.quantile(scores, np.cumsum(shares)[:-1])
    return 1.0 + np.searchsorted(cuts, scores, side="right")


def movielens_like(
    n_users: int = 943,
    n_items: int = 1682,
    n_ratings: int = 100_000,
    seed: int = 0,
    d: int = 5,
) -> tuple[RatingsDataset, np.ndarray]:
    """MovieLens-100K-shaped synthetic ratings plus per-row timestamps.

    Rows come out sorted by user then timestamp, like ``ratings.dat``.
    """
    if n_ratings > n_users * n_items // 2:
        raise ValueError("requested density is too high for rejection sampling")
    rng = np.random.default_rng(seed)
    activity = rng.lognormal(0.0, 1.0, size=n_users)
    activity /= activity.sum()
    popularity = 1.0 / np.arange(1, n_items + 1) ** 0.9
    popularity = rng.permutation(popularity / popularity.sum())

    keys = np.empty(0, dtype=np.int64)
    while len(keys) < n_ratings:
        need = n_ratings - len(keys)
        u = rng.choice(n_users, size=2 * need, p=activity)
        i = rng.choice(n_items, size=2 * need, p=popularity)
        fresh = np.setdiff1d(np.unique(u * n_items + i), keys, assume_unique=True)
        keys = np.concatenate([keys, rng.permutation(fresh)[:need]])
    users, items = np.divmod(keys, n_items)

    user_bias = rng.normal(0.0, 0.4, size=n_users)
    item_bias = rng.normal(0.0, 0.5, size=n_items) + 0.3 * np.log(popularity / popularity.mean())
    P = rng.normal(0.0, 1.0 / np.sqrt(d), size=(n_users, d))
    Q = rng.normal(0.0, 1.0 / np.sqrt(d), size=(n_items, d))
    score = (
        user_bias[users] + item_bias[items]
        + np.einsum("ij,ij->i", P[users], Q[items])
        + rng.normal(0.0, 0.7, size=n_ratings)
    )
    values = _quantize(score, ML100K_STAR_SHARES)

    timestamps = 874_724_710 + rng.integers(0, 20_000_000, size=n_ratings)
    order = np.lexsort((timestamps, users))
    users, items, values, timestamps = users[order], items[order], values[order], timestamps[order]
    ds = RatingsDataset(
        users, items, values, n_users, n_items, 1.0, 5.0,
        tuple(str(u + 1) for u in range(n_users)),
        tuple(str(i + 1) for i in range(n_items)),
    )
    return ds, timestamps
