import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from listrank.baselines import (
    HeuristicPredictor,
    bpr_pair_prob,
    calibrate,
    heuristic_predict,
    mf_gradient,
    mf_loss,
    sample_quadruples,
    train_bpr,
    train_mf,
)
from listrank.errors import DataError, UsageError
from listrank.factors import InitSpec, init_factors
from listrank.listwise import TrainConfig
from listrank.synth import rank2_ratings

from conftest import make_dataset


def test_mf_zero_residual_leaves_factors():
    ds = make_dataset([0], [0], [2.0])
    cfg = TrainConfig(learning_rate=0.1, steps=0, d=1, seed=0)
    m = train_mf(ds, cfg)
    # set factors so that U.V = R exactly, then train
    from listrank import kernels

    m.U[:] = 1.0
    m.V[:] = 2.0
    kernels.mf_steps(m.U, m.V, ds.users, ds.items, np.asarray(ds.values), 0.1)
    assert m.U[0, 0] == 1.0 and m.V[0, 0] == 2.0


def test_mf_zero_lr_is_init():
    ds, _ = rank2_ratings(seed=1)
    m = train_mf(ds, TrainConfig(learning_rate=0.0, steps=5, d=2, seed=3))
    init = init_factors(ds.n_users, ds.n_items, 2, ds.scale, InitSpec(3, "gaussian"))
    assert m.U.tobytes() == init.U.tobytes()


def test_mf_deterministic(backend):
    ds, _ = rank2_ratings(seed=2)
    cfg = TrainConfig(learning_rate=0.01, steps=5, d=2, seed=1)
    a, b = train_mf(ds, cfg), train_mf(ds, cfg)
    assert a.U.tobytes() == b.U.tobytes()


def test_mf_fits_training_data():
    ds, _ = rank2_ratings(seed=0)
    m = train_mf(ds, TrainConfig(learning_rate=0.01, steps=400, d=2, seed=0))
    train_mae = np.mean(np.abs(m.predict(ds.users, ds.items) - ds.values))
    assert train_mae < 0.1


@settings(deadline=None, max_examples=50)
@given(st.integers(0, 2**32 - 1))
def test_mf_gradient_finite_differences(seed):
    rng = np.random.default_rng(seed)
    u, v = rng.normal(0, 1, 3), rng.normal(0, 1, 3)
    r = float(rng.uniform(1, 5))
    gu, gv = mf_gradient(r, u, v)
    h = 1e-6
    for k in range(3):
        e = np.zeros(3)
        e[k] = h
        fd_u = (mf_loss(r, u + e, v) - mf_loss(r, u - e, v)) / (2 * h)
        fd_v = (mf_loss(r, u, v + e) - mf_loss(r, u, v - e)) / (2 * h)
        assert fd_u == pytest.approx(gu[k], rel=1e-5, abs=1e-7)
        assert fd_v == pytest.approx(gv[k], rel=1e-5, abs=1e-7)


def test_mf_empty_is_error():
    ds = make_dataset([0], [0], [2.0]).subset([])
    with pytest.raises(DataError):
        train_mf(ds, TrainConfig())


def test_bpr_pair_prob_examples():
    assert bpr_pair_prob(1.3, 1.3) == 0.5
    assert bpr_pair_prob(math.log(3), 0.0) == pytest.approx(0.75, rel=1e-15)
    # 1 / (1 + e^-2) from mpmath at 30 digits
    assert bpr_pair_prob(2.0, 0.0) == pytest.approx(0.8807970779778824, rel=1e-15)
    assert bpr_pair_prob(-800, 800) == 0.0
    assert bpr_pair_prob(800, -800) == 1.0


@given(st.floats(-1e6, 1e6), st.floats(-1e6, 1e6))
def test_bpr_pair_prob_symmetry(a, b):
    p = bpr_pair_prob(a, b)
    assert 0.0 <= p <= 1.0
    assert p + bpr_pair_prob(b, a) == pytest.approx(1.0, abs=1e-15)


def two_by_two():
    return make_dataset([0, 1], [0, 1], [5.0, 1.0], n_users=2, n_items=2)


def test_bpr_equal_ratings_is_error():
    ds = make_dataset([0, 1, 2], [0, 1, 2], [3.0, 3.0, 3.0], scale=(1, 5))
    with pytest.raises(DataError):
        train_bpr(ds, TrainConfig(learning_rate=0.05, steps=10, d=2))


def test_bpr_rejection_budget_exhausted():
    # one 5 among many 3s: orderable draws are too rare for 100x budget
    n = 5000
    vals = np.full(n, 3.0)
    vals[0] = 5.0
    ds = make_dataset(np.arange(n), np.zeros(n, int), vals, n_users=n, n_items=1)
    with pytest.raises(DataError, match="orderable"):
        sample_quadruples(ds, 1000, np.random.default_rng(0))


def test_quadruples_are_ordered(small_ds):
    i, j, k, t = sample_quadruples(small_ds, 500, np.random.default_rng(1))
    R = {(u, it): v for u, it, v in small_ds}
    for a, b, c, d in zip(i, j, k, t):
        assert R[(a, b)] > R[(c, d)]


def test_bpr_zero_lr_is_init():
    ds = two_by_two()
    m = train_bpr(ds, TrainConfig(learning_rate=0.0, steps=50, d=2, seed=5), calibrated=False)
    init = init_factors(2, 2, 2, ds.scale, InitSpec(5, "gaussian"))
    assert m.U.tobytes() == init.U.tobytes() and m.V.tobytes() == init.V.tobytes()


def test_bpr_increases_margin(backend):
    ds = two_by_two()
    cfg = TrainConfig(learning_rate=0.05, steps=2000, d=2, seed=0)
    init = init_factors(2, 2, 2, ds.scale, InitSpec(0, "gaussian"))
    m = train_bpr(ds, cfg, calibrated=False)
    before = init.U[0] @ init.V[0] - init.U[1] @ init.V[1]
    after = m.U[0] @ m.V[0] - m.U[1] @ m.V[1]
    assert after > before


@settings(deadline=None, max_examples=25)
@given(st.integers(0, 1000), st.floats(1e-4, 1e-2))
def test_bpr_single_quadruple_margin_monotone(seed, lr):
    ds = two_by_two()
    prev = None
    m = init_factors(2, 2, 2, ds.scale, InitSpec(seed, "gaussian"))
    from listrank import kernels

    one = np.array([0], dtype=np.int64)
    other = np.array([1], dtype=np.int64)
    for _ in range(20):
        margin = m.U[0] @ m.V[0] - m.U[1] @ m.V[1]
        if prev is not None:
            assert margin >= prev - 1e-15
        prev = margin
        kernels.bpr_steps(m.U, m.V, one, one, other, other, lr)


def test_bpr_calibration_uses_train_only(small_ds):
    cfg = TrainConfig(learning_rate=0.05, steps=2000, d=2, seed=0)
    m = train_bpr(small_ds, cfg)
    a, b = calibrate(m, small_ds)
    assert m.affine == pytest.approx((a, b))
    x = np.einsum("ij,ij->i", m.U[small_ds.users], m.V[small_ds.items])
    # least-squares residual is orthogonal to [x, 1]
    resid = small_ds.values - (a * x + b)
    assert abs(resid.sum()) < 1e-9 and abs(resid @ x) < 1e-9
    preds = m.predict(small_ds.users, small_ds.items)
    assert preds.min() >= 1.0 and preds.max() <= 5.0


def test_heuristic_means():
    ds = make_dataset([0, 1], [0, 1], [2.0, 4.0], n_users=3, n_items=3)
    assert heuristic_predict(ds, "global_mean", 2, 2) == 3.0
    assert heuristic_predict(ds, "user_mean", 0, 2) == 2.0
    assert heuristic_predict(ds, "user_mean", 2, 0) == 3.0
    assert heuristic_predict(ds, "item_mean", 0, 1) == 4.0
    assert heuristic_predict(ds, "item_mean", 0, 2) == 3.0


def test_random_uniform_bounds_and_determinism(small_ds):
    vals = [heuristic_predict(small_ds, "random_uniform", u, i, seed=7) for u in range(4) for i in range(5)]
    assert all(1.0 <= v <= 5.0 for v in vals)
    assert all(float(v).is_integer() for v in vals)
    again = [heuristic_predict(small_ds, "random_uniform", u, i, seed=7) for u in range(4) for i in range(5)]
    assert vals == again
    other = [heuristic_predict(small_ds, "random_uniform", u, i, seed=8) for u in range(4) for i in range(5)]
    assert vals != other


def test_random_uniform_continuous_for_fractional_ratings():
    ds = make_dataset([0, 1], [0, 1], [1.5, 4.0], n_users=2, n_items=2, scale=(0.5, 5.0))
    p = HeuristicPredictor(ds, "random_uniform", 3)
    vals = p.score_matrix().ravel()
    assert not all(float(v).is_integer() for v in vals)
    assert vals.min() >= 0.5 and vals.max() <= 5.0


def test_random_uniform_level_frequencies(small_ds):
    p = HeuristicPredictor(small_ds, "random_uniform", 1)
    u = np.arange(200_000) // 1000
    i = np.arange(200_000) % 1000
    from listrank.baselines import hashed_uniform

    draws = hashed_uniform(1, u, i)
    assert abs(draws.mean() - 0.5) < 0.005
    counts = np.bincount((1 + np.floor(draws * 5)).astype(int), minlength=6)[1:]
    assert np.all(np.abs(counts / len(draws) - 0.2) < 0.005)


def test_heuristic_score_matrix_matches_predict(small_ds):
    for mode in ("global_mean", "user_mean", "item_mean", "random_uniform"):
        p = HeuristicPredictor(small_ds, mode, 2)
        S = p.score_matrix()
        for u in range(4):
            for i in range(5):
                assert S[u, i] == heuristic_predict(small_ds, mode, u, i, 2)


def test_heuristic_errors(small_ds):
    with pytest.raises(UsageError):
        HeuristicPredictor(small_ds, "median")
    with pytest.raises(UsageError):
        HeuristicPredictor(small_ds, "global_mean").predict([9], [0])
