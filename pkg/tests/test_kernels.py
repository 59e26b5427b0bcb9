"""The compiled and pure-Python kernels must agree bit for bit."""

import numpy as np
import pytest

from listrank import _pykernels, kernels

pytestmark = pytest.mark.skipif(kernels.BACKEND != "cython", reason="compiled extension not built")


def _factors(seed, n=6, m=7, d=3, scale=1.0, nonneg=True):
    rng = np.random.default_rng(seed)
    U = rng.uniform(0, scale, (n, d)) if nonneg else rng.normal(0, scale, (n, d))
    V = rng.uniform(0, scale, (m, d)) if nonneg else rng.normal(0, scale, (m, d))
    return U, V


def _idx(seed, hi, size):
    return np.random.default_rng(seed).integers(0, hi, size=size, dtype=np.int64)


@pytest.mark.parametrize("lr", [1e-4, 1e-2, 0.3])
def test_listwise_identical(lr):
    from listrank import _core

    U1, V1 = _factors(0)
    U2, V2 = U1.copy(), V1.copy()
    users, items = _idx(1, 6, 5000), _idx(2, 7, 5000)
    cap = np.sqrt(5 / 3)
    assert _core.listwise_steps(U1, V1, users, items, lr, 1e-3, cap) == -1
    assert _pykernels.listwise_steps(U2, V2, users, items, lr, 1e-3, cap) == -1
    assert U1.tobytes() == U2.tobytes() and V1.tobytes() == V2.tobytes()


def test_mf_identical():
    from listrank import _core

    U1, V1 = _factors(3, nonneg=False, scale=0.1)
    U2, V2 = U1.copy(), V1.copy()
    users, items = _idx(4, 6, 3000), _idx(5, 7, 3000)
    vals = np.random.default_rng(6).integers(1, 6, 3000).astype(float)
    _core.mf_steps(U1, V1, users, items, vals, 0.01)
    _pykernels.mf_steps(U2, V2, users, items, vals, 0.01)
    assert U1.tobytes() == U2.tobytes() and V1.tobytes() == V2.tobytes()


def test_bpr_identical_including_aliased_rows():
    from listrank import _core

    U1, V1 = _factors(7, n=3, m=3, nonneg=False)
    U2, V2 = U1.copy(), V1.copy()
    # small index range forces i == k and j == t often
    I, J, K, T = (_idx(s, 3, 2000) for s in (8, 9, 10, 11))
    _core.bpr_steps(U1, V1, I, J, K, T, 0.05)
    _pykernels.bpr_steps(U2, V2, I, J, K, T, 0.05)
    assert U1.tobytes() == U2.tobytes() and V1.tobytes() == V2.tobytes()


@pytest.mark.parametrize("impl", ["_core", "_pykernels"])
def test_divergence_reports_step(impl):
    import importlib

    mod = importlib.import_module(f"listrank.{impl}")
    U = np.full((1, 2), 1.0)
    V = np.full((1, 2), 1.0)
    users = items = np.zeros(100, dtype=np.int64)
    vals = np.full(100, 5.0)
    failed = mod.mf_steps(U, V, users, items, vals, 1e3)
    assert 0 <= failed < 100
    U = np.array([[np.nan, 1.0]])
    assert mod.listwise_steps(U, V.copy(), users[:3], items[:3], 0.1, 1e-3, 2.0) == 0


def test_bpr_overflow_gives_zero_step():
    from listrank import _core

    # margin far beyond exp's range: update factor is exactly 0 in both
    U1 = np.array([[30.0], [0.0]])
    V1 = np.array([[30.0], [0.0]])
    U2, V2 = U1.copy(), V1.copy()
    I = J = np.array([0], dtype=np.int64)
    K = T = np.array([1], dtype=np.int64)
    _core.bpr_steps(U1, V1, I, J, K, T, 0.1)
    _pykernels.bpr_steps(U2, V2, I, J, K, T, 0.1)
    assert U1.tobytes() == U2.tobytes()
    assert U1[0, 0] == 30.0
