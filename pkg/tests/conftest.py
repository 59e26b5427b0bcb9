import numpy as np
import pytest

from listrank import _pykernels, kernels
from listrank.dataset import RatingsDataset, write_movielens
from listrank.synth import movielens_like


def make_dataset(users, items, values, n_users=None, n_items=None, scale=(1.0, 5.0)):
    users = np.asarray(users)
    items = np.asarray(items)
    return RatingsDataset(
        users, items, np.asarray(values, dtype=float),
        n_users or int(users.max()) + 1, n_items or int(items.max()) + 1, *scale,
    )


@pytest.fixture
def small_ds():
    # 4 users x 5 items, integer ratings
    users = [0, 0, 0, 1, 1, 2, 2, 2, 3, 3, 3, 3]
    items = [0, 1, 2, 0, 3, 1, 2, 4, 0, 2, 3, 4]
    values = [5, 3, 4, 4, 1, 2, 5, 3, 1, 4, 2, 5]
    return make_dataset(users, items, values)


@pytest.fixture(scope="session")
def ml_small(tmp_path_factory):
    """A 5,000-rating MovieLens-format file on disk."""
    ds, ts = movielens_like(n_users=120, n_items=200, n_ratings=5_000, seed=3)
    path = tmp_path_factory.mktemp("data") / "ratings.dat"
    write_movielens(ds, path, ts)
    return path


@pytest.fixture(params=["compiled", "python"])
def backend(request, monkeypatch):
    """Run a test against each kernel backend."""
    if request.param == "compiled":
        if kernels.BACKEND != "cython":
            pytest.skip("compiled extension not built")
        return kernels
    for name in ("listwise_steps", "mf_steps", "bpr_steps"):
        monkeypatch.setattr(kernels, name, getattr(_pykernels, name))
    return kernels
