import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from listrank.dataset import (
    RatingsDataset,
    SplitSpec,
    load_ratings,
    rating_histogram,
    split_train_test,
    write_movielens,
)
from listrank.errors import DataError, UsageError

from conftest import make_dataset


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_movielens_line(tmp_path):
    ds = load_ratings(write(tmp_path, "r.dat", "1::1193::5::978300760\n"), "movielens_dat")
    (r,) = ds.ratings
    assert (r.user_id, r.item_id, r.value) == (ds.user_index(1), ds.item_index(1193), 5.0)
    assert ds.user_ids == ("1",) and ds.item_ids == ("1193",)
    assert ds.scale == (1.0, 5.0)


def test_empty_file_is_data_error(tmp_path):
    with pytest.raises(DataError, match="no ratings"):
        load_ratings(write(tmp_path, "e.dat", ""), "movielens_dat")
    with pytest.raises(DataError, match="no ratings"):
        load_ratings(write(tmp_path, "e.csv", "userId,itemId,rating\n"), "csv")


def test_csv_single_row(tmp_path):
    p = write(tmp_path, "r.csv", "userId,itemId,rating\n7,9,3.5\n")
    ds = load_ratings(p, "csv", ("userId", "itemId", "rating"), scale=(0.5, 5.0))
    assert ds.ratings == [(0, 0, 3.5)]
    assert ds.user_ids == ("7",)


def test_csv_column_spec_and_order(tmp_path):
    p = write(tmp_path, "r.csv", "ts,item,user,stars\n1,a,u1,2\n2,b,u2,4\n3,a,u2,3\n")
    ds = load_ratings(p, "csv", ("user", "item", "stars"))
    assert ds.values.tolist() == [2.0, 4.0, 3.0]
    assert ds.scale == (2.0, 4.0)
    assert (ds.n_users, ds.n_items) == (2, 2)


@pytest.mark.parametrize(
    "text, match",
    [
        ("1::2::5\n", r":1: expected 4"),
        ("1::2::5::1\n1::3::x::2\n", r":2: non-numeric"),
        ("1::2::5::1\n1::2::4::2\n", "duplicate"),
        ("1::2::7::1\n", "outside scale"),
    ],
)
def test_movielens_malformed(tmp_path, text, match):
    with pytest.raises(DataError, match=match):
        load_ratings(write(tmp_path, "bad.dat", text), "movielens_dat")


def test_csv_malformed(tmp_path):
    with pytest.raises(DataError, match=":3: expected 3 fields"):
        load_ratings(write(tmp_path, "b.csv", "userId,itemId,rating\n1,2,3\n1,3\n"), "csv")
    with pytest.raises(DataError, match="lacks columns"):
        load_ratings(write(tmp_path, "c.csv", "u,i,r\n1,2,3\n"), "csv")


def test_unreadable_file(tmp_path):
    with pytest.raises(DataError, match="cannot read"):
        load_ratings(tmp_path / "missing.dat")


def test_unknown_format(tmp_path):
    with pytest.raises(UsageError):
        load_ratings(tmp_path / "x", "parquet")


def test_id_round_trip(ml_small):
    ds = load_ratings(ml_small)
    for u in range(ds.n_users):
        assert ds.user_index(ds.user_ids[u]) == u
    for i in range(ds.n_items):
        assert ds.item_index(ds.item_ids[i]) == i
    assert set(ds.users.tolist()) == set(range(ds.n_users))
    assert set(ds.items.tolist()) == set(range(ds.n_items))


def test_loading_is_byte_stable(ml_small):
    assert load_ratings(ml_small).canonical_bytes() == load_ratings(ml_small).canonical_bytes()


def test_write_then_load(tmp_path, small_ds):
    p = tmp_path / "w.dat"
    write_movielens(small_ds, p)
    back = load_ratings(p)
    assert back.values.tolist() == small_ds.values.tolist()
    assert back.n_users == small_ds.n_users and back.n_items == small_ds.n_items


def test_dataset_is_read_only(small_ds):
    with pytest.raises(ValueError):
        small_ds.values[0] = 1.0


def test_split_sizes():
    ds = make_dataset(range(10), range(10), [3] * 10, scale=(1, 5))
    train, test = split_train_test(ds, SplitSpec(0.9, 7))
    assert (len(train), len(test)) == (9, 1)


def test_split_deterministic(small_ds):
    a = split_train_test(small_ds, SplitSpec(0.5, 11))
    b = split_train_test(small_ds, SplitSpec(0.5, 11))
    assert a[0].canonical_bytes() == b[0].canonical_bytes()
    assert a[1].canonical_bytes() == b[1].canonical_bytes()


def test_split_sizes_independent_of_seed():
    ds = make_dataset([0, 1, 2, 3], [0, 1, 2, 3], [1, 2, 3, 4])
    for seed in (1, 2, 99):
        train, test = split_train_test(ds, SplitSpec(0.5, seed))
        assert (len(train), len(test)) == (2, 2)


def test_split_empty_half_is_error():
    ds = make_dataset([0, 1], [0, 1], [1, 2])
    with pytest.raises(DataError):
        split_train_test(ds, SplitSpec(0.1, 0))


def test_split_spec_validation():
    with pytest.raises(UsageError):
        SplitSpec(1.0, 0)
    with pytest.raises(UsageError):
        SplitSpec(0.5, -1)


@settings(max_examples=50, deadline=None)
@given(
    n=st.integers(2, 60),
    frac=st.floats(0.05, 0.95),
    seed=st.integers(0, 2**64 - 1),
)
def test_split_is_partition(n, frac, seed):
    ds = make_dataset(np.arange(n), np.arange(n) % 3, np.ones(n), n_users=n, n_items=3, scale=(0, 5))
    n_train = int(np.floor(frac * n + 0.5))
    if n_train in (0, n):
        with pytest.raises(DataError):
            split_train_test(ds, SplitSpec(frac, seed))
        return
    train, test = split_train_test(ds, SplitSpec(frac, seed))
    key = lambda d: set(zip(d.users.tolist(), d.items.tolist()))
    assert key(train) | key(test) == key(ds)
    assert not key(train) & key(test)
    assert len(train) == n_train
    assert (train.n_users, train.n_items, train.scale) == (ds.n_users, ds.n_items, ds.scale)
    assert train.user_ids == ds.user_ids


def test_histogram_examples():
    assert rating_histogram(make_dataset([0, 1, 2], [0, 0, 0], [5, 5, 4])) == {4.0: 1, 5.0: 2}
    assert rating_histogram(make_dataset([0], [0], [3])) == {3.0: 1}
    h = rating_histogram(make_dataset(range(5), range(5), [1, 2, 3, 4, 5]))
    assert set(h.values()) == {1} and sum(h.values()) == 5


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(1, 5), min_size=1, max_size=200))
def test_histogram_sums_to_size(values):
    n = len(values)
    ds = make_dataset(np.arange(n), np.zeros(n, int), values, n_users=n, n_items=1)
    h = rating_histogram(ds)
    assert sum(h.values()) == n
    assert set(h) == set(float(v) for v in values)


def test_constructor_invariants():
    with pytest.raises(DataError, match="duplicate"):
        make_dataset([0, 0], [1, 1], [1, 2], n_items=2)
    with pytest.raises(DataError):
        RatingsDataset([0], [0], [3.0], 1, 1, 5.0, 1.0)
    with pytest.raises(DataError):
        RatingsDataset([1], [0], [3.0], 1, 1, 1.0, 5.0)
