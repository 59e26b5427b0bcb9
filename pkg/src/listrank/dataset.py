"""Rating data: loading, validation, splitting and summaries.

Ratings are stored column-wise as three read-only numpy arrays (dense user
index, dense item index, rating value). Original ids are kept as strings in
first-appearance order, so loading the same file twice gives the same dense
indices.
"""

from __future__ import annotations

import csv
import hashlib
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from .errors import DataError, UsageError

FORMATS = ("movielens_dat", "csv")
MOVIELENS_SCALE = (1.0, 5.0)
DEFAULT_COLUMNS = ("userId", "itemId", "rating")


class Rating(NamedTuple):
    user_id: int
    item_id: int
    value: float


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.8
    seed: int = 42

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise UsageError(f"train_fraction must lie in (0, 1), got {self.train_fraction}")
        if not 0 <= int(self.seed) < 2**64:
            raise UsageError(f"seed must be a 64-bit unsigned integer, got {self.seed}")


def _frozen(a, dtype):
    a = np.ascontiguousarray(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class RatingsDataset:
    users: np.ndarray
    items: np.ndarray
    values: np.ndarray
    n_users: int
    n_items: int
    r_min: float
    r_max: float
    user_ids: tuple[str, ...] = ()
    item_ids: tuple[str, ...] = ()
    _user_index: dict = field(default_factory=dict, repr=False)
    _item_index: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "users", _frozen(self.users, np.int64))
        object.__setattr__(self, "items", _frozen(self.items, np.int64))
        object.__setattr__(self, "values", _frozen(self.values, np.float64))
        if not (len(self.users) == len(self.items) == len(self.values)):
            raise DataError("rating columns have different lengths")
        if self.n_users < 1 or self.n_items < 1:
            raise DataError("dataset needs at least one user and one item")
        if not self.r_min < self.r_max:
            raise DataError(f"invalid rating scale [{self.r_min}, {self.r_max}]")
        if len(self):
            if self.users.min() < 0 or self.users.max() >= self.n_users:
                raise DataError("user index out of range")
            if self.items.min() < 0 or self.items.max() >= self.n_items:
                raise DataError("item index out of range")
            if self.values.min() < self.r_min or self.values.max() > self.r_max:
                raise DataError(
                    f"rating outside scale [{self.r_min}, {self.r_max}]: "
                    f"observed [{self.values.min()}, {self.values.max()}]"
                )
            keys = self.users * self.n_items + self.items
            if len(np.unique(keys)) != len(keys):
                raise DataError("duplicate (user, item) rating")
        if not self.user_ids:
            object.__setattr__(self, "user_ids", tuple(str(u) for u in range(self.n_users)))
        if not self.item_ids:
            object.__setattr__(self, "item_ids", tuple(str(i) for i in range(self.n_items)))
        object.__setattr__(self, "_user_index", {u: n for n, u in enumerate(self.user_ids)})
        object.__setattr__(self, "_item_index", {i: n for n, i in enumerate(self.item_ids)})

    def __len__(self):
        return len(self.values)

    def __iter__(self) -> Iterator[Rating]:
        for u, i, v in zip(self.users.tolist(), self.items.tolist(), self.values.tolist()):
            yield Rating(u, i, v)

    @property
    def ratings(self) -> list[Rating]:
        return list(self)

    @property
    def scale(self) -> tuple[float, float]:
        return (self.r_min, self.r_max)

    def user_index(self, original_id) -> int:
        return self._user_index[str(original_id)]

    def item_index(self, original_id) -> int:
        return self._item_index[str(original_id)]

    def subset(self, rows) -> RatingsDataset:
        """Ratings at ``rows``; shape, scale and id maps are shared."""
        rows = np.asarray(rows, dtype=np.int64)
        return RatingsDataset(
            self.users[rows], self.items[rows], self.values[rows],
            self.n_users, self.n_items, self.r_min, self.r_max,
            self.user_ids, self.item_ids,
        )

    def with_values(self, values) -> RatingsDataset:
        return RatingsDataset(
            self.users, self.items, values, self.n_users, self.n_items,
            self.r_min, self.r_max, self.user_ids, self.item_ids,
        )

    def items_by_user(self) -> list[np.ndarray]:
        """Item indices rated by each user, in row order."""
        order = np.argsort(self.users, kind="stable")
        bounds = np.searchsorted(self.users[order], np.arange(self.n_users + 1))
        items = self.items[order]
        return [items[bounds[u]:bounds[u + 1]] for u in range(self.n_users)]

    def canonical_bytes(self) -> bytes:
        h = [
            f"{self.n_users},{self.n_items},{self.r_min!r},{self.r_max!r}".encode(),
            "\x1f".join(self.user_ids).encode(),
            "\x1f".join(self.item_ids).encode(),
            self.users.tobytes(), self.items.tobytes(), self.values.tobytes(),
        ]
        return b"\x1e".join(h)

    def digest(self) -> str:
        return hashlib.sha256(self.canonical_bytes()).hexdigest()


def _build(rows, scale, source):
    if not rows:
        raise DataError(f"{source}: no ratings")
    user_index: dict[str, int] = {}
    item_index: dict[str, int] = {}
    users, items, values = [], [], []
    seen = set()
    for lineno, u, i, v in rows:
        du = user_index.setdefault(u, len(user_index))
        di = item_index.setdefault(i, len(item_index))
        if (du, di) in seen:
            raise DataError(f"{source}:{lineno}: duplicate rating for user {u!r}, item {i!r}")
        seen.add((du, di))
        users.append(du)
        items.append(di)
        values.append(v)
    values = np.asarray(values, dtype=np.float64)
    if scale is None:
        r_min, r_max = float(values.min()), float(values.max())
        if r_min == r_max:
            raise DataError(
                f"{source}: all ratings equal {r_min}; pass an explicit scale"
            )
    else:
        r_min, r_max = map(float, scale)
        bad = np.flatnonzero((values < r_min) | (values > r_max))
        if len(bad):
            lineno = rows[bad[0]][0]
            raise DataError(
                f"{source}:{lineno}: rating {values[bad[0]]} outside scale [{r_min}, {r_max}]"
            )
    return RatingsDataset(
        np.asarray(users), np.asarray(items), values,
        len(user_index), len(item_index), r_min, r_max,
        tuple(user_index), tuple(item_index),
    )


def _parse_value(text, source, lineno):
    try:
        v = float(text)
    except ValueError:
        raise DataError(f"{source}:{lineno}: non-numeric rating {text!r}") from None
    if not np.isfinite(v):
        raise DataError(f"{source}:{lineno}: non-finite rating {text!r}")
    return v


def _read_movielens(path):
    rows = []
    with open(path, encoding="latin-1") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            fields = line.split("::")
            if len(fields) != 4:
                raise DataError(f"{path}:{lineno}: expected 4 '::'-separated fields, got {len(fields)}")
            u, i, r, ts = fields
            try:
                int(ts)
            except ValueError:
                raise DataError(f"{path}:{lineno}: malformed timestamp {ts!r}") from None
            rows.append((lineno, u.strip(), i.strip(), _parse_value(r, path, lineno)))
    return rows


def _read_csv(path, column_spec):
    ucol, icol, rcol = column_spec or DEFAULT_COLUMNS
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}: no ratings")
        header = [h.strip() for h in header]
        try:
            cols = [header.index(c) for c in (ucol, icol, rcol)]
        except ValueError:
            raise DataError(
                f"{path}: header {header} lacks columns {[ucol, icol, rcol]}"
            ) from None
        for lineno, fields in enumerate(reader, 2):
            if not fields or all(not f.strip() for f in fields):
                continue
            if len(fields) != len(header):
                raise DataError(
                    f"{path}:{lineno}: expected {len(header)} fields, got {len(fields)}"
                )
            u, i, r = (fields[c].strip() for c in cols)
            rows.append((lineno, u, i, _parse_value(r, path, lineno)))
    return rows


def load_ratings(
    path,
    format: str = "movielens_dat",
    column_spec: Sequence[str] | None = None,
    scale: tuple[float, float] | None = None,
) -> RatingsDataset:
    """Load a rating file.

    ``movielens_dat`` files use ``UserID::MovieID::Rating::Timestamp`` lines
    and default to the fixed [1, 5] scale. CSV files need a header naming the
    user, item and rating columns (``column_spec``); their scale defaults to
    the observed min/max. Any rating outside ``scale`` is a data error.
    """
    path = Path(path)
    if format not in FORMATS:
        raise UsageError(f"unknown format {format!r}; expected one of {FORMATS}")
    if column_spec is not None and len(column_spec) != 3:
        raise UsageError("column_spec must name user, item and rating columns")
    try:
        if format == "movielens_dat":
            rows = _read_movielens(path)
            scale = MOVIELENS_SCALE if scale is None else scale
        else:
            rows = _read_csv(path, column_spec)
    except (OSError, UnicodeDecodeError) as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    return _build(rows, scale, str(path))


def split_train_test(ds: RatingsDataset, spec: SplitSpec) -> tuple[RatingsDataset, RatingsDataset]:
    """Seeded random split by rating; each half keeps the original row order."""
    n = len(ds)
    if n == 0:
        raise DataError("cannot split an empty dataset")
    n_train = int(np.floor(spec.train_fraction * n + 0.5))
    if n_train == 0 or n_train == n:
        raise DataError(
            f"split of {n} ratings at fraction {spec.train_fraction} leaves an empty half"
        )
    perm = np.random.default_rng(int(spec.seed)).permutation(n)
    train_rows = np.sort(perm[:n_train])
    test_rows = np.sort(perm[n_train:])
    return ds.subset(train_rows), ds.subset(test_rows)


def rating_histogram(ds: RatingsDataset) -> dict[float, int]:
    if len(ds) == 0:
        raise DataError("empty dataset has no histogram")
    counts = Counter(ds.values.tolist())
    return dict(sorted(counts.items()))


def write_movielens(ds: RatingsDataset, path, timestamps=None) -> None:
    """Write ``ds`` as a ``::``-delimited MovieLens file using the original ids."""
    if timestamps is None:
        timestamps = np.zeros(len(ds), dtype=np.int64)
    with open(path, "w", encoding="latin-1") as fh:
        for u, i, v, ts in zip(ds.users.tolist(), ds.items.tolist(), ds.values.tolist(), timestamps):
            value = int(v) if float(v).is_integer() else v
            fh.write(f"{ds.user_ids[u]}::{ds.item_ids[i]}::{value}::{int(ts)}\n")
