"""Ratings ingestion, binarisation, and text/JSON persistence.

File formats
------------
Matrix CSV
    Header ``rows,cols`` then one matrix row per line, entries written with
    17 significant digits so that reading back is bit-exact.
Observation file
    Header ``d1,d2`` then one ``i,j,y`` line per observation, ``y`` in {-1, 1}.
Result JSON
    ``{"schema": "bitmc.result", "version": 1, "config", "seed", "metrics",
    "solver"}``.
"""
from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .obsmodel import ObservationSet, make_rng

__all__ = [
    "RatingsTable",
    "SplitObservations",
    "ParseError",
    "SchemaError",
    "parse_ratings",
    "binarize_split",
    "write_matrix",
    "read_matrix",
    "write_observations",
    "read_observations",
    "write_result",
    "read_result",
    "RESULT_SCHEMA",
    "RESULT_VERSION",
]

RESULT_SCHEMA = "bitmc.result"
RESULT_VERSION = 1


class ParseError(ValueError):
    pass


class SchemaError(ValueError):
    pass


@dataclass(frozen=True)
class RatingsTable:
    """Explicit ratings with user/item ids remapped to contiguous indices."""

    users: np.ndarray  # row index per record
    items: np.ndarray  # column index per record
    ratings: np.ndarray
    timestamps: Optional[np.ndarray]
    user_ids: tuple  # index -> original id
    item_ids: tuple

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.user_ids), len(self.item_ids))

    def __len__(self) -> int:
        return int(self.ratings.size)

    def records(self):
        ts = self.timestamps if self.timestamps is not None else [None] * len(self)
        for u, i, r, t in zip(self.users, self.items, self.ratings, ts):
            yield (self.user_ids[u], self.item_ids[i], float(r), None if t is None else int(t))


@dataclass(frozen=True)
class SplitObservations:
    train: ObservationSet
    holdout: list  # (i, j, original_rating, label)
    threshold: float


def _id(token: str):
    try:
        return int(token)
    except ValueError:
        return token


def parse_ratings(path, format: str = "tsv_uirt") -> RatingsTable:
    """Read a ratings file.

    ``tsv_uirt`` is ``user<TAB>item<TAB>rating<TAB>timestamp`` (MovieLens
    ``u.data``); ``csv_uir`` is ``user,item,rating``. Blank lines are skipped.
    A repeated (user, item) pair keeps the last rating and warns.
    """
    if format == "tsv_uirt":
        sep, width = "\t", 4
    elif format == "csv_uir":
        sep, width = ",", 3
    else:
        raise ValueError(f"unknown ratings format {format!r}")

    latest: dict = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            parts = [p.strip() for p in line.split(sep)]
            if len(parts) != width:
                raise ParseError(f"{path}:{lineno}: expected {width} fields, got {len(parts)}")
            try:
                rating = float(parts[2])
                ts = int(parts[3]) if width == 4 else None
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from None
            if not math.isfinite(rating):
                raise ParseError(f"{path}:{lineno}: rating is not finite")
            key = (_id(parts[0]), _id(parts[1]))
            if key in latest:
                warnings.warn(f"{path}:{lineno}: duplicate rating for {key}, keeping the last", stacklevel=2)
                del latest[key]
            latest[key] = (rating, ts)

    user_ids = tuple(sorted({u for u, _ in latest}, key=_sort_key))
    item_ids = tuple(sorted({i for _, i in latest}, key=_sort_key))
    umap = {u: k for k, u in enumerate(user_ids)}
    imap = {i: k for k, i in enumerate(item_ids)}
    keys = list(latest)
    users = np.array([umap[u] for u, _ in keys], dtype=np.int64)
    items = np.array([imap[i] for _, i in keys], dtype=np.int64)
    ratings = np.array([latest[k][0] for k in keys], dtype=np.float64)
    timestamps = np.array([latest[k][1] for k in keys], dtype=np.int64) if width == 4 else None
    return RatingsTable(users, items, ratings, timestamps, user_ids, item_ids)


def _sort_key(v):
    return (0, v, "") if isinstance(v, int) else (1, 0, v)


def binarize_split(
    table: RatingsTable,
    holdout_fraction: float,
    seed: int,
    threshold: Optional[float] = None,
) -> SplitObservations:
    """Binarise ratings against a global threshold and hold out a random subset.

    The default threshold is the mean of *all* ratings in `table`. Labels
    are +1 for ratings strictly above the threshold and -1 otherwise. The
    holdout has exactly ``round(holdout_fraction * N)`` records.
    """
    if len(table) == 0:
        raise ValueError("ratings table is empty")
    if not 0 < holdout_fraction < 1:
        raise ValueError(f"holdout_fraction must lie in (0, 1), got {holdout_fraction}")
    if threshold is None:
        threshold = float(np.mean(table.ratings))
    labels = np.where(table.ratings > threshold, 1, -1)
    n = len(table)
    n_hold = int(round(holdout_fraction * n))
    perm = make_rng(seed).permutation(n)
    hold_idx = np.sort(perm[:n_hold])
    train_idx = np.sort(perm[n_hold:])
    d1, d2 = table.shape
    train = ObservationSet(d1, d2, table.users[train_idx], table.items[train_idx], labels[train_idx])
    holdout = [
        (int(table.users[k]), int(table.items[k]), float(table.ratings[k]), int(labels[k]))
        for k in hold_idx
    ]
    return SplitObservations(train, holdout, threshold)


def write_matrix(path, a) -> None:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError("matrix must be 2-D")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"{a.shape[0]},{a.shape[1]}\n")
        for row in a:
            fh.write(",".join(f"{v:.17g}" for v in row))
            fh.write("\n")


def read_matrix(path) -> np.ndarray:
    with open(path, encoding="utf-8") as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    if not lines:
        raise ParseError(f"{path}: empty matrix file")
    try:
        rows, cols = (int(t) for t in lines[0].split(","))
    except ValueError:
        raise ParseError(f"{path}:1: bad header {lines[0]!r}") from None
    if len(lines) - 1 != rows:
        raise ParseError(f"{path}: header says {rows} rows, found {len(lines) - 1}")
    out = np.empty((rows, cols))
    for k, line in enumerate(lines[1:]):
        vals = line.split(",")
        if len(vals) != cols:
            raise ParseError(f"{path}:{k + 2}: expected {cols} entries, got {len(vals)}")
        out[k] = [float(v) for v in vals]
    return out


def write_observations(path, obs: ObservationSet) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"{obs.d1},{obs.d2}\n")
        for i, j, y in zip(obs.rows.tolist(), obs.cols.tolist(), obs.y.tolist()):
            fh.write(f"{i},{j},{y}\n")


def read_observations(path) -> ObservationSet:
    with open(path, encoding="utf-8") as fh:
        reader = csv.reader(ln for ln in fh if ln.strip())
        try:
            d1, d2 = (int(t) for t in next(reader))
        except (StopIteration, ValueError):
            raise ParseError(f"{path}:1: missing or bad 'd1,d2' header") from None
        entries = []
        for lineno, row in enumerate(reader, 2):
            try:
                i, j, y = (int(t) for t in row)
            except ValueError:
                raise ParseError(f"{path}:{lineno}: expected 'i,j,y', got {row!r}") from None
            entries.append((i, j, y))
    return ObservationSet.from_entries(d1, d2, entries)


def write_result(path, config: dict, seed, metrics: dict, solver: dict) -> dict:
    doc = {
        "schema": RESULT_SCHEMA,
        "version": RESULT_VERSION,
        "config": config,
        "seed": seed,
        "metrics": metrics,
        "solver": solver,
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True, allow_nan=True) + "\n", encoding="utf-8")
    return doc


def read_result(path) -> dict:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("schema") != RESULT_SCHEMA:
        raise SchemaError(f"{path}: not a result file (schema={doc.get('schema')!r})")
    if doc.get("version") != RESULT_VERSION:
        raise SchemaError(f"{path}: result version {doc.get('version')!r}, expected {RESULT_VERSION}")
    return doc
