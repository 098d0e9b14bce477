"""Sampling of observation patterns, binary observations and test matrices.

Random streams come from numpy's counter-based Philox generator keyed by a
64-bit seed (see :func:`make_rng`), so every draw is reproducible across
platforms and numpy versions that keep the Philox stream stable.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .links import Link
from .linalg import as_matrix

__all__ = [
    "ObservationSet",
    "make_rng",
    "sample_omega",
    "sample_observations",
    "sample_observations_latent",
    "synth_low_rank",
]


def make_rng(seed: int, *substream: int) -> np.random.Generator:
    """Philox generator for `seed`, optionally on a numbered substream."""
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    ss = np.random.SeedSequence(seed, spawn_key=tuple(int(s) for s in substream))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class ObservationSet:
    """Binary observations ``y[k]`` in {-1, +1} at entries ``(rows[k], cols[k])``."""

    d1: int
    d2: int
    rows: np.ndarray
    cols: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.int64).reshape(-1)
        cols = np.asarray(self.cols, dtype=np.int64).reshape(-1)
        y = np.asarray(self.y, dtype=np.int8).reshape(-1)
        if self.d1 < 1 or self.d2 < 1:
            raise ValueError("dimensions must be positive")
        if not (rows.size == cols.size == y.size):
            raise ValueError("rows, cols and y must have equal length")
        if rows.size:
            if rows.min() < 0 or rows.max() >= self.d1 or cols.min() < 0 or cols.max() >= self.d2:
                raise ValueError("observation index out of range")
            if not np.all(np.abs(y) == 1):
                raise ValueError("observations must be -1 or +1")
            flat = rows * self.d2 + cols
            if np.unique(flat).size != flat.size:
                raise ValueError("duplicate (i, j) in observation set")
        for name, arr in (("rows", rows), ("cols", cols), ("y", y)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_entries(cls, d1: int, d2: int, entries) -> "ObservationSet":
        entries = list(entries)
        if not entries:
            return cls(d1, d2, np.zeros(0), np.zeros(0), np.zeros(0))
        i, j, y = zip(*entries)
        return cls(d1, d2, np.array(i), np.array(j), np.array(y))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.d1, self.d2)

    def __len__(self) -> int:
        return int(self.y.size)

    def entries(self) -> list[tuple[int, int, int]]:
        return list(zip(self.rows.tolist(), self.cols.tolist(), self.y.tolist()))

    def subset(self, index) -> "ObservationSet":
        return ObservationSet(self.d1, self.d2, self.rows[index], self.cols[index], self.y[index])


def sample_omega(d1: int, d2: int, n: float, seed: int) -> np.ndarray:
    """Binomial sampling pattern: each entry kept independently with prob ``n/(d1 d2)``.

    Returns an ``(|Omega|, 2)`` integer array of ``(i, j)`` pairs in row-major order.
    """
    if n < 0 or n > d1 * d2:
        raise ValueError(f"n must lie in [0, d1*d2] = [0, {d1 * d2}], got {n}")
    p = n / (d1 * d2)
    u = make_rng(seed).random((d1, d2))
    return np.argwhere(u < p)


def _omega_arrays(omega, d1, d2):
    omega = np.asarray(omega, dtype=np.int64).reshape(-1, 2)
    return omega[:, 0], omega[:, 1]


def sample_observations(m, omega, link: Link, seed: int) -> ObservationSet:
    """Draw ``y = +1`` with probability ``f(m[i, j])`` for every ``(i, j)`` in `omega`."""
    m = as_matrix(m, "m")
    d1, d2 = m.shape
    rows, cols = _omega_arrays(omega, d1, d2)
    p = link.eval(m[rows, cols]) if rows.size else np.zeros(0)
    u = make_rng(seed).random(rows.size)
    y = np.where(u < p, 1, -1)
    return ObservationSet(d1, d2, rows, cols, y)


def sample_observations_latent(m, omega, sigma: float, seed: int) -> ObservationSet:
    """Latent-variable form: ``y = sign(m[i, j] + z)`` with ``z ~ N(0, sigma^2)``.

    Ties (``m + z == 0``) map to +1. In distribution this matches
    :func:`sample_observations` with a probit link of the same `sigma`.
    """
    m = as_matrix(m, "m")
    d1, d2 = m.shape
    rows, cols = _omega_arrays(omega, d1, d2)
    z = sigma * make_rng(seed).standard_normal(rows.size)
    y = np.where(m[rows, cols] + z >= 0, 1, -1)
    return ObservationSet(d1, d2, rows, cols, y)


def synth_low_rank(d1: int, d2: int, r: int, seed: int) -> np.ndarray:
    """Random rank-`r` matrix ``M1 @ M2.T`` with U[-1/2, 1/2] factors, scaled to max-abs 1."""
    if not 1 <= r <= min(d1, d2):
        raise ValueError(f"rank must lie in [1, {min(d1, d2)}], got {r}")
    attempt = 0
    while True:
        rng = make_rng(seed, attempt) if attempt else make_rng(seed)
        m1 = rng.random((d1, r)) - 0.5
        m2 = rng.random((d2, r)) - 0.5
        m = m1 @ m2.T
        peak = np.max(np.abs(m))
        if peak > 0:
            return m / peak
        attempt += 1
