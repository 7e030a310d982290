"""Erdos-Renyi(p) influence matrix theta, stored bit-packed.

theta[i, j] = 1 means process j excites process i. Self-loops are allowed.
Entry (i, j) is an addressable draw of a counter-based generator keyed by the
seed, so the matrix is a pure function of (n, p, seed).
"""

from __future__ import annotations

import functools
import os
import tempfile
from dataclasses import dataclass

import numpy as np

from . import _rng


@dataclass(frozen=True, eq=False)
class Adjacency:
    n: int
    bits: np.ndarray
    row_sums: np.ndarray
    col_sums: np.ndarray
    seed: int | None = None
    p: float | None = None

    def __post_init__(self):
        if self.bits.shape != (self.n, (self.n + 7) // 8) or self.bits.dtype != np.uint8:
            raise ValueError("bits must be a uint8 array of shape (n, ceil(n/8))")
        theta = self.theta
        if not (
            np.array_equal(theta.sum(axis=1, dtype=np.int64), self.row_sums)
            and np.array_equal(theta.sum(axis=0, dtype=np.int64), self.col_sums)
        ):
            raise ValueError("row/column sums do not match the packed matrix")
        for arr in (self.bits, self.row_sums, self.col_sums):
            arr.setflags(write=False)

    @classmethod
    def from_dense(cls, theta, seed=None, p=None) -> Adjacency:
        theta = np.asarray(theta)
        if theta.ndim != 2 or theta.shape[0] != theta.shape[1]:
            raise ValueError("theta must be square")
        if not np.isin(theta, (0, 1)).all():
            raise ValueError("theta entries must be 0 or 1")
        theta = theta.astype(np.uint8)
        return cls(
            n=theta.shape[0],
            bits=np.packbits(theta, axis=1),
            row_sums=theta.sum(axis=1, dtype=np.int64),
            col_sums=theta.sum(axis=0, dtype=np.int64),
            seed=seed,
            p=p,
        )

    @functools.cached_property
    def theta(self) -> np.ndarray:
        """Dense 0/1 matrix (uint8), read-only."""
        out = np.unpackbits(self.bits, axis=1, count=self.n)
        out.setflags(write=False)
        return out

    def dense(self, dtype=np.float64) -> np.ndarray:
        return self.theta.astype(dtype)

    def A(self) -> np.ndarray:
        """A_N = theta / N."""
        return self.theta / float(self.n)

    @property
    def n_edges(self) -> int:
        return int(self.row_sums.sum())

    def out_neighbors(self) -> tuple[np.ndarray, np.ndarray]:
        """CSR lists of the processes each j excites: (offsets, targets)."""
        cols = np.ascontiguousarray(self.theta.T)
        offsets = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(self.col_sums, out=offsets[1:])
        targets = np.nonzero(cols)[1].astype(np.int64)
        return offsets, targets

    def dump(self, path) -> None:
        write_adjacency(self, path)


def sample_adjacency(n: int, p: float, seed: int) -> Adjacency:
    """theta_ij i.i.d. Bernoulli(p), entry (i, j) drawn at counter i*n + j."""
    if n < 1:
        raise ValueError("n must be >= 1")
    thr = _rng.bernoulli_threshold(p)
    if p == 0.0 or p == 1.0:
        # every draw lands on the same side of the threshold
        theta = np.full((n, n), int(p), dtype=np.uint8)
    else:
        theta = _rng.bernoulli_matrix(n, np.uint64(_rng.key_of(seed)), np.uint64(thr))
    return Adjacency(
        n=n,
        bits=np.packbits(theta, axis=1),
        row_sums=theta.sum(axis=1, dtype=np.int64),
        col_sums=theta.sum(axis=0, dtype=np.int64),
        seed=seed,
        p=p,
    )


def entry(n: int, p: float, seed: int, i: int, j: int) -> int:
    """theta_ij of sample_adjacency(n, p, seed) without building the matrix."""
    u53 = _rng.draw(seed, i * n + j) >> 11
    return int(u53 < _rng.bernoulli_threshold(p))


@dataclass(frozen=True)
class EventFlags:
    omega_NK: bool
    A_N: bool


def check_events(adj: Adjacency, Lambda: float, K: int, p: float | None = None) -> EventFlags:
    """Flags for the high-probability events Omega_{N,K} and script-A_N.

    Omega_{N,K} is certified from the r = 1 and r = inf operator norms only;
    intermediate r follow from |||M|||_r <= |||M|||_1^(1/r) |||M|||_inf^(1-1/r).
    """
    p = adj.p if p is None else p
    if p is None:
        raise ValueError("p is required when the adjacency does not carry it")
    n = adj.n
    if not 1 <= K <= n:
        raise ValueError("need 1 <= K <= n")
    if Lambda * p >= 1:
        raise ValueError("Lambda * p must be < 1 for the threshold a to be defined")
    a = (1.0 + Lambda * p) / 2.0
    theta = adj.theta
    norm1 = adj.col_sums.max() / n
    norm_inf = adj.row_sums.max() / n
    ik_a_norm1 = theta[:K].sum(axis=0, dtype=np.int64).max() / n
    a_ik_norm_inf = theta[:, :K].sum(axis=1, dtype=np.int64).max() / n
    omega = bool(
        Lambda * norm1 <= a
        and Lambda * norm_inf <= a
        and Lambda * (n / K) * ik_a_norm1 <= a
        and Lambda * (n / K) * a_ik_norm_inf <= a
    )
    L = adj.row_sums / n
    C = adj.col_sums / n
    a_n = bool(np.linalg.norm(L - p) + np.linalg.norm(C - p) <= n**0.25)
    return EventFlags(omega_NK=omega, A_N=a_n)


def write_adjacency(adj: Adjacency, path) -> None:
    """Text dump: first line N, then N lines of N '0'/'1' characters."""
    rows = (adj.theta + ord("0")).astype(np.uint8)
    body = "\n".join(r.tobytes().decode("ascii") for r in rows)
    atomic_write_text(path, f"{adj.n}\n{body}\n")


def read_adjacency(path) -> Adjacency:
    with open(path) as fh:
        lines = fh.read().split()
    if not lines:
        raise ValueError(f"{path}: empty adjacency file")
    n = int(lines[0])
    rows = lines[1:]
    if len(rows) != n or any(len(r) != n for r in rows):
        raise ValueError(f"{path}: expected {n} rows of {n} characters")
    theta = np.frombuffer("".join(rows).encode("ascii"), dtype=np.uint8).reshape(n, n) - ord("0")
    return Adjacency.from_dense(theta)


def atomic_write_text(path, text: str) -> None:
    """Write to a temporary sibling, then rename over ``path``."""
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
