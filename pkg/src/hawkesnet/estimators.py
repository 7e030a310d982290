"""Moment statistics of the observed processes and the plug-in estimators.

Everything reads the first K processes on the window (t, 2t] only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSchedule
from .hawkes_sim import EventLog


def half_block_count(t: float, q: int) -> int:
    """m = floor(t^(1 - 4/(q+1))); the window (t, 2t] holds 2m blocks of length Delta_t."""
    if not t >= 1:
        raise DegenerateSchedule(f"t must be >= 1, got {t}")
    if not q > 3:
        raise ValueError(f"q must be > 3, got {q}")
    x = t ** (1.0 - 4.0 / (q + 1))
    r = round(x)
    # pow() can land a hair below an exact integer power
    m = r if abs(x - r) <= 1e-12 * max(1.0, x) else math.floor(x)
    if m < 1:
        raise DegenerateSchedule(f"floor(t^(1-4/(q+1))) = 0 for t={t}, q={q}")
    return int(m)


def delta_schedule(t: float, q: int) -> float:
    """Delta_t = t / (2 floor(t^(1 - 4/(q+1))))."""
    return t / (2 * half_block_count(t, q))


@dataclass(frozen=True)
class EstimatorInput:
    log: EventLog
    N: int
    K: int
    t: float
    q: int = 7

    def __post_init__(self):
        if not 1 <= self.K <= self.N:
            raise ValueError(f"need 1 <= K <= N, got K={self.K}, N={self.N}")
        if self.K > self.log.n:
            raise ValueError(f"K={self.K} exceeds the {self.log.n} processes in the log")
        if not self.t > 0:
            raise ValueError("t must be > 0")
        if 2 * self.t > self.log.horizon * (1 + 1e-12):
            raise ValueError(f"2t = {2 * self.t} exceeds the log horizon {self.log.horizon}")


@dataclass(frozen=True)
class RawStats:
    epsilon: float
    V: float
    X: float
    Z_delta: float
    Z_2delta: float
    W: float
    delta_t: float


def block_boundaries(t: float, m: int) -> np.ndarray:
    """t * k / (2m) for k = 2m .. 4m, computed from the integer k."""
    k = np.arange(2 * m, 4 * m + 1, dtype=np.float64)
    return t * k / (2 * m)


def _boundary_counts(inp: EstimatorInput, m: int) -> np.ndarray:
    """Z_s^i for i < K at every block boundary; shape (K, 2m + 1)."""
    return inp.log.counts_at(block_boundaries(inp.t, m), inp.K)


def raw_stats_from_counts(counts: np.ndarray, N: int, t: float, m: int) -> RawStats:
    """Raw statistics from per-process counts at the 2m + 1 block boundaries."""
    K = counts.shape[0]
    counts = counts.astype(np.float64)
    incr_i = counts[:, -1] - counts[:, 0]
    zbar = counts.mean(axis=0)
    eps = (zbar[-1] - zbar[0]) / t
    V = N / K * float(np.sum((incr_i / t - eps) ** 2)) - N / t * eps
    delta = t / (2 * m)
    d1 = np.diff(zbar)
    z_delta = N / t * float(np.sum((d1 - delta * eps) ** 2))
    d2 = np.diff(zbar[::2])
    z_2delta = N / t * float(np.sum((d2 - 2 * delta * eps) ** 2))
    W = 2 * z_2delta - z_delta
    X = W - (N - K) / K * eps
    return RawStats(epsilon=eps, V=V, X=X, Z_delta=z_delta, Z_2delta=z_2delta, W=W, delta_t=delta)


def raw_stats(inp: EstimatorInput) -> RawStats:
    m = half_block_count(inp.t, inp.q)
    return raw_stats_from_counts(_boundary_counts(inp, m), inp.N, inp.t, m)


def epsilon_hat(inp: EstimatorInput) -> float:
    """(1/t) (Zbar_{2t} - Zbar_t) over the first K processes."""
    c = inp.log.counts_at(np.array([inp.t, 2 * inp.t]), inp.K)
    return float((c[:, 1] - c[:, 0]).mean() / inp.t)


def V_hat(inp: EstimatorInput) -> float:
    c = inp.log.counts_at(np.array([inp.t, 2 * inp.t]), inp.K).astype(np.float64)
    incr = c[:, 1] - c[:, 0]
    eps = incr.mean() / inp.t
    return inp.N / inp.K * float(np.sum((incr / inp.t - eps) ** 2)) - inp.N / inp.t * eps


def X_hat(inp: EstimatorInput) -> float:
    return raw_stats(inp).X


def psi1(u: float, v: float, w: float) -> float:
    """u sqrt(u/w) on u > 0, v > 0, w > u; 0 elsewhere."""
    if u > 0 and v > 0 and w > u:
        return u * math.sqrt(u / w)
    return 0.0


def psi2(u: float, v: float, w: float) -> float:
    if u > 0 and v > 0 and w > u:
        d = u - psi1(u, v, w)
        den = u * d
        return (v + d * d) / den if den > 0 else 0.0
    return 0.0


def psi3(u: float, v: float, w: float) -> float:
    """Connection-probability map; always in [0, 1]."""
    if u > 0 and v > 0 and w > 0:
        s = u * (1.0 - math.sqrt(u / w))
        s2 = s * s
        # written as 1 / (1 + v / s2) so an overflowing s2 still lands in [0, 1]
        return 1.0 / (1.0 + v / s2) if s2 > 0 else 0.0
    return 0.0


@dataclass(frozen=True)
class Estimate:
    mu_hat: float
    Lambda_hat: float
    p_hat: float
    raw: RawStats | None = None


def plug_in(u: float, v: float, w: float, raw: RawStats | None = None) -> Estimate:
    return Estimate(mu_hat=psi1(u, v, w), Lambda_hat=psi2(u, v, w), p_hat=psi3(u, v, w), raw=raw)


def estimate(inp: EstimatorInput) -> Estimate:
    raw = raw_stats(inp)
    return plug_in(raw.epsilon, raw.V, raw.X, raw)
