"""Slow, direct reimplementations used to check the package.

Nothing here imports the code under test except plain data types.
"""

import math
from fractions import Fraction

import numpy as np


def neumann_ell(theta, Lambda, terms=200):
    """ell = sum_{n < terms} (Lambda A)^n 1 with A = theta / N."""
    theta = np.asarray(theta, dtype=float)
    n = theta.shape[0]
    M = Lambda * theta / n
    v = np.ones(n)
    acc = np.zeros(n)
    for _ in range(terms):
        acc += v
        v = M @ v
    return acc


def neumann_c(theta, Lambda, K, terms=200):
    """c^K = sum_n (Lambda A^T)^n 1_K."""
    theta = np.asarray(theta, dtype=float)
    n = theta.shape[0]
    M = Lambda * theta.T / n
    v = np.zeros(n)
    v[:K] = 1.0
    acc = np.zeros(n)
    for _ in range(terms):
        acc += v
        v = M @ v
    return acc


def limit_scalars(theta, Lambda, mu, K):
    """V_inf, A_inf, W_inf, X_inf straight from the definitions, via inverses."""
    theta = np.asarray(theta, dtype=float)
    n = theta.shape[0]
    Q = np.linalg.inv(np.eye(n) - Lambda * theta / n)
    ell = Q @ np.ones(n)
    c = Q.T @ np.r_[np.ones(K), np.zeros(n - K)]
    x = ell[:K] - ell[:K].mean()
    V = n * mu**2 / K * float(x @ x)
    A = sum(c[j] ** 2 * ell[j] for j in range(n))
    W = mu * n / K**2 * A
    X = W - (n - K) * mu / K * ell[:K].mean()
    return V, A, W, X


def omega_flags(theta, Lambda, K, p):
    """Omega_{N,K} checks using numpy's own matrix norms."""
    theta = np.asarray(theta, dtype=float)
    n = theta.shape[0]
    A = theta / n
    a = (1 + Lambda * p) / 2
    IK = np.diag(np.r_[np.ones(K), np.zeros(n - K)])
    ok = (
        Lambda * np.linalg.norm(A, 1) <= a
        and Lambda * np.linalg.norm(A, np.inf) <= a
        and Lambda * n / K * np.linalg.norm(IK @ A, 1) <= a
        and Lambda * n / K * np.linalg.norm(A @ IK, np.inf) <= a
    )
    L = theta.sum(axis=1) / n
    C = theta.sum(axis=0) / n
    an = math.hypot(*(L - p)) + math.hypot(*(C - p)) <= n**0.25 if n > 0 else True
    return bool(ok), bool(an)


def count_le(events, s):
    return sum(1 for x in events if x <= s)


def raw_stats_direct(events, N, K, t, q):
    """Every statistic from its defining sum, one process and one block at a time."""
    m = math.floor(t ** (1 - 4 / (q + 1)) + 1e-9)
    delta = t / (2 * m)

    def zbar(s):
        return sum(count_le(events[i], s) for i in range(K)) / K

    eps = (zbar(2 * t) - zbar(t)) / t
    V = N / K * sum(((count_le(events[i], 2 * t) - count_le(events[i], t)) / t - eps) ** 2 for i in range(K))
    V -= N / t * eps

    def Z(d):
        nblocks = round(t / d)
        tot = 0.0
        for a in range(nblocks + 1, 2 * nblocks + 1):
            hi = t * Fraction(a, nblocks)
            lo = t * Fraction(a - 1, nblocks)
            tot += (zbar(float(hi)) - zbar(float(lo)) - d * eps) ** 2
        return N / t * tot

    z1, z2 = Z(delta), Z(2 * delta)
    W = 2 * z2 - z1
    X = W - (N - K) / K * eps
    return eps, V, X, delta


def normal_quantile_bisect(prob):
    """Phi^{-1} by bisection on Phi(x) = erfc(-x / sqrt 2) / 2."""
    lo, hi = -40.0, 40.0
    for _ in range(200):
        mid = (lo + hi) / 2
        if 0.5 * math.erfc(-mid / math.sqrt(2)) < prob:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


def ks_direct(samples, sd):
    """Sup distance, evaluated on both sides of every jump of the ECDF."""
    x = sorted(samples)
    n = len(x)
    best = 0.0
    for i, v in enumerate(x):
        F = 0.5 * math.erfc(-v / (sd * math.sqrt(2)))
        best = max(best, abs((i + 1) / n - F), abs(i / n - F))
    return best


def splitmix64_stream(seed, count):
    """Sequential SplitMix64 (state += golden; output = mix(state))."""
    mask = (1 << 64) - 1
    golden = 0x9E3779B97F4A7C15

    def fin(z):
        z &= mask
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & mask
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & mask
        return z ^ (z >> 31)

    state = fin((seed & mask) + golden)
    out = []
    for _ in range(count):
        state = (state + golden) & mask
        out.append(fin(state))
    return out
