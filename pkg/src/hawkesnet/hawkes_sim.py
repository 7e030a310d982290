"""Exact simulation of the network Hawkes system by Ogata thinning.

All kernels are non-increasing, so between events every intensity can only go
down and the total intensity just after the current time dominates the total
intensity at any later candidate point.  That makes the left-limit total
intensity a valid thinning bound without any look-ahead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba as nb
import numpy as np

from .errors import ExplosionAbort, OracleDomainError, SeriesFailure
from .kernels import KIND_EXPONENTIAL, KIND_INDICATOR, KIND_ZERO, ModelParams
from .matrix_oracle import GraphAnalysis
from .random_graph import Adjacency, atomic_write_text

DEFAULT_CAP = 10**8
CLUSTER_MAX_N = 32

# status codes returned by the compiled loops
_OK = 0
_CAPPED = 1
_UNSOUND = 2


@dataclass(frozen=True, eq=False)
class EventLog:
    """Per-process event times in CSR layout.

    ``times[offsets[i]:offsets[i + 1]]`` are the strictly increasing event
    times of process ``i``.
    """

    n: int
    horizon: float
    times: np.ndarray
    offsets: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        if self.offsets.shape != (self.n + 1,) or self.offsets[0] != 0 or self.offsets[-1] != self.times.size:
            raise ValueError("offsets inconsistent with times")
        if np.any(np.diff(self.offsets) < 0):
            raise ValueError("offsets must be non-decreasing")
        if self.times.size:
            if self.times.min() <= 0.0 or self.times.max() > self.horizon:
                raise ValueError("event times must lie in (0, horizon]")
            d = np.diff(self.times)
            inner = np.ones(d.size, dtype=bool)
            starts = self.offsets[1:-1]
            starts = starts[(starts > 0) & (starts < self.times.size)]
            inner[starts - 1] = False
            if np.any(d[inner] <= 0.0):
                raise ValueError("per-process event times must be strictly increasing")
        self.times.setflags(write=False)
        self.offsets.setflags(write=False)

    @classmethod
    def from_lists(cls, events, horizon, seed=None) -> EventLog:
        events = [np.asarray(e, dtype=float) for e in events]
        offsets = np.zeros(len(events) + 1, dtype=np.int64)
        np.cumsum([e.size for e in events], out=offsets[1:])
        times = np.concatenate(events) if events else np.empty(0)
        return cls(n=len(events), horizon=float(horizon), times=times, offsets=offsets, seed=seed)

    @property
    def events(self) -> list[np.ndarray]:
        return [self.times[self.offsets[i]:self.offsets[i + 1]] for i in range(self.n)]

    @property
    def total_count(self) -> int:
        return int(self.times.size)

    def process_counts(self) -> np.ndarray:
        return np.diff(self.offsets)

    def counts_at(self, grid, K: int | None = None) -> np.ndarray:
        """Z_s^i for i < K and every s in ``grid``; shape (K, len(grid))."""
        K = self.n if K is None else K
        grid = np.asarray(grid, dtype=float)
        return _counts_at(self.times, self.offsets, K, grid)

    def dump(self, path) -> None:
        """CSV with header ``process,time``, sorted by time then process."""
        proc = np.repeat(np.arange(self.n), self.process_counts())
        order = np.lexsort((proc, self.times))
        # 17 significant digits round-trip every double exactly
        lines = [f"{i},{s:.17g}\n" for i, s in zip(proc[order].tolist(), self.times[order].tolist())]
        atomic_write_text(path, "process,time\n" + "".join(lines))

    @classmethod
    def load(cls, path, n: int, horizon: float, seed=None) -> EventLog:
        """Inverse of ``dump``; malformed rows raise ValueError naming the line."""
        procs, times = [], []
        with open(path) as fh:
            header = fh.readline().strip()
            if header != "process,time":
                raise ValueError(f"{path}:1: expected header 'process,time', got {header!r}")
            for lineno, line in enumerate(fh, start=2):
                line = line.strip()
                if not line:
                    continue
                parts = line.split(",")
                try:
                    if len(parts) != 2:
                        raise ValueError("expected two fields")
                    i, s = int(parts[0]), float(parts[1])
                except ValueError as exc:
                    raise ValueError(f"{path}:{lineno}: malformed row {line!r} ({exc})") from None
                if not 0 <= i < n:
                    raise ValueError(f"{path}:{lineno}: process index {i} outside [0, {n})")
                if not 0.0 < s <= horizon:
                    raise ValueError(f"{path}:{lineno}: time {s!r} outside (0, {horizon}]")
                procs.append(i)
                times.append(s)
        return _from_pairs(np.array(procs, dtype=np.int64), np.array(times, dtype=float), n, horizon, seed)


def _from_pairs(proc, times, n, horizon, seed) -> EventLog:
    order = np.lexsort((times, proc))
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(proc, minlength=n), out=offsets[1:])
    return EventLog(n=n, horizon=float(horizon), times=np.ascontiguousarray(times[order]), offsets=offsets, seed=seed)


@nb.njit(cache=True)
def _counts_at(times, offsets, K, grid):
    out = np.empty((K, grid.size), dtype=np.int64)
    for i in range(K):
        seg = times[offsets[i]:offsets[i + 1]]
        out[i] = np.searchsorted(seg, grid, side="right")
    return out


@nb.njit(cache=True)
def _grow(procs, times):
    m = procs.size * 2
    p2 = np.empty(m, dtype=procs.dtype)
    t2 = np.empty(m, dtype=times.dtype)
    p2[: procs.size] = procs
    t2[: times.size] = times
    return p2, t2


@nb.njit(cache=True)
def _pick(weights, total, u):
    """Index i with P(i) = weights[i] / total; u uniform on [0, 1)."""
    target = u * total
    acc = 0.0
    last = -1
    for i in range(weights.size):
        w = weights[i]
        if w > 0.0:
            acc += w
            last = i
            if target < acc:
                return i
    return last


@nb.njit(cache=True)
def _sim_exponential(offs, tgts, n, mu, alpha, beta, horizon, cap, rng, init_cap):
    # e_i(t) = ehat_i * exp(-beta (t - t0)); common decay keeps ratios fixed
    ehat = np.zeros(n)
    ehat_sum = 0.0
    t0 = 0.0
    jump = alpha / n
    procs = np.empty(init_cap, dtype=np.int32)
    times = np.empty(init_cap, dtype=np.float64)
    count = 0
    t = 0.0
    base = n * mu
    while True:
        lam_bar = base + ehat_sum * math.exp(-beta * (t - t0))
        if lam_bar <= 0.0:
            break
        s = t + rng.exponential(1.0 / lam_bar)
        if s > horizon:
            break
        decay = math.exp(-beta * (s - t0))
        exc = ehat_sum * decay
        lam_s = base + exc
        if lam_s > lam_bar * (1.0 + 1e-12):
            return procs, times, count, _UNSOUND
        t = s
        if rng.random() * lam_bar >= lam_s:
            continue
        # choose the process: baseline part uniform, excitation part by ehat
        if rng.random() * lam_s < base:
            i = min(int(rng.random() * n), n - 1)
        else:
            i = _pick(ehat, ehat_sum, rng.random())
        if count == procs.size:
            procs, times = _grow(procs, times)
        procs[count] = i
        times[count] = s
        count += 1
        if count > cap:
            return procs, times, count, _CAPPED
        if beta * (s - t0) > 300.0:
            # rebase before 1/decay can overflow
            ehat_sum = 0.0
            for k in range(n):
                ehat[k] *= decay
                ehat_sum += ehat[k]
            t0 = s
            decay = 1.0
        add = jump / decay
        for k in range(offs[i], offs[i + 1]):
            ehat[tgts[k]] += add
        ehat_sum += add * (offs[i + 1] - offs[i])
    return procs, times, count, _OK


@nb.njit(cache=True)
def _sim_indicator(offs, tgts, n, mu, height, width, horizon, cap, rng, init_cap):
    # cnt_i = number of live excitations of i; an event at s is live on (s, s + width]
    cnt = np.zeros(n, dtype=np.int64)
    cnt_sum = 0
    jump = height / n
    procs = np.empty(init_cap, dtype=np.int32)
    times = np.empty(init_cap, dtype=np.float64)
    weights = np.empty(n)
    count = 0
    head = 0  # oldest event still live
    t = 0.0
    base = n * mu
    while True:
        lam_bar = base + jump * cnt_sum
        if lam_bar <= 0.0:
            break
        s = t + rng.exponential(1.0 / lam_bar)
        if s > horizon:
            break
        while head < count and times[head] + width < s:
            j = procs[head]
            for k in range(offs[j], offs[j + 1]):
                cnt[tgts[k]] -= 1
            cnt_sum -= offs[j + 1] - offs[j]
            head += 1
        lam_s = base + jump * cnt_sum
        if lam_s > lam_bar * (1.0 + 1e-12):
            return procs, times, count, _UNSOUND
        t = s
        if rng.random() * lam_bar >= lam_s:
            continue
        if rng.random() * lam_s < base:
            i = min(int(rng.random() * n), n - 1)
        else:
            for k in range(n):
                weights[k] = cnt[k]
            i = _pick(weights, float(cnt_sum), rng.random())
        if count == procs.size:
            procs, times = _grow(procs, times)
        procs[count] = i
        times[count] = s
        count += 1
        if count > cap:
            return procs, times, count, _CAPPED
        for k in range(offs[i], offs[i + 1]):
            cnt[tgts[k]] += 1
        cnt_sum += offs[i + 1] - offs[i]
    return procs, times, count, _OK


@nb.njit(cache=True)
def _phi(kind, p0, p1, x):
    if kind == KIND_EXPONENTIAL:
        return p0 * math.exp(-p1 * x)
    if kind == KIND_INDICATOR:
        return p0 if x <= p1 else 0.0
    return 0.0


@nb.njit(cache=True)
def _intensities(lam, theta, procs, times, head, count, mu, kind, p0, p1, at, strict):
    """Fill lam with every lambda_i(at) and return the total."""
    n = lam.size
    for i in range(n):
        lam[i] = mu
    for e in range(head, count):
        d = at - times[e]
        if strict and d <= 0.0:
            continue
        w = _phi(kind, p0, p1, d) / n
        if w == 0.0:
            continue
        j = procs[e]
        for i in range(n):
            if theta[i, j]:
                lam[i] += w
    tot = 0.0
    for i in range(n):
        tot += lam[i]
    return tot


@nb.njit(cache=True)
def _sim_generic(theta, n, mu, kind, p0, p1, window, horizon, cap, rng, init_cap):
    """Direct evaluation of every intensity from the event history.

    Events older than ``window`` are dropped; O(history * n) per candidate,
    meant for cross-checking the specialized loops at small n.
    """
    procs = np.empty(init_cap, dtype=np.int32)
    times = np.empty(init_cap, dtype=np.float64)
    lam = np.empty(n)
    count = 0
    head = 0
    t = 0.0

    while True:
        while head < count and t - times[head] > window:
            head += 1
        # right limit at t: an event exactly at t already contributes phi(0)
        lam_bar = _intensities(lam, theta, procs, times, head, count, mu, kind, p0, p1, t, False)
        if lam_bar <= 0.0:
            break
        s = t + rng.exponential(1.0 / lam_bar)
        if s > horizon:
            break
        lam_s = _intensities(lam, theta, procs, times, head, count, mu, kind, p0, p1, s, True)
        if lam_s > lam_bar * (1.0 + 1e-12):
            return procs, times, count, _UNSOUND
        t = s
        if rng.random() * lam_bar >= lam_s:
            continue
        i = _pick(lam, lam_s, rng.random())
        if count == procs.size:
            procs, times = _grow(procs, times)
        procs[count] = i
        times[count] = s
        count += 1
        if count > cap:
            return procs, times, count, _CAPPED
    return procs, times, count, _OK


@nb.njit(cache=True)
def _sim_poisson(n, mu, horizon, cap, rng):
    """Independent rate-mu Poisson processes, already in CSR order."""
    expect = mu * horizon
    init = int(n * (expect + 6.0 * math.sqrt(expect) + 16.0))
    times = np.empty(init, dtype=np.float64)
    offsets = np.zeros(n + 1, dtype=np.int64)
    count = 0
    scale = 1.0 / mu
    for i in range(n):
        t = rng.exponential(scale)
        while t <= horizon:
            if count == times.size:
                t2 = np.empty(times.size * 2, dtype=np.float64)
                t2[:count] = times[:count]
                times = t2
            times[count] = t
            count += 1
            if count > cap:
                return times, offsets, count, _CAPPED
            t += rng.exponential(scale)
        offsets[i + 1] = count
    return times, offsets, count, _OK


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed & ((1 << 64) - 1)))


def _finish(procs, times, count, status, n, horizon, seed, cap):
    if status == _CAPPED:
        raise ExplosionAbort(f"event count exceeded the cap of {cap}")
    if status == _UNSOUND:
        raise AssertionError("thinning acceptance probability exceeded 1")
    procs = procs[:count].astype(np.int64)
    times = times[:count]
    order = np.argsort(procs, kind="stable")  # time order survives within a process
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(procs, minlength=n), out=offsets[1:])
    return EventLog(n=n, horizon=float(horizon), times=np.ascontiguousarray(times[order]), offsets=offsets, seed=seed)


def simulate(
    adj: Adjacency,
    params: ModelParams,
    horizon: float,
    seed: int,
    cap: int = DEFAULT_CAP,
    method: str = "auto",
) -> EventLog:
    """Sample the system on [0, horizon].

    Parameters
    ----------
    adj : Adjacency
    params : ModelParams
    horizon : float
    seed : int
        64-bit seed; the same inputs always give the same log.
    cap : int
        Abort with ExplosionAbort once more than ``cap`` events occur.
    method : {"auto", "generic"}
        "generic" evaluates intensities from the raw history instead of the
        kernel-specific recursions (slow, for cross-checks).

    Supercritical parameters are allowed; they usually end at the cap.
    """
    if not horizon > 0:
        raise ValueError("horizon must be > 0")
    n = adj.n
    kernel = params.kernel
    kind, p0, p1 = kernel.packed()
    rng = make_rng(seed)
    mu = float(params.mu)
    init_cap = max(1024, min(int(2 * n * mu * horizon) + 1024, 1 << 26))

    if method == "generic":
        window = kernel.support if math.isfinite(kernel.support) else 40.0 / p1
        theta = np.ascontiguousarray(adj.theta)
        out = _sim_generic(theta, n, mu, kind, float(p0), float(p1), float(window), float(horizon), int(cap), rng, init_cap)
        return _finish(*out, n, horizon, seed, cap)
    if method != "auto":
        raise ValueError(f"unknown method {method!r}")

    if kind == KIND_ZERO or adj.n_edges == 0 or kernel.peak == 0.0:
        times, offsets, count, status = _sim_poisson(n, mu, float(horizon), int(cap), rng)
        if status == _CAPPED:
            raise ExplosionAbort(f"event count exceeded the cap of {cap}")
        return EventLog(n=n, horizon=float(horizon), times=times[:count].copy(), offsets=offsets, seed=seed)

    offs, tgts = adj.out_neighbors()
    if kind == KIND_EXPONENTIAL:
        out = _sim_exponential(offs, tgts, n, mu, float(p0), float(p1), float(horizon), int(cap), rng, init_cap)
    elif kind == KIND_INDICATOR:
        out = _sim_indicator(offs, tgts, n, mu, float(p0), float(p1), float(horizon), int(cap), rng, init_cap)
    else:
        raise ValueError(f"unsupported kernel kind {kind}")
    return _finish(*out, n, horizon, seed, cap)


def simulate_cluster_oracle(adj: Adjacency, params: ModelParams, horizon: float, seed: int) -> EventLog:
    """Immigration-birth sampler, used only to cross-check ``simulate``.

    Immigrants arrive on every process at rate mu.  An event on j produces
    Poisson(Lambda / N) children on each i with theta_ij = 1, displaced by
    delays drawn from phi / Lambda.  Children past the horizon are dropped.
    """
    n = adj.n
    if n > CLUSTER_MAX_N:
        raise OracleDomainError(f"cluster oracle needs N <= {CLUSTER_MAX_N}, got {n}")
    lam = params.Lambda
    if lam * adj.row_sums.max() / n >= 1.0:
        raise OracleDomainError("cluster oracle needs Lambda * max row sum / N < 1")
    if not horizon > 0:
        raise ValueError("horizon must be > 0")
    rng = make_rng(seed)
    counts = rng.poisson(params.mu * horizon, size=n)
    gen_proc = np.repeat(np.arange(n), counts)
    gen_time = rng.uniform(0.0, horizon, size=gen_proc.size)
    all_proc = [gen_proc]
    all_time = [gen_time]
    offs, tgts = adj.out_neighbors()
    while lam > 0 and gen_proc.size:
        deg = offs[gen_proc + 1] - offs[gen_proc]
        parent = np.repeat(np.arange(gen_proc.size), deg)
        # position of each (parent, target) pair inside the parent's CSR row
        within = np.arange(parent.size) - np.repeat(np.cumsum(deg) - deg, deg)
        child_target = tgts[offs[gen_proc[parent]] + within]
        kids = rng.poisson(lam / n, size=parent.size)
        child_proc = np.repeat(child_target, kids)
        child_time = np.repeat(gen_time[parent], kids) + params.kernel.sample_delays(rng, int(kids.sum()))
        keep = child_time <= horizon
        gen_proc, gen_time = child_proc[keep], child_time[keep]
        all_proc.append(gen_proc)
        all_time.append(gen_time)
    proc = np.concatenate(all_proc)
    time = np.concatenate(all_time)
    keep = time > 0.0
    return _from_pairs(proc[keep], time[keep], n, horizon, seed)


def expected_counts(
    analysis: GraphAnalysis | None,
    adj: Adjacency,
    params: ModelParams,
    t: float,
    grid: float,
    K: int | None = None,
) -> np.ndarray:
    """E_theta[Z_t^i] for the first K processes, by series expansion.

    Term n is mu * (int_0^t (t - s) phi^{*n}(s) ds) * (A^n 1)_i; the n-fold
    convolution is carried on a uniform grid of step ``grid`` using cell masses
    of phi, with each convolution shifted by half a cell.
    """
    n = adj.n
    if K is None:
        K = analysis.K if analysis is not None else n
    if not 1 <= K <= n:
        raise ValueError("need 1 <= K <= N")
    if not (grid > 0 and grid <= t / 100.0):
        raise ValueError("grid must lie in (0, t/100]")
    lam = params.Lambda
    if lam * adj.row_sums.max() / n >= 1.0:
        raise SeriesFailure("Lambda * |||A_N|||_inf >= 1: series need not converge")
    mu = params.mu
    m = int(round(t / grid))
    h = t / m
    edges = np.arange(m + 1) * h
    # mass of phi on each cell [k h, (k+1) h)
    cell = np.diff(params.kernel.cumulative(edges))
    theta = adj.dense()
    vec = np.ones(n)
    out = np.full(K, mu * t)
    mass = np.zeros(m)  # phi^{*n} cell masses, cell k centred at (k + n/2) h
    tol = 1e-10 * mu * t
    for order in range(1, 10**4 + 1):
        vec = theta @ vec / n
        if order == 1:
            mass = cell.copy()
        else:
            mass = np.convolve(mass, cell)[:m]
        centers = (np.arange(m) + 0.5 * order) * h
        weight = np.where(centers < t, t - centers, 0.0)
        term_scalar = mu * float(np.dot(mass, weight))
        term = term_scalar * vec[:K]
        out += term
        if (term_scalar * np.abs(vec).max() if vec.size else 0.0) < tol:
            return out
    raise SeriesFailure("series did not converge within 10^4 terms")
