"""Replicated experiments: graph -> simulate -> estimate, plus graph-only runs.

Replicate r owns the seed ``mix(master_seed, r)``; the graph and the event
streams are keyed off that seed, so results do not depend on scheduling.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from . import _rng
from .asymptotics import (
    SEPARATION_THRESHOLD,
    RateTerms,
    TheoreticalLaw,
    confidence_interval,
    rate_terms,
    theoretical_law,
)
from .errors import DegenerateEstimate, ExplosionAbort, SpectralFailure
from .estimators import EstimatorInput, estimate
from .hawkes_sim import simulate
from .kernels import ModelParams
from .matrix_oracle import analyze_graph, ell_bar_limit, limit_triple
from .random_graph import atomic_write_text, check_events, sample_adjacency

MODES = ("full", "matrix_only", "p_zero")
REPLICATE_COLUMNS = ("index", "omega", "p_hat", "mu_hat", "lambda_hat", "epsilon", "V", "X", "z")


@dataclass(frozen=True)
class ExperimentConfig:
    params: ModelParams
    N: int
    K: int
    t: float = 1.0
    q: int = 7
    replicates: int = 1
    master_seed: int = 0
    mode: str = "full"
    separation_threshold: float = SEPARATION_THRESHOLD
    alpha: float = 0.05
    regime_override: str | None = None
    workers: int = 1
    scaling_sizes: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        if not 1 <= self.K <= self.N:
            raise ValueError(f"need 1 <= K <= N, got K={self.K}, N={self.N}")
        if self.mode == "p_zero" and self.params.p != 0.0:
            raise ValueError("mode p_zero requires p = 0")
        if self.mode != "matrix_only" and not self.t >= 1:
            raise ValueError("t must be >= 1")
        if self.regime_override not in (None, "i", "ii", "iii"):
            raise ValueError("regime_override must be one of i, ii, iii")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass
class MCReport:
    config: ExperimentConfig
    records: list[dict]
    z: np.ndarray
    summary: dict
    law: TheoreticalLaw | None = None
    terms: RateTerms | None = None
    scaling: list[dict] = field(default_factory=list)

    def write(self, output_dir) -> None:
        os.makedirs(output_dir, exist_ok=True)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(REPLICATE_COLUMNS)
        for rec in self.records:
            w.writerow([_fmt(rec.get(c, math.nan)) for c in REPLICATE_COLUMNS])
        atomic_write_text(os.path.join(output_dir, "replicates.csv"), buf.getvalue())
        summary = {k: _json_number(v) for k, v in self.summary.items()}
        atomic_write_text(os.path.join(output_dir, "summary.json"), json.dumps(summary, indent=2, sort_keys=True) + "\n")
        if self.scaling:
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            cols = list(self.scaling[0])
            w.writerow(cols)
            for row in self.scaling:
                w.writerow([_fmt(row[c]) for c in cols])
            atomic_write_text(os.path.join(output_dir, "scaling.csv"), buf.getvalue())


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _json_number(x):
    if isinstance(x, (bool, np.bool_)):
        return int(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    x = float(x)
    return x if math.isfinite(x) else None


def replicate_seed(master_seed: int, index: int) -> int:
    return _rng.mix(master_seed, index)


def ks_distance(samples, sd: float) -> float:
    """Kolmogorov-Smirnov sup distance between the sample ECDF and N(0, sd^2).

    Returns nan when sd is not a positive finite number.
    """
    x = np.sort(np.asarray(samples, dtype=float))
    if x.size < 20:
        raise ValueError("ks_distance needs at least 20 samples")
    if not (math.isfinite(sd) and sd > 0):
        return math.nan
    n = x.size
    F = ndtr(x / sd)
    above = np.arange(1, n + 1) / n - F
    below = F - np.arange(0, n) / n
    return float(max(above.max(), below.max()))


def _moments(z: np.ndarray) -> dict:
    out = {"n_z": int(z.size), "mean": math.nan, "sd": math.nan, "skew": math.nan, "sd_undefined": 1}
    if z.size:
        out["mean"] = float(z.mean())
    if z.size >= 2:
        sd = float(z.std(ddof=1))
        out["sd"] = sd
        out["sd_undefined"] = 0
        if sd > 0:
            out["skew"] = float(np.mean((z - z.mean()) ** 3) / z.std() ** 3)
    return out


def _full_replicate(cfg: ExperimentConfig, index: int) -> dict:
    seed = replicate_seed(cfg.master_seed, index)
    params = cfg.params
    adj = sample_adjacency(cfg.N, params.p, _rng.mix(seed, 0))
    rec: dict = {"index": index, "excluded": 0, "reason": ""}
    rec["omega"] = check_events(adj, params.Lambda, cfg.K, params.p).omega_NK
    try:
        log = simulate(adj, params, 2 * cfg.t, _rng.mix(seed, 1))
    except ExplosionAbort as exc:
        rec.update(excluded=1, reason=f"explosion: {exc}")
        return rec
    est = estimate(EstimatorInput(log=log, N=cfg.N, K=cfg.K, t=cfg.t, q=cfg.q))
    raw = est.raw
    rec.update(
        p_hat=est.p_hat, mu_hat=est.mu_hat, lambda_hat=est.Lambda_hat,
        epsilon=raw.epsilon, V=raw.V, X=raw.X, delta_t=raw.delta_t, events=log.total_count,
    )
    try:
        rec["ci_half"] = confidence_interval(est, cfg.N, cfg.K, cfg.t, raw.delta_t, cfg.K / cfg.N, cfg.alpha)
    except DegenerateEstimate:
        rec["ci_half"] = math.nan
    return rec


def _matrix_replicate(cfg: ExperimentConfig, index: int, N: int, K: int) -> dict:
    seed = replicate_seed(cfg.master_seed, index)
    params = cfg.params
    adj = sample_adjacency(N, params.p, seed)
    rec: dict = {"index": index, "excluded": 0, "reason": ""}
    rec["omega"] = check_events(adj, params.Lambda, K, params.p).omega_NK
    try:
        an = analyze_graph(adj, params.Lambda, params.mu, K)
    except SpectralFailure as exc:
        rec.update(excluded=1, reason=f"spectral: {exc}")
        return rec
    rec.update(V=an.V_inf, X=an.X_inf, ell_bar_K=an.ell_bar_K, epsilon=params.mu * an.ell_bar_K)
    return rec


def _run_one(args):
    kind, cfg, index, extra = args
    if kind == "full":
        return _full_replicate(cfg, index)
    return _matrix_replicate(cfg, index, *extra)


def _map_replicates(cfg: ExperimentConfig, kind: str, extra=(), count=None, offset=0) -> list[dict]:
    count = cfg.replicates if count is None else count
    jobs = [(kind, cfg, offset + r, extra) for r in range(count)]
    if cfg.workers > 1 and count > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            out = list(pool.map(_run_one, jobs, chunksize=max(1, count // (4 * cfg.workers))))
    else:
        out = [_run_one(j) for j in jobs]
    out.sort(key=lambda r: r["index"])
    return out


def run_experiment(cfg: ExperimentConfig) -> MCReport:
    """Simulate and estimate ``cfg.replicates`` independent systems."""
    if cfg.mode == "matrix_only":
        return run_matrix_experiment(cfg)
    start = time.perf_counter()
    params = cfg.params
    terms = rate_terms(cfg.N, cfg.K, cfg.t, cfg.q, cfg.separation_threshold)
    law = None
    regime = cfg.regime_override or terms.dominant
    if cfg.mode == "full":
        if regime == "mixed":
            warnings.warn(
                f"no dominant rate term (separation {terms.separation:.3g} < {cfg.separation_threshold}); "
                "normalized errors are not computed",
                stacklevel=2,
            )
        elif params.p > 0:
            law = theoretical_law(params, terms, regime)

    records = _map_replicates(cfg, "full")
    kept = [r for r in records if not r["excluded"]]
    p_hat = np.array([r["p_hat"] for r in kept])
    for r in records:
        r["z"] = law.scale * (r["p_hat"] - params.p) if (law is not None and not r["excluded"]) else math.nan
        ci = r.get("ci_half", math.nan)
        r["covered"] = bool(math.isfinite(ci) and abs(r.get("p_hat", math.nan) - params.p) <= ci)
    z = np.array([r["z"] for r in kept if math.isfinite(r["z"])])

    summary = {
        "replicates": cfg.replicates,
        "excluded": len(records) - len(kept),
        "omega_fraction": float(np.mean([r["omega"] for r in records])),
        "p_hat_mean": float(p_hat.mean()) if p_hat.size else math.nan,
        "r1": terms.r1, "r2": terms.r2, "r3": terms.r3, "gamma": terms.gamma,
        "delta_t": terms.delta_t, "separation": terms.separation,
        "regime_mixed": int(terms.dominant == "mixed"),
        "regime_forced": int(cfg.regime_override is not None),
        "threshold": cfg.separation_threshold,
    }
    summary.update(_moments(z))
    if law is not None:
        summary["law_variance"] = law.variance
        summary["law_sd"] = law.sd
        summary["sd_ratio"] = summary["sd"] / law.sd if z.size >= 2 else math.nan
        summary["ks_distance"] = ks_distance(z, law.sd) if z.size >= 20 else math.nan
    if kept:
        summary["ci_coverage"] = float(np.mean([r["covered"] for r in kept]))
        summary["ci_degenerate"] = int(sum(not math.isfinite(r["ci_half"]) for r in kept))
        summary["alpha"] = cfg.alpha
    if cfg.mode == "p_zero" and p_hat.size:
        summary["frac_p_hat_below_0.1"] = float(np.mean(p_hat < 0.1))
        summary["frac_p_hat_above_0.9"] = float(np.mean(p_hat > 0.9))
        summary["case_ratio"] = terms.r3 / terms.r2**2
    summary["runtime_s"] = time.perf_counter() - start
    return MCReport(config=cfg, records=records, z=z, summary=summary, law=law, terms=terms)


def run_matrix_experiment(cfg: ExperimentConfig) -> MCReport:
    """Graph-only replicates: V_inf fluctuations and the ell_bar_K scaling table."""
    if cfg.mode != "matrix_only":
        raise ValueError("run_matrix_experiment needs mode matrix_only")
    start = time.perf_counter()
    params = cfg.params
    v_star = limit_triple(params).v
    records = _map_replicates(cfg, "matrix", (cfg.N, cfg.K))
    kept = [r for r in records if not r["excluded"]]
    for r in records:
        r["z"] = math.sqrt(cfg.K) * (r["V"] - v_star) if not r["excluded"] else math.nan
    z = np.array([r["z"] for r in kept])
    ell_lim = ell_bar_limit(params)
    sq = np.array([(r["ell_bar_K"] - ell_lim) ** 2 for r in kept])
    summary = {
        "replicates": cfg.replicates,
        "excluded": len(records) - len(kept),
        "omega_fraction": float(np.mean([r["omega"] for r in records])),
        "v_star": v_star,
        "law_sd": v_star,
        "ell_bar_sq_error": float(sq.mean()) if sq.size else math.nan,
    }
    summary.update(_moments(z))
    summary["degenerate"] = int(v_star == 0.0)
    if v_star > 0:
        summary["sd_ratio"] = summary["sd"] / v_star if z.size >= 2 else math.nan
        summary["ks_distance"] = ks_distance(z, v_star) if z.size >= 20 else math.nan
    else:
        summary["sd_ratio"] = math.nan
        summary["ks_distance"] = math.nan

    scaling = []
    for j, (n_s, k_s) in enumerate(cfg.scaling_sizes):
        recs = _map_replicates(cfg, "matrix", (n_s, k_s), offset=(j + 1) << 32)
        vals = np.array([(r["ell_bar_K"] - ell_lim) ** 2 for r in recs if not r["excluded"]])
        scaling.append({
            "N": n_s, "K": k_s, "samples": int(vals.size),
            "mean_sq_error": float(vals.mean()) if vals.size else math.nan,
            "se": float(vals.std(ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else math.nan,
            "NK_times_error": float(n_s * k_s * vals.mean()) if vals.size else math.nan,
        })
    for a, b in zip(scaling, scaling[1:]):
        summary[f"scaling_ratio_{a['N']}_{a['K']}_to_{b['N']}_{b['K']}"] = a["mean_sq_error"] / b["mean_sq_error"]
    summary["runtime_s"] = time.perf_counter() - start
    return MCReport(config=cfg, records=records, z=z, summary=summary, scaling=scaling)


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail}"


def acceptance_checks(report: MCReport) -> list[Check]:
    """Default verdicts for a report, by mode."""
    s = report.summary
    cfg = report.config
    out = []
    if cfg.mode == "matrix_only":
        if math.isfinite(s.get("sd_ratio", math.nan)):
            r = s["sd_ratio"]
            out.append(Check("matrix_sd", abs(r - 1) <= 0.15, f"sd/v* = {r:.4f} (need within 15%)"))
        if math.isfinite(s.get("ks_distance", math.nan)):
            out.append(Check("matrix_ks", s["ks_distance"] < 0.06, f"KS = {s['ks_distance']:.4f} (need < 0.06)"))
        for key, val in s.items():
            if key.startswith("scaling_ratio_"):
                out.append(Check(key, 2 <= val <= 8, f"ratio = {val:.3f} (need in [2, 8])"))
    elif cfg.mode == "p_zero":
        if s["case_ratio"] >= 1:
            f = s["frac_p_hat_below_0.1"]
            out.append(Check("p_zero_case_i", f >= 0.9, f"fraction p_hat < 0.1 = {f:.4f} (need >= 0.9)"))
        else:
            f = s["frac_p_hat_above_0.9"]
            out.append(Check("p_zero_case_ii", abs(f - 0.5) <= 0.1, f"fraction p_hat > 0.9 = {f:.4f} (need 0.5 +- 0.1)"))
    else:
        if report.law is not None and math.isfinite(s.get("sd_ratio", math.nan)):
            r = s["sd_ratio"]
            out.append(Check(f"regime_{report.law.regime}_sd", 0.7 <= r <= 1.4, f"sd ratio = {r:.4f} (need in [0.7, 1.4])"))
        if report.law is not None and math.isfinite(s.get("ks_distance", math.nan)):
            out.append(Check(f"regime_{report.law.regime}_ks", s["ks_distance"] < 0.12, f"KS = {s['ks_distance']:.4f} (need < 0.12)"))
        if "ci_coverage" in s and cfg.params.p > 0:
            target = 1 - cfg.alpha - 0.07
            c = s["ci_coverage"]
            out.append(Check("ci_coverage", c >= target, f"coverage = {c:.4f} (need >= {target:.2f})"))
    return out
