"""Command-line driver: hawkesnet {simulate,estimate,mc,graph-oracle}.

Configuration comes from an optional file (flat ``key = value`` lines, or JSON
when the name ends in ``.json``) followed by ``key=value`` overrides.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass
from typing import Any, Callable

from . import _rng
from .asymptotics import confidence_interval, rate_terms
from .errors import DegenerateEstimate, ExplosionAbort, HawkesNetError
from .estimators import EstimatorInput, estimate
from .hawkes_sim import EventLog, simulate
from .kernels import Exponential, Indicator, ModelParams, Zero
from .matrix_oracle import analyze_graph
from .mc_harness import ExperimentConfig, acceptance_checks, run_experiment
from .random_graph import atomic_write_text, check_events, sample_adjacency

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_EXPLOSION = 3
EXIT_ACCEPTANCE = 4

COMMANDS = ("simulate", "estimate", "mc", "graph-oracle")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Key:
    parse: Callable[[str], Any]
    check: Callable[[Any], bool]
    range_text: str
    default: Any = None
    required_by: tuple[str, ...] = ()
    used_by: tuple[str, ...] = COMMANDS


def _bool(s) -> bool:
    if isinstance(s, bool):
        return s
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _int(s) -> int:
    if isinstance(s, bool):
        raise ValueError("expected an integer")
    if isinstance(s, int):
        return s
    f = float(s)
    if not f.is_integer():
        raise ValueError(f"not an integer: {s!r}")
    return int(f)


def _sizes(s) -> tuple[tuple[int, int], ...]:
    if isinstance(s, (list, tuple)):
        return tuple((int(a), int(b)) for a, b in s)
    s = str(s).strip()
    if not s:
        return ()
    out = []
    for part in s.split(","):
        n, k = part.lower().split("x")
        out.append((int(n), int(k)))
    return tuple(out)


def _optional_regime(s):
    if s is None:
        return None
    s = str(s).strip()
    return None if s in ("", "none") else s


_SIM = ("simulate",)
_EST = ("estimate",)
_MC = ("mc",)
_GO = ("graph-oracle",)

KEYS: dict[str, Key] = {
    "N": Key(_int, lambda v: v >= 1, "integer >= 1", required_by=COMMANDS),
    "K": Key(_int, lambda v: v >= 1, "integer in [1, N]; default N", used_by=_EST + _MC + _GO),
    "mu": Key(float, lambda v: v > 0 and math.isfinite(v), "real > 0", required_by=_SIM + _MC + _GO, used_by=_SIM + _MC + _GO),
    "p": Key(float, lambda v: 0 <= v <= 1, "real in [0, 1]", default=0.0, used_by=_SIM + _MC + _GO),
    "kernel": Key(str, lambda v: v in ("zero", "exponential", "indicator"), "zero | exponential | indicator",
                  default="zero", used_by=_SIM + _MC + _GO),
    "Lambda": Key(float, lambda v: v >= 0 and math.isfinite(v), "real >= 0 (kernel mass); needed unless kernel=zero",
                  used_by=_SIM + _MC + _GO),
    "beta": Key(float, lambda v: v > 0, "real > 0 (exponential decay rate)", default=1.0, used_by=_SIM + _MC + _GO),
    "width": Key(float, lambda v: v > 0, "real > 0 (indicator support)", default=1.0, used_by=_SIM + _MC + _GO),
    "horizon": Key(float, lambda v: v > 0, "real > 0; estimate defaults to 2t", required_by=_SIM, used_by=_SIM + _EST),
    "t": Key(float, lambda v: v >= 1, "real >= 1", required_by=_EST, used_by=_EST + _MC),
    "q": Key(_int, lambda v: v > 3, "integer > 3", default=7, used_by=_EST + _MC),
    "seed": Key(_int, lambda v: 0 <= v < 2**64, "integer in [0, 2^64)", default=0, used_by=_SIM + _GO),
    "master_seed": Key(_int, lambda v: 0 <= v < 2**64, "integer in [0, 2^64)", default=0, used_by=_MC),
    "replicates": Key(_int, lambda v: v >= 1, "integer >= 1", default=1, used_by=_MC),
    "mode": Key(str, lambda v: v in ("full", "matrix_only", "p_zero"), "full | matrix_only | p_zero",
                default="full", used_by=_MC),
    "separation_threshold": Key(float, lambda v: v > 0, "real > 0", default=5.0, used_by=_EST + _MC),
    "alpha": Key(float, lambda v: 0 < v < 1, "real in (0, 1)", default=0.05, used_by=_EST + _MC),
    "regime_override": Key(_optional_regime, lambda v: v in (None, "i", "ii", "iii"), "none | i | ii | iii",
                           used_by=_MC),
    "workers": Key(_int, lambda v: v >= 1, "integer >= 1; default = available cores", used_by=_MC),
    "scaling_sizes": Key(_sizes, lambda v: all(1 <= k <= n for n, k in v), "list like 400x200,800x400",
                         default=(), used_by=_MC),
    "checks": Key(_bool, lambda v: True, "true | false (run the acceptance verdicts)", default=True, used_by=_MC),
    "cap": Key(_int, lambda v: v >= 1, "integer >= 1 (event cap)", default=10**8, used_by=_SIM),
    "output_dir": Key(str, lambda v: bool(v), "directory path", default=".", used_by=COMMANDS),
}


def read_config_file(path: str) -> dict:
    with open(path) as fh:
        text = fh.read()
    if path.endswith(".json"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be an object")
        return data
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        k, v = line.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def parse_overrides(items) -> dict:
    out = {}
    for item in items:
        if "=" not in item:
            raise ConfigError(f"expected key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def resolve_config(command: str, raw: dict) -> dict:
    """Validate every key before any work starts."""
    unknown = sorted(set(raw) - set(KEYS))
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    cfg = {}
    for name, key in KEYS.items():
        if name in raw:
            # keys for other subcommands are validated but otherwise ignored,
            # so one file can drive simulate and estimate alike
            try:
                val = key.parse(raw[name])
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"key {name!r}: cannot parse {raw[name]!r} ({exc})") from None
            if not key.check(val):
                raise ConfigError(f"key {name!r} = {val!r} outside its range: {key.range_text}")
            cfg[name] = val
        elif command in key.required_by:
            raise ConfigError(f"missing required key {name!r} ({key.range_text})")
        else:
            cfg[name] = key.default
    if cfg.get("K") is None:
        cfg["K"] = cfg["N"]
    if cfg["K"] > cfg["N"]:
        raise ConfigError(f"K = {cfg['K']} exceeds N = {cfg['N']}")
    if cfg.get("kernel", "zero") != "zero" and cfg.get("Lambda") is None:
        raise ConfigError(f"missing required key 'Lambda' for kernel={cfg['kernel']}")
    if cfg.get("workers") is None:
        cfg["workers"] = os.cpu_count() or 1
    if command == "mc":
        if cfg.get("t") is None and cfg["mode"] != "matrix_only":
            raise ConfigError("missing required key 't' (real >= 1)")
        if cfg["mode"] == "p_zero" and cfg["p"] != 0:
            raise ConfigError("mode p_zero requires p = 0")
    return cfg


def build_params(cfg: dict) -> ModelParams:
    kind = cfg["kernel"]
    if kind == "zero":
        kernel = Zero()
    elif kind == "exponential":
        kernel = Exponential.from_mass(cfg["Lambda"], beta=cfg["beta"])
    else:
        kernel = Indicator.from_mass(cfg["Lambda"], width=cfg["width"])
    return ModelParams(mu=cfg["mu"], p=cfg["p"], kernel=kernel, q_moment=cfg.get("q") or 7)


def _write_json(path: str, data: dict) -> None:
    def clean(v):
        if isinstance(v, float) and not math.isfinite(v):
            return None
        return v

    atomic_write_text(path, json.dumps({k: clean(v) for k, v in data.items()}, indent=2, sort_keys=True) + "\n")


def cmd_simulate(cfg: dict) -> int:
    params = build_params(cfg)
    seed = cfg["seed"]
    adj = sample_adjacency(cfg["N"], params.p, _rng.mix(seed, 0))
    log = simulate(adj, params, cfg["horizon"], _rng.mix(seed, 1), cap=cfg["cap"])
    os.makedirs(cfg["output_dir"], exist_ok=True)
    path = os.path.join(cfg["output_dir"], "events.csv")
    log.dump(path)
    print(f"wrote {log.total_count} events to {path}")
    return EXIT_OK


def cmd_estimate(cfg: dict, events_path: str) -> int:
    N, K, t = cfg["N"], cfg["K"], cfg["t"]
    horizon = cfg["horizon"] if cfg["horizon"] is not None else 2 * t
    if 2 * t > horizon:
        raise ConfigError(f"2t = {2 * t} exceeds horizon = {horizon}")
    log = EventLog.load(events_path, N, horizon)
    est = estimate(EstimatorInput(log=log, N=N, K=K, t=t, q=cfg["q"]))
    raw = est.raw
    terms = rate_terms(N, K, t, cfg["q"], cfg["separation_threshold"])
    try:
        half = confidence_interval(est, N, K, t, raw.delta_t, K / N, cfg["alpha"])
    except DegenerateEstimate:
        half = math.nan
    out = {
        "mu_hat": est.mu_hat, "lambda_hat": est.Lambda_hat, "p_hat": est.p_hat,
        "epsilon": raw.epsilon, "V": raw.V, "X": raw.X, "W": raw.W,
        "Z_delta": raw.Z_delta, "Z_2delta": raw.Z_2delta, "delta_t": raw.delta_t,
        "r1": terms.r1, "r2": terms.r2, "r3": terms.r3, "gamma": terms.gamma,
        "dominant": terms.dominant, "separation": terms.separation,
        "alpha": cfg["alpha"], "ci_half_width": half,
    }
    os.makedirs(cfg["output_dir"], exist_ok=True)
    path = os.path.join(cfg["output_dir"], "estimate.json")
    _write_json(path, out)
    print(f"p_hat = {est.p_hat:.6g}  mu_hat = {est.mu_hat:.6g}  Lambda_hat = {est.Lambda_hat:.6g}  -> {path}")
    return EXIT_OK


def cmd_mc(cfg: dict) -> int:
    params = build_params(cfg)
    ec = ExperimentConfig(
        params=params, N=cfg["N"], K=cfg["K"], t=cfg["t"] if cfg["t"] is not None else 1.0, q=cfg["q"],
        replicates=cfg["replicates"], master_seed=cfg["master_seed"], mode=cfg["mode"],
        separation_threshold=cfg["separation_threshold"], alpha=cfg["alpha"],
        regime_override=cfg["regime_override"], workers=cfg["workers"], scaling_sizes=cfg["scaling_sizes"],
    )
    report = run_experiment(ec)
    report.write(cfg["output_dir"])
    print(f"wrote replicates.csv and summary.json to {cfg['output_dir']}")
    if not cfg["checks"]:
        return EXIT_OK
    checks = acceptance_checks(report)
    for c in checks:
        print(c.line())
    return EXIT_OK if all(c.passed for c in checks) else EXIT_ACCEPTANCE


def cmd_graph_oracle(cfg: dict) -> int:
    params = build_params(cfg)
    adj = sample_adjacency(cfg["N"], params.p, cfg["seed"])
    an = analyze_graph(adj, params.Lambda, params.mu, cfg["K"])
    out = {
        "N": an.N, "K": an.K, "ell_bar_K": an.ell_bar_K, "x_K_sq_norm": an.x_K_sq_norm,
        "V_inf": an.V_inf, "A_inf": an.A_inf, "W_inf": an.W_inf, "X_inf": an.X_inf,
        "residual": an.residual, "edges": adj.n_edges,
    }
    if params.branching < 1:
        flags = check_events(adj, params.Lambda, cfg["K"], params.p)
        out.update(omega_NK=int(flags.omega_NK), A_N=int(flags.A_N))
    os.makedirs(cfg["output_dir"], exist_ok=True)
    path = os.path.join(cfg["output_dir"], "graph_oracle.json")
    _write_json(path, out)
    print(f"V_inf = {an.V_inf:.6g}  X_inf = {an.X_inf:.6g}  ell_bar_K = {an.ell_bar_K:.6g} -> {path}")
    return EXIT_OK


def _key_help() -> str:
    lines = ["config keys (key=value; file or command line):"]
    for name, key in KEYS.items():
        req = f" required by {', '.join(key.required_by)};" if key.required_by else ""
        dflt = "" if key.default in (None, ()) else f" default {key.default};"
        lines.append(f"  {name:<22}{key.range_text};{req}{dflt} used by {', '.join(key.used_by)}")
    lines.append("")
    lines.append("exit codes: 0 ok, 2 config/input error, 3 explosion, 4 acceptance failure")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="hawkesnet",
        description="Simulate Hawkes networks on random graphs and estimate the connection probability.",
        epilog=_key_help(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", "-c", help="config file (key = value lines, or .json)")
    ap.add_argument("--events", help="events.csv to read (estimate only)")
    ap.add_argument("settings", nargs="*", metavar="key=value", help="config overrides")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_intermixed_args(argv)
    try:
        raw = read_config_file(args.config) if args.config else {}
        raw.update(parse_overrides(args.settings))
        cfg = resolve_config(args.command, raw)
        if args.command == "simulate":
            return cmd_simulate(cfg)
        if args.command == "estimate":
            if not args.events:
                raise ConfigError("estimate needs --events PATH")
            return cmd_estimate(cfg, args.events)
        if args.command == "mc":
            return cmd_mc(cfg)
        return cmd_graph_oracle(cfg)
    except ExplosionAbort as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EXPLOSION
    except (ConfigError, HawkesNetError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
