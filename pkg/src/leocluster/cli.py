"""Command-line orchestration: sweeps, validation runs, CSV emission.

Commands: outage-sweep, rate-sweep, casestudy, validate, lemmas.
CSV output is byte-deterministic given (arguments, seed): fixed column
order, 17 significant digits, '.' decimal separator, '\\n' line endings.
Exit codes: 0 success, 1 configuration error, 2 numeric failure,
3 validation mismatch.
"""

import argparse
import math
import sys
from dataclasses import dataclass, field, replace
from typing import List, Optional, Tuple

import numpy as np

from . import analysis, casestudy, config, montecarlo
from .errors import (ConfigError, InfeasiblePowerBudget, QuadratureError,
                     SeriesConvergenceError)

COMMANDS = ("outage-sweep", "rate-sweep", "casestudy", "validate", "lemmas")

DEFAULT_TRIALS = 100_000
DEFAULT_SEED = 42

DEFAULT_SWEEPS = {
    "outage-sweep": ("gamma_th_db", -10.0, 5.0, 1.0),
    "rate-sweep": ("fu_power_dbw", 0.0, 20.0, 2.0),
    "casestudy": ("n_followers", 0.0, 20.0, 2.0),
}


@dataclass(frozen=True)
class ExperimentSpec:
    """One CLI invocation's worth of work."""

    command: str
    config_path: Optional[str] = None
    output_path: Optional[str] = None
    overrides: dict = field(default_factory=dict)
    seed: int = DEFAULT_SEED
    trials: int = DEFAULT_TRIALS
    sweep: Optional[Tuple[str, List[float]]] = None

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")


load_config = config.load_config


def parse_sweep(text: str) -> Tuple[str, List[float]]:
    """Parse 'key=start:stop:step' into (key, inclusive grid)."""
    if "=" not in text:
        raise ConfigError(f"sweep {text!r} must look like key=start:stop:step")
    key, _, rng = text.partition("=")
    key = key.strip()
    if key not in config.DEFAULTS:
        raise ConfigError(f"unknown sweep key {key!r}")
    parts = rng.split(":")
    if len(parts) != 3:
        raise ConfigError(f"sweep range {rng!r} must be start:stop:step")
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError as exc:
        raise ConfigError(f"cannot parse sweep range {rng!r}") from exc
    if step <= 0 or stop < start:
        raise ConfigError("sweep needs step > 0 and stop >= start")
    return key, _sweep_grid(start, stop, step)


def _sweep_grid(start, stop, step):
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [start + i * step for i in range(n)]


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    v = float(x)
    if math.isnan(v):
        return "nan"
    return format(v, ".17g")


def _write_csv(path, header, rows):
    text = ",".join(header) + "\n"
    for row in rows:
        text += ",".join(_fmt(c) for c in row) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _scenario_at(base_values: dict, key: str, value):
    values = dict(base_values)
    values[key] = int(round(value)) if key in config.INT_KEYS else value
    return config.scenario_from_values(values)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _run_outage_sweep(spec, scenario):
    key, grid = spec.sweep or (lambda d: (d[0], _sweep_grid(*d[1:])))(
        DEFAULT_SWEEPS["outage-sweep"])
    base = config.scenario_to_values(scenario)
    rows = []
    for v in grid:
        s = _scenario_at(base, key, v)
        lead = analysis.outage_leader(s)
        clus = analysis.outage_cluster(s)
        lower, upper = analysis.outage_cluster_bounds(s)
        plan = montecarlo.SimulationPlan(s, spec.trials, spec.seed)
        mc = montecarlo.simulate_outage(plan)
        rows.append((v, lead.value, clus.value, lower.value, upper.value,
                     mc.value, mc.ci_half_width))
    _write_csv(spec.output_path,
               ("sweep_var", "p_out_leader", "p_out_cluster", "p_out_lower",
                "p_out_upper", "p_out_mc", "mc_ci"), rows)
    return 0


def _run_rate_sweep(spec, scenario):
    key, grid = spec.sweep or (lambda d: (d[0], _sweep_grid(*d[1:])))(
        DEFAULT_SWEEPS["rate-sweep"])
    base = config.scenario_to_values(scenario)
    rows = []
    for v in grid:
        s = _scenario_at(base, key, v)
        lead = analysis.rate_leader(s)
        lower, upper, mid = analysis.rate_cluster_bounds(s)
        plan = montecarlo.SimulationPlan(s, spec.trials, spec.seed)
        mc = montecarlo.simulate_rate(plan)
        rows.append((v, lead.value, lower.value, upper.value, mid.value,
                     mc.value, mc.ci_half_width))
    _write_csv(spec.output_path,
               ("sweep_var", "rate_leader", "rate_cluster_lower",
                "rate_cluster_upper", "rate_cluster_mid", "rate_mc", "mc_ci"),
               rows)
    return 0


def _run_casestudy(spec, scenario):
    key, grid = spec.sweep or (lambda d: (d[0], _sweep_grid(*d[1:])))(
        DEFAULT_SWEEPS["casestudy"])
    if key == "n_followers":
        sweep_kind = "n_followers"
    elif key == "lf_power_dbw":
        sweep_kind = "lf_power_dbw"
    else:
        raise ConfigError(
            "casestudy sweeps support n_followers or lf_power_dbw only")
    rows = casestudy.compare_architectures(scenario, grid, sweep_kind)
    _write_csv(spec.output_path,
               ("sweep_var", "rate_nf", "rate_lf", "rho_lf_dbw", "rho_lf_w",
                "n_followers_effective"),
               [(r.sweep_var, r.rate_nf, r.rate_lf, r.rho_lf_dbw, r.rho_lf_w,
                 r.n_followers_effective) for r in rows])
    return 0


def _run_validate(spec, scenario):
    """Pair every analytic estimator with its simulation twin; an enforced
    pair failing its confidence interval makes the run exit nonzero."""
    base = config.scenario_to_values(scenario)
    leader_only = _scenario_at(base, "n_followers", 0)
    rows = []

    def pair(name, analytic_value, mc_est, lo_ok=True, hi_ok=True, enforced=True):
        ok = True
        if lo_ok:
            ok = ok and analytic_value <= mc_est.value + mc_est.ci_half_width
        if hi_ok:
            ok = ok and analytic_value >= mc_est.value - mc_est.ci_half_width
        rows.append((name, analytic_value, mc_est.value, mc_est.ci_half_width,
                     "pass" if ok else "fail", 1 if enforced else 0))
        return ok

    ok_all = True
    lead = analysis.outage_leader(leader_only)
    mc_lead = montecarlo.simulate_outage(
        montecarlo.SimulationPlan(leader_only, spec.trials, spec.seed))
    ok_all &= pair("leader_outage", lead.value, mc_lead)

    clus = analysis.outage_cluster(scenario)
    mc_clus = montecarlo.simulate_outage(
        montecarlo.SimulationPlan(scenario, spec.trials, spec.seed))
    ok_all &= pair("cluster_outage", clus.value, mc_clus)

    o_lower, o_upper = analysis.outage_cluster_bounds(scenario)
    rows.append(("cluster_outage_upper_bound", o_upper.value, clus.value, 1e-6,
                 "pass" if o_upper.value >= clus.value - 1e-6 else "fail", 1))
    ok_all &= o_upper.value >= clus.value - 1e-6
    rows.append(("cluster_outage_lower_bound", o_lower.value, clus.value, 0.0,
                 "pass" if o_lower.value <= clus.value else "fail", 0))

    rl = analysis.rate_leader(leader_only)
    mc_rl = montecarlo.simulate_rate(
        montecarlo.SimulationPlan(leader_only, spec.trials, spec.seed))
    ok_all &= pair("leader_rate", rl.value, mc_rl)

    r_lower, r_upper, r_mid = analysis.rate_cluster_bounds(scenario)
    mc_rate = montecarlo.simulate_rate(
        montecarlo.SimulationPlan(scenario, spec.trials, spec.seed))
    ok_all &= pair("cluster_rate_lower_bound", r_lower.value, mc_rate, hi_ok=False)
    ok_all &= pair("cluster_rate_upper_bound", r_upper.value, mc_rate, lo_ok=False)
    rel = abs(r_mid.value - mc_rate.value) / mc_rate.value if mc_rate.value else 0.0
    rows.append(("cluster_rate_midpoint_rel_gap", r_mid.value, mc_rate.value,
                 rel, "pass" if rel <= 0.1 else "fail", 0))

    _write_csv(spec.output_path,
               ("check", "analytic", "mc", "mc_ci", "status", "enforced"), rows)
    return 0 if ok_all else 3


def _run_lemmas(spec, scenario):
    rows = montecarlo.contact_law_ks_report(scenario, spec.trials, spec.seed)
    _write_csv(spec.output_path,
               ("law", "theta_lu_rad", "ks", "n_samples", "bound", "status"),
               [(r["law"], r["theta_lu_rad"], r["ks"], r["n_samples"],
                 r["bound"], r["status"]) for r in rows])
    return 0


_RUNNERS = {
    "outage-sweep": _run_outage_sweep,
    "rate-sweep": _run_rate_sweep,
    "casestudy": _run_casestudy,
    "validate": _run_validate,
    "lemmas": _run_lemmas,
}


def run(spec: ExperimentSpec) -> int:
    scenario = config.load_config(spec.config_path, spec.overrides)
    return _RUNNERS[spec.command](spec, scenario)


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="leocluster",
        description="Outage and data-rate analysis for leader-follower "
                    "LEO satellite clusters")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", dest="config_path", default=None,
                        help="key=value config file (defaults apply otherwise)")
    parser.add_argument("--out", dest="output_path", default=None,
                        help="output CSV path (stdout if omitted)")
    parser.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="KEY=VALUE", help="override one config key")
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED)
    parser.add_argument("--trials", type=int, default=DEFAULT_TRIALS)
    parser.add_argument("--sweep", default=None, metavar="KEY=START:STOP:STEP",
                        help="sweep variable and grid (command default otherwise)")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        overrides = dict(config.parse_override(item) for item in args.overrides)
        sweep = parse_sweep(args.sweep) if args.sweep else None
        spec = ExperimentSpec(command=args.command,
                              config_path=args.config_path,
                              output_path=args.output_path,
                              overrides=overrides, seed=args.seed,
                              trials=args.trials, sweep=sweep)
        return run(spec)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (SeriesConvergenceError, QuadratureError, InfeasiblePowerBudget,
            ArithmeticError, ValueError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
