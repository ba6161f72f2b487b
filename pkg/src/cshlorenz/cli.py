"""Command-line runner: simulation, norm scans, data checks, probes.

Configuration is a single TOML file (flat sections mirroring RunConfig);
command-line `--set section.key=value` overrides file values. Runs are
deterministic given the config and seed.
"""

import argparse
import dataclasses
import json
import os
import sys

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

import numpy as np

from .errors import ConfigError, InvalidRange, StepUnstable
from .spectral import Grid
from .state import Potential, build_compatible_data, constraint_residuals, total_charge
from .gauge import solve_gauge_function, apply_gauge
from .dynamics import evolve, INHOM, HOMGAUGE
from .diagnostics import (write_monitors_csv, energy_inequality_check,
                          gronwall_bound_check)
from .scenarios import build_scenario
from . import norms


@dataclasses.dataclass
class RunConfig:
    n: int = 64
    length: float = 16.0 * np.pi
    t_final: float = 1.0
    dt: float = 1e-3
    record_every: int = 50
    mode: str = INHOM
    strict: bool = False
    gauge_normalize: bool = False
    seed: int = 0
    potential_coeffs: tuple = (0.0, 1.0, -2.0, 1.0)
    potential_alpha: float = 0.0
    scenario_kind: str = "gaussian"
    scenario_params: dict = dataclasses.field(default_factory=dict)
    outputs: str = "out"
    snapshots: bool = False
    # scan section
    scan_b_min: float = 0.52
    scan_b_max: float = 0.98
    scan_b_step: float = 0.005
    scan_b_prime: float = 0.5 + 1e-4
    scan_eps: float = 1e-4
    scan_s_min: float = 0.30
    scan_s_max: float = 0.55
    scan_s_step: float = 0.005
    # probe section
    probe_trials: int = 1
    probe_angle_samples: int = 1_000_000
    probe_scales: tuple = (1, 2, 4)

    def resolved(self):
        d = dataclasses.asdict(self)
        d["potential_coeffs"] = list(self.potential_coeffs)
        d["probe_scales"] = list(self.probe_scales)
        return d


_SECTIONS = {
    "grid": {"n": ("n", int), "L": ("length", float)},
    "time": {"T": ("t_final", float), "dt": ("dt", float),
             "record_every": ("record_every", int)},
    "run": {"mode": ("mode", str), "strict": ("strict", bool),
            "gauge_normalize": ("gauge_normalize", bool), "seed": ("seed", int)},
    "potential": {"coeffs": ("potential_coeffs", tuple), "alpha": ("potential_alpha", float)},
    "outputs": {"dir": ("outputs", str), "snapshots": ("snapshots", bool)},
    "scan": {"b_min": ("scan_b_min", float), "b_max": ("scan_b_max", float),
             "b_step": ("scan_b_step", float), "b_prime": ("scan_b_prime", float),
             "eps": ("scan_eps", float), "s_min": ("scan_s_min", float),
             "s_max": ("scan_s_max", float), "s_step": ("scan_s_step", float)},
    "probe": {"trials": ("probe_trials", int),
              "angle_samples": ("probe_angle_samples", int),
              "scales": ("probe_scales", tuple)},
}


def _coerce(value, typ, field):
    try:
        if typ is bool:
            if isinstance(value, bool):
                return value
            if str(value).lower() in ("true", "1", "yes"):
                return True
            if str(value).lower() in ("false", "0", "no"):
                return False
            raise ValueError("not a boolean")
        if typ is tuple:
            if isinstance(value, str):
                value = [float(x) for x in value.split(",") if x]
            return tuple(value)
        return typ(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(field, f"cannot parse {value!r} ({exc})")


def load_config(path=None, overrides=()):
    data = {}
    if path is not None:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    cfg = RunConfig()
    for section, keys in _SECTIONS.items():
        sub = data.get(section, {})
        if not isinstance(sub, dict):
            raise ConfigError(section, "must be a table")
        for key, val in sub.items():
            if section == "scenario":
                continue
            if key not in keys:
                raise ConfigError(f"{section}.{key}", "unknown key")
            attr, typ = keys[key]
            setattr(cfg, attr, _coerce(val, typ, f"{section}.{key}"))
    scen = data.get("scenario", {})
    if scen:
        cfg.scenario_kind = scen.pop("kind", cfg.scenario_kind)
        cfg.scenario_params = dict(scen)
    for item in overrides:
        if "=" not in item:
            raise ConfigError("--set", f"expected section.key=value, got {item!r}")
        dotted, value = item.split("=", 1)
        if "." not in dotted:
            raise ConfigError("--set", f"expected section.key=value, got {item!r}")
        section, key = dotted.split(".", 1)
        if section == "scenario":
            if key == "kind":
                cfg.scenario_kind = value
            else:
                try:
                    cfg.scenario_params[key] = json.loads(value)
                except json.JSONDecodeError:
                    cfg.scenario_params[key] = value
            continue
        if section not in _SECTIONS or key not in _SECTIONS[section]:
            raise ConfigError(dotted, "unknown key")
        attr, typ = _SECTIONS[section][key]
        setattr(cfg, attr, _coerce(value, typ, dotted))
    validate(cfg)
    return cfg


def validate(cfg):
    if cfg.n % 2 != 0 or not (8 <= cfg.n <= 4096):
        raise ConfigError("grid.n", f"must be even and in [8, 4096], got {cfg.n}")
    if cfg.length <= 0:
        raise ConfigError("grid.L", "must be positive")
    if cfg.dt <= 0:
        raise ConfigError("time.dt", "must be positive")
    if cfg.t_final <= 0:
        raise ConfigError("time.T", "must be positive")
    if cfg.record_every < 1:
        raise ConfigError("time.record_every", "must be >= 1")
    if cfg.mode not in (INHOM, HOMGAUGE):
        raise ConfigError("run.mode", f"must be 'inhom' or 'homgauge', got {cfg.mode!r}")


def _potential(cfg):
    return Potential(coeffs=cfg.potential_coeffs, alpha=cfg.potential_alpha)


def _build_state(cfg):
    grid = Grid(cfg.n, cfg.length)
    phi0, phi_t0 = build_scenario(grid, cfg.scenario_kind, cfg.scenario_params)
    return build_compatible_data(phi0, phi_t0, _potential(cfg), strict=cfg.strict)


def cmd_simulate(cfg):
    os.makedirs(cfg.outputs, exist_ok=True)
    v = _potential(cfg)
    state0 = _build_state(cfg)
    if cfg.gauge_normalize:
        state0 = apply_gauge(state0, solve_gauge_function(state0, strict=cfg.strict))
    res0 = constraint_residuals(state0)
    try:
        traj = evolve(state0, cfg.t_final, cfg.dt, v, mode=cfg.mode,
                      record_every=cfg.record_every)
    except StepUnstable as exc:
        print(f"simulate: unstable at t={exc.time:g}", file=sys.stderr)
        return 1
    write_monitors_csv(traj.series, os.path.join(cfg.outputs, "monitors.csv"))
    if cfg.snapshots:
        from .state import write_state
        for i, st in enumerate(traj.states):
            write_state(os.path.join(cfg.outputs, f"state_{i:05d}"), st, v)

    series = traj.series
    checks = {
        "initial_residuals_ok": max(res0.values()) < 1e-8,
        "energy_inequality_ok": energy_inequality_check(series, v.alpha),
        "gronwall_ok": gronwall_bound_check(series, v.alpha),
    }
    summary = {
        "config": cfg.resolved(),
        "energy_drift": series.energy_drift(),
        "constraint_max": series.max_constraint(),
        "reality_max": max(traj.reality_errors),
        "charge_total_initial": total_charge(traj.states[0]),
        "charge_total_final": total_charge(traj.states[-1]),
        "initial_residuals": res0,
        "checks": checks,
    }
    with open(os.path.join(cfg.outputs, "summary.json"), "w") as fh:
        json.dump(summary, fh, sort_keys=True, indent=2)
    ok = all(checks.values())
    print(f"simulate: energy_drift={summary['energy_drift']:.3e} "
          f"constraint_max={summary['constraint_max']:.3e} "
          f"{'ok' if ok else 'FAIL'}")
    return 0 if ok else 1


def cmd_scan_norms(cfg):
    os.makedirs(cfg.outputs, exist_ok=True)
    bp, eps = cfg.scan_b_prime, cfg.scan_eps
    if not (0.5 < bp < 1.0):
        raise InvalidRange("scan.b_prime must lie in (1/2, 1)")
    bs = np.arange(cfg.scan_b_min, cfg.scan_b_max + 1e-12, cfg.scan_b_step)
    if 0.625 not in [round(b, 12) for b in bs] and cfg.scan_b_min <= 0.625 <= cfg.scan_b_max:
        bs = np.sort(np.append(bs, 0.625))
    with open(os.path.join(cfg.outputs, "thresholds.csv"), "w") as fh:
        fh.write("b,b_prime,eps,threshold,binding\n")
        for b in bs:
            thr, binding = norms.threshold_with_binding(float(b), bp, eps)
            fh.write(f"{b:.17g},{bp:.17g},{eps:.17g},{thr:.17g},{binding}\n")
    ss = np.arange(cfg.scan_s_min, cfg.scan_s_max + 1e-12, cfg.scan_s_step)
    with open(os.path.join(cfg.outputs, "scan.csv"), "w") as fh:
        fh.write("s,b,b_prime,holds,binding\n")
        for b in bs:
            thr, binding = norms.threshold_with_binding(float(b), bp, eps)
            for s in ss:
                holds = norms.conditions_hold_at(float(s), float(b), bp, eps)
                fh.write(f"{s:.17g},{b:.17g},{bp:.17g},{int(holds)},{binding}\n")
    thr_gold, _ = norms.threshold_with_binding(0.625, bp, eps) \
        if 0.5 < bp < 1.0 else (None, None)
    print(f"scan-norms: threshold(b=0.625) = {thr_gold:.6f}")
    return 0


def cmd_check_data(cfg):
    state0 = _build_state(cfg)
    res = constraint_residuals(state0)
    from .dynamics import constraint_monitors
    mon = constraint_monitors(state0)
    for k, val in {**res, **mon}.items():
        print(f"check-data: {k} = {val:.3e}")
    ok = max(res.values()) < 1e-8 and max(mon.values()) < 1e-8
    return 0 if ok else 1


def cmd_probe(cfg):
    os.makedirs(cfg.outputs, exist_ok=True)
    angle = norms.angle_bound_check(cfg.probe_angle_samples, seed=cfg.seed)
    state0 = _build_state(cfg)
    ineq = norms.inequality_probes(state0)
    scales = tuple(int(s) for s in cfg.probe_scales)
    sweep = norms.product_ratio_sweep(list(norms.REDUCTION_TUPLES),
                                      trials=cfg.probe_trials, seed=cfg.seed,
                                      scales=scales)
    report = {
        "angle_max": angle["max_constant"],
        "angle_samples": angle["samples"],
        "inequalities": ineq,
        "product_scales": sweep["scales"],
        "product_max_ratio": sweep["max_ratio"],
    }
    with open(os.path.join(cfg.outputs, "probes.json"), "w") as fh:
        json.dump(report, fh, sort_keys=True, indent=2)
    ok = angle["max_constant"] <= 10.0 and all(
        np.isfinite(r) for row in sweep["max_ratio"] for r in row)
    print(f"probe: angle_max={angle['max_constant']:.3f} {'ok' if ok else 'FAIL'}")
    return 0 if ok else 1


def main(argv=None):
    parser = argparse.ArgumentParser(prog="cshlorenz",
                                     description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("simulate", "scan-norms", "check-data", "probe"):
        p = sub.add_parser(name)
        p.add_argument("config", nargs="?", default=None,
                       help="TOML config file (defaults apply if omitted)")
        p.add_argument("--set", action="append", default=[], metavar="SEC.KEY=VAL",
                       help="override a config value")
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config, args.set)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    handler = {"simulate": cmd_simulate, "scan-norms": cmd_scan_norms,
               "check-data": cmd_check_data, "probe": cmd_probe}[args.command]
    try:
        return handler(cfg)
    except (ConfigError, InvalidRange) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
