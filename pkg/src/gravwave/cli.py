"""Command-line front end: simulate, analyze, check-symbols, dno-test, version.

Exit codes: 0 success, 1 configuration or validation failure, 2 runtime abort
(the stepper lost the solution; partial output is already on disk).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

import numpy as np

from . import __version__
from . import dno
from . import evolution as ev
from . import normalform as nf
from . import scattering as sc
from . import spectral as sp
from .evolution import ConfigError, RunAbortError, SimConfig
from .spectral import NormConfig, SpectralError


# ---------------------------------------------------------------------------
# config file parsing

def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _parse_float_list(text: str) -> tuple[float, ...]:
    items = [p.strip() for p in text.split(",") if p.strip()]
    return tuple(float(p) for p in items)


# key -> (section attribute, field, converter)
_SCHEMA = {
    "grid.n": ("grid", "n", int),
    "grid.period": ("grid", "period", float),
    "init.profile": ("init", "profile", str),
    "init.amplitude": ("init", "amplitude", float),
    "init.width": ("init", "width", float),
    "init.carrier": ("init", "carrier", float),
    "init.seed": ("init", "seed", int),
    "evolution.dt": ("evolution", "dt", float),
    "evolution.t_end": ("evolution", "t_end", float),
    "evolution.order": ("evolution", "order", int),
    "evolution.dno_order": ("evolution", "dno_order", int),
    "evolution.dealias": ("evolution", "dealias", _parse_bool),
    "output.directory": ("output", "directory", str),
    "output.snapshot_every": ("output", "snapshot_every", int),
    "output.probe_frequencies": ("output", "probe_frequencies", _parse_float_list),
    "norms.sobolev_index": ("norms", "sobolev_index", float),
    "norms.z_beta": ("norms", "z_beta", float),
    "norms.z_weight": ("norms", "z_weight", float),
    "norms.zprime_index": ("norms", "zprime_index", int),
}


def parse_config(path) -> SimConfig:
    """Read a flat key=value file into a fully validated SimConfig.

    Keys are dotted (grid.n=512), '#' starts a comment, unknown and duplicate
    keys are errors naming the offending line.
    """
    path = str(path)
    if not os.path.exists(path):
        raise ConfigError("", f"config file not found: {path}")
    try:
        with open(path, encoding="utf-8") as fh:
            raw_lines = fh.readlines()
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigError("", f"cannot read config file {path}: {exc}")

    values: dict[str, object] = {}
    seen_line: dict[str, int] = {}
    for lineno, raw in enumerate(raw_lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("", f"line {lineno}: expected key=value, got {line!r}")
        key, _, text = line.partition("=")
        key, text = key.strip(), text.strip()
        if key not in _SCHEMA:
            raise ConfigError(key, f"unknown key {key!r} (line {lineno})")
        if key in seen_line:
            raise ConfigError(
                key, f"duplicate key {key!r} (lines {seen_line[key]} and {lineno})"
            )
        seen_line[key] = lineno
        section, field, convert = _SCHEMA[key]
        try:
            values[key] = convert(text)
        except ValueError as exc:
            raise ConfigError(key, f"bad value for {key} (line {lineno}): {exc}")

    cfg = SimConfig()
    by_section: dict[str, dict[str, object]] = {}
    for key, val in values.items():
        section, field, _ = _SCHEMA[key]
        by_section.setdefault(section, {})[field] = val
    for section, fields in by_section.items():
        cfg = replace(cfg, **{section: replace(getattr(cfg, section), **fields)})

    try:
        return ev.validate_config(cfg)
    except ConfigError as exc:
        if exc.key in seen_line:
            raise ConfigError(exc.key, f"{exc} (line {seen_line[exc.key]})")
        raise


def _format_value(val) -> str:
    if isinstance(val, bool):
        return "true" if val else "false"
    if isinstance(val, float):
        return f"{val:.17g}"
    if isinstance(val, tuple):
        return ",".join(f"{v:.17g}" for v in val)
    return str(val)


def resolved_config_text(cfg: SimConfig, threads: int) -> str:
    lines = [f"# resolved configuration (gravwave {__version__})",
             f"# threads = {threads}"]
    for key, (section, field, _) in _SCHEMA.items():
        lines.append(f"{key}={_format_value(getattr(getattr(cfg, section), field))}")
    return "\n".join(lines) + "\n"


def _thread_cap() -> int:
    text = os.environ.get("GRAVWAVE_THREADS", "1")
    try:
        n = int(text)
    except ValueError:
        raise ConfigError("GRAVWAVE_THREADS", f"must be an integer, got {text!r}")
    if n < 1:
        raise ConfigError("GRAVWAVE_THREADS", f"must be >= 1, got {n}")
    return n


# ---------------------------------------------------------------------------
# subcommands

def cmd_simulate(args) -> int:
    threads = _thread_cap()
    cfg = parse_config(args.config)
    os.makedirs(cfg.output.directory, exist_ok=True)
    echo_path = os.path.join(cfg.output.directory, "config_resolved.cfg")
    with open(echo_path, "w", encoding="utf-8") as fh:
        fh.write(resolved_config_text(cfg, threads))
    traj = ev.run(cfg)
    print(
        f"simulated to t = {traj.times[-1]:g} "
        f"({len(traj.records)} records) -> {cfg.output.directory}"
    )
    return 0


def _parse_window(text):
    if text is None:
        return None
    try:
        t0, _, t1 = text.partition(":")
        return (float(t0), float(t1))
    except ValueError:
        raise ConfigError("fit-window", f"expected t0:t1, got {text!r}")


def cmd_analyze(args) -> int:
    report = sc.analyze(args.input, _parse_window(args.fit_window))
    out_path = os.path.join(str(args.input), "analysis.json")
    with open(out_path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(json.dumps(report, indent=2, sort_keys=True))
    return 0


def cmd_check_symbols(args) -> int:
    rng = np.random.default_rng(args.seed)
    tol = 1e-12
    n = args.samples
    xi = rng.uniform(-8.0, 8.0, n)
    eta = rng.uniform(-8.0, 8.0, n)
    keep = (
        (np.abs(xi) > 1e-6) & (np.abs(eta) > 1e-6) & (np.abs(xi - eta) > 1e-6)
    )
    xi, eta = xi[keep], eta[keep]
    r1, r2, r3 = nf.homological_residual(xi, eta)
    dvals = nf.eval_symbol("D", xi, eta)
    # the general-formula comparison divides by D; its rounding error grows
    # like 3e-16/D, so stay clear of the degenerate set
    solvable = np.abs(dvals) > 1e-2
    b_closed = nf.eval_symbol("b", xi[solvable], eta[solvable])
    # relative gap: b grows like |xi + eta|^{5/2}
    b_gap = np.abs(nf.b_general(xi[solvable], eta[solvable]) - b_closed)
    b_gap /= np.maximum(1.0, np.abs(b_closed))
    a_gap = np.abs(nf.eval_symbol("a", xi, eta) - nf.eval_symbol("a2", xi, eta))
    anchors = {
        "a(1,-1)": float(nf.eval_symbol("a", 1.0, -1.0)),
        "b(1,2)": float(nf.eval_symbol("b", 1.0, 2.0)),
        "q2(2,1)": float(nf.eval_symbol("q2", 2.0, 1.0)),
        "m2(1,-1)": float(nf.eval_symbol("m2", 1.0, -1.0)),
    }
    report = {
        "samples": int(xi.size),
        "seed": args.seed,
        "max_residual_r1": float(np.max(np.abs(r1))),
        "max_residual_r2": float(np.max(np.abs(r2))),
        "max_residual_r3": float(np.max(np.abs(r3))),
        "max_b_closed_form_gap": float(np.max(b_gap)),
        "max_a_closed_form_gap": float(np.max(a_gap)),
        "anchors": anchors,
        "tolerance": tol,
    }
    worst = max(
        report["max_residual_r1"], report["max_residual_r2"],
        report["max_residual_r3"], report["max_b_closed_form_gap"],
        report["max_a_closed_form_gap"],
    )
    anchors_ok = (
        anchors["a(1,-1)"] == 0.5 and anchors["b(1,2)"] == 2.0
        and anchors["q2(2,1)"] == 1.0 and anchors["m2(1,-1)"] == -2.0
    )
    report["pass"] = bool(worst <= tol and anchors_ok)
    print(json.dumps(report, indent=2, sort_keys=True))
    return 0 if report["pass"] else 1


def cmd_dno_test(args) -> int:
    orders = [int(v) for v in args.orders.split(",")]
    slopes = [float(v) for v in args.epsilons.split(",")]
    grid = sp.make_grid(256, 8.0 * np.pi)
    f = sp.field_from_function(grid, lambda x: np.sin(x) + 0.3 * np.cos(2 * x))
    tol = 1e-8
    worst = 0.0
    table = []
    for eps in slopes:
        h = sp.field_from_function(grid, lambda x: eps * np.cos(x))
        for order in orders:
            series = dno.dno_terms(h, f, order)
            oracle = dno.dno_oracle_terms(h, f, order)
            scale = max(sp.l2_norm(t) for t in oracle)
            errs = [sp.l2_norm(a - b) / scale for a, b in zip(series, oracle)]
            err = max(errs)
            worst = max(worst, err)
            table.append({"order": order, "slope": eps, "max_rel_error": err})
    report = {"grid_n": grid.n, "cases": table, "tolerance": tol,
              "pass": bool(worst <= tol)}
    print(json.dumps(report, indent=2, sort_keys=True))
    return 0 if report["pass"] else 1


def cmd_version(_args) -> int:
    print(__version__)
    return 0


# ---------------------------------------------------------------------------
# entry point

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gravwave",
        description="Pseudo-spectral gravity water-wave simulator and analysis tools",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a configured simulation")
    p.add_argument("--config", required=True, help="path to key=value config file")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("analyze", help="fit decay/phase diagnostics of a run directory")
    p.add_argument("--input", required=True, help="run output directory")
    p.add_argument("--fit-window", default=None, help="time window t0:t1")
    p.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("check-symbols", help="residual checks of the normal-form symbols")
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_check_symbols)

    p = sub.add_parser("dno-test", help="series vs. flattening oracle cross-validation")
    p.add_argument("--orders", default="1,2,3,4")
    p.add_argument("--epsilons", default="0.01,0.05")
    p.set_defaults(fn=cmd_dno_test)

    p = sub.add_parser("version", help="print the package version")
    p.set_defaults(fn=cmd_version)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except RunAbortError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SpectralError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
