"""Command-line front end: ``sbmdeg <subcommand> [--config file.json] [flags]``.

Exit status is 0 on success, 2 on usage or configuration errors and 1 when an
experiment fails at run time.  Every output starts with a header holding the
tool version, the effective configuration and the base seed.  Feeding that
configuration back reproduces the file byte for byte.  The worker count is
left out of the header because results never depend on it.
"""
from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__, exactdist, harness, thresholds
from .model import GraphParams, ParameterDomainError

__all__ = ["main", "run", "CONFIG_KEYS"]

# Flat config keys, their types and defaults (None means "not set").
CONFIG_KEYS: dict[str, tuple[type, object]] = {
    "n": (int, 1000),
    "a": (float, 300.0),
    "b": (float, 100.0),
    "alpha": (float, 0.8),
    "C": (float, None),
    "A": (float, None),
    "r": (float, None),
    "test": (str, "hc"),
    "tests": (list, None),
    "beta1": (str, "1"),
    "beta2": (str, "1"),
    "delta": (float, None),
    "level": (float, 0.05),
    "reps": (int, 100),
    "seed": (int, 0),
    "workers": (int, None),
    "support_rule": (str, "balanced-random"),
    "C_grid": (list, None),
    "alpha_grid": (list, None),
    "coupled": (bool, False),
    "tau_a": (float, None),
    "tau_b": (float, None),
    "lambda": (float, None),
    "check": (str, "change-of-measure"),
}

# Keys each subcommand reads; only these are echoed in its header.
USED_KEYS = {
    "thresholds": ("alpha", "tau_a", "tau_b", "lambda", "n", "a", "b"),
    "simulate": ("n", "a", "b", "alpha", "C", "A", "r", "test", "beta1", "beta2", "delta",
                 "level", "reps", "seed", "support_rule"),
    "power": ("n", "a", "b", "alpha", "test", "beta1", "beta2", "delta", "level", "reps",
              "seed", "support_rule", "C_grid", "coupled"),
    "phase": ("n", "a", "b", "tests", "test", "beta1", "beta2", "delta", "level", "reps",
              "seed", "support_rule", "C_grid", "alpha_grid"),
    "gumbel": ("n", "a", "b", "reps", "seed", "level"),
    "oracle": ("check",),
}


class UsageError(Exception):
    """Bad flags or configuration (exit status 2)."""


# ------------------------------------------------------------------ parsing

def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _strs(text: str) -> list[str]:
    return [x.strip() for x in text.split(",") if x.strip()]


def _add_common(p: argparse.ArgumentParser, keys) -> None:
    p.add_argument("--config", help="JSON file with flat config keys; flags override it")
    p.add_argument("--output", "-o", help="output file (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), default=None)
    flag = {
        "n": dict(type=int), "a": dict(type=float), "b": dict(type=float),
        "alpha": dict(type=float), "C": dict(type=float), "A": dict(type=float),
        "r": dict(type=float), "test": dict(choices=harness.TESTS),
        "tests": dict(type=_strs), "beta1": dict(), "beta2": dict(),
        "delta": dict(type=float), "level": dict(type=float), "reps": dict(type=int),
        "seed": dict(type=int), "support_rule": dict(choices=("balanced-random", "balanced-first")),
        "C_grid": dict(type=_floats), "alpha_grid": dict(type=_floats),
        "coupled": dict(action="store_const", const=True),
        "tau_a": dict(type=float), "tau_b": dict(type=float), "lambda": dict(type=float),
        "check": dict(choices=("change-of-measure",)),
    }
    for k in keys:
        name = "--" + k.replace("_", "-")
        p.add_argument(name, dest=k, default=None, **flag[k])
    if "seed" in keys or "reps" in keys:
        p.add_argument("--workers", type=int, default=None,
                       help="parallel worker processes (default: $SBMDEG_WORKERS or 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sbmdeg", description="Degree-correction detection in two-block SBMs."
    )
    parser.add_argument("--version", action="version", version=f"sbmdeg {__version__}")
    sub = parser.add_subparsers(dest="subcommand", metavar="SUBCOMMAND")
    helps = {
        "thresholds": "closed-form detection boundaries and optimal weights",
        "simulate": "Monte Carlo risk of one test at one alternative",
        "power": "risk along a grid of C",
        "phase": "empirical risk over (alpha, C) with analytic boundaries",
        "gumbel": "null maximum degree against the Gumbel limit",
        "oracle": "exact-arithmetic identity checks",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text, description=text)
        _add_common(p, USED_KEYS[name])
        if name == "phase":
            p.add_argument("--svg", help="also write a minimal SVG overlay to this path")
    return parser


def _coerce(key: str, value):
    kind, _ = CONFIG_KEYS[key]
    if value is None:
        return None
    if kind is list:
        if not isinstance(value, list):
            raise UsageError(f"config key {key!r} must be an array")
        return value
    if kind is bool:
        if not isinstance(value, bool):
            raise UsageError(f"config key {key!r} must be true or false")
        return value
    if kind is str:
        return str(value)
    try:
        out = kind(value)
    except (TypeError, ValueError):
        raise UsageError(f"config key {key!r} must be {kind.__name__}, got {value!r}")
    if kind is int and out != value:
        raise UsageError(f"config key {key!r} must be an integer, got {value!r}")
    return out


def effective_config(ns: argparse.Namespace) -> dict:
    """Defaults, then the config file, then inline flags."""
    cfg = {k: d for k, (_, d) in CONFIG_KEYS.items()}
    if ns.config:
        try:
            data = json.loads(Path(ns.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"--config: cannot read {ns.config}: {exc}")
        if not isinstance(data, dict):
            raise UsageError("--config: top level must be a JSON object")
        for k, v in data.items():
            if k not in CONFIG_KEYS:
                raise UsageError(f"--config: unknown key {k!r}")
            cfg[k] = _coerce(k, v)
    for k in CONFIG_KEYS:
        v = getattr(ns, k, None)
        if v is not None:
            cfg[k] = _coerce(k, v)
    if cfg["workers"] is None:
        cfg["workers"] = harness.default_workers()
    return cfg


# ------------------------------------------------------------------ output

def _header(sub: str, cfg: dict) -> dict:
    used = {k: cfg[k] for k in USED_KEYS[sub]}
    return {"tool": "sbmdeg", "version": __version__, "subcommand": sub,
            "config": used, "seed": cfg.get("seed")}


def _num(x):
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return x


def _render(fmt: str, header: dict, columns, rows, extra=None) -> str:
    if fmt == "json":
        body = {"header": header, "columns": list(columns),
                "rows": [dict(zip(columns, r)) for r in rows]}
        if extra:
            body.update(extra)
        return json.dumps(body, indent=2, sort_keys=False, allow_nan=True) + "\n"
    buf = io.StringIO()
    buf.write(f"# sbmdeg {__version__}\n")
    buf.write(f"# config: {json.dumps(header['config'], sort_keys=True)}\n")
    buf.write(f"# seed: {header['seed']}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_num(x) for x in r])
    for k, v in (extra or {}).items():
        buf.write(f"# {k}: {json.dumps(v)}\n")
    return buf.getvalue()


def _emit(text: str, path: str | None) -> None:
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# ------------------------------------------------------------------ commands

def _params(cfg) -> GraphParams:
    return GraphParams(cfg["n"], cfg["a"], cfg["b"])


def _beta(v):
    return v if v == "optimal" else float(v)


def _options(cfg) -> dict:
    opts = {"beta1": _beta(cfg["beta1"]), "beta2": _beta(cfg["beta2"]), "level": cfg["level"]}
    if cfg["delta"] is not None:
        opts["delta"] = cfg["delta"]
    return opts


def _signal(cfg) -> tuple[str, float]:
    given = [k for k in ("C", "A", "r") if cfg[k] is not None]
    if len(given) > 1:
        raise UsageError(f"set only one of --C, --A, --r (got {', '.join(given)})")
    return (given[0], cfg[given[0]]) if given else ("C", 0.0)


def _experiment(cfg, signal=("C", 0.0), alpha=None) -> harness.ExperimentConfig:
    return harness.ExperimentConfig(
        params=_params(cfg), alpha=cfg["alpha"] if alpha is None else alpha, signal=signal,
        support_rule=cfg["support_rule"], test=cfg["test"], options=_options(cfg),
        reps=cfg["reps"], base_seed=cfg["seed"], workers=cfg["workers"],
    )


def cmd_thresholds(cfg, fmt):
    alpha = cfg["alpha"]
    if cfg["tau_a"] is not None or cfg["tau_b"] is not None:
        ta = cfg["tau_a"] if cfg["tau_a"] is not None else 0.0
        tb = cfg["tau_b"] if cfg["tau_b"] is not None else 0.0
        lam = cfg["lambda"] if cfg["lambda"] is not None else 1.0
        lim = thresholds.RegimeLimits(ta, tb, lam)
    else:
        lim = thresholds.RegimeLimits.from_params(_params(cfg))
    out = {}
    if lim.tau_b > 0:
        b1, b2 = thresholds.optimal_betas(lim)
    else:
        b1 = b2 = None
    if 0 < alpha < 0.5:
        out["c_dense"] = thresholds.c_dense(alpha)
    out["c_sparse"] = thresholds.c_sparse(alpha, lim) if 0.5 < alpha < 1 else None
    out["c_hc_vanilla"] = thresholds.c_hc(alpha, 1, 1, lim) if 0.5 < alpha < 1 else None
    out["c_hc_optimal"] = thresholds.c_hc(alpha, b1, b2, lim) if (b1 and 0.5 < alpha < 1) else None
    out["c_max"] = thresholds.c_max(alpha, 1, 1, lim) if 0.75 <= alpha < 1 else None
    out["beta1_star"], out["beta2_star"] = b1, b2
    out["rho_vanilla"] = thresholds.rho(1, 1, lim)
    out["rho_optimal"] = thresholds.rho(b1, b2, lim) if b1 else None
    header = _header("thresholds", cfg)
    header["config"].update(tau_a=lim.tau_a, tau_b=lim.tau_b, **{"lambda": lim.lam})
    if cfg["tau_a"] is not None or cfg["tau_b"] is not None:
        for k in ("n", "a", "b"):
            header["config"].pop(k)
    if fmt == "json":
        return json.dumps({"header": header, **out}, indent=2) + "\n"
    return _render("csv", header, list(out), [list(out.values())])


def cmd_simulate(cfg, fmt):
    est = harness.estimate_risk(_experiment(cfg, _signal(cfg)))
    cols = ("test_id", "type1", "type2", "risk", "se_type1", "se_type2", "reps")
    row = (cfg["test"], est.type1, est.type2, est.risk, est.se_type1, est.se_type2, est.reps)
    return _render(fmt, _header("simulate", cfg), cols, [row])


def cmd_power(cfg, fmt):
    grid = cfg["C_grid"]
    if not grid:
        raise UsageError("--C-grid is required for power")
    curve = harness.power_curve(_experiment(cfg), grid, coupled=cfg["coupled"])
    rows = [(c, e.type1, e.type2, e.risk, e.se_risk) for c, e in curve]
    return _render(fmt, _header("power", cfg), ("C", "type1", "type2", "risk", "se"), rows)


PHASE_COLUMNS = ("alpha", "C", "test_id", "type1", "type2", "risk", "se_risk",
                 "c_sparse", "c_hc_vanilla", "c_hc_optimal")


def cmd_phase(cfg, fmt, svg=None):
    if not cfg["C_grid"] or not cfg["alpha_grid"]:
        raise UsageError("--C-grid and --alpha-grid are required for phase")
    tests = cfg["tests"] or [cfg["test"]]
    rows = harness.phase_diagram(cfg["alpha_grid"], cfg["C_grid"], _experiment(cfg, alpha=0.75), tests)
    if svg:
        Path(svg).write_text(phase_svg(rows), encoding="utf-8")
    return _render(fmt, _header("phase", cfg), PHASE_COLUMNS, [[r[k] for k in PHASE_COLUMNS] for r in rows])


def cmd_gumbel(cfg, fmt):
    res = harness.gumbel_check(cfg["n"], cfg["a"], cfg["b"], cfg["reps"], cfg["seed"], cfg["workers"])
    for w in res.warnings:
        print(f"warning: {w}", file=sys.stderr)
    rows = [(i, int(m), float(y)) for i, (m, y) in enumerate(zip(res.max_degrees, res.y))]
    rows.append(("summary", "", res.ks_distance))
    extra = {
        "ks_distance": res.ks_distance,
        "type1_at_level": res.rejection_rate(cfg["level"]),
        "quantiles": [list(q) for q in res.quantiles],
    }
    return _render(fmt, _header("gumbel", cfg), ("replicate", "max_degree", "y_statistic"), rows, extra)


COM_TOL = 1e-12


def change_of_measure_table(n_intervals: int = 20, seed: int = 0):
    """|lhs - rhs| over n1, n2 in {3, 10, 25}, p in {0.1, 0.5}, alpha in {0.5, 2}
    (each independently per binomial) and ``n_intervals`` random intervals."""
    rng = np.random.default_rng(seed)
    beta1, beta2 = 1.0, math.sqrt(2)
    rows = []
    for n1, n2, p1, p2, a1, a2 in itertools.product(
        (3, 10, 25), (3, 10, 25), (0.1, 0.5), (0.1, 0.5), (0.5, 2.0), (0.5, 2.0)
    ):
        top = beta1 * n1 + beta2 * n2
        ivs = [tuple(sorted(rng.uniform(-0.1 * top, 1.1 * top, 2))) for _ in range(n_intervals)]
        res = exactdist.change_of_measure_check(n1, p1, n2, p2, a1, a2, beta1, beta2, ivs)
        rows.append((n1, n2, p1, p2, a1, a2, max(g for _, _, g in res)))
    return rows


def cmd_oracle(cfg, fmt):
    rows = change_of_measure_table()
    worst = max(r[-1] for r in rows)
    text = _render(fmt, _header("oracle", cfg),
                   ("n1", "n2", "p1", "p2", "alpha1", "alpha2", "max_abs_gap"), rows,
                   {"max_abs_gap": worst, "tolerance": COM_TOL, "passed": worst <= COM_TOL})
    return text, worst <= COM_TOL


def phase_svg(rows, width=480, height=360) -> str:
    """Cells shaded by risk, with the three boundary curves on top."""
    pad = 40
    alphas = sorted({r["alpha"] for r in rows})
    Cs = sorted({r["C"] for r in rows})
    tests = sorted({r["test_id"] for r in rows})
    first = [r for r in rows if r["test_id"] == tests[0]]
    cmax = max([*Cs, *(r["c_hc_vanilla"] for r in first)]) or 1.0
    a0, a1 = min(alphas), max(alphas)
    span = (a1 - a0) or 1.0

    def X(a):
        return pad + (a - a0) / span * (width - 2 * pad)

    def Y(c):
        return height - pad - c / cmax * (height - 2 * pad)

    cw = (width - 2 * pad) / max(len(alphas), 1)
    ch = (height - 2 * pad) / max(len(Cs), 1)
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">']
    for r in first:
        shade = int(255 * min(max(r["risk"], 0.0), 1.0))
        out.append(
            f'<rect x="{X(r["alpha"]) - cw / 2:.1f}" y="{Y(r["C"]) - ch / 2:.1f}" width="{cw:.1f}" '
            f'height="{ch:.1f}" fill="rgb({shade},{shade},255)" opacity="0.6"/>'
        )
    for key, colour in (("c_sparse", "black"), ("c_hc_vanilla", "blue"), ("c_hc_optimal", "red")):
        pts = " ".join(f"{X(r['alpha']):.1f},{Y(r[key]):.1f}" for r in sorted(first, key=lambda r: r["alpha"])
                       if r["C"] == Cs[0])
        out.append(f'<polyline points="{pts}" fill="none" stroke="{colour}" stroke-width="2"/>')
    out.append(f'<text x="{width / 2:.0f}" y="{height - 8}" text-anchor="middle">alpha</text>')
    out.append(f'<text x="12" y="{height / 2:.0f}" transform="rotate(-90 12 {height / 2:.0f})">C</text>')
    out.append(f'<text x="{pad}" y="20">risk of {tests[0]}; boundaries: sparse (black), '
               f'HC vanilla (blue), HC optimal (red)</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


# ------------------------------------------------------------------ entry

def run(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already printed usage
        return int(exc.code or 0)
    if ns.subcommand is None:
        parser.print_usage(sys.stderr)
        print("sbmdeg: error: a subcommand is required", file=sys.stderr)
        return 2
    try:
        cfg = effective_config(ns)
        fmt = ns.format or ("json" if ns.subcommand == "thresholds" else "csv")
        ok = True
        if ns.subcommand == "thresholds":
            text = cmd_thresholds(cfg, fmt)
        elif ns.subcommand == "simulate":
            text = cmd_simulate(cfg, fmt)
        elif ns.subcommand == "power":
            text = cmd_power(cfg, fmt)
        elif ns.subcommand == "phase":
            text = cmd_phase(cfg, fmt, ns.svg)
        elif ns.subcommand == "gumbel":
            text = cmd_gumbel(cfg, fmt)
        else:
            text, ok = cmd_oracle(cfg, fmt)
        _emit(text, ns.output)
    except UsageError as exc:
        print(f"sbmdeg: error: {exc}", file=sys.stderr)
        return 2
    except (ParameterDomainError, ValueError, MemoryError, OSError) as exc:
        print(f"sbmdeg: error: {exc}", file=sys.stderr)
        return 1
    return 0 if ok else 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
