"""Command-line entry point ``cble-lab``.

Exit codes: 0 success, 2 validation error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .analytics import (
    IDENTITY_ALPHAS,
    IDENTITY_DELTAS,
    IDENTITY_YS,
    QuadratureError,
    TailDivergence,
    beta_fn,
    c_alpha0,
    c_coeff,
    generator_apply,
    generator_truncated,
    lemma31_log_lhs,
    lemma31_power_lhs,
)
from .classify import UnsupportedMeasure, classify_regime
from .config import load_config, model_to_dict
from .lyapunov import make_test_function, scan_explosion_criterion, scan_nonexplosion_criterion
from .model import (
    BranchingSpec,
    ModelSpec,
    PowerLaw,
    PureStable,
    ValidationError,
)
from .montecarlo import SWEEPABLE, aggregate, phase_diagram, phase_to_csv, phase_to_json
from .simulate import SCHEMA_LINE, StepUnderflow, simulate_path
from .testfunctions import Linear, ShiftedInverse

log = logging.getLogger("cblelab")

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 2, 3


def _parse_params(text: str | None) -> dict:
    """``"delta=0.1,n=9"`` -> ``{"delta": 0.1, "n": 9}``; JSON objects are accepted too."""
    if not text:
        return {}
    text = text.strip()
    if text.startswith("{"):
        return json.loads(text)
    out = {}
    for item in text.split(","):
        key, sep, val = item.partition("=")
        if not sep:
            raise ValidationError([("--params", f"expected key=value, got {item!r}")])
        num = float(val)
        out[key.strip()] = int(num) if num.is_integer() and "." not in val and "e" not in val.lower() else num
    return out


def _parse_grid(text: str) -> np.ndarray:
    """``"geom:1e-2:1e6:81"`` for a geometric grid, otherwise a comma-separated list."""
    try:
        if text.startswith("geom:"):
            _, lo, hi, n = text.split(":")
            return np.geomspace(float(lo), float(hi), int(n))
        return np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise ValidationError([("--y-grid", f"cannot parse {text!r}")]) from None


def _parse_axis(text: str) -> tuple[str, list[float]]:
    name, sep, vals = text.partition("=")
    if not sep or name not in SWEEPABLE:
        raise ValidationError([("--axis", f"expected PARAM=v1,v2,... with PARAM in {SWEEPABLE}, got {text!r}")])
    try:
        return name, [float(v) for v in vals.split(",")]
    except ValueError:
        raise ValidationError([("--axis", f"cannot parse values in {text!r}")]) from None


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_classify(args) -> int:
    cfg = load_config(args.config)
    v = classify_regime(cfg.model)
    if args.json:
        print(json.dumps(v.to_dict(), indent=2))
        return EXIT_OK
    print(str(v))
    print(f"  {v.clause.description}")
    if v.boundary is not None:
        print(f"  boundary a_bar*c(alpha) = {v.boundary:.12g}")
    return EXIT_OK


def cmd_generator(args) -> int:
    cfg = load_config(args.config)
    try:
        g = make_test_function(args.family, **_parse_params(args.params))
    except (ValueError, json.JSONDecodeError) as exc:
        raise ValidationError([("--family/--params", str(exc))]) from None
    buf = io.StringIO()
    buf.write(SCHEMA_LINE + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["y", "Lg"])
    for y in _parse_grid(args.y_grid):
        val = generator_apply(cfg.model, g, y) if args.k is None else generator_truncated(cfg.model, g, y, args.k)
        w.writerow([repr(float(y)), repr(float(val))])
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def cmd_lyapunov(args) -> int:
    cfg = load_config(args.config)
    ly = cfg.lyapunov
    if args.mode == "scan-explosion":
        res = scan_explosion_criterion(cfg.model, list(ly.delta_grid), y_min=ly.y_min, y_max=ly.y_max, d0=ly.d0)
    else:
        res = scan_nonexplosion_criterion(cfg.model, n=ly.n, y_max=ly.y_max, k=ly.k)
    _emit(json.dumps(res.to_dict(), indent=2) + "\n", args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    n = args.paths if args.paths is not None else cfg.mc.paths
    if n < 1:
        raise ValidationError([("--paths", f"must be >= 1, got {n}")])
    out = Path(args.out or cfg.output.dir)
    out.mkdir(parents=True, exist_ok=True)

    def one(i):
        try:
            return simulate_path(cfg.model, cfg.sim, (i,))
        except StepUnderflow as exc:
            log.error("path %d: %s", i, exc)
            return None

    workers = _threads(args, cfg) or (os.cpu_count() or 1)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            records = list(pool.map(one, range(n)))
    else:
        records = [one(i) for i in range(n)]
    taus, paths = [], []
    for i, p in enumerate(records):
        if p is None:
            taus.append(None)
            continue
        taus.append(p.tau_K if p.exploded else math.nan)
        if cfg.output.csv:
            (out / f"path_{i:05d}.csv").write_text(p.to_csv())
        if cfg.output.json:
            (out / f"path_{i:05d}.json").write_text(p.to_json())
        paths.append({"index": i, "exploded": p.exploded, "tau_K": p.tau_K,
                      "absorbed": p.absorbed, "tau_0": p.tau_0, "n_steps": p.n_steps})
    if all(t is None for t in taus):
        raise StepUnderflow(math.nan, math.nan, cfg.sim.dt_max)
    summary = {
        "schema": "cble-lab summary v1",
        "model": model_to_dict(cfg.model),
        "verdict": classify_regime(cfg.model).to_dict(),
        "result": aggregate(taus, cfg.sim).to_dict(),
        "paths": paths,
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(f"{n} paths -> {out}; exploded {summary['result']['n_exploded']}/{summary['result']['n_paths']}")
    return EXIT_OK


def cmd_phase(args) -> int:
    cfg = load_config(args.config)
    ph = cfg.phase
    axis1 = _parse_axis(args.axis1) if args.axis1 else (ph.axis1, list(ph.values1))
    axis2 = _parse_axis(args.axis2) if args.axis2 else (ph.axis2, list(ph.values2))
    if not axis1[1] or not axis2[1]:
        raise ValidationError([("phase", "both axes need at least one value")])
    n = args.n_per_cell or ph.n_per_cell
    diagram = phase_diagram(cfg.model, cfg.sim, axis1, axis2, n, threads=_threads(args, cfg))
    out = Path(args.out or cfg.output.dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "phase.csv").write_text(phase_to_csv(diagram))
    (out / "phase.json").write_text(phase_to_json(diagram) + "\n")
    print(f"{len(diagram['cells'])} cells -> {out}")
    return EXIT_OK


def _identity_rows():
    rows = []
    worst = 0.0
    for a in IDENTITY_ALPHAS:
        for d in IDENTITY_DELTAS:
            for y in IDENTITY_YS:
                want = -d * c_coeff(a, d) * y ** (-a - d)
                worst = max(worst, abs(lemma31_power_lhs(y, d, a) / want - 1))
    rows.append(("power identity, 80 points", worst, 1e-8))
    worst = max(abs(lemma31_log_lhs(y, a) / (c_alpha0(a) * y ** -a) - 1) for a in IDENTITY_ALPHAS for y in IDENTITY_YS)
    rows.append(("log identity, 20 points", worst, 1e-8))
    worst = max(abs(beta_fn(a, 1 - a) / a / c_alpha0(a) - 1) for a in np.linspace(0.01, 0.99, 50))
    rows.append(("beta reflection, 50 alphas", worst, 1e-12))
    m = ModelSpec(BranchingSpec(0.0, 0.0, PureStable(1.0, 1.5)), competition=PowerLaw(0.0, 1.0, 0.0))
    rows.append(("linear g, alpha=1.5", abs(generator_apply(m, Linear(1.0), 1.0) - 2.0), 1e-6))
    m = ModelSpec(BranchingSpec(0.0, 0.0, PureStable(1.0, 0.5)), competition=PowerLaw(0.0, 1.0, 0.0))
    want = math.pi * 2 ** -1.5 - 0.5
    rows.append(("shifted inverse g, alpha=0.5", abs(generator_apply(m, ShiftedInverse(), 1.0) - want), 1e-6))
    return rows


def cmd_verify_identities(args) -> int:
    ok = True
    print(f"{'check':36s} {'error':>12s} {'tol':>8s}  result")
    for name, err, tol in _identity_rows():
        passed = err <= tol
        ok &= passed
        print(f"{name:36s} {err:12.3e} {tol:8.0e}  {'PASS' if passed else 'FAIL'}")
    return EXIT_OK if ok else EXIT_NUMERICAL


def _threads(args, cfg) -> int:
    return args.threads if args.threads is not None else cfg.mc.threads


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cble-lab", description="Explosion analysis for branching processes "
                                "with competition in a Levy environment.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("classify", help="regime verdict from the decision table")
    s.add_argument("--config", required=True)
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_classify)

    s = sub.add_parser("generator", help="CSV of (y, Lg(y)) for a test function")
    s.add_argument("--config", required=True)
    s.add_argument("--family", required=True, help="ExpInversePower, LogLog, Linear, Constant, ShiftedInverse")
    s.add_argument("--params", help='e.g. "delta=0.1" or a JSON object')
    s.add_argument("--y-grid", required=True, help='"geom:LO:HI:N" or "y1,y2,..."')
    s.add_argument("--k", type=float, help="truncate environment jumps above k")
    s.add_argument("--out")
    s.set_defaults(func=cmd_generator)

    s = sub.add_parser("lyapunov", help="Foster-Lyapunov scans")
    s.add_argument("mode", choices=["scan-explosion", "scan-nonexplosion"])
    s.add_argument("--config", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_lyapunov)

    s = sub.add_parser("simulate", help="per-path CSV/JSON files plus summary.json")
    s.add_argument("--config", required=True)
    s.add_argument("--paths", type=int)
    s.add_argument("--threads", type=int, help="worker cap, 0 = auto")
    s.add_argument("--out")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("phase", help="phase-diagram CSV and JSON")
    s.add_argument("--config", required=True)
    s.add_argument("--axis1", help="PARAM=v1,v2,...")
    s.add_argument("--axis2", help="PARAM=v1,v2,...")
    s.add_argument("--n-per-cell", type=int)
    s.add_argument("--threads", type=int, help="worker cap, 0 = auto")
    s.add_argument("--out")
    s.set_defaults(func=cmd_phase)

    s = sub.add_parser("verify-identities", help="fractional-integral and generator self-checks")
    s.set_defaults(func=cmd_verify_identities)
    return p


def run(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except ValidationError as exc:
        for f, r in exc.errors:
            print(f"validation error: {f}: {r}", file=sys.stderr)
        return EXIT_VALIDATION
    except (UnsupportedMeasure, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (TailDivergence, StepUnderflow, QuadratureError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
