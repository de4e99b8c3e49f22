"""Ensemble explosion-probability estimates and parameter sweeps."""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .classify import RegimeVerdict, classify_regime
from .model import ModelSpec, PowerLaw, ValidationError, validate_model
from .simulate import SCHEMA_LINE, SimConfig, StepUnderflow, simulate_path

__all__ = [
    "MCResult",
    "PhaseCell",
    "SWEEPABLE",
    "wilson_interval",
    "estimate_explosion_prob",
    "aggregate",
    "with_param",
    "phase_diagram",
    "phase_to_csv",
    "phase_to_json",
]

log = logging.getLogger(__name__)

Z95 = 1.96
SWEEPABLE = ("alpha", "a_bar", "b0", "q0", "sigma", "beta")


def wilson_interval(k: int, n: int, z: float = Z95) -> tuple[float, float]:
    """Wilson score interval for k successes out of n."""
    if n <= 0:
        raise ValueError("n must be positive")
    p = k / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    # endpoints are exact at k = 0 and k = n; the formula leaves rounding residue there
    lo = 0.0 if k == 0 else max(0.0, center - half)
    hi = 1.0 if k == n else min(1.0, center + half)
    return lo, hi


@dataclass(frozen=True)
class MCResult:
    n_paths: int
    n_exploded: int
    estimate: float
    ci_low: float
    ci_high: float
    mean_tau_K: float | None
    n_failed: int
    config_echo: dict

    @property
    def halfwidth(self) -> float:
        return 0.5 * (self.ci_high - self.ci_low)

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _one(m: ModelSpec, cfg: SimConfig, key: tuple):
    try:
        p = simulate_path(m, cfg, key)
    except StepUnderflow as exc:
        log.warning("path %s failed: %s", key, exc)
        return None
    return p.tau_K if p.exploded else math.nan


def estimate_explosion_prob(m: ModelSpec, cfg: SimConfig, n: int, threads: int = 1,
                            key_prefix: tuple = ()) -> MCResult:
    """Fraction of ``n`` paths reaching ``cfg.K_explode`` before ``cfg.T_horizon``.

    Path i uses the substream ``(cfg.seed, *key_prefix, i)``, so results do not
    depend on ``threads``. Paths that raise :class:`StepUnderflow` are
    excluded and counted in ``n_failed``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    validate_model(m)
    keys = [(*key_prefix, i) for i in range(n)]
    workers = threads if threads > 0 else (os.cpu_count() or 1)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            taus = list(pool.map(lambda k: _one(m, cfg, k), keys))
    else:
        taus = [_one(m, cfg, k) for k in keys]
    return aggregate(taus, cfg)


def aggregate(taus: list, cfg: SimConfig) -> MCResult:
    """MCResult from per-path outcomes: tau_K, NaN (no explosion) or None (failed)."""
    done = [t for t in taus if t is not None]
    exploded = [t for t in done if not math.isnan(t)]
    n_ok = len(done)
    if n_ok == 0:
        raise StepUnderflow(math.nan, math.nan, cfg.dt_max)
    lo, hi = wilson_interval(len(exploded), n_ok)
    return MCResult(
        n_paths=n_ok,
        n_exploded=len(exploded),
        estimate=len(exploded) / n_ok,
        ci_low=lo,
        ci_high=hi,
        mean_tau_K=float(np.mean(exploded)) if exploded else None,
        n_failed=len(taus) - n_ok,
        config_echo=cfg.to_dict(),
    )


def with_param(m: ModelSpec, name: str, value: float) -> ModelSpec:
    """Copy of ``m`` with one sweepable parameter replaced."""
    br, env, comp = m.branching, m.environment, m.competition
    if name in ("alpha", "a_bar"):
        mu = replace(br.mu, **{name: float(value)})
        return replace(m, branching=replace(br, mu=mu))
    if name in ("b0", "q0"):
        if not isinstance(comp, PowerLaw):
            raise ValidationError([(name, "only power-law competition can be swept")])
        return replace(m, competition=replace(comp, **{name: float(value)}))
    if name in ("sigma", "beta"):
        return replace(m, environment=replace(env, **{name: float(value)}))
    raise ValueError(f"{name!r} is not sweepable; choose from {SWEEPABLE}")


@dataclass(frozen=True)
class PhaseCell:
    value1: float
    value2: float
    verdict: RegimeVerdict | None
    result: MCResult | None
    error: str | None = None

    @property
    def valid(self) -> bool:
        return self.error is None


def phase_diagram(base: ModelSpec, cfg: SimConfig, axis1: tuple[str, list], axis2: tuple[str, list],
                  n_per_cell: int, threads: int = 1) -> dict:
    """Classifier verdict and Monte Carlo estimate on a 2-d parameter grid.

    Cells are emitted row-major (axis1 outer); cell c uses substreams
    ``(seed, c, path)``. Cells whose parameters fail validation are kept
    and marked invalid.
    """
    (name1, values1), (name2, values2) = axis1, axis2
    for name in (name1, name2):
        if name not in SWEEPABLE:
            raise ValueError(f"{name!r} is not sweepable; choose from {SWEEPABLE}")
    cells = []
    for i, v1 in enumerate(values1):
        for j, v2 in enumerate(values2):
            idx = i * len(values2) + j
            try:
                m = validate_model(with_param(with_param(base, name1, v1), name2, v2))
            except ValidationError as exc:
                cells.append(PhaseCell(v1, v2, None, None, str(exc)))
                continue
            cells.append(PhaseCell(v1, v2, classify_regime(m),
                                   estimate_explosion_prob(m, cfg, n_per_cell, threads, key_prefix=(idx,))))
    return {"axis1": {"param": name1, "values": list(values1)},
            "axis2": {"param": name2, "values": list(values2)},
            "cells": cells}


PHASE_COLUMNS = ("axis1_value", "axis2_value", "verdict", "clause", "estimate",
                 "ci_low", "ci_high", "n_exploded", "n_paths")


def _row(cell: PhaseCell) -> list:
    if not cell.valid:
        return [cell.value1, cell.value2, "invalid", cell.error, "", "", "", "", ""]
    r, v = cell.result, cell.verdict
    return [cell.value1, cell.value2, v.verdict.value, v.clause.value, r.estimate,
            r.ci_low, r.ci_high, r.n_exploded, r.n_paths]


def phase_to_csv(diagram: dict) -> str:
    buf = io.StringIO()
    buf.write(SCHEMA_LINE + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(PHASE_COLUMNS)
    for cell in diagram["cells"]:
        w.writerow(_row(cell))
    return buf.getvalue()


def phase_to_json(diagram: dict) -> str:
    cells = []
    for cell in diagram["cells"]:
        cells.append({
            "axis1_value": cell.value1,
            "axis2_value": cell.value2,
            "valid": cell.valid,
            "error": cell.error,
            "verdict": cell.verdict.to_dict() if cell.verdict else None,
            "result": cell.result.to_dict() if cell.result else None,
        })
    return json.dumps({"schema": "cble-lab phase v1", "axis1": diagram["axis1"],
                       "axis2": diagram["axis2"], "cells": cells}, indent=2)
