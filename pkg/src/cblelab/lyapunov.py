"""Numerical Foster-Lyapunov scans for explosion and nonexplosion.

A scan is evidence, not proof: the drift inequality is checked on a finite
geometric grid, and the behaviour beyond the grid is judged from the
leading analytic terms of the bound. Both parts are reported.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .analytics import c_coeff, generator_apply, generator_truncated
from .classify import REL_TOL, critical_b0
from .model import ModelSpec, PowerLaw, Tabulated
from .testfunctions import (
    Constant,
    ExpInversePower,
    Linear,
    LogLog,
    ShiftedInverse,
    TestFunction,
)

__all__ = [
    "GRID_SEED",
    "ExplosionCertificate",
    "NonexplosionEvidence",
    "NotFound",
    "make_test_function",
    "geometric_grid",
    "scan_explosion_criterion",
    "replay_certificate",
    "explosion_prob_lower_bound",
    "scan_nonexplosion_criterion",
]

GRID_SEED = 20240517
PER_DECADE = 64
JITTER = 0.01
RATIO_FLOOR = 1e-9


@dataclass(frozen=True)
class ExplosionCertificate:
    delta: float
    y_bar: float
    d0: float
    margin: float
    y_max: float

    def to_dict(self) -> dict:
        return {"kind": "ExplosionCertificate", **self.__dict__}


@dataclass(frozen=True)
class NonexplosionEvidence:
    n: int
    d_n: float
    y_max: float
    asymptotic_ok: bool
    k: float

    def to_dict(self) -> dict:
        return {"kind": "NonexplosionEvidence", **self.__dict__}


@dataclass(frozen=True)
class NotFound:
    reason: str
    details: dict = field(default_factory=dict)

    def __bool__(self) -> bool:
        return False

    def to_dict(self) -> dict:
        return {"kind": "NotFound", "reason": self.reason, "details": self.details}


_FAMILIES = {
    "ExpInversePower": lambda delta: ExpInversePower(float(delta)),
    "LogLog": lambda n: LogLog(n),
    "Linear": lambda slope=1.0: Linear(float(slope)),
    "Constant": lambda value=1.0: Constant(float(value)),
    "ShiftedInverse": lambda: ShiftedInverse(),
}


def make_test_function(family: str, **params) -> TestFunction:
    if family not in _FAMILIES:
        raise ValueError(f"unknown test-function family {family!r}; choose from {sorted(_FAMILIES)}")
    if family == "ExpInversePower" and not params.get("delta", 0) > 0:
        raise ValueError("ExpInversePower needs delta > 0")
    try:
        return _FAMILIES[family](**params)
    except TypeError as exc:
        raise ValueError(f"bad parameters for {family}: {exc}") from None


def geometric_grid(y_min: float, y_max: float, per_decade: int = PER_DECADE,
                   jitter: float = JITTER, seed: int | None = GRID_SEED) -> np.ndarray:
    """Sorted geometric grid on [y_min, y_max], each interior point scaled by up to (1 +- jitter)."""
    n = max(2, int(math.ceil(per_decade * math.log10(y_max / y_min))) + 1)
    ys = np.geomspace(y_min, y_max, n)
    if jitter and seed is not None:
        rng = np.random.default_rng(seed)
        ys[1:-1] *= 1.0 + jitter * rng.uniform(-1.0, 1.0, n - 2)
    return np.sort(ys)


def _leading_term_diverges(m: ModelSpec, delta: float) -> tuple[bool, str]:
    mu = m.branching.mu
    alpha, a_bar = mu.alpha, mu.a_bar
    exponent = 1.0 - alpha - delta
    if exponent <= 0:
        return False, f"jump term exponent 1-alpha-delta = {exponent:.4g} <= 0"
    comp = m.competition
    if isinstance(comp, Tabulated):
        # linear extrapolation: competition grows like y^1 < y^(2-alpha)
        return True, "tabulated competition grows linearly"
    if comp.b0 == 0:
        return True, "no competition"
    crit = 2.0 - alpha
    if math.isclose(comp.q0, crit, rel_tol=REL_TOL):
        ac = a_bar * c_coeff(alpha, delta)
        if comp.b0 < ac:
            return True, f"b0 = {comp.b0} < a_bar c(alpha, delta) = {ac:.6g}"
        return False, f"b0 = {comp.b0} >= a_bar c(alpha, delta) = {ac:.6g}"
    if comp.q0 < crit:
        return True, "competition exponent below 2 - alpha"
    return False, f"competition term y^(q0-1-delta) dominates (q0 = {comp.q0} > 2 - alpha)"


def scan_explosion_criterion(m: ModelSpec, delta_grid, y_min: float = 1e-2, y_max: float = 1e6,
                             d0: float = 1.0, per_decade: int = PER_DECADE, seed: int = GRID_SEED,
                             min_decades: float = 1.0):
    """Search for delta and y_bar with L g(y) >= d0 g(y) on the grid above y_bar, g = exp(-y^-delta).

    Returns the first :class:`ExplosionCertificate` in ``delta_grid`` order, or
    :class:`NotFound`. A candidate needs the inequality on at least
    ``min_decades`` decades below ``y_max`` and a diverging leading term.
    """
    if not len(delta_grid):
        raise ValueError("delta_grid must be non-empty")
    ys = geometric_grid(y_min, y_max, per_decade, seed=seed)
    reasons = {}
    for delta in delta_grid:
        ok, why = _leading_term_diverges(m, delta)
        if not ok:
            reasons[delta] = why
            continue
        g = ExpInversePower(delta)
        gap = np.array([generator_apply(m, g, y) for y in ys]) - d0 * g.g(ys)
        bad = np.nonzero(gap < 0)[0]
        start = 0 if bad.size == 0 else bad[-1] + 1
        if start >= len(ys) or math.log10(y_max / ys[start]) < min_decades:
            reasons[delta] = "drift inequality not established on a full decade of the grid"
            continue
        return ExplosionCertificate(float(delta), float(ys[start]), d0, float(gap[start:].min()), y_max)
    return NotFound("no delta produced a certificate", {str(k): v for k, v in reasons.items()})


def replay_certificate(m: ModelSpec, cert: ExplosionCertificate, seed: int,
                       per_decade: int = PER_DECADE) -> float:
    """Minimum of L g - d0 g over a freshly jittered grid on [y_bar, y_max]."""
    g = ExpInversePower(cert.delta)
    ys = geometric_grid(cert.y_bar, cert.y_max, per_decade, seed=seed)
    return float(min(generator_apply(m, g, y) - cert.d0 * g.g(y) for y in ys))


def explosion_prob_lower_bound(g: TestFunction, y0: float, y_bar: float) -> float:
    """max(0, (g(y0) - g(y_bar)) / sup g) for a bounded increasing g."""
    if not g.bounded or not math.isfinite(g.sup):
        raise ValueError(f"{g.family} is unbounded; the bound needs sup g < inf")
    if not y_bar > 0:
        raise ValueError("y_bar must be > 0")
    return max(0.0, (float(g.g(y0)) - float(g.g(y_bar))) / g.sup)


def _tail_bound_bounded(m: ModelSpec) -> tuple[bool, str]:
    mu = m.branching.mu
    alpha, a_bar = mu.alpha, mu.a_bar
    if alpha >= 1:
        return True, "alpha >= 1"
    comp = m.competition
    if not isinstance(comp, PowerLaw):
        return False, "tabulated competition: no power-law lower bound"
    crit = 2.0 - alpha
    bound = critical_b0(a_bar, alpha)
    if math.isclose(comp.q0, crit, rel_tol=REL_TOL):
        if comp.b0 >= bound or math.isclose(comp.b0, bound, rel_tol=REL_TOL):
            return True, f"q0 = 2 - alpha and b0 >= {bound:.6g}"
        return False, f"q0 = 2 - alpha but b0 < {bound:.6g}"
    if comp.q0 > crit and comp.b0 > 0:
        return True, "q0 > 2 - alpha and b0 > 0"
    return False, "jump term a_bar c y^(1-alpha) is not offset by competition"


def scan_nonexplosion_criterion(m: ModelSpec, n: int = 9, y_max: float = 1e6, k: float = 10.0,
                                per_decade: int = PER_DECADE, seed: int = GRID_SEED):
    """Bound L_k g_n / g_n on a grid of [1/n, y_max], g_n the LogLog function.

    Returns :class:`NonexplosionEvidence` with ``d_n`` the grid maximum
    (floored at a small positive value) when the ratio is not still growing
    over the last decade and the analytic tail bound is bounded above;
    otherwise :class:`NotFound`.
    """
    g = LogLog(n)
    ys = geometric_grid(1.0 / n, y_max, per_decade, seed=seed)
    ratio = np.array([generator_truncated(m, g, y, k) for y in ys]) / g.g(ys)
    d_n = max(float(ratio.max()), RATIO_FLOOR)
    last = ratio[ys >= y_max / 10.0]
    growing = last.size > 1 and bool(np.all(np.diff(last) > 0))
    asym_ok, why = _tail_bound_bounded(m)
    details = {"d_n_grid": d_n, "tail": why, "ratio_end": float(ratio[-1])}
    if growing:
        return NotFound("L_k g_n / g_n keeps growing over the last decade of the grid", details)
    if not asym_ok:
        return NotFound("analytic tail bound is unbounded", details)
    return NonexplosionEvidence(int(n), d_n, float(y_max), True, float(k))
