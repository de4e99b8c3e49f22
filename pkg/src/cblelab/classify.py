"""Regime classification from the stable tail index and power-law competition.

Decision table, applied in order (alpha, a_bar from the stable tail of mu;
b0, q0 from the power-law competition; c = pi / (alpha sin(alpha pi))):

=====================================  ============  ==========================
condition                              verdict       clause
=====================================  ============  ==========================
alpha >= 1                             NonExplosive  ``heavy-index``
alpha < 1, q0 > 2 - alpha, b0 > 0      NonExplosive  ``strong-competition``
alpha < 1, q0 = 2 - alpha, b0 >= a c   NonExplosive  ``critical-competition``
alpha < 1, b0 = 0                      ExplodesWPP   ``no-competition``
alpha < 1, q0 < 2 - alpha, b0 > 0      ExplodesWPP   ``weak-competition``
alpha < 1, q0 = 2 - alpha, b0 < a c    ExplodesWPP   ``subcritical-competition``
tabulated competition, alpha < 1       Indeterminate ``tabulated-competition``
=====================================  ============  ==========================

With a stable tail and power-law competition the first six rows cover every
parameter cell, so ``Indeterminate`` only arises for tabulated competition.
``ExplodesWPP`` means explosion with positive probability for large enough
initial states; it says nothing about small y0 or almost-sure explosion.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .analytics import c_alpha0
from .model import ModelSpec, PowerLaw, PureStable, StableTailPlusFinite, Tabulated

__all__ = [
    "Verdict",
    "Clause",
    "RegimeVerdict",
    "UnsupportedMeasure",
    "classify_regime",
    "critical_b0",
]

# relative tolerance for the equality cases q0 = 2 - alpha and b0 = a_bar c
REL_TOL = 1e-12


class UnsupportedMeasure(TypeError):
    pass


class Verdict(str, enum.Enum):
    EXPLODES_WPP = "ExplodesWPP"
    NON_EXPLOSIVE = "NonExplosive"
    INDETERMINATE = "Indeterminate"


class Clause(str, enum.Enum):
    HEAVY_INDEX = "heavy-index"
    STRONG_COMPETITION = "strong-competition"
    CRITICAL_COMPETITION = "critical-competition"
    NO_COMPETITION = "no-competition"
    WEAK_COMPETITION = "weak-competition"
    SUBCRITICAL_COMPETITION = "subcritical-competition"
    TABULATED = "tabulated-competition"

    @property
    def description(self) -> str:
        return _DESCRIPTIONS[self]

    @property
    def verdict(self) -> Verdict:
        if self in (Clause.HEAVY_INDEX, Clause.STRONG_COMPETITION, Clause.CRITICAL_COMPETITION):
            return Verdict.NON_EXPLOSIVE
        if self is Clause.TABULATED:
            return Verdict.INDETERMINATE
        return Verdict.EXPLODES_WPP


_DESCRIPTIONS = {
    Clause.HEAVY_INDEX: "alpha >= 1: the stable tail is too light to explode, whatever the competition",
    Clause.STRONG_COMPETITION: "alpha < 1, q0 > 2 - alpha and b0 > 0: competition outgrows the jump input",
    Clause.CRITICAL_COMPETITION: "alpha < 1, q0 = 2 - alpha and b0 >= a_bar*c(alpha): competition at least balances the jump input",
    Clause.NO_COMPETITION: "alpha < 1 and b0 = 0: nothing offsets the large jumps",
    Clause.WEAK_COMPETITION: "alpha < 1, q0 < 2 - alpha and b0 > 0: the jump input outgrows competition",
    Clause.SUBCRITICAL_COMPETITION: "alpha < 1, q0 = 2 - alpha and 0 < b0 < a_bar*c(alpha): jump input dominates at the critical exponent",
    Clause.TABULATED: "tabulated competition has no power-law envelope; run the Lyapunov scans instead",
}


@dataclass(frozen=True)
class RegimeVerdict:
    verdict: Verdict
    clause: Clause
    assumptions_used: tuple[str, ...]
    boundary: float | None = None  # a_bar * c(alpha) when alpha < 1

    def __str__(self) -> str:
        return f"{self.verdict.value} ({self.clause.value})"

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "clause": self.clause.value,
            "description": self.clause.description,
            "assumptions_used": list(self.assumptions_used),
            "boundary": self.boundary,
        }


def critical_b0(a_bar: float, alpha: float) -> float:
    """Competition amplitude a_bar * pi / (alpha sin(alpha pi)) separating the regimes at q0 = 2 - alpha."""
    return a_bar * c_alpha0(alpha)


def _close(a: float, b: float) -> bool:
    return math.isclose(a, b, rel_tol=REL_TOL, abs_tol=REL_TOL)


def classify_regime(m: ModelSpec) -> RegimeVerdict:
    mu = m.branching.mu
    if isinstance(mu, PureStable):
        tail = "mu(dz) = a_bar z^(-1-alpha) dz on (0, inf): tail bounded above and below by the same stable density"
    elif isinstance(mu, StableTailPlusFinite):
        tail = (f"mu equals a_bar z^(-1-alpha) dz beyond A={mu.A}: tail bounded above and below "
                "by the same stable density")
    else:
        raise UnsupportedMeasure(f"no stable tail for {type(mu).__name__}")
    comp = m.competition
    if not isinstance(comp, (PowerLaw, Tabulated)):
        raise UnsupportedMeasure(f"unsupported competition {type(comp).__name__}")

    alpha, a_bar = mu.alpha, mu.a_bar
    if alpha >= 1:
        return RegimeVerdict(Verdict.NON_EXPLOSIVE, Clause.HEAVY_INDEX, (tail,))

    boundary = critical_b0(a_bar, alpha)
    if isinstance(comp, Tabulated):
        return RegimeVerdict(Verdict.INDETERMINATE, Clause.TABULATED, (tail,), boundary)

    used = (tail, f"b0(y) = {comp.b0} y^{comp.q0} for y >= {comp.A}: bounded above and below by the same power")
    b0, q0 = comp.b0, comp.q0
    critical = 2.0 - alpha
    on_critical = _close(q0, critical)
    if b0 > 0 and q0 > critical and not on_critical:
        clause = Clause.STRONG_COMPETITION
    elif on_critical and (b0 >= boundary or _close(b0, boundary)):
        clause = Clause.CRITICAL_COMPETITION
    elif b0 == 0:
        clause = Clause.NO_COMPETITION
    elif q0 < critical and not on_critical:
        clause = Clause.WEAK_COMPETITION
    else:
        clause = Clause.SUBCRITICAL_COMPETITION
    return RegimeVerdict(clause.verdict, clause, used, boundary)
