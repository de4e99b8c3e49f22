"""Parameter specifications for a branching process with competition in a Levy environment.

The process solves

    dY = (b1 Y - b0(Y)) dt + sqrt(2 b2^2 Y) dB + (jumps of size z at rate Y mu(dz)) + Y dL,

where L is the environment Levy process with drift ``beta``, Brownian part
``sigma`` and a finite-activity jump measure ``nu`` acting as ``y -> y e^z``.
All specs are frozen dataclasses; :func:`validate_model` checks the invariants.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np
from scipy import integrate, special

__all__ = [
    "ValidationError",
    "PureStable",
    "StableTailPlusFinite",
    "JumpMeasure",
    "BranchingSpec",
    "PointMass",
    "Uniform",
    "TwoSidedExponential",
    "EnvJump",
    "EnvironmentSpec",
    "PowerLaw",
    "Tabulated",
    "Competition",
    "ModelSpec",
    "validate_model",
    "phi",
    "mu_tail_mass",
    "competition_eval",
]


class ValidationError(ValueError):
    """Raised when a spec violates an invariant.

    ``field`` and ``reason`` describe the first violation; ``errors`` holds
    every ``(field, reason)`` pair found.
    """

    def __init__(self, errors: list[tuple[str, str]]):
        self.errors = list(errors)
        self.field, self.reason = self.errors[0]
        super().__init__("; ".join(f"{f}: {r}" for f, r in self.errors))


# ---------------------------------------------------------------------------
# Branching jump measure mu
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PureStable:
    """mu(dz) = a_bar z^(-1-alpha) dz on (0, inf)."""

    a_bar: float
    alpha: float

    @property
    def stable_start(self) -> float:
        return 0.0

    @property
    def atoms(self) -> tuple[tuple[float, float], ...]:
        return ()


@dataclass(frozen=True)
class StableTailPlusFinite:
    """Stable density a_bar z^(-1-alpha) on (A, inf) plus finitely many atoms in (0, A].

    ``inner`` is a sequence of ``(mass, size)`` pairs.
    """

    a_bar: float
    alpha: float
    A: float
    inner: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "inner", tuple((float(m), float(z)) for m, z in self.inner))

    @property
    def stable_start(self) -> float:
        return float(self.A)

    @property
    def atoms(self) -> tuple[tuple[float, float], ...]:
        return self.inner


JumpMeasure = Union[PureStable, StableTailPlusFinite]


@dataclass(frozen=True)
class BranchingSpec:
    b1: float
    b2: float
    mu: JumpMeasure


# ---------------------------------------------------------------------------
# Environment
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PointMass:
    z: float

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return np.full(size, float(self.z))

    def expect(self, fn: Callable[[float], float], lo: float = -math.inf, hi: float = math.inf) -> float:
        """E[fn(Z); lo <= Z <= hi]."""
        return float(fn(self.z)) if lo <= self.z <= hi else 0.0

    def support(self) -> tuple[float, float]:
        return (self.z, self.z)


@dataclass(frozen=True)
class Uniform:
    lo: float
    hi: float

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.uniform(self.lo, self.hi, size)

    def expect(self, fn, lo=-math.inf, hi=math.inf) -> float:
        a, b = max(lo, self.lo), min(hi, self.hi)
        if a >= b:
            return 0.0
        val, _ = integrate.quad(fn, a, b, epsabs=1e-13, epsrel=1e-11, limit=200)
        return val / (self.hi - self.lo)

    def support(self) -> tuple[float, float]:
        return (self.lo, self.hi)


@dataclass(frozen=True)
class TwoSidedExponential:
    """Density p_up eta_up e^(-eta_up z) on z > 0 and (1-p_up) eta_down e^(eta_down z) on z < 0."""

    p_up: float
    eta_up: float
    eta_down: float

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        up = rng.random(size) < self.p_up
        mag = rng.exponential(1.0, size)
        return np.where(up, mag / self.eta_up, -mag / self.eta_down)

    def density(self, z: float) -> float:
        if z >= 0:
            return self.p_up * self.eta_up * math.exp(-self.eta_up * z)
        return (1.0 - self.p_up) * self.eta_down * math.exp(self.eta_down * z)

    def expect(self, fn, lo=-math.inf, hi=math.inf) -> float:
        total = 0.0
        for a, b in ((max(lo, -math.inf), min(hi, 0.0)), (max(lo, 0.0), min(hi, math.inf))):
            if a >= b:
                continue
            val, _ = integrate.quad(lambda z: fn(z) * self.density(z), a, b,
                                    epsabs=1e-13, epsrel=1e-11, limit=200)
            total += val
        return total

    def support(self) -> tuple[float, float]:
        lo = -math.inf if self.p_up < 1 else 0.0
        hi = math.inf if self.p_up > 0 else 0.0
        return (lo, hi)


JumpLaw = Union[PointMass, Uniform, TwoSidedExponential]


@dataclass(frozen=True)
class EnvJump:
    """One component of nu: jumps arriving at ``rate`` with sizes drawn from ``law``."""

    rate: float
    law: JumpLaw


@dataclass(frozen=True)
class EnvironmentSpec:
    beta: float = 0.0
    sigma: float = 0.0
    nu: tuple[EnvJump, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "nu", tuple(self.nu))

    @property
    def total_rate(self) -> float:
        return float(sum(c.rate for c in self.nu))

    def integrate(self, fn: Callable[[float], float], lo: float = -math.inf, hi: float = math.inf) -> float:
        """Integral of ``fn`` against nu restricted to [lo, hi]."""
        return float(sum(c.rate * c.law.expect(fn, lo, hi) for c in self.nu))

    def small_jump_compensator(self) -> float:
        """int_{[-1,1]} (e^z - 1) nu(dz)."""
        return self.integrate(math.expm1, -1.0, 1.0)


# ---------------------------------------------------------------------------
# Competition
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PowerLaw:
    """b0(y) = b0 y^q0 for y >= A, linear from (0, 0) to (A, b0 A^q0) below A."""

    b0: float
    q0: float
    A: float = 0.0


@dataclass(frozen=True)
class Tabulated:
    """Piecewise-linear competition through ``breakpoints``; extrapolated with the last slope."""

    breakpoints: tuple[tuple[float, float], ...]

    def __post_init__(self):
        object.__setattr__(self, "breakpoints", tuple((float(a), float(b)) for a, b in self.breakpoints))


Competition = Union[PowerLaw, Tabulated]


@dataclass(frozen=True)
class ModelSpec:
    branching: BranchingSpec
    environment: EnvironmentSpec = field(default_factory=EnvironmentSpec)
    competition: Competition = field(default_factory=lambda: PowerLaw(0.0, 1.0, 0.0))
    y0: float = 1.0


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


def _finite(x) -> bool:
    try:
        return math.isfinite(float(x))
    except (TypeError, ValueError):
        return False


def _check_mu(mu, errs):
    if not isinstance(mu, (PureStable, StableTailPlusFinite)):
        errs.append(("mu", f"unsupported jump measure {type(mu).__name__}"))
        return
    if not (_finite(mu.alpha) and 0.0 < mu.alpha < 2.0):
        errs.append(("alpha", f"alpha must lie in (0, 2), got {mu.alpha}"))
    if not (_finite(mu.a_bar) and mu.a_bar > 0):
        errs.append(("a_bar", f"a_bar must be > 0, got {mu.a_bar}"))
    if isinstance(mu, StableTailPlusFinite):
        if not (_finite(mu.A) and mu.A > 0):
            errs.append(("mu.A", f"cut point A must be > 0, got {mu.A}"))
        for i, (mass, size) in enumerate(mu.inner):
            if not (_finite(mass) and mass >= 0):
                errs.append((f"mu.inner[{i}].mass", f"atom mass must be >= 0, got {mass}"))
            if not (_finite(size) and 0 < size <= mu.A):
                errs.append((f"mu.inner[{i}].size", f"atom size must lie in (0, A], got {size}"))


def _check_law(law, prefix, errs):
    if isinstance(law, PointMass):
        if not _finite(law.z):
            errs.append((f"{prefix}.z", "jump size must be finite"))
    elif isinstance(law, Uniform):
        if not (_finite(law.lo) and _finite(law.hi) and law.lo < law.hi):
            errs.append((f"{prefix}", f"uniform law needs finite lo < hi, got ({law.lo}, {law.hi})"))
    elif isinstance(law, TwoSidedExponential):
        if not (0.0 <= law.p_up <= 1.0):
            errs.append((f"{prefix}.p_up", f"p_up must lie in [0, 1], got {law.p_up}"))
        if not (_finite(law.eta_up) and law.eta_up > 0 and _finite(law.eta_down) and law.eta_down > 0):
            errs.append((f"{prefix}.eta", "exponential rates must be finite and > 0"))
    else:
        errs.append((prefix, f"unsupported jump law {type(law).__name__}"))


def _check_competition(c, errs):
    if isinstance(c, PowerLaw):
        if not (_finite(c.b0) and c.b0 >= 0):
            errs.append(("b0", f"b0 must be >= 0, got {c.b0}"))
            return
        if not _finite(c.q0):
            errs.append(("q0", "q0 must be finite"))
            return
        if not (_finite(c.A) and c.A >= 0):
            errs.append(("competition.A", f"activation level must be >= 0, got {c.A}"))
            return
        if c.b0 > 0 and c.q0 < 0:
            errs.append(("competition", "b0*y^q0 with q0 < 0 is not non-decreasing (monotone at 0 fails)"))
            return
        if c.b0 > 0 and c.q0 == 0 and c.A == 0:
            errs.append(("competition", "q0 = 0 with A = 0 is discontinuous at 0 since b0(0) = 0"))
            return
    elif isinstance(c, Tabulated):
        bp = c.breakpoints
        if len(bp) < 2:
            errs.append(("competition.breakpoints", "need at least two breakpoints"))
            return
        if bp[0] != (0.0, 0.0):
            errs.append(("competition.breakpoints", "first breakpoint must be (0, 0)"))
        ys = [p[0] for p in bp]
        vs = [p[1] for p in bp]
        if not all(_finite(v) for v in ys + vs):
            errs.append(("competition.breakpoints", "breakpoints must be finite"))
        elif any(b <= a for a, b in zip(ys, ys[1:])):
            errs.append(("competition.breakpoints", "breakpoint abscissae must be strictly increasing"))
        elif any(b < a for a, b in zip(vs, vs[1:])):
            errs.append(("competition", "tabulated competition must be non-decreasing"))
        return
    else:
        errs.append(("competition", f"unsupported competition {type(c).__name__}"))
        return
    grid = np.concatenate([[0.0], np.geomspace(1e-6, 1e6, 241), [c.A] if c.A > 0 else []])
    vals = competition_eval(c, np.sort(grid))
    if vals[0] != 0.0 or np.any(np.diff(vals) < 0):
        errs.append(("competition", "realized competition is not non-decreasing with b0(0) = 0"))


def validate_model(raw: ModelSpec) -> ModelSpec:
    """Return ``raw`` unchanged if every invariant holds, else raise :class:`ValidationError`."""
    errs: list[tuple[str, str]] = []
    br = raw.branching
    if not _finite(br.b1):
        errs.append(("b1", "b1 must be finite"))
    if not _finite(br.b2):
        errs.append(("b2", "b2 must be finite"))
    _check_mu(br.mu, errs)

    env = raw.environment
    if not _finite(env.beta):
        errs.append(("beta", "beta must be finite"))
    if not (_finite(env.sigma) and env.sigma >= 0):
        errs.append(("sigma", f"sigma must be >= 0, got {env.sigma}"))
    for i, comp in enumerate(env.nu):
        if not (_finite(comp.rate) and comp.rate >= 0):
            errs.append((f"nu[{i}].rate", f"rate must be finite and >= 0, got {comp.rate}"))
        _check_law(comp.law, f"nu[{i}].law", errs)

    _check_competition(raw.competition, errs)

    if not (_finite(raw.y0) and raw.y0 >= 0):
        errs.append(("y0", f"initial state must be >= 0, got {raw.y0}"))
    if errs:
        raise ValidationError(errs)
    return raw


# ---------------------------------------------------------------------------
# Closed-form quantities
# ---------------------------------------------------------------------------


def mu_tail_mass(m: JumpMeasure, x: float) -> float:
    """mu([x, inf)) for x > 0."""
    if x <= 0:
        raise ValueError("x must be > 0")
    start = max(x, m.stable_start)
    tail = m.a_bar * start ** (-m.alpha) / m.alpha
    return tail + sum(mass for mass, size in m.atoms if size >= x)


def mu_truncated_moment(m: JumpMeasure, p: float, lo: float, hi: float) -> float:
    """int_{[lo, hi)} z^p mu(dz) for 0 <= lo < hi <= inf (requires p > alpha near 0 if lo = 0)."""
    a = max(lo, m.stable_start)
    total = 0.0
    if a < hi:
        e = p - m.alpha
        if e == 0:
            total += m.a_bar * (math.log(hi) - math.log(a))
        else:
            upper = 0.0 if math.isinf(hi) else hi ** e
            lower = a ** e
            total += m.a_bar * (upper - lower) / e
    total += sum(mass * size ** p for mass, size in m.atoms if lo <= size < hi)
    return total


def competition_eval(c: Competition, y):
    """b0(y); accepts scalars or arrays."""
    y_arr = np.asarray(y, dtype=float)
    if isinstance(c, PowerLaw):
        if c.b0 == 0:
            out = np.zeros_like(y_arr)
        elif c.A > 0:
            top = c.b0 * c.A ** c.q0
            with np.errstate(divide="ignore", invalid="ignore"):
                above = c.b0 * np.power(np.maximum(y_arr, c.A), c.q0)
            out = np.where(y_arr >= c.A, above, top * y_arr / c.A)
        else:
            with np.errstate(divide="ignore"):
                out = np.where(y_arr > 0, c.b0 * np.power(np.where(y_arr > 0, y_arr, 1.0), c.q0), 0.0)
    else:
        xs = np.array([p[0] for p in c.breakpoints])
        vs = np.array([p[1] for p in c.breakpoints])
        slope = (vs[-1] - vs[-2]) / (xs[-1] - xs[-2])
        out = np.where(y_arr <= xs[-1], np.interp(y_arr, xs, vs), vs[-1] + slope * (y_arr - xs[-1]))
    return float(out) if np.ndim(out) == 0 else out


def _phi_stable_closed(a_bar: float, alpha: float, lam: float) -> float:
    # int_0^inf (e^{-lz} - 1 + l z 1{z<1}) z^{-1-alpha} dz = Gamma(-alpha) l^alpha + l/(1-alpha)
    return a_bar * (special.gamma(-alpha) * lam ** alpha + lam / (1.0 - alpha))


def _phi_jump_quad(m: JumpMeasure, lam: float) -> float:
    a_bar, alpha, s0 = m.a_bar, m.alpha, m.stable_start
    opts = dict(epsabs=1e-10, epsrel=1e-8, limit=200)
    total = 0.0
    if s0 < 1.0:
        if s0 == 0.0:
            # second-order remainder over z^2, integrated against the weight z^(1-alpha)
            def rem(z):
                return (math.expm1(-lam * z) + lam * z) / (z * z) if z > 0 else 0.5 * lam * lam
            val, _ = integrate.quad(rem, 0.0, 1.0, weight="alg", wvar=(1.0 - alpha, 0.0), **opts)
        else:
            val, _ = integrate.quad(lambda z: (math.expm1(-lam * z) + lam * z) * z ** (-1 - alpha), s0, 1.0, **opts)
        total += a_bar * val
    lo = max(1.0, s0)
    val, _ = integrate.quad(lambda z: math.expm1(-lam * z) * z ** (-1 - alpha), lo, math.inf, **opts)
    total += a_bar * val
    for mass, size in m.atoms:
        total += mass * (math.expm1(-lam * size) + (lam * size if size < 1 else 0.0))
    return total


def phi(b: BranchingSpec, lam: float, method: str = "auto") -> float:
    """Branching mechanism at ``lam >= 0``.

    ``method="auto"`` uses the Gamma-function closed form for a pure stable
    measure away from alpha = 1 and quadrature otherwise; ``"quad"`` forces
    quadrature.
    """
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    if lam == 0:
        return 0.0
    base = -b.b1 * lam + b.b2 ** 2 * lam ** 2
    mu = b.mu
    if method == "auto" and isinstance(mu, PureStable) and abs(mu.alpha - 1.0) > 1e-3:
        return base + _phi_stable_closed(mu.a_bar, mu.alpha, lam)
    return base + _phi_jump_quad(mu, lam)
