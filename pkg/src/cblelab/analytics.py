"""Beta-function coefficients, fractional power/log integrals and the generator L.

The quadrature routines here are deliberately independent of the closed
forms they are checked against: the integrals are computed numerically
after a scaling substitution, and compared with ``c_coeff`` in the tests.
"""
from __future__ import annotations

import math
import warnings

import numpy as np
from scipy import integrate, special

from .model import (
    ModelSpec,
    PureStable,
    StableTailPlusFinite,
    competition_eval,
)
from .testfunctions import TestFunction

__all__ = [
    "QuadratureError",
    "TailDivergence",
    "beta_fn",
    "c_coeff",
    "c_alpha0",
    "lemma31_power_lhs",
    "lemma31_log_lhs",
    "generator_apply",
    "generator_truncated",
    "generator_terms",
    "IDENTITY_ALPHAS",
    "IDENTITY_DELTAS",
    "IDENTITY_YS",
]

# reference grid for the fractional-integral self-checks
IDENTITY_ALPHAS = (0.1, 0.3, 0.5, 0.7, 0.9)
IDENTITY_DELTAS = (0.1, 0.5, 1.0, 2.0)
IDENTITY_YS = (0.5, 1.0, 10.0, 100.0)


class QuadratureError(ArithmeticError):
    """Adaptive quadrature failed to reach its tolerance."""

    def __init__(self, what: str, value: float, abserr: float):
        self.value = value
        self.abserr = abserr
        super().__init__(f"{what}: quadrature did not converge (value={value!r}, error estimate={abserr:.3e})")


class TailDivergence(ArithmeticError):
    """The large-jump integral of the test function does not converge."""


_TIGHT = dict(epsabs=0.0, epsrel=1e-13, limit=400)


def _quad(what, f, a, b, tol=1e-7, **kw):
    opts = dict(epsabs=1e-13, epsrel=1e-11, limit=400)
    opts.update(kw)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        out = integrate.quad(f, a, b, full_output=1, **opts)
    val, err = out[0], out[1]
    if not math.isfinite(val):
        raise QuadratureError(what, val, err)
    if len(out) > 3 and err > tol * max(1.0, abs(val)):
        raise QuadratureError(what, val, err)
    return val


def beta_fn(p: float, q: float) -> float:
    """B(p, q) = Gamma(p) Gamma(q) / Gamma(p + q)."""
    if not (p > 0 and q > 0):
        raise ValueError(f"Beta function needs p, q > 0, got ({p}, {q})")
    return float(special.beta(p, q))


def c_coeff(alpha: float, delta: float) -> float:
    """alpha^-1 B(alpha + delta, 1 - alpha) for alpha in (0, 1), delta >= 0."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if delta < 0:
        raise ValueError(f"delta must be >= 0, got {delta}")
    return beta_fn(alpha + delta, 1.0 - alpha) / alpha


def c_alpha0(alpha: float) -> float:
    """The delta = 0 coefficient through the reflection formula pi / (alpha sin(alpha pi))."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    return math.pi / (alpha * math.sin(alpha * math.pi))


def _check_lemma_args(y, alpha):
    if not y > 0:
        raise ValueError(f"y must be > 0, got {y}")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")


def lemma31_power_lhs(y: float, delta: float, alpha: float) -> float:
    """int_0^inf [(y+z)^-delta - y^-delta] z^(-1-alpha) dz by quadrature.

    With z = y u the integral is y^(-alpha-delta) times a y-free integral.
    On (0, 1) the integrand is ((1+u)^-delta - 1)/u (smooth) against the
    weight u^-alpha. On (1, inf) the map u = 1/t gives
    int_0^1 t^(alpha+delta-1) (1+t)^-delta dt - 1/alpha.
    """
    _check_lemma_args(y, alpha)
    if not delta > 0:
        raise ValueError(f"delta must be > 0, got {delta}")

    def inner(u):
        return -math.expm1(-delta * math.log1p(u)) / u if u > 0 else delta

    head = -_quad("power integral (0,1)", inner, 0.0, 1.0, weight="alg", wvar=(-alpha, 0.0), **_TIGHT)
    tail = _quad("power integral (1,inf)", lambda t: (1.0 + t) ** -delta, 0.0, 1.0,
                 weight="alg", wvar=(alpha + delta - 1.0, 0.0), **_TIGHT) - 1.0 / alpha
    return (head + tail) * y ** (-alpha - delta)


def lemma31_log_lhs(y: float, alpha: float) -> float:
    """int_0^inf [ln(y+z) - ln y] z^(-1-alpha) dz by quadrature (same substitutions)."""
    _check_lemma_args(y, alpha)

    def inner(u):
        return math.log1p(u) / u if u > 0 else 1.0

    head = _quad("log integral (0,1)", inner, 0.0, 1.0, weight="alg", wvar=(-alpha, 0.0), **_TIGHT)
    # int_0^1 ln(1 + 1/t) t^(alpha-1) dt = int ln(1+t) t^(alpha-1) dt + 1/alpha^2
    tail = _quad("log integral (1,inf)", math.log1p, 0.0, 1.0, weight="alg",
                 wvar=(alpha - 1.0, 0.0), **_TIGHT) + 1.0 / alpha ** 2
    return (head + tail) * y ** (-alpha)


# ---------------------------------------------------------------------------
# Generator
# ---------------------------------------------------------------------------


def _third_derivative(g: TestFunction, y: float) -> float:
    h = 1e-4 * y
    return (g.d2g(y + h) - g.d2g(y - h)) / (2 * h)


def _check_tail(g: TestFunction, y: float, alpha: float) -> None:
    if g.bounded:
        return
    probes = (y + 1.0) * np.array([1e8, 1e12])
    with np.errstate(all="ignore"):
        diffs = np.abs(np.asarray(g.g(y + probes), dtype=float) - g.g(y))
    if not np.all(np.isfinite(diffs)):
        raise TailDivergence(f"test function is not finite far in the jump tail at y={y}")
    if diffs[0] == 0:
        return
    growth = math.log(diffs[1] / diffs[0]) / math.log(probes[1] / probes[0])
    if growth >= alpha - 1e-3:
        raise TailDivergence(
            f"|g(y+z) - g(y)| grows like z^{growth:.3f}, not integrable against z^(-1-{alpha}) at y={y}"
        )


def _small_jumps(m: ModelSpec, g: TestFunction, y: float) -> float:
    """int_0^1 [g(y+z) - g(y) - g'(y) z] mu(dz)."""
    mu = m.branching.mu
    a_bar, alpha, s0 = mu.a_bar, mu.alpha, mu.stable_start
    gy, dgy = g.g(y), g.dg(y)
    total = 0.0
    if s0 < 1.0:
        def integrand(z):
            return (g.g(y + z) - gy - dgy * z) * z ** (-1.0 - alpha)

        if s0 == 0.0:
            cut = min(1.0, 1e-3 * y)
            # Taylor terms through third order below the cut, integrated in closed form
            d2, d3 = g.d2g(y), _third_derivative(g, y)
            total += a_bar * (0.5 * d2 * cut ** (2 - alpha) / (2 - alpha)
                              + d3 * cut ** (3 - alpha) / (6 * (3 - alpha)))
            lo = cut
        else:
            lo = s0
        if lo < 1.0:
            total += a_bar * _quad("small-jump integral", integrand, lo, 1.0)
    for mass, size in mu.atoms:
        if size < 1.0:
            total += mass * (g.g(y + size) - gy - dgy * size)
    return total


def _large_jumps(m: ModelSpec, g: TestFunction, y: float) -> float:
    """int_1^inf [g(y+z) - g(y)] mu(dz), tail mapped onto (0, 1] by z = c/u."""
    mu = m.branching.mu
    a_bar, alpha = mu.a_bar, mu.alpha
    c = max(1.0, mu.stable_start)
    _check_tail(g, y, alpha)
    gy = g.g(y)

    def increment(u):
        return g.g(y + c / u) - gy if u > 0 else 0.0

    # the u^(alpha-1) singularity at 0 goes into an algebraic weight; split where z = y
    split = min(c / y, 1.0)
    val = _quad("large-jump integral", increment, 0.0, split, weight="alg", wvar=(alpha - 1.0, 0.0))
    if split < 1.0:
        val += _quad("large-jump integral", lambda u: increment(u) * u ** (alpha - 1.0), split, 1.0)
    total = a_bar * c ** (-alpha) * val
    for mass, size in mu.atoms:
        if size >= 1.0:
            total += mass * (g.g(y + size) - gy)
    return total


def _environment(m: ModelSpec, g: TestFunction, y: float, k: float) -> float:
    env = m.environment
    if not env.nu:
        return 0.0
    gy, dgy = g.g(y), g.dg(y)

    def compensated(z):
        return g.g(y * math.exp(z)) - gy - y * math.expm1(z) * dgy

    def plain(z):
        return g.g(y * math.exp(z)) - gy

    total = env.integrate(compensated, -1.0, 1.0)
    total += env.integrate(plain, -math.inf, math.nextafter(-1.0, -math.inf))
    total += env.integrate(plain, math.nextafter(1.0, math.inf), k)
    if not math.isfinite(total):
        raise TailDivergence(f"environment integral diverges at y={y}")
    return total


def generator_terms(m: ModelSpec, g: TestFunction, y: float, k: float = math.inf) -> dict[str, float]:
    """The generator split into its named contributions at state ``y``."""
    if not y > 0:
        raise ValueError(f"y must be > 0, got {y}")
    br, env = m.branching, m.environment
    if not isinstance(br.mu, (PureStable, StableTailPlusFinite)):
        raise TypeError(f"unsupported jump measure {type(br.mu).__name__}")
    b0y = competition_eval(m.competition, y)
    return {
        "drift": ((env.beta + br.b1) * y - b0y) * g.dg(y),
        "diffusion": (0.5 * env.sigma ** 2 * y * y + br.b2 ** 2 * y) * g.d2g(y),
        "small_jumps": y * _small_jumps(m, g, y),
        "large_jumps": y * _large_jumps(m, g, y),
        "environment": _environment(m, g, y, k),
    }


def generator_apply(m: ModelSpec, g: TestFunction, y: float) -> float:
    """Lg(y) for the full model."""
    return math.fsum(generator_terms(m, g, y).values())


def generator_truncated(m: ModelSpec, g: TestFunction, y: float, k: float) -> float:
    """L_k g(y): environment jumps above ``k`` are dropped (negative jumps all kept)."""
    if k < 2:
        raise ValueError(f"truncation level must be >= 2, got {k}")
    return math.fsum(generator_terms(m, g, y, k).values())

