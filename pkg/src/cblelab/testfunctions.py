"""Lyapunov test functions g with analytic first and second derivatives.

Every family maps positive reals (scalars or arrays) to reals and exposes
``g``, ``dg`` and ``d2g``. ``bounded``/``sup`` and ``increasing`` are
metadata consumed by the Lyapunov scanners.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "TestFunction",
    "ExpInversePower",
    "LogLog",
    "Linear",
    "Constant",
    "ShiftedInverse",
    "Combination",
]


class TestFunction:
    __test__ = False  # not a pytest class

    family: str = "abstract"
    bounded: bool = False
    sup: float = math.inf
    increasing: bool = False

    def g(self, y):
        raise NotImplementedError

    def dg(self, y):
        raise NotImplementedError

    def d2g(self, y):
        raise NotImplementedError

    def __call__(self, y):
        return self.g(y)

    def params(self) -> dict:
        return {}

    def __add__(self, other: "TestFunction") -> "Combination":
        return Combination(((1.0, self), (1.0, other)))

    def __rmul__(self, a: float) -> "Combination":
        return Combination(((float(a), self),))


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


@dataclass(frozen=True, eq=False)
class ExpInversePower(TestFunction):
    """g(y) = exp(-y^(-delta)); bounded by 1 and strictly increasing."""

    delta: float

    family = "ExpInversePower"
    bounded = True
    sup = 1.0
    increasing = True

    def g(self, y):
        if isinstance(y, float):
            # scalar fast path for quadrature integrands
            try:
                return math.exp(-y ** -self.delta) if y > 0 else 0.0
            except OverflowError:
                return 0.0
        y = np.asarray(y, dtype=float)
        with np.errstate(divide="ignore", over="ignore"):
            return _out(np.exp(-np.power(y, -self.delta)))

    def dg(self, y):
        y = np.asarray(y, dtype=float)
        d = self.delta
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            val = d * np.power(y, -d - 1) * np.exp(-np.power(y, -d))
        return _out(np.nan_to_num(val, nan=0.0))

    def d2g(self, y):
        y = np.asarray(y, dtype=float)
        d = self.delta
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            val = (d * d * np.power(y, -2 * d - 2) - d * (1 + d) * np.power(y, -d - 2)) * np.exp(-np.power(y, -d))
        return _out(np.nan_to_num(val, nan=0.0))

    def params(self):
        return {"delta": self.delta}


class LogLog(TestFunction):
    """g_n(y) = ln ln(n^2 y) for y >= 1/(n e), zero for y <= 1/(2 n e).

    On the gap the two pieces are joined by a C^2 Hermite polynomial. The
    quintic is used when it is monotone; otherwise (small n) its cubic
    coefficient is clamped at zero and a sextic term restores the
    interpolation conditions.
    """

    family = "LogLog"
    bounded = False
    increasing = True

    def __init__(self, n: int):
        if int(n) != n or n < 9:
            raise ValueError(f"LogLog needs an integer n >= 9, got {n}")
        self.n = int(n)
        self.left = 1.0 / (2 * self.n * math.e)
        self.right = 1.0 / (self.n * math.e)
        self.width = self.right - self.left
        self.coef = self._bridge()

    def _bridge(self) -> np.ndarray:
        w, b = self.width, self.right
        L = math.log(self.n ** 2 * b)
        v0 = math.log(L)
        v1 = w / (b * L)
        v2 = -w * w * (1.0 / L ** 2 + 1.0 / L) / b ** 2
        c3, c4, c5 = np.linalg.solve([[1, 1, 1], [3, 4, 5], [6, 12, 20]], [v0, v1, v2])
        if c3 >= 0:
            coef = np.array([c3, c4, c5, 0.0])
        else:
            c4, c5, c6 = np.linalg.solve([[1, 1, 1], [4, 5, 6], [12, 20, 30]], [v0, v1, v2])
            coef = np.array([0.0, c4, c5, c6])
        s = np.linspace(0.0, 1.0, 4001)
        slope = 3 * coef[0] * s ** 2 + 4 * coef[1] * s ** 3 + 5 * coef[2] * s ** 4 + 6 * coef[3] * s ** 5
        if slope.min() < -1e-12:
            raise ValueError(f"no monotone C^2 bridge for n={self.n}")
        return coef

    def _pieces(self, y, order):
        y = np.asarray(y, dtype=float)
        c3, c4, c5, c6 = self.coef
        w = self.width
        s = np.clip((y - self.left) / w, 0.0, 1.0)
        if order == 0:
            poly = c3 * s ** 3 + c4 * s ** 4 + c5 * s ** 5 + c6 * s ** 6
        elif order == 1:
            poly = (3 * c3 * s ** 2 + 4 * c4 * s ** 3 + 5 * c5 * s ** 4 + 6 * c6 * s ** 5) / w
        else:
            poly = (6 * c3 * s + 12 * c4 * s ** 2 + 20 * c5 * s ** 3 + 30 * c6 * s ** 4) / w ** 2
        safe = np.maximum(y, self.right)
        L = np.log(self.n ** 2 * safe)
        if order == 0:
            main = np.log(L)
        elif order == 1:
            main = 1.0 / (L * safe)
        else:
            main = -(1.0 / L ** 2 + 1.0 / L) / safe ** 2
        out = np.where(y >= self.right, main, np.where(y <= self.left, 0.0, poly))
        return _out(out)

    def g(self, y):
        if isinstance(y, float) and y >= self.right:
            return math.log(math.log(self.n ** 2 * y))
        return self._pieces(y, 0)

    def dg(self, y):
        return self._pieces(y, 1)

    def d2g(self, y):
        return self._pieces(y, 2)

    def params(self):
        return {"n": self.n}


@dataclass(frozen=True, eq=False)
class Linear(TestFunction):
    """g(y) = slope * y."""

    slope: float = 1.0

    family = "Linear"
    increasing = True

    def g(self, y):
        return _out(self.slope * np.asarray(y, dtype=float))

    def dg(self, y):
        return _out(np.full_like(np.asarray(y, dtype=float), self.slope))

    def d2g(self, y):
        return _out(np.zeros_like(np.asarray(y, dtype=float)))

    def params(self):
        return {"slope": self.slope}


@dataclass(frozen=True, eq=False)
class Constant(TestFunction):
    value: float = 1.0

    family = "Constant"
    bounded = True

    @property
    def sup(self):
        return self.value

    def g(self, y):
        return _out(np.full_like(np.asarray(y, dtype=float), self.value))

    def dg(self, y):
        return _out(np.zeros_like(np.asarray(y, dtype=float)))

    def d2g(self, y):
        return self.dg(y)

    def params(self):
        return {"value": self.value}


@dataclass(frozen=True, eq=False)
class ShiftedInverse(TestFunction):
    """g(y) = 1 - (1 + y)^(-1)."""

    family = "ShiftedInverse"
    bounded = True
    sup = 1.0
    increasing = True

    def g(self, y):
        if isinstance(y, float):
            return 1.0 - 1.0 / (1.0 + y)
        return _out(1.0 - 1.0 / (1.0 + np.asarray(y, dtype=float)))

    def dg(self, y):
        return _out((1.0 + np.asarray(y, dtype=float)) ** -2)

    def d2g(self, y):
        return _out(-2.0 * (1.0 + np.asarray(y, dtype=float)) ** -3)


@dataclass(frozen=True, eq=False)
class Combination(TestFunction):
    """Finite linear combination sum_i a_i g_i."""

    terms: tuple

    family = "Combination"

    @property
    def bounded(self):
        return all(f.bounded for _, f in self.terms)

    @property
    def sup(self):
        return math.inf if not self.bounded else sum(abs(a) * f.sup for a, f in self.terms)

    def _sum(self, attr, y):
        return _out(sum(a * np.asarray(getattr(f, attr)(y)) for a, f in self.terms))

    def g(self, y):
        return self._sum("g", y)

    def dg(self, y):
        return self._sum("dg", y)

    def d2g(self, y):
        return self._sum("d2g", y)

    def params(self):
        return {"terms": [(a, f.family, f.params()) for a, f in self.terms]}
