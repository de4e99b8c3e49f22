import math
import time

import mpmath
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cblelab.analytics import (
    IDENTITY_ALPHAS,
    IDENTITY_DELTAS,
    IDENTITY_YS,
    TailDivergence,
    beta_fn,
    c_alpha0,
    c_coeff,
    generator_apply,
    generator_terms,
    generator_truncated,
    lemma31_log_lhs,
    lemma31_power_lhs,
)
from cblelab.model import Uniform, EnvJump
from cblelab.testfunctions import Constant, ExpInversePower, Linear, LogLog, ShiftedInverse

from conftest import atom, stable_model


def test_beta_examples():
    assert beta_fn(1, 1) == pytest.approx(1.0, rel=1e-14)
    assert beta_fn(0.5, 0.5) == pytest.approx(math.pi, rel=1e-14)
    assert beta_fn(2, 3) == pytest.approx(1 / 12, rel=1e-14)
    with pytest.raises(ValueError):
        beta_fn(0.0, 1.0)


def test_c_coeff_examples():
    assert c_coeff(0.5, 0.0) == pytest.approx(2 * math.pi, rel=1e-14)
    assert c_coeff(0.5, 1.0) == pytest.approx(math.pi, rel=1e-14)
    with pytest.raises(ValueError):
        c_coeff(1.0, 0.5)


@given(alpha=st.floats(0.001, 0.999))
def test_reflection_formula(alpha):
    assert c_coeff(alpha, 0.0) == pytest.approx(math.pi / (alpha * math.sin(alpha * math.pi)), rel=1e-12)
    assert c_alpha0(alpha) == pytest.approx(beta_fn(alpha, 1 - alpha) / alpha, rel=1e-12)


def _power_oracle(y, delta, alpha):
    with mpmath.workdps(30):
        y = mpmath.mpf(y)
        f = lambda z: ((y + z) ** -delta - y ** -delta) * z ** (-1 - alpha)
        return float(mpmath.quad(f, [0, 1e-6 * y, 1e-3 * y, y, 10 * y, mpmath.inf]))


def test_power_identity_examples():
    assert lemma31_power_lhs(1.0, 1.0, 0.5) == pytest.approx(-math.pi, rel=1e-10)
    assert lemma31_power_lhs(2.0, 1.0, 0.5) == pytest.approx(-math.pi * 2 ** -1.5, rel=1e-10)
    base = lemma31_power_lhs(1.0, 0.5, 0.3)
    for y in (0.5, 4.0, 100.0):
        assert lemma31_power_lhs(y, 0.5, 0.3) / base == pytest.approx(y ** (-0.8), rel=1e-9)


def test_power_identity_against_independent_quadrature():
    assert lemma31_power_lhs(3.0, 0.7, 0.4) == pytest.approx(_power_oracle(3.0, 0.7, 0.4), rel=1e-9)


def test_log_identity_examples():
    assert lemma31_log_lhs(1.0, 0.5) == pytest.approx(2 * math.pi, rel=1e-10)
    assert lemma31_log_lhs(4.0, 0.5) == pytest.approx(math.pi, rel=1e-10)


@given(y=st.floats(1e-4, 1e6), alpha=st.floats(0.02, 0.98))
def test_log_identity_positive(y, alpha):
    assert lemma31_log_lhs(y, alpha) > 0


def test_identity_grid():
    t0 = time.perf_counter()
    for a in IDENTITY_ALPHAS:
        for d in IDENTITY_DELTAS:
            for y in IDENTITY_YS:
                assert lemma31_power_lhs(y, d, a) == pytest.approx(-d * c_coeff(a, d) * y ** (-a - d), rel=1e-8)
        for y in IDENTITY_YS:
            assert lemma31_log_lhs(y, a) == pytest.approx(c_alpha0(a) * y ** -a, rel=1e-8)
    assert time.perf_counter() - t0 < 30


def test_generator_constant_is_zero():
    m = stable_model(alpha=0.7, b0=1.0, q0=1.2, b1=1.0, b2=0.5, beta=0.3, sigma=0.4, nu=(atom(0.5, 1.0), atom(2.0, 0.5)))
    for y in (0.1, 1.0, 50.0):
        assert generator_apply(m, Constant(2.5), y) == 0.0


def test_generator_linear_example():
    m = stable_model(alpha=1.5)
    assert generator_apply(m, Linear(1.0), 1.0) == pytest.approx(2.0, abs=1e-6)


def test_generator_shifted_inverse_example():
    m = stable_model(alpha=0.5)
    assert generator_apply(m, ShiftedInverse(), 1.0) == pytest.approx(math.pi * 2 ** -1.5 - 0.5, abs=1e-6)


def _generator_oracle(m, delta, y):
    """Direct mpmath evaluation of every generator term for g = exp(-y^-delta)."""
    br, env, comp = m.branching, m.environment, m.competition
    mu = br.mu
    a, al = mu.a_bar, mu.alpha
    with mpmath.workdps(30):
        y = mpmath.mpf(y)
        g = lambda x: mpmath.exp(-x ** -delta)
        g1 = mpmath.diff(g, y)
        g2 = mpmath.diff(g, y, 2)
        drift = ((env.beta + br.b1) * y - comp.b0 * y ** comp.q0) * g1
        diff = (env.sigma ** 2 * y ** 2 / 2 + br.b2 ** 2 * y) * g2
        small = mpmath.quad(lambda z: (g(y + z) - g(y) - g1 * z) * z ** (-1 - al), [0, 1e-6, 1e-3, 1])
        big = mpmath.quad(lambda z: (g(y + z) - g(y)) * z ** (-1 - al), [1, 10, 1e3, mpmath.inf])
        env_term = 0
        for c in env.nu:
            z = c.law.z
            jump = g(y * mpmath.exp(z)) - g(y)
            if abs(z) <= 1:
                jump -= y * mpmath.expm1(z) * g1
            env_term += c.rate * jump
        return float(drift + diff + y * a * (small + big) + env_term)


@pytest.mark.parametrize("y", [0.3, 2.0, 40.0])
def test_generator_against_oracle(y):
    m = stable_model(alpha=0.6, a_bar=1.3, b0=0.7, q0=1.2, b1=0.4, b2=0.3, beta=-0.2, sigma=0.5,
                     nu=(atom(0.4, 0.8), atom(-1.5, 0.3), atom(2.5, 0.2)))
    g = ExpInversePower(0.3)
    assert generator_apply(m, g, y) == pytest.approx(_generator_oracle(m, 0.3, y), rel=1e-7, abs=1e-10)


def test_generator_terms_sum():
    m = stable_model(alpha=0.6, b0=0.7, q0=1.2, nu=(atom(0.4, 0.8),))
    terms = generator_terms(m, ExpInversePower(0.2), 5.0)
    assert set(terms) == {"drift", "diffusion", "small_jumps", "large_jumps", "environment"}
    assert math.fsum(terms.values()) == generator_apply(m, ExpInversePower(0.2), 5.0)


def test_tail_divergence_for_heavy_tail_linear_g():
    with pytest.raises(TailDivergence):
        generator_apply(stable_model(alpha=0.5), Linear(1.0), 1.0)


def test_truncated_examples():
    g = ExpInversePower(0.2)
    m = stable_model(alpha=0.5)
    for k in (2.0, 10.0):
        assert generator_truncated(m, g, 3.0, k) == generator_apply(m, g, 3.0)
    m = stable_model(alpha=0.5, nu=(atom(5.0, 1.0),))
    y = 3.0
    diff = generator_apply(m, g, y) - generator_truncated(m, g, y, 2.0)
    assert diff == pytest.approx(g.g(y * math.exp(5)) - g.g(y), rel=1e-10)
    m = stable_model(alpha=0.5, nu=(EnvJump(0.7, Uniform(-10.0, 10.0)),))
    assert generator_truncated(m, g, y, 1e6) == pytest.approx(generator_apply(m, g, y), abs=1e-12)
    with pytest.raises(ValueError):
        generator_truncated(m, g, y, 1.5)


_FAMILIES = [ExpInversePower(0.2), ExpInversePower(0.7), ShiftedInverse(), LogLog(9), Constant(1.0)]


@given(i=st.integers(0, 4), j=st.integers(0, 4), a=st.floats(-3, 3), b=st.floats(-3, 3),
       y=st.floats(0.05, 1e3), alpha=st.floats(0.2, 1.8))
def test_generator_linearity(i, j, a, b, y, alpha):
    m = stable_model(alpha=alpha, b0=0.5, q0=1.5, b1=0.2, b2=0.4, sigma=0.3, nu=(atom(0.5, 0.5), atom(-2.0, 0.2)))
    g, h = _FAMILIES[i], _FAMILIES[j]
    lhs = generator_apply(m, a * g + b * h, y)
    rhs = a * generator_apply(m, g, y) + b * generator_apply(m, h, y)
    assert lhs == pytest.approx(rhs, rel=1e-8, abs=1e-8)


@pytest.mark.parametrize("delta", [0.4])
def test_leading_order_ratio(delta):
    # L g / (g delta a c y^(1-alpha-delta)) -> 1 with shrinking deviation
    m = stable_model(alpha=0.5)
    g = ExpInversePower(delta)
    devs = []
    for y in (1e2, 1e3, 1e4):
        lead = g.g(y) * delta * c_coeff(0.5, delta) * y ** (0.5 - delta)
        devs.append(abs(generator_apply(m, g, y) / lead - 1))
    assert devs[0] > devs[1] > devs[2]
    assert devs[2] < 1e-2
