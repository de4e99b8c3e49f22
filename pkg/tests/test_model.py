import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cblelab.model import (
    BranchingSpec,
    EnvironmentSpec,
    ModelSpec,
    PowerLaw,
    PureStable,
    StableTailPlusFinite,
    Tabulated,
    TwoSidedExponential,
    Uniform,
    ValidationError,
    competition_eval,
    mu_tail_mass,
    mu_truncated_moment,
    phi,
    validate_model,
)

from conftest import atom, stable_model


def test_valid_model_accepted():
    m = stable_model(alpha=0.5, b0=0.0, q0=2.0)
    assert validate_model(m) is m


def test_alpha_two_rejected():
    with pytest.raises(ValidationError) as exc:
        validate_model(stable_model(alpha=2.0))
    assert exc.value.field == "alpha"


def test_negative_q0_rejected():
    with pytest.raises(ValidationError) as exc:
        validate_model(stable_model(b0=1.0, q0=-1.0, A=0.0))
    assert exc.value.field == "competition"
    assert "monotone" in exc.value.reason


def test_negative_q0_with_activation_level_rejected():
    with pytest.raises(ValidationError):
        validate_model(stable_model(b0=1.0, q0=-1.0, A=2.0))


def test_all_violations_reported():
    m = ModelSpec(BranchingSpec(0.0, 0.0, PureStable(-1.0, 3.0)),
                  EnvironmentSpec(0.0, -1.0, (atom(1.0, -2.0),)), PowerLaw(0.0, 1.0, 0.0), -1.0)
    with pytest.raises(ValidationError) as exc:
        validate_model(m)
    fields = {f for f, _ in exc.value.errors}
    assert {"alpha", "a_bar", "sigma", "nu[0].rate", "y0"} <= fields


def test_tabulated_checks():
    validate_model(ModelSpec(BranchingSpec(0, 0, PureStable(1, 0.5)), competition=Tabulated(((0, 0), (1, 2), (3, 5)))))
    with pytest.raises(ValidationError):
        validate_model(ModelSpec(BranchingSpec(0, 0, PureStable(1, 0.5)), competition=Tabulated(((0, 0), (1, 2), (3, 1)))))
    with pytest.raises(ValidationError):
        validate_model(ModelSpec(BranchingSpec(0, 0, PureStable(1, 0.5)), competition=Tabulated(((0, 1), (1, 2)))))


def test_stable_tail_atoms_must_sit_below_A():
    mu = StableTailPlusFinite(1.0, 0.5, 1.0, ((1.0, 2.0),))
    with pytest.raises(ValidationError):
        validate_model(ModelSpec(BranchingSpec(0, 0, mu)))


def test_phi_zero():
    assert phi(BranchingSpec(1.0, 0.0, PureStable(1.0, 0.5)), 0.0) == 0.0


def test_phi_stable_half():
    b = BranchingSpec(0.0, 0.0, PureStable(1.0, 0.5))
    want = 2.0 - 2.0 * math.sqrt(math.pi)
    assert phi(b, 1.0) == pytest.approx(want, abs=1e-12)
    assert phi(b, 1.0, method="quad") == pytest.approx(want, rel=1e-8)


def _phi_oracle(b1, b2, a_bar, alpha, lam):
    # independent mpmath integration; the compensated integrand uses its Taylor series near 0
    def comp(x):
        if x < 1e-3:
            return x * x / 2 - x ** 3 / 6 + x ** 4 / 24 - x ** 5 / 120
        return mpmath.exp(-x) - 1 + x

    with mpmath.workdps(30):
        inner = mpmath.quad(lambda z: comp(lam * z) * z ** (-1 - alpha), [0, 1e-3, 1])
        outer = mpmath.quad(lambda z: (mpmath.exp(-lam * z) - 1) * z ** (-1 - alpha), [1, 10, mpmath.inf])
        return float(-b1 * lam + b2 ** 2 * lam ** 2 + a_bar * (inner + outer))


@pytest.mark.parametrize("alpha", [0.3, 0.9, 1.0, 1.5])
@pytest.mark.parametrize("lam", [0.1, 2.0])
def test_phi_matches_oracle(alpha, lam):
    b = BranchingSpec(0.5, 0.7, PureStable(1.3, alpha))
    assert phi(b, lam) == pytest.approx(_phi_oracle(0.5, 0.7, 1.3, alpha, lam), rel=1e-7, abs=1e-9)


def test_phi_with_atoms():
    mu = StableTailPlusFinite(1.0, 0.5, 1.0, ((2.0, 0.5),))
    b = BranchingSpec(0.0, 0.0, mu)
    lam = 1.0
    stable = mpmath.quad(lambda z: (mpmath.exp(-lam * z) - 1) * z ** -1.5, [1, mpmath.inf])
    want = float(stable) + 2.0 * (math.exp(-0.5) - 1 + 0.5)
    assert phi(b, lam) == pytest.approx(want, rel=1e-8)


@given(alpha=st.floats(0.05, 1.95), a_bar=st.floats(0.1, 5.0), b1=st.floats(-3, 3), b2=st.floats(0, 2),
       lams=st.lists(st.floats(0.0, 20.0), min_size=3, max_size=3, unique=True))
def test_phi_convex(alpha, a_bar, b1, b2, lams):
    l1, l2, l3 = sorted(lams)
    if l3 - l1 < 1e-3:
        return
    b = BranchingSpec(b1, b2, PureStable(a_bar, alpha))
    f1, f2, f3 = (phi(b, lam) for lam in (l1, l2, l3))
    chord = f1 + (f3 - f1) * (l2 - l1) / (l3 - l1)
    assert f2 <= chord + 1e-7 * (1 + abs(chord))


def test_tail_mass_examples():
    assert mu_tail_mass(PureStable(1.0, 0.5), 4.0) == pytest.approx(1.0, rel=1e-15)
    assert mu_tail_mass(PureStable(1.0, 0.5), 1e12) < 1e-3
    mu = StableTailPlusFinite(1.0, 0.5, 1.0, ((3.0, 0.5),))
    assert mu_tail_mass(mu, 0.25) == pytest.approx(5.0, rel=1e-15)


def test_tail_mass_one_sided_limits_at_atom():
    # mu([x, inf)) includes an atom at x itself: left-continuous, with a drop just above the atom
    mu = StableTailPlusFinite(1.0, 0.5, 1.0, ((3.0, 0.5),))
    at = mu_tail_mass(mu, 0.5)
    assert mu_tail_mass(mu, 0.5 - 1e-12) == pytest.approx(at, abs=1e-9)
    assert at - mu_tail_mass(mu, 0.5 + 1e-12) == pytest.approx(3.0, abs=1e-9)


@given(x1=st.floats(1e-6, 1e6), x2=st.floats(1e-6, 1e6), alpha=st.floats(0.05, 1.95))
def test_tail_mass_non_increasing(x1, x2, alpha):
    mu = StableTailPlusFinite(1.0, alpha, 1.0, ((0.5, 0.2), (1.0, 0.9)))
    lo, hi = sorted((x1, x2))
    assert mu_tail_mass(mu, lo) >= mu_tail_mass(mu, hi)


def test_truncated_moment_matches_quadrature():
    mu = PureStable(2.0, 0.7)
    got = mu_truncated_moment(mu, 1.0, 0.01, 1.0)
    want = float(mpmath.quad(lambda z: 2.0 * z * z ** (-1.7), [0.01, 1]))
    assert got == pytest.approx(want, rel=1e-12)
    got = mu_truncated_moment(mu, 2.0, 0.0, 0.01)
    assert got == pytest.approx(2.0 * 0.01 ** 1.3 / 1.3, rel=1e-12)


def test_competition_examples():
    assert competition_eval(PowerLaw(1.0, 2.0, 0.0), 3.0) == 9.0
    assert competition_eval(PowerLaw(2.0, 1.5, 1.0), 0.5) == pytest.approx(1.0, rel=1e-15)
    for c in (PowerLaw(1.0, 2.0, 0.0), PowerLaw(2.0, 1.5, 1.0), Tabulated(((0, 0), (1, 1), (2, 4)))):
        assert competition_eval(c, 0.0) == 0.0


def test_tabulated_extrapolates_with_last_slope():
    c = Tabulated(((0, 0), (1, 1), (2, 4)))
    assert competition_eval(c, 1.5) == pytest.approx(2.5)
    assert competition_eval(c, 5.0) == pytest.approx(13.0)


@given(b0=st.floats(0.0, 10.0), q0=st.floats(0.0, 4.0), A=st.floats(0.0, 5.0),
       ys=st.lists(st.floats(0.0, 1e4), min_size=2, max_size=30))
def test_competition_monotone_and_exact_above_A(b0, q0, A, ys):
    c = PowerLaw(b0, q0, A if q0 > 0 else max(A, 0.1))
    ys = np.sort(np.asarray(ys))
    vals = competition_eval(c, ys)
    assert np.all(np.diff(vals) >= 0)
    for y, v in zip(ys, vals):
        if y >= c.A and y > 0:
            assert v == pytest.approx(b0 * y ** q0, rel=4e-16, abs=0)


def test_environment_laws():
    rng = np.random.default_rng(0)
    u = Uniform(-1.0, 2.0)
    assert u.expect(lambda z: 1.0) == pytest.approx(1.0)
    assert u.expect(lambda z: z) == pytest.approx(0.5)
    assert u.expect(lambda z: 1.0, -1.0, 0.0) == pytest.approx(1 / 3)
    assert np.all((s := u.sample(rng, 1000)) >= -1) and np.all(s <= 2)
    e = TwoSidedExponential(0.3, 2.0, 4.0)
    assert e.expect(lambda z: 1.0) == pytest.approx(1.0)
    assert e.expect(lambda z: z) == pytest.approx(0.3 / 2.0 - 0.7 / 4.0)
    s = e.sample(rng, 200_000)
    assert s.mean() == pytest.approx(0.3 / 2.0 - 0.7 / 4.0, abs=5e-3)


def test_environment_compensator():
    env = EnvironmentSpec(0.0, 0.0, (atom(0.5, 2.0), atom(1.5, 1.0), atom(-0.5, 1.0)))
    assert env.total_rate == 4.0
    assert env.small_jump_compensator() == pytest.approx(2.0 * math.expm1(0.5) + math.expm1(-0.5))
