import json
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from cblelab.classify import Verdict, classify_regime
from cblelab.montecarlo import (
    aggregate,
    estimate_explosion_prob,
    phase_diagram,
    phase_to_csv,
    phase_to_json,
    wilson_interval,
    with_param,
)
from cblelab.simulate import SCHEMA_LINE, SimConfig

from conftest import TWO_PI, stable_model

FAST = SimConfig(K_explode=1e6, T_horizon=2.0, seed=5)


def _wilson_oracle(k, n, z=1.96):
    # textbook form: roots of (p - phat)^2 = z^2 p (1 - p) / n
    phat = k / n
    a = 1 + z * z / n
    b = -(2 * phat + z * z / n)
    c = phat * phat
    disc = math.sqrt(max(b * b - 4 * a * c, 0.0))
    return (-b - disc) / (2 * a), (-b + disc) / (2 * a)


def test_wilson_examples():
    lo, hi = wilson_interval(10, 10)
    assert lo == pytest.approx(0.722, abs=5e-4) and hi == 1.0
    lo, hi = wilson_interval(0, 10)
    assert lo == 0.0 and hi == pytest.approx(0.278, abs=5e-4)
    lo, hi = wilson_interval(5, 10)
    assert 0.5 - lo == pytest.approx(hi - 0.5, abs=1e-15)


@given(n=st.integers(1, 10_000), frac=st.floats(0, 1))
def test_wilson_matches_quadratic_roots(n, frac):
    k = int(round(frac * n))
    lo, hi = wilson_interval(k, n)
    olo, ohi = _wilson_oracle(k, n)
    assert lo == pytest.approx(olo, abs=1e-12) and hi == pytest.approx(ohi, abs=1e-12)
    assert 0 <= lo <= k / n <= hi <= 1


@given(n=st.integers(20, 5000), frac=st.floats(0.05, 0.95))
def test_wilson_width_shrinks_with_doubling(n, frac):
    k = int(round(frac * n))
    w1 = wilson_interval(k, n)
    w2 = wilson_interval(2 * k, 2 * n)
    ratio = (w2[1] - w2[0]) / (w1[1] - w1[0])
    assert 0.6 < ratio < 0.85


def test_aggregate_counts_failures():
    r = aggregate([1.0, math.nan, None, 2.0], FAST)
    assert (r.n_paths, r.n_exploded, r.n_failed) == (3, 2, 1)
    assert r.estimate == pytest.approx(2 / 3)
    assert r.mean_tau_K == 1.5


def test_estimate_invariants_and_determinism():
    m = stable_model(alpha=0.5, y0=10.0)
    a = estimate_explosion_prob(m, FAST, 20)
    b = estimate_explosion_prob(m, FAST, 20, threads=2)
    assert a == b
    assert 0 <= a.ci_low <= a.estimate <= a.ci_high <= 1
    assert a.n_exploded <= a.n_paths == 20
    assert a.config_echo == FAST.to_dict()


def test_estimate_rejects_bad_n():
    with pytest.raises(ValueError):
        estimate_explosion_prob(stable_model(), FAST, 0)


def test_with_param():
    m = stable_model(alpha=0.5, b0=1.0, q0=1.5)
    assert with_param(m, "alpha", 0.7).branching.mu.alpha == 0.7
    assert with_param(m, "b0", 3.0).competition.b0 == 3.0
    assert with_param(m, "sigma", 0.2).environment.sigma == 0.2
    with pytest.raises(ValueError):
        with_param(m, "y0", 1.0)


def test_single_cell_diagram_matches_direct_estimate():
    m = stable_model(alpha=0.5, b0=1.0, q0=1.5, A=1.0, y0=5.0)
    d = phase_diagram(m, FAST, ("b0", [1.0]), ("q0", [1.5]), 10)
    (cell,) = d["cells"]
    assert cell.result == estimate_explosion_prob(m, FAST, 10, key_prefix=(0,))
    assert cell.verdict == classify_regime(m)


def test_diagram_verdicts_and_invalid_cells():
    m = stable_model(alpha=0.5, q0=1.5, A=1.0, y0=5.0)
    d = phase_diagram(m, FAST, ("b0", [0.0, TWO_PI, -1.0]), ("q0", [1.5]), 5)
    verdicts = [c.verdict.verdict if c.valid else None for c in d["cells"]]
    assert verdicts == [Verdict.EXPLODES_WPP, Verdict.NON_EXPLOSIVE, None]
    d = phase_diagram(stable_model(y0=5.0), FAST, ("alpha", [0.5, 1.5]), ("b0", [0.0]), 5)
    assert [c.verdict.verdict for c in d["cells"]] == [Verdict.EXPLODES_WPP, Verdict.NON_EXPLOSIVE]


def test_diagram_rejects_unknown_axis():
    with pytest.raises(ValueError):
        phase_diagram(stable_model(), FAST, ("y0", [1.0]), ("b0", [0.0]), 1)


def test_diagram_outputs():
    m = stable_model(alpha=0.5, q0=1.5, A=1.0, y0=5.0)
    d = phase_diagram(m, FAST, ("b0", [0.0, -1.0]), ("alpha", [0.5, 0.6]), 3)
    lines = phase_to_csv(d).splitlines()
    assert lines[0] == SCHEMA_LINE
    assert lines[1] == "axis1_value,axis2_value,verdict,clause,estimate,ci_low,ci_high,n_exploded,n_paths"
    assert len(lines) == 2 + 4
    assert lines[2].startswith("0.0,0.5,ExplodesWPP,no-competition,")
    assert ",invalid," in lines[4]
    doc = json.loads(phase_to_json(d))
    assert doc["axis1"] == {"param": "b0", "values": [0.0, -1.0]}
    assert [c["valid"] for c in doc["cells"]] == [True, True, False, False]


def test_estimate_respects_certificate_bound_above_y_bar():
    from cblelab.lyapunov import ExplosionCertificate, explosion_prob_lower_bound, scan_explosion_criterion
    from cblelab.testfunctions import ExpInversePower
    cert = scan_explosion_criterion(stable_model(alpha=0.5), [0.05, 0.1, 0.2])
    assert isinstance(cert, ExplosionCertificate)
    y0 = 3 * cert.y_bar
    bound = explosion_prob_lower_bound(ExpInversePower(cert.delta), y0, cert.y_bar)
    assert bound > 0
    r = estimate_explosion_prob(stable_model(alpha=0.5, y0=y0), SimConfig(K_explode=1e8, T_horizon=20.0), 50)
    assert r.estimate + 2 * r.halfwidth >= bound


def test_refinement_stability():
    # halving dt_max and eps_jump moves the frequency by less than 2 standard errors
    m = stable_model(alpha=0.5, y0=1.0)
    coarse = estimate_explosion_prob(m, SimConfig(K_explode=1e6, T_horizon=1.0, seed=1), 300)
    fine = estimate_explosion_prob(m, SimConfig(K_explode=1e6, T_horizon=1.0, dt_max=5e-4, eps_jump=5e-3, seed=1), 300)
    se = math.sqrt(sum(r.estimate * (1 - r.estimate) / r.n_paths for r in (coarse, fine)))
    assert 0.2 < coarse.estimate < 0.9
    assert abs(coarse.estimate - fine.estimate) < 2 * se
