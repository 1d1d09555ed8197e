import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from atomlaser.errors import BelowThresholdError, NoCrossingError, NonFiniteInputError
from atomlaser.params import HBAR, PhysicalParams, preset, reduce
from atomlaser.stability import (
    benjamin_feir,
    dispersion_matrix,
    max_growth_rate,
    most_unstable_mode,
    rabi_threshold,
    rabi_threshold_closed_form,
)


def eig_max_real(eps, c1, c2, q):
    """Oracle: general-purpose numerical eigensolve of the 2x2 matrix."""
    return float(np.max(np.linalg.eigvals(dispersion_matrix(eps, c1, c2, q)).real))


def test_bf_c1_zero():
    v = benjamin_feir(0.0, -100.0)
    assert v.margin == 1.0
    assert v.stable


def test_bf_presets(rb87_reduced, li7_reduced):
    rb = benjamin_feir(rb87_reduced.c1, rb87_reduced.c2)
    assert rb.margin == pytest.approx(2.13, abs=5e-3)
    assert rb.stable
    li = benjamin_feir(li7_reduced.c1, li7_reduced.c2)
    assert li.margin == pytest.approx(-1.05, abs=5e-3)
    assert not li.stable
    assert li.criterion_lhs > 1


def test_bf_marginal_is_not_stable():
    v = benjamin_feir(0.5, -2.0)
    assert v.margin == 0.0
    assert not v.stable


@pytest.mark.parametrize("c1, c2", [(math.nan, 1.0), (1.0, math.inf)])
def test_bf_non_finite(c1, c2):
    with pytest.raises(NonFiniteInputError):
        benjamin_feir(c1, c2)


def test_verdict_serialization():
    assert benjamin_feir(1.0, 2.0).to_dict() == {"c1": 1.0, "c2": 2.0, "margin": 3.0, "stable": True}


def test_dispersion_q0_eigenvalues():
    for eps, c1, c2 in [(0.5, 0.4, -5.2), (0.1, 2.0, 3.0), (1.3, 0.0, 0.0)]:
        ev = np.sort(np.linalg.eigvals(dispersion_matrix(eps, c1, c2, 0.0)).real)
        np.testing.assert_allclose(ev, [-2 * eps, 0.0], atol=1e-14)


def test_dispersion_requires_lasing():
    with pytest.raises(BelowThresholdError):
        dispersion_matrix(0.0, 1.0, 1.0, 0.1)
    with pytest.raises(BelowThresholdError):
        max_growth_rate(-0.1, 1.0, 1.0, 0.1)


@pytest.mark.parametrize("name", ["rb87", "li7"])
def test_small_q_expansion(name):
    rp = reduce(preset(name))
    q = 1e-3
    lam = eig_max_real(rp.epsilon, rp.c1, rp.c2, q)
    expected = -(1 + rp.c1 * rp.c2) * q * q
    assert lam == pytest.approx(expected, rel=1e-3)
    assert max_growth_rate(rp.epsilon, rp.c1, rp.c2, q) == pytest.approx(lam, rel=1e-6)


def test_li7_small_q_sign(li7_reduced):
    lam = max_growth_rate(li7_reduced.epsilon, li7_reduced.c1, li7_reduced.c2, 1e-3)
    assert lam / 1e-6 == pytest.approx(1.05, abs=0.01)


def test_closed_form_matches_eigensolve():
    rng = np.random.default_rng(3)
    for _ in range(500):
        eps = rng.uniform(0.01, 2.0)
        c1, c2 = rng.uniform(-5, 5, size=2)
        q = rng.uniform(0, 4)
        assert max_growth_rate(eps, c1, c2, q) == pytest.approx(eig_max_real(eps, c1, c2, q), abs=1e-12)


def test_growth_phase_mode_and_large_q(li7_reduced):
    e, c1, c2 = li7_reduced.epsilon, li7_reduced.c1, li7_reduced.c2
    assert max_growth_rate(e, c1, c2, 0.0) == 0.0
    assert max_growth_rate(e, c1, c2, 1e3) < 0


def test_li7_positive_band(li7_reduced):
    qs = np.arange(1, 3001) * 1e-3
    lam = max_growth_rate(li7_reduced.epsilon, li7_reduced.c1, li7_reduced.c2, qs)
    assert lam.max() > 0


def test_most_unstable_matches_brute_force(li7_reduced):
    e, c1, c2 = li7_reduced.epsilon, li7_reduced.c1, li7_reduced.c2
    q_star, lam_star = most_unstable_mode(e, c1, c2)
    qs = np.linspace(0, 3 * math.sqrt(e), 200001)
    lam = max_growth_rate(e, c1, c2, qs)
    assert lam_star > 0
    assert q_star == pytest.approx(qs[np.argmax(lam)], abs=1e-4)
    assert lam_star >= lam.max() - 1e-12
    assert lam_star == pytest.approx(max_growth_rate(e, c1, c2, q_star))


def test_most_unstable_stable_inputs(rb87_reduced):
    assert most_unstable_mode(rb87_reduced.epsilon, rb87_reduced.c1, rb87_reduced.c2) == (0.0, 0.0)


def test_most_unstable_scales_with_sqrt_eps():
    c1, c2 = 0.4, -5.0
    q1, _ = most_unstable_mode(0.2, c1, c2)
    q4, _ = most_unstable_mode(0.8, c1, c2)
    assert q4 / q1 == pytest.approx(2.0, abs=1e-3)


def test_rabi_threshold_li7(li7):
    omega = rabi_threshold(li7)
    assert 0.30 <= omega <= 0.40
    assert omega == pytest.approx(0.33, abs=5e-3)
    assert abs(omega - rabi_threshold_closed_form(li7)) < 1e-4
    rp = reduce(li7.replace(Omega=omega))
    assert abs(1 + rp.c1 * rp.c2) < 1e-6


def test_rabi_threshold_rb87_no_crossing(rb87):
    with pytest.raises(NoCrossingError):
        rabi_threshold(rb87)


def test_rabi_threshold_no_crossing_in_window(li7):
    with pytest.raises(NoCrossingError):
        rabi_threshold(li7, omega_hi=0.2)


def test_rabi_threshold_synthetic():
    # gamma_u = Gamma = V = 1, R = 2: c2 slope 1 per 1/s; g/hbar = -2 gives c2(0) = -2; mass fixes c1 = 1
    p = PhysicalParams(gamma_u=1.0, gamma_c=0.5, Gamma=1.0, R=2.0, D_r=1.0, g_over_hbar=-2.0, Omega=0.0, V=1.0, mass=HBAR / 2)
    rp = reduce(p)
    assert rp.c1 == pytest.approx(1.0)
    assert rp.c2 == pytest.approx(-2.0)
    assert rabi_threshold(p) == pytest.approx(1.0, abs=1e-4)
    assert rabi_threshold_closed_form(p) == pytest.approx(1.0, rel=1e-12)


def test_criterion_equivalence_grid():
    rng = np.random.default_rng(11)
    c1s = rng.uniform(0.0, 5.0, 50)
    c2s = rng.uniform(-10.0, 10.0, 50)
    q = 1e-3
    checked = 0
    for c1 in c1s:
        for c2 in c2s:
            margin = 1 + c1 * c2
            if abs(margin) <= 1e-3:
                continue
            lam = eig_max_real(0.5, c1, c2, q)
            assert np.sign(lam) == -np.sign(margin)
            checked += 1
    assert checked > 2400


finite = st.floats(min_value=-20, max_value=20, allow_nan=False)


@settings(max_examples=200, deadline=None)
@given(st.floats(min_value=1e-3, max_value=5.0), finite, finite)
def test_phase_mode_pinned(eps, c1, c2):
    assert abs(max_growth_rate(eps, c1, c2, 0.0)) <= 1e-12


@settings(max_examples=200, deadline=None)
@given(st.floats(min_value=1e-3, max_value=5.0), finite, finite, st.floats(min_value=0, max_value=10))
def test_growth_even_in_q(eps, c1, c2, q):
    assert max_growth_rate(eps, c1, c2, q) == max_growth_rate(eps, c1, c2, -q)
    assert eig_max_real(eps, c1, c2, -q) == pytest.approx(eig_max_real(eps, c1, c2, q), abs=1e-9 * (1 + q * q))
