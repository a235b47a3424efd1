"""Material-law values, structural assumptions, and their samplers."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nsfsim.constitutive import (ConductivityLaw, StressLaw,
                                 check_coercivity_growth, check_monotonicity,
                                 conductivity, stress, stress_power, sym2,
                                 sym_dot, sym_norm, theta_continuity_modulus)


def test_sym_helpers():
    d = sym2(1.0, -1.0, 0.0)
    assert d.shape == (3,)
    assert sym_norm(d) == pytest.approx(np.sqrt(2.0), abs=0.0)
    assert sym_dot(d, d) == pytest.approx(2.0, abs=0.0)
    # off-diagonal carries weight two
    assert sym_dot(sym2(0, 0, 1), sym2(0, 0, 1)) == 2.0


def test_stress_prototype_closed_form():
    # p=3, nu=1: S = |D| D with |D| = sqrt(2) for D = diag(1, -1)
    law = StressLaw(p=3.0)
    s = stress(law, 1.0, sym2(1.0, -1.0, 0.0))
    assert np.allclose(s, np.sqrt(2.0) * np.array([1.0, -1.0, 0.0]), rtol=1e-15)


def test_stress_zero_at_zero_shear():
    for p in (1.5, 2.0, 11.0 / 5.0, 3.0):
        s = stress(StressLaw(p=p), 2.0, np.zeros(3))
        assert np.all(s == 0.0)


def test_stress_high_precision_reference():
    # p=2.2, D=diag(0.5, 0.5): amplitude (0.5 sqrt 2)^0.2, checked against
    # a 40-digit evaluation of the same scalar formula
    law = StressLaw(p=2.2)
    s = stress(law, 1.7, sym2(0.5, 0.5, 0.0))
    expected = 0.46651649576840370799
    assert s[0] == pytest.approx(expected, rel=1e-15)
    assert s[1] == pytest.approx(expected, rel=1e-15)
    assert s[2] == 0.0


def test_stress_power_identity():
    rng = np.random.default_rng(7)
    law = StressLaw(p=2.5)
    d = rng.standard_normal((50, 3))
    theta = rng.uniform(0.5, 3.0, 50)
    power = stress_power(law, theta, d)
    assert np.allclose(power, sym_norm(d) ** 2.5, rtol=1e-12)
    assert np.all(power >= 0.0)


def test_stress_rejects_bad_inputs():
    law = StressLaw(p=2.2)
    with pytest.raises(ValueError):
        stress(law, -1.0, sym2(1, 0, 0))
    with pytest.raises(ValueError):
        stress(law, 1.0, sym2(np.nan, 0, 0))
    with pytest.raises(ValueError):
        StressLaw(p=0.9)
    with pytest.raises(ValueError):
        StressLaw(p=2.2, eps_d=-0.1)
    with pytest.raises(ValueError):
        ConductivityLaw(kappa_lo=0.0, kappa_hi=1.0)


def test_conductivity_profiles():
    const = ConductivityLaw()
    assert conductivity(const, 7.0) == 1.0
    rational = ConductivityLaw(profile="rational", kappa_lo=1.0, kappa_hi=2.0)
    assert conductivity(rational, 1.0) == pytest.approx(1.5, abs=0.0)
    assert 1.0 <= conductivity(rational, 1e6) <= 2.0
    with pytest.raises(ValueError):
        conductivity(rational, 0.0)


@given(theta=st.floats(min_value=1e-8, max_value=1e8))
@settings(max_examples=200, deadline=None)
def test_conductivity_bounds_property(theta):
    law = ConductivityLaw(profile="rational", kappa_lo=0.5, kappa_hi=3.0)
    k = float(conductivity(law, theta))
    assert 0.5 <= k <= 3.0


def test_monotonicity_prototype_clean():
    rep = check_monotonicity(StressLaw(p=2.5), 10_000, rng_seed=3)
    assert rep.passed
    assert rep.violations == 0


def test_monotonicity_identical_arguments_exact_zero():
    law = StressLaw(p=2.5)
    d = sym2(0.4, -0.2, 0.9)
    prod = sym_dot(stress(law, 1.2, d) - stress(law, 1.2, d), d - d)
    assert prod == 0.0


def test_monotonicity_detects_broken_law():
    rep = check_monotonicity(StressLaw(p=2.0), 500, rng_seed=5,
                             stress_fn=lambda th, d: -d)
    assert rep.violations == 500
    assert not rep.passed


def test_coercivity_growth_prototype():
    env = check_coercivity_growth(StressLaw(p=2.2), 10_000, rng_seed=9)
    assert env.passed
    assert env.nu_coercive == pytest.approx(1.0, abs=1e-12)
    assert env.coercive_offset <= 1e-12
    # |S| = |D|^(p-1) <= (1 + |D|)^(p-1) pointwise
    assert env.growth_coefficient <= 1.0 + 1e-12


def test_coercivity_growth_regularized_finite():
    env = check_coercivity_growth(StressLaw(p=3.0, eps_d=0.1), 5_000, rng_seed=10)
    assert env.passed
    assert np.isfinite(env.growth_coefficient)
    assert env.coercive_offset >= 0.0


def test_theta_continuity_modulus_bounded():
    law = StressLaw(p=2.2, profile="rational", nu_lo=0.5, nu_hi=2.0)
    assert theta_continuity_modulus(law, 500, rng_seed=2) < 10.0


@given(st.integers(0, 2 ** 32 - 1))
@settings(max_examples=25, deadline=None)
def test_monotonicity_product_property(seed):
    rng = np.random.default_rng(seed)
    law = StressLaw(p=11.0 / 5.0)
    d1 = rng.standard_normal(3)
    d2 = rng.standard_normal(3)
    theta = float(rng.uniform(0.1, 10.0))
    prod = float(sym_dot(stress(law, theta, d1) - stress(law, theta, d2), d1 - d2))
    assert prod >= -1e-12 * (sym_norm(d1) + sym_norm(d2)) ** law.p


def test_kirchhoff_mean_is_bounded_and_continuous():
    law = ConductivityLaw(profile="rational", kappa_lo=1.0, kappa_hi=2.0)
    a = np.array([1.0, 2.0, 3.0])
    km = law.kirchhoff_mean(a, a + 1e-12)
    assert np.allclose(km, law.kappa(a), rtol=1e-6)
    km = law.kirchhoff_mean(np.array([1.0]), np.array([4.0]))
    assert 1.0 <= km[0] <= 2.0
    diff = law.kirchhoff(4.0, 1.0) / 3.0
    assert km[0] == pytest.approx(diff, rel=1e-12)
