"""Cutoff toolbox: T_k, G_k, the mollified cutoff, g, and Kirchhoff."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nsfsim.constitutive import ConductivityLaw
from nsfsim.truncation import (BLEND_CURVATURE_CONSTANT, CutoffParams,
                               g_continuity, g_k, kirchhoff, kirchhoff_inverse,
                               t_k, t_k_delta, t_k_delta_d1, t_k_delta_d2)


def test_t_k_values():
    assert t_k(2.0, 3.0) == 2.0
    assert t_k(2.0, -3.0) == -2.0
    assert t_k(5.0, 1.5) == 1.5
    assert t_k(1.0, 0.0) == 0.0
    with pytest.raises(ValueError):
        t_k(0.0, 1.0)


@given(st.floats(-50, 50), st.floats(0.01, 20), st.floats(0.01, 20))
@settings(max_examples=200, deadline=None)
def test_t_k_composition_and_oddness(z, k, j):
    # composing with a larger level is the identity on the smaller cutoff
    k, j = min(k, j), max(k, j)
    assert t_k(k, t_k(j, z)) == t_k(k, z)
    assert t_k(k, -z) == -t_k(k, z)


def test_g_k_values():
    assert g_k(2.0, 1.0) == 0.5
    assert g_k(2.0, 4.0) == 6.0
    assert g_k(2.0, -4.0) == 6.0
    assert g_k(2.0, 0.0) == 0.0


@given(st.floats(0.01, 30), st.floats(-100, 100))
@settings(max_examples=300, deadline=None)
def test_g_k_bounds(k, s):
    g = float(g_k(k, s))
    assert 0.0 <= g
    assert g <= k * abs(s) + 1e-13 * max(1.0, k * abs(s))
    assert g <= 0.5 * s * s + 1e-13 * max(1.0, s * s)


def test_g_k_convex_even():
    s = np.linspace(-7, 7, 2001)
    g = g_k(2.5, s)
    assert np.allclose(g, g[::-1], atol=0.0)
    assert np.all(g[2:] - 2 * g[1:-1] + g[:-2] >= -1e-12)


def test_mollified_cutoff_outside_band_bitwise():
    k, d = 2.0, 0.25
    z = np.linspace(-4, 4, 8001)
    outside = (np.abs(z) <= k - d) | (np.abs(z) >= k + d)
    assert np.array_equal(t_k_delta(k, d, z)[outside], t_k(k, z)[outside])
    assert t_k_delta(k, d, k - 2 * d) == k - 2 * d
    assert t_k_delta(k, d, k + 2 * d) == k
    assert t_k_delta_d1(k, d, k - 2 * d) == 1.0
    assert t_k_delta_d1(k, d, k + 2 * d) == 0.0


def test_mollified_cutoff_property_grid():
    k, d = 2.0, 0.2
    z = np.linspace(-5, 5, 40001)
    val = t_k_delta(k, d, z)
    d1 = t_k_delta_d1(k, d, z)
    d2 = t_k_delta_d2(k, d, z)
    pos = z > 0
    assert np.all((d1 >= 0.0) & (d1 <= 1.0))
    assert np.all(d2[pos] <= 0.0)
    assert np.all(val[pos] <= t_k(k, z)[pos] + 1e-15)
    assert np.abs(d2).max() <= BLEND_CURVATURE_CONSTANT / d + 1e-12
    # oddness of the blend
    assert np.allclose(val, -t_k_delta(k, d, -z), atol=0.0)


def test_mollified_cutoff_is_c2():
    # finite differences of the value converge to the stated derivatives
    k, d = 2.0, 0.3
    z = np.linspace(k - 2 * d, k + 2 * d, 1601)
    h = 1e-6
    fd1 = (t_k_delta(k, d, z + h) - t_k_delta(k, d, z - h)) / (2 * h)
    assert np.abs(fd1 - t_k_delta_d1(k, d, z)).max() < 1e-8
    fd2 = (t_k_delta(k, d, z + h) - 2 * t_k_delta(k, d, z)
           + t_k_delta(k, d, z - h)) / h ** 2
    assert np.abs(fd2 - t_k_delta_d2(k, d, z)).max() < 1e-3


def test_cutoff_params_validation():
    CutoffParams(k=2.0, delta=0.5, M=10.0, epsilon=0.1)
    with pytest.raises(ValueError):
        CutoffParams(k=2.0, delta=2.5)
    with pytest.raises(ValueError):
        CutoffParams(k=-1.0, delta=0.1)
    with pytest.raises(ValueError):
        t_k_delta(2.0, 3.0, 1.0)


def test_g_continuity_values():
    assert g_continuity(2.0, 1.0, 1.0) == 0.0
    assert float(g_continuity(2.0, 3.0, 2.0)) == pytest.approx(np.sqrt(0.5),
                                                               rel=1e-15)
    assert float(g_continuity(2.0, 6.0, 2.0)) == pytest.approx(np.sqrt(6.0),
                                                               rel=1e-15)
    # odd in theta - theta_hat
    assert g_continuity(2.0, 1.0, 2.0) == -g_continuity(2.0, 3.0, 2.0)


def test_g_continuity_slope_lower_bound():
    # finite-difference slope >= sqrt(mu)/sqrt(2 theta) for theta >= mu
    rng = np.random.default_rng(4)
    mu = 0.8
    M = 1.0 + max(2.0, 2.0 * mu, 4.0)
    theta = rng.uniform(mu, 15.0, 3000)
    theta_hat = rng.uniform(mu, 4.0, 3000)
    h = 1e-7
    slope = (g_continuity(M, theta + h, theta_hat)
             - g_continuity(M, theta, theta_hat)) / h
    assert np.all(slope >= np.sqrt(mu) / np.sqrt(2 * (theta + h)) - 1e-5)


def test_kirchhoff_constant_closed_form():
    law = ConductivityLaw(kappa_lo=2.5, kappa_hi=2.5)
    assert kirchhoff(law, 4.0, 1.0) == pytest.approx(2.5 * 3.0, abs=0.0)
    assert kirchhoff(law, 1.0, 1.0) == 0.0


def test_kirchhoff_round_trip():
    law = ConductivityLaw(profile="rational", kappa_lo=1.0, kappa_hi=2.0)
    rng = np.random.default_rng(11)
    s = rng.uniform(0.02, 80.0, 1000)
    u = kirchhoff(law, s, 1.0)
    back = kirchhoff_inverse(law, u, 1.0)
    assert np.max(np.abs(back - s) / s) <= 1e-10


def test_kirchhoff_generic_profile_quadrature():
    law = ConductivityLaw(profile="rational", kappa_lo=1.0, kappa_hi=2.0)
    val = kirchhoff(lambda z: float(law.kappa(z)), 5.0, 1.0)
    assert val == pytest.approx(float(law.kirchhoff(5.0, 1.0)), rel=1e-11)


def test_kirchhoff_inverse_out_of_range():
    law = ConductivityLaw(kappa_lo=1.0, kappa_hi=1.0)
    # K(theta) = theta - 1 > -1 for theta > 0; -2 is unreachable
    with pytest.raises(ValueError):
        kirchhoff_inverse(law, -2.0, 1.0)
