"""Grid quadrature and the divergence-free velocity basis."""

import numpy as np
import pytest

from nsfsim.basis import build_basis, eval_sym_gradient, eval_velocity, mode_pairs
from nsfsim.grid import Grid, ScalarField, quadrature_exactness_error


@pytest.fixture(scope="module")
def grid():
    return Grid(20, 20, 1.0, 1.0, quad_order=3)


@pytest.fixture(scope="module")
def basis(grid):
    return build_basis(grid, 6)


def test_grid_geometry():
    g = Grid(8, 4, 2.0, 1.0)
    assert g.hx == pytest.approx(2.0 / 9.0)
    assert g.hy == pytest.approx(1.0 / 5.0)
    assert g.xs.shape == (10,)
    assert np.sum(g.quad_w) == pytest.approx(2.0, rel=1e-14)
    assert np.sum(g.trap_w) == pytest.approx(2.0, rel=1e-14)
    with pytest.raises(ValueError):
        Grid(1, 4)


def test_quadrature_exactness(grid):
    # Gauss order q handles polynomials of degree 2q-1 per direction
    assert quadrature_exactness_error(grid) <= 1e-13


def test_interp_to_quad_reproduces_bilinear(grid):
    field = 2.0 + 3.0 * grid.node_x - grid.node_y \
        + 0.5 * grid.node_x * grid.node_y
    interp = grid.interp_to_quad(field)
    exact = 2.0 + 3.0 * grid.quad_x - grid.quad_y \
        + 0.5 * grid.quad_x * grid.quad_y
    assert np.abs(interp - exact).max() < 1e-13


def test_scalar_field_basics(grid):
    f = ScalarField.constant(grid, 3.0)
    assert f.integrate() == pytest.approx(3.0, rel=1e-14)
    assert f.min() == 3.0
    f2 = ScalarField.from_function(grid, lambda x, y: 1.0 + x * 0)
    assert f2.values.shape == (grid.ny + 2, grid.nx + 2)
    with pytest.raises(ValueError):
        ScalarField(grid, np.zeros((3, 3)))


def test_mode_ordering():
    assert mode_pairs(6) == [(1, 1), (1, 2), (2, 1), (1, 3), (2, 2), (3, 1)]


def test_single_mode_normalized(grid):
    b = build_basis(grid, 1)
    assert b.gram_error <= 1e-10
    norm = grid.integrate_quad(np.sum(b.w_quad[0] ** 2, axis=1))
    assert norm == pytest.approx(1.0, abs=1e-12)


def test_gram_identity(basis):
    assert basis.gram_error <= 1e-10


def test_divergence_free_pointwise(basis):
    assert np.abs(basis.divergence_at_quad()).max() <= 1e-12


def test_modes_vanish_on_boundary(basis):
    w = basis.w_nodes
    assert np.abs(w[:, 0, :, :]).max() == 0.0
    assert np.abs(w[:, -1, :, :]).max() == 0.0
    assert np.abs(w[:, :, 0, :]).max() == 0.0
    assert np.abs(w[:, :, -1, :]).max() == 0.0


def test_eval_linear_in_coefficients(grid, basis):
    pts = grid.quad_points()[:50]
    zero = eval_velocity(basis, np.zeros(6), pts)
    assert np.all(zero == 0.0)
    e3 = np.eye(6)[2]
    v3 = eval_velocity(basis, e3, pts)
    assert np.allclose(v3, basis.w_quad[2, :50], atol=0.0)
    rng = np.random.default_rng(0)
    c = rng.standard_normal(6)
    v = eval_velocity(basis, c, pts)
    assert np.allclose(v, np.tensordot(c, basis.w_quad[:, :50], 1), rtol=1e-14)


def test_sym_gradient_matches_finite_differences(grid, basis):
    # central differences of the velocity evaluation, O(h^2) oracle
    rng = np.random.default_rng(1)
    c = rng.standard_normal(6)
    pts = np.array([[0.37, 0.41], [0.6, 0.22], [0.5, 0.77]])
    h = 1e-6
    ex = np.array([h, 0.0])
    ey = np.array([0.0, h])
    dvx = (eval_velocity(basis, c, pts + ex) - eval_velocity(basis, c, pts - ex)) / (2 * h)
    dvy = (eval_velocity(basis, c, pts + ey) - eval_velocity(basis, c, pts - ey)) / (2 * h)
    fd = np.stack([dvx[:, 0], dvy[:, 1], 0.5 * (dvy[:, 0] + dvx[:, 1])], axis=-1)
    an = eval_sym_gradient(basis, c, pts)
    assert np.abs(fd - an).max() < 1e-7


def test_coefficient_shape_mismatch(basis):
    with pytest.raises(ValueError):
        eval_velocity(basis, np.zeros(4), np.zeros((1, 2)))
