# -*- coding: utf-8 -*-
"""
Tests for radial grids, fields and operators
"""
import os

import numpy as np
import pandas as pd
import pytest
from scipy.integrate import quad

from GLB.core.ground_state import w_derivative, w_profile
from GLB.core.radial import (RadialField, RadialGrid, ScalarField, d_r,
                             energy_norm, inner, kinetic_form, l2_norm,
                             laplacian, linf_norm, make_grid, norm_E,
                             read_field, write_field)
from GLB.utilities.exceptions import ConfigurationError, DimensionError

TEST_DIR = os.path.dirname(os.path.abspath(__file__))
TEST_DATA_DIR = os.path.join(TEST_DIR, 'data/')


def _w_field(grid, scale=1.0):
    D = grid.dimension
    values = scale**(-(D - 2) / 2) * w_profile(D, grid.r / scale)
    return RadialField(grid, values, label='W')


def test_make_grid_endpoints():
    """Test grid endpoints and uniform node placement."""
    grid = make_grid(4, 1e-3, 1e2, 2048, 'geometric')
    assert grid.r[0] == 1e-3
    assert grid.r[-1] == 1e2
    assert grid.n_nodes == len(grid) == 2048
    assert (np.diff(grid.r) > 0).all()

    grid = make_grid(3, 0.1, 1.0, 16, 'uniform')
    assert np.allclose(grid.r, 0.1 + np.arange(16) * 0.9 / 15, rtol=0,
                       atol=1e-14)


@pytest.mark.parametrize(('args', 'kwargs'), [
    ((2, 1e-3, 1.0, 64), {}),
    ((4, 0.0, 1.0, 64), {}),
    ((4, 1.0, 0.5, 64), {}),
    ((4, 1e-3, 1.0, 8), {}),
    ((4, 1e-3, 1e3, 20), {}),
    ((4, 1e-3, 1.0, 64), {'stretch': 'chebyshev'}),
    ((4, 1e-3, 1.0, 64), {'outer_bc': 'neumann'}),
])
def test_make_grid_bad_inputs(args, kwargs):
    """Test that invalid grid requests raise configuration errors."""
    with pytest.raises(ConfigurationError):
        make_grid(*args, **kwargs)


def test_quadrature_exact_measure():
    """Test that windowed quadrature of 1 is the exact r^(D-1) measure."""
    grid = make_grid(4, 0.1, 1.0, 64, 'uniform')
    value = grid.integrate(np.ones(grid.n_nodes), r1=0.1)
    assert np.isclose(value, (1 - 0.1**4) / 4, rtol=1e-12)
    assert np.isclose(grid.quad_weights.sum(), 0.25, rtol=1e-12)


def test_inner_product():
    """Test the weighted real inner product."""
    grid = make_grid(4, 1e-3, 1e2, 512)
    W = _w_field(grid)
    assert inner(RadialField.zeros(grid), RadialField.zeros(grid)) == 0
    assert abs(inner(W, W * 1j)) < 1e-14
    assert np.isclose(inner(W, W), l2_norm(W)**2, rtol=1e-12)

    other = make_grid(4, 1e-3, 1e2, 256)
    with pytest.raises(DimensionError):
        inner(W, _w_field(other))


def test_derivative():
    """Test d_r on constants, linear functions and W."""
    grid = make_grid(4, 1e-2, 1e2, 401)
    ones = RadialField(grid, np.ones(grid.n_nodes))
    lin = RadialField(grid, grid.r)
    assert np.allclose(d_r(ones).values, 0, atol=1e-9)
    assert np.allclose(d_r(lin).values, 1, rtol=0, atol=1e-10)

    i = grid.nearest_node(1.0)
    assert np.isclose(grid.r[i], 1.0)
    dW = d_r(_w_field(grid)).values[i].real
    assert np.isclose(dW, -0.25 / (1 + 1 / 8)**2, atol=1e-3)
    assert np.isclose(dW, w_derivative(4, grid.r[i]), atol=1e-3)


@pytest.mark.parametrize('D', (3, 4, 5))
def test_laplacian_polynomials(D):
    """Test the flux form Laplacian on constants and r^2."""
    grid = make_grid(D, 0.1, 1.0, 64, 'uniform')
    ones = RadialField(grid, np.ones(grid.n_nodes))
    square = RadialField(grid, grid.r**2)
    scale = np.max(np.abs(grid.laplacian_bands()[1]))
    assert np.allclose(laplacian(ones).values[:-1], 0, atol=1e-13 * scale)
    assert np.allclose(laplacian(square).values[:-1], 2 * D, rtol=1e-10)


@pytest.mark.parametrize('D', (3, 4, 5))
def test_laplacian_ground_state(D):
    """Test Laplacian W = -W^p up to second order errors."""
    grid = make_grid(D, 1e-3, 1e3, 1024)
    W = _w_field(grid)
    p = (D + 2) / (D - 2)
    lap = laplacian(W)
    err = l2_norm(lap + W.with_values(W.values**p))
    assert err / l2_norm(lap) < 1e-2


def test_laplacian_symmetry():
    """Test that the Laplacian is symmetric in the weighted product."""
    grid = make_grid(4, 1e-3, 1e2, 256)
    rng = np.random.default_rng(0)
    f = RadialField(grid, np.exp(-grid.r**2) * rng.normal(size=256))
    g = RadialField(grid, np.exp(-grid.r) * rng.normal(size=256))
    a = inner(laplacian(f), g)
    b = inner(f, laplacian(g))
    assert np.isclose(a, b, rtol=1e-10)


def test_norm_E_windows():
    """Test zero field, window monotonicity and window additivity."""
    grid = make_grid(4, 1e-3, 1e2, 512)
    W = _w_field(grid)
    assert norm_E(RadialField.zeros(grid)) == 0
    full = norm_E(W)
    assert full >= norm_E(W, 0.5, 5.0) >= 0
    for a in (0.01, 1.0, 7.3):
        assert np.isclose(norm_E(W, 0, a) + norm_E(W, a, None), full,
                          rtol=1e-12)
    assert np.isclose(energy_norm(W)**2, full)

    with pytest.raises(ConfigurationError):
        norm_E(W, 2.0, 1.0)
    with pytest.raises(ConfigurationError):
        norm_E(W, -1.0, None)


def test_norm_E_ground_state_oracle():
    """Test norm_E(W) in D = 4 against independent quadrature."""
    grid = make_grid(4, 1e-4, 1e4, 16384)
    value = norm_E(_w_field(grid))

    def integrand(r):
        return w_derivative(4, r)**2 * r**3 + w_profile(4, r)**2 * r

    oracle = quad(integrand, 0, 10, limit=200)[0]
    oracle += quad(integrand, 10, np.inf, limit=200)[0]
    assert np.isclose(oracle, 28 / 3, rtol=1e-8)
    assert np.isclose(value, oracle, rtol=1e-5)


def test_boundary_energy_in_kinetic_form():
    """Test that only windows reaching infinity carry the boundary term."""
    grid = make_grid(4, 1e-3, 1e2, 512)
    W = _w_field(grid)
    tail = grid.boundary_coeff * abs(W.values[-1])**2
    diff = kinetic_form(W) - kinetic_form(W, 0, grid.r_max)
    assert np.isclose(diff, tail, rtol=1e-12)

    dirichlet = make_grid(4, 1e-3, 1e2, 512, outer_bc='dirichlet')
    assert dirichlet.boundary_coeff != grid.boundary_coeff


def test_field_arithmetic():
    """Test field algebra and grid checks."""
    grid = make_grid(3, 0.1, 1.0, 32, 'uniform')
    f = RadialField(grid, grid.r)
    g = 2 * f - f / 2 + 1j * f
    assert np.allclose(g.values, (1.5 + 1j) * grid.r)
    assert np.allclose(g.conj().values, (1.5 - 1j) * grid.r)
    assert np.allclose(g.real.values, 1.5 * grid.r)
    assert linf_norm(g) == pytest.approx(abs(1.5 + 1j))

    with pytest.raises(DimensionError):
        RadialField(grid, np.ones(5))
    with pytest.raises(ValueError):
        RadialField(grid, np.full(32, np.nan))
    with pytest.raises(DimensionError):
        f + RadialField(make_grid(3, 0.1, 1.0, 33, 'uniform'), np.ones(33))

    s = ScalarField(grid, np.ones(32))
    assert np.isclose(s.integrate(), 1 / 3)


def test_grid_equality():
    """Test grid equality and rejection of bad node arrays."""
    a = make_grid(4, 1e-3, 1e2, 256)
    b = make_grid(4, 1e-3, 1e2, 256)
    assert a == b and hash(a) == hash(b)
    assert a != make_grid(4, 1e-3, 1e2, 256, outer_bc='dirichlet')

    with pytest.raises(ConfigurationError):
        RadialGrid(4, [0.1, 0.05, 1.0])


def test_field_io(tmpdir):
    """Test the field csv format and grid validation on read."""
    grid = make_grid(4, 1e-3, 1e2, 128)
    f = _w_field(grid) * np.exp(0.3j)
    fp = os.path.join(str(tmpdir), 'field.csv')
    write_field(f, fp)

    df = pd.read_csv(fp)
    assert list(df.columns) == ['r', 're_u', 'im_u']
    g = read_field(fp, grid)
    assert np.array_equal(f.values, g.values)

    with pytest.raises(DimensionError):
        read_field(fp, make_grid(4, 1e-3, 1e2, 129))

    df[['r', 're_u']].to_csv(fp, index=False)
    with pytest.raises(ConfigurationError):
        read_field(fp, grid)


def execute_pytest(capture='all', flags='-rapP'):
    """Execute module as pytest with detailed summary report.

    Parameters
    ----------
    capture : str
        Log or stdout/stderr capture option. ex: log (only logger),
        all (includes stdout/stderr)
    flags : str
        Which tests to show logs and results for.
    """

    fname = os.path.basename(__file__)
    pytest.main(['-q', '--show-capture={}'.format(capture), fname, flags])


if __name__ == '__main__':
    execute_pytest()
