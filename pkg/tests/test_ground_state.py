# -*- coding: utf-8 -*-
"""
Tests for the ground state family and the scaling generators
"""
import os
import warnings

import numpy as np
import pytest

from GLB.core.dynamics import f_nl, tension
from GLB.core.ground_state import (BubbleParams, apply_Lambda,
                                   apply_Lambda_underline, bubble,
                                   check_resolved, config_distance,
                                   lambda_w_profile, multi_bubble, w_profile,
                                   wrap_phase)
from GLB.core.radial import (RadialField, energy_norm, inner, l2_norm,
                             make_grid)
from GLB.utilities.exceptions import ConfigurationError, GLBWarning


@pytest.fixture(scope='module')
def grid4():
    """D = 4 geometric grid resolving scales 1e-2 to 1e2."""
    yield make_grid(4, 1e-3, 1e3, 1024)


@pytest.mark.parametrize(('D', 'r', 'expected'), [
    (4, 0.0, 1.0),
    (4, np.sqrt(8), 0.5),
    (3, np.sqrt(3), 1 / np.sqrt(2)),
    (5, np.sqrt(15), 2**-1.5),
])
def test_w_profile_values(D, r, expected):
    """Test the closed form ground state at reference radii."""
    assert np.isclose(w_profile(D, r), expected, rtol=1e-12)


@pytest.mark.parametrize('D', (3, 4, 5, 6))
def test_lambda_w_closed_form(D):
    """Test the closed form Lambda W against the discrete generator."""
    grid = make_grid(D, 1e-3, 1e3, 2048)
    W = RadialField(grid, w_profile(D, grid.r))
    numeric = apply_Lambda(W).values.real
    exact = lambda_w_profile(D, grid.r)
    assert np.max(np.abs(numeric - exact)) < 1e-3
    s0 = np.sqrt(D * (D - 2))
    assert np.isclose(lambda_w_profile(D, s0), 0, atol=1e-14)


def test_bubble_phase_and_scale(grid4):
    """Test phase rotation and energy-critical rescaling of bubbles."""
    b = bubble(np.pi, 1.0, grid4)
    assert np.allclose(b.values, -w_profile(4, grid4.r))

    b2 = bubble(0.0, 2.0, grid4)
    assert np.isclose(b2.values[0].real, 0.5, rtol=1e-6)

    norms = [energy_norm(bubble(0.3, lam, grid4)) for lam in (0.1, 1, 10)]
    assert np.allclose(norms, norms[1], rtol=1e-3)

    with pytest.raises(ConfigurationError):
        bubble(0.0, -1.0, grid4)


def test_check_resolved(grid4):
    """Test warnings for bubble scales the grid does not resolve."""
    with warnings.catch_warnings():
        warnings.simplefilter('error')
        assert check_resolved(1.0, grid4)

    with pytest.warns(GLBWarning):
        assert not check_resolved(5e-3, grid4)
    with pytest.warns(GLBWarning):
        bubble(0.0, 500.0, grid4)


def test_multi_bubble(grid4):
    """Test the empty configuration and opposite phase cancellation."""
    empty = multi_bubble(BubbleParams(), grid4)
    assert not empty.values.any()

    cancel = multi_bubble(BubbleParams([0.0, np.pi], [1.0, 1.0]), grid4)
    assert np.max(np.abs(cancel.values)) < 1e-14

    params = BubbleParams([0.5, 1.0], [10.0, 0.1])
    u = multi_bubble(params, grid4)
    direct = bubble(1.0, 0.1, grid4) + bubble(0.5, 10.0, grid4)
    assert np.allclose(u.values, direct.values)


def test_bubble_params():
    """Test sorting, phase wrapping and the optimizer vector."""
    p = BubbleParams([7.0, -1.0], [2.0, 0.5])
    assert p.lam == (0.5, 2.0)
    assert np.isclose(p.theta[0], 2 * np.pi - 1.0)
    assert np.isclose(p.theta[1], 7.0 - 2 * np.pi)
    assert p.n == 2

    q = BubbleParams.from_vector(p.to_vector())
    assert np.allclose(q.lam, p.lam) and np.allclose(q.theta, p.theta)

    r = p.rotate(np.pi).rescale(3.0)
    assert np.allclose(r.lam, (1.5, 6.0))
    assert np.allclose(r.theta, wrap_phase(np.asarray(p.theta) + np.pi))

    with pytest.raises(ConfigurationError):
        BubbleParams([0.0], [1.0, 2.0])
    with pytest.raises(ConfigurationError):
        BubbleParams([0.0], [0.0])


def test_config_distance():
    """Test the configuration distance on the circle."""
    p = BubbleParams([0.1], [1.0])
    q = BubbleParams([2 * np.pi - 0.1], [1.1])
    assert np.isclose(config_distance(p, q), abs(1 / 1.1 - 1) + 0.2)
    assert config_distance(BubbleParams(), BubbleParams()) == 0

    with pytest.raises(ConfigurationError):
        config_distance(p, BubbleParams())


def test_scaling_generators(grid4):
    """Test Lambda - Lambda_ = -1 and Lambda r^(-(D-2)/2) = 0."""
    u = bubble(0.4, 1.0, grid4)
    diff = apply_Lambda(u) - apply_Lambda_underline(u)
    assert np.allclose(diff.values, -u.values, atol=1e-14)

    r = grid4.r
    power = RadialField(grid4, r**-1.0)
    out = apply_Lambda(power).values[1:-1]
    assert np.max(np.abs(out) * r[1:-1]) < 1e-3


def test_ground_state_is_stationary(grid4):
    """Test that the tension of W is small and orthogonal to Lambda W."""
    W = bubble(0.0, 1.0, grid4)
    T = tension(W)
    assert l2_norm(T) / l2_norm(f_nl(W)) < 1e-2

    LW = apply_Lambda(W)
    assert abs(inner(LW, T)) < 1e-3


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
