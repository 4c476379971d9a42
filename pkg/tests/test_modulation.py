# -*- coding: utf-8 -*-
"""
Tests for bubble detection, modulation fits and proximity functions
"""
import os

import numpy as np
import pytest

from GLB.core.dynamics import FlowConfig, FlowState, evolve
from GLB.core.ground_state import BubbleParams, bubble, multi_bubble
from GLB.core.linearized import default_test_profiles
from GLB.core.modulation import (ModulationSeries, OrthogonalityConditions,
                                 Regime, body_background, bound_sandwich,
                                 delta_R, detect_bubbles, fit_decomposition,
                                 proximity_d, proximity_dK, proximity_dM,
                                 ratio_terms, snapshot_regime,
                                 track_modulation, unwrap_phases)
from GLB.core.radial import RadialField, energy_norm, inner, make_grid
from GLB.handlers.verify import random_field
from GLB.utilities.exceptions import ConfigurationError

STATIC = Regime('static')


@pytest.fixture(scope='module')
def grid4():
    """D = 4 grid on [1e-4, 1e3]."""
    yield make_grid(4, 1e-4, 1e3, 1024)


@pytest.fixture(scope='module')
def noisy_bubble(grid4):
    """A bubble plus a small smooth perturbation of energy norm 1e-3."""
    planted = BubbleParams([1.0], [0.5])
    noise = random_field(grid4, np.random.default_rng(11))
    noise = noise * (1e-3 / energy_norm(noise))
    yield planted, multi_bubble(planted, grid4) + noise


def test_regime():
    """Test top scales and validation of the regimes."""
    assert STATIC.top_scale == np.inf
    assert Regime('global', t=4.0).top_scale == 2.0
    assert Regime('blowup', t=1.0, t_plus=1.25).top_scale == 0.5
    assert Regime('global', t=4.0).to_dict()['kind'] == 'global'

    for kwargs in ({'kind': 'local'}, {'kind': 'global'},
                   {'kind': 'global', 't': 0.0},
                   {'kind': 'blowup', 't': 1.0, 't_plus': 1.0}):
        with pytest.raises(ConfigurationError):
            Regime(**kwargs)


def test_ratio_terms():
    """Test scale ratio terms with open and closed chain ends."""
    assert np.allclose(ratio_terms([1.0, 100.0], 4), [0.01])
    assert np.allclose(ratio_terms([100.0, 1.0], 4, top=1e3), [0.01, 0.1])
    assert np.allclose(ratio_terms([1.0], 6, bottom=0.1), [0.01])
    assert len(ratio_terms([], 4)) == 0


def test_body_background(grid4):
    """Test that the background vanishes inside the cutoff radius."""
    u = bubble(0.0, 1.0, grid4)
    bg = body_background(u, 5.0)
    assert not bg.values[grid4.r <= 5.0].any()
    assert np.allclose(bg.values[grid4.r >= 10.0],
                       u.values[grid4.r >= 10.0])

    with pytest.raises(ConfigurationError):
        body_background(u, 0.0)


def test_detect_bubbles(grid4):
    """Test detection of one and two well separated bubbles."""
    assert detect_bubbles(RadialField.zeros(grid4)) == []

    found = detect_bubbles(bubble(0.4, 0.5, grid4))
    assert len(found) == 1
    assert np.isclose(found[0].lam[0], 0.5, rtol=0.05)
    assert np.isclose(found[0].theta[0], 0.4, atol=1e-8)

    u = multi_bubble(BubbleParams([0.3, 2.0], [0.01, 1.0]), grid4)
    found = detect_bubbles(u)
    assert len(found) == 2
    assert np.isclose(found[0].lam[0], 0.01, rtol=0.05)
    assert np.isclose(found[1].lam[0], 1.0, rtol=0.05)
    assert len(detect_bubbles(u, N_max=1)) == 1


def test_fit_exact_bubble(grid4):
    """Test that an exact bubble is recovered with zero remainder."""
    planted = BubbleParams([0.7], [0.3])
    u = multi_bubble(planted, grid4)
    res = fit_decomposition(u, 1, planted)
    assert res.converged
    assert np.allclose(res.params.lam, planted.lam, rtol=1e-10)
    assert np.allclose(res.params.theta, planted.theta, atol=1e-10)
    assert res.g_norm < 1e-10
    assert res.ratio_sum == 0
    assert set(res.to_dict()) >= {'theta', 'lambda', 'd_upper'}


def test_fit_recovery(grid4, noisy_bubble):
    """Test recovery of planted parameters under a small perturbation."""
    planted, u = noisy_bubble
    res = fit_decomposition(u, 1, planted.rotate(0.05).rescale(1.05))
    assert abs(res.params.theta[0] - planted.theta[0]) < 1e-2
    assert abs(res.params.lam[0] / planted.lam[0] - 1) < 1e-2
    assert res.ortho_max < 1e-8

    profiles = default_test_profiles(4)
    theta, lam = res.params.theta[0], res.params.lam[0]
    Z1 = RadialField(grid4, 1j * np.exp(1j * theta)
                     * profiles.z1_values(grid4.r, lam))
    Z2 = RadialField(grid4, np.exp(1j * theta)
                     * profiles.z2_values(grid4.r, lam))
    assert abs(inner(Z1, res.g)) / lam**2 < 1e-8
    assert abs(inner(Z2, res.g)) / lam**2 < 1e-8


def test_fit_phase_gauge(noisy_bubble):
    """Test that rotating the field rotates the fit."""
    planted, u = noisy_bubble
    alpha = 2.0
    a = fit_decomposition(u, 1, planted)
    b = fit_decomposition(u * np.exp(1j * alpha), 1, planted.rotate(alpha))
    dtheta = np.angle(np.exp(1j * (b.params.theta[0] - a.params.theta[0]
                                   - alpha)))
    assert abs(dtheta) < 1e-7
    assert np.isclose(b.params.lam[0], a.params.lam[0], rtol=1e-7)
    diff = energy_norm(b.g - a.g * np.exp(1j * alpha))
    assert diff < 1e-7


def test_fit_bad_guess(grid4):
    """Test that a guess with the wrong bubble count is rejected."""
    u = bubble(0.0, 1.0, grid4)
    with pytest.raises(ConfigurationError):
        fit_decomposition(u, 2, BubbleParams([0.0], [1.0]))
    with pytest.raises(ConfigurationError):
        fit_decomposition(u, 0, BubbleParams())


def test_orthogonality_jacobian(grid4, noisy_bubble):
    """Test the analytic Jacobian against central differences."""
    planted, u = noisy_bubble
    conditions = OrthogonalityConditions(u, 1, default_test_profiles(4))
    x = planted.rotate(0.1).rescale(1.2).to_vector()
    _, J = conditions.evaluate(x)
    eps = 1e-6
    for k in range(len(x)):
        dx = np.zeros_like(x)
        dx[k] = eps
        fd = (conditions.residuals(x + dx)
              - conditions.residuals(x - dx)) / (2 * eps)
        assert np.allclose(J[:, k], fd, rtol=1e-5, atol=1e-8)


def test_proximity_no_bubbles(grid4):
    """Test that d with N = 0 is the energy norm."""
    u = bubble(0.0, 1.0, grid4)
    pv = proximity_d(u, 0, STATIC)
    assert np.isclose(pv.value, energy_norm(u))
    assert pv.argmin_params.n == 0

    with pytest.raises(ConfigurationError):
        proximity_d(u, -1, STATIC)


def test_proximity_two_bubbles(grid4):
    """Test d at a planted two-bubble configuration."""
    planted = BubbleParams([0.0, 0.0], [0.01, 1.0])
    u = multi_bubble(planted, grid4)
    pv = proximity_d(u, 2, STATIC, n_random=2)
    assert np.isclose(pv.value, 0.1, rtol=0.05)
    assert np.allclose(pv.argmin_params.lam, planted.lam, rtol=0.1)
    assert pv.upper_bound
    assert pv.to_dict()['n_starts'] == pv.n_starts >= 3


def test_proximity_static_M(grid4):
    """Test that d_M ignores the top scale and matches static d."""
    planted = BubbleParams([0.0, 0.0], [0.01, 1.0])
    u = multi_bubble(planted, grid4)
    a = proximity_dM(u, 2, n_random=2)
    b = proximity_d(u, 2, STATIC, n_random=2)
    assert np.isclose(a.value, b.value, rtol=1e-6)
    assert a.top_scale == np.inf


def test_proximity_global_regime(grid4):
    """Test the top scale term of the global regime."""
    u = bubble(0.0, 1.0, grid4)
    pv = proximity_d(u, 1, Regime('global', t=100.0), n_random=2)
    assert np.isclose(pv.value, np.sqrt(0.1), rtol=0.05)
    assert pv.top_scale == 10.0


def test_proximity_exterior(grid4):
    """Test d_K with every bubble inside the excised ball."""
    u = bubble(0.0, 1.0, grid4)
    pv = proximity_dK(u, 1, 1, 5.0, STATIC)
    assert np.isclose(pv.value, energy_norm(u, 5.0, None))
    assert pv.K == 1

    with pytest.raises(ConfigurationError):
        proximity_dK(u, 1, 2, 5.0, STATIC)
    with pytest.raises(ConfigurationError):
        proximity_dK(u, 1, 0, 0.0, STATIC)


def test_delta_R(grid4):
    """Test the localized distance and its bubble count selection."""
    u = bubble(0.0, 1.0, grid4)
    value, M, params = delta_R(u, 100.0, 2, n_random=2)
    assert M == 1
    assert np.isclose(value, 0.1, rtol=0.05)
    assert value < energy_norm(u, 0, 100.0)
    assert np.isclose(params.lam[0], 1.0, rtol=0.1)

    value, M, params = delta_R(RadialField.zeros(grid4), 10.0, 1,
                               n_random=1)
    assert (value, M, params.n) == (0.0, 0, 0)

    with pytest.raises(ConfigurationError):
        delta_R(u, 0.0, 1)


def test_bound_sandwich(grid4, noisy_bubble):
    """Test the measured constant between the fit and d."""
    planted, u = noisy_bubble
    res = fit_decomposition(u, 1, planted)
    out = bound_sandwich(res, u, n_random=2)
    assert out['d'] > 0
    assert np.isclose(out['upper'], res.g_norm**2)
    assert 1 - 1e-6 <= out['C'] < 10


def test_track_modulation():
    """Test tracking a single bubble along a short flow."""
    grid = make_grid(4, 1e-3, 1e3, 1024)
    W = bubble(0.0, 1.0, grid)
    cfg = FlowConfig(phase=0.2, dt=1e-3, t_end=0.02)
    record = evolve(FlowState.initial(W), cfg, cadence=5)
    series = track_modulation(record, 1)
    assert series.failure_index is None
    assert len(series) == len(record)
    assert record.modulation is series

    df = series.to_frame()
    assert list(df.columns) == ['t', 'd', 'g_norm', 'theta_1', 'lambda_1',
                                'ortho_max_resid', 'converged']
    assert np.allclose(df['lambda_1'], 1.0, rtol=1e-2)
    assert df['converged'].all()

    ratios = series.ratio_frame()
    assert list(ratios.columns) == ['t', 'ratio_1']
    unwrapped = unwrap_phases(series)
    assert (np.abs(np.diff(unwrapped['theta_1'])) < np.pi).all()


def test_snapshot_regime():
    """Test the per-snapshot top scales of the tracking regimes."""
    assert snapshot_regime('static', 2.0).top_scale == np.inf
    assert snapshot_regime('global', 0.0).kind == 'static'
    assert snapshot_regime('global', 4.0).top_scale == 2.0
    assert snapshot_regime('blowup', 1.0, t_plus=1.25).top_scale == 0.5

    with pytest.raises(ConfigurationError):
        snapshot_regime('blowup', 1.0)


def test_track_modulation_global_regime():
    """Test that tracked d carries the sqrt(t) top scale ratio."""
    grid = make_grid(4, 1e-3, 1e3, 1024)
    W = bubble(0.0, 1.0, grid)
    cfg = FlowConfig(phase=0.2, dt=1e-3, t_end=0.02)
    record = evolve(FlowState.initial(W), cfg, cadence=5)
    static = track_modulation(record, 1).to_frame()
    df = track_modulation(record, 1, regime='global').to_frame()

    assert np.allclose(df['g_norm'], static['g_norm'])
    assert df['d'].iloc[0] == static['d'].iloc[0]
    later = df.iloc[1:]
    assert np.allclose(later['d']**2 - later['g_norm']**2,
                       later['lambda_1'] / np.sqrt(later['t']), rtol=1e-8)

    with pytest.raises(ConfigurationError):
        track_modulation(record, 1, regime='local')


def test_empty_series():
    """Test the ratio table of a series with fewer than two fits."""
    series = ModulationSeries(2)
    ratios = series.ratio_frame()
    assert list(ratios.columns) == ['t', 'ratio_1', 'ratio_2']
    assert len(ratios) == 0


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
