# -*- coding: utf-8 -*-
"""
Tests for the IMEX time stepping of the Ginzburg-Landau flow
"""
import os

import numpy as np
import pytest

from GLB.core.dynamics import (FlowConfig, FlowState, ImexBeFe, ImexCnAb2,
                               ImexStepper, continuous_dependence, evolve,
                               f_nl, f_prime, min_scale, schemes,
                               smoothing_monitor, step, tension)
from GLB.core.ground_state import bubble
from GLB.core.radial import RadialField, l2_norm, make_grid
from GLB.handlers.verify import heat_error, stationarity_distance
from GLB.utilities.exceptions import BlowupError, ConfigurationError


@pytest.fixture(scope='module')
def grid4():
    """D = 4 grid on [1e-3, 1e3]."""
    yield make_grid(4, 1e-3, 1e3, 1024)


def _field(grid, values):
    return RadialField(grid, np.full(grid.n_nodes, values, dtype=complex))


@pytest.mark.parametrize(('D', 'value', 'expected'), [
    (4, 2.0, 8.0),
    (4, 1j, 1j),
    (3, 1.0, 1.0),
    (3, 2.0, 32.0),
    (6, 4.0, 16.0),
])
def test_f_nl_values(D, value, expected):
    """Test the pointwise nonlinearity |u|^(4/(D-2)) u."""
    grid = make_grid(D, 0.1, 1.0, 16, 'uniform')
    out = f_nl(_field(grid, value)).values
    assert np.allclose(out, expected)


def test_f_prime():
    """Test f'(u) g against reference values and finite differences."""
    grid = make_grid(4, 0.1, 1.0, 16, 'uniform')
    u = _field(grid, 1.0)
    assert np.allclose(f_prime(u, _field(grid, 1.0)).values, 3.0)
    assert np.allclose(f_prime(u, _field(grid, 1j)).values, 1j)
    zero = f_prime(RadialField.zeros(grid), _field(grid, 1.0)).values
    assert not zero.any()

    rng = np.random.default_rng(1)
    for D in (3, 4, 5):
        grid = make_grid(D, 0.1, 1.0, 16, 'uniform')
        u = RadialField(grid, rng.normal(size=16) + 1j * rng.normal(size=16))
        g = RadialField(grid, rng.normal(size=16) + 1j * rng.normal(size=16))
        eps = 1e-6
        fd = (f_nl(u + g * eps).values - f_nl(u - g * eps).values) / (2 * eps)
        assert np.allclose(f_prime(u, g).values, fd, rtol=1e-6, atol=1e-8)


def test_tension(grid4):
    """Test the tension of zero, W and its rotations."""
    assert not tension(RadialField.zeros(grid4)).values.any()
    W = bubble(0.0, 1.0, grid4)
    T = l2_norm(tension(W))
    assert T / l2_norm(f_nl(W)) < 1e-2
    assert np.isclose(l2_norm(tension(W * np.exp(0.7j))), T, rtol=1e-12)


@pytest.mark.parametrize('kwargs', [
    {'phase': np.pi / 2},
    {'phase': -2.0},
    {'dt': 0.0},
    {'t_end': -1.0},
    {'scheme': 'rk4'},
    {'dt_safety': 0.0},
    {'linf_ceiling': -1.0},
])
def test_flow_config_validation(kwargs):
    """Test rejection of invalid flow parameters."""
    with pytest.raises(ConfigurationError):
        FlowConfig(**kwargs)


def test_flow_config():
    """Test the complex parameter and the registry of schemes."""
    cfg = FlowConfig(phase=np.pi / 3)
    assert np.isclose(cfg.z, 0.5 + 0.5j * np.sqrt(3))
    assert cfg.to_dict()['scheme'] == 'imex_cn_ab2'
    assert list(schemes) == ['imex_be_fe', 'imex_cn_ab2']


def test_scheme_coefficients():
    """Test BE/FE start-up and variable step AB2 coefficients."""
    assert ImexBeFe.compute_coefficients(0.1, None, 5) == (1, 0, 1, 0)
    assert ImexCnAb2.compute_coefficients(0.1, None, 0) == (1, 0, 1, 0)
    assert ImexCnAb2.compute_coefficients(0.1, 0.1, 1) == (0.5, 0.5, 1.5,
                                                           -0.5)
    b0, b1, c1, c2 = ImexCnAb2.compute_coefficients(0.1, 0.2, 3)
    assert (b0, b1) == (0.5, 0.5)
    assert np.isclose(c1 + c2, 1)
    assert np.isclose(c1, 1.25)


@pytest.mark.parametrize('scheme', ['imex_be_fe', 'imex_cn_ab2'])
def test_zero_stays_zero(grid4, scheme):
    """Test that the zero field is a fixed point of every scheme."""
    cfg = FlowConfig(dt=1e-2, scheme=scheme)
    state = FlowState.initial(RadialField.zeros(grid4))
    for _ in range(3):
        state = step(state, cfg)
    assert not state.u.values.any()
    assert state.step_count == 3
    assert state.dissipation_accum == 0


def test_stepper_history(grid4):
    """Test that steps carry the explicit history and dissipation."""
    u0 = RadialField(grid4, 0.5 * np.exp(-grid4.r**2))
    stepper = ImexStepper(grid4, FlowConfig(dt=1e-3))
    s1 = stepper.step(FlowState.initial(u0))
    s2 = stepper.step(s1)
    assert s1.f_prev is not None and s1.dt_prev == 1e-3
    assert np.isclose(s2.t, 2e-3)
    assert s2.dissipation_accum > s1.dissipation_accum > 0
    assert s2.dtu_l2 > 0
    assert 'imex_cn_ab2' in repr(stepper)


@pytest.mark.parametrize('phase', [0.0, np.pi / 4])
def test_heat_kernel(phase):
    """Test the linear flow against the closed form Gaussian solution."""
    e1 = heat_error(phase, 161, 0.01)
    e2 = heat_error(phase, 321, 0.005)
    assert e1 < 1e-2
    assert np.log2(e1 / e2) >= 1.9


@pytest.mark.parametrize('D', (3, 4, 5))
@pytest.mark.parametrize('phase', (0.0, np.pi / 6, np.pi / 4))
def test_ground_state_stationary(D, phase):
    """Test that W stays close to itself up to t = 1 on the default grid."""
    assert stationarity_distance(D, phase) <= 1e-3


def test_evolve_ticks(grid4):
    """Test the initial tick, cadence ticks and the final tick."""
    u0 = RadialField(grid4, 0.5 * np.exp(-grid4.r**2))
    record = evolve(FlowState.initial(u0), FlowConfig(t_end=0.0))
    assert len(record) == 1

    seen = []
    record = evolve(FlowState.initial(u0), FlowConfig(dt=0.01, t_end=0.1),
                    observers=[lambda s, rec: seen.append(s.t)], cadence=3)
    assert len(record) == 5
    assert np.allclose(record.times, [0, 0.03, 0.06, 0.09, 0.1])
    assert np.allclose(seen, record.times)
    assert (np.diff(record.times) > 0).all()

    with pytest.raises(ConfigurationError):
        evolve(FlowState.initial(u0), FlowConfig(), cadence=0)


def test_phase_covariance(grid4):
    """Test that rotating the data rotates the solution."""
    rng = np.random.default_rng(7)
    u0 = RadialField(grid4, 0.3 * np.exp(-(np.log(grid4.r))**2)
                     * (rng.normal() + 1j * rng.normal()))
    cfg = FlowConfig(phase=0.3, dt=1e-3, t_end=0.02)
    a = evolve(FlowState.initial(u0), cfg, cadence=5)
    b = evolve(FlowState.initial(u0 * np.exp(0.9j)), cfg, cadence=5)
    for (_, u), (_, v) in zip(a.snapshots, b.snapshots):
        assert l2_norm(u * np.exp(0.9j) - v) <= 1e-10 * max(l2_norm(u), 1)


def test_blowup_signal(grid4):
    """Test that exceeding the sup norm ceiling raises with the record."""
    W = bubble(0.0, 1.0, grid4)
    cfg = FlowConfig(dt=1e-3, t_end=0.1, linf_ceiling=0.5)
    with pytest.raises(BlowupError) as excinfo:
        evolve(FlowState.initial(W), cfg)

    err = excinfo.value
    assert err.reason == 'linf_ceiling'
    assert err.state.step_count == 1
    assert len(err.record) == 2


def test_adaptive_steps(grid4):
    """Test adaptive steps reach t_end with a sub-step bound."""
    W = bubble(0.0, 1.0, grid4)
    cfg = FlowConfig(dt=0.05, t_end=0.1, adapt=True, dt_safety=0.01)
    record = evolve(FlowState.initial(W), cfg)
    assert np.isclose(record.final_state.t, 0.1)
    assert record.final_state.step_count >= 10
    assert np.isclose(min_scale(W), 1.0, rtol=0.05)
    assert min_scale(RadialField.zeros(grid4)) == np.inf


def test_min_scale(grid4):
    """Test the concentration scale of narrow and unresolved bubbles."""
    assert np.isclose(min_scale(bubble(0.0, 1e-2, grid4)), 1e-2, rtol=0.05)
    assert min_scale(bubble(0.0, 1e-2, grid4) * 10) < 1e-2

    unresolved = bubble(0.0, 1e-5, grid4)
    assert min_scale(unresolved) < 4 * grid4.r_min
    assert np.isclose(min_scale(unresolved), grid4.r[0] / np.sqrt(8))


def test_scale_floor_stop():
    """Test that a collapsing (1 + delta) W stops on the scale floor."""
    grid = make_grid(4, 1e-4, 100.0, 2048)
    u0 = bubble(0.0, 1.0, grid) * 1.1
    cfg = FlowConfig(phase=np.pi / 6, dt=1e-3, t_end=4.0, adapt=True,
                     dt_safety=0.05)
    with pytest.raises(BlowupError) as excinfo:
        evolve(FlowState.initial(u0), cfg, cadence=100)

    err = excinfo.value
    assert err.reason == 'scale_floor'
    assert err.state.t < cfg.t_end
    assert err.record.final_state is None
    linf = float(np.max(np.abs(err.state.u.values)))
    assert linf < cfg.linf_ceiling
    assert min_scale(err.state.u) < 4 * grid.r_min


def test_smoothing_and_dependence(grid4):
    """Test the smoothing monitor and continuous dependence outputs."""
    u0 = RadialField(grid4, 0.5 * np.exp(-grid4.r**2))
    v0 = u0 * 1.01
    cfg = FlowConfig(dt=1e-2, t_end=0.1)
    record = evolve(FlowState.initial(u0), cfg)
    series, sup = smoothing_monitor(record)
    assert list(series.columns) == ['t', 'monitor']
    assert 0 < sup < np.inf

    out = continuous_dependence(u0, v0, cfg)
    assert out['n_ticks'] == len(record)
    assert out['sup_energy'] > 0
    assert out['sup_energy'] <= 2 * out['initial_energy_distance']


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
