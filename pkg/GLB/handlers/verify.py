# -*- coding: utf-8 -*-
"""
Invariant suite: named numerical checks against closed forms, identities
and refinement orders. Each check returns a CheckResult and run_checks
aggregates them for the verify experiment.
"""
from collections import OrderedDict
from dataclasses import dataclass, asdict
import logging

import numpy as np

from GLB.core.dynamics import (FlowConfig, FlowState, evolve, schemes,
                               tension)
from GLB.core.energy import (CutoffSpec, dissipation_balance, energy,
                             localized_energy_balance, radial_sobolev_check)
from GLB.core.ground_state import (BubbleParams, bubble, lambda_w_profile,
                                   multi_bubble)
from GLB.core.linearized import apply_L, build_test_profiles, eigen_ground
from GLB.core.modulation import (Regime, detect_bubbles, fit_decomposition,
                                 proximity_d, ratio_terms)
from GLB.core.radial import (RadialField, energy_norm, inner, l2_norm,
                             make_grid)
from GLB.utilities.exceptions import ConfigurationError

logger = logging.getLogger(__name__)


checks = OrderedDict()


def add_check(name):
    """Register a check function under a name."""
    def decorator(func):
        checks[name] = func
        return func
    return decorator


@dataclass(frozen=True)
class CheckResult:
    """Outcome of one invariant check."""

    name: str
    passed: bool
    value: float
    tolerance: float
    detail: str = ''

    def to_dict(self):
        """JSON-friendly representation."""
        out = asdict(self)
        out['passed'] = bool(self.passed)
        out['value'] = float(self.value)
        return out


def random_field(grid, rng, n_terms=3, complex_values=True, amplitude=1.0):
    """Smooth random field built from Gaussians in log r.

    Parameters
    ----------
    grid : RadialGrid
        Target grid.
    rng : np.random.Generator
        Random source.
    n_terms : int
        Number of Gaussian terms.
    complex_values : bool
        Draw complex coefficients.
    amplitude : float
        Coefficient scale.

    Returns
    -------
    RadialField
    """
    log_r = np.log(grid.r)
    values = np.zeros(grid.n_nodes, dtype=complex)
    for _ in range(n_terms):
        center = np.log(rng.uniform(0.3, 5.0))
        width = rng.uniform(0.3, 0.8)
        coeff = rng.normal()
        if complex_values:
            coeff = coeff + 1j * rng.normal()
        values += amplitude * coeff * np.exp(-0.5 * ((log_r - center)
                                                     / width)**2)

    return RadialField(grid, values, label='random')


def _reference_grid(D, quick):
    return make_grid(D, 1e-3, 1e3, 1024 if quick else 2048)


@add_check('ground_state_stationarity')
def check_stationarity(rng, n_random, quick):
    """Relative tension of rotated, rescaled ground states."""
    grid = _reference_grid(4, quick)
    worst = 0.0
    for theta, lam in ((0.0, 1.0), (1.3, 0.5), (4.0, 3.0)):
        W = bubble(theta, lam, grid)
        rel = l2_norm(tension(W)) / l2_norm(W.with_values(
            grid.apply_laplacian(W.values)))
        worst = max(worst, rel)

    return CheckResult('ground_state_stationarity', worst < 1e-2, worst,
                       1e-2)


def stationarity_distance(D, phase, n_nodes=2048, dt=1e-4, t_end=1.0,
                          cadence=100):
    """sup_t ||u(t) - W||_E along the flow started from W."""
    grid = make_grid(D, 1e-3, 100.0, n_nodes)
    W = bubble(0.0, 1.0, grid)
    cfg = FlowConfig(phase=phase, dt=dt, t_end=t_end)
    record = evolve(FlowState.initial(W), cfg, cadence=cadence)

    return max(energy_norm(u - W) for _, u in record.snapshots)


@add_check('flow_stationarity')
def check_flow_stationarity(rng, n_random, quick):
    """W stays put under the flow for every dimension and phase."""
    if quick:
        cases = ((4, np.pi / 6),)
        kwargs = {'n_nodes': 1024, 'dt': 1e-3, 't_end': 0.1, 'cadence': 10}
    else:
        cases = tuple((D, phase) for D in (3, 4, 5)
                      for phase in (0.0, np.pi / 6, np.pi / 4))
        kwargs = {}

    dists = {}
    for D, phase in cases:
        dists['D={}, phase={:.4f}'.format(D, phase)] = stationarity_distance(
            D, phase, **kwargs)
    worst = max(dists.values())

    return CheckResult('flow_stationarity', worst <= 1e-3, worst, 1e-3,
                       str(dists))


@add_check('ground_state_energy')
def check_ground_state_energy(rng, n_random, quick):
    """E(W_lam) = 4/3 in D = 4 for several scales."""
    grid = _reference_grid(4, quick)
    worst = 0.0
    for lam in (0.3, 1.0, 3.0):
        E = energy(bubble(0.0, lam, grid)).total
        worst = max(worst, abs(E - 4 / 3) / (4 / 3))

    return CheckResult('ground_state_energy', worst < 1e-3, worst, 1e-3)


def _gaussian_run(phase, dt=1e-3, t_end=0.1, amplitude=0.5, cadence=10,
                  scheme='imex_cn_ab2'):
    grid = make_grid(4, 1e-3, 1e2, 512)
    u0 = RadialField(grid, amplitude * np.exp(-grid.r**2 / 4), label='u0')
    cfg = FlowConfig(phase=phase, dt=dt, t_end=t_end, scheme=scheme)

    return evolve(FlowState.initial(u0), cfg, cadence=cadence)


def ledger_residual(phase, dt, scheme='imex_cn_ab2'):
    """Relative energy ledger residual of the Gaussian run at step dt."""
    record = _gaussian_run(phase, dt=dt, cadence=int(round(0.01 / dt)),
                           scheme=scheme)

    return dissipation_balance(record)['relative_residual']


@add_check('energy_ledger')
def check_energy_ledger(rng, n_random, quick):
    """E(t2) - E(t1) + Re z (dissipation) relative to E(0)."""
    phases = (np.pi / 6,) if quick else (0.0, np.pi / 6, np.pi / 4)
    dt = 1e-3 if quick else 1e-4
    worst = max(ledger_residual(phase, dt) for phase in phases)

    return CheckResult('energy_ledger', worst <= 1e-4, worst, 1e-4)


@add_check('energy_ledger_order')
def check_energy_ledger_order(rng, n_random, quick):
    """Observed order of the ledger residual under dt halving."""
    phases = (np.pi / 6,) if quick else (0.0, np.pi / 6, np.pi / 4)
    target = 0.9 * schemes['imex_cn_ab2'].order
    order = np.inf
    for phase in phases:
        coarse = ledger_residual(phase, 2e-3)
        fine = ledger_residual(phase, 1e-3)
        order = min(order, np.log2(coarse / fine))

    return CheckResult('energy_ledger_order', order >= target, order, target)


@add_check('energy_monotonicity')
def check_energy_monotonicity(rng, n_random, quick):
    """Largest energy increase between ticks relative to E(0)."""
    record = _gaussian_run(np.pi / 4, cadence=1)
    E = record.to_frame()['E'].values
    value = float(max(np.max(np.diff(E)), 0.0) / abs(E[0]))

    return CheckResult('energy_monotonicity', value <= 1e-8, value, 1e-8)


@add_check('phase_covariance')
def check_phase_covariance(rng, n_random, quick):
    """Evolving e^{i alpha} u0 equals e^{i alpha} times the evolution."""
    grid = make_grid(4, 1e-3, 1e2, 512)
    u0 = random_field(grid, rng, amplitude=0.3)
    cfg = FlowConfig(phase=0.3, dt=1e-3, t_end=0.02)
    alpha = rng.uniform(0, 2 * np.pi)
    rot = np.exp(1j * alpha)
    a = evolve(FlowState.initial(u0), cfg, cadence=20).final_state.u
    b = evolve(FlowState.initial(u0 * rot), cfg, cadence=20).final_state.u
    value = l2_norm(b - a * rot) / l2_norm(a)

    return CheckResult('phase_covariance', value < 1e-10, value, 1e-10)


def heat_error(phase, n_nodes, dt, sigma=1.0, t_end=0.5, D=3):
    """Largest L2 error over ticks of the linear flow from Gaussian data
    against the closed form Gaussian solution."""
    grid = make_grid(D, 0.01, 12.0, n_nodes, stretch='uniform')
    r = grid.r
    u0 = RadialField(grid, np.exp(-r**2 / (4 * sigma)), label='gaussian')
    cfg = FlowConfig(phase=phase, dt=dt, t_end=t_end, nonlinear=False)
    z = cfg.z
    record = evolve(FlowState.initial(u0), cfg, cadence=1)
    err = 0.0
    for t, u in record.snapshots:
        s = sigma + z * t
        exact = (sigma / s)**(D / 2) * np.exp(-r**2 / (4 * s))
        err = max(err, l2_norm(u - exact))

    return err


@add_check('heat_kernel_order')
def check_heat_kernel(rng, n_random, quick):
    """Observed order of the linear flow under joint h and dt halving."""
    phases = (0.0,) if quick else (0.0, np.pi / 4)
    order = np.inf
    for phase in phases:
        e1 = heat_error(phase, 161, 0.01)
        e2 = heat_error(phase, 321, 0.005)
        order = min(order, np.log2(e1 / e2))

    return CheckResult('heat_kernel_order', order >= 1.9, order, 1.9)


@add_check('linearized_spectrum')
def check_spectrum(rng, n_random, quick):
    """One negative eigenvalue of L+, none of L-, stable under doubling."""
    M = 1024 if quick else 2048
    plus = eigen_ground('plus', 3, make_grid(4, 1e-3, 1e3, M))
    plus2 = eigen_ground('plus', 1, make_grid(4, 1e-3, 1e3, 2 * M))
    minus = eigen_ground('minus', 2, make_grid(4, 1e-3, 1e3, M))
    n_neg = sum(s.eigenvalue < -1e-4 for s in plus)
    drift = abs(plus2[0].eigenvalue - plus[0].eigenvalue) / abs(
        plus[0].eigenvalue)
    passed = (n_neg == 1 and drift < 5e-4
              and minus[0].eigenvalue > -1e-4)
    detail = ('L+ {}, L- {}, kappa^2 drift {:.2e}'
              .format([s.eigenvalue for s in plus],
                      [s.eigenvalue for s in minus], drift))

    return CheckResult('linearized_spectrum', passed, drift, 5e-4, detail)


@add_check('kernel_residuals')
def check_kernel_residuals(rng, n_random, quick):
    """||L+ Lambda W|| and ||L- W|| in L2."""
    grid = _reference_grid(4, quick)
    W = bubble(0.0, 1.0, grid)
    LW = RadialField(grid, lambda_w_profile(4, grid.r), label='LambdaW')
    value = max(l2_norm(apply_L('plus', LW)), l2_norm(apply_L('minus', W)))

    return CheckResult('kernel_residuals', value <= 1e-3, value, 1e-3)


@add_check('lminus_positivity')
def check_lminus_positivity(rng, n_random, quick):
    """min <g, L- g> / ||g||^2 over random real fields."""
    grid = _reference_grid(4, quick)
    worst = np.inf
    for _ in range(n_random):
        g = random_field(grid, rng, complex_values=False)
        worst = min(worst, inner(g, apply_L('minus', g)) / l2_norm(g)**2)

    return CheckResult('lminus_positivity', worst >= -1e-4, worst, -1e-4)


@add_check('linearized_symmetry')
def check_symmetry(rng, n_random, quick):
    """|<L f|g> - <f|L g>| relative to the pairing sizes."""
    grid = _reference_grid(4, quick)
    worst = 0.0
    for _ in range(n_random):
        f = random_field(grid, rng, complex_values=False)
        g = random_field(grid, rng, complex_values=False)
        for sign in ('plus', 'minus'):
            Lf, Lg = apply_L(sign, f), apply_L(sign, g)
            scale = l2_norm(Lf) * l2_norm(g) + l2_norm(f) * l2_norm(Lg)
            worst = max(worst, abs(inner(Lf, g) - inner(f, Lg)) / scale)

    return CheckResult('linearized_symmetry', worst < 1e-10, worst, 1e-10)


@add_check('test_profile_certificates')
def check_test_profiles(rng, n_random, quick):
    """Sign and orthogonality certificates plus nodewise compact
    support."""
    grid = _reference_grid(4, quick)
    prof = build_test_profiles(grid)
    outside = (grid.r < prof.rho1) | (grid.r > prof.rho2)
    leak = float(max(np.max(np.abs(prof.Z1().values[outside])),
                     np.max(np.abs(prof.Z2().values[outside]))))
    c = prof.certs
    passed = (c['Z1_LambdaW'] > 0 and abs(c['Z1_Y']) < 1e-8
              and c['Z2_W'] > 0 and leak == 0.0)

    return CheckResult('test_profile_certificates', passed, abs(c['Z1_Y']),
                       1e-8, str(c))


@add_check('modulation_recovery')
def check_modulation_recovery(rng, n_random, quick):
    """Planted e^{i theta} W_lam + eps noise recovered by the fit."""
    grid = _reference_grid(4, quick)
    worst = 0.0
    passed = True
    for _ in range(n_random):
        theta = rng.uniform(0, 2 * np.pi)
        lam = float(np.exp(rng.uniform(np.log(0.3), np.log(3.0))))
        noise = random_field(grid, rng)
        u = bubble(theta, lam, grid) + noise * (1e-3 / energy_norm(noise))
        found = detect_bubbles(u, N_max=1)
        res = fit_decomposition(u, 1, found[0])
        d_theta = abs(np.angle(np.exp(1j * (res.params.theta[0] - theta))))
        d_lam = abs(res.params.lam[0] / lam - 1)
        worst = max(worst, d_lam)
        passed &= (d_theta < 1e-2 and d_lam < 1e-2
                   and res.ortho_max < 1e-8)

    return CheckResult('modulation_recovery', passed, worst, 1e-2)


@add_check('proximity_two_bubbles')
def check_proximity_two_bubbles(rng, n_random, quick):
    """d of an exact two-bubble field against its planted value."""
    grid = _reference_grid(4, quick)
    planted = BubbleParams(list(rng.uniform(0, 2 * np.pi, 2)), [0.01, 1.0])
    u = multi_bubble(planted, grid)
    # the remainder vanishes at the planted parameters
    direct = float(np.sqrt(np.sum(ratio_terms(planted.lam, grid.dimension))))
    pv = proximity_d(u, 2, Regime('static'), n_random=4,
                     seed=int(rng.integers(2**31)))
    value = abs(pv.value / direct - 1)

    return CheckResult('proximity_two_bubbles', value <= 0.05, value, 0.05,
                       'd={}, planted={}'.format(pv.value, direct))


@add_check('fit_phase_gauge')
def check_fit_phase_gauge(rng, n_random, quick):
    """Fitting e^{i alpha} u rotates the fitted phase by alpha."""
    grid = _reference_grid(4, quick)
    noise = random_field(grid, rng)
    u = bubble(0.5, 1.0, grid) + noise * (1e-2 / energy_norm(noise))
    alpha = rng.uniform(0, 2 * np.pi)
    guess = BubbleParams([0.5], [1.0])
    a = fit_decomposition(u, 1, guess)
    b = fit_decomposition(u * np.exp(1j * alpha), 1, guess.rotate(alpha))
    value = (abs(np.angle(np.exp(1j * (b.params.theta[0] - a.params.theta[0]
                                       - alpha))))
             + abs(b.params.lam[0] / a.params.lam[0] - 1))

    return CheckResult('fit_phase_gauge', value < 1e-8, value, 1e-8)


@add_check('localized_energy_balance')
def check_localized_balance(rng, n_random, quick):
    """Five-term balance on a perturbed ground state trajectory."""
    grid = make_grid(4, 1e-3, 1e2, 512)
    u0 = bubble(0.0, 1.0, grid) + RadialField(
        grid, 0.1 * np.exp(-grid.r**2), label='bump')
    cfg = FlowConfig(phase=np.pi / 6, dt=1e-3, t_end=0.05)
    record = evolve(FlowState.initial(u0), cfg, cadence=1)
    worst = 0.0
    for R in (1.0, 10.0):
        report = localized_energy_balance(record,
                                          CutoffSpec('exterior', R=R))
        worst = max(worst, report.relative_residual)

    return CheckResult('localized_energy_balance', worst <= 1e-3, worst,
                       1e-3)


@add_check('radial_sobolev')
def check_radial_sobolev(rng, n_random, quick):
    """|v(R)| <= sqrt(2) R^(-(D-2)/2) ||v||_E(R) on W and random fields."""
    grid = _reference_grid(4, quick)
    fields = [bubble(0.0, 1.0, grid)]
    fields += [random_field(grid, rng) for _ in range(2 * max(n_random, 1))]
    failures = 0
    for v in fields:
        for R in (0.5, 1.0, 2.0):
            lhs, rhs = radial_sobolev_check(v, R)
            failures += int(lhs > rhs * (1 + 1e-6))

    return CheckResult('radial_sobolev', failures == 0, failures, 0)


@add_check('bubble_detection')
def check_bubble_detection(rng, n_random, quick):
    """detect_bubbles locates single bubbles within 2% in scale."""
    grid = _reference_grid(4, quick)
    worst = 0.0
    passed = True
    for theta, lam in ((0.0, 1.0), (2.0, 0.1), (5.0, 10.0)):
        found = detect_bubbles(bubble(theta, lam, grid))
        if len(found) != 1:
            passed = False
            continue
        worst = max(worst, abs(found[0].lam[0] / lam - 1))
        passed &= abs(np.angle(np.exp(1j * (found[0].theta[0] - theta)))
                      ) < 1e-8

    return CheckResult('bubble_detection', passed and worst < 2e-2, worst,
                       2e-2)


def run_checks(seed=0, n_random=50, quick=False, names=None):
    """Run registered checks.

    Parameters
    ----------
    seed : int
        Seed of the random generator shared by the checks, in order.
    n_random : int
        Number of random samples per randomized check. The radial Sobolev
        check draws twice as many fields.
    quick : bool
        Use the smaller grids and parameter sweeps. The full suite runs
        the stationarity sweep on the default grid with dt = 1e-4.
    names : list | None
        Subset of check names, all checks if None.

    Returns
    -------
    list
        CheckResult objects in registration order. A check raising an
        exception is reported as failed.
    """
    names = list(checks) if names is None else list(names)
    unknown = [n for n in names if n not in checks]
    if unknown:
        msg = ('Unknown checks {}, available checks are: {}'
               .format(unknown, list(checks)))
        logger.error(msg)
        raise ConfigurationError(msg)

    rng = np.random.default_rng(seed)
    results = []
    for name in names:
        logger.info('Running check "{}"'.format(name))
        try:
            res = checks[name](rng, int(n_random), bool(quick))
        except Exception as e:
            logger.exception('Check "{}" raised an error'.format(name))
            res = CheckResult(name, False, np.nan, np.nan,
                              '{}: {}'.format(type(e).__name__, e))

        logger.info('Check "{}" {}: value={}, tolerance={}'.format(
            name, 'passed' if res.passed else 'FAILED', res.value,
            res.tolerance))
        results.append(res)

    return results
