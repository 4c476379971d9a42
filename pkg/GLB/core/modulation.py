# -*- coding: utf-8 -*-
"""
Multi-bubble decomposition u = bg + W(theta, lam) + g under the
orthogonality conditions

    <i e^{i theta_j} Z1_{lam_j} | g> = <e^{i theta_j} Z2_{lam_j} | g> = 0,

the proximity functions d, d_K, d_M and delta_R, bubble detection and
modulation tracking along a trajectory.
"""
from dataclasses import dataclass, field
import logging

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from scipy.optimize import least_squares
from scipy.signal import find_peaks

from GLB.core.ground_state import (BubbleParams, bubble_values,
                                   lambda_bubble_values, wrap_phase)
from GLB.core.linearized import default_test_profiles
from GLB.core.radial import RadialField, energy_norm
from GLB.utilities.exceptions import ConfigurationError, FitError
from GLB.utilities.utilities import cutoff, get_thread_count

logger = logging.getLogger(__name__)

# indicators closer than this in log r are merged
MERGE_LOG_DISTANCE = np.log(2.0)


@dataclass(frozen=True)
class Regime:
    """Top scale convention of the proximity functions.

    "static" has no top scale, "global" uses sqrt(t) and "blowup" uses
    sqrt(t_plus - t).
    """

    kind: str = 'static'
    t: float = None
    t_plus: float = None

    KINDS = ('static', 'global', 'blowup')

    def __post_init__(self):
        if self.kind not in self.KINDS:
            msg = 'Regime must be one of {} but received: {}'.format(
                self.KINDS, self.kind)
            logger.error(msg)
            raise ConfigurationError(msg)

        if self.kind == 'global' and not (self.t is not None and self.t > 0):
            msg = 'Global regime needs t > 0 but received: {}'.format(self.t)
            logger.error(msg)
            raise ConfigurationError(msg)

        if self.kind == 'blowup' and not (
                self.t is not None and self.t_plus is not None
                and self.t_plus > self.t >= 0):
            msg = ('Blow-up regime needs t_plus > t >= 0 but received '
                   't={}, t_plus={}'.format(self.t, self.t_plus))
            logger.error(msg)
            raise ConfigurationError(msg)

    @property
    def top_scale(self):
        """lambda_{N+1}."""
        if self.kind == 'global':
            return float(np.sqrt(self.t))
        if self.kind == 'blowup':
            return float(np.sqrt(self.t_plus - self.t))

        return np.inf

    def to_dict(self):
        """JSON-friendly representation."""
        return {'kind': self.kind, 't': self.t, 't_plus': self.t_plus}


def ratio_terms(lam, D, bottom=0.0, top=np.inf):
    """Scale separation terms (lam_j / lam_{j+1})^((D - 2) / 2).

    The chain is bottom < lam_1 < ... < lam_N < top. Terms involving a
    zero bottom or an infinite top vanish.
    """
    scales = np.concatenate(([bottom], np.sort(np.asarray(lam, dtype=float)),
                             [top]))
    a, b = scales[:-1], scales[1:]
    keep = (a > 0) & np.isfinite(b)

    return (a[keep] / b[keep])**(0.5 * (D - 2))


def body_background(u, alpha):
    """Exterior part (1 - chi(r / alpha)) u of a field."""
    if not alpha > 0:
        msg = 'Background cutoff radius must be positive: {}'.format(alpha)
        logger.error(msg)
        raise ConfigurationError(msg)

    values = (1.0 - cutoff(u.r, alpha)) * u.values

    return u.with_values(values, label='bg({})'.format(u.label))


def _indicator_peaks(u, r_lo=0.0, threshold=0.25):
    """Peaks of r^((D - 2) / 2) |u| as (lam, theta, height) triples."""
    D = u.dimension
    r = u.r
    c = np.sqrt(D * (D - 2))
    peak_value = (0.5 * c)**(0.5 * (D - 2))
    indicator = r**(0.5 * (D - 2)) * np.abs(u.values)
    if not np.any(indicator > 0):
        return []

    idx, _ = find_peaks(indicator, height=threshold * peak_value)
    peaks = []
    log_r = np.log(r)
    for i in idx:
        x = log_r[i - 1:i + 2]
        y = indicator[i - 1:i + 2]
        den = (x[0] - x[1]) * (x[0] - x[2]) * (x[1] - x[2])
        a = (x[2] * (y[1] - y[0]) + x[1] * (y[0] - y[2])
             + x[0] * (y[2] - y[1])) / den
        b = (x[2]**2 * (y[0] - y[1]) + x[1]**2 * (y[2] - y[0])
             + x[0]**2 * (y[1] - y[2])) / den
        x_star = -b / (2 * a) if a < 0 else x[1]
        x_star = float(np.clip(x_star, x[0], x[2]))
        r_star = np.exp(x_star)
        if r_star <= r_lo:
            continue
        peaks.append((r_star / c, float(np.angle(u.values[i])),
                      float(indicator[i])))

    merged = []
    for peak in sorted(peaks, key=lambda p: -p[2]):
        if all(abs(np.log(peak[0] / m[0])) > MERGE_LOG_DISTANCE
               for m in merged):
            merged.append(peak)

    return merged


def detect_bubbles(u, N_max=None, threshold=0.25):
    """Bubble candidates from the peaks of the indicator r^((D-2)/2) |u|.

    A single bubble e^{i theta} W_lam has its indicator peak at
    lam sqrt(D (D - 2)). Peaks below threshold times the bubble peak value
    are ignored and peaks closer than a factor 2 are merged keeping the
    larger one.

    Parameters
    ----------
    u : RadialField
        Field to scan.
    N_max : int | None
        Keep at most this many candidates with the largest peaks.
    threshold : float
        Relative peak height threshold.

    Returns
    -------
    list
        Single-bubble BubbleParams sorted by scale.
    """
    peaks = _indicator_peaks(u, threshold=threshold)
    if N_max is not None:
        peaks = peaks[:int(N_max)]

    out = [BubbleParams([theta], [lam]) for lam, theta, _ in peaks]
    out.sort(key=lambda p: p.lam[0])
    logger.debug('Detected {} bubble candidates: {}'.format(len(out), out))

    return out


@dataclass(frozen=True, eq=False)
class DecompositionResult:
    """Converged modulation fit."""

    params: BubbleParams
    g: RadialField
    ortho_residuals: np.ndarray
    g_norm: float
    ratio_sum: float
    converged: bool = True
    iterations: int = 0

    @property
    def d_upper(self):
        """sqrt(||g||_E^2 + ratio_sum), an upper bound for d."""
        return float(np.sqrt(self.g_norm**2 + self.ratio_sum))

    @property
    def ortho_max(self):
        """Largest orthogonality residual in modulus."""
        if len(self.ortho_residuals) == 0:
            return 0.0
        return float(np.max(np.abs(self.ortho_residuals)))

    def to_dict(self):
        """JSON-friendly summary without the remainder field."""
        return {'theta': list(self.params.theta),
                'lambda': list(self.params.lam),
                'ortho_residuals': [float(x) for x in self.ortho_residuals],
                'g_norm': self.g_norm, 'ratio_sum': self.ratio_sum,
                'd_upper': self.d_upper, 'converged': self.converged,
                'iterations': self.iterations}


@dataclass(frozen=True)
class ProximityValue:
    """Best local minimum of a proximity function, an upper bound of the
    infimum."""

    value: float
    argmin_params: BubbleParams
    window: tuple
    top_scale: float
    K: int = 0
    n_starts: int = 0
    upper_bound: bool = True

    def to_dict(self):
        """JSON-friendly representation."""
        return {'value': self.value,
                'theta': list(self.argmin_params.theta),
                'lambda': list(self.argmin_params.lam),
                'window': [float(x) for x in self.window],
                'top_scale': float(self.top_scale), 'K': self.K,
                'n_starts': self.n_starts, 'upper_bound': self.upper_bound}


class OrthogonalityConditions:
    """The 2N orthogonality conditions and their analytic Jacobian in the
    variables (theta_1..theta_N, log lam_1..log lam_N).

    Conditions are divided by lam_j^2 so that they do not depend on the
    scale of an exactly rescaled configuration.
    """

    def __init__(self, v, n, profiles):
        """
        Parameters
        ----------
        v : RadialField
            Field to decompose, background already removed.
        n : int
            Number of bubbles.
        profiles : GLB.core.linearized.TestProfiles
            Test profiles Z1 and Z2.
        """
        self._v = v
        self._n = n
        self._profiles = profiles
        self._grid = v.grid
        self._w = v.grid.quad_weights

    def _ip(self, a, b):
        return float(np.real(np.sum(self._w * np.conj(a) * b)))

    def remainder(self, x):
        """g = v - W(theta, lam) for an optimizer vector."""
        D = self._grid.dimension
        r = self._grid.r
        theta, lam = x[:self._n], np.exp(x[self._n:])
        g = self._v.values.copy()
        for j in range(self._n):
            g = g - bubble_values(D, theta[j], lam[j], r)

        return g

    def residuals(self, x):
        """Condition values F(x)."""
        return self.evaluate(x, jacobian=False)[0]

    def evaluate(self, x, jacobian=True):
        """Condition values and Jacobian at an optimizer vector."""
        n = self._n
        D = self._grid.dimension
        r = self._grid.r
        theta, lam = x[:n], np.exp(x[n:])
        g = self.remainder(x)
        prof = self._profiles

        A1, A2, dA1, dA2 = [], [], [], []
        for j in range(n):
            phase = np.exp(1j * theta[j])
            z1 = prof.z1_values(r, lam[j]) / lam[j]**2
            z2 = prof.z2_values(r, lam[j]) / lam[j]**2
            A1.append(1j * phase * z1)
            A2.append(phase * z2)
            if jacobian:
                lz1 = prof.lambda_z_values(1, r, lam[j]) / lam[j]**2
                lz2 = prof.lambda_z_values(2, r, lam[j]) / lam[j]**2
                dA1.append(1j * phase * (-2 * z1 - lz1))
                dA2.append(phase * (-2 * z2 - lz2))

        F = np.array([self._ip(a, g) for a in A1]
                     + [self._ip(a, g) for a in A2])
        if not jacobian:
            return F, None

        dg_theta = [-1j * bubble_values(D, theta[k], lam[k], r)
                    for k in range(n)]
        dg_log = [lambda_bubble_values(D, theta[k], lam[k], r)
                  for k in range(n)]
        J = np.zeros((2 * n, 2 * n))
        for row, (A, dA) in enumerate(((A1, dA1), (A2, dA2))):
            for j in range(n):
                for k in range(n):
                    J[row * n + j, k] = self._ip(A[j], dg_theta[k])
                    J[row * n + j, n + k] = self._ip(A[j], dg_log[k])
                J[row * n + j, j] += self._ip(1j * A[j], g)
                J[row * n + j, n + j] += self._ip(dA[j], g)

        return F, J


class EnergyObjective:
    """Residual vector whose squared sum is
    ||v - W(theta, lam)||_E(window)^2 + sum of scale ratio terms.
    """

    def __init__(self, v, n, r1=0.0, r2=None, bottom=0.0, top=np.inf):
        grid = v.grid
        D = grid.dimension
        self._v = v
        self._n = n
        self._grid = grid
        self._bottom = bottom
        self._top = top
        _, _, boundary = grid.check_window(r1, r2)
        self._sqrt_cell = np.sqrt(grid.cell_weights(r1, r2))
        self._sqrt_hardy = np.sqrt(grid.box_weights(r1, r2, power=D - 3))
        self._sqrt_beta = np.sqrt(grid.boundary_coeff) if boundary else 0.0
        self.window = (float(r1), np.inf if r2 is None else float(r2))

    def field_residual(self, values):
        """Energy-norm residual components of nodal values."""
        grad = np.diff(values) / self._grid.spacing
        parts = [self._sqrt_cell * grad.real, self._sqrt_cell * grad.imag,
                 self._sqrt_hardy * values.real,
                 self._sqrt_hardy * values.imag,
                 self._sqrt_beta * np.array([values[-1].real,
                                             values[-1].imag])]

        return np.concatenate(parts)

    def __call__(self, x):
        n = self._n
        D = self._grid.dimension
        r = self._grid.r
        theta, lam = x[:n], np.exp(x[n:])
        values = self._v.values.copy()
        for j in range(n):
            values = values - bubble_values(D, theta[j], lam[j], r)

        ratios = ratio_terms(lam, D, self._bottom, self._top)

        return np.concatenate((self.field_residual(values), np.sqrt(ratios)))

    def value(self, x):
        """Proximity value sqrt(sum of squared residuals)."""
        return float(np.sqrt(np.sum(self(x)**2)))


def _scale_bounds(grid, n):
    lb = np.concatenate((np.full(n, -np.inf),
                         np.full(n, np.log(grid.r_min))))
    ub = np.concatenate((np.full(n, np.inf), np.full(n, np.log(grid.r_max))))

    return lb, ub


def _clip_start(x, lb, ub):
    span = np.where(np.isfinite(ub - lb), ub - lb, 1.0)
    return np.clip(x, lb + 1e-9 * span, ub - 1e-9 * span)


def _minimize(objective, x0, lb, ub):
    """Local least squares minimization from one start."""
    x0 = _clip_start(np.asarray(x0, dtype=float), lb, ub)
    try:
        res = least_squares(objective, x0, bounds=(lb, ub), method='trf',
                            xtol=1e-12, ftol=1e-12, gtol=1e-12,
                            max_nfev=100 * (len(x0) + 1))
        x = res.x
    except (ValueError, np.linalg.LinAlgError) as e:
        logger.warning('Least squares start {} failed: {}'.format(x0, e))
        x = x0

    return objective.value(x), x


def fit_decomposition(u, N, guess, bg=None, profiles=None, regime=None,
                      ortho_tol=1e-8, max_iter=50, prefit=True):
    """Decompose u = bg + W(theta, lam) + g with g orthogonal to the
    rotated, rescaled test profiles.

    Parameters
    ----------
    u : RadialField
        Field to decompose.
    N : int
        Number of bubbles, >= 1.
    guess : BubbleParams
        Initial configuration with N bubbles.
    bg : RadialField | None
        Background removed before fitting.
    profiles : TestProfiles | None
        Test profiles, defaults to default_test_profiles(D).
    regime : Regime | None
        Top scale convention of the reported ratio sum, static if None.
    ortho_tol : float
        Convergence threshold of the largest condition.
    max_iter : int
        Newton iteration budget.
    prefit : bool
        Run a least squares energy fit from the guess before Newton when
        the guess does not already satisfy the conditions.

    Returns
    -------
    DecompositionResult
    """
    grid = u.grid
    D = grid.dimension
    if int(N) != N or N < 1 or guess.n != N:
        msg = ('Decomposition needs N >= 1 and a guess with N bubbles but '
               'received N={} and {}'.format(N, guess))
        logger.error(msg)
        raise ConfigurationError(msg)

    v = u if bg is None else u - bg
    profiles = default_test_profiles(D) if profiles is None else profiles
    conditions = OrthogonalityConditions(v, N, profiles)
    lb, ub = _scale_bounds(grid, N)
    x = guess.to_vector()

    if prefit and np.max(np.abs(conditions.residuals(x))) >= ortho_tol:
        _, x = _minimize(EnergyObjective(v, N), x, lb, ub)

    converged = False
    F = conditions.residuals(x)
    for it in range(max_iter + 1):
        F, J = conditions.evaluate(x)
        if np.max(np.abs(F)) < ortho_tol:
            converged = True
            break

        if it == max_iter:
            break

        if not np.isfinite(J).all() or np.linalg.cond(J) > 1e12:
            msg = ('Singular modulation Jacobian at {} (iteration {})'
                   .format(BubbleParams.from_vector(x), it))
            logger.error(msg)
            raise FitError(msg, params=BubbleParams.from_vector(x),
                           residuals=F)

        dx = np.linalg.solve(J, -F)
        norm0 = np.linalg.norm(F)
        step = 1.0
        while step >= 2.0**-12:
            x_new = x + step * dx
            if (np.all(x_new[N:] > lb[N:]) and np.all(x_new[N:] < ub[N:])
                    and np.linalg.norm(conditions.residuals(x_new)) < norm0):
                break
            step *= 0.5
        else:
            msg = ('Damped Newton stalled at {} with residuals {}'
                   .format(BubbleParams.from_vector(x), F))
            logger.error(msg)
            raise FitError(msg, params=BubbleParams.from_vector(x),
                           residuals=F)

        x = x_new

    params = BubbleParams.from_vector(x)
    if not converged:
        msg = ('Modulation fit did not converge in {} iterations, residuals '
               '{}'.format(max_iter, F))
        logger.error(msg)
        raise FitError(msg, params=params, residuals=F)

    g = v.with_values(conditions.remainder(x), label='g')
    top = np.inf if regime is None else regime.top_scale
    ratio_sum = float(np.sum(ratio_terms(params.lam, D, top=top)))
    order = np.argsort(np.exp(x[N:]), kind='stable')
    F = np.concatenate((F[:N][order], F[N:][order]))

    result = DecompositionResult(params, g, F, energy_norm(g), ratio_sum,
                                 converged=True, iterations=it)
    logger.debug('Decomposition converged in {} iterations: {}'.format(
        it, result.to_dict()))

    return result


def _seed_vectors(v, n, r_lo, top, n_random, rng, extra=()):
    """Deterministic list of start vectors for a multi-start fit."""
    grid = v.grid
    peaks = _indicator_peaks(v, r_lo=r_lo)[:n]
    lam = [p[0] for p in peaks]
    theta = [p[1] for p in peaks]
    if len(lam) < n:
        lo = max(r_lo, 10 * grid.r_min)
        hi = min(top, grid.r_max / 10)
        hi = max(hi, lo * 10)
        fill = np.geomspace(lo, hi, n - len(lam) + 2)[1:-1]
        lam.extend(fill)
        theta.extend([0.0] * len(fill))

    base = BubbleParams(theta, lam).to_vector()
    seeds = [base]
    seeds.extend(p.to_vector() for p in extra)
    for _ in range(n_random):
        x = base.copy()
        x[:n] += rng.uniform(-0.25 * np.pi, 0.25 * np.pi, n)
        x[n:] += rng.normal(0.0, 0.5, n)
        seeds.append(x)

    return seeds


def _proximity(u, n, r1=0.0, r2=None, bottom=0.0, top=np.inf, bg=None,
               K=0, n_random=6, seed=0, extra=()):
    """Best-of-multi-start minimization of an EnergyObjective."""
    grid = u.grid
    v = u if bg is None else u - bg
    objective = EnergyObjective(v, n, r1, r2, bottom, top)

    if n == 0:
        value = objective.value(np.zeros(0))
        return ProximityValue(value, BubbleParams(), objective.window, top,
                              K=K, n_starts=0)

    rng = np.random.default_rng(seed)
    seeds = _seed_vectors(v, n, r1, top, n_random, rng, extra=extra)
    lb, ub = _scale_bounds(grid, n)
    n_jobs = min(get_thread_count(), len(seeds))
    runs = Parallel(n_jobs=n_jobs, prefer='threads')(
        delayed(_minimize)(objective, x0, lb, ub) for x0 in seeds)

    best_value, best_x = min(
        runs, key=lambda run: (run[0],
                               tuple(BubbleParams.from_vector(run[1])
                                     .to_vector())))
    params = BubbleParams.from_vector(best_x)
    logger.debug('Proximity with {} bubbles over {} starts: {:.6e} at {}'
                 .format(n, len(seeds), best_value, params))

    return ProximityValue(best_value, params, objective.window, top, K=K,
                          n_starts=len(seeds))


def proximity_d(u, N, regime, bg=None, n_random=6, seed=0):
    """Global proximity d(u) with N bubbles and the regime's top scale.

    Starts come from detect_bubbles, a modulation fit when it converges
    and random perturbations of the detected configuration.

    Returns
    -------
    ProximityValue
    """
    if int(N) != N or N < 0:
        msg = 'Number of bubbles must be >= 0 but received: {}'.format(N)
        logger.error(msg)
        raise ConfigurationError(msg)

    extra = []
    if N >= 1:
        v = u if bg is None else u - bg
        found = detect_bubbles(v, N_max=N)
        if len(found) == N:
            guess = BubbleParams([p.theta[0] for p in found],
                                 [p.lam[0] for p in found])
            try:
                extra.append(fit_decomposition(v, N, guess).params)
            except FitError as e:
                logger.debug('Modulation seed skipped: {}'.format(e))

    return _proximity(u, int(N), bg=bg, top=regime.top_scale, K=0,
                      n_random=n_random, seed=seed, extra=extra)


def proximity_dK(u, N, K, rho, regime, bg=None, n_random=6, seed=0):
    """Exterior proximity d_K(u; rho) fitting bubbles K+1..N on (rho, inf)
    with lam_K := rho.

    Returns
    -------
    ProximityValue
    """
    if not (int(K) == K and 0 <= K <= N):
        msg = 'K must satisfy 0 <= K <= N but received K={}, N={}'.format(
            K, N)
        logger.error(msg)
        raise ConfigurationError(msg)

    if not rho > 0:
        msg = 'Exterior radius must be positive but received: {}'.format(rho)
        logger.error(msg)
        raise ConfigurationError(msg)

    return _proximity(u, int(N - K), r1=rho, bottom=rho,
                      top=regime.top_scale, bg=bg, K=int(K),
                      n_random=n_random, seed=seed)


def proximity_dM(v, M, n_random=6, seed=0):
    """Static proximity d_M(v) with ratio terms j = 1..M-1 only."""
    return _proximity(v, int(M), top=np.inf, n_random=n_random, seed=seed)


def delta_R(u, R, M_max, bg=None, n_random=6, seed=0):
    """Localized distance on (0, R] minimized over M = 0..M_max bubbles
    with lam_{M+1} := R.

    Returns
    -------
    value : float
    best_M : int
        Smallest M attaining the minimum.
    params : BubbleParams
    """
    if not R > 0:
        msg = 'Window radius must be positive but received: {}'.format(R)
        logger.error(msg)
        raise ConfigurationError(msg)

    best = None
    for M in range(int(M_max) + 1):
        pv = _proximity(u, M, r1=0.0, r2=R, top=R, bg=bg,
                        n_random=n_random, seed=seed)
        logger.debug('delta_R with M={}: {:.6e}'.format(M, pv.value))
        if best is None or pv.value < best[0]:
            best = (pv.value, M, pv.argmin_params)

    return best


def bound_sandwich(result, u, bg=None, n_random=6, seed=0):
    """Compare ||g||_E^2 + ratio_sum of a fit with d_N(u - bg)^2.

    Returns
    -------
    dict
        d, upper (= ||g||^2 + ratio_sum) and the measured constant
        C = upper / d^2.
    """
    v = u if bg is None else u - bg
    d = proximity_dM(v, result.params.n, n_random=n_random,
                     seed=seed).value
    upper = result.g_norm**2 + result.ratio_sum
    C = upper / d**2 if d > 0 else np.nan
    logger.info('Bound sandwich: d^2={:.6e}, ||g||^2 + ratios={:.6e}, '
                'C={:.4g}'.format(d**2, upper, C))

    return {'d': float(d), 'upper': float(upper), 'C': float(C)}


@dataclass
class ModulationSeries:
    """Decomposition results along a trajectory.

    failure_index is the snapshot index at which a fit failed, None when
    every snapshot converged.
    """

    n_bubbles: int
    times: list = field(default_factory=list)
    results: list = field(default_factory=list)
    failure_index: int = None

    def __len__(self):
        return len(self.results)

    def to_frame(self):
        """Modulation table with columns t, d, g_norm, theta_j, lambda_j,
        ortho_max_resid and converged."""
        n = self.n_bubbles
        rows = []
        for t, res in zip(self.times, self.results):
            row = {'t': t, 'd': res.d_upper, 'g_norm': res.g_norm}
            for j in range(n):
                row['theta_{}'.format(j + 1)] = res.params.theta[j]
            for j in range(n):
                row['lambda_{}'.format(j + 1)] = res.params.lam[j]
            row['ortho_max_resid'] = res.ortho_max
            row['converged'] = res.converged
            rows.append(row)

        columns = (['t', 'd', 'g_norm']
                   + ['theta_{}'.format(j + 1) for j in range(n)]
                   + ['lambda_{}'.format(j + 1) for j in range(n)]
                   + ['ortho_max_resid', 'converged'])

        return pd.DataFrame(rows, columns=columns)

    def ratio_frame(self):
        """Empirical ratios |lam_j'| lam_j / d with finite difference
        derivatives."""
        df = self.to_frame()
        out = pd.DataFrame({'t': df['t']})
        if len(df) < 2:
            for j in range(self.n_bubbles):
                out['ratio_{}'.format(j + 1)] = np.nan
            return out

        t = df['t'].values
        d = df['d'].values
        for j in range(self.n_bubbles):
            lam = df['lambda_{}'.format(j + 1)].values
            dlam = np.gradient(lam, t)
            with np.errstate(divide='ignore', invalid='ignore'):
                out['ratio_{}'.format(j + 1)] = np.abs(dlam) * lam / d

        return out


def snapshot_regime(kind, t, t_plus=None):
    """Regime of a trajectory snapshot at time t.

    The global top scale sqrt(t) is undefined at t = 0, where the static
    convention is used instead.
    """
    if kind == 'global' and not t > 0:
        return Regime('static')
    if kind == 'blowup':
        return Regime('blowup', t=t, t_plus=t_plus)
    if kind == 'global':
        return Regime('global', t=t)

    return Regime(kind)


def track_modulation(traj, N, guess=None, profiles=None, background_alpha=None,
                     ortho_tol=1e-8, max_iter=50, regime='static',
                     t_plus=None):
    """Fit every trajectory snapshot, seeding each fit from the previous.

    Parameters
    ----------
    traj : TrajectoryRecord
        Trajectory with snapshots in memory.
    N : int
        Number of bubbles.
    guess : BubbleParams | None
        Seed of the first fit, detect_bubbles is used if None.
    profiles : TestProfiles | None
        Test profiles.
    background_alpha : float | None
        Remove body_background(u, alpha) from each snapshot before fitting.
    ortho_tol, max_iter
        Passed to fit_decomposition.
    regime : str
        Regime kind. The top scale of each fit follows the snapshot time,
        sqrt(t) for "global" and sqrt(t_plus - t) for "blowup".
    t_plus : float | None
        Blow-up time of the "blowup" regime.

    Returns
    -------
    ModulationSeries
        Truncated at the first failed fit.
    """
    if regime not in Regime.KINDS:
        msg = 'Regime must be one of {} but received: {}'.format(
            Regime.KINDS, regime)
        logger.error(msg)
        raise ConfigurationError(msg)

    series = ModulationSeries(int(N))
    if not traj.snapshots:
        logger.warning('Trajectory has no snapshots to track.')
        return series

    D = traj.grid.dimension
    profiles = default_test_profiles(D) if profiles is None else profiles
    current = guess
    for k, (t, u) in enumerate(traj.snapshots):
        bg = None
        if background_alpha is not None:
            bg = body_background(u, background_alpha)

        if current is None:
            found = detect_bubbles(u if bg is None else u - bg, N_max=N)
            if len(found) < N:
                logger.warning('Detected {} of {} bubbles at t={}'.format(
                    len(found), N, t))
                series.failure_index = k
                break
            current = BubbleParams([p.theta[0] for p in found],
                                   [p.lam[0] for p in found])

        try:
            res = fit_decomposition(u, N, current, bg=bg, profiles=profiles,
                                    regime=snapshot_regime(regime, t, t_plus),
                                    ortho_tol=ortho_tol, max_iter=max_iter)
        except FitError as e:
            logger.warning('Modulation lost at snapshot {} (t={}): {}'
                           .format(k, t, e))
            series.failure_index = k
            break

        series.times.append(t)
        series.results.append(res)
        current = res.params

    traj.modulation = series

    return series


def unwrap_phases(series):
    """Continuous phase histories from the wrapped fitted phases."""
    df = series.to_frame()
    for j in range(series.n_bubbles):
        col = 'theta_{}'.format(j + 1)
        df[col] = np.unwrap(wrap_phase(df[col].values))

    return df
