# -*- coding: utf-8 -*-
"""
Time evolution of the radial energy-critical Ginzburg-Landau flow
du/dt = z (Laplacian u + |u|^(4/(D-2)) u) with implicit-explicit
multistep schemes.

Every scheme advances

    u^{n+1} - u^n = dt z (b0 A u^{n+1} + b1 A u^n)
                    + dt z (c1 f(u^n) + c2 f(u^{n-1}))

where A is the discrete radial Laplacian. The implicit system is
tridiagonal and solved with a banded LU solve.
"""
from collections import OrderedDict
from dataclasses import dataclass, field, asdict, replace
import logging

import numpy as np
import pandas as pd
from scipy.linalg import solve_banded

from GLB.core.energy import nonlinearity
from GLB.core.radial import RadialField, energy_norm
from GLB.utilities.exceptions import BlowupError, ConfigurationError

logger = logging.getLogger(__name__)


schemes = OrderedDict()


def add_scheme(scheme):
    """Register a time stepping scheme under its name attribute."""
    schemes[scheme.name] = scheme
    return scheme


class MultistepIMEX:
    """Base class of the two-level implicit-explicit schemes.

    Subclasses implement compute_coefficients(dt, dt_prev, iteration)
    returning (b0, b1, c1, c2).
    """

    name = None
    order = None

    @classmethod
    def compute_coefficients(cls, dt, dt_prev, iteration):
        raise NotImplementedError


@add_scheme
class ImexBeFe(MultistepIMEX):
    """Backward Euler on the Laplacian, forward Euler on the nonlinearity.
    """

    name = 'imex_be_fe'
    order = 1

    @classmethod
    def compute_coefficients(cls, dt, dt_prev, iteration):
        return 1.0, 0.0, 1.0, 0.0


@add_scheme
class ImexCnAb2(MultistepIMEX):
    """Crank-Nicolson on the Laplacian, variable step Adams-Bashforth 2 on
    the nonlinearity. The first iteration falls back to imex_be_fe.
    """

    name = 'imex_cn_ab2'
    order = 2

    @classmethod
    def compute_coefficients(cls, dt, dt_prev, iteration):
        if iteration < 1 or dt_prev is None:
            return ImexBeFe.compute_coefficients(dt, dt_prev, iteration)

        w1 = dt / dt_prev

        return 0.5, 0.5, 1.0 + 0.5 * w1, -0.5 * w1


@dataclass(frozen=True)
class FlowConfig:
    """Flow parameters.

    z = exp(i phase) is stored through its phase angle in (-pi/2, pi/2),
    so Re z > 0 and |z| = 1 hold by construction.
    """

    phase: float = 0.0
    dt: float = 1e-3
    t_end: float = 1.0
    scheme: str = 'imex_cn_ab2'
    adapt: bool = False
    dt_safety: float = 0.1
    linf_ceiling: float = 1e8
    nonlinear: bool = True

    def __post_init__(self):
        if not abs(self.phase) < 0.5 * np.pi:
            msg = ('Flow phase arg z must lie in (-pi/2, pi/2) but received: '
                   '{}'.format(self.phase))
            logger.error(msg)
            raise ConfigurationError(msg)

        if not self.dt > 0:
            msg = 'Time step must be positive but received: {}'.format(self.dt)
            logger.error(msg)
            raise ConfigurationError(msg)

        if not self.t_end >= 0:
            msg = 'End time must be >= 0 but received: {}'.format(self.t_end)
            logger.error(msg)
            raise ConfigurationError(msg)

        if self.scheme not in schemes:
            msg = ('Time stepping scheme must be one of {} but received: {}'
                   .format(list(schemes), self.scheme))
            logger.error(msg)
            raise ConfigurationError(msg)

        if not 0 < self.dt_safety <= 1:
            msg = ('dt_safety must lie in (0, 1] but received: {}'
                   .format(self.dt_safety))
            logger.error(msg)
            raise ConfigurationError(msg)

        if not self.linf_ceiling > 0:
            msg = ('linf_ceiling must be positive but received: {}'
                   .format(self.linf_ceiling))
            logger.error(msg)
            raise ConfigurationError(msg)

    @property
    def z(self):
        """Complex flow parameter."""
        return complex(np.exp(1j * self.phase))

    def to_dict(self):
        """JSON-friendly representation."""
        return asdict(self)


@dataclass(frozen=True, eq=False)
class FlowState:
    """State of the flow after step_count steps.

    f_prev and dt_prev hold the explicit history of the multistep
    scheme, dtu_l2 is the L2 norm of the last difference quotient.
    """

    t: float
    u: RadialField
    step_count: int = 0
    dissipation_accum: float = 0.0
    f_prev: np.ndarray = field(default=None, repr=False)
    dt_prev: float = None
    dtu_l2: float = 0.0

    @classmethod
    def initial(cls, u, t=0.0):
        """Fresh state with empty scheme history."""
        return cls(t=float(t), u=u)


def f_nl(u):
    """Pointwise nonlinearity |u|^(4/(D-2)) u."""
    return u.with_values(nonlinearity(u.values, u.dimension),
                         label='f({})'.format(u.label))


def f_prime(u, g):
    """Real derivative of the nonlinearity at u in direction g.

    |u|^q (g + q u Re(g / u)) with q = 4 / (D - 2), zero where u = 0.
    """
    q = 4 / (u.dimension - 2)
    uv = u.values
    gv = g.values
    mod = np.abs(uv)
    nz = mod > 0
    proj = np.zeros_like(uv)
    proj[nz] = uv[nz] * np.real(gv[nz] / uv[nz])
    values = mod**q * (gv + q * proj)

    return u.with_values(values, label="f'({})".format(u.label))


def tension(u):
    """Tension field Laplacian u + f(u)."""
    values = u.grid.apply_laplacian(u.values) + nonlinearity(u.values,
                                                              u.dimension)
    return u.with_values(values, label='T({})'.format(u.label))


class ImexStepper:
    """Advance FlowStates of one grid with one FlowConfig.

    Banded implicit matrices are cached per (dt, b0), fixed step runs
    build the matrix once.
    """

    def __init__(self, grid, cfg):
        """
        Parameters
        ----------
        grid : RadialGrid
            Grid of every advanced state.
        cfg : FlowConfig
            Flow parameters.
        """
        self._grid = grid
        self._cfg = cfg
        self._scheme = schemes[cfg.scheme]
        self._z = cfg.z
        self._bands = grid.laplacian_bands()
        self._cache = {}

    def __repr__(self):
        return 'ImexStepper({}, z={:.6g}, {})'.format(self._scheme.name,
                                                      self._z, self._grid)

    @property
    def scheme(self):
        """Registered scheme class."""
        return self._scheme

    def _banded(self, dt, b0):
        key = (dt, b0)
        if key not in self._cache:
            lower, diag, upper = self._bands
            a = -dt * self._z * b0
            ab = np.zeros((3, self._grid.n_nodes), dtype=complex)
            ab[0, 1:] = a * upper
            ab[1] = 1.0 + a * diag
            ab[2, :-1] = a * lower
            if len(self._cache) > 64:
                self._cache.clear()
            self._cache[key] = ab

        return self._cache[key]

    def step(self, state, dt=None):
        """Advance a state by one time step.

        Parameters
        ----------
        state : FlowState
            Current state with finite values.
        dt : float | None
            Step size, defaults to cfg.dt.

        Returns
        -------
        FlowState
        """
        cfg = self._cfg
        dt = cfg.dt if dt is None else float(dt)
        grid = self._grid
        u = state.u.values
        D = grid.dimension

        iteration = state.step_count if state.f_prev is not None else 0
        b0, b1, c1, c2 = self._scheme.compute_coefficients(
            dt, state.dt_prev, iteration)

        f = nonlinearity(u, D) if cfg.nonlinear else np.zeros_like(u)
        explicit = c1 * f
        if c2 != 0:
            explicit = explicit + c2 * state.f_prev

        rhs = u + dt * self._z * explicit
        if b1 != 0:
            rhs = rhs + dt * self._z * b1 * grid.apply_laplacian(u)

        with np.errstate(over='ignore', invalid='ignore'):
            u_new = solve_banded((1, 1), self._banded(dt, b0), rhs,
                                 check_finite=False)

        if not np.isfinite(u_new).all():
            msg = ('Non-finite values at t={:.6e} after {} steps'
                   .format(state.t + dt, state.step_count + 1))
            logger.warning(msg)
            raise BlowupError(msg, state=state, reason='nonfinite')

        delta = u_new - u
        delta_sq = float(np.sum(grid.quad_weights * np.abs(delta)**2))
        new = FlowState(t=state.t + dt,
                        u=state.u.with_values(u_new, label='u'),
                        step_count=state.step_count + 1,
                        dissipation_accum=state.dissipation_accum
                        + delta_sq / dt,
                        f_prev=f, dt_prev=dt,
                        dtu_l2=float(np.sqrt(delta_sq)) / dt)

        linf = float(np.max(np.abs(u_new)))
        if linf > cfg.linf_ceiling:
            msg = ('Sup norm {:.3e} exceeded the ceiling {:.3e} at t={:.6e}'
                   .format(linf, cfg.linf_ceiling, new.t))
            logger.warning(msg)
            raise BlowupError(msg, state=new, reason='linf_ceiling')

        return new


def step(state, cfg):
    """Advance a state by cfg.dt."""
    return ImexStepper(state.u.grid, cfg).step(state)


def min_scale(u):
    """Smallest concentration scale present in a field.

    The smaller of the sup norm scale ||u||_inf^(-2/(D-2)) and the
    smallest scale found by detect_bubbles. An indicator maximum at the
    first node means the core sits below the grid and gives a scale of
    r_min / sqrt(D (D - 2)).
    """
    from GLB.core.modulation import detect_bubbles

    modulus = np.abs(u.values)
    linf = float(np.max(modulus))
    if linf == 0:
        return np.inf

    D = u.dimension
    scale = linf**(-2 / (D - 2))
    found = detect_bubbles(u)
    if found:
        scale = min(scale, float(found[0].lam[0]))

    indicator = u.r**(0.5 * (D - 2)) * modulus
    if np.argmax(indicator) == 0:
        scale = min(scale, float(u.r[0] / np.sqrt(D * (D - 2))))

    return scale


def evolve(state0, cfg, observers=(), cadence=1, record=None,
           record_initial=True):
    """Evolve a state until cfg.t_end or a blow-up signal.

    Parameters
    ----------
    state0 : FlowState
        Initial state.
    cfg : FlowConfig
        Flow parameters.
    observers : iterable
        Callables obs(state, record) invoked at every tick.
    cadence : int
        Tick every cadence steps, plus a final tick at t_end.
    record : TrajectoryRecord | None
        Record to extend, a new one is created if None.
    record_initial : bool
        Tick the initial state.

    Returns
    -------
    TrajectoryRecord
    """
    from GLB.handlers.trajectory import TrajectoryRecord

    if int(cadence) != cadence or cadence < 1:
        msg = 'Observer cadence must be a positive integer: {}'.format(cadence)
        logger.error(msg)
        raise ConfigurationError(msg)

    grid = state0.u.grid
    if record is None:
        record = TrajectoryRecord(grid, phase=cfg.phase,
                                  nonlinear=cfg.nonlinear)

    def tick(s):
        record.append(s)
        for obs in observers:
            obs(s, record)

    if record_initial:
        tick(state0)

    stepper = ImexStepper(grid, cfg)
    floor = 4 * grid.r_min
    state = state0
    ticked = True
    logger.info('Evolving from t={} to t={} with {}'.format(
        state0.t, cfg.t_end, stepper))

    scale = min_scale(state0.u) if cfg.adapt else np.inf
    try:
        while True:
            remaining = cfg.t_end - state.t
            if remaining <= 1e-9 * cfg.dt:
                break

            dt = cfg.dt
            if cfg.adapt:
                dt = min(cfg.dt, cfg.dt_safety * scale**2)

            dt_step = dt if remaining >= dt * (1 - 1e-9) else remaining
            state = stepper.step(state, dt_step)
            ticked = False

            if cfg.adapt or cfg.nonlinear:
                scale = min_scale(state.u)

            if cfg.nonlinear and scale < floor:
                msg = ('Smallest scale {:.3e} fell below 4 r_min = {:.3e} '
                       'at t={:.6e}'.format(scale, floor, state.t))
                logger.warning(msg)
                raise BlowupError(msg, state=state, reason='scale_floor')

            if state.step_count % cadence == 0:
                tick(state)
                ticked = True
                logger.debug('t={:.6e}, step {}'.format(state.t,
                                                        state.step_count))

    except BlowupError as err:
        last = record.time_span[1]
        if err.state is not None and (last is None or err.state.t > last):
            tick(err.state)
        err.record = record
        raise

    if not ticked:
        tick(state)

    logger.info('Finished at t={} after {} steps'.format(state.t,
                                                         state.step_count))
    record.final_state = state

    return record


def smoothing_monitor(record):
    """Smoothing monitor t^((D-2)/4) ||u(t)||_inf over the record.

    Returns
    -------
    series : pd.DataFrame
        Columns t and monitor.
    sup : float
        Supremum of the monitor over ticks in (0, 1].
    """
    df = record.to_frame()
    D = record.grid.dimension
    series = pd.DataFrame({'t': df['t'],
                           'monitor': df['t']**((D - 2) / 4) * df['linf']})
    mask = (series['t'] > 0) & (series['t'] <= 1)
    sup = float(series.loc[mask, 'monitor'].max()) if mask.any() else 0.0

    return series, sup


def continuous_dependence(u0, v0, cfg, cadence=1):
    """Distance between two evolutions started from u0 and v0.

    Both runs use fixed steps so that their ticks coincide.

    Returns
    -------
    dict
        sup_t t^((D-2)/4) ||u(t) - v(t)||_inf and sup_t ||u(t) - v(t)||_E
        over the common ticks, plus the initial energy distance.
    """
    cfg = replace(cfg, adapt=False)
    out = {}
    records = []
    for w0 in (u0, v0):
        rec = evolve(FlowState.initial(w0), cfg, cadence=cadence)
        records.append(rec)

    D = u0.dimension
    weighted = []
    energy_gap = []
    for (t, u), (s, v) in zip(records[0].snapshots, records[1].snapshots):
        diff = u - v
        weighted.append(t**((D - 2) / 4) * float(np.max(np.abs(diff.values))))
        energy_gap.append(energy_norm(diff))

    out['initial_energy_distance'] = energy_norm(u0 - v0)
    out['sup_weighted_linf'] = float(max(weighted))
    out['sup_energy'] = float(max(energy_gap))
    out['n_ticks'] = len(weighted)
    logger.debug('Continuous dependence: {}'.format(out))

    return out

