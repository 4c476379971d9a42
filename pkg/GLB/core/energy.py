# -*- coding: utf-8 -*-
"""
Energy functionals, the localized energy balance and the functional
inequalities used as runtime diagnostics.
"""
from dataclasses import dataclass, field, asdict
import logging

import numpy as np
from scipy.integrate import trapezoid
from scipy.interpolate import PchipInterpolator

from GLB.core.radial import (ScalarField, cell_gradient, d_r, kinetic_form,
                             laplacian, norm_E)
from GLB.utilities.exceptions import ConfigurationError, DiagnosticError
from GLB.utilities.utilities import cutoff, cutoff_derivative

logger = logging.getLogger(__name__)


def critical_sobolev_exponent(D):
    """2* = 2 D / (D - 2)."""
    return 2 * D / (D - 2)


def nonlinearity(values, D):
    """Pointwise |u|^(4 / (D - 2)) u of nodal values."""
    return np.abs(values)**(4 / (D - 2)) * values


@dataclass(frozen=True)
class EnergyReport:
    """Kinetic, potential and total energy of a field on a window."""

    kinetic: float
    potential: float
    total: float
    window: tuple

    def to_dict(self):
        """JSON-friendly representation."""
        out = asdict(self)
        out['window'] = [float(x) for x in self.window]
        return out


def energy(u, r1=0.0, r2=None):
    """Nonlinear energy 1/2 int |d_r u|^2 - (D - 2)/(2 D) int |u|^{2*}.

    Parameters
    ----------
    u : RadialField
        Field to evaluate.
    r1 : float
        Window start.
    r2 : float | None
        Window end, None for infinity.

    Returns
    -------
    EnergyReport
    """
    grid = u.grid
    D = grid.dimension
    kinetic = 0.5 * kinetic_form(u, r1, r2)
    w = grid.box_weights(r1, r2)
    p = critical_sobolev_exponent(D)
    potential = float(np.sum(w * np.abs(u.values)**p) / p)
    window = (float(r1), np.inf if r2 is None else float(r2))

    return EnergyReport(kinetic, potential, kinetic - potential, window)


def energy_density(u):
    """Energy density e(u) = |d_r u|^2 / 2 - |u|^{2*} / 2*."""
    D = u.dimension
    two_star = critical_sobolev_exponent(D)
    values = (0.5 * np.abs(d_r(u).values)**2
              - np.abs(u.values)**two_star / two_star)

    return ScalarField(u.grid, values, label='e({})'.format(u.label))


def modified_density(u):
    """Modified density |d_r u|^2 + |u|^2 / r^2."""
    values = np.abs(d_r(u).values)**2 + np.abs(u.values)**2 / u.r**2

    return ScalarField(u.grid, values, label='e~({})'.format(u.label))


@dataclass(frozen=True)
class CutoffSpec:
    """Space-time cutoff phi(t, r) for the localized energy balance.

    kind is one of "one" (phi = 1), "zero" (phi = 0), "exterior"
    (phi = 1 - chi(r / R(t))) or "interior" (phi = chi(r / R(t))) with
    R(t) = R + rate * t.
    """

    kind: str = 'one'
    R: float = 1.0
    rate: float = 0.0

    KINDS = ('one', 'zero', 'exterior', 'interior')

    def __post_init__(self):
        if self.kind not in self.KINDS:
            msg = 'Cutoff kind must be one of {} but received: {}'.format(
                self.KINDS, self.kind)
            logger.error(msg)
            raise ConfigurationError(msg)

        if self.kind in ('exterior', 'interior') and not self.R > 0:
            msg = 'Cutoff radius must be positive but received: {}'.format(
                self.R)
            logger.error(msg)
            raise ConfigurationError(msg)

    def radius(self, t):
        """Cutoff radius at time t."""
        R = self.R + self.rate * t
        if R <= 0:
            msg = 'Cutoff radius became non-positive at t={}'.format(t)
            logger.error(msg)
            raise ConfigurationError(msg)
        return R

    def evaluate(self, t, r):
        """Return phi, d_r phi and d_t phi at time t on radii r."""
        r = np.asarray(r, dtype=float)
        if self.kind == 'one':
            return np.ones_like(r), np.zeros_like(r), np.zeros_like(r)
        if self.kind == 'zero':
            return np.zeros_like(r), np.zeros_like(r), np.zeros_like(r)

        R = self.radius(t)
        chi = cutoff(r, R)
        dchi = cutoff_derivative(r, R)
        dchi_dt = -(r / R) * dchi * self.rate
        if self.kind == 'exterior':
            return 1.0 - chi, -dchi, -dchi_dt

        return chi, dchi, dchi_dt

    def to_dict(self):
        """JSON-friendly representation."""
        return {'kind': self.kind, 'R': self.R, 'rate': self.rate}


@dataclass(frozen=True)
class BalanceReport:
    """Both sides of the localized energy balance on [t1, t2].

    lhs is the change of the localized modified energy and the five terms
    are, in order, the weighted dissipation, the nonlinear work, the cutoff
    gradient flux, the Hardy term and the moving cutoff term.
    """

    term1: float
    term2: float
    term3: float
    term4: float
    term5: float
    lhs: float
    rhs: float
    residual: float
    relative_residual: float
    phi_spec: dict = field(default_factory=dict)
    t1: float = 0.0
    t2: float = 0.0

    def to_dict(self):
        """JSON-friendly representation."""
        return asdict(self)


def _localized_modified_energy(u, phi_sq_nodes, phi_sq_mid):
    """Cell-based integral of (|d_r u|^2 + |u|^2 / r^2) phi^2."""
    grid = u.grid
    cells = grid.cell_weights() * np.abs(cell_gradient(u))**2
    hardy = (grid.box_weights(power=grid.dimension - 3)
             * np.abs(u.values)**2)
    boundary = grid.boundary_coeff * np.abs(u.values[-1])**2

    return (np.sum(cells * phi_sq_mid) + boundary * phi_sq_nodes[-1]
            + np.sum(hardy * phi_sq_nodes))


def _balance_integrands(u, ut, t, phi, nonlinear):
    """Spatial integrands of the five balance terms at one snapshot."""
    grid = u.grid
    D = grid.dimension
    r = grid.r
    mid = 0.5 * (r[1:] + r[:-1])
    w = grid.quad_weights
    w_hardy = grid.box_weights(power=D - 3)

    p, _, pt = phi.evaluate(t, r)
    p_mid, _, pt_mid = phi.evaluate(t, mid)
    conj_ut = np.conj(ut)

    a1 = np.sum(w * np.abs(ut)**2 * p**2)
    if nonlinear:
        a2 = np.real(np.sum(w * nonlinearity(u.values, D) * conj_ut * p**2))
    else:
        a2 = 0.0

    # summation by parts of the flux-form Laplacian against conj(u_t) phi^2,
    # minus the phi^2 weighted cell gradients of the modified energy
    h = grid.spacing
    grad_u = cell_gradient(u)
    grad_ut = np.diff(ut) / h
    grad_ut_phi = np.diff(ut * p**2) / h
    a3 = 0.5 * np.real(np.sum(grid.cell_weights() * grad_u
                              * np.conj(grad_ut_phi - p_mid**2 * grad_ut)))
    a4 = np.real(np.sum(w_hardy * u.values * conj_ut * p**2))
    a5 = _localized_modified_energy(u, p * pt, p_mid * pt_mid)

    return np.array([a1, a2, a3, a4, a5])


def localized_energy_balance(traj, phi, t1=None, t2=None):
    """Evaluate both sides of the five-term localized energy identity.

    d/dt int e~(u) phi^2 = -2 Re z int |u_t|^2 phi^2
                           + 2 Re int |u|^{p-1} u conj(u_t) phi^2
                           - 4 Re int d_r u conj(u_t) phi d_r phi
                           + 2 Re int u conj(u_t) / r^2 phi^2
                           + 2 int e~(u) phi d_t phi

    integrated over [t1, t2] with the trapezoid rule on the stored
    snapshots. The time derivative at each snapshot is z T(u).

    The third term is taken in the summation by parts form of the discrete
    Laplacian, so the identity holds exactly in space and the residual
    measures the time quadrature error. relative_residual divides by at
    least the full modified energy of the first snapshot.

    Parameters
    ----------
    traj : GLB.handlers.trajectory.TrajectoryRecord
        Trajectory with in-memory snapshots.
    phi : CutoffSpec
        Space-time cutoff.
    t1, t2 : float | None
        Time window, defaults to the first and last snapshot.

    Returns
    -------
    BalanceReport
    """
    times = np.array([t for t, _ in traj.snapshots])
    t1 = times[0] if t1 is None and len(times) else t1
    t2 = times[-1] if t2 is None and len(times) else t2
    mask = (times >= t1 - 1e-14) & (times <= t2 + 1e-14)
    if mask.sum() < 3:
        msg = ('Localized energy balance needs at least 3 snapshots in '
               '[{}, {}] but found {}'.format(t1, t2, mask.sum()))
        logger.error(msg)
        raise DiagnosticError(msg)

    z = traj.z
    snaps = [s for s, m in zip(traj.snapshots, mask) if m]
    times = times[mask]
    integrands = []
    for t, u in snaps:
        tension_values = laplacian(u).values
        if traj.nonlinear:
            tension_values = tension_values + nonlinearity(u.values,
                                                           u.dimension)
        ut = z * tension_values
        integrands.append(_balance_integrands(u, ut, t, phi, traj.nonlinear))

    integrals = trapezoid(np.array(integrands), times, axis=0)
    terms = np.array([-2 * z.real * integrals[0], 2 * integrals[1],
                      -4 * integrals[2], 2 * integrals[3],
                      2 * integrals[4]])

    (ta, ua), (tb, ub) = snaps[0], snaps[-1]
    r = ua.grid.r
    mid = 0.5 * (r[1:] + r[:-1])
    ends = []
    for t, u in ((ta, ua), (tb, ub)):
        p = phi.evaluate(t, r)[0]
        p_mid = phi.evaluate(t, mid)[0]
        ends.append(_localized_modified_energy(u, p**2, p_mid**2))

    lhs = float(ends[1] - ends[0])
    rhs = float(np.sum(terms))
    residual = lhs - rhs
    # never smaller than the modified energy of the first snapshot
    scale = max(abs(lhs), float(np.max(np.abs(terms))), norm_E(ua), 1e-300)
    report = BalanceReport(*[float(x) for x in terms], lhs=lhs, rhs=rhs,
                           residual=float(residual),
                           relative_residual=float(abs(residual) / scale),
                           phi_spec=phi.to_dict(), t1=float(times[0]),
                           t2=float(times[-1]))
    logger.debug('Localized energy balance: {}'.format(report))

    return report


def dissipation_balance(record, i1=0, i2=-1):
    """Global energy ledger E(t2) - E(t1) + Re z (D(t2) - D(t1)).

    Parameters
    ----------
    record : GLB.handlers.trajectory.TrajectoryRecord
        Trajectory with E and dissipation_accum series.
    i1, i2 : int
        Row indices of the two ticks.

    Returns
    -------
    dict
        Energies, dissipation and the signed and relative residuals.
    """
    df = record.to_frame()
    if len(df) < 2:
        msg = 'Energy ledger needs at least two trajectory rows.'
        logger.error(msg)
        raise DiagnosticError(msg)

    e1, e2 = df['E'].iloc[i1], df['E'].iloc[i2]
    d1 = df['dissipation_accum'].iloc[i1]
    d2 = df['dissipation_accum'].iloc[i2]
    residual = e2 - e1 + record.z.real * (d2 - d1)
    e0 = abs(df['E'].iloc[0])
    relative = abs(residual) / e0 if e0 > 0 else abs(residual)

    return {'E1': float(e1), 'E2': float(e2), 'dissipation': float(d2 - d1),
            'residual': float(residual), 'relative_residual': float(relative)}


def radial_sobolev_check(v, R):
    """Both sides of |v(R)| <= sqrt(2) R^(-(D - 2) / 2) ||v||_{E(R)}.

    Parameters
    ----------
    v : RadialField
        Field to test.
    R : float
        Radius strictly inside (r_min, r_max). Off-node values of |v| use
        monotone cubic interpolation.

    Returns
    -------
    lhs, rhs : float
    """
    grid = v.grid
    if not grid.r_min < R < grid.r_max:
        msg = ('Sobolev radius {} must lie inside ({}, {})'
               .format(R, grid.r_min, grid.r_max))
        logger.error(msg)
        raise ConfigurationError(msg)

    modulus = np.abs(v.values)
    i = grid.nearest_node(R)
    if grid.r[i] == R:
        lhs = float(modulus[i])
    else:
        lhs = float(PchipInterpolator(grid.r, modulus)(R))

    D = grid.dimension
    rhs = float(np.sqrt(2.0) * R**(-(D - 2) / 2)
                * np.sqrt(norm_E(v, R, None)))

    return lhs, rhs


def coercivity_probe(v, R):
    """Tail energy E(v; R, inf) and tail norm ||v||^2_{E(R)}.

    The pair is returned for empirical ratio studies, no threshold is
    asserted.
    """
    return energy(v, R, None).total, norm_E(v, R, None)
