# -*- coding: utf-8 -*-
"""
Linearized operators around the ground state, their low spectrum and the
compactly supported test profiles used by the modulation conditions.

L+ = -Laplacian - p W^(p-1) and L- = -Laplacian - W^(p-1) are self-adjoint
in L2(r^(D-1) dr). Spectral problems are solved on the symmetrized
tridiagonal form w^(1/2) L w^(-1/2) with the control volume weights w.
"""
from dataclasses import dataclass, field
from functools import lru_cache
import logging

import numpy as np
from scipy.linalg import LinAlgError, eig, eigh_tridiagonal

from GLB.core.dynamics import f_prime
from GLB.core.ground_state import (critical_exponent, lambda_w_profile,
                                   multi_bubble, w_profile)
from GLB.core.radial import RadialField, inner, l2_norm, make_grid
from GLB.utilities.exceptions import (ConfigurationError, ConstructionError,
                                      SpectralError)

logger = logging.getLogger(__name__)

SIGNS = ('plus', 'minus')


def _check_sign(sign):
    if sign not in SIGNS:
        msg = 'Operator sign must be one of {} but received: {}'.format(
            SIGNS, sign)
        logger.error(msg)
        raise ConfigurationError(msg)


def potential(sign, D, r, lam=1.0):
    """Potential V+ = -p W_lam^(p-1) or V- = -W_lam^(p-1) at radii r."""
    _check_sign(sign)
    p = critical_exponent(D)
    w = lam**(-(D - 2) / 2) * w_profile(D, np.asarray(r) / lam)
    v = -w**(p - 1)
    if sign == 'plus':
        v = p * v

    return v


def apply_L(sign, g, lam=1.0):
    """Apply L+ or L- rescaled to scale lam.

    Parameters
    ----------
    sign : str
        "plus" or "minus".
    g : RadialField
        Field, complex values are acted on componentwise.
    lam : float
        Scale of the ground state in the potential.

    Returns
    -------
    RadialField
    """
    grid = g.grid
    V = potential(sign, grid.dimension, grid.r, lam)
    values = -grid.apply_laplacian(g.values) + V * g.values

    return g.with_values(values, label='L{}({})'.format(
        '+' if sign == 'plus' else '-', g.label))


def apply_L_script(g, params, z=1.0):
    """Linearized flow z (Laplacian g + f'(W(theta, lam)) g) around a
    multi-bubble configuration."""
    config = multi_bubble(params, g.grid)
    values = z * (g.grid.apply_laplacian(g.values)
                  + f_prime(config, g).values)

    return g.with_values(values, label='LW({})'.format(g.label))


@dataclass(frozen=True, eq=False)
class SpectralResult:
    """Eigenpair of L+ or L- with its residual ||L y - mu y||."""

    operator: str
    index: int
    eigenvalue: float
    eigenfunction: RadialField
    residual: float

    def to_dict(self):
        """JSON-friendly summary without the eigenfunction."""
        return {'operator': self.operator, 'index': self.index,
                'eigenvalue': self.eigenvalue, 'residual': self.residual}


def eigen_ground(sign, k, grid, lam=1.0):
    """Lowest k eigenpairs of L+ or L- on a grid.

    Eigenfunctions are normalized in L2(r^(D-1) dr) with a positive value
    at the innermost node.

    Parameters
    ----------
    sign : str
        "plus" or "minus".
    k : int
        Number of eigenpairs, >= 1.
    grid : RadialGrid
        Discretization grid.
    lam : float
        Ground state scale.

    Returns
    -------
    list
        SpectralResult objects sorted by eigenvalue.
    """
    _check_sign(sign)
    if int(k) != k or not 1 <= k <= grid.n_nodes:
        msg = ('Number of eigenpairs must be in [1, {}] but received: {}'
               .format(grid.n_nodes, k))
        logger.error(msg)
        raise ConfigurationError(msg)

    V = potential(sign, grid.dimension, grid.r, lam)
    d, e = grid.symmetric_bands(V)
    try:
        mu, vecs = eigh_tridiagonal(d, e, select='i',
                                    select_range=(0, int(k) - 1),
                                    lapack_driver='stemr')
    except (LinAlgError, ValueError) as ex:
        msg = 'Tridiagonal eigensolver failed for L{} on {}'.format(
            sign, grid)
        logger.exception(msg)
        raise SpectralError(msg) from ex

    sqrt_w = np.sqrt(grid.quad_weights)
    out = []
    for i in range(len(mu)):
        y = vecs[:, i] / sqrt_w
        if y[0] < 0:
            y = -y
        yf = RadialField(grid, y, label='y{}_{}'.format(sign, i))
        residual = l2_norm(apply_L(sign, yf, lam) - mu[i] * yf)
        out.append(SpectralResult(sign, i, float(mu[i]), yf, residual))
        logger.debug('L{} eigenvalue {}: {:.10e} (residual {:.3e})'.format(
            sign, i, mu[i], residual))

    return out


def spectrum_report(grid, k=3):
    """Spectrum summaries of L+ and L-.

    Returns
    -------
    list
        One dict per operator with keys operator, D, grid, eigenvalues and
        residuals.
    """
    reports = []
    for sign in SIGNS:
        results = eigen_ground(sign, k, grid)
        reports.append({'operator': 'L' + ('+' if sign == 'plus' else '-'),
                        'D': grid.dimension,
                        'grid': repr(grid),
                        'eigenvalues': [s.eigenvalue for s in results],
                        'residuals': [s.residual for s in results]})

    return reports


@dataclass(frozen=True, eq=False)
class Y1Y2Result:
    """Solution of L+ Y1 = -nu Y2, L- Y2 = nu Y1.

    status is "converged", "exploratory" (D < 5) or "absent" when no real
    positive nu was found, in which case nu, Y1 and Y2 are None.
    """

    nu: float = None
    Y1: RadialField = None
    Y2: RadialField = None
    residuals: tuple = (np.nan, np.nan)
    status: str = 'absent'

    def to_dict(self):
        """JSON-friendly summary without the profiles."""
        return {'nu': self.nu, 'residuals': list(self.residuals),
                'status': self.status}


def _dense_symmetric(grid, sign):
    d, e = grid.symmetric_bands(potential(sign, grid.dimension, grid.r))

    return np.diag(d) + np.diag(e, 1) + np.diag(e, -1)


def solve_Y1Y2(grid, nu_min=1e-2, imag_tol=1e-6):
    """Real eigenvalue nu > 0 of the coupled problem
    L+ Y1 = -nu Y2, L- Y2 = nu Y1.

    The pair is an eigenvector of the block operator [[0, L-], [-L+, 0]],
    equivalently L- L+ Y1 = -nu^2 Y1. The block operator is assembled
    densely in symmetrized coordinates.

    Parameters
    ----------
    grid : RadialGrid
        Discretization grid.
    nu_min : float
        Smallest eigenvalue accepted as nu, smaller real eigenvalues come
        from the split generalized kernel.
    imag_tol : float
        Relative bound on the imaginary part of an accepted eigenvalue.

    Returns
    -------
    Y1Y2Result
    """
    M = grid.n_nodes
    H_plus = _dense_symmetric(grid, 'plus')
    H_minus = _dense_symmetric(grid, 'minus')
    block = np.zeros((2 * M, 2 * M))
    block[:M, M:] = H_minus
    block[M:, :M] = -H_plus

    try:
        vals, vecs = eig(block)
    except LinAlgError as ex:
        msg = 'Block eigensolver failed on {}'.format(grid)
        logger.exception(msg)
        raise SpectralError(msg) from ex

    real = (np.abs(vals.imag) < imag_tol * np.maximum(1.0, np.abs(vals.real))
            ) & (vals.real > nu_min)
    if not real.any():
        logger.warning('No real positive nu found on {}'.format(grid))
        return Y1Y2Result()

    idx = np.flatnonzero(real)
    j = idx[np.argmax(vals.real[idx])]
    nu = float(vals.real[j])
    v = vecs[:, j]
    v = np.real(v * np.exp(-1j * np.angle(v[np.argmax(np.abs(v[:M]))])))
    sqrt_w = np.sqrt(grid.quad_weights)
    scale = np.linalg.norm(v[:M])
    if v[0] < 0:
        scale = -scale

    Y1 = RadialField(grid, v[:M] / sqrt_w / scale, label='Y1')
    Y2 = RadialField(grid, v[M:] / sqrt_w / scale, label='Y2')

    residuals = (l2_norm(apply_L('plus', Y1) + nu * Y2),
                 l2_norm(apply_L('minus', Y2) - nu * Y1))
    status = 'converged' if grid.dimension >= 5 else 'exploratory'
    logger.info('nu = {:.10e} ({}), residuals {}'.format(nu, status,
                                                         residuals))

    return Y1Y2Result(nu, Y1, Y2, residuals, status)


def _bump(r, a, c):
    """Bump (1 - s^2)^4 on [a, c] with s the affine map onto [-1, 1], and
    its radial derivative."""
    r = np.asarray(r, dtype=float)
    s = (2 * r - (a + c)) / (c - a)
    inside = np.abs(s) < 1
    base = np.where(inside, 1 - s**2, 0.0)
    values = base**4
    deriv = np.where(inside, -16 * s * base**3 / (c - a), 0.0)

    return values, deriv


@dataclass(frozen=True, eq=False)
class TestProfiles:
    """Closed form test profiles Z1 = b - alpha b2 and Z2 = b.

    b and b2 are (1 - s^2)^4 bumps on support_b and support_b2. Rescaled
    profiles use the energy scaling lam^(-(D-2)/2) Z(r / lam).
    """

    __test__ = False

    dimension: int
    alpha: float
    support_b: tuple
    support_b2: tuple
    certs: dict = field(default_factory=dict)
    grid: object = None

    @property
    def rho1(self):
        """Inner end of the common support."""
        return self.support_b[0]

    @property
    def rho2(self):
        """Outer end of the common support."""
        return self.support_b2[1]

    def _profile(self, which, r):
        b, db = _bump(r, *self.support_b)
        if which == 2:
            return b, db
        b2, db2 = _bump(r, *self.support_b2)

        return b - self.alpha * b2, db - self.alpha * db2

    def z1_values(self, r, lam=1.0):
        """Nodal values of Z1 rescaled to lam."""
        D = self.dimension
        return lam**(-(D - 2) / 2) * self._profile(1, np.asarray(r) / lam)[0]

    def z2_values(self, r, lam=1.0):
        """Nodal values of Z2 rescaled to lam."""
        D = self.dimension
        return lam**(-(D - 2) / 2) * self._profile(2, np.asarray(r) / lam)[0]

    def lambda_z_values(self, which, r, lam=1.0):
        """Nodal values of (Lambda Z_which) rescaled to lam."""
        D = self.dimension
        s = np.asarray(r) / lam
        z, dz = self._profile(which, s)

        return lam**(-(D - 2) / 2) * (s * dz + 0.5 * (D - 2) * z)

    def Z1(self, grid=None):
        """Z1 sampled on a grid."""
        grid = self.grid if grid is None else grid
        return RadialField(grid, self.z1_values(grid.r), label='Z1')

    def Z2(self, grid=None):
        """Z2 sampled on a grid."""
        grid = self.grid if grid is None else grid
        return RadialField(grid, self.z2_values(grid.r), label='Z2')

    def to_dict(self):
        """JSON-friendly representation."""
        return {'D': self.dimension, 'alpha': self.alpha,
                'support_b': list(self.support_b),
                'support_b2': list(self.support_b2),
                'certs': dict(self.certs)}


def _certificates(grid, b, b2_field, Y, alpha):
    D = grid.dimension
    W = RadialField(grid, w_profile(D, grid.r), label='W')
    LW = RadialField(grid, lambda_w_profile(D, grid.r), label='LambdaW')
    Z1 = b - alpha * b2_field
    Z2 = b
    scale = l2_norm(Z1) * l2_norm(Y)

    return {'Z1_LambdaW': inner(Z1, LW),
            'Z1_Y': inner(Z1, Y) / scale,
            'Z2_W': inner(Z2, W),
            'Z1_W': inner(Z1, W),
            'Z2_LambdaW': inner(Z2, LW)}


def _certs_ok(certs, tol=1e-8, nonzero=1e-6):
    return (certs['Z1_LambdaW'] > 0 and abs(certs['Z1_Y']) < tol
            and certs['Z2_W'] > 0 and abs(certs['Z1_W']) > nonzero
            and abs(certs['Z2_LambdaW']) > nonzero)


def build_test_profiles(grid, ground=None, retries=4):
    """Construct test profiles satisfying the orthogonality certificates.

    b sits inside the zero r0 = sqrt(D (D - 2)) of Lambda W where W and
    Lambda W are positive, b2 sits outside r0 where Lambda W is negative.
    alpha = <b|Y> / <b2|Y> makes Z1 orthogonal to the ground state Y of L+.

    Parameters
    ----------
    grid : RadialGrid
        Grid resolving [0.1 r0, 4 r0].
    ground : SpectralResult | None
        Ground state of L+, computed on grid if None.
    retries : int
        Number of support shifts tried after the first construction.

    Returns
    -------
    TestProfiles
    """
    D = grid.dimension
    r0 = np.sqrt(D * (D - 2))
    if ground is None:
        ground = eigen_ground('plus', 1, grid)[0]
    Y = ground.eigenfunction

    certs = {}
    for attempt in range(retries + 1):
        sb = (0.2 * r0, (0.8 - 0.1 * attempt) * r0)
        sb2 = ((1.2 + 0.3 * attempt) * r0, (3.0 + 0.5 * attempt) * r0)
        if sb2[1] > grid.r_max or sb[0] < grid.r_min:
            break

        b = RadialField(grid, _bump(grid.r, *sb)[0], label='b')
        b2 = RadialField(grid, _bump(grid.r, *sb2)[0], label='b2')
        denom = inner(b2, Y)
        if denom == 0:
            continue

        alpha = inner(b, Y) / denom
        certs = _certificates(grid, b, b2, Y, alpha)
        logger.debug('Test profile attempt {}: {}'.format(attempt, certs))
        if _certs_ok(certs):
            profiles = TestProfiles(D, float(alpha), sb, sb2,
                                    certs=certs, grid=grid)
            logger.debug('Built test profiles: {}'.format(profiles.to_dict()))
            return profiles

    msg = ('Could not construct test profiles on {} after {} attempts, '
           'last certificates: {}'.format(grid, retries + 1, certs))
    logger.error(msg)
    raise ConstructionError(msg, certs=certs)


@lru_cache(maxsize=8)
def default_test_profiles(D):
    """Test profiles built on a fixed reference grid for dimension D."""
    grid = make_grid(D, 1e-3, 1e3, 1024, 'geometric')

    return build_test_profiles(grid)
