# -*- coding: utf-8 -*-
"""
The ground state bubble family, its rescalings and the scaling generators.
"""
from dataclasses import dataclass, field
import logging
from warnings import warn

import numpy as np

from GLB.core.radial import RadialField, d_r
from GLB.utilities.exceptions import ConfigurationError, GLBWarning

logger = logging.getLogger(__name__)

TWO_PI = 2 * np.pi

# a bubble of scale lam is resolved if r_min <= lam / RESOLVED_FACTOR and
# RESOLVED_FACTOR * lam <= r_max
RESOLVED_FACTOR = 10.0


def critical_exponent(D):
    """Exponent p = (D + 2) / (D - 2) of the nonlinearity."""
    return (D + 2) / (D - 2)


def w_profile(D, r):
    """Ground state W(r) = (1 + r^2 / (D (D - 2)))^(-(D - 2) / 2).

    Parameters
    ----------
    D : int
        Spatial dimension >= 3.
    r : float | np.ndarray
        Radii >= 0.

    Returns
    -------
    np.ndarray
    """
    r = np.asarray(r, dtype=float)

    return (1.0 + r**2 / (D * (D - 2)))**(-(D - 2) / 2)


def w_derivative(D, r):
    """Closed form W'(r) = -(r / D) (1 + r^2 / (D (D - 2)))^(-D / 2)."""
    r = np.asarray(r, dtype=float)

    return -(r / D) * (1.0 + r**2 / (D * (D - 2)))**(-D / 2)


def lambda_w_profile(D, r):
    """Closed form Lambda W = r W' + (D - 2) / 2 W.

    Equals (D - 2) / 2 (1 + s)^(-D / 2) (1 - s) with s = r^2 / (D (D - 2)).
    """
    r = np.asarray(r, dtype=float)
    s = r**2 / (D * (D - 2))

    return 0.5 * (D - 2) * (1.0 + s)**(-D / 2) * (1.0 - s)


def wrap_phase(theta):
    """Map phases into [0, 2 pi)."""
    return np.mod(np.asarray(theta, dtype=float), TWO_PI)


@dataclass(frozen=True)
class BubbleParams:
    """Phases and scales of an N-bubble configuration.

    Scales are sorted increasingly on construction (phases follow their
    bubble) and phases are wrapped into [0, 2 pi).
    """

    theta: tuple = field(default=())
    lam: tuple = field(default=())

    def __post_init__(self):
        theta = np.atleast_1d(np.asarray(self.theta, dtype=float))
        lam = np.atleast_1d(np.asarray(self.lam, dtype=float))
        if theta.shape != lam.shape or theta.ndim != 1:
            msg = ('Bubble phases and scales must have equal length but '
                   'received {} and {}'.format(len(theta), len(lam)))
            logger.error(msg)
            raise ConfigurationError(msg)

        if not (np.isfinite(lam).all() and (lam > 0).all()
                and np.isfinite(theta).all()):
            msg = 'Bubble scales must be finite and positive: {}'.format(lam)
            logger.error(msg)
            raise ConfigurationError(msg)

        order = np.argsort(lam, kind='stable')
        object.__setattr__(self, 'theta',
                           tuple(float(t) for t in wrap_phase(theta[order])))
        object.__setattr__(self, 'lam', tuple(float(x) for x in lam[order]))

    @classmethod
    def from_vector(cls, x):
        """Build from an optimizer vector (theta_1..theta_N, log lam_1..)."""
        x = np.asarray(x, dtype=float)
        n = len(x) // 2

        return cls(x[:n], np.exp(x[n:]))

    def to_vector(self):
        """Optimizer vector (theta_1..theta_N, log lam_1..log lam_N)."""
        return np.concatenate((self.theta, np.log(self.lam)))

    @property
    def n(self):
        """Number of bubbles N."""
        return len(self.lam)

    def rotate(self, alpha):
        """Configuration with every phase shifted by alpha."""
        return BubbleParams(np.asarray(self.theta) + alpha, self.lam)

    def rescale(self, factor):
        """Configuration with every scale multiplied by factor."""
        return BubbleParams(self.theta, np.asarray(self.lam) * factor)

    def __iter__(self):
        return iter(zip(self.theta, self.lam))


def check_resolved(lam, grid):
    """Warn when a bubble scale is not resolved by the grid.

    Returns
    -------
    bool
        True if r_min <= lam / 10 and 10 lam <= r_max.
    """
    ok = (grid.r_min * RESOLVED_FACTOR <= lam
          and RESOLVED_FACTOR * lam <= grid.r_max)
    if not ok:
        msg = ('Bubble scale {:.3e} is not resolved by {}'
               .format(lam, grid))
        logger.warning(msg)
        warn(msg, GLBWarning)

    return ok


def bubble_values(D, theta, lam, r):
    """Nodal values of e^{i theta} lam^(-(D - 2) / 2) W(r / lam)."""
    return (np.exp(1j * theta) * lam**(-(D - 2) / 2)
            * w_profile(D, np.asarray(r) / lam))


def bubble(theta, lam, grid, check=True):
    """Sample the rescaled, rotated ground state on a grid.

    Parameters
    ----------
    theta : float
        Phase in radians.
    lam : float
        Scale > 0.
    grid : RadialGrid
        Target grid.
    check : bool
        Warn when the scale is not resolved.

    Returns
    -------
    RadialField
    """
    if not lam > 0:
        msg = 'Bubble scale must be positive but received: {}'.format(lam)
        logger.error(msg)
        raise ConfigurationError(msg)

    if check:
        check_resolved(lam, grid)

    values = bubble_values(grid.dimension, theta, lam, grid.r)
    label = 'W(theta={:.4g}, lambda={:.4g})'.format(theta, lam)

    return RadialField(grid, values, label=label)


def lambda_bubble_values(D, theta, lam, r):
    """Nodal values of e^{i theta} (Lambda W)_lam using the closed form."""
    return (np.exp(1j * theta) * lam**(-(D - 2) / 2)
            * lambda_w_profile(D, np.asarray(r) / lam))


def multi_bubble(params, grid):
    """Sum of bubbles of a configuration, zero for N = 0."""
    values = np.zeros(grid.n_nodes, dtype=complex)
    for theta, lam in params:
        values += bubble_values(grid.dimension, theta, lam, grid.r)

    return RadialField(grid, values, label='multi_bubble(N={})'.format(
        params.n))


def apply_Lambda(f):
    """Energy-critical scaling generator r d_r + (D - 2) / 2."""
    D = f.dimension
    values = f.r * d_r(f).values + 0.5 * (D - 2) * f.values

    return f.with_values(values, label='Lambda({})'.format(f.label))


def apply_Lambda_underline(f):
    """L2-critical scaling generator r d_r + D / 2."""
    D = f.dimension
    values = f.r * d_r(f).values + 0.5 * D * f.values

    return f.with_values(values, label='Lambda_({})'.format(f.label))


def config_distance(p, q):
    """Distance between two configurations with the same bubble count.

    Returns max_j |lam_j / mu_j - 1| + |theta_j - phi_j| with phase
    differences taken on the circle.
    """
    if p.n != q.n:
        msg = 'Cannot compare configurations with {} and {} bubbles'.format(
            p.n, q.n)
        logger.error(msg)
        raise ConfigurationError(msg)

    if p.n == 0:
        return 0.0

    ratio = np.abs(np.asarray(p.lam) / np.asarray(q.lam) - 1)
    dtheta = np.abs(np.angle(np.exp(1j * (np.asarray(p.theta)
                                          - np.asarray(q.theta)))))

    return float(np.max(ratio + dtheta))
