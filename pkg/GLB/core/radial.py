# -*- coding: utf-8 -*-
"""
Radial grids, fields, quadrature and the radial differential operators.

The discretization is a control-volume scheme on nodes r_1 < ... < r_M.
Node i owns the box [r_{i-1/2}, r_{i+1/2}] where interior faces sit at node
midpoints, the first box starts at r = 0 (even reflection, no flux through
the origin) and the last box ends at r_max. Quadrature weights are the exact
measures of the boxes under r^{D-1} dr, and the Laplacian is written in flux
form so that it is symmetric with respect to those weights.
"""
from dataclasses import dataclass, field
import logging

import numpy as np
import pandas as pd
from scipy import sparse

from GLB.utilities.exceptions import ConfigurationError, DimensionError
from GLB.utilities.utilities import write_frame

logger = logging.getLogger(__name__)


class RadialGrid:
    """Radial grid on [r_min, r_max] for dimension D >= 3.

    Examples
    --------
    >>> from GLB.core.radial import make_grid
    >>> grid = make_grid(4, 1e-3, 1e2, 2048, 'geometric')
    >>> grid
    RadialGrid(D=4, M=2048, r=[0.001, 100], stretch=geometric, bc=harmonic)
    >>> bool(np.isclose(grid.quad_weights.sum(), grid.r_max**4 / 4))
    True
    """

    STRETCH_OPTIONS = ('uniform', 'geometric')
    OUTER_BC_OPTIONS = ('harmonic', 'dirichlet')
    MIN_NODES_PER_DECADE = 8

    def __init__(self, dimension, nodes, stretch='uniform',
                 outer_bc='harmonic'):
        """
        Parameters
        ----------
        dimension : int
            Spatial dimension D >= 3.
        nodes : np.ndarray
            Strictly increasing positive node radii.
        stretch : str
            Node distribution label, "uniform" or "geometric".
        outer_bc : str
            Outer boundary condition. "harmonic" imposes the Robin condition
            u' = -(D - 2) u / r that is satisfied by r^(2-D) tails,
            "dirichlet" imposes u = 0 one cell beyond r_max.
        """
        self._dimension = int(dimension)
        self._r = np.array(nodes, dtype=float)
        self._stretch = stretch
        self._outer_bc = outer_bc
        self._check()

        D = self._dimension
        r = self._r
        self._h = np.diff(r)
        self._mid = 0.5 * (r[1:] + r[:-1])
        self._faces = np.concatenate(([0.0], self._mid, [r[-1]]))
        self._weights = (self._faces[1:]**D - self._faces[:-1]**D) / D
        self._flux = self._mid**(D - 1) / self._h

        if outer_bc == 'harmonic':
            self._beta = (D - 2) * r[-1]**(D - 2)
        else:
            self._beta = (r[-1] + 0.5 * self._h[-1])**(D - 1) / self._h[-1]

        self._d_r = self._derivative_matrix(r)

        for arr in (self._r, self._h, self._weights, self._flux):
            arr.flags.writeable = False

    def _check(self):
        """Validate the grid inputs."""
        if self._dimension < 3:
            msg = 'Dimension must be >= 3 but received: {}'.format(
                self._dimension)
            logger.error(msg)
            raise ConfigurationError(msg)

        if self._stretch not in self.STRETCH_OPTIONS:
            msg = ('Grid stretch must be one of {} but received: {}'
                   .format(self.STRETCH_OPTIONS, self._stretch))
            logger.error(msg)
            raise ConfigurationError(msg)

        if self._outer_bc not in self.OUTER_BC_OPTIONS:
            msg = ('Outer boundary condition must be one of {} but received: '
                   '{}'.format(self.OUTER_BC_OPTIONS, self._outer_bc))
            logger.error(msg)
            raise ConfigurationError(msg)

        if self._r.ndim != 1 or len(self._r) < 3:
            msg = 'Grid needs a 1D array of at least 3 nodes.'
            logger.error(msg)
            raise ConfigurationError(msg)

        if self._r[0] <= 0 or not (np.diff(self._r) > 0).all():
            msg = 'Grid nodes must be positive and strictly increasing.'
            logger.error(msg)
            raise ConfigurationError(msg)

    @staticmethod
    def _derivative_matrix(r):
        """Second-order three-point first derivative on a nonuniform grid,
        one-sided at both ends."""
        M = len(r)
        hm = r[1:-1] - r[:-2]
        hp = r[2:] - r[1:-1]
        rows, cols, data = [], [], []

        i = np.arange(1, M - 1)
        for offset, coeff in ((-1, -hp / (hm * (hm + hp))),
                              (0, (hp - hm) / (hm * hp)),
                              (1, hm / (hp * (hm + hp)))):
            rows.append(i)
            cols.append(i + offset)
            data.append(coeff)

        h1, h2 = r[1] - r[0], r[2] - r[1]
        rows.append(np.zeros(3, dtype=int))
        cols.append(np.arange(3))
        data.append(np.array([-(2 * h1 + h2) / (h1 * (h1 + h2)),
                              (h1 + h2) / (h1 * h2),
                              -h1 / (h2 * (h1 + h2))]))

        h1, h2 = r[-2] - r[-3], r[-1] - r[-2]
        rows.append(np.full(3, M - 1))
        cols.append(np.arange(M - 3, M))
        data.append(np.array([h2 / (h1 * (h1 + h2)),
                              -(h1 + h2) / (h1 * h2),
                              (2 * h2 + h1) / (h2 * (h1 + h2))]))

        mat = sparse.csr_matrix((np.concatenate(data),
                                 (np.concatenate(rows),
                                  np.concatenate(cols))), shape=(M, M))

        return mat

    def __repr__(self):
        return ('RadialGrid(D={}, M={}, r=[{:.6g}, {:.6g}], stretch={}, '
                'bc={})'.format(self.dimension, self.n_nodes, self.r_min,
                                self.r_max, self.stretch, self.outer_bc))

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, RadialGrid):
            return False
        return (self.dimension == other.dimension
                and self.outer_bc == other.outer_bc
                and self.n_nodes == other.n_nodes
                and np.array_equal(self.r, other.r))

    def __hash__(self):
        return hash((self.dimension, self.n_nodes, self.r_min, self.r_max,
                     self.outer_bc))

    def __len__(self):
        return self.n_nodes

    @property
    def dimension(self):
        """Spatial dimension D."""
        return self._dimension

    @property
    def r(self):
        """Node radii (read-only array)."""
        return self._r

    @property
    def r_min(self):
        """Innermost node radius."""
        return float(self._r[0])

    @property
    def r_max(self):
        """Outermost node radius."""
        return float(self._r[-1])

    @property
    def n_nodes(self):
        """Number of nodes M."""
        return len(self._r)

    @property
    def stretch(self):
        """Node distribution label."""
        return self._stretch

    @property
    def outer_bc(self):
        """Outer boundary condition label."""
        return self._outer_bc

    @property
    def spacing(self):
        """Cell widths h_i = r_{i+1} - r_i (length M - 1)."""
        return self._h

    @property
    def faces(self):
        """Control volume faces (length M + 1), starting at 0."""
        return self._faces

    @property
    def quad_weights(self):
        """Exact r^{D-1} dr measure of each control volume."""
        return self._weights

    @property
    def flux_coeffs(self):
        """Face coefficients r_{i+1/2}^{D-1} / h_i of the Laplacian."""
        return self._flux

    @property
    def boundary_coeff(self):
        """Outer boundary flux coefficient beta: flux = -beta * u(r_max)."""
        return self._beta

    @property
    def derivative_matrix(self):
        """Sparse first-derivative matrix used by d_r."""
        return self._d_r

    def check_window(self, r1=0.0, r2=None):
        """Validate and normalize a radial window.

        Parameters
        ----------
        r1 : float
            Window start, 0 means the origin.
        r2 : float | None
            Window end, None or inf means r_max including the outer
            boundary contribution.

        Returns
        -------
        r1, r2 : float
            Window bounds clipped to [0, r_max].
        boundary : bool
            Whether the window reaches infinity.
        """
        boundary = r2 is None or np.isinf(r2)
        r2 = np.inf if r2 is None else float(r2)
        r1 = float(r1)

        if r1 < 0 or not r1 < r2:
            msg = ('Radial window must satisfy 0 <= r1 < r2 but received '
                   '({}, {})'.format(r1, r2))
            logger.error(msg)
            raise ConfigurationError(msg)

        return r1, min(r2, self.r_max), boundary

    def box_weights(self, r1=0.0, r2=None, power=None):
        """Quadrature weights of the control volumes clipped to a window.

        Parameters
        ----------
        r1, r2 : float
            Window, see check_window.
        power : int | None
            Measure r^power dr, defaults to D - 1.

        Returns
        -------
        w : np.ndarray
            Weights such that sum(w * g) approximates the integral of g
            against r^power over the window.
        """
        r1, r2, _ = self.check_window(r1, r2)
        p = self.dimension - 1 if power is None else power
        lo = np.clip(self._faces[:-1], r1, r2)
        hi = np.clip(self._faces[1:], r1, r2)

        return (hi**(p + 1) - lo**(p + 1)) / (p + 1)

    def cell_weights(self, r1=0.0, r2=None):
        """Midpoint measure of each gradient cell clipped to a window.

        Parameters
        ----------
        r1, r2 : float
            Window, see check_window.

        Returns
        -------
        w : np.ndarray
            Length M - 1 weights r_{i+1/2}^{D-1} |[r_i, r_{i+1}] & window|.
        """
        r1, r2, _ = self.check_window(r1, r2)
        lo = np.clip(self._r[:-1], r1, r2)
        hi = np.clip(self._r[1:], r1, r2)

        return self._mid**(self.dimension - 1) * (hi - lo)

    def integrate(self, values, r1=0.0, r2=None, power=None):
        """Integrate nodal values against r^power dr over a window."""
        return np.sum(self.box_weights(r1, r2, power=power) * values)

    def laplacian_bands(self):
        """Tridiagonal bands of the discrete radial Laplacian.

        Returns
        -------
        lower : np.ndarray
            Sub-diagonal (length M - 1), entry i couples row i + 1 to i.
        diag : np.ndarray
            Diagonal (length M).
        upper : np.ndarray
            Super-diagonal (length M - 1), entry i couples row i to i + 1.
        """
        w = self._weights
        c = self._flux
        diag = np.zeros(self.n_nodes)
        diag[:-1] -= c
        diag[1:] -= c
        diag[-1] -= self._beta
        diag /= w
        upper = c / w[:-1]
        lower = c / w[1:]

        return lower, diag, upper

    def apply_laplacian(self, values):
        """Apply the discrete Laplacian to nodal values."""
        lower, diag, upper = self.laplacian_bands()
        out = diag * values
        out[:-1] += upper * values[1:]
        out[1:] += lower * values[:-1]

        return out

    def symmetric_bands(self, potential=None):
        """Bands of the symmetrized operator w^{1/2} (-Delta + V) w^{-1/2}.

        Parameters
        ----------
        potential : np.ndarray | None
            Real nodal potential V.

        Returns
        -------
        d : np.ndarray
            Diagonal of the symmetric tridiagonal matrix.
        e : np.ndarray
            Off-diagonal of the symmetric tridiagonal matrix.
        """
        w = self._weights
        c = self._flux
        d = np.zeros(self.n_nodes)
        d[:-1] += c
        d[1:] += c
        d[-1] += self._beta
        d /= w
        if potential is not None:
            d = d + potential
        e = -c / np.sqrt(w[:-1] * w[1:])

        return d, e

    def nearest_node(self, radius):
        """Index of the node closest to a radius."""
        return int(np.argmin(np.abs(self._r - radius)))


def make_grid(D, r_min, r_max, M, stretch='geometric', outer_bc='harmonic'):
    """Build a radial grid.

    Parameters
    ----------
    D : int
        Spatial dimension >= 3.
    r_min : float
        Innermost node, > 0.
    r_max : float
        Outermost node, > r_min.
    M : int
        Number of nodes, >= 16.
    stretch : str
        "uniform" or "geometric". Geometric grids must place at least 8
        nodes per decade of r.
    outer_bc : str
        "harmonic" or "dirichlet".

    Returns
    -------
    grid : RadialGrid
    """
    if not 0 < r_min < r_max:
        msg = ('Grid bounds must satisfy 0 < r_min < r_max but received '
               '({}, {})'.format(r_min, r_max))
        logger.error(msg)
        raise ConfigurationError(msg)

    if int(M) != M or M < 16:
        msg = 'Grid needs an integer node count >= 16 but received: {}'.format(
            M)
        logger.error(msg)
        raise ConfigurationError(msg)

    M = int(M)
    if stretch == 'uniform':
        nodes = np.linspace(r_min, r_max, M)
    elif stretch == 'geometric':
        decades = np.log10(r_max / r_min)
        if (M - 1) < RadialGrid.MIN_NODES_PER_DECADE * decades:
            msg = ('Geometric grid with {} nodes over {:.2f} decades has '
                   'fewer than {} nodes per decade.'
                   .format(M, decades, RadialGrid.MIN_NODES_PER_DECADE))
            logger.error(msg)
            raise ConfigurationError(msg)
        nodes = np.geomspace(r_min, r_max, M)
    else:
        msg = ('Grid stretch must be one of {} but received: {}'
               .format(RadialGrid.STRETCH_OPTIONS, stretch))
        logger.error(msg)
        raise ConfigurationError(msg)

    nodes[0] = r_min
    nodes[-1] = r_max
    grid = RadialGrid(D, nodes, stretch=stretch, outer_bc=outer_bc)
    logger.debug('Created {}'.format(grid))

    return grid


def _check_same_grid(*fields_):
    grid = fields_[0].grid
    for f in fields_[1:]:
        if not (f.grid is grid or f.grid == grid):
            msg = 'Fields live on different grids: {} and {}'.format(
                grid, f.grid)
            logger.error(msg)
            raise DimensionError(msg)

    return grid


@dataclass(frozen=True, eq=False)
class RadialField:
    """Complex samples of a radial function on a grid."""

    grid: RadialGrid
    values: np.ndarray
    label: str = field(default='')

    def __post_init__(self):
        values = np.array(self.values, dtype=complex)
        if values.shape != (self.grid.n_nodes,):
            msg = ('Field "{}" has {} values but the grid has {} nodes.'
                   .format(self.label, values.size, self.grid.n_nodes))
            logger.error(msg)
            raise DimensionError(msg)

        if not np.isfinite(values).all():
            msg = 'Field "{}" contains non-finite values.'.format(self.label)
            logger.error(msg)
            raise ValueError(msg)

        values.flags.writeable = False
        object.__setattr__(self, 'values', values)

    @classmethod
    def zeros(cls, grid, label='zero'):
        """Zero field on a grid."""
        return cls(grid, np.zeros(grid.n_nodes, dtype=complex), label=label)

    @classmethod
    def from_function(cls, grid, func, label=''):
        """Sample a vectorized function of r on a grid."""
        return cls(grid, func(grid.r), label=label)

    def with_values(self, values, label=None):
        """New field on the same grid."""
        label = self.label if label is None else label
        return RadialField(self.grid, values, label=label)

    @property
    def dimension(self):
        """Spatial dimension of the underlying grid."""
        return self.grid.dimension

    @property
    def r(self):
        """Node radii."""
        return self.grid.r

    @property
    def real(self):
        """Real part as a complex field."""
        return self.with_values(self.values.real)

    @property
    def imag(self):
        """Imaginary part as a complex field."""
        return self.with_values(self.values.imag)

    def conj(self):
        """Complex conjugate."""
        return self.with_values(self.values.conj())

    def __add__(self, other):
        if isinstance(other, RadialField):
            _check_same_grid(self, other)
            return self.with_values(self.values + other.values)
        return self.with_values(self.values + other)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, RadialField):
            _check_same_grid(self, other)
            return self.with_values(self.values - other.values)
        return self.with_values(self.values - other)

    def __neg__(self):
        return self.with_values(-self.values)

    def __mul__(self, other):
        if isinstance(other, RadialField):
            _check_same_grid(self, other)
            return self.with_values(self.values * other.values)
        return self.with_values(self.values * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self.with_values(self.values / other)


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Real samples of a radial density on a grid."""

    grid: RadialGrid
    values: np.ndarray
    label: str = field(default='')

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (self.grid.n_nodes,):
            msg = ('Scalar field "{}" has {} values but the grid has {} '
                   'nodes.'.format(self.label, values.size,
                                   self.grid.n_nodes))
            logger.error(msg)
            raise DimensionError(msg)

        if not np.isfinite(values).all():
            msg = 'Scalar field "{}" contains non-finite values.'.format(
                self.label)
            logger.error(msg)
            raise ValueError(msg)

        values.flags.writeable = False
        object.__setattr__(self, 'values', values)

    def integrate(self, r1=0.0, r2=None):
        """Integral against r^{D-1} dr over a window."""
        return float(self.grid.integrate(self.values, r1, r2))


def inner(f, g):
    """Weighted real inner product Re sum w_i conj(f_i) g_i.

    Parameters
    ----------
    f, g : RadialField
        Fields on the same grid.

    Returns
    -------
    float
    """
    grid = _check_same_grid(f, g)

    return float(np.real(np.sum(grid.quad_weights
                                * np.conj(f.values) * g.values)))


def d_r(f):
    """Second-order radial derivative, one-sided at both ends."""
    values = f.grid.derivative_matrix @ f.values

    return f.with_values(values, label='d_r({})'.format(f.label))


def laplacian(f):
    """Discrete radial Laplacian d_r^2 + (D - 1)/r d_r.

    The first control volume starts at the origin with zero flux (even
    reflection) and the outer face carries the grid's boundary condition.
    """
    values = f.grid.apply_laplacian(f.values)

    return f.with_values(values, label='laplacian({})'.format(f.label))


def cell_gradient(f):
    """Piecewise constant gradient (u_{i+1} - u_i) / h_i of each cell."""
    return np.diff(f.values) / f.grid.spacing


def kinetic_form(f, r1=0.0, r2=None):
    """Windowed Dirichlet form int |d_r u|^2 r^{D-1} dr.

    Windows reaching infinity include the outer boundary term
    beta |u(r_max)|^2, which is the Dirichlet energy of the exterior
    extension implied by the boundary condition.
    """
    grid = f.grid
    _, _, boundary = grid.check_window(r1, r2)
    out = np.sum(grid.cell_weights(r1, r2) * np.abs(cell_gradient(f))**2)
    if boundary:
        out += boundary_energy(f)

    return float(out)


def boundary_energy(f):
    """Exterior Dirichlet energy beta |u(r_max)|^2 carried by the outer
    boundary condition."""
    return float(f.grid.boundary_coeff * np.abs(f.values[-1])**2)


def norm_E(f, r1=0.0, r2=None):
    """Modified energy integral of |d_r u|^2 + |u|^2 / r^2 over a window.

    Parameters
    ----------
    f : RadialField
        Field to measure.
    r1 : float
        Window start (0 for the origin).
    r2 : float | None
        Window end, None or inf for the whole line.

    Returns
    -------
    float
        The squared energy norm of f restricted to the window.
    """
    grid = f.grid
    potential = np.sum(grid.box_weights(r1, r2, power=grid.dimension - 3)
                       * np.abs(f.values)**2)

    return kinetic_form(f, r1, r2) + float(potential)


def energy_norm(f, r1=0.0, r2=None):
    """Square root of norm_E."""
    return float(np.sqrt(norm_E(f, r1, r2)))


def l2_norm(f, r1=0.0, r2=None):
    """Weighted L2 norm over a window."""
    return float(np.sqrt(f.grid.integrate(np.abs(f.values)**2, r1, r2)))


def linf_norm(f):
    """Maximum modulus."""
    return float(np.max(np.abs(f.values)))


def write_field(f, fp):
    """Write a field snapshot csv with header r,re_u,im_u."""
    df = pd.DataFrame({'r': f.grid.r, 're_u': f.values.real,
                       'im_u': f.values.imag})
    write_frame(df, fp)


def read_field(fp, grid, label=None):
    """Read a field snapshot csv onto a grid.

    Parameters
    ----------
    fp : str
        Snapshot csv with header r,re_u,im_u.
    grid : RadialGrid
        Grid the snapshot must have been written on.
    label : str | None
        Field label, defaults to the file path.

    Returns
    -------
    RadialField
    """
    df = pd.read_csv(fp, float_precision='round_trip')
    missing = [c for c in ('r', 're_u', 'im_u') if c not in df]
    if missing:
        msg = 'Snapshot {} is missing columns: {}'.format(fp, missing)
        logger.error(msg)
        raise ConfigurationError(msg)

    r = df['r'].values
    if len(r) != grid.n_nodes or not np.allclose(r, grid.r, rtol=1e-12,
                                                  atol=0):
        msg = 'Snapshot {} does not match {}'.format(fp, grid)
        logger.error(msg)
        raise DimensionError(msg)

    values = df['re_u'].values + 1j * df['im_u'].values
    label = fp if label is None else label

    return RadialField(grid, values, label=label)
