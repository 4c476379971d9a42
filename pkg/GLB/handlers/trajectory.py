# -*- coding: utf-8 -*-
"""
Trajectory record: scalar diagnostics per observer tick plus field
snapshots.
"""
import logging
import os

import numpy as np
import pandas as pd

from GLB.core.energy import energy, nonlinearity
from GLB.core.radial import (boundary_energy, energy_norm, l2_norm,
                             laplacian, linf_norm, write_field)
from GLB.utilities.exceptions import DiagnosticError

logger = logging.getLogger(__name__)


class TrajectoryRecord:
    """Time series of flow diagnostics with in-memory snapshots.

    Every call to append() adds one row with the columns of SERIES and
    keeps the field as a snapshot. flush() writes the snapshots that have
    not been written yet as csv files and returns the snapshot index.
    """

    SERIES = ('t', 'E', 'norm_E', 'tension_l2', 'dtu_l2', 'linf',
              'dissipation_accum')
    MONITORS = ('t', 'boundary_energy', 'smoothing', 'dtu_tension_gap')

    def __init__(self, grid, phase=0.0, nonlinear=True, keep_snapshots=True):
        """
        Parameters
        ----------
        grid : RadialGrid
            Grid of every recorded field.
        phase : float
            arg z of the flow.
        nonlinear : bool
            Whether the flow includes the nonlinearity.
        keep_snapshots : bool
            Keep every ticked field in memory.
        """
        self._grid = grid
        self._phase = float(phase)
        self._nonlinear = bool(nonlinear)
        self._keep = keep_snapshots
        self._rows = []
        self._monitors = []
        self._snapshots = []
        self._index = []
        self._n_flushed = 0
        self.modulation = None
        self.blowup = None
        self.final_state = None

    def __len__(self):
        return len(self._rows)

    def __repr__(self):
        return ('TrajectoryRecord with {} rows on {}, t in [{}, {}]'
                .format(len(self), self._grid, *self.time_span))

    @property
    def grid(self):
        """Grid of the recorded fields."""
        return self._grid

    @property
    def phase(self):
        """arg z."""
        return self._phase

    @property
    def z(self):
        """Complex flow parameter z = exp(i phase)."""
        return np.exp(1j * self._phase)

    @property
    def nonlinear(self):
        """Whether the recorded flow includes the nonlinearity."""
        return self._nonlinear

    @property
    def times(self):
        """Tick times."""
        return np.array([row['t'] for row in self._rows])

    @property
    def time_span(self):
        """(first, last) tick time or (None, None)."""
        if not self._rows:
            return None, None
        return self._rows[0]['t'], self._rows[-1]['t']

    @property
    def snapshots(self):
        """List of (t, RadialField) kept in memory."""
        return self._snapshots

    @property
    def snapshot_index(self):
        """List of (t, file path) of flushed snapshots."""
        return self._index

    def append(self, state):
        """Record diagnostics of a flow state.

        Parameters
        ----------
        state : GLB.core.dynamics.FlowState
            State at the current tick. Times must strictly increase.
        """
        t = float(state.t)
        if self._rows and not t > self._rows[-1]['t']:
            msg = ('Trajectory times must strictly increase, got {} after {}'
                   .format(t, self._rows[-1]['t']))
            logger.error(msg)
            raise DiagnosticError(msg)

        u = state.u
        D = u.dimension
        tension = laplacian(u)
        if self._nonlinear:
            tension = tension + nonlinearity(u.values, D)
        tension_l2 = l2_norm(tension)
        linf = linf_norm(u)
        dtu_l2 = float(state.dtu_l2)

        self._rows.append({'t': t,
                           'E': energy(u).total,
                           'norm_E': energy_norm(u),
                           'tension_l2': tension_l2,
                           'dtu_l2': dtu_l2,
                           'linf': linf,
                           'dissipation_accum': float(state.dissipation_accum)
                           })
        self._monitors.append({'t': t,
                               'boundary_energy': boundary_energy(u),
                               'smoothing': t**((D - 2) / 4) * linf,
                               'dtu_tension_gap': abs(dtu_l2 - tension_l2)})
        if self._keep:
            self._snapshots.append((t, u))

    def to_frame(self):
        """Scalar series as a DataFrame with the SERIES columns."""
        return pd.DataFrame(self._rows, columns=list(self.SERIES))

    def monitors_frame(self):
        """Boundary-tail energy and smoothing monitor per tick."""
        return pd.DataFrame(self._monitors, columns=list(self.MONITORS))

    def field_at(self, t):
        """Snapshot closest to time t."""
        if not self._snapshots:
            msg = 'Trajectory has no snapshots in memory.'
            logger.error(msg)
            raise DiagnosticError(msg)
        times = np.array([s[0] for s in self._snapshots])

        return self._snapshots[int(np.argmin(np.abs(times - t)))][1]

    def flush(self, out_dir, prefix='snapshot'):
        """Write unflushed snapshots to csv files.

        Parameters
        ----------
        out_dir : str
            Directory for the snapshot files.
        prefix : str
            File name prefix; files are named prefix_<t>.csv with t to ten
            decimals.

        Returns
        -------
        list
            New (t, path) entries.
        """
        os.makedirs(out_dir, exist_ok=True)
        new = []
        for k in range(self._n_flushed, len(self._snapshots)):
            t, u = self._snapshots[k]
            fp = os.path.join(out_dir, '{}_{:.10f}.csv'.format(prefix, t))
            write_field(u, fp)
            new.append((t, fp))

        self._n_flushed = len(self._snapshots)
        self._index.extend(new)

        return new
