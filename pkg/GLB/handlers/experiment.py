# -*- coding: utf-8 -*-
"""
Experiment orchestration: runs, resumes, manifests and trend reports.
"""
import copy
import json
import logging
import os
import platform
import time

import numpy as np
import pandas as pd
import scipy
from scipy.stats import spearmanr

from GLB.core.dynamics import FlowState, evolve
from GLB.core.energy import energy
from GLB.core.ground_state import BubbleParams
from GLB.core.linearized import (build_test_profiles, eigen_ground,
                                 solve_Y1Y2, spectrum_report)
from GLB.core.modulation import (bound_sandwich, delta_R, detect_bubbles,
                                 fit_decomposition, proximity_d,
                                 proximity_dK, track_modulation)
from GLB.core.radial import energy_norm, read_field
from GLB.handlers.config import ExperimentConfig
from GLB.handlers.trajectory import TrajectoryRecord
from GLB.handlers.verify import run_checks
from GLB.utilities.exceptions import (BlowupError, ConfigurationError,
                                      DimensionError, FitError, GLBError)
from GLB.utilities.utilities import file_checksum, write_frame
from GLB.version import __version__

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_VALIDATION = 2

MANIFEST = 'manifest.json'
TRAJECTORY = 'trajectory.csv'
MONITORS = 'monitors.csv'
MODULATION = 'modulation.csv'
MODULATION_RATIOS = 'modulation_ratios.csv'
RESTART = 'restart.csv'
TRENDS = 'trends.json'
SNAPSHOT_DIR = 'snapshots'

VALIDATION_ERRORS = (ConfigurationError, DimensionError, FileNotFoundError)


def versions():
    """Versions of GLB and its numerical stack."""
    return {'GLB': __version__, 'numpy': np.__version__,
            'scipy': scipy.__version__, 'pandas': pd.__version__,
            'python': platform.python_version()}


def monotone_trend(series):
    """Trend summary of a time series.

    Parameters
    ----------
    series : array-like
        Values ordered in time.

    Returns
    -------
    dict
        Fractions of increasing and decreasing steps, the Spearman rank
        correlation against the step index with its p-value and a trend
        label.
    """
    x = np.asarray(series, dtype=float)
    x = x[np.isfinite(x)]
    out = {'n': int(len(x)), 'fraction_increasing': np.nan,
           'fraction_decreasing': np.nan, 'spearman_rho': np.nan,
           'spearman_p': np.nan, 'trend': 'undetermined'}
    if len(x) < 3:
        return out

    dx = np.diff(x)
    out['fraction_increasing'] = float(np.mean(dx > 0))
    out['fraction_decreasing'] = float(np.mean(dx < 0))
    if np.all(dx == 0):
        out['trend'] = 'flat'
        return out

    rho, p = spearmanr(np.arange(len(x)), x)
    out['spearman_rho'] = float(rho)
    out['spearman_p'] = float(p)
    if p < 0.05:
        out['trend'] = 'increasing' if rho > 0 else 'decreasing'
    else:
        out['trend'] = 'flat'

    return out


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError('Cannot serialize {}'.format(type(obj)))


def write_json(data, fp):
    """Write a json file with numpy support."""
    with open(fp, 'w') as f:
        json.dump(data, f, indent=2, sort_keys=True, default=_json_default)


def write_restart(state, fp):
    """Write u and the explicit scheme history of a state at full
    precision."""
    grid = state.u.grid
    f_prev = (np.zeros(grid.n_nodes, dtype=complex) if state.f_prev is None
              else state.f_prev)
    df = pd.DataFrame({'r': grid.r, 're_u': state.u.values.real,
                       'im_u': state.u.values.imag,
                       're_f_prev': f_prev.real, 'im_f_prev': f_prev.imag})
    write_frame(df, fp)


def read_restart(fp, grid, meta):
    """Rebuild a FlowState from a restart file and manifest state entry.

    Parameters
    ----------
    fp : str
        Restart csv.
    grid : RadialGrid
        Grid the restart file must match.
    meta : dict
        Manifest "state" entry.

    Returns
    -------
    FlowState
    """
    u = read_field(fp, grid, label='u')
    df = pd.read_csv(fp, float_precision='round_trip')
    f_prev = None
    if meta.get('has_history', False):
        f_prev = df['re_f_prev'].values + 1j * df['im_f_prev'].values

    return FlowState(t=float(meta['t']), u=u,
                     step_count=int(meta['step_count']),
                     dissipation_accum=float(meta['dissipation_accum']),
                     f_prev=f_prev, dt_prev=meta.get('dt_prev', None),
                     dtu_l2=float(meta.get('dtu_l2', 0.0)))


class Experiment:
    """Run one configured experiment and persist its artifacts.

    Examples
    --------
    >>> from GLB import Experiment
    >>> exp = Experiment('./GLB/default_configs/ground_state_d4.yaml',
    ...                  output_dir='./out')
    >>> manifest = exp.run()
    >>> manifest['blowup']
    False
    """

    def __init__(self, config, kind=None, output_dir=None):
        """
        Parameters
        ----------
        config : ExperimentConfig | dict | str
            Experiment config or anything ExperimentConfig accepts.
        kind : str | None
            Optional override of the experiment kind.
        output_dir : str | None
            Optional override of the output directory.
        """
        if isinstance(config, ExperimentConfig):
            self._config = config
            if kind is not None or output_dir is not None:
                self._config = ExperimentConfig(config.to_dict(), kind=kind,
                                                output_dir=output_dir)
        else:
            self._config = ExperimentConfig(config, kind=kind,
                                            output_dir=output_dir)

        self._out = os.path.abspath(self._config.output_dir)
        self._files = []

    def __repr__(self):
        return 'Experiment({}, out={})'.format(self._config.kind, self._out)

    @property
    def config(self):
        """ExperimentConfig of the run."""
        return self._config

    @property
    def output_dir(self):
        """Absolute output directory."""
        return self._out

    def _path(self, name):
        return os.path.join(self._out, name)

    def _register(self, fp):
        if fp not in self._files:
            self._files.append(fp)

    def run(self):
        """Execute the configured experiment.

        Returns
        -------
        dict
            The written run manifest.
        """
        os.makedirs(self._out, exist_ok=True)
        t0 = time.time()
        logger.info('Running {}'.format(self))
        method = getattr(self, '_run_{}'.format(self._config.kind))
        extra = method()
        manifest = self._manifest(time.time() - t0, **extra)
        logger.info('Finished {} in {:.2f} s'.format(self,
                                                     manifest['wall_time']))

        return manifest

    def _manifest(self, wall_time, **extra):
        files = []
        for fp in sorted(self._files):
            files.append({'path': os.path.relpath(fp, self._out),
                          'sha256': file_checksum(fp)})

        manifest = {'kind': self._config.kind,
                    'config': self._config.to_dict(),
                    'versions': versions(),
                    'wall_time': wall_time,
                    'blowup': False,
                    'files': files}
        manifest.update(extra)
        write_json(manifest, self._path(MANIFEST))

        return manifest

    def _write_series(self, record, mode='w'):
        """Write the trajectory rows, monitors and new snapshots."""
        for name, df in ((TRAJECTORY, record.to_frame()),
                         (MONITORS, record.monitors_frame())):
            write_frame(df, self._path(name), mode=mode)
            self._register(self._path(name))

        for _, fp in record.flush(self._path(SNAPSHOT_DIR)):
            self._register(fp)

    def _write_modulation(self, series, mode='w'):
        if series is None:
            return
        for name, df in ((MODULATION, series.to_frame()),
                         (MODULATION_RATIOS, series.ratio_frame())):
            write_frame(df, self._path(name), mode=mode)
            self._register(self._path(name))

    def _trends(self):
        df = pd.read_csv(self._path(TRAJECTORY))
        trends = {'E': monotone_trend(df['E']),
                  'linf': monotone_trend(df['linf'])}
        mon = pd.read_csv(self._path(MONITORS))
        early = mon.loc[(mon['t'] > 0) & (mon['t'] <= 1), 'smoothing']
        trends['smoothing_sup'] = float(early.max()) if len(early) else 0.0
        if os.path.exists(self._path(MODULATION)):
            mod = pd.read_csv(self._path(MODULATION))
            for col in mod.columns:
                if col.startswith('lambda_'):
                    trends[col] = monotone_trend(mod[col])
        write_json(trends, self._path(TRENDS))
        self._register(self._path(TRENDS))

        return trends

    def _evolve(self, state, record, record_initial=True):
        """Evolve and capture a blow-up signal as a science outcome."""
        cfg = self._config
        flow = cfg.flow

        blowup = None
        try:
            record = evolve(state, flow, cadence=cfg.cadence, record=record,
                            record_initial=record_initial)
            final = record.final_state
        except BlowupError as err:
            logger.warning('Blow-up signal ({}): {}'.format(err.reason, err))
            record = err.record
            final = err.state
            blowup = {'reason': err.reason, 't': final.t}

        return record, final, blowup

    @staticmethod
    def _state_meta(state):
        return {'t': state.t, 'step_count': state.step_count,
                'dissipation_accum': state.dissipation_accum,
                'dt_prev': state.dt_prev, 'dtu_l2': state.dtu_l2,
                'has_history': state.f_prev is not None}

    def _track(self, record, guess=None):
        mod = self._config.modulation
        if not mod['track'] or mod['n_bubbles'] < 1:
            return None

        return track_modulation(record, mod['n_bubbles'], guess=guess,
                                background_alpha=mod['background_alpha'],
                                ortho_tol=mod['ortho_tol'],
                                max_iter=mod['max_iter'],
                                regime=mod['regime'],
                                t_plus=mod.get('t_plus', None))

    @staticmethod
    def _modulation_meta(series):
        if series is None:
            return None
        meta = {'failure_index': series.failure_index,
                'n_fits': len(series)}
        if len(series):
            last = series.results[-1].params
            meta['last_params'] = {'theta': list(last.theta),
                                   'lam': list(last.lam)}
        return meta

    def _run_simulate(self):
        cfg = self._config
        u0 = cfg.initial_field()
        record = TrajectoryRecord(cfg.grid, phase=cfg.flow.phase,
                                  nonlinear=cfg.flow.nonlinear)
        record, final, blowup = self._evolve(FlowState.initial(u0), record)

        self._write_series(record)
        series = self._track(record)
        self._write_modulation(series)
        write_restart(final, self._path(RESTART))
        self._register(self._path(RESTART))
        self._trends()

        return {'blowup': blowup is not None, 'blowup_info': blowup,
                'state': self._state_meta(final),
                'modulation': self._modulation_meta(series)}

    def resume(self, manifest):
        """Continue a simulate run from its restart file up to the
        configured flow end time.

        Parameters
        ----------
        manifest : dict
            Manifest of the run being continued, written in output_dir.

        Returns
        -------
        dict
            The updated manifest.
        """
        t0 = time.time()
        cfg = self._config
        restart = self._path(RESTART)
        entries = {f['path']: f['sha256'] for f in manifest['files']}
        if RESTART not in entries or not os.path.exists(restart):
            msg = 'Restart file missing for resume: {}'.format(restart)
            logger.error(msg)
            raise FileNotFoundError(msg)

        if file_checksum(restart) != entries[RESTART]:
            msg = 'Restart file checksum mismatch: {}'.format(restart)
            logger.error(msg)
            raise ConfigurationError(msg)

        state = read_restart(restart, cfg.grid, manifest['state'])
        t_end = cfg.flow.t_end
        self._files = [os.path.join(self._out, p) for p in entries]

        if t_end - state.t <= 1e-9 * cfg.flow.dt or manifest.get('blowup'):
            logger.info('Nothing to resume at t={}'.format(state.t))
            return manifest

        record = TrajectoryRecord(cfg.grid, phase=cfg.flow.phase,
                                  nonlinear=cfg.flow.nonlinear)
        record, final, blowup = self._evolve(state, record,
                                             record_initial=False)

        self._write_series(record, mode='a')
        guess = None
        last = (manifest.get('modulation') or {}).get('last_params')
        if last:
            guess = BubbleParams(last['theta'], last['lam'])
        series = self._track(record, guess=guess) if len(record) else None
        self._write_modulation(series, mode='a')
        write_restart(final, self._path(RESTART))
        self._trends()

        return self._manifest(manifest.get('wall_time', 0.0)
                              + time.time() - t0,
                              blowup=blowup is not None, blowup_info=blowup,
                              state=self._state_meta(final),
                              modulation=self._modulation_meta(series)
                              or manifest.get('modulation'))

    def _decompose_field(self):
        sec = self._config.decompose
        if sec['field'] is not None:
            return read_field(sec['field'], self._config.grid, label='u')
        return self._config.initial_field()

    def _run_decompose(self):
        cfg = self._config
        sec = cfg.decompose
        u = self._decompose_field()
        N = int(sec['n_bubbles'])
        regime = cfg.regime('decompose')
        out = {'N': N, 'regime': regime.to_dict(),
               'energy': energy(u).to_dict(), 'norm_E': energy_norm(u),
               'detected': [{'theta': p.theta[0], 'lam': p.lam[0]}
                            for p in detect_bubbles(u)]}

        prox = proximity_d(u, N, regime, n_random=sec['n_random'],
                           seed=cfg.seed)
        out['proximity_d'] = prox.to_dict()

        if N >= 1:
            try:
                res = fit_decomposition(u, N, prox.argmin_params,
                                        regime=regime)
                out['fit'] = res.to_dict()
                out['bound_sandwich'] = bound_sandwich(
                    res, u, n_random=sec['n_random'], seed=cfg.seed)
            except FitError as e:
                logger.warning('Decomposition fit failed: {}'.format(e))
                out['fit'] = {'converged': False, 'error': str(e)}

        if sec['rho'] is not None:
            K = int(sec['K'])
            prox_k = proximity_dK(u, N, K, sec['rho'], regime,
                                  n_random=sec['n_random'], seed=cfg.seed)
            out['proximity_dK'] = prox_k.to_dict()

        if sec['window_R'] is not None:
            value, best_M, params = delta_R(u, sec['window_R'], sec['m_max'],
                                            n_random=sec['n_random'],
                                            seed=cfg.seed)
            out['delta_R'] = {'value': value, 'best_M': best_M,
                              'theta': list(params.theta),
                              'lambda': list(params.lam),
                              'R': sec['window_R']}

        fp = self._path('decomposition.json')
        write_json(out, fp)
        self._register(fp)

        return {}

    def _run_spectrum(self):
        cfg = self._config
        grid = cfg.grid
        k = int(cfg.spectrum['k'])
        out = {'spectra': spectrum_report(grid, k=k)}
        ground = eigen_ground('plus', 1, grid)[0]
        try:
            out['test_profiles'] = build_test_profiles(grid, ground).to_dict()
        except GLBError as e:
            logger.warning('Test profile construction failed: {}'.format(e))
            out['test_profiles'] = {'error': str(e)}

        if cfg.spectrum['y1y2']:
            out['y1y2'] = solve_Y1Y2(grid).to_dict()

        fp = self._path('spectrum.json')
        write_json(out, fp)
        self._register(fp)

        return {}

    def _run_verify(self):
        cfg = self._config
        sec = cfg.verify
        results = run_checks(seed=cfg.seed, n_random=sec['n_random'],
                             quick=sec['quick'])
        passed = all(r.passed for r in results)
        out = {'passed': passed, 'seed': cfg.seed,
               'checks': [r.to_dict() for r in results]}
        fp = self._path('verify.json')
        write_json(out, fp)
        self._register(fp)

        return {'verify_passed': passed}


def run(config, kind=None, output_dir=None):
    """Run an experiment and map the outcome to an exit code.

    Returns
    -------
    int
        0 on success (including a blow-up signal), 1 on internal errors or
        failed verification, 2 on validation errors.
    """
    try:
        manifest = Experiment(config, kind=kind, output_dir=output_dir).run()
    except VALIDATION_ERRORS as e:
        logger.error('Validation error: {}'.format(e))
        return EXIT_VALIDATION
    except Exception:
        logger.exception('Internal error while running experiment')
        return EXIT_INTERNAL

    if manifest['kind'] == 'verify' and not manifest['verify_passed']:
        return EXIT_INTERNAL

    return EXIT_OK


def load_manifest(fp):
    """Read a run manifest, validation errors for missing or corrupt
    files."""
    if not os.path.exists(fp):
        msg = 'Manifest not found: {}'.format(fp)
        logger.error(msg)
        raise FileNotFoundError(msg)

    try:
        with open(fp, 'r') as f:
            manifest = json.load(f)
    except ValueError as e:
        msg = 'Corrupt manifest: {}'.format(fp)
        logger.exception(msg)
        raise ConfigurationError(msg) from e

    missing = [k for k in ('kind', 'config', 'files', 'state')
               if k not in manifest]
    if missing or manifest['kind'] != 'simulate':
        msg = ('Manifest {} is not a resumable simulate manifest (missing '
               '{})'.format(fp, missing))
        logger.error(msg)
        raise ConfigurationError(msg)

    return manifest


def resume(manifest_fp, t_end=None):
    """Resume a simulate run from its manifest.

    Parameters
    ----------
    manifest_fp : str
        Path to manifest.json of a simulate run.
    t_end : float | None
        New end time, defaults to the end time recorded in the manifest.

    Returns
    -------
    int
        Exit code, 2 for a missing or corrupt manifest or restart file.
    """
    try:
        manifest = load_manifest(manifest_fp)
        config = copy.deepcopy(manifest['config'])
        if t_end is not None:
            config['flow']['t_end'] = float(t_end)
        out_dir = os.path.dirname(os.path.abspath(manifest_fp))
        Experiment(config, output_dir=out_dir).resume(manifest)
    except VALIDATION_ERRORS as e:
        logger.error('Validation error: {}'.format(e))
        return EXIT_VALIDATION
    except Exception:
        logger.exception('Internal error while resuming')
        return EXIT_INTERNAL

    return EXIT_OK


