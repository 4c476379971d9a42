# -*- coding: utf-8 -*-
"""
GLB experiment config framework.
"""
import copy
import json
import logging
import os

import numpy as np
import yaml

from GLB.core.dynamics import FlowConfig
from GLB.core.ground_state import BubbleParams, multi_bubble, w_profile
from GLB.core.modulation import Regime
from GLB.core.radial import RadialField, make_grid, read_field
from GLB.utilities.exceptions import ConfigurationError
from GLB.utilities.utilities import GLB_CONFIG_DIR

try:
    import tomllib
except ImportError:  # pragma: no cover
    import tomli as tomllib

logger = logging.getLogger(__name__)


class ExperimentConfig:
    """Config framework for GLB experiments.

    Examples
    --------
    The ExperimentConfig object can be instantiated from a yaml, json or
    toml file or from a python dictionary. Every section is merged on top of
    the shipped defaults in GLB/default_configs/defaults.yaml, except
    initial_data which replaces the default entirely.

    >>> from GLB import ExperimentConfig
    >>> cfg = ExperimentConfig({'kind': 'simulate',
    ...                         'grid': {'dimension': 4, 'n_nodes': 512},
    ...                         'flow': {'t_end': 0.5}})
    >>> cfg.kind
    'simulate'
    >>> cfg.grid
    RadialGrid(D=4, M=512, r=[0.001, 100], stretch=geometric, bc=harmonic)
    >>> cfg.flow.t_end
    0.5

    String values of the form "./other_config.yaml::key" are config
    pointers and are replaced by the value of key in the referenced file,
    resolved relative to the referencing config file.
    """

    DEFAULT_CONFIG = os.path.join(GLB_CONFIG_DIR, 'defaults.yaml')
    KINDS = ('simulate', 'decompose', 'spectrum', 'verify')
    SECTIONS = ('grid', 'flow', 'initial_data', 'modulation', 'spectrum',
                'decompose', 'verify')
    SCALARS = ('kind', 'seed', 'cadence', 'output_dir')
    REPLACE_SECTIONS = ('initial_data',)
    INITIAL_DATA_KEYS = {'bubbles': ('theta', 'lam'),
                         'scaled_ground_state': ('delta', 'theta', 'lam'),
                         'gaussian': ('sigma', 'amplitude'),
                         'file': ('path',)}
    FILE_MARKERS = ('.json', '.yaml', '.yml', '.toml')

    def __init__(self, config, kind=None, output_dir=None):
        """
        Parameters
        ----------
        config : dict | str
            Experiment config as a dictionary or a path to a yaml, json or
            toml file.
        kind : str | None
            Optional override of the experiment kind.
        output_dir : str | None
            Optional override of the output directory.
        """
        raw, self._config_dir = self._load_config(config)
        defaults, _ = self._load_config(self.DEFAULT_CONFIG)
        self._config = self._merge(defaults, raw)

        if kind is not None:
            self._config['kind'] = kind
        if output_dir is not None:
            self._config['output_dir'] = output_dir

        self._check()
        self._grid = None
        self._flow = FlowConfig(**self._config['flow'])

    def __repr__(self):
        return 'ExperimentConfig(kind={}, grid={}, output_dir={})'.format(
            self.kind, self._config['grid'], self.output_dir)

    def __getitem__(self, key):
        return self._config[key]

    def __contains__(self, key):
        return key in self._config

    @classmethod
    def _read_file(cls, fp):
        """Parse a yaml, json or toml file into a python object."""
        if fp.endswith('.json'):
            with open(fp, 'r') as f:
                return json.load(f)

        if fp.endswith(('.yml', '.yaml')):
            with open(fp, 'r') as f:
                return yaml.safe_load(f)

        if fp.endswith('.toml'):
            with open(fp, 'rb') as f:
                return tomllib.load(f)

        msg = ('Cannot load file path, must be json, yaml or toml: {}'
               .format(fp))
        logger.error(msg)
        raise ConfigurationError(msg)

    @classmethod
    def _load_config(cls, config):
        """Load a config dictionary from filepath.

        Parameters
        ----------
        config : dict | str
            GLB config input. Can be a string filepath to a json, yaml or
            toml file or an extracted dictionary.

        Returns
        -------
        config : dict
            Loaded config dictionary with resolved config pointers.
        config_dir : str | None
            Directory of the config file, None for dictionary input.
        """
        config_dir = None

        if isinstance(config, str):
            if not os.path.exists(config):
                msg = 'Cannot find config file path: {}'.format(config)
                logger.error(msg)
                raise ConfigurationError(msg)

            config_dir = os.path.dirname(os.path.abspath(config))
            config = cls._read_file(config)

        if not isinstance(config, dict):
            msg = 'Cannot use config of type: {}'.format(type(config))
            logger.error(msg)
            raise ConfigurationError(msg)

        config = cls._resolve_pointers(copy.deepcopy(config), config_dir)

        return config, config_dir

    @classmethod
    def _resolve_pointers(cls, config, config_dir):
        """Replace "./file.yaml::key" values anywhere in a nested dict."""
        for key, value in config.items():
            if isinstance(value, dict):
                config[key] = cls._resolve_pointers(value, config_dir)

            elif (isinstance(value, str) and '::' in value
                    and any(m in value for m in cls.FILE_MARKERS)):
                if config_dir is None:
                    msg = ('Cannot do a config pointer without the original '
                           'config being input from a filepath: {}'
                           .format(value))
                    logger.error(msg)
                    raise ConfigurationError(msg)

                if value.count('::') != 1:
                    msg = ('Config pointer to other config must be of the '
                           'format "./other_config.yaml::retrieval_key" but '
                           'received: {}'.format(value))
                    logger.error(msg)
                    raise ConfigurationError(msg)

                fp_other, _, other_key = value.partition('::')
                fp_other = os.path.join(config_dir, fp_other)
                if not os.path.exists(fp_other):
                    msg = 'Config pointer file not found: {}'.format(fp_other)
                    logger.error(msg)
                    raise ConfigurationError(msg)

                other = cls._load_config(fp_other)[0]
                if other_key not in other:
                    msg = ('Config pointer key "{}" not found in {}'
                           .format(other_key, fp_other))
                    logger.error(msg)
                    raise ConfigurationError(msg)

                config[key] = other[other_key]

        return config

    @classmethod
    def _merge(cls, defaults, config):
        """Merge a user config on top of the defaults section by section."""
        unknown = [k for k in config
                   if k not in cls.SCALARS and k not in cls.SECTIONS]
        if unknown:
            msg = 'Unknown config keys: {}'.format(unknown)
            logger.error(msg)
            raise ConfigurationError(msg)

        out = copy.deepcopy(defaults)
        for key, value in config.items():
            if key in cls.SECTIONS and key not in cls.REPLACE_SECTIONS:
                if not isinstance(value, dict):
                    msg = 'Config section "{}" must be a mapping: {}'.format(
                        key, value)
                    logger.error(msg)
                    raise ConfigurationError(msg)

                bad = [k for k in value if k not in out[key]]
                if bad:
                    msg = 'Unknown keys in config section "{}": {}'.format(
                        key, bad)
                    logger.error(msg)
                    raise ConfigurationError(msg)

                out[key].update(value)
            else:
                out[key] = copy.deepcopy(value)

        return out

    def _abs_path(self, fp):
        if os.path.isabs(fp) or self._config_dir is None:
            return fp
        return os.path.normpath(os.path.join(self._config_dir, fp))

    def _check(self):
        """Validate the merged config at parse time."""
        cfg = self._config
        if cfg['kind'] not in self.KINDS:
            msg = 'Experiment kind must be one of {} but received: {}'.format(
                self.KINDS, cfg['kind'])
            logger.error(msg)
            raise ConfigurationError(msg)

        cadence = cfg['cadence']
        if isinstance(cadence, bool) or int(cadence) != cadence or cadence < 1:
            msg = 'Cadence must be an integer >= 1 but received: {}'.format(
                cadence)
            logger.error(msg)
            raise ConfigurationError(msg)

        init = cfg['initial_data']
        if not isinstance(init, dict) or init.get('kind') not in \
                self.INITIAL_DATA_KEYS:
            msg = ('initial_data must be a mapping with kind in {} but '
                   'received: {}'.format(list(self.INITIAL_DATA_KEYS), init))
            logger.error(msg)
            raise ConfigurationError(msg)

        allowed = self.INITIAL_DATA_KEYS[init['kind']]
        bad = [k for k in init if k != 'kind' and k not in allowed]
        if bad:
            msg = 'Unknown keys for initial_data kind "{}": {}'.format(
                init['kind'], bad)
            logger.error(msg)
            raise ConfigurationError(msg)

        for section, key in (('initial_data', 'path'), ('decompose', 'field')):
            fp = cfg[section].get(key, None)
            if section == 'initial_data' and init['kind'] != 'file':
                continue
            if fp is None and section == 'initial_data':
                msg = 'initial_data of kind "file" needs a path.'
                logger.error(msg)
                raise ConfigurationError(msg)
            if fp is not None:
                fp = self._abs_path(fp)
                if not os.path.exists(fp):
                    msg = 'Referenced file not found: {}'.format(fp)
                    logger.error(msg)
                    raise ConfigurationError(msg)
                cfg[section][key] = fp

        for section in ('modulation', 'decompose'):
            regime = cfg[section]['regime']
            if regime not in Regime.KINDS:
                msg = ('Regime in section "{}" must be one of {} but '
                       'received: {}'.format(section, Regime.KINDS, regime))
                logger.error(msg)
                raise ConfigurationError(msg)

        mod = cfg['modulation']
        t_plus = mod.get('t_plus', None)
        if mod['regime'] == 'blowup' and not (t_plus is not None
                                              and t_plus > 0):
            msg = ('Tracking in the blow-up regime needs '
                   'modulation.t_plus > 0 but received: {}'.format(t_plus))
            logger.error(msg)
            raise ConfigurationError(msg)

        if cfg['kind'] == 'decompose' and cfg['decompose']['n_bubbles'] < 0:
            msg = 'decompose.n_bubbles must be >= 0'
            logger.error(msg)
            raise ConfigurationError(msg)

    @property
    def kind(self):
        """Experiment kind."""
        return self._config['kind']

    @property
    def seed(self):
        """Seed of randomized suites."""
        return int(self._config['seed'])

    @property
    def cadence(self):
        """Observer cadence in steps."""
        return int(self._config['cadence'])

    @property
    def output_dir(self):
        """Output directory."""
        return self._config['output_dir']

    @property
    def grid(self):
        """RadialGrid of the experiment, built on first access."""
        if self._grid is None:
            g = self._config['grid']
            self._grid = make_grid(g['dimension'], g['r_min'], g['r_max'],
                                   g['n_nodes'], stretch=g['stretch'],
                                   outer_bc=g['outer_bc'])
        return self._grid

    @property
    def flow(self):
        """FlowConfig of the experiment."""
        return self._flow

    @property
    def modulation(self):
        """Modulation tracking section."""
        return self._config['modulation']

    @property
    def spectrum(self):
        """Spectrum section."""
        return self._config['spectrum']

    @property
    def decompose(self):
        """Decomposition section."""
        return self._config['decompose']

    @property
    def verify(self):
        """Verification suite section."""
        return self._config['verify']

    def regime(self, section='decompose'):
        """Regime object of the modulation or decompose section."""
        sec = self._config[section]
        return Regime(sec['regime'], t=sec.get('t', None),
                      t_plus=sec.get('t_plus', None))

    def initial_field(self, grid=None):
        """Build the initial data on the experiment grid.

        Returns
        -------
        RadialField
        """
        grid = self.grid if grid is None else grid
        init = self._config['initial_data']
        kind = init['kind']
        D = grid.dimension

        if kind == 'bubbles':
            params = BubbleParams(init.get('theta', [0.0]),
                                  init.get('lam', [1.0]))
            u = multi_bubble(params, grid)

        elif kind == 'scaled_ground_state':
            delta = float(init.get('delta', 0.0))
            theta = float(init.get('theta', 0.0))
            lam = float(init.get('lam', 1.0))
            values = ((1 + delta) * np.exp(1j * theta)
                      * lam**(-(D - 2) / 2) * w_profile(D, grid.r / lam))
            u = RadialField(grid, values,
                            label='(1+{})W'.format(delta))

        elif kind == 'gaussian':
            sigma = float(init.get('sigma', 1.0))
            amp = float(init.get('amplitude', 1.0))
            if not sigma > 0:
                msg = 'Gaussian width must be positive: {}'.format(sigma)
                logger.error(msg)
                raise ConfigurationError(msg)
            u = RadialField(grid, amp * np.exp(-grid.r**2 / (4 * sigma)),
                            label='gaussian')

        else:
            u = read_field(init['path'], grid)

        logger.debug('Initial data "{}" on {}'.format(kind, grid))

        return u

    def to_dict(self):
        """Deep copy of the merged config for manifests."""
        return copy.deepcopy(self._config)
