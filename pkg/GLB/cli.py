# -*- coding: utf-8 -*-
"""
GLB command line interface.
"""
import logging
import sys

import click

from GLB.handlers.config import ExperimentConfig
from GLB.handlers.experiment import EXIT_VALIDATION, resume, run
from GLB.utilities.exceptions import ConfigurationError
from GLB.utilities.utilities import init_logger
from GLB.version import __version__

logger = logging.getLogger(__name__)


@click.group()
@click.version_option(version=__version__)
@click.option('--verbose', '-v', is_flag=True,
              help='Flag to turn on debug logging.')
@click.pass_context
def main(ctx, verbose):
    """Radial energy-critical Ginzburg-Landau numerical lab."""
    ctx.ensure_object(dict)
    ctx.obj['VERBOSE'] = verbose
    init_logger(level='DEBUG' if verbose else 'INFO')


def _config_option(required=True):
    return click.option('--config', '-c', 'config',
                        type=click.Path(), required=required,
                        help='Experiment config file (.yaml, .json, .toml).')


_out_option = click.option('--out', '-o', 'out', type=click.Path(),
                           default=None,
                           help='Output directory, overrides the config.')


def _run(kind, config, out):
    code = run(config, kind=kind, output_dir=out)
    logger.debug('{} finished with exit code {}'.format(kind, code))
    sys.exit(code)


@main.command()
@_config_option(required=False)
@_out_option
@click.option('--resume', '-r', 'manifest', type=click.Path(), default=None,
              help='Manifest of a simulate run to continue. The end time is '
              'taken from --config when given.')
def simulate(config, out, manifest):
    """Evolve initial data and record the trajectory."""
    if manifest is not None:
        t_end = None
        if config is not None:
            try:
                t_end = ExperimentConfig(config).flow.t_end
            except (ConfigurationError, FileNotFoundError) as e:
                logger.error('Invalid config for resume: {}'.format(e))
                sys.exit(EXIT_VALIDATION)
        sys.exit(resume(manifest, t_end=t_end))

    if config is None:
        logger.error('simulate needs --config or --resume')
        sys.exit(EXIT_VALIDATION)

    _run('simulate', config, out)


@main.command()
@_config_option()
@_out_option
def decompose(config, out):
    """Fit bubble configurations and evaluate proximity functions."""
    _run('decompose', config, out)


@main.command()
@_config_option()
@_out_option
def spectrum(config, out):
    """Low spectrum of the linearized operators and test profiles."""
    _run('spectrum', config, out)


@main.command()
@_config_option(required=False)
@_out_option
def verify(config, out):
    """Run the invariant suite, exit 0 iff every check passes."""
    config = {} if config is None else config
    _run('verify', config, out)


if __name__ == '__main__':
    main(obj={})
