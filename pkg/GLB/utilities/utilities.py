# -*- coding: utf-8 -*-
"""
GLB utilities module.
"""
import hashlib
import logging
import os

import numpy as np
from scipy.special import expit

from GLB.utilities.exceptions import ConfigurationError


GLB_DIR = os.path.dirname(os.path.dirname(os.path.dirname(
    os.path.realpath(__file__))))
GLB_DIR = os.path.join(GLB_DIR, 'GLB/')
GLB_CONFIG_DIR = os.path.join(GLB_DIR, 'default_configs/')

FLOAT_FORMAT = '%.17g'
LOG_FORMAT = '%(levelname)s - %(asctime)s [%(filename)s:%(lineno)d] : '

logger = logging.getLogger(__name__)


def init_logger(level='INFO', name='GLB'):
    """Attach a stream handler to the GLB package logger.

    Parameters
    ----------
    level : str
        Logging level name.
    name : str
        Logger name to configure.

    Returns
    -------
    log : logging.Logger
        Configured logger.
    """
    log = logging.getLogger(name)
    log.setLevel(level.upper())
    if not any(getattr(h, '_glb_handler', False) for h in log.handlers):
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(LOG_FORMAT + '%(message)s'))
        handler._glb_handler = True
        log.addHandler(handler)

    return log


def _transition(x):
    """Smooth step from 1 (x <= 0) to 0 (x >= 1)."""
    x = np.clip(x, 1e-300, 1 - 1e-16)
    return 1.0 - expit(1.0 / (1.0 - x) - 1.0 / x)


def cutoff(r, R=1.0):
    """Smooth radial cutoff chi(r / R).

    chi equals 1 on [0, 1], vanishes on [2, inf) and is C-infinity in
    between.

    Parameters
    ----------
    r : float | np.ndarray
        Radii.
    R : float
        Cutoff scale.

    Returns
    -------
    out : np.ndarray
        chi(r / R) with the same shape as r.
    """
    s = np.asarray(r, dtype=float) / R
    out = _transition(s - 1.0)
    out = np.where(s <= 1.0, 1.0, out)
    out = np.where(s >= 2.0, 0.0, out)

    return out


def cutoff_derivative(r, R=1.0):
    """Radial derivative d/dr [chi(r / R)].

    Parameters
    ----------
    r : float | np.ndarray
        Radii.
    R : float
        Cutoff scale.

    Returns
    -------
    out : np.ndarray
        Derivative values, zero outside (R, 2R).
    """
    s = np.asarray(r, dtype=float) / R
    x = np.clip(s - 1.0, 1e-3, 1 - 1e-3)
    psi = 1.0 - _transition(x)
    with np.errstate(over='ignore', invalid='ignore'):
        dpsi = psi * (1.0 - psi) * (1.0 / x**2 + 1.0 / (1.0 - x)**2)

    inside = (s > 1.0 + 1e-3) & (s < 2.0 - 1e-3)
    out = np.where(inside, -dpsi / R, 0.0)

    return out


def get_thread_count(default=1):
    """Worker thread cap from the GLB_THREADS environment variable.

    Parameters
    ----------
    default : int
        Value used when the variable is unset.

    Returns
    -------
    n : int
        Positive number of worker threads.
    """
    value = os.environ.get('GLB_THREADS', None)
    if value is None:
        return default

    try:
        n = int(value)
    except ValueError as e:
        msg = 'GLB_THREADS must be a positive integer but got: {}'.format(
            value)
        logger.exception(msg)
        raise ConfigurationError(msg) from e

    if n < 1:
        msg = 'GLB_THREADS must be a positive integer but got: {}'.format(n)
        logger.error(msg)
        raise ConfigurationError(msg)

    return n


def file_checksum(fp, block_size=2**16):
    """sha256 hex digest of a file on disk."""
    sha = hashlib.sha256()
    with open(fp, 'rb') as f:
        for block in iter(lambda: f.read(block_size), b''):
            sha.update(block)

    return sha.hexdigest()


def write_frame(df, fp, mode='w'):
    """Write a DataFrame to csv with full float precision.

    Parameters
    ----------
    df : pd.DataFrame
        Table to write, index is not written.
    fp : str
        Target csv file path.
    mode : str
        "w" to overwrite (header written) or "a" to append rows only.
    """
    header = mode == 'w' or not os.path.exists(fp)
    df.to_csv(fp, mode=mode, index=False, header=header,
              float_format=FLOAT_FORMAT)
