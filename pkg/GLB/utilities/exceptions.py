# -*- coding: utf-8 -*-
"""
Custom exceptions and warnings for GLB.

Every error subclasses the builtin that a caller would otherwise expect
(ValueError for bad inputs, RuntimeError for numerical failures) so that
generic handlers keep working.
"""


class GLBError(Exception):
    """Root of all GLB errors."""


class GLBWarning(UserWarning):
    """Warning for recoverable numerical conditions (e.g. unresolved
    bubble scales)."""


class ConfigurationError(GLBError, ValueError):
    """Invalid grid, window, or experiment configuration."""


class DimensionError(GLBError, ValueError):
    """Fields living on different grids or dimensions were combined."""


class SpectralError(GLBError, RuntimeError):
    """Eigen-solver failure.

    Parameters
    ----------
    msg : str
        Error message.
    residual : float | None
        Residual of the last iterate if available.
    """

    def __init__(self, msg, residual=None):
        super().__init__(msg)
        self.residual = residual


class FitError(GLBError, RuntimeError):
    """Modulation fit failure.

    Parameters
    ----------
    msg : str
        Error message.
    params : GLB.core.ground_state.BubbleParams | None
        Last Newton iterate.
    residuals : np.ndarray | None
        Orthogonality residuals at the last iterate.
    """

    def __init__(self, msg, params=None, residuals=None):
        super().__init__(msg)
        self.params = params
        self.residuals = residuals


class ConstructionError(GLBError, RuntimeError):
    """Test profile construction could not satisfy its certificates."""

    def __init__(self, msg, certs=None):
        super().__init__(msg)
        self.certs = certs


class DiagnosticError(GLBError, RuntimeError):
    """A diagnostic was requested on insufficient data."""


class BlowupError(GLBError, RuntimeError):
    """Numerical blow-up signal.

    Parameters
    ----------
    msg : str
        Error message.
    state : GLB.core.dynamics.FlowState
        Last finite state before the stop condition triggered.
    reason : str
        One of "nonfinite", "linf_ceiling", "scale_floor".
    record : GLB.handlers.trajectory.TrajectoryRecord | None
        Trajectory accumulated up to the signal (attached by evolve).
    """

    def __init__(self, msg, state=None, reason=None, record=None):
        super().__init__(msg)
        self.state = state
        self.reason = reason
        self.record = record
