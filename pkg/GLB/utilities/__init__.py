# -*- coding: utf-8 -*-
"""
GLB utilities
"""
from .utilities import cutoff, cutoff_derivative, init_logger
from .exceptions import (GLBError, GLBWarning, ConfigurationError,
                         DimensionError, SpectralError, FitError,
                         ConstructionError, DiagnosticError, BlowupError)
