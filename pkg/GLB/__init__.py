# -*- coding: utf-8 -*-
"""
GLB: a numerical lab for the radial energy-critical Ginzburg-Landau flow.
"""
from GLB.utilities.utilities import GLB_DIR, GLB_CONFIG_DIR
from GLB.version import __version__
from GLB.core.radial import RadialGrid, RadialField, make_grid
from GLB.core.ground_state import BubbleParams, bubble, multi_bubble
from GLB.core.dynamics import FlowConfig, FlowState, evolve
from GLB.core.energy import energy, localized_energy_balance
from GLB.core.linearized import (eigen_ground, solve_Y1Y2,
                                 build_test_profiles)
from GLB.core.modulation import (fit_decomposition, proximity_d,
                                 detect_bubbles)
from GLB.handlers.config import ExperimentConfig
from GLB.handlers.trajectory import TrajectoryRecord
from GLB.handlers.experiment import Experiment
