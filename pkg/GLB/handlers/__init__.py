# -*- coding: utf-8 -*-
"""
Handler objects for experiment configs, trajectories and runs.
"""
from GLB.handlers.config import ExperimentConfig
from GLB.handlers.trajectory import TrajectoryRecord
from GLB.handlers.experiment import Experiment
