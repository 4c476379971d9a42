# -*- coding: utf-8 -*-
"""
Numerical core: grids, ground states, flow, energy, linearization and
modulation.
"""
