"""
Metameric Varifocal Hologram Toolkit

Optimises phase-only holograms under a gaze-contingent metameric loss and
simulates their reconstructions on a phase-only SLM.
"""

__version__ = "1.0.0"
__author__ = "Metameric Varifocal Hologram Toolkit"
