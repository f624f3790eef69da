"""Simulation, scheduling and teleoperation stack for an offshore off-grid
power-to-methanol platform."""

__version__ = "0.1.0"
