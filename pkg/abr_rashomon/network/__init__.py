"""Bandwidth traces that drive the simulator."""
