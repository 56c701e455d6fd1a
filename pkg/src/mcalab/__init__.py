"""Reinforcement-learning motion cueing for a 2-DOF (sway + roll) simulator."""
__version__ = "0.1.0"
