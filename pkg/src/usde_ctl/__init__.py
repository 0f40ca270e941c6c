"""USDE-based motion control of serial manipulators: dynamics, estimator, controllers, simulation."""

__version__ = "0.1.0"
