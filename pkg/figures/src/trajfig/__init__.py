"""Plots for trajectory CSV artifacts: elongations, configurations,
inputs, and backbone snapshot sequences."""

from .render import PlotSpec, SchemaError, read_backbone, read_trajectory, render

__all__ = ["PlotSpec", "SchemaError", "render", "read_trajectory", "read_backbone"]

__version__ = "0.1.0"
