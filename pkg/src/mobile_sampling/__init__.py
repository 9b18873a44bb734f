"""Mobile sampling of bandlimited fields: geometry, trajectories and stability checks."""

__version__ = "0.1.0"
