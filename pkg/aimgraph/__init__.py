"""Graph-based planning and baselines for automated intersection management."""

__all__ = ["__version__"]

__version__ = "0.1.0"
