"""Explore a Rashomon set of classifiers through their partial-dependence profiles."""
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
