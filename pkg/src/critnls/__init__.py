"""Normalized solutions of the Sobolev-critical Schrodinger equation with a potential.

Local minimizers and mountain-pass solutions of the mass-constrained energy,
numerical certificates for the estimates they satisfy, and the Hopf-Cole map
to ergodic mean field games.
"""
from .kernels import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
