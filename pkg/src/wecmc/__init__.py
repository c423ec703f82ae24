"""Numerics for the Weierstrass-Enneper system of constant mean curvature surfaces.

Field families, residual verification, immersion and invariants, the reduced
ODE and its elliptic catalog, and a command-line front end.
"""
from .complexcore import DomainGrid, PathPolyline
from .families import FieldSampler
from .verification import VerificationReport, verify_field

__version__ = "0.1.0"

__all__ = ["DomainGrid", "PathPolyline", "FieldSampler", "VerificationReport", "verify_field", "__version__"]
