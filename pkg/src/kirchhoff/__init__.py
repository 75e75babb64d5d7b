"""Numerical toolkit for the Kirchhoff equation -(a int|grad u|^2 + b) Lap u + u = f(x)|u|^{p-2}u."""

from .params import DomainError, PreconditionError, ProblemParams, SolverError

__version__ = "0.1.0"

__all__ = ["ProblemParams", "DomainError", "PreconditionError", "SolverError", "__version__"]
