"""Kinetic Langevin dynamics driven by rotationally invariant alpha-stable noise.

Numerical operators for the fractional Laplacian and Riesz potentials, the
friction force that makes the product Gibbs measure invariant, generator
identities, Poincare constants, hypocoercive rate certificates and
Euler-Maruyama ensembles.
"""
__version__ = "0.1.0"

from .errors import (FracLangevinError, HypothesisError, IntegrabilityError, NumericalError,
                     QuadratureError, StatisticalTestError, ValidationError)
from .model import ModelSpec, PotentialPair, build_model, standard_model
from .quadrature import DEFAULT_QUAD, QuadratureSpec

__all__ = [
    "FracLangevinError", "HypothesisError", "IntegrabilityError", "NumericalError",
    "QuadratureError", "StatisticalTestError", "ValidationError",
    "ModelSpec", "PotentialPair", "build_model", "standard_model",
    "DEFAULT_QUAD", "QuadratureSpec", "__version__",
]
