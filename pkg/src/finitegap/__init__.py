"""Orthogonal polynomials, Jacobi matrices and potential theory on finite-gap sets."""

from .asymptotics import build_report, frequency_vector, widom_factors
from .intervals import CantorSpec, IntervalSet, homogeneity_eta, make_cantor, sodin_criterion
from .jacobi import JacobiCoefficients, jacobi_coefficients
from .measures import SpectralMeasure, StieltjesFunction, build_measure, make_sigma0
from .potential import EquilibriumData, equilibrium, green_infinity, green_two_point

__version__ = "0.1.0"

__all__ = [
    "CantorSpec",
    "EquilibriumData",
    "IntervalSet",
    "JacobiCoefficients",
    "SpectralMeasure",
    "StieltjesFunction",
    "build_measure",
    "build_report",
    "equilibrium",
    "frequency_vector",
    "green_infinity",
    "green_two_point",
    "homogeneity_eta",
    "jacobi_coefficients",
    "make_cantor",
    "make_sigma0",
    "sodin_criterion",
    "widom_factors",
]
