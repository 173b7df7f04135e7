"""Weighted sigma_k-curvature calculus of smooth metric measure spaces."""

from .geometry import ModelKind, RotSymStructure, build_model, einstein_scale, generic_structure
from .newton import MatrixState, newton_gap, newton_scalar, newton_transform
from .solver import FlowMode, FlowState, flow_solve, obata_certificate, rayleigh_inf, sobolev_scan, yk_solve
from .wsym import Method, RationalFunctionM, WeightedSpectrum, sigma_km

__version__ = "0.1.0"

__all__ = [
    "FlowMode", "FlowState", "MatrixState", "Method", "ModelKind", "RationalFunctionM", "RotSymStructure",
    "WeightedSpectrum", "build_model", "einstein_scale", "flow_solve", "generic_structure", "newton_gap",
    "newton_scalar", "newton_transform", "obata_certificate", "rayleigh_inf", "sigma_km", "sobolev_scan",
    "yk_solve",
]
