"""Homogeneous symbols and their quantization on periodic grids."""
from .apply import (
    MultiplierSymbol, SeparableSymbol, available_backends, backend, expand_polynomial,
    quantize_apply, set_backend,
)
from .grid import GridSpec
from .io import load_grid_function, save_grid_function
from .s0 import S0TestFunction, hole_radius, make_s0
from .symbols import (
    FullSymbol, FunctionSymbol, HomogeneousSymbol, PolynomialSymbol, RadialProfile,
    model_full_symbols, pseudo_norm_xi, sublaplacian_symbol,
)
from .verify import VerifyReport, refinement_study, relative_error, verify_inverse

__all__ = [
    "GridSpec", "S0TestFunction", "make_s0", "hole_radius", "quantize_apply", "SeparableSymbol",
    "MultiplierSymbol", "expand_polynomial", "backend", "set_backend", "available_backends",
    "HomogeneousSymbol", "FunctionSymbol", "PolynomialSymbol", "RadialProfile", "FullSymbol",
    "model_full_symbols", "pseudo_norm_xi", "sublaplacian_symbol", "VerifyReport", "verify_inverse",
    "refinement_study", "relative_error", "save_grid_function", "load_grid_function",
]
