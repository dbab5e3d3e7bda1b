"""Heisenberg-calculus toolkit: Levi forms and tangent groups of Heisenberg
frames, hypoellipticity conditions for sublaplacians and related operators,
and numerical inverse symbols verified on grids."""
from .errors import (
    CapabilityError, ConditionFailure, ConvergenceError, DomainError, HeiscalcError, InputError,
)
from .geometry import (
    HFrame, LeviData, frame_from_strings, heisenberg_chart, levi_from_matrix, levi_matrix,
    load_frame, model_frame, privileged_chart,
)
from .hypocheck import (
    ConditionReport, CRSignature, SublaplacianData, check_sublaplacian, rockland_sublaplacian,
    singular_set,
)
from .parametrix import ParametrixEngine, build_parametrix_symbol
from .tangentgroup import TangentGroup, tangent_group

__version__ = "0.1.0"

__all__ = [
    "__version__", "HeiscalcError", "InputError", "DomainError", "CapabilityError",
    "ConditionFailure", "ConvergenceError", "HFrame", "LeviData", "frame_from_strings",
    "load_frame", "levi_matrix", "levi_from_matrix", "model_frame", "privileged_chart",
    "heisenberg_chart", "ConditionReport", "CRSignature", "SublaplacianData", "singular_set",
    "check_sublaplacian", "rockland_sublaplacian", "ParametrixEngine", "build_parametrix_symbol",
    "TangentGroup", "tangent_group",
]
