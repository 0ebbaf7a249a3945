"""Refinable broken bases and their lifting wavelet transforms on nonequispaced knots."""

from .basis import BrokenBasis, build_basis, gram_matrix, hermite_surrogate, moments, project, quadrature_moments
from .errors import (
    BBWError,
    ConditioningError,
    ConfigError,
    DesignError,
    DomainError,
    FactoringError,
    InconsistencyError,
    ShapeError,
    SizeError,
    StructuralError,
)
from .knots import KnotGrid, KnotHierarchy
from .lifting import (
    LiftingScheme,
    design_final_update,
    factor,
    primitive_details,
    split_interior,
    wavelet_functions,
)
from .refinement import RefinementMatrix, refinement_matrix
from .smooth import SmoothFamily, function_from_descriptor
from .transform import CoefficientPyramid, TransformPlan, analyze_function, forward, forward_step, inverse, inverse_step

__all__ = [name for name in dir() if not name.startswith("_")]
