"""Numerical solvers for the prescribed Hermitian-Yang-Mills equation on flat tori."""

from . import kernels
from .chern import ChernReport, bundle_chern_integrals, bundle_inequality_check, bundle_invariants, kahler_invariants_and_check
from .curvature import (
    BundleData,
    CurvatureField,
    HYMTarget,
    connection_form,
    curvature_from_metric,
    hym_endomorphism,
    hym_residual,
    kahler_curvature_from_potential,
    linearized_apply,
    scalar_line_curvature,
)
from .errors import (
    BracketError,
    ContractError,
    HYMError,
    ObstructionError,
    PositivityError,
    ShapeError,
    SolvabilityError,
)
from .experiments import Q_of_t, build_cusp_profile, counterexample_pipeline, nonexistence_demo
from .geometry import TorusGeometry
from .matrix import MatrixField, OneFormMatrixField, eigen_range, hermitian_project, inverse, product, sqrt
from .solver import (
    SolveOptions,
    SolveReport,
    comparison_check,
    normalize_reference,
    solve_kazdan_warner,
    solve_prescribed,
)

__version__ = "0.1.0"
