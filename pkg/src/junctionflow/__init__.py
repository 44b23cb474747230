"""Curvature flow of triple-junction curve and sheet clusters over a fixed reference."""

from .errors import (
    BadMesh,
    ConfigError,
    DegenerateTensions,
    DomainError,
    FoldOver,
    JunctionFlowError,
    OrientationFailure,
    PicardDiverged,
    ShapeMismatch,
    SingularCoupling,
    SingularSystem,
    SupportOverlap,
    Violation,
)
from .weights import AngleWeights, derive_angles, weights_from_angles
from .geometry import (
    DiscreteChart,
    Junction,
    ReferenceCluster,
    build_reference,
    build_tau,
    geometric_fields,
    make_double_bubble,
    make_from_node_table,
    make_loop,
    make_prism,
    make_triod,
    min_spacing,
    project_to_junction,
    rebuild_reference,
    validate_cluster,
)
from .attachment import (
    JunctionCoupling,
    build_coupling,
    make_coupling,
    mu_from_rho,
    verify_attachment,
)
from .shape import (
    HeightState,
    ShapeQuantities,
    angle_residuals,
    check_compatibility,
    energy,
    evaluate_phi,
    height_rate,
    junction_rotation_defects,
    make_state,
    shape_quantities,
)
from .linear import (
    EigenSystem,
    JunctionOperator,
    LinearJunctionSystem,
    assemble,
    boundary_values,
    build_operator,
    linearization_sweep,
    solve_eigen,
    solve_step,
    weak_residual,
)
from .flow import (
    FlowConfig,
    FlowResult,
    FlowStatus,
    PicardInfo,
    advance,
    default_dt,
    default_reref_threshold,
    dissipation_rate,
    enclosed_areas,
    picard_step,
    re_reference,
    run,
)
from .symbols import (
    SymbolSample,
    ansatz_boundary_matrix,
    check_grid,
    decay_rates,
    ls_determinant,
    make_sample,
    ode_energy_check,
    roots,
    singular_floor,
)

__version__ = "0.1.0"

__all__ = [
    "AngleWeights",
    "BadMesh",
    "ConfigError",
    "DegenerateTensions",
    "DiscreteChart",
    "DomainError",
    "EigenSystem",
    "FlowConfig",
    "FlowResult",
    "FlowStatus",
    "FoldOver",
    "HeightState",
    "Junction",
    "JunctionCoupling",
    "JunctionFlowError",
    "JunctionOperator",
    "LinearJunctionSystem",
    "OrientationFailure",
    "PicardDiverged",
    "PicardInfo",
    "ReferenceCluster",
    "ShapeMismatch",
    "ShapeQuantities",
    "SingularCoupling",
    "SingularSystem",
    "SupportOverlap",
    "SymbolSample",
    "Violation",
    "advance",
    "angle_residuals",
    "ansatz_boundary_matrix",
    "assemble",
    "boundary_values",
    "build_coupling",
    "build_operator",
    "build_reference",
    "build_tau",
    "check_compatibility",
    "check_grid",
    "decay_rates",
    "default_dt",
    "default_reref_threshold",
    "derive_angles",
    "dissipation_rate",
    "enclosed_areas",
    "energy",
    "evaluate_phi",
    "geometric_fields",
    "height_rate",
    "junction_rotation_defects",
    "linearization_sweep",
    "ls_determinant",
    "make_coupling",
    "make_double_bubble",
    "make_from_node_table",
    "make_loop",
    "make_prism",
    "make_sample",
    "make_state",
    "make_triod",
    "min_spacing",
    "mu_from_rho",
    "ode_energy_check",
    "picard_step",
    "project_to_junction",
    "re_reference",
    "rebuild_reference",
    "roots",
    "run",
    "shape_quantities",
    "singular_floor",
    "solve_eigen",
    "solve_step",
    "validate_cluster",
    "verify_attachment",
    "weak_residual",
]
