"""Population-to-resource ratio of the diffusive logistic equation on the unit ball."""

__version__ = "0.1.0"

from .construction import (  # noqa: E402
    ConstructionParams,
    DomainError,
    ResourceProfile,
    TrianglePoint,
    ball_volume,
    diffusion_rate,
    in_parameter_triangle,
    interior_triangle_point,
    make_resource_profile,
    ratio_lower_bound,
    sphere_area,
    sub_solution_l1_norm,
    sub_solution_laplacian,
    sub_solution_value,
    super_solution_value,
    triangle_slacks,
    triangle_vertices,
)
from .grid import GridError, RadialGrid, build_grid, default_grid  # noqa: E402
from .optimizer import FamilySpec, OptimizationResult, maximize_ratio, sweep_ratio  # noqa: E402
from .solver import (  # noqa: E402
    NonConvergence,
    NonPositiveIterate,
    SolveOptions,
    SolverError,
    SteadySolution,
    StepFailure,
    energy_identity_residual,
    march_to_steady,
    ratio,
    solve_construction,
    solve_steady,
)
from .verification import (  # noqa: E402
    VerificationReport,
    check_energy_identity,
    check_gas,
    check_sandwich,
    check_scaling,
    check_sub_inequality,
    check_super_inequality,
    scaling_fit,
)

__all__ = [
    "ConstructionParams",
    "DomainError",
    "ResourceProfile",
    "TrianglePoint",
    "ball_volume",
    "diffusion_rate",
    "in_parameter_triangle",
    "interior_triangle_point",
    "make_resource_profile",
    "ratio_lower_bound",
    "sphere_area",
    "sub_solution_l1_norm",
    "sub_solution_laplacian",
    "sub_solution_value",
    "super_solution_value",
    "triangle_slacks",
    "triangle_vertices",
    "GridError",
    "RadialGrid",
    "build_grid",
    "default_grid",
    "FamilySpec",
    "OptimizationResult",
    "maximize_ratio",
    "sweep_ratio",
    "NonConvergence",
    "NonPositiveIterate",
    "SolveOptions",
    "SolverError",
    "SteadySolution",
    "StepFailure",
    "energy_identity_residual",
    "march_to_steady",
    "ratio",
    "solve_construction",
    "solve_steady",
    "VerificationReport",
    "check_energy_identity",
    "check_gas",
    "check_sandwich",
    "check_scaling",
    "check_sub_inequality",
    "check_super_inequality",
    "scaling_fit",
]
