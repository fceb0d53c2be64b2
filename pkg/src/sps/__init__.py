"""Ground states of a nonlocally coupled semilinear elliptic system.

Library for computing positive solutions of

    -Lap u + u + lam * phi * u = |u|^(p-2) u,   -Lap phi = u^2,

with zero boundary values on bounded 3D domains, by constrained
minimization on the Nehari manifold, plus the critical-exponent
asymptotics and barycenter/multiplicity experiments built on top of it.
"""

__version__ = "0.1.0"

from .asymptotics import (
    Instanton,
    SweepRecord,
    concentration_diagnostic,
    critical_energy,
    critical_level,
    critical_ray_max,
    instanton_field,
    sobolev_constant,
    sweep_p,
)
from .energy import (
    EnergyBreakdown,
    ProblemParams,
    evaluate,
    gradient,
    nehari_project,
    ray_max_energy,
)
from .errors import (
    ConfigError,
    DegenerateRayError,
    EmptyInteriorError,
    GridMismatchError,
    NoConvergenceError,
    NotConvergedError,
    OutsideInnerSetError,
    RadiusTooLargeError,
    SPSError,
    TailTooLargeError,
    ZeroFieldError,
)
from .grid import (
    DomainSpec,
    Grid,
    ScalarField,
    apply_laplacian,
    build_grid,
    h1_norm_sq,
    integrate_power,
    write_vtk,
)
from .multiplicity import (
    SolutionCatalog,
    TransplantCache,
    barycenter,
    multistart_search,
    omega_r_membership,
    transplant_bump,
    transplant_centers,
)
from .poisson import PoissonSolution, coupling_term, solve_poisson
from .solver import (
    GroundState,
    SolveOptions,
    find_ground_state,
    gaussian_seed,
    minimize_on_nehari,
    ps_residual,
)
