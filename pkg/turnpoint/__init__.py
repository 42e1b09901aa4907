# Numerical companion to a singularly perturbed PDE with merging turning
# points: inner and outer solutions are built by Borel/Laplace transforms of
# fixed points in the Borel plane, and the flatness of their differences
# gives the Gevrey orders of the common asymptotic expansions.
from .errors import (
    AdmissibilityError,
    ContradictionError,
    DegreeDropError,
    DivergenceError,
    DomainError,
    FitError,
    GeometryError,
    GridCoverageError,
    ModeError,
    NonConvergenceError,
    OverflowReportError,
    PipelineOrderError,
    PrecisionError,
    SectorError,
    SingularSymbolError,
    StructuralError,
    TurnpointError,
)
from .model import (
    EquationSpec,
    ForcingSpec,
    Polynomial,
    Profile,
    ScaleParams,
    check_scaling_identities,
    check_smallness,
    eval_P,
    load_config,
    load_spec,
    validate_inner,
    validate_outer,
)
from .turning import merging_exponent, roots_P, rouche_count, sector_admissibility
from .geometry import associate_inner, associate_outer, build_covering, scaling_gap
from .inner import FixedPointResult, inner_solution, solve_inner
from .outer import forcing_F_direct, outer_solution, solve_outer
from .asymptotics import cocycle_sup, fit_flatness, gevrey_report

from ._version import __version__
