"""varmin: direct-method experiments for integral functionals F(u) = ∫ f(x, u, ∇u).

Pointwise condition checks (convexity, p-growth), P1 finite element assembly,
descent minimization over refined meshes with coercivity radius certificates,
and a lab for lower-semicontinuity experiments with oscillating sequences.
"""

__version__ = "0.1.0"

from .domains import Interval, Rectangle, domain_from_dict
from .errors import (
    CertificateUnavailableError,
    EvaluationError,
    InvalidDomainError,
    InvalidOrderError,
    InvalidResolutionError,
    OutOfDomainError,
    UnknownIntegrandError,
    VarminError,
)
from .functionals import (
    CoercivityCertificate,
    assemble_F,
    assemble_grad,
    coercivity_certificate,
    friedrichs_constant,
    lp_norm,
    w1p_seminorm,
)
from .integrands import (
    CATALOG_NAMES,
    CONVEX_NAMES,
    ConvexityReport,
    GrowthCertificate,
    GrowthReport,
    Integrand,
    ProbeBox,
    catalog,
    check_convexity,
    check_derivatives,
    check_growth,
    get_integrand,
    probe_minimum,
    suggest_growth,
)
from .meshes import (
    FemField,
    Mesh,
    Partition,
    cell_gradients,
    eval_field,
    field_from_dict,
    grad_field,
    interpolate,
    make_mesh,
    make_partition,
    prolongate,
    quadrature,
    refine,
)
from .minimize import (
    CONVERGED,
    DIVERGED,
    MAX_ITERS,
    LevelRecord,
    MinimizationReport,
    ProblemSetup,
    SolverOptions,
    minimize_fixed,
    minimize_refining,
)
from .semicontinuity import (
    Piecewise1D,
    SemicontinuityReport,
    SequenceFamily,
    SequenceSample,
    StepFunction,
    jensen_cell_check,
    liminf_check,
    make_sequence,
    measure_deviation,
    partition_average,
    truncation_measures,
    weak_convergence_witness,
)

__all__ = [name for name in dir() if not name.startswith("_")]
