"""Krylov projection methods for large sparse linear Hamiltonian systems.

The library builds reduced models of dy/dt = J H y in Krylov subspaces with
four basis flavors (orthonormal, weight-orthonormal, symplectic Lanczos and
block J-orthogonal), integrates the reduced systems with the Cayley map, and
ships the machinery to verify which conserved quantities each method keeps.
"""

from .bases import (
    KrylovBasis,
    arnoldi,
    assemble_reduced_hamiltonian,
    block_j_basis,
    j_orthogonality_error,
    small_j,
    symplectic_lanczos,
)
from .errors import (
    ConfigError,
    DimensionMismatch,
    HamKrylovError,
    JOrthogonalityError,
    MethodNotApplicableError,
    NotPositiveDefiniteError,
    SeriousBreakdownError,
    SingularMatrixError,
)
from .experiments import ExperimentConfig, RunReport, load_config, parse_config, run_experiment
from .invariants import invariant_suite
from .linalg import (
    CayleyPropagator,
    CsrMatrix,
    InnerProduct,
    SymplecticOperator,
    cayley_step,
    dense_solve,
    inner,
    j_apply,
    matvec,
    qr_factor,
    spectral_norm,
    symplectic_inner,
)
from .problems import ProblemSpec, gen_random, maxwell1d, maxwell3d, wave2d
from .projections import (
    EquivalenceReport,
    ProjectedSystem,
    RestartSchedule,
    TrajectoryRecord,
    build_projection,
    integrate_projected,
    model_reduction_equivalence,
    reference_solution,
    run_method,
    special_model_reduction,
)
from .systems import (
    FirstIntegralFamily,
    LinearHamiltonianSystem,
    StructureFlags,
    energy_bound,
    poisson_bracket,
    structure_flags,
)

__version__ = "0.1.0"

__all__ = [
    "CayleyPropagator",
    "ConfigError",
    "CsrMatrix",
    "DimensionMismatch",
    "EquivalenceReport",
    "ExperimentConfig",
    "FirstIntegralFamily",
    "HamKrylovError",
    "InnerProduct",
    "JOrthogonalityError",
    "KrylovBasis",
    "LinearHamiltonianSystem",
    "MethodNotApplicableError",
    "NotPositiveDefiniteError",
    "ProblemSpec",
    "ProjectedSystem",
    "RestartSchedule",
    "RunReport",
    "SeriousBreakdownError",
    "SingularMatrixError",
    "StructureFlags",
    "SymplecticOperator",
    "TrajectoryRecord",
    "arnoldi",
    "assemble_reduced_hamiltonian",
    "block_j_basis",
    "build_projection",
    "cayley_step",
    "dense_solve",
    "energy_bound",
    "gen_random",
    "inner",
    "integrate_projected",
    "invariant_suite",
    "j_apply",
    "j_orthogonality_error",
    "load_config",
    "matvec",
    "maxwell1d",
    "maxwell3d",
    "model_reduction_equivalence",
    "parse_config",
    "poisson_bracket",
    "qr_factor",
    "reference_solution",
    "run_experiment",
    "run_method",
    "small_j",
    "special_model_reduction",
    "spectral_norm",
    "structure_flags",
    "symplectic_inner",
    "symplectic_lanczos",
    "wave2d",
]
