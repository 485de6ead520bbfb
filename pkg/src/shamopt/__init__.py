"""Stochastic halfspace approximation solver.

A first-order method for smooth convex objectives over a simple set under
many nonsmooth convex functional constraints: each iteration combines one
projected gradient step with a relaxed Polyak-type projection onto the
halfspace obtained by linearizing a single randomly sampled constraint.
"""

from .core import (
    InvSqrtLogSchedule,
    InvSqrtSchedule,
    Sampler,
    SolverConfig,
    SolverState,
    SwitchingSchedule,
    averaged_iterate,
    init_state,
    run,
    sham_step,
    switching_index,
)
from .errors import (
    DegenerateSampleError,
    InfeasibleGridError,
    NotReadyError,
    NumericalFailure,
    OracleFailure,
    ShamoptError,
)
from .linearization import (
    ConstraintLinearization,
    halfspace_evaluate,
    halfspace_projection,
    linearize,
    relaxed_halfspace_step,
)
from .metrics import (
    Decision,
    RunRecord,
    StoppingCriteria,
    TheoryConstantsReport,
    emit_records,
    feasibility_sq,
    rate_fit,
    read_records,
    stopping_check,
    theory_constants,
)
from .oracles import (
    OracleReport,
    baseline_solver,
    brute_force_min_grid,
    distance_to_feasible,
    estimate_regularity_constant,
    estimate_subgradient_bound,
)
from .problem import (
    AffineConstraint,
    Box,
    ConstraintSet,
    ProblemInstance,
    QuadraticObjective,
    SocConstraint,
    generate_instance,
    load_instance,
    max_violation,
    project_box,
    save_instance,
    soc_subgradient,
    soc_value,
)
from .rng import seeded_rng

__version__ = "0.1.0"

__all__ = [
    "AffineConstraint",
    "Box",
    "ConstraintLinearization",
    "ConstraintSet",
    "Decision",
    "DegenerateSampleError",
    "InfeasibleGridError",
    "InvSqrtLogSchedule",
    "InvSqrtSchedule",
    "NotReadyError",
    "NumericalFailure",
    "OracleFailure",
    "OracleReport",
    "ProblemInstance",
    "QuadraticObjective",
    "RunRecord",
    "Sampler",
    "ShamoptError",
    "SocConstraint",
    "SolverConfig",
    "SolverState",
    "StoppingCriteria",
    "SwitchingSchedule",
    "TheoryConstantsReport",
    "averaged_iterate",
    "baseline_solver",
    "brute_force_min_grid",
    "distance_to_feasible",
    "emit_records",
    "estimate_regularity_constant",
    "estimate_subgradient_bound",
    "feasibility_sq",
    "generate_instance",
    "halfspace_evaluate",
    "halfspace_projection",
    "init_state",
    "linearize",
    "load_instance",
    "max_violation",
    "project_box",
    "rate_fit",
    "read_records",
    "relaxed_halfspace_step",
    "run",
    "save_instance",
    "seeded_rng",
    "sham_step",
    "soc_subgradient",
    "soc_value",
    "stopping_check",
    "switching_index",
    "theory_constants",
]
