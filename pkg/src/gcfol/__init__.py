"""Exact computations for generalized complex structures on torus bundles."""

from .coeff import CoeffFn, QI, I
from .errors import (
    DegenerateSpinor,
    DomainError,
    GcfolError,
    InvalidGenerator,
    InvariantViolation,
    NotClosed,
    NotExact,
    NotInvertibleMode,
    PreconditionError,
    ScenarioMismatch,
    ScenarioSemanticError,
    ScenarioSyntaxError,
)
from .forms import GradedForm, LatticeGenerator, Scenario, SolverSettings, truncate, wedge
from .calculus import (
    d_K,
    d_S,
    exterior_d,
    nabla,
    partial,
    partial_bar,
    split_d,
    theta,
    theta_minus,
    theta_plus,
    theta_zero,
    verify_relations,
)
from .cohomology import (
    CohClass,
    dS_class,
    dS_primitive,
    gauss_manin,
    is_flat,
    is_pluriharmonic,
    truncated_primitive,
)
from .spinors import (
    annihilator,
    b_transform,
    canonical_spinor,
    check_H_constraints,
    clifford_act,
    clifford_exp,
    dH_closed,
    evaluate_form,
    is_pure,
    real_rank_zero,
    type_at,
)
from .obstruction import ObstructionReport, check_equivariance, calabi_yau_check, decide
from .scenario_io import load_bundled, load_scenario, parse_scenario, serialize_scenario
