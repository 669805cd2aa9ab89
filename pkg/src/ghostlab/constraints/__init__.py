from ghostlab.constraints.compiler import ConstraintCompiler
from ghostlab.constraints.generator import (
    TRANSCRIBED,
    compare_systems,
    generate_constraints,
    generation_report,
    transcribed_constraints,
)
from ghostlab.constraints.modes import ModeIndex, build_active_sets, mode_index
from ghostlab.constraints.propagation import PropagationState, propagate
from ghostlab.constraints.symbolic import Amplitude, BilinearConstraint, BilinearForm, Monomial
from ghostlab.constraints.verification import (
    NonexistenceReport,
    evaluate_constraints,
    mu_plus_elimination_check,
    nonexistence_report,
    search_mixed_support,
)
