from ghostlab.dynamics.galerkin import GalerkinSpec, GalerkinSystem, rhs_compressed, rhs_full
from ghostlab.dynamics.ghost_check import (
    GhostCheckReport,
    Verdict,
    assess_trajectory,
    balance_residuals,
    ghost_check,
    ghost_check_ensemble,
    ghost_relation_residuals,
)
from ghostlab.dynamics.integrator import Trajectory, integrate, step_etdrk4
