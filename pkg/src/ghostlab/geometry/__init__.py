from ghostlab.geometry.chained import (
    ChainedCoefficients,
    ChainedDecomposition,
    GramMatrix,
    SyntheticChainedState,
    beta_from_energies,
    chained_coefficients,
    decompose_chained,
    gram_matrix,
    palinstrophy_identity_defect,
    powers_constancy_check,
    project_B_onto_H012,
    synthetic_chained_state,
)
from ghostlab.geometry.curves import CURVE_COLUMNS, ParabolaCurve, curve_table, parabola_curve
from ghostlab.geometry.diagnostics import (
    GhostDiagnostics,
    diagnostics,
    enstrophy_lower_bound,
    inequality_report,
    perturbation_bounds,
    series_diagnostics,
    stationary_state,
)
from ghostlab.geometry.frames import (
    Frame,
    FrameKind,
    frame_transport,
    new_frame,
    old_frame,
    old_frame_coordinates,
)
from ghostlab.geometry.reference import check_tensor, nonlinear_tensor, stokes_matrix
