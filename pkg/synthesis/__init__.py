"""Síntese data-driven dos conjuntos PI pela relaxação linear."""

from .config import SynthesisConfig  # noqa: F401
from .diagnostics import RobustnessDiagnostics, robustness_diagnostics  # noqa: F401
from .export import export_reference_sdp, export_sdp, sdp_payload  # noqa: F401
from .lifting import LiftedSamples, assemble_psi_weight, lift_samples, tightening, tightening_batch  # noqa: F401
from .lp import (  # noqa: F401
    FeasibilityReport,
    LPInfeasibleError,
    LPProblem,
    PhaseOne,
    SynthesisError,
    SynthesisResult,
    WBasis,
    assemble_lp,
    build_w_basis,
    maximize_linear,
    recover_p,
    refine_w_basis,
    solve_c,
    solve_lp,
    solve_with_refinement,
    verify_sdp_feasibility,
)
from .pipeline import (  # noqa: F401
    AllExcludedError,
    EquilibriumInadmissibleError,
    InvarianceViolatedError,
    VerificationError,
    synthesize_ci,
    synthesize_model_based_ci,
    synthesize_model_based_pi_set,
    synthesize_pi_set,
)
