"""Conjuntos PI ajustados, conjunto admissível e validação de invariância."""

from .sets import (  # noqa: F401
    MEMBERSHIP_TOL,
    AdmissibleSet,
    PISet,
    admissible_references,
    bundle_from_dict,
    bundle_to_dict,
    ci_contains,
    containment_frame,
    contains,
    contains_batch,
    level,
    load_bundle,
    lyapunov_value,
    save_bundle,
)
from .validation import InvarianceReport, sample_members, step_values, validate_invariance  # noqa: F401
