"""Oráculo do conjunto maximal admissível (LTI) e comparação em grade."""

from .compare import ComparisonReport, ReferenceComparison, compare_admissible_sets  # noqa: F401
from .polytope import (  # noqa: F401
    OracleError,
    Polytope,
    equilibrium,
    load_polytopes,
    maximal_output_admissible,
    output_admissible_stage,
    remove_redundant,
    save_polytopes,
)
