"""Conjunto de dados de trajetórias e operações amostrais."""

from .samples import (  # noqa: F401
    EquilibriumEstimate,
    SamplePairs,
    estimate_equilibrium,
    estimate_lipschitz_f,
    extract_pairs,
    sample_density,
)
from .trajectories import (  # noqa: F401
    DataError,
    TrajectoryBundle,
    TrajectorySet,
    UnknownReferenceError,
    ref_key,
)
