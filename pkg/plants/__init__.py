"""Plantas simuladas (LTI de segunda ordem e bicicleta cinemática com LQR)."""

from typing import Any, Dict, Optional

from .base import Plant, PlantIntegrationError  # noqa: F401
from .bicycle import BicycleParams, BicyclePlant, bicycle_step, lqr_gain, solve_dare  # noqa: F401
from .dataset import DatasetConfig, generate_dataset, reference_grid  # noqa: F401
from .lti import LtiParams, LtiPlant, discretize_zoh, lti_matrices, lti_step  # noqa: F401


def make_plant(kind: str, params: Optional[Dict[str, Any]] = None) -> Plant:
    """Instancia uma planta pelo nome (``lti`` ou ``bicycle``)."""
    params = dict(params or {})
    if kind == "lti":
        return LtiPlant(LtiParams(**params))
    if kind == "bicycle":
        gain = params.pop("gain", None)
        return BicyclePlant(BicycleParams(**params), gain=gain)
    raise ValueError(f"Planta desconhecida: {kind}")
