"""
presets.py
----------

Configuração de experimento (planta, conjunto de dados, dicionário e síntese)
e os dois presets dos experimentos de referência:

* ``lti-oscillator``: oscilador sub-amortecido (w=5, z=0.1, dt=0.1 s),
  referências -1.2:0.02:1.2 (121), 5 trajetórias de 40 s, grade 14x14;
* ``bicycle-lane``: bicicleta com LQR (v=20 m/s, l=1.6 m), referências
  -2.4:0.02:2.4 (241), 5 trajetórias de 4 s, grade 14x14, dados também a 27 m/s.

Ambos usam ``gamma = 0`` e o ajuste nominal (``epsilon_scale = 0``): na
densidade destes conjuntos de dados o aperto de Lipschitz ``eps_k lambda`` é
muito maior que ``gamma`` e o LP robusto fica inviável.
"""

import json
import sys
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - Python 3.10
    import tomli as tomllib

from pydantic import BaseModel, Field

from ..plants.dataset import DatasetConfig, reference_grid
from ..synthesis.config import SynthesisConfig


class DictionaryConfig(BaseModel):
    grid_shape: Tuple[int, ...] = (14, 14)
    inflate: float = Field(0.1, ge=0.0)
    domain_slack: float = Field(0.5, ge=0.0)


class ExperimentConfig(BaseModel):
    plant: Literal["lti", "bicycle"] = "lti"
    plant_params: Dict[str, Any] = Field(default_factory=dict)
    dataset: DatasetConfig
    dictionary: DictionaryConfig = Field(default_factory=DictionaryConfig)
    synthesis: SynthesisConfig = Field(default_factory=SynthesisConfig)
    speeds: Optional[List[float]] = None
    model_based_points: int = Field(30, ge=2)


_NOMINAL = SynthesisConfig(gamma=0.0, lam=10.0, n_w=10, epsilon_scale=0.0)

PRESETS: Dict[str, ExperimentConfig] = {
    "lti-oscillator": ExperimentConfig(
        plant="lti",
        plant_params={"omega": 5.0, "zeta": 0.1, "dt": 0.1},
        dataset=DatasetConfig(references=reference_grid(-1.2, 0.02, 121), n_t=5, horizon_s=40.0, seed=0),
        synthesis=_NOMINAL,
    ),
    "bicycle-lane": ExperimentConfig(
        plant="bicycle",
        plant_params={"l": 1.6, "v": 20.0, "dt": 0.1},
        dataset=DatasetConfig(references=reference_grid(-2.4, 0.02, 241), n_t=5, horizon_s=4.0, seed=0),
        synthesis=_NOMINAL,
        speeds=[20.0, 27.0],
    ),
}


# nomes alternativos aceitos em --preset
PRESET_ALIASES: Dict[str, str] = {
    "paper-4.1": "lti-oscillator",
    "paper-4.2": "bicycle-lane",
}


def get_preset(name: str) -> ExperimentConfig:
    key = PRESET_ALIASES.get(name, name)
    try:
        return PRESETS[key].model_copy(deep=True)
    except KeyError:
        known = sorted(PRESETS) + sorted(PRESET_ALIASES)
        raise KeyError(f"Preset desconhecido: {name}. Disponíveis: {known}") from None


def load_experiment_config(path: Union[str, Path]) -> ExperimentConfig:
    """Lê um ``ExperimentConfig`` de JSON ou TOML (pela extensão)."""
    path = Path(path)
    if path.suffix.lower() == ".toml":
        with open(path, "rb") as f:
            payload = tomllib.load(f)
    else:
        with open(path, "r", encoding="utf-8") as f:
            payload = json.load(f)
    return ExperimentConfig.model_validate(payload)


def merge_overrides(cfg: ExperimentConfig, overrides: Dict[str, Any]) -> ExperimentConfig:
    """Aplica sobrescritas com chaves ``secao.campo`` (ex.: ``synthesis.gamma``)."""
    payload = cfg.model_dump(by_alias=True)
    for dotted, value in overrides.items():
        if value is None:
            continue
        node = payload
        *parents, leaf = dotted.split(".")
        for key in parents:
            node = node.setdefault(key, {})
        node[leaf] = value
    return ExperimentConfig.model_validate(payload)
