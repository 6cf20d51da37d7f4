"""
simulation.py
-------------

Simulação em malha fechada com o governador no período de amostragem da
planta.  A cada passo: lê ``x_t``, consulta a referência desejada no
cronograma, chama o governador, mantém a última referência aplicada quando
nenhum conjunto contém o estado (com ``fallback = True``) e avança a planta.

Mudanças de parâmetros (ex.: velocidade da bicicleta) entram nos instantes
de ``param_switches``; conjuntos admissíveis alternativos podem ser ativados
nos mesmos instantes por ``switch_sets``.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field, model_validator

from ..invariance.sets import AdmissibleSet
from ..lift.dictionary import Dictionary
from ..plants.base import Plant, PlantIntegrationError
from .governor import NoAdmissibleReference, ReferenceGovernor

log = logging.getLogger(__name__)

TIME_EPS = 1e-9


class ScheduleEntry(BaseModel):
    t_start: float = Field(..., ge=0.0)
    r_desired: float


class ParamSwitch(BaseModel):
    t: float = Field(..., ge=0.0)
    params: Dict[str, Any]


class Scenario(BaseModel):
    """Cenário de simulação (arquivo JSON ``{x0, duration, schedule, plant_params}``)."""

    name: str = "scenario"
    plant: Literal["lti", "bicycle"] = "lti"
    x0: List[float]
    duration: float = Field(..., gt=0.0)
    schedule: List[ScheduleEntry] = Field(..., min_length=1)
    plant_params: Dict[str, Any] = Field(default_factory=dict)
    param_switches: List[ParamSwitch] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check_times(self) -> "Scenario":
        times = [e.t_start for e in self.schedule]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("Instantes do cronograma devem ser estritamente crescentes")
        if times[-1] > self.duration:
            raise ValueError("Cronograma ultrapassa a duração do cenário")
        switches = [s.t for s in self.param_switches]
        if any(b <= a for a, b in zip(switches, switches[1:])) or (switches and switches[-1] > self.duration):
            raise ValueError("Trocas de parâmetro devem ser crescentes e dentro da duração")
        return self

    def desired_at(self, t: float) -> float:
        current = self.schedule[0].r_desired
        for entry in self.schedule:
            if entry.t_start <= t + TIME_EPS:
                current = entry.r_desired
        return current

    @classmethod
    def load(cls, path: Union[str, Path]) -> "Scenario":
        with open(path, "r", encoding="utf-8") as f:
            return cls.model_validate(json.load(f))


@dataclass
class GovernorLog:
    state_dim: int
    records: List[Dict[str, Any]] = field(default_factory=list)
    aborted: bool = False
    error: str = ""

    def append(self, t: float, x: np.ndarray, r_desired: float, r_applied: float, index: int, g: float, fallback: bool) -> None:
        row = {"t": t}
        row.update({f"x{i + 1}": float(v) for i, v in enumerate(x)})
        row.update(
            {
                "r_desired": r_desired,
                "r_applied": r_applied,
                "active_set_index": index,
                "g": g,
                "fallback": fallback,
            }
        )
        self.records.append(row)

    def to_frame(self) -> pd.DataFrame:
        columns = ["t"] + [f"x{i + 1}" for i in range(self.state_dim)] + [
            "r_desired", "r_applied", "active_set_index", "g", "fallback",
        ]
        return pd.DataFrame(self.records, columns=columns)

    def to_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False)
        return path

    @property
    def fallback_count(self) -> int:
        return sum(1 for r in self.records if r["fallback"])

    @property
    def max_g(self) -> float:
        return max((r["g"] for r in self.records), default=0.0)


def closed_loop_simulate(
    plant: Plant,
    adm: AdmissibleSet,
    dictionary: Dictionary,
    scenario: Scenario,
    switch_sets: Optional[Dict[float, Tuple[AdmissibleSet, Dictionary]]] = None,
) -> GovernorLog:
    x = np.asarray(scenario.x0, dtype=float)
    governor = ReferenceGovernor(adm, dictionary)
    if not governor.feasible_mask(x).any():
        raise ValueError(f"x0={scenario.x0} não pertence a nenhum conjunto PI")
    pending_params = sorted(scenario.param_switches, key=lambda s: s.t)
    pending_sets = sorted((switch_sets or {}).items())
    n_steps = int(round(scenario.duration / plant.dt))
    run_log = GovernorLog(state_dim=x.size)
    # referência admissível no conjunto inicial; vale também se um conjunto trocado em t = 0 já exclui x0
    r_applied = governor.govern(x, scenario.desired_at(0.0))
    log.info(f"Cenário '{scenario.name}': {n_steps} passos de {plant.dt}s")

    for k in range(n_steps + 1):
        t = k * plant.dt
        while pending_params and pending_params[0].t <= t + TIME_EPS:
            switch = pending_params.pop(0)
            plant = plant.with_params(**switch.params)
            log.info(f"t={t:.2f}s: parâmetros da planta alterados para {switch.params}")
        while pending_sets and pending_sets[0][0] <= t + TIME_EPS:
            _, (new_adm, new_dict) = pending_sets.pop(0)
            governor = ReferenceGovernor(new_adm, new_dict)
            log.info(f"t={t:.2f}s: conjunto admissível alternativo ativado ({len(new_adm.sets)} conjuntos)")

        r_desired = scenario.desired_at(t)
        fallback = False
        try:
            index = governor.govern_index(x, r_desired)
            r_applied = float(governor.references[index])
        except NoAdmissibleReference:
            fallback = True
            matches = np.flatnonzero(np.isclose(governor.references, r_applied))
            index = int(matches[0]) if matches.size else -1
            log.warning(f"t={t:.2f}s: nenhum conjunto contém x={x.tolist()}; mantendo r={r_applied}")
        run_log.append(t, x, r_desired, r_applied, index, float(plant.constraint(x)), fallback)
        if k == n_steps:
            break
        try:
            x = plant.step(x, r_applied)
        except PlantIntegrationError as exc:
            log.error(f"t={t:.2f}s: integração falhou, simulação abortada: {exc}")
            run_log.aborted = True
            run_log.error = str(exc)
            break
    return run_log
