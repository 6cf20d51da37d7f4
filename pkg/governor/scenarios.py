"""
scenarios.py
------------

Cenários prontos dos experimentos:

* ``lti-step``: degraus de referência desejada em +-1.15 (além do que o
  sobressinal do sistema sub-amortecido permite sem violar ``|y| <= 1``);
* ``bicycle-road-edge``: bicicleta a 20 m/s comandada para +-2.2 m, perto da
  borda da pista;
* ``bicycle-overtake``: ultrapassagem com troca de faixa e aumento de
  velocidade de 20 para 27 m/s em t = 4 s.
"""

from typing import Dict

from .simulation import ParamSwitch, ScheduleEntry, Scenario

SCENARIOS: Dict[str, Scenario] = {
    "lti-step": Scenario(
        name="lti-step",
        plant="lti",
        x0=[0.0, 0.0],
        duration=60.0,
        schedule=[ScheduleEntry(t_start=0.0, r_desired=1.15), ScheduleEntry(t_start=30.0, r_desired=-1.15)],
    ),
    "bicycle-road-edge": Scenario(
        name="bicycle-road-edge",
        plant="bicycle",
        x0=[0.0, 0.0],
        duration=10.0,
        schedule=[ScheduleEntry(t_start=0.0, r_desired=2.2), ScheduleEntry(t_start=5.0, r_desired=-2.2)],
        plant_params={"v": 20.0},
    ),
    "bicycle-overtake": Scenario(
        name="bicycle-overtake",
        plant="bicycle",
        x0=[-1.8, 0.0],
        duration=12.0,
        schedule=[
            ScheduleEntry(t_start=0.0, r_desired=-1.8),
            ScheduleEntry(t_start=1.0, r_desired=1.8),
            ScheduleEntry(t_start=6.0, r_desired=-1.8),
        ],
        plant_params={"v": 20.0},
        param_switches=[ParamSwitch(t=4.0, params={"v": 27.0})],
    ),
}


def builtin_scenario(name: str) -> Scenario:
    try:
        return SCENARIOS[name].model_copy(deep=True)
    except KeyError:
        raise KeyError(f"Cenário desconhecido: {name}. Disponíveis: {sorted(SCENARIOS)}") from None
