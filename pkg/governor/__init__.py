"""Governador de referência e simulação em malha fechada."""

from .governor import NoAdmissibleReference, ReferenceGovernor, govern  # noqa: F401
from .scenarios import SCENARIOS, builtin_scenario  # noqa: F401
from .simulation import GovernorLog, ParamSwitch, Scenario, ScheduleEntry, closed_loop_simulate  # noqa: F401
