"""
base.py
-------

Contrato comum das plantas simuladas: ``x+ = f(x, r)`` amostrada com período
``dt``, função de restrição ``g`` (a mesma que vira ``phi_1`` no dicionário),
domínio de trabalho para condições iniciais e equilíbrio conhecido.
"""

from abc import ABC, abstractmethod
from typing import Any, Dict

import numpy as np

from ..lift.dictionary import Box, BoxConstraint


class PlantIntegrationError(RuntimeError):
    """Falha de integração numérica ou divergência de Riccati."""


class Plant(ABC):
    """Planta em malha fechada vista pelo governador: estado ``x``, referência ``r``."""

    name: str = "plant"

    def __init__(self, dt: float, constraint: BoxConstraint, domain: Box) -> None:
        self.dt = float(dt)
        self.constraint = constraint
        self.domain = domain

    @property
    def state_dim(self) -> int:
        return self.domain.dim

    @abstractmethod
    def step(self, x: np.ndarray, r: float) -> np.ndarray:
        """Avança um período; aceita ``(n,)`` ou lote ``(m, n)``."""

    @abstractmethod
    def equilibrium(self, r: float) -> np.ndarray:
        """Equilíbrio exato para a referência constante ``r``."""

    @abstractmethod
    def params(self) -> Dict[str, Any]:
        """Parâmetros serializáveis (entram no manifesto e nos cenários)."""

    @abstractmethod
    def with_params(self, **overrides: Any) -> "Plant":
        """Cópia com parâmetros trocados (ex.: mudança de velocidade no meio da corrida)."""

    def simulate(self, x0: np.ndarray, r: float, n_steps: int) -> np.ndarray:
        """Trajetória ``(n_steps + 1, n)`` (ou ``(m, n_steps + 1, n)`` para lote)."""
        x = np.asarray(x0, dtype=float)
        states = [x]
        for _ in range(n_steps):
            x = self.step(x, r)
            states.append(x)
        return np.stack(states, axis=-2)
