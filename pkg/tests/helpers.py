"""
Plantas e conjuntos auxiliares dos testes.

A planta escalar de primeira ordem ``x+ = a x + (1 - a) r`` com ``|x| <= 1``
tem conjuntos invariantes conhecidos em forma fechada: para ``r = 0`` e
``|a| < 1`` o conjunto maximal admissível é o próprio intervalo ``[-1, 1]``.
Com um dicionário sem centros (``phi = [x^2]``) e ``P = [[1]]`` o subnível
ajustado coincide com esse intervalo, o que permite oráculos exatos.
"""

from typing import Any, Dict, List

import numpy as np

from ddrg_lab.data import TrajectorySet
from ddrg_lab.invariance import PISet
from ddrg_lab.lift import Box, BoxConstraint, Dictionary
from ddrg_lab.plants import Plant, PlantIntegrationError


class LagPlant(Plant):
    """``x+ = a x + (1 - a) r`` escalar; ``fail_after`` simula falha de integração."""

    name = "lag"

    def __init__(self, a: float = 0.5, dt: float = 0.1, fail_after: int = -1) -> None:
        super().__init__(dt=dt, constraint=BoxConstraint(axis=0, bound=1.0), domain=Box(np.array([-1.0]), np.array([1.0])))
        self.a = a
        self.fail_after = fail_after
        self.calls = 0

    def step(self, x: np.ndarray, r: float) -> np.ndarray:
        self.calls += 1
        if 0 <= self.fail_after < self.calls:
            raise PlantIntegrationError("falha simulada")
        return self.a * np.asarray(x, dtype=float) + (1.0 - self.a) * float(r)

    def equilibrium(self, r: float) -> np.ndarray:
        return np.array([float(r)])

    def params(self) -> Dict[str, Any]:
        return {"a": self.a, "dt": self.dt}

    def with_params(self, **overrides: Any) -> "LagPlant":
        merged = {**self.params(), **overrides}
        return LagPlant(a=merged["a"], dt=merged["dt"])


def lag_dataset(plant: LagPlant, starts: Dict[float, List[float]], n_steps: int = 30) -> TrajectorySet:
    data = {r: [plant.simulate(np.array([x0]), r, n_steps) for x0 in x0s] for r, x0s in starts.items()}
    return TrajectorySet.from_arrays(data, plant.dt)


def scalar_dictionary() -> Dictionary:
    return Dictionary(
        centers=np.empty((0, 1)),
        domain=Box(np.array([-1.1]), np.array([1.1])),
        constraint_fn=BoxConstraint(axis=0, bound=1.0),
    )


def planar_dictionary() -> Dictionary:
    box = Box(np.array([-1.1, -6.6]), np.array([1.1, 6.6]))
    return Dictionary.from_grid(box, (3, 3), BoxConstraint(axis=0, bound=1.0))


def unit_set(dictionary: Dictionary, r_bar: float, x_inf=None, p_matrix=None) -> PISet:
    """Conjunto com ``P = c c^T`` (ou ``p_matrix``) para o dicionário dado."""
    n = dictionary.n_phi
    c = np.zeros(n)
    c[0] = 1.0
    if x_inf is None:
        x_inf = np.zeros(dictionary.state_dim)
        x_inf[0] = r_bar
    return PISet(
        r_bar=r_bar,
        x_inf=np.asarray(x_inf, dtype=float),
        p_matrix=np.outer(c, c) if p_matrix is None else p_matrix,
        c=c,
        lam=10.0,
        gamma=0.0,
        dict_ref=dictionary.fingerprint,
    )
