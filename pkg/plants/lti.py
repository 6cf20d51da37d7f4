"""
lti.py
------

Sistema LTI de segunda ordem sub-amortecido

    x' = [[0, 1], [-w^2, -2 z w]] x + [0, w^2] r,      y = x1 in [-1, 1]

discretizado exatamente por segurador de ordem zero (exponencial de matriz)
com período ``dt``.  O equilíbrio para ``r`` constante é ``(r, 0)``.
"""

from functools import lru_cache
from typing import Any, Dict, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.linalg import expm

from ..lift.dictionary import Box, BoxConstraint
from .base import Plant


class LtiParams(BaseModel):
    """Parâmetros do oscilador: frequência natural, amortecimento e amostragem."""

    model_config = ConfigDict(frozen=True)

    omega: float = Field(5.0, gt=0.0, description="Frequência natural (rad/s)")
    zeta: float = Field(0.1, gt=0.0, lt=1.0, description="Razão de amortecimento (sub-amortecido)")
    dt: float = Field(0.1, gt=0.0, description="Período de amostragem (s)")


def continuous_matrices(params: LtiParams) -> Tuple[np.ndarray, np.ndarray]:
    w, z = params.omega, params.zeta
    a = np.array([[0.0, 1.0], [-w ** 2, -2.0 * z * w]])
    b = np.array([[0.0], [w ** 2]])
    return a, b


def discretize_zoh(a: np.ndarray, b: np.ndarray, dt: float) -> Tuple[np.ndarray, np.ndarray]:
    """Par ``(A_d, B_d)`` pela exponencial do bloco ``[[A, B], [0, 0]] dt``."""
    n, m = a.shape[0], b.shape[1]
    block = np.zeros((n + m, n + m))
    block[:n, :n] = a
    block[:n, n:] = b
    e = expm(block * dt)
    return e[:n, :n], e[:n, n:]


@lru_cache(maxsize=32)
def _discrete(omega: float, zeta: float, dt: float) -> Tuple[np.ndarray, np.ndarray]:
    a, b = continuous_matrices(LtiParams(omega=omega, zeta=zeta, dt=dt))
    return discretize_zoh(a, b, dt)


def lti_matrices(params: LtiParams) -> Tuple[np.ndarray, np.ndarray]:
    a_d, b_d = _discrete(params.omega, params.zeta, params.dt)
    return a_d.copy(), b_d.copy()


def lti_step(params: LtiParams, x: np.ndarray, r: float) -> np.ndarray:
    a_d, b_d = _discrete(params.omega, params.zeta, params.dt)
    x = np.asarray(x, dtype=float)
    return x @ a_d.T + float(r) * b_d[:, 0]


class LtiPlant(Plant):
    name = "lti"

    def __init__(self, params: LtiParams = LtiParams()) -> None:
        super().__init__(
            dt=params.dt,
            constraint=BoxConstraint(axis=0, bound=1.0),
            domain=Box(np.array([-1.0, -6.0]), np.array([1.0, 6.0])),
        )
        self.lti_params = params

    def step(self, x: np.ndarray, r: float) -> np.ndarray:
        return lti_step(self.lti_params, x, r)

    def equilibrium(self, r: float) -> np.ndarray:
        return np.array([float(r), 0.0])

    def matrices(self) -> Tuple[np.ndarray, np.ndarray]:
        return lti_matrices(self.lti_params)

    def params(self) -> Dict[str, Any]:
        return self.lti_params.model_dump()

    def with_params(self, **overrides: Any) -> "LtiPlant":
        return LtiPlant(LtiParams.model_validate({**self.lti_params.model_dump(), **overrides}))
