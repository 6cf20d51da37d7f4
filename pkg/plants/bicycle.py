"""
bicycle.py
----------

Modelo cinemático de bicicleta com controle interno LQR.  O estado é
``x = (y, theta)`` (deslocamento lateral e orientação), a entrada é o ângulo
``beta`` da velocidade em relação ao eixo do veículo:

    y'     = v sin(theta + beta)
    theta' = (v / l) sin(beta)

Em cada período ``beta = -K (x - [r, 0])`` é calculado no início, saturado em
``|beta| <= beta_max`` e mantido constante; a integração usa RK45 adaptativo
(``scipy.integrate.solve_ivp``).  O ganho ``K`` vem do LQR discreto sobre a
linearização ``A = [[0, v], [0, 0]]``, ``B = [v, v/l]`` discretizada por ZOH.
"""

import logging
from typing import Any, Dict, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.integrate import solve_ivp

from ..lift.dictionary import Box, BoxConstraint
from .base import Plant, PlantIntegrationError
from .lti import discretize_zoh

log = logging.getLogger(__name__)


class BicycleParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    l: float = Field(1.6, gt=0.0, description="Distância do centro de massa ao eixo traseiro (m)")
    v: float = Field(20.0, gt=0.0, description="Velocidade longitudinal (m/s)")
    lqr_q: Tuple[Tuple[float, float], Tuple[float, float]] = ((100.0, 0.0), (0.0, 10.0))
    lqr_r: float = Field(1.0, gt=0.0)
    dt: float = Field(0.1, gt=0.0)
    beta_max: float = Field(0.5, gt=0.0, description="Saturação de beta (rad)")
    rtol: float = Field(1e-8, gt=0.0)
    atol: float = Field(1e-10, gt=0.0)


def linearization(params: BicycleParams) -> Tuple[np.ndarray, np.ndarray]:
    a = np.array([[0.0, params.v], [0.0, 0.0]])
    b = np.array([[params.v], [params.v / params.l]])
    return a, b


def riccati_map(p: np.ndarray, a: np.ndarray, b: np.ndarray, q: np.ndarray, r: np.ndarray) -> np.ndarray:
    btp = b.T @ p
    gain = np.linalg.solve(r + btp @ b, btp @ a)
    return q + a.T @ p @ a - a.T @ p @ b @ gain


def solve_dare(
    a: np.ndarray,
    b: np.ndarray,
    q: np.ndarray,
    r: np.ndarray,
    tol: float = 1e-12,
    max_iter: int = 200_000,
) -> np.ndarray:
    """Iteração de ponto fixo da equação de Riccati discreta a partir de ``P = Q``.

    Para quando ``||P - Ricc(P)||_max <= tol * max(1, ||P||_max)``.
    """
    p = np.array(q, dtype=float)
    for it in range(max_iter):
        p_next = riccati_map(p, a, b, q, r)
        p_next = 0.5 * (p_next + p_next.T)
        if not np.all(np.isfinite(p_next)):
            raise PlantIntegrationError(f"Iteração de Riccati divergiu na iteração {it}")
        residual = float(np.max(np.abs(p_next - p)))
        p = p_next
        if residual <= tol * max(1.0, float(np.max(np.abs(p)))):
            log.debug(f"Riccati convergiu em {it + 1} iterações (resíduo {residual:.2e})")
            return p
    raise PlantIntegrationError(f"Iteração de Riccati não convergiu em {max_iter} iterações")


def lqr_gain(params: BicycleParams) -> np.ndarray:
    """Ganho ``K`` (vetor linha de 2 elementos) do LQR discreto."""
    a_c, b_c = linearization(params)
    a_d, b_d = discretize_zoh(a_c, b_c, params.dt)
    q = np.asarray(params.lqr_q, dtype=float)
    r = np.atleast_2d(params.lqr_r)
    p = solve_dare(a_d, b_d, q, r)
    k = np.linalg.solve(r + b_d.T @ p @ b_d, b_d.T @ p @ a_d)
    return k.ravel()


def closed_loop_matrix(params: BicycleParams, gain: np.ndarray) -> np.ndarray:
    a_c, b_c = linearization(params)
    a_d, b_d = discretize_zoh(a_c, b_c, params.dt)
    return a_d - b_d @ np.atleast_2d(gain)


def steering(params: BicycleParams, gain: np.ndarray, x: np.ndarray, r: float) -> np.ndarray:
    err = np.atleast_2d(x) - np.array([float(r), 0.0])
    beta = -err @ np.asarray(gain, dtype=float)
    return np.clip(beta, -params.beta_max, params.beta_max)


def bicycle_step(params: BicycleParams, gain: np.ndarray, x: np.ndarray, r: float) -> np.ndarray:
    """Um período de amostragem; lotes ``(m, 2)`` são integrados num único sistema."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = np.atleast_2d(x)
    if not np.all(np.isfinite(pts)):
        raise PlantIntegrationError("Estado não finito na entrada do passo da bicicleta")
    beta = steering(params, gain, pts, r)
    v, l = params.v, params.l
    sin_beta = np.sin(beta)

    def rhs(_t: float, z: np.ndarray) -> np.ndarray:
        theta = z[1::2]
        dz = np.empty_like(z)
        dz[0::2] = v * np.sin(theta + beta)
        dz[1::2] = (v / l) * sin_beta
        return dz

    sol = solve_ivp(rhs, (0.0, params.dt), pts.ravel(), method="RK45", rtol=params.rtol, atol=params.atol)
    if not sol.success:
        raise PlantIntegrationError(f"Falha na integração RK45: {sol.message}")
    out = sol.y[:, -1].reshape(pts.shape)
    return out[0] if single else out


class BicyclePlant(Plant):
    """Bicicleta em malha fechada; restrição ``|y| <= 2`` (faixa da pista).

    O ganho é calculado nos parâmetros nominais e mantido em ``with_params``,
    como num veículo cujo controlador não é reprojetado ao mudar de velocidade.
    """

    name = "bicycle"

    def __init__(self, params: BicycleParams = BicycleParams(), gain: np.ndarray = None) -> None:
        super().__init__(
            dt=params.dt,
            constraint=BoxConstraint(axis=0, bound=2.0),
            domain=Box(np.array([-2.4, -0.4]), np.array([2.4, 0.4])),
        )
        self.bicycle_params = params
        self.gain = lqr_gain(params) if gain is None else np.asarray(gain, dtype=float).ravel()

    def step(self, x: np.ndarray, r: float) -> np.ndarray:
        return bicycle_step(self.bicycle_params, self.gain, x, r)

    def equilibrium(self, r: float) -> np.ndarray:
        return np.array([float(r), 0.0])

    def params(self) -> Dict[str, Any]:
        payload = self.bicycle_params.model_dump()
        payload["lqr_q"] = [list(row) for row in payload["lqr_q"]]
        payload["gain"] = self.gain.tolist()
        return payload

    def with_params(self, **overrides: Any) -> "BicyclePlant":
        overrides.pop("gain", None)
        params = BicycleParams.model_validate({**self.bicycle_params.model_dump(), **overrides})
        return BicyclePlant(params, gain=self.gain)
