"""
samples.py
----------

Operações sobre as trajetórias de uma referência: estimativa do equilíbrio
por média do ensemble dos estados finais, extração dos pares amostrais
``(x_k, x_k+)``, densidade amostral (raio de cobertura) e estimativa
data-driven da constante de Lipschitz da dinâmica ``f``.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist

from ..lift.dictionary import Box
from .trajectories import DataError, TrajectorySet

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SamplePairs:
    """Pares consecutivos ``(x_k, x_k_plus)`` de todas as trajetórias de uma referência."""

    r_bar: float
    x_k: np.ndarray
    x_k_plus: np.ndarray

    @property
    def n_s(self) -> int:
        return int(self.x_k.shape[0])


@dataclass(frozen=True, eq=False)
class EquilibriumEstimate:
    x_inf: np.ndarray
    residual: float


def estimate_equilibrium(ts: TrajectorySet, r_bar: float) -> EquilibriumEstimate:
    """Média dos ``N_T`` estados finais; ``residual`` é a maior distância ao ponto médio."""
    bundle = ts.bundle(r_bar)
    finals = np.vstack([traj[-1] for traj in bundle.trajectories])
    x_inf = finals.mean(axis=0)
    residual = float(np.max(np.linalg.norm(finals - x_inf, axis=1)))
    return EquilibriumEstimate(x_inf=x_inf, residual=residual)


def extract_pairs(ts: TrajectorySet, r_bar: float) -> SamplePairs:
    """Pares em ordem trajetória-major, tempo-minor."""
    bundle = ts.bundle(r_bar)
    x_k, x_k_plus = [], []
    for j, traj in enumerate(bundle.trajectories):
        if traj.shape[0] < 2:
            log.warning(f"Trajetória {j} de r_bar={r_bar} tem uma única amostra; nenhum par extraído")
            continue
        x_k.append(traj[:-1])
        x_k_plus.append(traj[1:])
    n = ts.state_dim
    return SamplePairs(
        r_bar=bundle.r_bar,
        x_k=np.vstack(x_k) if x_k else np.empty((0, n)),
        x_k_plus=np.vstack(x_k_plus) if x_k_plus else np.empty((0, n)),
    )


def sample_density(sp: SamplePairs, region: Box, points_per_axis: int = 100) -> float:
    """Raio de cobertura ``delta`` de ``region`` pelas amostras ``x_k``.

    Máximo, sobre uma grade de avaliação, da distância ao ``x_k`` mais próximo.
    """
    if sp.n_s < 1:
        raise DataError("Densidade amostral indefinida sem pares")
    if points_per_axis < 2:
        raise ValueError("points_per_axis deve ser >= 2")
    n = region.dim
    per_axis = points_per_axis if n <= 2 else max(2, int(round(1e6 ** (1.0 / n))))
    grid = region.grid(per_axis)
    distances, _ = cKDTree(sp.x_k).query(grid, k=1)
    return float(np.max(distances))


def estimate_lipschitz_f(
    sp: SamplePairs,
    safety: float = 1.2,
    tol: float = 1e-9,
    chunk: int = 1024,
) -> float:
    """``L_f`` = fator de segurança x maior razão ``||x_j+ - x_k+|| / ||x_j - x_k||``."""
    if sp.n_s < 2:
        raise DataError("São necessários ao menos 2 pares para estimar L_f")
    best = -np.inf
    for start in range(0, sp.n_s, chunk):
        dx = cdist(sp.x_k[start:start + chunk], sp.x_k)
        dy = cdist(sp.x_k_plus[start:start + chunk], sp.x_k_plus)
        mask = dx > tol
        if np.any(mask):
            best = max(best, float(np.max(dy[mask] / dx[mask])))
    if not np.isfinite(best):
        raise DataError("Todos os estados coincidem; razão de Lipschitz indefinida")
    return safety * best
