"""
lifting.py
----------

Lifting dos pares amostrais e termo de aperto robusto.

Para cada par ``(x_k, x_k+)``:

* ``phi_k  = phi(x_k)  - phi(x_inf)`` e ``phi_k+ = phi(x_k+) - phi(x_inf)``;
* ``psi_k  = phi_k+ phi_k+^T - (1 - gamma) phi_k phi_k^T``;
* ``eps_k  = 2 L_phi delta (L_f ||phi_k+|| + ||phi_k||) + (L_phi L_f delta)^2``.

As matrizes ``psi_k`` não são armazenadas (``n_s * n_phi^2`` floats não cabem
em memória na densidade dos experimentos); são formadas sob demanda.
"""

from dataclasses import dataclass
from typing import List

import numpy as np

from ..data.samples import SamplePairs
from ..lift.dictionary import Dictionary, eval_varphi
from .config import SynthesisConfig


def _check_constants(l_phi: float, l_f: float, delta: float) -> None:
    for name, value in (("l_phi", l_phi), ("l_f", l_f), ("delta", delta)):
        if not np.isfinite(value) or value < 0:
            raise ValueError(f"{name} deve ser finito e não negativo, recebido {value}")


def tightening(
    varphi_k: np.ndarray,
    varphi_k_plus: np.ndarray,
    l_phi: float,
    l_f: float,
    delta: float,
) -> float:
    _check_constants(l_phi, l_f, delta)
    n_k = float(np.linalg.norm(varphi_k))
    n_plus = float(np.linalg.norm(varphi_k_plus))
    return 2.0 * l_phi * delta * (l_f * n_plus + n_k) + (l_phi * l_f * delta) ** 2


def tightening_batch(
    varphi: np.ndarray,
    varphi_plus: np.ndarray,
    l_phi: float,
    l_f: float,
    delta: float,
) -> np.ndarray:
    """Versão vetorizada de :func:`tightening` sobre as linhas."""
    _check_constants(l_phi, l_f, delta)
    n_k = np.linalg.norm(varphi, axis=1)
    n_plus = np.linalg.norm(varphi_plus, axis=1)
    return 2.0 * l_phi * delta * (l_f * n_plus + n_k) + (l_phi * l_f * delta) ** 2


@dataclass(frozen=True, eq=False)
class LiftedSamples:
    varphi: np.ndarray
    varphi_plus: np.ndarray
    eps: np.ndarray
    gamma: float

    def __post_init__(self) -> None:
        if self.varphi.shape != self.varphi_plus.shape or self.varphi.shape[0] != self.eps.shape[0]:
            raise ValueError("Dimensões inconsistentes em LiftedSamples")
        if np.any(self.eps < 0):
            raise ValueError("eps_k deve ser não negativo")

    @property
    def n_s(self) -> int:
        return int(self.varphi.shape[0])

    @property
    def n_phi(self) -> int:
        return int(self.varphi.shape[1])

    def psi(self, k: int) -> np.ndarray:
        a, b = self.varphi_plus[k], self.varphi[k]
        return np.outer(a, a) - (1.0 - self.gamma) * np.outer(b, b)

    def psi_list(self) -> List[np.ndarray]:
        return [self.psi(k) for k in range(self.n_s)]

    def quadratic(self, matrix: np.ndarray) -> np.ndarray:
        """``<M, psi_k>`` para todo ``k`` sem formar ``psi_k``."""
        up = np.einsum("ki,ij,kj->k", self.varphi_plus, matrix, self.varphi_plus)
        down = np.einsum("ki,ij,kj->k", self.varphi, matrix, self.varphi)
        return up - (1.0 - self.gamma) * down


def lift_samples(
    sp: SamplePairs,
    dictionary: Dictionary,
    x_inf: np.ndarray,
    cfg: SynthesisConfig,
    l_phi: float,
    l_f: float,
    delta: float,
) -> LiftedSamples:
    if sp.n_s == 0:
        n = dictionary.n_phi
        return LiftedSamples(np.empty((0, n)), np.empty((0, n)), np.empty(0), cfg.gamma)
    varphi = np.atleast_2d(eval_varphi(dictionary, sp.x_k, x_inf))
    varphi_plus = np.atleast_2d(eval_varphi(dictionary, sp.x_k_plus, x_inf))
    eps = cfg.epsilon_scale * tightening_batch(varphi, varphi_plus, l_phi, l_f, delta)
    return LiftedSamples(varphi=varphi, varphi_plus=varphi_plus, eps=eps, gamma=cfg.gamma)


def assemble_psi_weight(ls: LiftedSamples) -> np.ndarray:
    """Medida empírica uniforme ``Psi = (1/n_s) sum phi_k phi_k^T``."""
    if ls.n_s < 1:
        raise ValueError("Psi indefinida sem amostras")
    psi = ls.varphi.T @ ls.varphi / ls.n_s
    return 0.5 * (psi + psi.T)
