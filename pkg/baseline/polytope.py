"""
polytope.py
-----------

Oráculo exato para o caso LTI: o conjunto maximal de saída admissível de
``x+ = A x + B r`` com ``r`` constante, calculado pela iteração clássica

    O_0 = {x | H x <= h},   O_{k+1} = O_k  ∩  {x | H A^{k+1} (x - x_e) <= h - H x_e}

em coordenadas deslocadas ``z = x - x_e``.  A iteração para quando todas as
linhas novas são redundantes em ``O_k`` (maximização do suporte por LP); as
linhas redundantes restantes são removidas no fim.
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Union

import numpy as np

from ..synthesis.lp import maximize_linear

log = logging.getLogger(__name__)

ADMISSIBILITY_TIGHTENING = 1e-6
SUPPORT_TOL = 1e-9


class OracleError(ValueError):
    """Sistema instável, iteração sem determinação finita ou grades incompatíveis."""


@dataclass(frozen=True, eq=False)
class Polytope:
    """Representação por semiespaços ``{x | H x <= h}``."""

    h_matrix: np.ndarray
    h_vector: np.ndarray

    def __post_init__(self) -> None:
        h_matrix = np.atleast_2d(np.asarray(self.h_matrix, dtype=float))
        h_vector = np.asarray(self.h_vector, dtype=float).ravel()
        if h_matrix.shape[0] != h_vector.size:
            raise ValueError("H e h com número de linhas diferente")
        if not (np.all(np.isfinite(h_matrix)) and np.all(np.isfinite(h_vector))):
            raise ValueError("Polítopo com entradas não finitas")
        object.__setattr__(self, "h_matrix", h_matrix)
        object.__setattr__(self, "h_vector", h_vector)

    @classmethod
    def empty(cls, dim: int) -> "Polytope":
        return cls(np.zeros((1, dim)), np.array([-1.0]))

    @classmethod
    def box_output(cls, axis: int, bound: float, dim: int) -> "Polytope":
        """``|x[axis]| <= bound``."""
        row = np.zeros(dim)
        row[axis] = 1.0
        return cls(np.vstack([row, -row]), np.array([bound, bound]))

    @property
    def dim(self) -> int:
        return int(self.h_matrix.shape[1])

    @property
    def n_rows(self) -> int:
        return int(self.h_vector.size)

    @property
    def is_empty(self) -> bool:
        status, _ = maximize_linear(np.zeros(self.dim), self.h_matrix, self.h_vector)
        return status == 2

    def contains(self, points: np.ndarray, tol: float = 0.0) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.all(pts @ self.h_matrix.T <= self.h_vector + tol, axis=1)

    def to_dict(self) -> Dict[str, Any]:
        return {"H": self.h_matrix.tolist(), "h": self.h_vector.tolist()}

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "Polytope":
        return cls(np.asarray(payload["H"], dtype=float), np.asarray(payload["h"], dtype=float))


def equilibrium(a_d: np.ndarray, b_d: np.ndarray, r_bar: float) -> np.ndarray:
    n = a_d.shape[0]
    return np.linalg.solve(np.eye(n) - a_d, np.asarray(b_d, dtype=float).reshape(n, -1)[:, 0] * r_bar)


def _check_stable(a_d: np.ndarray) -> None:
    rho = float(np.max(np.abs(np.linalg.eigvals(a_d))))
    if rho >= 1.0:
        raise OracleError(f"A_d não é Schur estável (raio espectral {rho:.6f})")


def output_admissible_stage(a_d: np.ndarray, x_e: np.ndarray, constraints: Polytope, k: int) -> Polytope:
    """``O_k`` (sem remoção de redundância), em coordenadas originais."""
    rows, rhs = [], []
    shifted = constraints.h_vector - constraints.h_matrix @ x_e
    power = np.eye(a_d.shape[0])
    for _ in range(k + 1):
        rows.append(constraints.h_matrix @ power)
        rhs.append(shifted)
        power = a_d @ power
    h_z = np.vstack(rows)
    return Polytope(h_z, np.concatenate(rhs) + h_z @ x_e)


def remove_redundant(poly: Polytope, tol: float = SUPPORT_TOL) -> Polytope:
    """Remove, uma a uma, as linhas cujo suporte no restante não excede ``h_i``."""
    keep = list(range(poly.n_rows))
    for i in range(poly.n_rows):
        others = [j for j in keep if j != i]
        if not others:
            continue
        status, value = maximize_linear(poly.h_matrix[i], poly.h_matrix[others], poly.h_vector[others])
        if status == 0 and value <= poly.h_vector[i] + tol:
            keep = others
    return Polytope(poly.h_matrix[keep], poly.h_vector[keep])


def maximal_output_admissible(
    a_d: np.ndarray,
    b_d: np.ndarray,
    r_bar: float,
    constraints: Polytope,
    max_iter: int = 500,
) -> Polytope:
    a_d = np.asarray(a_d, dtype=float)
    _check_stable(a_d)
    x_e = equilibrium(a_d, b_d, r_bar)
    h, hm = constraints.h_vector, constraints.h_matrix
    if np.any(hm @ x_e > (1.0 - ADMISSIBILITY_TIGHTENING) * h):
        log.debug(f"r_bar={r_bar}: equilíbrio {x_e} não admissível; conjunto vazio")
        return Polytope.empty(a_d.shape[0])

    shifted = h - hm @ x_e
    h_z, b_z = hm.copy(), shifted.copy()
    power = np.eye(a_d.shape[0])
    for k in range(1, max_iter + 1):
        power = a_d @ power
        new_rows = hm @ power
        converged = True
        for row, bound in zip(new_rows, shifted):
            status, value = maximize_linear(row, h_z, b_z)
            if status != 0 or value > bound + SUPPORT_TOL:
                converged = False
                break
        if converged:
            log.debug(f"r_bar={r_bar}: determinação finita em k={k - 1} ({h_z.shape[0]} linhas)")
            reduced = remove_redundant(Polytope(h_z, b_z))
            return Polytope(reduced.h_matrix, reduced.h_vector + reduced.h_matrix @ x_e)
        h_z = np.vstack([h_z, new_rows])
        b_z = np.concatenate([b_z, shifted])
    raise OracleError(f"Iteração não convergiu em {max_iter} passos")


def save_polytopes(polytopes: Dict[float, Polytope], path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {"polytopes": [{"r_bar": r, **p.to_dict()} for r, p in sorted(polytopes.items())]}
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f)
    return path


def load_polytopes(path: Union[str, Path]) -> Dict[float, Polytope]:
    with open(path, "r", encoding="utf-8") as f:
        payload = json.load(f)
    return {float(item["r_bar"]): Polytope.from_dict(item) for item in payload["polytopes"]}
