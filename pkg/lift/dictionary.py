"""
dictionary.py
-------------

Funções de dicionário (lifting) usadas pela função tipo-Lyapunov.  O vetor
``phi(x)`` tem como primeiro elemento a própria função de restrição ``g`` (de
modo que o conjunto de restrições é ``{x | g(x) <= 1}``) seguida de uma grade
de funções de base radial *thin-plate* ``rho**2 * ln(rho)``.

Também calcula uma cota de Lipschitz para o mapa vetorial ``phi`` sobre o
domínio de trabalho, a partir do gradiente analítico avaliado numa grade densa.

Exemplo:

```python
import numpy as np
from ddrg_lab.lift import Box, BoxConstraint, Dictionary, eval_phi

box = Box(lower=np.array([-1.1, -6.6]), upper=np.array([1.1, 6.6]))
d = Dictionary.from_grid(box, (14, 14), BoxConstraint(axis=0, bound=1.0))
phi = eval_phi(d, np.array([1.0, 0.0]))   # phi[0] == 1.0
```
"""

import hashlib
import json
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial.distance import cdist

log = logging.getLogger(__name__)


class DomainError(ValueError):
    """Ponto não finito, fora do domínio de trabalho, ou domínio ilimitado."""


@dataclass(frozen=True)
class BoxConstraint:
    """Restrição ``|x[axis]| <= bound`` suavizada como ``g(x) = (x[axis]/bound)**2``.

    O subnível unitário ``{g <= 1}`` coincide com a restrição original, e ``g``
    é Lipschitz em qualquer domínio limitado.
    """

    axis: int
    bound: float

    def __post_init__(self) -> None:
        if self.bound <= 0:
            raise ValueError(f"bound deve ser positivo, recebido {self.bound}")

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return (x[..., self.axis] / self.bound) ** 2

    def gradient(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        grad = np.zeros_like(x)
        grad[..., self.axis] = 2.0 * x[..., self.axis] / self.bound ** 2
        return grad

    def to_dict(self) -> Dict[str, Any]:
        return {"type": "box", "axis": self.axis, "bound": self.bound}

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "BoxConstraint":
        if payload.get("type", "box") != "box":
            raise ValueError(f"Tipo de restrição desconhecido: {payload.get('type')}")
        return cls(axis=int(payload["axis"]), bound=float(payload["bound"]))


@dataclass(frozen=True, eq=False)
class Box:
    """Caixa alinhada aos eixos ``lower <= x <= upper``."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self) -> None:
        lower = np.asarray(self.lower, dtype=float).ravel()
        upper = np.asarray(self.upper, dtype=float).ravel()
        if lower.shape != upper.shape:
            raise ValueError("lower e upper com dimensões diferentes")
        if np.any(upper < lower):
            raise ValueError(f"Caixa inválida: upper < lower ({lower}, {upper})")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def dim(self) -> int:
        return int(self.lower.size)

    @property
    def bounded(self) -> bool:
        return bool(np.all(np.isfinite(self.lower)) and np.all(np.isfinite(self.upper)))

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def contains(self, points: np.ndarray, tol: float = 0.0) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        inside = np.all((pts >= self.lower - tol) & (pts <= self.upper + tol), axis=1)
        return inside

    def expanded(self, factor: float) -> "Box":
        """Expande cada semi-largura pela fração ``factor``."""
        half = 0.5 * (self.upper - self.lower)
        return Box(self.lower - factor * half, self.upper + factor * half)

    def scaled(self, factor: float) -> "Box":
        """Escala a caixa em torno do centro."""
        half = 0.5 * (self.upper - self.lower) * factor
        return Box(self.center - half, self.center + half)

    def grid(self, points_per_axis: int) -> np.ndarray:
        """Grade retangular em ordem row-major (primeiro eixo varia mais devagar)."""
        if not self.bounded:
            raise DomainError("Não é possível gerar grade em domínio ilimitado")
        axes = [np.linspace(lo, hi, points_per_axis) for lo, hi in zip(self.lower, self.upper)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.uniform(self.lower, self.upper, size=(size, self.dim))

    def to_dict(self) -> Dict[str, Any]:
        return {"lower": self.lower.tolist(), "upper": self.upper.tolist()}

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "Box":
        return cls(np.asarray(payload["lower"], dtype=float), np.asarray(payload["upper"], dtype=float))


@dataclass(frozen=True, eq=False)
class Dictionary:
    """Dicionário ``phi = [g, rbf_1, ..., rbf_m]`` sobre uma grade de centros.

    Attributes:
        centers: matriz ``(m, n)`` de centros em ordem row-major.
        domain: caixa que contém os dados e a região de restrição.
        constraint_fn: função ``g`` com ``X = {g <= 1}``; é o elemento ``phi_1``.
        kind: família das funções de base (apenas ``thin-plate``).
        grid_shape: forma da grade de centros, quando construída por grade.
        domain_slack: fração de expansão do domínio aceita por ``eval_phi``.
    """

    centers: np.ndarray
    domain: Box
    constraint_fn: BoxConstraint
    kind: str = "thin-plate"
    grid_shape: Optional[Tuple[int, ...]] = None
    domain_slack: float = 0.5
    _fingerprint: str = field(default="", repr=False)

    def __post_init__(self) -> None:
        centers = np.asarray(self.centers, dtype=float)
        if centers.size == 0:
            centers = np.empty((0, self.domain.dim))
        elif centers.ndim == 1:
            centers = centers.reshape(1, -1)
        object.__setattr__(self, "centers", centers)
        if self.kind != "thin-plate":
            raise ValueError(f"Família de base não suportada: {self.kind}")
        if centers.shape[1] != self.domain.dim:
            raise ValueError("Dimensão dos centros difere da dimensão do domínio")
        if centers.shape[0] and not np.all(self.domain.contains(centers, tol=1e-12)):
            raise ValueError("Todos os centros devem estar dentro do domínio")
        if self.domain_slack < 0:
            raise ValueError("domain_slack deve ser não negativo")
        digest = hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode("utf-8")).hexdigest()
        object.__setattr__(self, "_fingerprint", digest[:16])

    @classmethod
    def from_grid(
        cls,
        domain: Box,
        shape: Sequence[int],
        constraint_fn: BoxConstraint,
        domain_slack: float = 0.5,
    ) -> "Dictionary":
        """Um centro por nó de uma grade retangular que cobre ``domain``."""
        if len(shape) != domain.dim:
            raise ValueError(f"Grade {tuple(shape)} incompatível com dimensão {domain.dim}")
        axes = [np.linspace(lo, hi, k) for lo, hi, k in zip(domain.lower, domain.upper, shape)]
        mesh = np.meshgrid(*axes, indexing="ij")
        centers = np.stack([m.ravel() for m in mesh], axis=1)
        return cls(centers, domain, constraint_fn, grid_shape=tuple(int(k) for k in shape), domain_slack=domain_slack)

    @property
    def n_phi(self) -> int:
        return 1 + int(self.centers.shape[0])

    @property
    def state_dim(self) -> int:
        return self.domain.dim

    @property
    def fingerprint(self) -> str:
        """Identificador estável usado como ``dict_ref`` dos conjuntos PI."""
        return self._fingerprint

    @property
    def working_domain(self) -> Box:
        return self.domain.expanded(self.domain_slack)

    def in_working_domain(self, x: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(x, dtype=float))
        finite = np.all(np.isfinite(pts), axis=1)
        return finite & self.working_domain.contains(np.where(np.isfinite(pts), pts, 0.0))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "centers": self.centers.tolist(),
            "domain": self.domain.to_dict(),
            "grid_shape": list(self.grid_shape) if self.grid_shape else None,
            "constraint": self.constraint_fn.to_dict(),
            "domain_slack": self.domain_slack,
        }

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "Dictionary":
        domain = Box.from_dict(payload["domain"])
        centers = np.asarray(payload["centers"], dtype=float).reshape(-1, domain.dim)
        shape = payload.get("grid_shape")
        return cls(
            centers=centers,
            domain=domain,
            constraint_fn=BoxConstraint.from_dict(payload["constraint"]),
            kind=payload.get("kind", "thin-plate"),
            grid_shape=tuple(shape) if shape else None,
            domain_slack=float(payload.get("domain_slack", 0.5)),
        )


def build_dictionary(
    states: np.ndarray,
    shape: Sequence[int],
    constraint_fn: BoxConstraint,
    inflate: float = 0.1,
    domain_slack: float = 0.5,
) -> Dictionary:
    """Constrói o dicionário a partir da caixa envolvente dos dados.

    A caixa dos dados é inflada em ``inflate`` (10% por padrão) e unida ao
    intervalo limitado da restrição, para que toda a região ``g <= 1`` ao longo
    do eixo restrito esteja no domínio.
    """
    pts = np.atleast_2d(np.asarray(states, dtype=float))
    if not np.all(np.isfinite(pts)):
        raise DomainError("Estados não finitos na construção do dicionário")
    lower, upper = pts.min(axis=0), pts.max(axis=0)
    half = 0.5 * (upper - lower)
    # eixos degenerados ganham largura mínima para a grade não colapsar
    half = np.where(half > 0, half, 1.0)
    lower = lower - inflate * half
    upper = upper + inflate * half
    axis, bound = constraint_fn.axis, constraint_fn.bound
    lower[axis] = min(lower[axis], -bound)
    upper[axis] = max(upper[axis], bound)
    domain = Box(lower, upper)
    log.debug(f"Domínio do dicionário: {domain.lower} .. {domain.upper}")
    return Dictionary.from_grid(domain, shape, constraint_fn, domain_slack=domain_slack)


def thin_plate(rho_squared: np.ndarray) -> np.ndarray:
    """``rho**2 * ln(rho)`` escrito em termos de ``rho**2``; vale 0 em ``rho = 0``."""
    r2 = np.asarray(rho_squared, dtype=float)
    safe = np.where(r2 > 0.0, r2, 1.0)
    return np.where(r2 > 0.0, 0.5 * r2 * np.log(safe), 0.0)


def _as_points(dictionary: Dictionary, x: np.ndarray) -> Tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    pts = np.atleast_2d(arr)
    if pts.shape[1] != dictionary.state_dim:
        raise DomainError(f"Dimensão do estado {pts.shape[1]} != {dictionary.state_dim}")
    if not np.all(np.isfinite(pts)):
        raise DomainError("Estado com valores não finitos")
    if not np.all(dictionary.working_domain.contains(pts)):
        raise DomainError("Estado fora do domínio de trabalho do dicionário")
    return pts, single


def eval_phi(dictionary: Dictionary, x: np.ndarray) -> np.ndarray:
    """Avalia ``phi(x)``; aceita um ponto ``(n,)`` ou um lote ``(m, n)``."""
    pts, single = _as_points(dictionary, x)
    out = np.empty((pts.shape[0], dictionary.n_phi))
    out[:, 0] = dictionary.constraint_fn(pts)
    if dictionary.centers.shape[0]:
        out[:, 1:] = thin_plate(cdist(pts, dictionary.centers, "sqeuclidean"))
    return out[0] if single else out


def eval_varphi(dictionary: Dictionary, x: np.ndarray, x_inf: np.ndarray) -> np.ndarray:
    """Lift centrado ``phi(x) - phi(x_inf)``."""
    return eval_phi(dictionary, x) - eval_phi(dictionary, np.asarray(x_inf, dtype=float).ravel())


@dataclass(frozen=True)
class LipschitzBound:
    l_phi: float
    points_per_axis: int
    safety: float


def lipschitz_bound(
    dictionary: Dictionary,
    points_per_axis: int = 200,
    safety: float = 1.1,
    chunk: int = 2048,
) -> LipschitzBound:
    """Cota ``L_phi`` pela maior norma espectral do jacobiano numa grade do domínio.

    O gradiente de cada thin-plate é ``(2 ln rho + 1)(x - c)`` (zero no centro);
    ``||J||_2**2`` é o maior autovalor de ``J^T J``, que é ``n x n``.
    """
    if safety < 1.0:
        raise ValueError("safety deve ser >= 1")
    domain = dictionary.domain
    if not domain.bounded:
        raise DomainError("Cota de Lipschitz exige domínio limitado")
    n = domain.dim
    # mantém a grade tratável em dimensões maiores
    per_axis = points_per_axis if n <= 2 else max(2, int(round(1e6 ** (1.0 / n))))
    grid = domain.grid(per_axis)
    worst = 0.0
    for start in range(0, grid.shape[0], chunk):
        pts = grid[start:start + chunk]
        g_grad = dictionary.constraint_fn.gradient(pts)
        jtj = np.einsum("mi,mj->mij", g_grad, g_grad)
        if dictionary.centers.shape[0]:
            diff = pts[:, None, :] - dictionary.centers[None, :, :]
            r2 = np.einsum("mci,mci->mc", diff, diff)
            coef = np.where(r2 > 0.0, np.log(np.where(r2 > 0.0, r2, 1.0)) + 1.0, 0.0)
            weighted = coef[..., None] * diff
            jtj += np.einsum("mci,mcj->mij", weighted, weighted)
        worst = max(worst, float(np.max(np.linalg.eigvalsh(jtj)[:, -1])))
    l_phi = safety * float(np.sqrt(max(worst, 0.0)))
    log.debug(f"L_phi = {l_phi:.4g} (grade {per_axis}^{n})")
    return LipschitzBound(l_phi=l_phi, points_per_axis=per_axis, safety=safety)
