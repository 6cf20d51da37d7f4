"""
sets.py
-------

Conjuntos positivamente invariantes ajustados e o conjunto admissível.

Cada :class:`PISet` é o subnível

    O(r) = { x | V(x) <= (1 - c^T phi(x_inf))^2 },   V(x) = varphi(x)^T P varphi(x)

válido apenas quando o equilíbrio é admissível (``c^T phi(x_inf) <= 1``).
O :class:`AdmissibleSet` reúne os conjuntos de todas as referências e é a
estrutura consultada pelo governador.  Bundles são gravados em JSON e os
relatórios de contenção em CSV (pandas).
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from ..data.trajectories import UnknownReferenceError, ref_key
from ..lift.dictionary import Dictionary, eval_phi, eval_varphi

log = logging.getLogger(__name__)

MEMBERSHIP_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class PISet:
    r_bar: float
    x_inf: np.ndarray
    p_matrix: np.ndarray
    c: np.ndarray
    lam: float
    gamma: float
    dict_ref: str
    feasibility: Dict[str, Any] = field(default_factory=dict)
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        p = np.asarray(self.p_matrix, dtype=float)
        if p.ndim != 2 or p.shape[0] != p.shape[1]:
            raise ValueError("P deve ser quadrada")
        if not np.allclose(p, p.T, atol=1e-12 * max(1.0, float(np.max(np.abs(p))))):
            raise ValueError("P deve ser simétrica")
        object.__setattr__(self, "p_matrix", 0.5 * (p + p.T))
        object.__setattr__(self, "x_inf", np.asarray(self.x_inf, dtype=float).ravel())
        object.__setattr__(self, "c", np.asarray(self.c, dtype=float).ravel())

    def to_dict(self) -> Dict[str, Any]:
        return {
            "r_bar": self.r_bar,
            "x_inf": self.x_inf.tolist(),
            "c": self.c.tolist(),
            "lambda": self.lam,
            "gamma": self.gamma,
            "P": self.p_matrix.tolist(),
            "dict_ref": self.dict_ref,
            "feasibility": self.feasibility,
            "diagnostics": self.diagnostics,
        }

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "PISet":
        return cls(
            r_bar=float(payload["r_bar"]),
            x_inf=np.asarray(payload["x_inf"], dtype=float),
            p_matrix=np.asarray(payload["P"], dtype=float),
            c=np.asarray(payload["c"], dtype=float),
            lam=float(payload["lambda"]),
            gamma=float(payload["gamma"]),
            dict_ref=str(payload["dict_ref"]),
            feasibility=dict(payload.get("feasibility") or {}),
            diagnostics=dict(payload.get("diagnostics") or {}),
        )


@dataclass(frozen=True, eq=False)
class AdmissibleSet:
    """Conjuntos PI ordenados por ``r_bar`` e referências excluídas com o motivo."""

    sets: Tuple[PISet, ...]
    excluded: Tuple[Tuple[float, str], ...] = ()
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        ordered = tuple(sorted(self.sets, key=lambda s: s.r_bar))
        refs = [s.r_bar for s in ordered]
        if any(b <= a for a, b in zip(refs, refs[1:])):
            raise ValueError("Referências repetidas no conjunto admissível")
        if len({s.dict_ref for s in ordered}) > 1:
            raise ValueError("Todos os conjuntos devem compartilhar o mesmo dicionário")
        object.__setattr__(self, "sets", ordered)
        object.__setattr__(self, "excluded", tuple(sorted((float(r), str(w)) for r, w in self.excluded)))

    @property
    def references(self) -> List[float]:
        return [s.r_bar for s in self.sets]

    def get(self, r_bar: float) -> PISet:
        key = ref_key(r_bar)
        for s in self.sets:
            if ref_key(s.r_bar) == key:
                return s
        raise UnknownReferenceError(f"Referência {r_bar} não está no conjunto admissível")

    def index_of(self, r_bar: float) -> int:
        key = ref_key(r_bar)
        for i, s in enumerate(self.sets):
            if ref_key(s.r_bar) == key:
                return i
        raise UnknownReferenceError(f"Referência {r_bar} não está no conjunto admissível")


def _check_dict(pi_set: PISet, dictionary: Dictionary) -> None:
    if pi_set.dict_ref != dictionary.fingerprint:
        raise ValueError(f"Conjunto r_bar={pi_set.r_bar} ajustado com outro dicionário ({pi_set.dict_ref})")
    if pi_set.p_matrix.shape[0] != dictionary.n_phi:
        raise ValueError("Dimensão de P difere de n_phi")


def lyapunov_value(pi_set: PISet, dictionary: Dictionary, x: np.ndarray) -> np.ndarray:
    """``V(x) = varphi^T P varphi``; escalar para um ponto, vetor para um lote."""
    _check_dict(pi_set, dictionary)
    phi = eval_varphi(dictionary, x, pi_set.x_inf)
    if phi.ndim == 1:
        return float(max(phi @ pi_set.p_matrix @ phi, 0.0))
    return np.maximum(np.einsum("mi,ij,mj->m", phi, pi_set.p_matrix, phi), 0.0)


def level(pi_set: PISet, dictionary: Dictionary) -> Tuple[float, bool]:
    """Nível ``(1 - c^T phi(x_inf))^2`` e admissibilidade do equilíbrio."""
    c_phi = float(pi_set.c @ eval_phi(dictionary, pi_set.x_inf))
    return (1.0 - c_phi) ** 2, c_phi <= 1.0


def contains_batch(pi_set: PISet, dictionary: Dictionary, points: np.ndarray) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    out = np.zeros(pts.shape[0], dtype=bool)
    margin, admissible = level(pi_set, dictionary)
    if not admissible:
        return out
    inside = dictionary.in_working_domain(pts)
    if np.any(inside):
        values = lyapunov_value(pi_set, dictionary, pts[inside])
        out[inside] = np.atleast_1d(values) <= margin + MEMBERSHIP_TOL
    return out


def contains(pi_set: PISet, dictionary: Dictionary, x: np.ndarray) -> bool:
    """Pertinência de um ponto; ``False`` fora do domínio de trabalho do dicionário."""
    return bool(contains_batch(pi_set, dictionary, np.asarray(x, dtype=float).reshape(1, -1))[0])


def admissible_references(adm: AdmissibleSet, dictionary: Dictionary, x: np.ndarray) -> List[float]:
    return [s.r_bar for s in adm.sets if contains(s, dictionary, x)]


def ci_contains(adm: AdmissibleSet, dictionary: Dictionary, x: np.ndarray) -> bool:
    """União dos conjuntos PI."""
    return any(contains(s, dictionary, x) for s in adm.sets)


# --- bundles --------------------------------------------------------------

def bundle_to_dict(adm: AdmissibleSet, dictionary: Dictionary) -> Dict[str, Any]:
    return {
        "dictionary": dictionary.to_dict(),
        "sets": [s.to_dict() for s in adm.sets],
        "excluded": [{"r_bar": r, "reason": why} for r, why in adm.excluded],
        "metadata": adm.metadata,
    }


def bundle_from_dict(payload: Dict[str, Any]) -> Tuple[AdmissibleSet, Dictionary]:
    dictionary = Dictionary.from_dict(payload["dictionary"])
    sets = tuple(PISet.from_dict(s) for s in payload.get("sets", []))
    for s in sets:
        # dict_ref antigo (outro hash) invalidaria todas as consultas
        _check_dict(s, dictionary)
    excluded = tuple((float(e["r_bar"]), str(e["reason"])) for e in payload.get("excluded", []))
    return AdmissibleSet(sets, excluded, dict(payload.get("metadata") or {})), dictionary


def save_bundle(adm: AdmissibleSet, dictionary: Dictionary, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(bundle_to_dict(adm, dictionary), f)
    log.info(f"Bundle com {len(adm.sets)} conjuntos gravado em {path}")
    return path


def load_bundle(path: Union[str, Path]) -> Tuple[AdmissibleSet, Dictionary]:
    with open(path, "r", encoding="utf-8") as f:
        return bundle_from_dict(json.load(f))


# --- relatórios de contenção ---------------------------------------------

def containment_frame(
    adm: AdmissibleSet,
    dictionary: Dictionary,
    grid: np.ndarray,
    references: Optional[Sequence[float]] = None,
) -> pd.DataFrame:
    """Uma linha por (ponto da grade, referência): ``x1..xn, r_bar, V, inside``."""
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    chosen = adm.sets if references is None else [adm.get(r) for r in references]
    usable = dictionary.in_working_domain(grid)
    frames = []
    for s in chosen:
        values = np.full(grid.shape[0], np.nan)
        if np.any(usable):
            values[usable] = lyapunov_value(s, dictionary, grid[usable])
        frame = pd.DataFrame(grid, columns=[f"x{i + 1}" for i in range(grid.shape[1])])
        frame["r_bar"] = s.r_bar
        frame["V"] = values
        frame["inside"] = contains_batch(s, dictionary, grid)
        frames.append(frame)
    if not frames:
        return pd.DataFrame(columns=[f"x{i + 1}" for i in range(grid.shape[1])] + ["r_bar", "V", "inside"])
    return pd.concat(frames, ignore_index=True)
