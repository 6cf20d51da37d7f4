"""
validation.py
-------------

Validação empírica da invariância de um conjunto ajustado: sorteia pontos do
conjunto (metade perto da fronteira, onde a invariância costuma falhar),
avança cada um por um período com ``r = r_bar`` e verifica se o sucessor
continua no conjunto.
"""

import logging
from typing import List, Literal, Tuple

import numpy as np
from pydantic import BaseModel

from ..lift.dictionary import Dictionary
from ..plants.base import Plant
from .sets import MEMBERSHIP_TOL, PISet, level, lyapunov_value

log = logging.getLogger(__name__)

BOUNDARY_BAND = (0.8, 1.0)
MAX_ROUNDS = 60
MAX_REPORTED = 20


class InvarianceReport(BaseModel):
    r_bar: float
    status: Literal["pass", "fail", "inconclusive"]
    n_points: int
    n_members: int
    n_boundary: int
    n_violations: int
    worst_overshoot: float
    violating_points: List[List[float]] = []


def _values(pi_set: PISet, dictionary: Dictionary, points: np.ndarray) -> np.ndarray:
    """``V`` nos pontos; ``inf`` fora do domínio de trabalho."""
    out = np.full(points.shape[0], np.inf)
    ok = dictionary.in_working_domain(points)
    if np.any(ok):
        out[ok] = np.atleast_1d(lyapunov_value(pi_set, dictionary, points[ok]))
    return out


def sample_members(
    pi_set: PISet,
    dictionary: Dictionary,
    n_points: int,
    rng: np.random.Generator,
    batch: int = 20_000,
) -> Tuple[np.ndarray, int]:
    """Amostragem por rejeição com metade dos pontos na faixa ``V in [0.8, 1] * nivel``.

    Depois da primeira rodada, metade das propostas vem de perturbações dos
    membros já encontrados, o que torna a busca viável para conjuntos pequenos.
    """
    bound, _ = level(pi_set, dictionary)
    domain = dictionary.domain
    width = domain.upper - domain.lower
    n_band = n_points // 2
    band, interior = [np.empty((0, domain.dim))], [pi_set.x_inf[None, :]]
    n_b, n_i = 0, 1
    found = pi_set.x_inf[None, :]
    for _ in range(MAX_ROUNDS):
        proposals = [domain.sample(rng, batch // 2)]
        seeds = found[rng.integers(0, found.shape[0], size=batch - batch // 2)]
        scale = rng.choice([0.002, 0.01, 0.05], size=(seeds.shape[0], 1))
        proposals.append(seeds + rng.normal(size=seeds.shape) * scale * width)
        pts = np.vstack(proposals)
        pts = pts[domain.contains(pts)]
        v = _values(pi_set, dictionary, pts)
        member = v <= bound + MEMBERSHIP_TOL
        in_band = member & (v >= BOUNDARY_BAND[0] * bound)
        if np.any(member):
            found = np.vstack([found, pts[member]])[-batch:]
        band.append(pts[in_band])
        interior.append(pts[member & ~in_band])
        n_b += int(np.sum(in_band))
        n_i += int(np.sum(member & ~in_band))
        if n_b >= n_band and n_b + n_i >= n_points:
            break
    band_pts = np.vstack(band)
    n_take_band = min(band_pts.shape[0], n_band)
    inner = np.vstack(interior)
    n_take_inner = min(inner.shape[0], n_points - n_take_band)
    members = np.vstack([band_pts[:n_take_band], inner[:n_take_inner]])
    return members, n_take_band


def step_values(
    pi_set: PISet,
    dictionary: Dictionary,
    plant: Plant,
    points: np.ndarray,
) -> Tuple[np.ndarray, np.ndarray]:
    """``(V(x), V(x+))`` para um lote de pontos sob ``r = r_bar``."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    successors = plant.step(points, pi_set.r_bar)
    return _values(pi_set, dictionary, points), _values(pi_set, dictionary, successors)


def validate_invariance(
    pi_set: PISet,
    dictionary: Dictionary,
    plant: Plant,
    n_points: int = 10_000,
    seed: int = 0,
    tol: float = 1e-6,
    max_reported: int = MAX_REPORTED,
) -> InvarianceReport:
    rng = np.random.default_rng(seed)
    bound, admissible = level(pi_set, dictionary)
    if not admissible:
        return InvarianceReport(
            r_bar=pi_set.r_bar, status="inconclusive", n_points=n_points, n_members=0,
            n_boundary=0, n_violations=0, worst_overshoot=0.0,
        )
    members, n_boundary = sample_members(pi_set, dictionary, n_points, rng)
    _, v_next = step_values(pi_set, dictionary, plant, members)
    overshoot = v_next - bound
    violated = overshoot > tol
    n_violations = int(np.sum(violated))
    worst = float(np.max(overshoot)) if overshoot.size else 0.0
    if n_violations:
        status = "fail"
        log.warning(f"r_bar={pi_set.r_bar}: {n_violations} violações de invariância (pior {worst:.3e})")
    elif members.shape[0] < n_points / 10:
        status = "inconclusive"
        log.warning(f"r_bar={pi_set.r_bar}: apenas {members.shape[0]} membros encontrados")
    else:
        status = "pass"
    return InvarianceReport(
        r_bar=pi_set.r_bar,
        status=status,
        n_points=n_points,
        n_members=int(members.shape[0]),
        n_boundary=int(n_boundary),
        n_violations=n_violations,
        worst_overshoot=worst if np.isfinite(worst) else float("inf"),
        violating_points=members[violated][:max_reported].tolist(),
    )
