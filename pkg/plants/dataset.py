"""
dataset.py
----------

Geração do conjunto de dados ``D``: para cada referência constante, ``n_t``
trajetórias partindo de condições iniciais uniformes no domínio de trabalho da
planta.  Cada referência tem seu próprio fluxo aleatório derivado de
``SeedSequence(seed).spawn``, de modo que o resultado não depende da ordem nem
do paralelismo.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from typing import List, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field

from ..data.trajectories import TrajectorySet
from .base import Plant

log = logging.getLogger(__name__)


class DatasetConfig(BaseModel):
    references: List[float] = Field(..., min_length=1)
    n_t: int = Field(5, ge=1)
    horizon_s: float = Field(40.0, gt=0.0)
    seed: int = 0


def reference_grid(start: float, step: float, count: int) -> List[float]:
    """Grade ``start + step * i`` arredondada para evitar ruído de ponto flutuante."""
    return [round(start + step * i, 9) for i in range(count)]


def _simulate_reference(args: Tuple[Plant, float, int, int, np.random.SeedSequence]) -> Tuple[float, np.ndarray]:
    plant, r_bar, n_t, n_steps, seq = args
    rng = np.random.default_rng(seq)
    x0 = plant.domain.sample(rng, n_t)
    # (n_t, n_steps + 1, n)
    return r_bar, plant.simulate(x0, r_bar, n_steps)


def generate_dataset(
    plant: Plant,
    references: Sequence[float],
    n_t: int,
    horizon_s: float,
    seed: int,
    workers: int = 1,
) -> TrajectorySet:
    if not references:
        raise ValueError("Lista de referências vazia")
    if n_t < 1:
        raise ValueError("n_t deve ser >= 1")
    n_steps = int(round(horizon_s / plant.dt))
    seqs = np.random.SeedSequence(seed).spawn(len(references))
    jobs = [(plant, float(r), n_t, n_steps, s) for r, s in zip(references, seqs)]
    log.info(f"Gerando {len(jobs)} referências x {n_t} trajetórias x {n_steps + 1} amostras ({plant.name})")
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_simulate_reference, jobs))
    else:
        results = [_simulate_reference(job) for job in jobs]
    data = {r: [traj for traj in trajs] for r, trajs in results}
    return TrajectorySet.from_arrays(data, plant.dt)
