"""
export.py
---------

Exporta o programa semidefinido completo (antes da relaxação) para solvers
cônicos externos: ``{psi_k, eps_k, gamma, lambda, c}``.  Nenhum solver cônico
é chamado aqui.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, Union

import numpy as np

from ..data.samples import estimate_equilibrium, extract_pairs
from ..data.trajectories import TrajectorySet
from ..lift.dictionary import Dictionary, lipschitz_bound
from .config import SynthesisConfig
from .lifting import LiftedSamples, lift_samples
from .lp import solve_c
from .pipeline import reference_constants

log = logging.getLogger(__name__)


def sdp_payload(ls: LiftedSamples, cfg: SynthesisConfig, c: np.ndarray) -> Dict[str, Any]:
    return {
        "psi_k": [m.tolist() for m in ls.psi_list()],
        "eps_k": ls.eps.tolist(),
        "gamma": cfg.gamma,
        "lambda": cfg.lam,
        "c": np.asarray(c, dtype=float).tolist(),
    }


def export_reference_sdp(
    ts: TrajectorySet,
    r_bar: float,
    dictionary: Dictionary,
    cfg: SynthesisConfig,
    path: Union[str, Path],
) -> Path:
    """Monta o lifting de uma referência do conjunto de dados e exporta o SDP."""
    eq = estimate_equilibrium(ts, r_bar)
    sp = extract_pairs(ts, r_bar)
    delta, l_f = reference_constants(sp, dictionary, cfg)
    l_phi = lipschitz_bound(dictionary, cfg.lipschitz_points_per_axis, cfg.lipschitz_phi_safety).l_phi
    ls = lift_samples(sp, dictionary, eq.x_inf, cfg, l_phi, l_f or 0.0, delta or 0.0)
    return export_sdp(ls, cfg, solve_c(dictionary), path)


def export_sdp(ls: LiftedSamples, cfg: SynthesisConfig, c: np.ndarray, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(sdp_payload(ls, cfg, c), f)
    log.info(f"SDP exportado ({ls.n_s} restrições, n_phi={ls.n_phi}) em {path}")
    return path
