"""
diagnostics.py
--------------

Diagnóstico de robustez por referência: as grandezas medidas que entram no
aperto (densidade ``delta``, ``L_f``, ``L_phi``), o erro de estimativa do
equilíbrio e a condição suficiente para que o erro de equilíbrio seja
absorvido pela margem de deriva:

    lambda (2 L_phi ||eps_r||^2 + max_k eps_k) < beta

Nada aqui é imposto ao solver; os valores ficam registrados no bundle.
"""

from typing import Optional

import numpy as np
from pydantic import BaseModel

from .config import SynthesisConfig


class RobustnessDiagnostics(BaseModel):
    n_s: int
    delta: Optional[float] = None
    l_f: Optional[float] = None
    l_phi: Optional[float] = None
    equilibrium_residual: float
    max_eps: float
    c_phi_inf: float
    beta_margin: float
    equilibrium_condition_lhs: Optional[float] = None
    equilibrium_condition_holds: Optional[bool] = None
    nominal: bool
    model_based: bool = False


def robustness_diagnostics(
    cfg: SynthesisConfig,
    n_s: int,
    eps: np.ndarray,
    equilibrium_residual: float,
    c_phi_inf: float,
    delta: Optional[float],
    l_f: Optional[float],
    l_phi: Optional[float],
    model_based: bool = False,
) -> RobustnessDiagnostics:
    max_eps = float(np.max(eps)) if np.size(eps) else 0.0
    lhs = holds = None
    if l_phi is not None:
        lhs = cfg.lam * (2.0 * l_phi * equilibrium_residual ** 2 + max_eps)
        holds = bool(lhs < cfg.beta_margin)
    return RobustnessDiagnostics(
        n_s=n_s,
        delta=delta,
        l_f=l_f,
        l_phi=l_phi,
        equilibrium_residual=float(equilibrium_residual),
        max_eps=max_eps,
        c_phi_inf=float(c_phi_inf),
        beta_margin=cfg.beta_margin,
        equilibrium_condition_lhs=lhs,
        equilibrium_condition_holds=holds,
        nominal=cfg.nominal,
        model_based=model_based,
    )
