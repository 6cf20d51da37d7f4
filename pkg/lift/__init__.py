"""Funções de dicionário (lifting) e cotas de Lipschitz."""

from .dictionary import (  # noqa: F401
    Box,
    BoxConstraint,
    Dictionary,
    DomainError,
    LipschitzBound,
    build_dictionary,
    eval_phi,
    eval_varphi,
    lipschitz_bound,
    thin_plate,
)
