"""
lp.py
-----

Relaxação linear do programa semidefinido de síntese.

``P`` é restrita à família afim ``P(alpha) = c c^T + sum_j alpha_j W_j`` com
``0 <= alpha_j <= 1`` e ``W_j`` positivas definidas limitadas por
``(lambda I - c c^T) / n_w``; com isso ``c c^T <= P(alpha) <= lambda I`` vale
para todo ``alpha`` viável e as restrições por amostra ficam lineares:

    minimizar  d^T alpha   sujeito a   A alpha + b <= 0,   0 <= alpha <= 1

    [A]_kj = <W_j, psi_k>
    [b]_k  = <c c^T, psi_k> - gamma + eps_k lambda
    [d]_j  = <W_j, Psi>

O LP é resolvido pelo HiGHS (``scipy.optimize.linprog``).  Empates na face
ótima são desfeitos por LPs sucessivos que minimizam ``alpha_1, alpha_2, ...``.

As direções iniciais de ``W_j`` são os autovetores dominantes de ``Psi``.  Se o
LP é inviável, :func:`solve_with_refinement` troca a matriz menos usada pela
direção que os multiplicadores da fase 1 indicam (geração de colunas), sem
sair da cota ``W_j <= (lambda I - c c^T) / n_w``.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np
from scipy.optimize import linprog

from ..lift.dictionary import Dictionary
from .config import SynthesisConfig
from .lifting import LiftedSamples

log = logging.getLogger(__name__)

# aperto relativo aplicado às linhas antes de chamar o solver
ROW_MARGIN = 1e-9


class SynthesisError(RuntimeError):
    """Configuração inválida ou síntese impossível para todas as referências."""


class LPInfeasibleError(RuntimeError):
    """LP inviável; ``worst_row`` é a restrição mais violada na solução de fase 1."""

    def __init__(
        self,
        message: str,
        worst_row: int,
        worst_violation: float,
        diagnostics: Optional[Dict[str, Any]] = None,
        phase_one: Optional["PhaseOne"] = None,
    ):
        super().__init__(message)
        self.worst_row = worst_row
        self.worst_violation = worst_violation
        self.diagnostics = dict(diagnostics or {})
        self.phase_one = phase_one


def solve_c(dictionary: Dictionary) -> np.ndarray:
    """Solução trivial ``c = e_1`` (o primeiro elemento do dicionário é ``g``)."""
    if getattr(dictionary, "constraint_fn", None) is None or dictionary.n_phi < 1:
        raise SynthesisError("Dicionário sem elemento de restrição em phi_1")
    c = np.zeros(dictionary.n_phi)
    c[0] = 1.0
    return c


@dataclass(frozen=True, eq=False)
class WBasis:
    w_list: np.ndarray
    c: np.ndarray
    lam: float
    psi_weight: np.ndarray
    directions: np.ndarray = field(repr=False)

    @property
    def n_w(self) -> int:
        return int(self.w_list.shape[0])


def _directions(psi_weight: np.ndarray, n_w: int) -> np.ndarray:
    """Autovetores dominantes de ``Psi`` completados por eixos canônicos."""
    n = psi_weight.shape[0]
    vals, vecs = np.linalg.eigh(psi_weight)
    order = np.argsort(vals)[::-1]
    top = float(vals[order[0]]) if n else 0.0
    basis = [vecs[:, i] for i in order if vals[i] > 1e-12 * max(top, 1.0)][: min(n_w, n)]
    # Gram-Schmidt sobre os eixos canônicos
    for i in range(n):
        if len(basis) >= min(n_w, n):
            break
        e = np.zeros(n)
        e[i] = 1.0
        for u in basis:
            e -= (u @ e) * u
        norm = np.linalg.norm(e)
        if norm > 1e-8:
            basis.append(e / norm)
    dirs = np.array(basis)
    if n_w > dirs.shape[0]:
        dirs = dirs[np.arange(n_w) % dirs.shape[0]]
    return dirs


def _s_half(c: np.ndarray, cfg: SynthesisConfig) -> np.ndarray:
    """Raiz de ``S = (lambda I - c c^T) / n_w``."""
    s = (cfg.lam * np.eye(c.size) - np.outer(c, c)) / cfg.n_w
    vals, vecs = np.linalg.eigh(s)
    return (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ vecs.T


def _w_matrix(s_half: np.ndarray, u: np.ndarray, eta: float) -> np.ndarray:
    b = (1.0 - eta) * np.outer(u, u) + eta * np.eye(u.size)
    w = s_half @ b @ s_half
    return 0.5 * (w + w.T)


def build_w_basis(c: np.ndarray, cfg: SynthesisConfig, psi_weight: np.ndarray) -> WBasis:
    c = np.asarray(c, dtype=float)
    n = c.size
    if psi_weight.shape != (n, n):
        raise ValueError(f"Psi {psi_weight.shape} incompatível com c de tamanho {n}")
    cc = float(c @ c)
    if cfg.lam <= cc:
        raise SynthesisError(f"lambda={cfg.lam} deve ser maior que c^T c={cc}")
    s_half = _s_half(c, cfg)
    dirs = _directions(psi_weight, cfg.n_w)
    w_list = np.empty((cfg.n_w, n, n))
    for j, u in enumerate(dirs):
        w_list[j] = _w_matrix(s_half, u, cfg.eta)
    return WBasis(w_list=w_list, c=c, lam=cfg.lam, psi_weight=psi_weight, directions=dirs)


@dataclass(frozen=True, eq=False)
class LPProblem:
    a_matrix: np.ndarray
    b_vector: np.ndarray
    d_vector: np.ndarray

    @property
    def n_rows(self) -> int:
        return int(self.a_matrix.shape[0])

    @property
    def n_w(self) -> int:
        return int(self.d_vector.size)


def assemble_lp(ls: LiftedSamples, wb: WBasis, psi_weight: np.ndarray, cfg: SynthesisConfig) -> LPProblem:
    if ls.n_phi != wb.c.size:
        raise ValueError("Dimensões de LiftedSamples e WBasis diferem")
    up = np.einsum("ki,jil,kl->kj", ls.varphi_plus, wb.w_list, ls.varphi_plus)
    down = np.einsum("ki,jil,kl->kj", ls.varphi, wb.w_list, ls.varphi)
    a = up - (1.0 - cfg.gamma) * down
    c_plus = ls.varphi_plus @ wb.c
    c_k = ls.varphi @ wb.c
    b = c_plus ** 2 - (1.0 - cfg.gamma) * c_k ** 2 - cfg.gamma + ls.eps * cfg.lam
    d = np.einsum("jil,il->j", wb.w_list, psi_weight)
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b)) and np.all(np.isfinite(d))):
        raise SynthesisError("LP com entradas não finitas")
    return LPProblem(a_matrix=a, b_vector=b, d_vector=d)


def _highs_options(cfg: Optional[SynthesisConfig]) -> Dict[str, Any]:
    feas = cfg.feasibility_tol if cfg else 1e-8
    opt = cfg.optimality_tol if cfg else 1e-6
    # o HiGHS não aceita tolerâncias abaixo de 1e-10
    return {
        "primal_feasibility_tolerance": max(feas, 1e-10),
        "dual_feasibility_tolerance": max(min(opt, 1e-9), 1e-10),
        "presolve": True,
    }


def _linprog(cost: np.ndarray, a_ub: Optional[np.ndarray], b_ub: Optional[np.ndarray], bounds, options):
    if a_ub is not None and a_ub.shape[0] == 0:
        a_ub, b_ub = None, None
    return linprog(cost, A_ub=a_ub, b_ub=b_ub, bounds=bounds, method="highs", options=options)


@dataclass(frozen=True, eq=False)
class PhaseOne:
    """Solução de fase 1: ``alpha`` de menor violação máxima e os pesos das linhas.

    ``row_weights`` são os multiplicadores duais de ``A alpha + b <= t`` (ou,
    se o solver não os devolver, as violações positivas).
    """

    worst_row: int
    worst_violation: float
    alpha: np.ndarray
    row_weights: np.ndarray


def _phase_one(lp: LPProblem, options: Dict[str, Any]) -> PhaseOne:
    """Fase 1: ``min t`` com ``A alpha + b <= t``."""
    n_w = lp.n_w
    a = np.hstack([lp.a_matrix, -np.ones((lp.n_rows, 1))])
    cost = np.zeros(n_w + 1)
    cost[-1] = 1.0
    bounds = [(0.0, 1.0)] * n_w + [(0.0, None)]
    res = _linprog(cost, a, -lp.b_vector, bounds, options)
    alpha = np.clip(res.x[:n_w], 0.0, 1.0) if res.x is not None else np.zeros(n_w)
    violation = lp.a_matrix @ alpha + lp.b_vector
    k = int(np.argmax(violation))
    weights = np.zeros(lp.n_rows)
    marginals = getattr(getattr(res, "ineqlin", None), "marginals", None)
    if marginals is not None and len(marginals) == lp.n_rows:
        weights = np.clip(-np.asarray(marginals, dtype=float), 0.0, None)
    if not np.any(weights > 0):
        weights = np.clip(violation, 0.0, None)
    return PhaseOne(worst_row=k, worst_violation=float(violation[k]), alpha=alpha, row_weights=weights)


def solve_lp(lp: LPProblem, cfg: Optional[SynthesisConfig] = None) -> np.ndarray:
    """Resolve o LP; levanta :class:`LPInfeasibleError` se não houver ``alpha`` viável.

    Quando o HiGHS declara inviabilidade mas a fase 1 encontra ``alpha`` com
    violação máxima dentro de ``feasibility_tol``, o LP é resolvido de novo com
    as linhas relaxadas por essa violação.
    """
    n_w = lp.n_w
    options = _highs_options(cfg)
    bounds = [(0.0, 1.0)] * n_w
    feas_tol = cfg.feasibility_tol if cfg else 1e-8
    opt_tol = cfg.optimality_tol if cfg else 1e-6
    lexicographic = cfg.lexicographic_ties if cfg else True

    rhs = -lp.b_vector
    scale = 1.0 + np.abs(lp.b_vector) + np.abs(lp.a_matrix).sum(axis=1)
    used_rhs = rhs - ROW_MARGIN * scale
    res = _linprog(lp.d_vector, lp.a_matrix, used_rhs, bounds, options)
    if res.status == 2:
        # sem a margem de segurança
        used_rhs = rhs
        res = _linprog(lp.d_vector, lp.a_matrix, used_rhs, bounds, options)
    if res.status == 2:
        phase1 = _phase_one(lp, options)
        row, violation = phase1.worst_row, phase1.worst_violation
        if violation > feas_tol:
            raise LPInfeasibleError(
                f"LP inviável: linha {row} violada em {violation:.3e}",
                worst_row=row,
                worst_violation=violation,
                phase_one=phase1,
            )
        log.debug(f"Linha {row} violada em {violation:.3e} <= {feas_tol:.1e}; aceitando a solução de fase 1")
        used_rhs = rhs + max(violation, 0.0)
        res = _linprog(lp.d_vector, lp.a_matrix, used_rhs, bounds, options)
        if res.status != 0:
            return phase1.alpha
    if res.status != 0:
        raise SynthesisError(f"HiGHS falhou (status {res.status}): {res.message}")
    alpha = np.clip(res.x, 0.0, 1.0)
    if not lexicographic:
        return alpha

    # face ótima: d^T alpha <= f* + tol
    f_star = float(lp.d_vector @ alpha)
    face_a = [lp.a_matrix, lp.d_vector[None, :]]
    face_b = [used_rhs, np.array([f_star + opt_tol * max(1.0, abs(f_star))])]
    for i in range(n_w):
        cost = np.zeros(n_w)
        cost[i] = 1.0
        stage = _linprog(cost, np.vstack(face_a), np.concatenate(face_b), bounds, options)
        if stage.status != 0:
            log.debug(f"Estágio lexicográfico {i} falhou (status {stage.status}); mantendo solução anterior")
            break
        alpha = np.clip(stage.x, 0.0, 1.0)
        row = np.zeros((1, n_w))
        row[0, i] = 1.0
        face_a.append(row)
        face_b.append(np.array([alpha[i] + opt_tol]))
    return alpha


def refine_w_basis(wb: WBasis, ls: LiftedSamples, phase1: PhaseOne, cfg: SynthesisConfig) -> Optional[WBasis]:
    """Troca a matriz menos usada na fase 1 pela direção de menor custo reduzido.

    Com ``y`` os pesos das linhas, ``Y = sum_k y_k psi_k`` e
    ``M = S^(1/2) Y S^(1/2)``, a nova direção é o autovetor do menor autovalor
    de ``M``.  A matriz nova respeita a mesma cota ``W_j <= S``.  Devolve
    ``None`` quando nenhuma direção reduz a violação ou quando a direção já
    está na base.
    """
    y = phase1.row_weights
    if ls.n_s == 0 or not np.any(y > 0):
        return None
    y_mat = (ls.varphi_plus * y[:, None]).T @ ls.varphi_plus
    y_mat -= (1.0 - cfg.gamma) * (ls.varphi * y[:, None]).T @ ls.varphi
    s_half = _s_half(wb.c, cfg)
    m = s_half @ y_mat @ s_half
    vals, vecs = np.linalg.eigh(0.5 * (m + m.T))
    reduced_cost = (1.0 - cfg.eta) * vals[0] + cfg.eta * float(np.trace(m))
    if reduced_cost >= 0.0:
        return None
    u = vecs[:, 0]
    if np.max(np.abs(wb.directions @ u)) > 1.0 - 1e-9:
        return None
    # coluna com menor alpha; empates ficam com a de maior índice
    j = wb.n_w - 1 - int(np.argmin(phase1.alpha[::-1]))
    w_list = wb.w_list.copy()
    w_list[j] = _w_matrix(s_half, u, cfg.eta)
    dirs = wb.directions.copy()
    dirs[j] = u
    return WBasis(w_list=w_list, c=wb.c, lam=wb.lam, psi_weight=wb.psi_weight, directions=dirs)


def solve_with_refinement(
    ls: LiftedSamples,
    wb: WBasis,
    psi_weight: np.ndarray,
    cfg: SynthesisConfig,
) -> Tuple[np.ndarray, WBasis, int]:
    """Resolve o LP e, enquanto for inviável, refina a base (até ``basis_refinements`` trocas).

    Devolve ``(alpha, base usada, número de trocas)``.
    """
    rounds = 0
    while True:
        lp = assemble_lp(ls, wb, psi_weight, cfg)
        try:
            return solve_lp(lp, cfg), wb, rounds
        except LPInfeasibleError as exc:
            if rounds >= cfg.basis_refinements or exc.phase_one is None:
                raise
            refined = refine_w_basis(wb, ls, exc.phase_one, cfg)
            if refined is None:
                raise
            rounds += 1
            log.debug(f"Base W refinada ({rounds}): violação de fase 1 {exc.worst_violation:.3e}")
            wb = refined


def maximize_linear(
    objective: np.ndarray,
    a_ub: np.ndarray,
    b_ub: np.ndarray,
    bounds=(None, None),
) -> Tuple[int, float]:
    """``max objective^T z`` sujeito a ``a_ub z <= b_ub``; devolve ``(status, valor)``.

    ``status`` segue ``linprog``: 0 ótimo, 2 inviável, 3 ilimitado.
    """
    res = _linprog(-np.asarray(objective, dtype=float), a_ub, b_ub, bounds, _highs_options(None))
    value = -float(res.fun) if res.status == 0 else float("nan")
    return int(res.status), value


@dataclass(frozen=True, eq=False)
class FeasibilityReport:
    passed: bool
    worst_row: int
    worst_slack: float
    min_eig_lower: float
    min_eig_upper: float
    slacks: np.ndarray = field(repr=False)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "passed": self.passed,
            "worst_row": self.worst_row,
            "worst_slack": self.worst_slack,
            "min_eig_lower": self.min_eig_lower,
            "min_eig_upper": self.min_eig_upper,
            "n_rows": int(self.slacks.size),
        }


@dataclass(frozen=True, eq=False)
class SynthesisResult:
    p_matrix: np.ndarray
    alpha: np.ndarray
    objective: float
    feasibility_report: Optional[FeasibilityReport] = None


def recover_p(alpha: np.ndarray, wb: WBasis) -> SynthesisResult:
    alpha = np.asarray(alpha, dtype=float)
    p = np.outer(wb.c, wb.c) + np.einsum("j,jil->il", alpha, wb.w_list)
    objective = float(np.sum(p * wb.psi_weight))
    return SynthesisResult(p_matrix=p, alpha=alpha, objective=objective)


def verify_sdp_feasibility(
    result: SynthesisResult,
    ls: LiftedSamples,
    cfg: SynthesisConfig,
    c: Optional[np.ndarray] = None,
    row_tol: float = 1e-8,
    eig_tol: float = 1e-9,
) -> FeasibilityReport:
    """Confere ``<P, psi_k> <= gamma - eps_k lambda`` e ``c c^T <= P <= lambda I``.

    ``slacks[k] = gamma - eps_k lambda - <P, psi_k>`` (negativo = violado).
    """
    p = result.p_matrix
    n = p.shape[0]
    if c is None:
        c = np.zeros(n)
        c[0] = 1.0
    slacks = cfg.gamma - ls.eps * cfg.lam - ls.quadratic(p) if ls.n_s else np.empty(0)
    worst_row = int(np.argmin(slacks)) if slacks.size else -1
    worst_slack = float(slacks[worst_row]) if slacks.size else float("inf")
    lower = float(np.linalg.eigvalsh(p - np.outer(c, c))[0])
    upper = float(np.linalg.eigvalsh(cfg.lam * np.eye(n) - p)[0])
    passed = worst_slack >= -row_tol and lower >= -eig_tol and upper >= -eig_tol
    return FeasibilityReport(
        passed=bool(passed),
        worst_row=worst_row,
        worst_slack=worst_slack,
        min_eig_lower=lower,
        min_eig_upper=upper,
        slacks=slacks,
    )
