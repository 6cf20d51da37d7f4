"""
pipeline.py
-----------

Síntese de ponta a ponta.  Para cada referência:

1. estima o equilíbrio pela média dos estados finais;
2. extrai os pares amostrais e mede ``delta``, ``L_f`` e ``L_phi``;
3. faz o lifting, monta a base ``W_j`` e o LP;
4. resolve o LP (refinando a base ``W_j`` se necessário), reconstrói ``P`` e
   confere a viabilidade no SDP original;
5. com a planta disponível, checa a invariância em um passo e reajusta com os
   contraexemplos encontrados.

``synthesize_ci`` repete o procedimento para todas as referências (em paralelo
quando ``workers > 1``) e registra como excluídas as referências cujo LP é
inviável, cujo equilíbrio não é admissível, cuja verificação falha ou cujo
conjunto não passa na checagem de invariância.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from ..data.samples import SamplePairs, estimate_equilibrium, estimate_lipschitz_f, extract_pairs, sample_density
from ..data.trajectories import DataError, TrajectorySet
from ..invariance.sets import AdmissibleSet, PISet
from ..invariance.validation import InvarianceReport, validate_invariance
from ..lift.dictionary import Dictionary, DomainError, LipschitzBound, eval_phi, lipschitz_bound
from ..plants.base import Plant, PlantIntegrationError
from .config import SynthesisConfig
from .diagnostics import robustness_diagnostics
from .lifting import assemble_psi_weight, lift_samples
from .lp import (
    FeasibilityReport,
    LPInfeasibleError,
    SynthesisError,
    build_w_basis,
    recover_p,
    solve_c,
    solve_with_refinement,
    verify_sdp_feasibility,
)

log = logging.getLogger(__name__)

# contraexemplos acrescentados por rodada de reajuste
COUNTEREXAMPLES = 200


class EquilibriumInadmissibleError(SynthesisError):
    """``c^T phi(x_inf) > 1``: o conjunto seria vazio."""


class VerificationError(SynthesisError):
    def __init__(self, message: str, report: FeasibilityReport):
        super().__init__(message)
        self.report = report


class InvarianceViolatedError(SynthesisError):
    """O conjunto ajustado deixa pontos escaparem em um passo da planta."""

    def __init__(self, message: str, report: InvarianceReport):
        super().__init__(message)
        self.report = report


def _fit_pairs(
    r_bar: float,
    sp: SamplePairs,
    x_inf: np.ndarray,
    residual: float,
    dictionary: Dictionary,
    cfg: SynthesisConfig,
    l_phi: Optional[float],
    l_f: Optional[float],
    delta: Optional[float],
    model_based: bool = False,
) -> PISet:
    c = solve_c(dictionary)
    c_phi_inf = float(c @ eval_phi(dictionary, x_inf))
    if c_phi_inf > 1.0:
        raise EquilibriumInadmissibleError(f"r_bar={r_bar}: c^T phi(x_inf) = {c_phi_inf:.4f} > 1")
    if sp.n_s == 0:
        raise DataError(f"r_bar={r_bar}: nenhum par amostral")
    if not cfg.nominal and None in (l_phi, l_f, delta):
        raise DataError(f"r_bar={r_bar}: constantes de Lipschitz/densidade indisponíveis para o ajuste robusto")

    ls = lift_samples(sp, dictionary, x_inf, cfg, l_phi or 0.0, l_f or 0.0, delta or 0.0)
    psi_weight = assemble_psi_weight(ls)
    wb = build_w_basis(c, cfg, psi_weight)
    try:
        alpha, wb, refinements = solve_with_refinement(ls, wb, psi_weight, cfg)
    except LPInfeasibleError as exc:
        exc.diagnostics.update({"r_bar": r_bar, "delta": delta, "l_f": l_f, "l_phi": l_phi})
        raise
    result = recover_p(alpha, wb)
    report = verify_sdp_feasibility(result, ls, cfg, c=c, row_tol=cfg.feasibility_tol)
    if not report.passed:
        raise VerificationError(
            f"r_bar={r_bar}: verificação do SDP falhou (folga {report.worst_slack:.2e} na linha {report.worst_row})",
            report,
        )
    diag = robustness_diagnostics(
        cfg, ls.n_s, ls.eps, residual, c_phi_inf, delta, l_f, l_phi, model_based=model_based
    )
    log.debug(f"r_bar={r_bar}: objetivo {result.objective:.4g}, alpha={np.round(alpha, 4).tolist()}")
    return PISet(
        r_bar=float(r_bar),
        x_inf=x_inf,
        p_matrix=result.p_matrix,
        c=c,
        lam=cfg.lam,
        gamma=cfg.gamma,
        dict_ref=dictionary.fingerprint,
        feasibility={**report.to_dict(), "objective": result.objective, "alpha": alpha.tolist(), "basis_refinements": refinements},
        diagnostics=diag.model_dump(),
    )


def _dictionary_lipschitz(dictionary: Dictionary, cfg: SynthesisConfig) -> LipschitzBound:
    return lipschitz_bound(dictionary, cfg.lipschitz_points_per_axis, cfg.lipschitz_phi_safety)


def reference_constants(
    sp: SamplePairs, dictionary: Dictionary, cfg: SynthesisConfig
) -> Tuple[Optional[float], Optional[float]]:
    """``(delta, L_f)`` medidos nos pares; ``None`` quando indefinidos no ajuste nominal."""
    if not sp.n_s:
        return None, None
    delta = sample_density(sp, dictionary.domain, cfg.density_points_per_axis)
    try:
        l_f = estimate_lipschitz_f(sp, safety=cfg.lipschitz_f_safety)
    except DataError:
        if not cfg.nominal:
            raise
        log.debug(f"r_bar={sp.r_bar}: L_f indefinido (estados coincidentes); ajuste nominal segue sem ele")
        l_f = None
    return delta, l_f


def _certify(
    pi_set: PISet,
    sp: SamplePairs,
    refit: Callable[[SamplePairs], PISet],
    dictionary: Dictionary,
    plant: Plant,
    cfg: SynthesisConfig,
) -> PISet:
    """Checa a invariância em um passo; a cada falha reajusta com os contraexemplos como novos pares."""
    for attempt in range(cfg.invariance_refinements + 1):
        report = validate_invariance(
            pi_set, dictionary, plant, n_points=cfg.invariance_samples,
            seed=cfg.invariance_seed + attempt, max_reported=COUNTEREXAMPLES,
        )
        if report.status != "fail":
            summary = {**report.model_dump(exclude={"violating_points"}), "seed": cfg.invariance_seed + attempt}
            return replace(pi_set, feasibility={**pi_set.feasibility, "invariance": summary})
        if attempt == cfg.invariance_refinements:
            break
        x = np.asarray(report.violating_points, dtype=float)
        x_plus = np.atleast_2d(plant.step(x, sp.r_bar))
        keep = dictionary.in_working_domain(x_plus)
        if not np.any(keep):
            break
        log.debug(f"r_bar={sp.r_bar}: reajuste com {int(np.sum(keep))} contraexemplos")
        sp = SamplePairs(
            r_bar=sp.r_bar,
            x_k=np.vstack([sp.x_k, x[keep]]),
            x_k_plus=np.vstack([sp.x_k_plus, x_plus[keep]]),
        )
        try:
            pi_set = refit(sp)
        except LPInfeasibleError as exc:
            raise InvarianceViolatedError(
                f"r_bar={sp.r_bar}: LP inviável após acrescentar os contraexemplos ({exc})", report
            ) from exc
    raise InvarianceViolatedError(
        f"r_bar={sp.r_bar}: {report.n_violations} violações de invariância (pior {report.worst_overshoot:.3e})",
        report,
    )


def synthesize_pi_set(
    ts: TrajectorySet,
    r_bar: float,
    dictionary: Dictionary,
    cfg: SynthesisConfig,
    lipschitz: Optional[LipschitzBound] = None,
    plant: Optional[Plant] = None,
) -> PISet:
    """Conjunto PI de uma referência a partir dos dados.

    Com ``plant`` e ``cfg.invariance_samples > 0`` o conjunto só é devolvido
    depois de passar na checagem de invariância.
    """
    eq = estimate_equilibrium(ts, r_bar)
    sp = extract_pairs(ts, r_bar)
    if lipschitz is None:
        lipschitz = _dictionary_lipschitz(dictionary, cfg)
    delta, l_f = reference_constants(sp, dictionary, cfg)

    def fit(pairs: SamplePairs) -> PISet:
        return _fit_pairs(pairs.r_bar, pairs, eq.x_inf, eq.residual, dictionary, cfg, lipschitz.l_phi, l_f, delta)

    pi_set = fit(sp)
    if plant is None or cfg.invariance_samples == 0:
        return pi_set
    return _certify(pi_set, sp, fit, dictionary, plant, cfg)


def synthesize_model_based_pi_set(
    plant: Plant,
    r_bar: float,
    dictionary: Dictionary,
    cfg: SynthesisConfig,
    points_per_axis: int = 30,
    lipschitz: Optional[LipschitzBound] = None,
) -> PISet:
    """Variante com modelo conhecido: pares gerados pela planta numa grade do domínio.

    Usa o equilíbrio exato; ``delta`` é a meia-diagonal de uma célula da grade.
    """
    grid = dictionary.domain.grid(points_per_axis)
    successors = plant.step(grid, r_bar)
    keep = dictionary.in_working_domain(successors)
    if not np.all(keep):
        log.debug(f"r_bar={r_bar}: {int(np.sum(~keep))} sucessores fora do domínio descartados")
    sp = SamplePairs(r_bar=float(r_bar), x_k=grid[keep], x_k_plus=successors[keep])
    if lipschitz is None:
        lipschitz = _dictionary_lipschitz(dictionary, cfg)
    cell = (dictionary.domain.upper - dictionary.domain.lower) / (points_per_axis - 1)
    delta = 0.5 * float(np.linalg.norm(cell))
    l_f = estimate_lipschitz_f(sp, safety=cfg.lipschitz_f_safety) if sp.n_s >= 2 else None
    x_inf = plant.equilibrium(r_bar)

    def fit(pairs: SamplePairs) -> PISet:
        return _fit_pairs(
            float(r_bar), pairs, x_inf, 0.0, dictionary, cfg,
            lipschitz.l_phi, l_f, delta, model_based=True,
        )

    pi_set = fit(sp)
    if cfg.invariance_samples == 0:
        return pi_set
    return _certify(pi_set, sp, fit, dictionary, plant, cfg)


def _exclusion_reason(exc: Exception) -> str:
    if isinstance(exc, LPInfeasibleError):
        return f"lp-infeasible: linha {exc.worst_row}, violação {exc.worst_violation:.3e}"
    if isinstance(exc, EquilibriumInadmissibleError):
        return "equilibrium-inadmissible"
    if isinstance(exc, VerificationError):
        return "verification-failed"
    if isinstance(exc, InvarianceViolatedError):
        return f"invariance-violated: {exc.report.n_violations} de {exc.report.n_members} pontos"
    if isinstance(exc, DomainError):
        return f"domain: {exc}"
    if isinstance(exc, DataError):
        return f"data: {exc}"
    if isinstance(exc, PlantIntegrationError):
        return f"plant: {exc}"
    return f"synthesis: {exc}"


def _guarded(fit: Callable[[], PISet], r_bar: float) -> Tuple[float, Optional[PISet], str]:
    try:
        return r_bar, fit(), ""
    except (SynthesisError, LPInfeasibleError, DomainError, DataError, PlantIntegrationError) as exc:
        return r_bar, None, _exclusion_reason(exc)


def _data_job(args) -> Tuple[float, Optional[PISet], str]:
    ts, r_bar, dictionary, cfg, lipschitz, plant = args
    return _guarded(lambda: synthesize_pi_set(ts, r_bar, dictionary, cfg, lipschitz, plant), r_bar)


def _model_job(args) -> Tuple[float, Optional[PISet], str]:
    plant, r_bar, dictionary, cfg, points_per_axis, lipschitz = args
    return _guarded(
        lambda: synthesize_model_based_pi_set(plant, r_bar, dictionary, cfg, points_per_axis, lipschitz), r_bar
    )


class AllExcludedError(SynthesisError):
    """Nenhuma referência sobreviveu; ``excluded`` traz os motivos."""

    def __init__(self, message: str, excluded: Tuple[Tuple[float, str], ...]):
        super().__init__(message)
        self.excluded = excluded


def _collect(job: Callable, args: List[tuple], workers: int, cfg: SynthesisConfig) -> AdmissibleSet:
    if workers > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(job, args))
    else:
        results = [job(a) for a in args]
    sets, excluded = [], []
    for r_bar, pi_set, reason in sorted(results, key=lambda item: item[0]):
        if pi_set is None:
            log.warning(f"Referência {r_bar} excluída: {reason}")
            excluded.append((r_bar, reason))
        else:
            log.info(f"Referência {r_bar} ajustada")
            sets.append(pi_set)
    if not sets:
        raise AllExcludedError(f"Todas as {len(results)} referências foram excluídas", tuple(excluded))
    metadata = {"config": cfg.to_dict(), "nominal": cfg.nominal}
    return AdmissibleSet(tuple(sets), tuple(excluded), metadata)


def synthesize_ci(
    ts: TrajectorySet,
    dictionary: Dictionary,
    cfg: SynthesisConfig,
    workers: int = 1,
    references: Optional[Sequence[float]] = None,
    plant: Optional[Plant] = None,
) -> AdmissibleSet:
    """Conjunto admissível a partir dos dados; ``plant`` habilita a checagem de invariância."""
    refs = list(references) if references is not None else ts.references
    lipschitz = _dictionary_lipschitz(dictionary, cfg)
    log.info(f"Sintetizando {len(refs)} conjuntos PI (n_phi={dictionary.n_phi}, L_phi={lipschitz.l_phi:.4g})")
    args = [(ts, r, dictionary, cfg, lipschitz, plant) for r in refs]
    adm = _collect(_data_job, args, workers, cfg)
    adm.metadata.update({"l_phi": lipschitz.l_phi, "invariance_checked": plant is not None and cfg.invariance_samples > 0})
    return adm


def synthesize_model_based_ci(
    plant: Plant,
    references: Sequence[float],
    dictionary: Dictionary,
    cfg: SynthesisConfig,
    points_per_axis: int = 30,
    workers: int = 1,
) -> AdmissibleSet:
    lipschitz = _dictionary_lipschitz(dictionary, cfg)
    args = [(plant, float(r), dictionary, cfg, points_per_axis, lipschitz) for r in references]
    adm = _collect(_model_job, args, workers, cfg)
    adm.metadata.update(
        {"l_phi": lipschitz.l_phi, "model_based": True, "invariance_checked": cfg.invariance_samples > 0}
    )
    return adm
