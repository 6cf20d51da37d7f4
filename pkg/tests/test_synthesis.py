"""
Testes da síntese: termo de aperto, base W, montagem e solução do LP,
verificação no SDP original e o pipeline por referência.

O LP é conferido contra enumeração de vértices em instâncias pequenas; o
pipeline completo usa a planta escalar de primeira ordem, cujo conjunto
invariante para ``r = 0`` é conhecido.
"""

import itertools
import json

import numpy as np
import pytest
from pydantic import ValidationError

from ddrg_lab.cli.presets import get_preset
from ddrg_lab.invariance import validate_invariance
from ddrg_lab.lift import build_dictionary
from ddrg_lab.plants import generate_dataset, make_plant
from ddrg_lab.synthesis import (
    AllExcludedError,
    LiftedSamples,
    LPInfeasibleError,
    LPProblem,
    SynthesisConfig,
    SynthesisError,
    SynthesisResult,
    assemble_lp,
    assemble_psi_weight,
    build_w_basis,
    export_sdp,
    recover_p,
    robustness_diagnostics,
    solve_lp,
    solve_with_refinement,
    synthesize_ci,
    synthesize_model_based_pi_set,
    synthesize_pi_set,
    tightening,
    tightening_batch,
    verify_sdp_feasibility,
)

from .helpers import LagPlant, lag_dataset

NOMINAL = SynthesisConfig(gamma=0.0, lam=10.0, n_w=4, epsilon_scale=0.0)


def _random_samples(rng, n=4, n_s=30, gamma=0.5, contraction=0.5):
    x = rng.normal(size=(n_s, n))
    return LiftedSamples(x, contraction * x, np.zeros(n_s), gamma)


def _e1(n):
    c = np.zeros(n)
    c[0] = 1.0
    return c


# --- aperto ---------------------------------------------------------------

def test_tightening_closed_form():
    a, b = np.array([3.0, 4.0]), np.array([0.0, 2.0])
    # 2 * 1.5 * 0.1 * (2 * 2 + 5) + (1.5 * 2 * 0.1)^2
    assert tightening(a, b, 1.5, 2.0, 0.1) == pytest.approx(2.7 + 0.09, rel=1e-12)
    assert tightening(a, b, 1.5, 2.0, 0.0) == 0.0


def test_tightening_monotone_and_batched():
    rng = np.random.default_rng(4)
    for _ in range(200):
        a, b = rng.normal(size=3), rng.normal(size=3)
        l_phi, l_f, delta = rng.uniform(0.0, 3.0, 3)
        base = tightening(a, b, l_phi, l_f, delta)
        assert tightening(a, b, l_phi + 0.1, l_f, delta) >= base
        assert tightening(a, b, l_phi, l_f + 0.1, delta) >= base
        assert tightening(a, b, l_phi, l_f, delta + 0.1) >= base
    va, vb = rng.normal(size=(5, 3)), rng.normal(size=(5, 3))
    batch = tightening_batch(va, vb, 1.2, 0.7, 0.05)
    np.testing.assert_allclose(batch, [tightening(a, b, 1.2, 0.7, 0.05) for a, b in zip(va, vb)], rtol=1e-12)


@pytest.mark.parametrize("bad", [(-1.0, 1.0, 1.0), (1.0, np.inf, 1.0), (1.0, 1.0, np.nan)])
def test_tightening_rejects_invalid_constants(bad):
    with pytest.raises(ValueError):
        tightening(np.ones(2), np.ones(2), *bad)


def test_quadratic_matches_explicit_psi():
    rng = np.random.default_rng(5)
    ls = LiftedSamples(rng.normal(size=(6, 3)), rng.normal(size=(6, 3)), np.zeros(6), 0.3)
    m = rng.normal(size=(3, 3))
    m = m + m.T
    explicit = [float(np.sum(m * ls.psi(k))) for k in range(ls.n_s)]
    np.testing.assert_allclose(ls.quadratic(m), explicit, rtol=1e-10, atol=1e-12)


# --- base W e LP -------------------------------------------------------------

def test_w_basis_keeps_p_between_bounds():
    """c c^T <= P(alpha) <= lambda I para qualquer alpha em [0, 1]^n_w."""
    rng = np.random.default_rng(6)
    ls = _random_samples(rng, n=5)
    cfg = SynthesisConfig(lam=8.0, n_w=7)
    wb = build_w_basis(_e1(5), cfg, assemble_psi_weight(ls))
    assert wb.w_list.shape == (7, 5, 5)
    for w in wb.w_list:
        assert np.linalg.eigvalsh(w)[0] > 0, "W_j deve ser definida positiva"
    for alpha in (np.zeros(7), np.ones(7), rng.uniform(size=7)):
        p = recover_p(alpha, wb).p_matrix
        assert np.linalg.eigvalsh(p - np.outer(wb.c, wb.c))[0] >= -1e-10
        assert np.linalg.eigvalsh(cfg.lam * np.eye(5) - p)[0] >= -1e-10


def test_w_basis_requires_lambda_above_ctc():
    with pytest.raises(SynthesisError):
        build_w_basis(_e1(3), SynthesisConfig(lam=1.0), np.eye(3))


def test_assemble_lp_entries():
    """[A]_kj = <W_j, psi_k>, b_k = <c c^T, psi_k> - gamma + eps_k lambda, d_j = <W_j, Psi>."""
    rng = np.random.default_rng(7)
    ls = LiftedSamples(rng.normal(size=(5, 3)), rng.normal(size=(5, 3)), rng.uniform(0, 1e-3, 5), 0.4)
    cfg = SynthesisConfig(gamma=0.4, lam=6.0, n_w=3)
    psi_w = assemble_psi_weight(ls)
    wb = build_w_basis(_e1(3), cfg, psi_w)
    lp = assemble_lp(ls, wb, psi_w, cfg)
    cc = np.outer(wb.c, wb.c)
    for k in range(ls.n_s):
        psi_k = ls.psi(k)
        assert lp.b_vector[k] == pytest.approx(np.sum(cc * psi_k) - 0.4 + ls.eps[k] * 6.0, rel=1e-9, abs=1e-12)
        for j in range(3):
            assert lp.a_matrix[k, j] == pytest.approx(np.sum(wb.w_list[j] * psi_k), rel=1e-9, abs=1e-12)
    np.testing.assert_allclose(lp.d_vector, [np.sum(w * psi_w) for w in wb.w_list], rtol=1e-10)


def _vertex_optimum(lp: LPProblem) -> float:
    """Menor d^T alpha entre os vértices viáveis (n_w = 2)."""
    rows = [(lp.a_matrix[i], -lp.b_vector[i]) for i in range(lp.n_rows)]
    rows += [(np.array([-1.0, 0.0]), 0.0), (np.array([0.0, -1.0]), 0.0)]
    rows += [(np.array([1.0, 0.0]), 1.0), (np.array([0.0, 1.0]), 1.0)]
    best = np.inf
    for (g1, h1), (g2, h2) in itertools.combinations(rows, 2):
        mat = np.vstack([g1, g2])
        if abs(np.linalg.det(mat)) < 1e-12:
            continue
        v = np.linalg.solve(mat, [h1, h2])
        if all(g @ v <= h + 1e-9 for g, h in rows):
            best = min(best, float(lp.d_vector @ v))
    return best


def test_solve_lp_matches_vertex_enumeration():
    rng = np.random.default_rng(8)
    for _ in range(30):
        a = rng.normal(size=(6, 2))
        alpha0 = rng.uniform(size=2)
        b = -(a @ alpha0) - rng.uniform(0.0, 0.5, size=6)
        lp = LPProblem(a, b, rng.uniform(-1.0, 1.0, size=2))
        alpha = solve_lp(lp, SynthesisConfig())
        assert np.all(alpha >= 0.0) and np.all(alpha <= 1.0)
        assert np.all(a @ alpha + b <= 1e-8)
        assert lp.d_vector @ alpha == pytest.approx(_vertex_optimum(lp), abs=1e-5)


def test_solve_lp_reports_worst_row():
    lp = LPProblem(np.eye(2), np.array([2.0, -0.5]), np.ones(2))
    with pytest.raises(LPInfeasibleError) as info:
        solve_lp(lp)
    assert info.value.worst_row == 0
    assert info.value.worst_violation == pytest.approx(2.0, abs=1e-7)


@pytest.mark.parametrize("excess", [1e-13, 1e-11, 5e-9])
def test_solve_lp_accepts_violation_within_feasibility_tol(excess):
    """``alpha >= 1 + excess`` com ``alpha <= 1``: viável dentro de ``feasibility_tol``."""
    lp = LPProblem(np.array([[-1.0], [0.5]]), np.array([1.0 + excess, -1.0]), np.ones(1))
    alpha = solve_lp(lp, SynthesisConfig(feasibility_tol=1e-8))
    assert alpha[0] == pytest.approx(1.0, abs=1e-9)
    assert np.max(lp.a_matrix @ alpha + lp.b_vector) <= 1e-8


def test_solve_lp_rejects_violation_above_feasibility_tol():
    lp = LPProblem(np.array([[-1.0]]), np.array([1.0 + 1e-4]), np.ones(1))
    with pytest.raises(LPInfeasibleError) as info:
        solve_lp(lp, SynthesisConfig(feasibility_tol=1e-8))
    assert info.value.worst_violation == pytest.approx(1e-4, rel=1e-3)


def test_lexicographic_tie_break():
    """Face ótima alpha1 + alpha2 = 0.5: a ordem lexicográfica zera alpha1."""
    lp = LPProblem(np.array([[-1.0, -1.0]]), np.array([0.5]), np.ones(2))
    alpha = solve_lp(lp, SynthesisConfig(lexicographic_ties=True))
    assert alpha[0] <= 1e-5, f"alpha1 deveria ser ~0, obtido {alpha[0]}"
    assert alpha[1] == pytest.approx(0.5, abs=1e-5)


@pytest.mark.parametrize("seed", [9, 21, 33])
@pytest.mark.parametrize("gamma", [0.0, 0.5, 0.75])
@pytest.mark.parametrize("n_w", [1, 4, 9])
def test_verification_accepts_lp_solution_and_rejects_violation(seed, gamma, n_w):
    """Amostras contrativas (x+ = x / 2): o LP é viável para gamma <= 0.75 e a solução passa no SDP."""
    rng = np.random.default_rng(seed)
    cfg = SynthesisConfig(gamma=gamma, lam=10.0, n_w=n_w)
    ls = _random_samples(rng, n=4, gamma=cfg.gamma)
    psi_w = assemble_psi_weight(ls)
    wb = build_w_basis(_e1(4), cfg, psi_w)
    alpha = solve_lp(assemble_lp(ls, wb, psi_w, cfg), cfg)
    report = verify_sdp_feasibility(recover_p(alpha, wb), ls, cfg)
    assert report.passed, f"Verificação falhou: {report.to_dict()}"

    # P acima de lambda I viola a cota espectral
    too_big = SynthesisResult(p_matrix=20.0 * np.eye(4), alpha=np.zeros(4), objective=0.0)
    bad = verify_sdp_feasibility(too_big, ls, cfg)
    assert not bad.passed and bad.min_eig_upper < 0


def test_verification_detects_expanding_rows():
    x = np.array([[1.0, 0.0], [0.0, 1.0]])
    ls = LiftedSamples(x, 2.0 * x, np.zeros(2), 0.0)
    cfg = SynthesisConfig(gamma=0.0, lam=5.0)
    result = SynthesisResult(p_matrix=np.diag([1.0, 0.0]), alpha=np.zeros(1), objective=0.0)
    report = verify_sdp_feasibility(result, ls, cfg)
    assert not report.passed
    assert report.worst_row == 0
    assert report.worst_slack == pytest.approx(-3.0)


# --- configuração e diagnóstico ------------------------------------------

def test_config_validation_and_alias():
    cfg = SynthesisConfig.model_validate({"lambda": 4.0, "gamma": 0.2, "beta_margin": 0.1})
    assert cfg.lam == 4.0 and cfg.to_dict()["lambda"] == 4.0
    assert not cfg.nominal
    with pytest.raises(ValidationError):
        SynthesisConfig(gamma=0.1, beta_margin=0.2)
    with pytest.raises(ValidationError):
        SynthesisConfig(gamma=1.5)


def test_equilibrium_condition_diagnostic():
    cfg = SynthesisConfig(gamma=0.5, lam=2.0, beta_margin=0.4)
    diag = robustness_diagnostics(cfg, 10, np.array([0.01, 0.05]), 0.1, 0.2, 0.3, 1.1, 1.5)
    # 2 * (2 * 1.5 * 0.1^2 + 0.05) = 0.16 < 0.4
    assert diag.equilibrium_condition_lhs == pytest.approx(0.16)
    assert diag.equilibrium_condition_holds is True
    assert diag.max_eps == pytest.approx(0.05)


def test_export_sdp_payload(tmp_path):
    rng = np.random.default_rng(10)
    ls = LiftedSamples(rng.normal(size=(3, 2)), rng.normal(size=(3, 2)), np.array([0.0, 0.1, 0.2]), 0.25)
    cfg = SynthesisConfig(gamma=0.25, lam=3.0)
    path = export_sdp(ls, cfg, _e1(2), tmp_path / "sdp.json")
    payload = json.loads(path.read_text(encoding="utf-8"))
    assert payload["lambda"] == 3.0 and payload["gamma"] == 0.25
    assert len(payload["psi_k"]) == 3
    np.testing.assert_allclose(payload["psi_k"][1], ls.psi(1))
    assert payload["eps_k"] == [0.0, 0.1, 0.2]


# --- pipeline ----------------------------------------------------------------

def test_pipeline_recovers_known_invariant_set(lag_plant, scalar_dictionary):
    """r = 0: o conjunto ajustado é {x^4 <= 1} = [-1, 1], o maximal admissível."""
    ts = lag_dataset(lag_plant, {0.0: [-0.9, 0.9, -0.3, 0.3]})
    pi_set = synthesize_pi_set(ts, 0.0, scalar_dictionary, NOMINAL)
    np.testing.assert_allclose(pi_set.p_matrix, [[1.0]], atol=1e-4)
    assert abs(pi_set.x_inf[0]) < 1e-12
    assert pi_set.feasibility["passed"]
    assert pi_set.diagnostics["nominal"] is True


def test_pipeline_excludes_infeasible_and_inadmissible(lag_plant, scalar_dictionary):
    ts = lag_dataset(lag_plant, {0.0: [-0.9, 0.9], 0.5: [-0.4, 0.9], 1.2: [0.0, 0.5]})
    adm = synthesize_ci(ts, scalar_dictionary, NOMINAL)
    assert adm.references == [0.0]
    reasons = dict(adm.excluded)
    assert reasons[0.5].startswith("lp-infeasible"), reasons
    assert reasons[1.2] == "equilibrium-inadmissible"
    assert adm.metadata["nominal"] is True and adm.metadata["l_phi"] > 0


def test_pipeline_raises_when_everything_is_excluded(lag_plant, scalar_dictionary):
    ts = lag_dataset(lag_plant, {1.2: [0.0, 0.5]})
    with pytest.raises(SynthesisError):
        synthesize_ci(ts, scalar_dictionary, NOMINAL)


def test_model_based_variant(lag_plant, scalar_dictionary):
    pi_set = synthesize_model_based_pi_set(lag_plant, 0.0, scalar_dictionary, NOMINAL, points_per_axis=30)
    np.testing.assert_allclose(pi_set.p_matrix, [[1.0]], atol=1e-4)
    assert pi_set.diagnostics["model_based"] is True
    assert pi_set.diagnostics["l_f"] == pytest.approx(1.2 * 0.5)
    with pytest.raises(LPInfeasibleError):
        synthesize_model_based_pi_set(lag_plant, 0.5, scalar_dictionary, NOMINAL, points_per_axis=30)


def test_pipeline_checks_invariance_with_plant(lag_plant, scalar_dictionary):
    ts = lag_dataset(lag_plant, {0.0: [-0.9, 0.9, -0.3, 0.3], 0.5: [-0.4, 0.9]})
    adm = synthesize_ci(ts, scalar_dictionary, NOMINAL, plant=lag_plant)
    assert adm.references == [0.0]
    assert adm.metadata["invariance_checked"] is True
    summary = adm.sets[0].feasibility["invariance"]
    assert summary["status"] == "pass" and summary["n_violations"] == 0
    again = validate_invariance(
        adm.sets[0], scalar_dictionary, lag_plant, n_points=NOMINAL.invariance_samples, seed=summary["seed"]
    )
    assert again.n_violations == 0


def test_pipeline_excludes_sets_that_fail_invariance(lag_plant, scalar_dictionary):
    """Dados de a = 0.5 conferidos contra a = 1.5: o intervalo [-1, 1] deixa de ser invariante."""
    ts = lag_dataset(lag_plant, {0.0: [-0.9, 0.9, -0.3, 0.3]})
    with pytest.raises(AllExcludedError) as info:
        synthesize_ci(ts, scalar_dictionary, NOMINAL, plant=LagPlant(a=1.5))
    reasons = dict(info.value.excluded)
    assert reasons[0.0].startswith("invariance-violated"), reasons


def test_invariance_check_can_be_disabled(scalar_dictionary):
    ts = lag_dataset(LagPlant(a=0.5), {0.0: [-0.9, 0.9, -0.3, 0.3]})
    cfg = NOMINAL.model_copy(update={"invariance_samples": 0})
    adm = synthesize_ci(ts, scalar_dictionary, cfg, plant=LagPlant(a=1.5))
    assert adm.references == [0.0]
    assert "invariance" not in adm.sets[0].feasibility
    assert adm.metadata["invariance_checked"] is False


# --- refinamento da base -------------------------------------------------------

def _hidden_direction_samples():
    """Uma linha exige queda ao longo de (e1, e3); dez pares neutros fazem e2 dominar Psi."""
    varphi = np.array([[0.5, 0.0, 1.0]] + [[0.0, 5.0, 0.0]] * 10)
    varphi_plus = np.array([[0.6, 0.0, 0.0]] + [[0.0, 5.0, 0.0]] * 10)
    return LiftedSamples(varphi, varphi_plus, np.zeros(11), 0.0)


def test_basis_refinement_recovers_feasibility():
    ls = _hidden_direction_samples()
    psi_w = assemble_psi_weight(ls)
    spectral = SynthesisConfig(gamma=0.0, lam=10.0, n_w=1, epsilon_scale=0.0, basis_refinements=0)
    wb = build_w_basis(_e1(3), spectral, psi_w)
    assert abs(wb.directions[0][1]) == pytest.approx(1.0)
    with pytest.raises(LPInfeasibleError):
        solve_with_refinement(ls, wb, psi_w, spectral)

    cfg = spectral.model_copy(update={"basis_refinements": 3})
    alpha, refined, rounds = solve_with_refinement(ls, wb, psi_w, cfg)
    assert rounds >= 1
    report = verify_sdp_feasibility(recover_p(alpha, refined), ls, cfg)
    assert report.passed, f"Verificação falhou: {report.to_dict()}"
    bound = (cfg.lam * np.eye(3) - np.outer(_e1(3), _e1(3))) / cfg.n_w
    for w in refined.w_list:
        assert np.linalg.eigvalsh(w)[0] > 0
        assert np.linalg.eigvalsh(bound - w)[0] >= -1e-9


def test_basis_refinement_gives_up_without_new_direction(lag_plant, scalar_dictionary):
    """Com n_phi = 1 não há outra direção: a referência continua inviável."""
    ts = lag_dataset(lag_plant, {0.5: [-0.4, 0.9]})
    with pytest.raises(LPInfeasibleError):
        synthesize_pi_set(ts, 0.5, scalar_dictionary, NOMINAL.model_copy(update={"basis_refinements": 5}))


# --- presets em densidade reduzida --------------------------------------------

def test_bicycle_sets_pass_invariance_check():
    cfg = get_preset("bicycle-lane")
    plant = make_plant(cfg.plant, cfg.plant_params)
    refs = [-0.4, 0.0, 0.4]
    ts = generate_dataset(plant, refs, cfg.dataset.n_t, cfg.dataset.horizon_s, cfg.dataset.seed)
    dictionary = build_dictionary(ts.all_states(), (6, 6), plant.constraint)
    scfg = cfg.synthesis.model_copy(update={"invariance_samples": 500})
    try:
        adm = synthesize_ci(ts, dictionary, scfg, plant=plant)
        sets, excluded = adm.sets, adm.excluded
    except AllExcludedError as exc:
        sets, excluded = (), exc.excluded
    assert len(sets) + len(excluded) == len(refs)
    for s in sets:
        seed = s.feasibility["invariance"]["seed"]
        report = validate_invariance(s, dictionary, plant, n_points=scfg.invariance_samples, seed=seed)
        assert report.n_violations == 0, f"r_bar={s.r_bar}: {report.n_violations} violações"
    assert all(why for _, why in excluded)


def test_lti_preset_keeps_references():
    """Grade de referências reduzida (passo 0.1) no preset do oscilador."""
    cfg = get_preset("lti-oscillator")
    plant = make_plant(cfg.plant, cfg.plant_params)
    refs = cfg.dataset.references[::5]
    ts = generate_dataset(plant, refs, cfg.dataset.n_t, cfg.dataset.horizon_s, cfg.dataset.seed)
    dcfg = cfg.dictionary
    dictionary = build_dictionary(ts.all_states(), dcfg.grid_shape, plant.constraint, dcfg.inflate, dcfg.domain_slack)
    adm = synthesize_ci(ts, dictionary, cfg.synthesis, plant=plant)
    assert len(adm.sets) >= 4, f"apenas {adm.references} mantidas; excluídas: {adm.excluded}"
    for r_bar, why in adm.excluded:
        if why.startswith("lp-infeasible"):
            violation = float(why.rsplit(" ", 1)[1])
            assert violation > cfg.synthesis.feasibility_tol, f"r_bar={r_bar} excluída com violação {violation}"
