"""
acceptance.py
=============

Reproduz os critérios de aceitação do laboratório e imprime um scorecard JSON.
Cada critério roda o pipeline real (geração de dados, síntese, oráculo,
governador); ``--scale smoke`` usa uma grade de referências reduzida e menos
sondas, ``--scale full`` usa os presets completos.

Uso:

```
python evaluation/acceptance.py --scale smoke
python evaluation/acceptance.py --scale full --out runs/acceptance.json
```
"""

import argparse
import importlib
import json
import logging
import sys
import time
from pathlib import Path
from typing import Any, Callable, Dict, Tuple

PROJECT_ROOT = Path(__file__).resolve().parents[1]
if str(PROJECT_ROOT.parent) not in sys.path:
    sys.path.insert(0, str(PROJECT_ROOT.parent))
importlib.import_module(PROJECT_ROOT.name)  # registra o alias ddrg_lab

import numpy as np  # noqa: E402

from ddrg_lab.baseline import Polytope, compare_admissible_sets, maximal_output_admissible  # noqa: E402
from ddrg_lab.cli.presets import ExperimentConfig, get_preset  # noqa: E402
from ddrg_lab.governor import ReferenceGovernor, builtin_scenario, closed_loop_simulate  # noqa: E402
from ddrg_lab.invariance import AdmissibleSet, contains, validate_invariance  # noqa: E402
from ddrg_lab.lift import build_dictionary  # noqa: E402
from ddrg_lab.lift.dictionary import Dictionary  # noqa: E402
from ddrg_lab.plants import Plant, generate_dataset, make_plant  # noqa: E402
from ddrg_lab.synthesis import (  # noqa: E402
    LiftedSamples,
    LPInfeasibleError,
    SynthesisConfig,
    assemble_lp,
    assemble_psi_weight,
    build_w_basis,
    recover_p,
    solve_lp,
    synthesize_ci,
    tightening,
    verify_sdp_feasibility,
)

log = logging.getLogger("ddrg_lab.acceptance")

SCALES = {
    "smoke": {"ref_stride": 5, "n_points": 1_000, "grid": 80, "random_instances": 20, "queries": 1_000, "tight": 1_000},
    "full": {"ref_stride": 1, "n_points": 10_000, "grid": 200, "random_instances": 100, "queries": 10_000, "tight": 10_000},
}


def _fit(cfg: ExperimentConfig, stride: int, plant: Plant) -> Tuple[AdmissibleSet, Dictionary]:
    refs = cfg.dataset.references[::stride]
    ts = generate_dataset(plant, refs, cfg.dataset.n_t, cfg.dataset.horizon_s, cfg.dataset.seed)
    dcfg = cfg.dictionary
    dictionary = build_dictionary(ts.all_states(), dcfg.grid_shape, plant.constraint, dcfg.inflate, dcfg.domain_slack)
    return synthesize_ci(ts, dictionary, cfg.synthesis, plant=plant), dictionary


class Lab:
    """Resultados intermediários compartilhados entre critérios (ajustados sob demanda)."""

    def __init__(self, scale: Dict[str, Any]):
        self.scale = scale
        self._cache: Dict[str, Any] = {}

    def lti(self):
        if "lti" not in self._cache:
            cfg = get_preset("lti-oscillator")
            plant = make_plant(cfg.plant, cfg.plant_params)
            adm, dictionary = _fit(cfg, self.scale["ref_stride"], plant)
            self._cache["lti"] = (cfg, plant, adm, dictionary)
        return self._cache["lti"]

    def bicycle(self, speed: float):
        key = f"bicycle-{speed:g}"
        if key not in self._cache:
            cfg = get_preset("bicycle-lane")
            nominal = make_plant(cfg.plant, cfg.plant_params)
            plant = nominal.with_params(v=speed)
            adm, dictionary = _fit(cfg, self.scale["ref_stride"], plant)
            self._cache[key] = (cfg, plant, adm, dictionary)
        return self._cache[key]


def lti_containment(lab: Lab) -> Dict[str, Any]:
    _, plant, adm, dictionary = lab.lti()
    a_d, b_d = plant.matrices()
    constraints = Polytope.box_output(0, 1.0, 2)
    refs = adm.references + [r for r, _ in adm.excluded]
    oracle = {r: maximal_output_admissible(a_d, b_d, r, constraints) for r in refs}
    report = compare_admissible_sets(adm, dictionary, oracle, dictionary.working_domain.grid(lab.scale["grid"]))
    return {"passed": report.false_positives == 0, "false_positives": report.false_positives, "coverage": report.coverage}


def one_step_invariance(lab: Lab) -> Dict[str, Any]:
    violations, inconclusive, checked = 0, 0, 0
    for _, plant, adm, dictionary in (lab.lti(), lab.bicycle(20.0), lab.bicycle(27.0)):
        for s in adm.sets:
            rep = validate_invariance(s, dictionary, plant, n_points=lab.scale["n_points"], seed=0)
            violations += rep.n_violations
            inconclusive += rep.status == "inconclusive"
            checked += 1
    return {"passed": violations == 0, "sets": checked, "violations": violations, "inconclusive": inconclusive}


def sdp_feasibility(lab: Lab) -> Dict[str, Any]:
    rng = np.random.default_rng(7)
    solved = failures = 0
    for _ in range(lab.scale["random_instances"]):
        n, n_s = int(rng.integers(3, 8)), int(rng.integers(10, 60))
        cfg = SynthesisConfig(gamma=float(rng.uniform(0.0, 1.0)), lam=float(rng.uniform(2.0, 20.0)), n_w=int(rng.integers(1, 6)), epsilon_scale=1.0)
        x = rng.normal(size=(n_s, n))
        ls = LiftedSamples(x, 0.5 * x + 0.1 * rng.normal(size=(n_s, n)), rng.uniform(0.0, 1e-3, n_s), cfg.gamma)
        c = np.zeros(n)
        c[0] = 1.0
        psi = assemble_psi_weight(ls)
        wb = build_w_basis(c, cfg, psi)
        try:
            alpha = solve_lp(assemble_lp(ls, wb, psi, cfg), cfg)
        except LPInfeasibleError:
            continue
        solved += 1
        failures += not verify_sdp_feasibility(recover_p(alpha, wb), ls, cfg, c=c).passed
    preset_ok = all(s.feasibility.get("passed") for s in lab.lti()[2].sets + lab.bicycle(20.0)[2].sets)
    return {"passed": failures == 0 and preset_ok, "random_solved": solved, "random_failures": failures, "presets_passed": preset_ok}


def lti_closed_loop(lab: Lab) -> Dict[str, Any]:
    _, plant, adm, dictionary = lab.lti()
    run = closed_loop_simulate(plant, adm, dictionary, builtin_scenario("lti-step")).to_frame()
    max_y = float(run["x1"].abs().max())
    # erro de regime antes da troca de referência e no fim
    before = run[run["t"] < 30.0].iloc[-1]
    after = run.iloc[-1]
    settle = max(abs(before["x1"] - before["r_applied"]), abs(after["x1"] - after["r_applied"]))
    return {"passed": max_y <= 1.0 + 1e-6 and settle <= 0.05, "max_abs_y": max_y, "settling_error": float(settle)}


def bicycle_closed_loop(lab: Lab) -> Dict[str, Any]:
    _, plant, adm, dictionary = lab.bicycle(20.0)
    edge = closed_loop_simulate(plant, adm, dictionary, builtin_scenario("bicycle-road-edge")).to_frame()
    _, _, adm_fast, dict_fast = lab.bicycle(27.0)
    overtake = closed_loop_simulate(
        plant, adm, dictionary, builtin_scenario("bicycle-overtake"), switch_sets={4.0: (adm_fast, dict_fast)}
    ).to_frame()
    max_edge = float(edge["x1"].abs().max())
    max_overtake = float(overtake["x1"].abs().max())
    late_fallbacks = int(overtake["fallback"].iloc[1:].sum())
    return {
        "passed": max_edge <= 2.0 + 1e-6 and max_overtake <= 2.0 + 1e-6 and late_fallbacks == 0,
        "max_abs_y_edge": max_edge,
        "max_abs_y_overtake": max_overtake,
        "fallbacks_after_first_step": late_fallbacks,
    }


def tightening_properties(lab: Lab) -> Dict[str, Any]:
    rng = np.random.default_rng(11)
    worst_rel, monotone = 0.0, True
    for _ in range(lab.scale["tight"]):
        a, b = rng.normal(size=5), rng.normal(size=5)
        l_phi, l_f, delta = rng.uniform(0.0, 5.0, 3)
        value = tightening(a, b, l_phi, l_f, delta)
        closed = 2 * l_phi * delta * (l_f * np.sqrt(b @ b) + np.sqrt(a @ a)) + (l_phi * l_f * delta) ** 2
        worst_rel = max(worst_rel, abs(value - closed) / max(abs(closed), 1e-300))
        bump = 1.0 + rng.uniform(0.0, 1.0)
        monotone &= tightening(a, b, l_phi * bump, l_f, delta) >= value
        monotone &= tightening(a, b, l_phi, l_f * bump, delta) >= value
        monotone &= tightening(a, b, l_phi, l_f, delta * bump) >= value
    return {"passed": worst_rel <= 1e-12 and bool(monotone), "worst_relative_error": worst_rel}


def governor_optimality(lab: Lab) -> Dict[str, Any]:
    _, _, adm, dictionary = lab.lti()
    gov = ReferenceGovernor(adm, dictionary)
    rng = np.random.default_rng(3)
    mismatches = not_idempotent = answered = 0
    for _ in range(lab.scale["queries"]):
        x = rng.uniform([-1.0, -6.0], [1.0, 6.0])
        r_d = float(rng.uniform(-1.5, 1.5))
        feasible = [s.r_bar for s in adm.sets if contains(s, dictionary, x)]
        if not feasible:
            continue
        answered += 1
        best = min(feasible, key=lambda r: (abs(r - r_d), r))
        r_star = gov.govern(x, r_d)
        mismatches += r_star != best
        not_idempotent += gov.govern(x, r_star) != r_star
    return {"passed": mismatches == 0 and not_idempotent == 0, "queries": answered, "mismatches": mismatches, "not_idempotent": not_idempotent}


def oracle_consistency(lab: Lab) -> Dict[str, Any]:
    _, plant, _, _ = lab.lti()
    a_d, b_d = plant.matrices()
    constraints = Polytope.box_output(0, 1.0, 2)
    rng = np.random.default_rng(5)
    pi_failures = outside_failures = 0
    for r in (-0.6, 0.0, 0.6):
        poly = maximal_output_admissible(a_d, b_d, r, constraints)
        pts = rng.uniform([-1.0, -12.0], [1.0, 12.0], size=(200_000, 2))
        members = pts[poly.contains(pts)][: lab.scale["n_points"]]
        successors = members @ a_d.T + r * b_d[:, 0]
        pi_failures += int(np.sum(~poly.contains(successors, tol=1e-9)))
        outside = pts[~poly.contains(pts)][:1_000]
        x = outside.copy()
        violated = np.abs(x[:, 0]) > 1.0
        for _ in range(500):
            x = x @ a_d.T + r * b_d[:, 0]
            violated |= np.abs(x[:, 0]) > 1.0 + 1e-9
        outside_failures += int(np.sum(~violated))
    return {"passed": pi_failures == 0 and outside_failures == 0, "pi_failures": pi_failures, "outside_failures": outside_failures}


CRITERIA: Dict[str, Callable[[Lab], Dict[str, Any]]] = {
    "lti_containment": lti_containment,
    "one_step_invariance": one_step_invariance,
    "sdp_feasibility": sdp_feasibility,
    "lti_closed_loop": lti_closed_loop,
    "bicycle_closed_loop": bicycle_closed_loop,
    "tightening": tightening_properties,
    "governor_optimality": governor_optimality,
    "oracle_consistency": oracle_consistency,
}


def main() -> None:
    parser = argparse.ArgumentParser(description="Critérios de aceitação do laboratório")
    parser.add_argument("--scale", choices=sorted(SCALES), default="smoke")
    parser.add_argument("--only", nargs="*", default=None, help="Subconjunto de critérios")
    parser.add_argument("--out", type=Path, default=None, help="Grava o scorecard também neste arquivo")
    args = parser.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(levelname)s %(name)s: %(message)s")

    lab = Lab(SCALES[args.scale])
    scorecard: Dict[str, Any] = {"scale": args.scale, "criteria": {}}
    for name, criterion in CRITERIA.items():
        if args.only and name not in args.only:
            continue
        start = time.perf_counter()
        try:
            result = criterion(lab)
        except Exception as exc:
            log.error(f"Critério {name} falhou com exceção: {exc}")
            result = {"passed": False, "error": str(exc)}
        result["seconds"] = round(time.perf_counter() - start, 2)
        scorecard["criteria"][name] = result
    scorecard["passed"] = all(c["passed"] for c in scorecard["criteria"].values())
    text = json.dumps(scorecard, indent=2, default=float)
    if args.out:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(text, encoding="utf-8")
    print(text)


if __name__ == "__main__":
    main()
