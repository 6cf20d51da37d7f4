"""
main.py
-------

Linha de comando do laboratório.  Subcomandos:

* ``gen-data``  gera o conjunto de dados de trajetórias (JSON e/ou CSV);
* ``fit``       sintetiza o conjunto admissível e grava o bundle;
* ``check``     valida empiricamente a invariância de cada conjunto;
* ``govern``    simula a malha fechada com o governador num cenário;
* ``baseline``  calcula o oráculo exato (apenas LTI);
* ``compare``   compara bundle e oráculo numa grade de estados;
* ``report``    grava grades de pertinência por referência.

Códigos de saída: 0 sucesso, 2 síntese inviável, 3 violações encontradas.
Cada execução grava ``manifest.json`` e ``metrics.prom`` no diretório da
execução (``--out``, padrão ``$DDRG_RUNS_DIR/<comando>``).

Uso:

```
python cli/main.py gen-data --preset lti-oscillator --out runs/lti
python cli/main.py fit --preset lti-oscillator --dataset runs/lti/dataset.json --out runs/lti
python cli/main.py govern --bundle runs/lti/bundle.json --scenario lti-step --out runs/lti
```
"""

import argparse
import importlib
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

# Ajusta sys.path para localizar o pacote raiz quando executado como script
PROJECT_ROOT = Path(__file__).resolve().parents[1]
if __package__ in (None, ""):
    if str(PROJECT_ROOT.parent) not in sys.path:
        sys.path.insert(0, str(PROJECT_ROOT.parent))
    importlib.import_module(PROJECT_ROOT.name)  # registra o alias ddrg_lab

import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

import ddrg_lab  # noqa: E402
from ddrg_lab.baseline import OracleError, Polytope, compare_admissible_sets, load_polytopes  # noqa: E402
from ddrg_lab.baseline import maximal_output_admissible, save_polytopes  # noqa: E402
from ddrg_lab.cli.manifest import RunManifest, utc_now, write_manifest  # noqa: E402
from ddrg_lab.cli.presets import ExperimentConfig, get_preset, load_experiment_config, merge_overrides  # noqa: E402
from ddrg_lab.cli.settings import Settings, load_settings  # noqa: E402
from ddrg_lab.cli.tracking import log_run, write_metrics  # noqa: E402
from ddrg_lab.data import TrajectorySet  # noqa: E402
from ddrg_lab.governor import SCENARIOS, Scenario, builtin_scenario, closed_loop_simulate  # noqa: E402
from ddrg_lab.invariance import containment_frame, load_bundle, save_bundle, validate_invariance  # noqa: E402
from ddrg_lab.lift import build_dictionary  # noqa: E402
from ddrg_lab.plants import LtiPlant, generate_dataset, make_plant  # noqa: E402
from ddrg_lab.synthesis import SynthesisError, export_reference_sdp, synthesize_ci, synthesize_model_based_ci  # noqa: E402

log = logging.getLogger("ddrg_lab.cli")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INFEASIBLE = 2
EXIT_VIOLATION = 3

DEFAULT_PRESET = {"lti": "lti-oscillator", "bicycle": "bicycle-lane"}
CONSTRAINT_TOL = 1e-6


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--preset", default=None, help="Preset de experimento (lti-oscillator ou paper-4.1, bicycle-lane ou paper-4.2)")
    parser.add_argument("--config", type=Path, default=None, help="ExperimentConfig em JSON ou TOML")
    parser.add_argument("--plant", choices=sorted(DEFAULT_PRESET), default=None, help="Planta (define o preset padrão)")
    parser.add_argument(
        "--plant-param", action="append", default=[], metavar="CHAVE=VALOR", help="Sobrescreve um parâmetro da planta"
    )
    parser.add_argument("--out", type=Path, default=None, help="Diretório da execução")
    parser.add_argument("--log-level", default=None, help="Nível de log (padrão: DDRG_LOG_LEVEL ou INFO)")
    parser.add_argument("--workers", type=int, default=None, help="Processos paralelos (padrão: DDRG_WORKERS)")


def parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(description="Governador de referência data-driven por conjuntos invariantes")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="Gera o conjunto de dados de trajetórias")
    _common(p)
    p.add_argument("--seed", type=int, default=None, help="Semente do gerador")
    p.add_argument("--n-t", type=int, default=None, help="Trajetórias por referência")
    p.add_argument("--horizon", type=float, default=None, help="Duração de cada trajetória (s)")
    p.add_argument("--format", choices=["json", "csv", "both"], default="json")

    p = sub.add_parser("fit", help="Sintetiza o conjunto admissível")
    _common(p)
    p.add_argument("--dataset", type=Path, default=None, help="Conjunto de dados (JSON ou CSV)")
    p.add_argument("--dt", type=float, default=None, help="Período de amostragem para datasets CSV")
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--n-w", type=int, default=None)
    p.add_argument("--epsilon-scale", type=float, default=None, help="1 = robusto, 0 = nominal")
    p.add_argument("--model-based", action="store_true", help="Gera os pares pela planta conhecida")
    p.add_argument("--export-sdp", type=float, default=None, metavar="R_BAR", help="Exporta o SDP de uma referência")

    p = sub.add_parser("check", help="Valida a invariância do bundle")
    _common(p)
    p.add_argument("--bundle", type=Path, required=True)
    p.add_argument("--n-points", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("govern", help="Simula a malha fechada com o governador")
    _common(p)
    p.add_argument("--bundle", type=Path, required=True)
    p.add_argument("--scenario", required=True, help=f"Cenário embutido ({', '.join(sorted(SCENARIOS))}) ou JSON")
    p.add_argument(
        "--switch-bundle", action="append", default=[], metavar="T=CAMINHO",
        help="Bundle alternativo ativado no instante T",
    )

    p = sub.add_parser("baseline", help="Oráculo do conjunto maximal admissível (LTI)")
    _common(p)
    p.add_argument("--bundle", type=Path, default=None, help="Usa as referências do bundle")

    p = sub.add_parser("compare", help="Compara bundle e oráculo")
    _common(p)
    p.add_argument("--bundle", type=Path, required=True)
    p.add_argument("--baseline", type=Path, required=True)
    p.add_argument("--grid", type=int, default=200, help="Pontos por eixo da grade de estados")

    p = sub.add_parser("report", help="Grades de pertinência por referência")
    _common(p)
    p.add_argument("--bundle", type=Path, required=True)
    p.add_argument("--grid", type=int, default=100)
    p.add_argument("--references", type=float, nargs="*", default=None)

    return parser.parse_args(argv)


def _parse_value(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _plant_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    out = {}
    for item in args.plant_param:
        if "=" not in item:
            raise ValueError(f"--plant-param espera CHAVE=VALOR, recebido {item!r}")
        key, value = item.split("=", 1)
        out[key.strip()] = _parse_value(value.strip())
    return out


def load_experiment(args: argparse.Namespace) -> ExperimentConfig:
    """Preset (ou arquivo de configuração) com as sobrescritas da linha de comando."""
    if args.config:
        cfg = load_experiment_config(args.config)
    else:
        cfg = get_preset(args.preset or DEFAULT_PRESET[args.plant or "lti"])
    if args.plant and cfg.plant != args.plant:
        raise ValueError(f"--plant {args.plant} incompatível com a configuração ({cfg.plant})")
    overrides = {
        "dataset.seed": getattr(args, "seed", None) if args.command == "gen-data" else None,
        "dataset.n_t": getattr(args, "n_t", None),
        "dataset.horizon_s": getattr(args, "horizon", None),
        "synthesis.gamma": getattr(args, "gamma", None),
        "synthesis.lambda": getattr(args, "lam", None),
        "synthesis.n_w": getattr(args, "n_w", None),
        "synthesis.epsilon_scale": getattr(args, "epsilon_scale", None),
    }
    overrides.update({f"plant_params.{k}": v for k, v in _plant_overrides(args).items()})
    return merge_overrides(cfg, overrides)


class RunContext:
    """Diretório da execução, arquivos gerados, métricas e manifesto."""

    def __init__(self, command: str, args: argparse.Namespace, settings: Settings, argv: List[str]):
        self.command = command
        self.settings = settings
        self.run_dir = Path(args.out) if args.out else settings.runs_dir / command
        self.run_dir.mkdir(parents=True, exist_ok=True)
        self.outputs: List[Path] = []
        self.metrics: Dict[str, float] = {}
        self.params: Dict[str, Any] = {}
        self.manifest = RunManifest(
            command=command,
            argv=list(argv),
            config_paths=[str(args.config)] if args.config else [],
            version=ddrg_lab.__version__,
            started_at=utc_now(),
        )

    def path(self, name: str) -> Path:
        p = self.run_dir / name
        self.outputs.append(p)
        return p

    def finish(self) -> None:
        metrics_path = write_metrics(self.run_dir, self.command, self.metrics)
        outputs = self.outputs + [metrics_path]
        write_manifest(self.run_dir, self.manifest, outputs)
        log_run(self.settings.mlflow_tracking_uri, self.command, self.params, self.metrics, outputs)


def cmd_gen_data(args: argparse.Namespace, ctx: RunContext) -> int:
    cfg = load_experiment(args)
    plant = make_plant(cfg.plant, cfg.plant_params)
    ds = cfg.dataset
    ctx.manifest.seeds["dataset"] = ds.seed
    ctx.params.update({"plant": cfg.plant, "n_references": len(ds.references), "n_t": ds.n_t, "horizon_s": ds.horizon_s})
    variants = [("dataset", plant)]
    if cfg.plant == "bicycle" and cfg.speeds:
        nominal = plant.params()["v"]
        variants += [(f"dataset_v{v:g}", plant.with_params(v=v)) for v in cfg.speeds if v != nominal]
    n_samples = 0
    for stem, variant in variants:
        ts = generate_dataset(variant, ds.references, ds.n_t, ds.horizon_s, ds.seed, workers=ctx.settings.workers)
        if args.format in ("json", "both"):
            ts.save_json(ctx.path(f"{stem}.json"))
        if args.format in ("csv", "both"):
            ts.save_csv(ctx.path(f"{stem}.csv"))
        n_samples += sum(t.shape[0] for e in ts.entries for t in e.trajectories)
    ctx.metrics.update({"references": len(ds.references), "trajectories": len(ds.references) * ds.n_t, "samples": n_samples})
    print(f"Conjunto de dados gravado em {ctx.run_dir} ({len(variants)} variante(s), {n_samples} amostras)")
    return EXIT_OK


def _load_dataset(path: Path, dt: Optional[float]) -> TrajectorySet:
    if path.suffix.lower() == ".csv":
        if dt is None:
            raise ValueError("Datasets CSV exigem --dt")
        return TrajectorySet.load_csv(path, dt)
    return TrajectorySet.load_json(path)


def _feasibility_frame(adm) -> pd.DataFrame:
    rows = []
    for s in adm.sets:
        rows.append(
            {
                "r_bar": s.r_bar,
                "status": "fitted",
                "reason": "",
                "worst_slack": s.feasibility.get("worst_slack"),
                "objective": s.feasibility.get("objective"),
                "delta": s.diagnostics.get("delta"),
                "l_f": s.diagnostics.get("l_f"),
                "max_eps": s.diagnostics.get("max_eps"),
                "c_phi_inf": s.diagnostics.get("c_phi_inf"),
                "basis_refinements": s.feasibility.get("basis_refinements"),
                "invariance": (s.feasibility.get("invariance") or {}).get("status", ""),
            }
        )
    rows += [{"r_bar": r, "status": "excluded", "reason": why} for r, why in adm.excluded]
    return pd.DataFrame(rows).sort_values("r_bar")


def cmd_fit(args: argparse.Namespace, ctx: RunContext) -> int:
    cfg = load_experiment(args)
    plant = make_plant(cfg.plant, cfg.plant_params)
    dcfg, scfg = cfg.dictionary, cfg.synthesis
    ctx.params.update({"plant": cfg.plant, **scfg.to_dict(), "grid_shape": dcfg.grid_shape})
    try:
        if args.model_based:
            corners = plant.domain.grid(2)
            dictionary = build_dictionary(corners, dcfg.grid_shape, plant.constraint, dcfg.inflate, dcfg.domain_slack)
            adm = synthesize_model_based_ci(
                plant, cfg.dataset.references, dictionary, scfg, cfg.model_based_points, ctx.settings.workers
            )
        else:
            if args.dataset is None:
                raise ValueError("fit exige --dataset (ou --model-based)")
            ts = _load_dataset(args.dataset, args.dt)
            dictionary = build_dictionary(ts.all_states(), dcfg.grid_shape, plant.constraint, dcfg.inflate, dcfg.domain_slack)
            if args.export_sdp is not None:
                export_reference_sdp(ts, args.export_sdp, dictionary, scfg, ctx.path("sdp_export.json"))
            adm = synthesize_ci(ts, dictionary, scfg, workers=ctx.settings.workers, plant=plant)
    except SynthesisError as exc:
        log.error(f"Síntese inviável: {exc}")
        ctx.metrics.update({"sets_fitted": 0})
        return EXIT_INFEASIBLE
    adm.metadata.update({"plant": cfg.plant, "plant_params": plant.params()})
    save_bundle(adm, dictionary, ctx.path("bundle.json"))
    _feasibility_frame(adm).to_csv(ctx.path("feasibility.csv"), index=False)
    ctx.metrics.update(
        {"sets_fitted": len(adm.sets), "references_excluded": len(adm.excluded), "n_phi": dictionary.n_phi}
    )
    flag = " (nominal)" if scfg.nominal else ""
    print(f"{len(adm.sets)} conjuntos ajustados{flag}, {len(adm.excluded)} referências excluídas")
    return EXIT_OK


def _bundle_plant(args: argparse.Namespace, metadata: Dict[str, Any]):
    kind = args.plant or metadata.get("plant") or "lti"
    params = dict(metadata.get("plant_params") or {}) if kind == metadata.get("plant") else {}
    params.update(_plant_overrides(args))
    return make_plant(kind, params)


def cmd_check(args: argparse.Namespace, ctx: RunContext) -> int:
    adm, dictionary = load_bundle(args.bundle)
    plant = _bundle_plant(args, adm.metadata)
    n_points = args.n_points or 10_000
    ctx.manifest.seeds["invariance"] = args.seed
    reports = [validate_invariance(s, dictionary, plant, n_points=n_points, seed=args.seed) for s in adm.sets]
    failed = [r for r in reports if r.status == "fail"]
    inconclusive = [r for r in reports if r.status == "inconclusive"]
    summary = {"sets": len(reports), "failed": len(failed), "inconclusive": len(inconclusive)}
    with open(ctx.path("validation.json"), "w", encoding="utf-8") as f:
        json.dump({"summary": summary, "reports": [r.model_dump() for r in reports]}, f, indent=2)
    ctx.metrics.update(
        {
            "sets_checked": len(reports),
            "sets_failed": len(failed),
            "invariance_violations": sum(r.n_violations for r in reports),
        }
    )
    print(f"Invariância: {len(reports) - len(failed)} de {len(reports)} conjuntos sem violações")
    return EXIT_VIOLATION if failed else EXIT_OK


def _parse_switch_bundles(items: List[str]):
    out = {}
    for item in items:
        if "=" not in item:
            raise ValueError(f"--switch-bundle espera T=CAMINHO, recebido {item!r}")
        t, path = item.split("=", 1)
        out[float(t)] = load_bundle(Path(path))
    return out


def cmd_govern(args: argparse.Namespace, ctx: RunContext) -> int:
    adm, dictionary = load_bundle(args.bundle)
    if args.scenario in SCENARIOS:
        scenario = builtin_scenario(args.scenario)
    else:
        scenario = Scenario.load(args.scenario)
    metadata = adm.metadata
    params = dict(metadata.get("plant_params") or {}) if metadata.get("plant") == scenario.plant else {}
    params.update(scenario.plant_params)
    params.update(_plant_overrides(args))
    plant = make_plant(scenario.plant, params)
    switch_sets = _parse_switch_bundles(args.switch_bundle)
    run_log = closed_loop_simulate(plant, adm, dictionary, scenario, switch_sets=switch_sets or None)
    run_log.to_csv(ctx.path("governor_log.csv"))
    max_g = run_log.max_g
    ctx.params.update({"scenario": scenario.name})
    ctx.metrics.update({"max_constraint": max_g, "fallbacks": run_log.fallback_count, "aborted": int(run_log.aborted)})
    print(f"Cenário {scenario.name}: max g = {max_g:.4f}, fallbacks = {run_log.fallback_count}")
    violated = max_g > 1.0 + CONSTRAINT_TOL or run_log.aborted
    return EXIT_VIOLATION if violated else EXIT_OK


def cmd_baseline(args: argparse.Namespace, ctx: RunContext) -> int:
    cfg = load_experiment(args)
    plant = make_plant(cfg.plant, cfg.plant_params)
    if not isinstance(plant, LtiPlant):
        raise OracleError("O oráculo exato só está disponível para a planta LTI")
    a_d, b_d = plant.matrices()
    constraints = Polytope.box_output(plant.constraint.axis, plant.constraint.bound, plant.state_dim)
    if args.bundle:
        adm, _ = load_bundle(args.bundle)
        references = sorted(adm.references + [r for r, _ in adm.excluded])
    else:
        references = cfg.dataset.references
    oracle = {r: maximal_output_admissible(a_d, b_d, r, constraints) for r in references}
    save_polytopes(oracle, ctx.path("oracle.json"))
    n_empty = sum(1 for p in oracle.values() if p.is_empty)
    ctx.metrics.update({"references": len(oracle), "empty_sets": n_empty})
    print(f"Oráculo calculado para {len(oracle)} referências ({n_empty} vazias)")
    return EXIT_OK


def cmd_compare(args: argparse.Namespace, ctx: RunContext) -> int:
    adm, dictionary = load_bundle(args.bundle)
    oracle = load_polytopes(args.baseline)
    grid = dictionary.working_domain.grid(args.grid)
    report = compare_admissible_sets(adm, dictionary, oracle, grid)
    with open(ctx.path("comparison.json"), "w", encoding="utf-8") as f:
        json.dump(report.model_dump(), f, indent=2)
    report.to_frame().to_csv(ctx.path("comparison.csv"), index=False)
    ctx.metrics.update({"false_positives": report.false_positives, "coverage": report.coverage})
    print(f"Falsos positivos: {report.false_positives}, cobertura: {report.coverage:.3f}")
    return EXIT_VIOLATION if report.false_positives else EXIT_OK


def cmd_report(args: argparse.Namespace, ctx: RunContext) -> int:
    adm, dictionary = load_bundle(args.bundle)
    grid = dictionary.domain.grid(args.grid)
    frame = containment_frame(adm, dictionary, grid, references=args.references)
    frame.to_csv(ctx.path("containment.csv"), index=False)
    fractions = frame.groupby("r_bar")["inside"].mean() if len(frame) else pd.Series(dtype=float)
    summary = {
        "sets": len(adm.sets),
        "excluded": [{"r_bar": r, "reason": why} for r, why in adm.excluded],
        "grid_points": int(grid.shape[0]),
        "inside_fraction": {f"{r:g}": float(v) for r, v in fractions.items()},
        "metadata": adm.metadata,
    }
    with open(ctx.path("summary.json"), "w", encoding="utf-8") as f:
        json.dump(summary, f, indent=2)
    ctx.metrics.update({"sets": len(adm.sets), "mean_inside_fraction": float(np.mean(fractions)) if len(fractions) else 0.0})
    print(f"Relatório de pertinência gravado em {ctx.run_dir}")
    return EXIT_OK


COMMANDS = {
    "gen-data": cmd_gen_data,
    "fit": cmd_fit,
    "check": cmd_check,
    "govern": cmd_govern,
    "baseline": cmd_baseline,
    "compare": cmd_compare,
    "report": cmd_report,
}


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = parse_args(argv)
    settings = load_settings()
    if args.workers:
        settings = settings.model_copy(update={"workers": args.workers})
    logging.basicConfig(
        level=(args.log_level or settings.log_level).upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    ctx = RunContext(args.command, args, settings, argv)
    try:
        code = COMMANDS[args.command](args, ctx)
    except (ValueError, KeyError, FileNotFoundError) as exc:
        log.error(f"{args.command} falhou: {exc}")
        code = EXIT_ERROR
    ctx.finish()
    return code


if __name__ == "__main__":
    sys.exit(main())
