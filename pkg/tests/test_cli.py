"""
Testes da linha de comando.

Os comandos rodam em diretórios temporários com configurações pequenas.  Os
bundles de ``check``, ``govern``, ``compare`` e ``report`` são montados à mão
(``P = c c^T`` em r = 0, isto é, a faixa ``|x1| <= 1`` inteira), o que torna
os códigos de saída previsíveis: a faixa não é invariante para o oscilador e
contém pontos fora do oráculo.
"""

import json

import pandas as pd
import pytest

from ddrg_lab.cli.main import EXIT_ERROR, EXIT_INFEASIBLE, EXIT_OK, EXIT_VIOLATION, main
from ddrg_lab.cli.presets import get_preset
from ddrg_lab.data import TrajectorySet
from ddrg_lab.invariance import AdmissibleSet, load_bundle, save_bundle
from ddrg_lab.plants import LtiPlant

from .helpers import planar_dictionary, unit_set

SMALL_LTI = {
    "plant": "lti",
    "dataset": {"references": [0.0, 0.5], "n_t": 2, "horizon_s": 4.0, "seed": 0},
    "dictionary": {"grid_shape": [4, 4]},
    "synthesis": {
        "gamma": 0.0,
        "lambda": 10.0,
        "n_w": 3,
        "epsilon_scale": 0.0,
        "lipschitz_points_per_axis": 40,
        "density_points_per_axis": 30,
    },
}


@pytest.fixture(autouse=True)
def _no_tracking(monkeypatch):
    monkeypatch.delenv("MLFLOW_TRACKING_URI", raising=False)


@pytest.fixture
def config_path(tmp_path):
    path = tmp_path / "small.json"
    path.write_text(json.dumps(SMALL_LTI), encoding="utf-8")
    return path


@pytest.fixture
def band_bundle(tmp_path):
    dictionary = planar_dictionary()
    adm = AdmissibleSet((unit_set(dictionary, 0.0),), metadata={"plant": "lti", "plant_params": LtiPlant().params()})
    return save_bundle(adm, dictionary, tmp_path / "band" / "bundle.json")


def _manifest(run_dir):
    return json.loads((run_dir / "manifest.json").read_text(encoding="utf-8"))


def test_gen_data_writes_dataset_and_manifest(tmp_path, config_path):
    out = tmp_path / "gen"
    assert main(["gen-data", "--config", str(config_path), "--out", str(out), "--format", "both"]) == EXIT_OK
    ts = TrajectorySet.load_json(out / "dataset.json")
    assert ts.references == [0.0, 0.5]
    assert ts.bundle(0.5).n_t == 2 and ts.bundle(0.5).length == 41
    assert (out / "dataset.csv").exists()
    manifest = _manifest(out)
    assert manifest["command"] == "gen-data"
    assert manifest["seeds"] == {"dataset": 0}
    assert {f["path"] for f in manifest["files"]} >= {"dataset.json", "dataset.csv", "metrics.prom"}
    assert "ddrg_samples" in (out / "metrics.prom").read_text(encoding="utf-8")


def test_gen_data_bicycle_speed_variants(tmp_path):
    cfg = {"plant": "bicycle", "dataset": {"references": [0.0], "n_t": 1, "horizon_s": 0.5}, "speeds": [20.0, 27.0]}
    path = tmp_path / "bike.json"
    path.write_text(json.dumps(cfg), encoding="utf-8")
    out = tmp_path / "bike"
    assert main(["gen-data", "--config", str(path), "--out", str(out)]) == EXIT_OK
    assert (out / "dataset.json").exists() and (out / "dataset_v27.json").exists()


def test_fit_produces_verified_bundle(tmp_path, config_path):
    data_dir = tmp_path / "gen"
    main(["gen-data", "--config", str(config_path), "--out", str(data_dir)])
    out = tmp_path / "fit"
    code = main(["fit", "--config", str(config_path), "--dataset", str(data_dir / "dataset.json"), "--out", str(out)])
    assert code in (EXIT_OK, EXIT_INFEASIBLE)
    if code == EXIT_OK:
        adm, dictionary = load_bundle(out / "bundle.json")
        assert dictionary.n_phi == 17
        assert all(s.feasibility["passed"] for s in adm.sets)
        assert len(adm.sets) + len(adm.excluded) == 2
        table = pd.read_csv(out / "feasibility.csv")
        assert sorted(table["r_bar"]) == [0.0, 0.5]
    assert (out / "manifest.json").exists()


def test_fit_requires_dataset(tmp_path, config_path):
    assert main(["fit", "--config", str(config_path), "--out", str(tmp_path / "fit")]) == EXIT_ERROR


def test_check_reports_violations(tmp_path, band_bundle):
    out = tmp_path / "check"
    assert main(["check", "--bundle", str(band_bundle), "--n-points", "500", "--out", str(out)]) == EXIT_VIOLATION
    payload = json.loads((out / "validation.json").read_text(encoding="utf-8"))
    assert payload["summary"]["failed"] == 1
    assert payload["reports"][0]["n_violations"] > 0


def test_govern_writes_log(tmp_path, band_bundle):
    scenario = {"name": "hold", "plant": "lti", "x0": [0.0, 0.0], "duration": 2.0, "schedule": [{"t_start": 0.0, "r_desired": 0.5}]}
    path = tmp_path / "hold.json"
    path.write_text(json.dumps(scenario), encoding="utf-8")
    out = tmp_path / "govern"
    assert main(["govern", "--bundle", str(band_bundle), "--scenario", str(path), "--out", str(out)]) == EXIT_OK
    log = pd.read_csv(out / "governor_log.csv")
    assert len(log) == 21
    assert (log["r_applied"] == 0.0).all() and (log["g"] == 0.0).all()


def test_baseline_and_compare(tmp_path, config_path, band_bundle):
    base_dir = tmp_path / "baseline"
    assert main(["baseline", "--config", str(config_path), "--bundle", str(band_bundle), "--out", str(base_dir)]) == EXIT_OK
    oracle = json.loads((base_dir / "oracle.json").read_text(encoding="utf-8"))
    assert [p["r_bar"] for p in oracle["polytopes"]] == [0.0]

    out = tmp_path / "compare"
    code = main(
        ["compare", "--bundle", str(band_bundle), "--baseline", str(base_dir / "oracle.json"), "--grid", "21", "--out", str(out)]
    )
    assert code == EXIT_VIOLATION
    report = json.loads((out / "comparison.json").read_text(encoding="utf-8"))
    assert report["false_positives"] > 0


def test_baseline_rejects_bicycle(tmp_path):
    assert main(["baseline", "--plant", "bicycle", "--out", str(tmp_path / "b")]) == EXIT_ERROR


def test_report_writes_containment(tmp_path, band_bundle):
    out = tmp_path / "report"
    assert main(["report", "--bundle", str(band_bundle), "--grid", "11", "--out", str(out)]) == EXIT_OK
    frame = pd.read_csv(out / "containment.csv")
    assert len(frame) == 121
    summary = json.loads((out / "summary.json").read_text(encoding="utf-8"))
    # |x1| <= 1 em 9 das 11 colunas da grade do domínio [-1.1, 1.1]
    assert summary["inside_fraction"]["0"] == pytest.approx(9 / 11)


def test_invalid_plant_param(tmp_path, config_path):
    args = ["gen-data", "--config", str(config_path), "--plant-param", "omega", "--out", str(tmp_path / "x")]
    assert main(args) == EXIT_ERROR


@pytest.mark.parametrize("alias, name", [("paper-4.1", "lti-oscillator"), ("paper-4.2", "bicycle-lane")])
def test_preset_aliases(alias, name):
    assert get_preset(alias) == get_preset(name)


def test_gen_data_accepts_preset_alias(tmp_path):
    out = tmp_path / "alias"
    args = ["gen-data", "--preset", "paper-4.1", "--n-t", "1", "--horizon", "0.3", "--out", str(out)]
    assert main(args) == EXIT_OK
    ts = TrajectorySet.load_json(out / "dataset.json")
    assert len(ts.references) == 121


def test_unknown_preset_is_input_error(tmp_path):
    assert main(["gen-data", "--preset", "paper-9.9", "--out", str(tmp_path / "x")]) == EXIT_ERROR
