"""
Testes do conjunto de dados de trajetórias e das operações amostrais.
"""

import numpy as np
import pytest

from ddrg_lab.data import (
    DataError,
    SamplePairs,
    TrajectorySet,
    UnknownReferenceError,
    estimate_equilibrium,
    estimate_lipschitz_f,
    extract_pairs,
    sample_density,
)
from ddrg_lab.lift import Box

from .helpers import LagPlant, lag_dataset


def test_rejects_malformed_datasets():
    """Comprimentos diferentes, amostras não finitas e referências repetidas são erros."""
    ok = np.zeros((4, 2))
    with pytest.raises(DataError):
        TrajectorySet.from_arrays({0.0: [ok, np.zeros((5, 2))]}, dt=0.1)
    bad = ok.copy()
    bad[1, 0] = np.nan
    with pytest.raises(DataError):
        TrajectorySet.from_arrays({0.0: [bad]}, dt=0.1)
    with pytest.raises(DataError):
        TrajectorySet.from_arrays({0.0: [ok]}, dt=0.0)
    with pytest.raises(DataError):
        TrajectorySet.from_arrays({0.0: [ok], 1e-12: [ok]}, dt=0.1)


def test_equilibrium_is_mean_of_final_states():
    t1 = np.array([[0.0, 0.0], [1.0, 0.2]])
    t2 = np.array([[0.5, 0.0], [3.0, -0.2]])
    ts = TrajectorySet.from_arrays({0.7: [t1, t2]}, dt=0.1)
    eq = estimate_equilibrium(ts, 0.7)
    np.testing.assert_allclose(eq.x_inf, [2.0, 0.0])
    assert eq.residual == pytest.approx(np.hypot(1.0, 0.2))


def test_equilibrium_ignores_trajectory_order():
    rng = np.random.default_rng(12)
    trajs = [rng.normal(size=(6, 2)) for _ in range(7)]
    base = estimate_equilibrium(TrajectorySet.from_arrays({0.2: trajs}, dt=0.1), 0.2)
    for _ in range(5):
        order = rng.permutation(len(trajs))
        shuffled = TrajectorySet.from_arrays({0.2: [trajs[i] for i in order]}, dt=0.1)
        eq = estimate_equilibrium(shuffled, 0.2)
        np.testing.assert_allclose(eq.x_inf, base.x_inf, rtol=1e-12, atol=1e-14)
        assert eq.residual == pytest.approx(base.residual, rel=1e-12)


def test_pairs_are_trajectory_major():
    plant = LagPlant(a=0.5)
    ts = lag_dataset(plant, {0.0: [0.8, -0.4, 0.2]}, n_steps=10)
    sp = extract_pairs(ts, 0.0)
    assert sp.n_s == 3 * 10, f"Esperado 30 pares, obtido {sp.n_s}"
    np.testing.assert_allclose(sp.x_k_plus, 0.5 * sp.x_k)
    assert sp.x_k[0, 0] == pytest.approx(0.8)
    assert sp.x_k[10, 0] == pytest.approx(-0.4)


def test_single_sample_trajectory_yields_no_pairs():
    ts = TrajectorySet.from_arrays({0.0: [np.array([[0.3]])]}, dt=0.1)
    assert extract_pairs(ts, 0.0).n_s == 0


def test_unknown_reference():
    ts = TrajectorySet.from_arrays({0.0: [np.zeros((3, 1))]}, dt=0.1)
    with pytest.raises(UnknownReferenceError):
        ts.bundle(0.5)


def test_sample_density_is_covering_radius():
    """Amostras em 0 e 1 cobrem [0, 1] com raio 0.5 (ponto médio)."""
    sp = SamplePairs(0.0, np.array([[0.0], [1.0]]), np.array([[0.0], [1.0]]))
    delta = sample_density(sp, Box(np.array([0.0]), np.array([1.0])), points_per_axis=101)
    assert delta == pytest.approx(0.5)


def test_sample_density_never_grows_with_more_samples():
    rng = np.random.default_rng(13)
    region = Box(np.array([-1.0, -2.0]), np.array([1.0, 2.0]))
    x = region.sample(rng, 200)
    previous = np.inf
    for n in (5, 20, 60, 200):
        delta = sample_density(SamplePairs(0.0, x[:n], x[:n]), region, points_per_axis=60)
        assert delta <= previous, f"delta cresceu de {previous} para {delta} com {n} amostras"
        previous = delta


def test_lipschitz_of_linear_map():
    """Para x+ = 0.5 x a razão máxima é 0.5; com segurança 1.2 fica 0.6."""
    rng = np.random.default_rng(2)
    x = rng.uniform(-1, 1, size=(50, 2))
    sp = SamplePairs(0.0, x, 0.5 * x)
    assert estimate_lipschitz_f(sp, safety=1.2) == pytest.approx(0.6)


@pytest.mark.parametrize("scale", [0.25, 3.7, 40.0])
def test_lipschitz_is_scale_consistent(scale):
    """Escalar estados e sucessores pelo mesmo fator não muda a razão."""
    rng = np.random.default_rng(14)
    x = rng.uniform(-1, 1, size=(80, 2))
    x_plus = np.tanh(x @ np.array([[0.9, 0.3], [-0.2, 0.7]]))
    base = estimate_lipschitz_f(SamplePairs(0.0, x, x_plus))
    scaled = estimate_lipschitz_f(SamplePairs(0.0, scale * x, scale * x_plus))
    assert scaled == pytest.approx(base, rel=1e-10)


def test_lipschitz_needs_distinct_states():
    x = np.ones((5, 2))
    with pytest.raises(DataError):
        estimate_lipschitz_f(SamplePairs(0.0, x, x))
    with pytest.raises(DataError):
        estimate_lipschitz_f(SamplePairs(0.0, x[:1], x[:1]))


def test_csv_export_preserves_trajectories(tmp_path):
    plant = LagPlant(a=0.3)
    ts = lag_dataset(plant, {-0.2: [0.5, -0.5], 0.4: [0.9, 0.1]}, n_steps=6)
    path = ts.save_csv(tmp_path / "ds.csv")
    loaded = TrajectorySet.load_csv(path, dt=ts.dt)
    assert loaded.references == ts.references
    for r in ts.references:
        for a, b in zip(ts.bundle(r).trajectories, loaded.bundle(r).trajectories):
            np.testing.assert_allclose(a, b)


def test_json_schema_rejects_missing_dt(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{"entries": [{"r_bar": 0.0, "trajectories": [[[0.0]]]}]}', encoding="utf-8")
    with pytest.raises(ValueError):
        TrajectorySet.load_json(path)
