"""
Testes dos conjuntos PI, do conjunto admissível, dos bundles e da validação
empírica de invariância.
"""

import numpy as np
import pytest

from ddrg_lab.data import UnknownReferenceError
from ddrg_lab.invariance import (
    AdmissibleSet,
    PISet,
    admissible_references,
    ci_contains,
    containment_frame,
    contains,
    contains_batch,
    level,
    load_bundle,
    lyapunov_value,
    save_bundle,
    validate_invariance,
)

from .helpers import LagPlant, unit_set


def test_unit_set_is_constraint_interval(scalar_dictionary):
    """Com P = [[1]] e r = 0 o conjunto é {x^4 <= 1} = [-1, 1]."""
    s = unit_set(scalar_dictionary, 0.0)
    assert level(s, scalar_dictionary) == (1.0, True)
    assert contains(s, scalar_dictionary, np.array([0.99]))
    assert contains(s, scalar_dictionary, np.array([-1.0]))
    assert not contains(s, scalar_dictionary, np.array([1.01]))
    # fora do domínio de trabalho: nunca membro
    assert not contains(s, scalar_dictionary, np.array([5.0]))


def test_lyapunov_value_and_batch(scalar_dictionary):
    s = unit_set(scalar_dictionary, 0.5)
    pts = np.array([[0.0], [0.5], [1.0]])
    np.testing.assert_allclose(lyapunov_value(s, scalar_dictionary, pts), [0.0625, 0.0, 0.5625])
    assert lyapunov_value(s, scalar_dictionary, np.array([0.0])) == pytest.approx(0.0625)
    np.testing.assert_array_equal(contains_batch(s, scalar_dictionary, pts), [True, True, True])


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_membership_is_monotone_in_p(planar_dictionary, seed):
    """P1 <= P2 (incremento PSD): todo ponto do conjunto de P2 está no de P1."""
    rng = np.random.default_rng(seed)
    n = planar_dictionary.n_phi
    base = unit_set(planar_dictionary, 0.2)
    a = rng.normal(size=(n, n))
    p1 = base.p_matrix + 0.01 * a @ a.T
    pts = np.vstack([
        planar_dictionary.domain.sample(rng, 2000),
        base.x_inf + rng.normal(size=(2000, 2)) * [0.3, 1.5],
    ])
    inside_1 = contains_batch(unit_set(planar_dictionary, 0.2, p_matrix=p1), planar_dictionary, pts)
    for _ in range(4):
        m = 0.1 * rng.normal(size=(n, 3))
        p2 = p1 + m @ m.T
        inside_2 = contains_batch(unit_set(planar_dictionary, 0.2, p_matrix=p2), planar_dictionary, pts)
        assert not np.any(inside_2 & ~inside_1), f"{int(np.sum(inside_2 & ~inside_1))} pontos só no conjunto de P2"
        assert inside_1.sum() >= inside_2.sum()


def test_inadmissible_equilibrium_gives_empty_set(scalar_dictionary):
    s = unit_set(scalar_dictionary, 1.2)
    bound, admissible = level(s, scalar_dictionary)
    assert not admissible and bound == pytest.approx(0.44 ** 2)
    assert not contains(s, scalar_dictionary, np.array([1.2]))


def test_piset_rejects_asymmetric_matrix(scalar_dictionary):
    with pytest.raises(ValueError):
        PISet(0.0, np.zeros(2), np.array([[1.0, 2.0], [0.0, 1.0]]), np.ones(2), 10.0, 0.0, "x")


def test_admissible_set_invariants(scalar_dictionary, planar_dictionary):
    a = unit_set(scalar_dictionary, 0.0)
    with pytest.raises(ValueError):
        AdmissibleSet((a, unit_set(scalar_dictionary, 0.0)))
    with pytest.raises(ValueError):
        AdmissibleSet((a, unit_set(planar_dictionary, 0.5)))
    adm = AdmissibleSet((unit_set(scalar_dictionary, 0.5), a), excluded=((0.9, "lp-infeasible"),))
    assert adm.references == [0.0, 0.5]
    assert adm.index_of(0.5) == 1
    assert adm.get(0.5).r_bar == 0.5
    with pytest.raises(UnknownReferenceError):
        adm.get(0.25)


def test_membership_queries(lag_admissible, scalar_dictionary):
    assert admissible_references(lag_admissible, scalar_dictionary, np.array([0.2])) == [-0.5, 0.0, 0.5]
    assert ci_contains(lag_admissible, scalar_dictionary, np.array([-0.9]))
    assert not ci_contains(lag_admissible, scalar_dictionary, np.array([1.3]))


def test_bundle_round_trip_preserves_membership(tmp_path, lag_admissible, scalar_dictionary):
    adm = AdmissibleSet(lag_admissible.sets, excluded=((1.2, "equilibrium-inadmissible"),), metadata={"plant": "lag"})
    path = save_bundle(adm, scalar_dictionary, tmp_path / "bundle.json")
    loaded, dictionary = load_bundle(path)
    assert loaded.references == adm.references
    assert loaded.excluded == ((1.2, "equilibrium-inadmissible"),)
    assert loaded.metadata == {"plant": "lag"}
    grid = np.linspace(-1.6, 1.6, 41)[:, None]
    for original, restored in zip(adm.sets, loaded.sets):
        np.testing.assert_array_equal(
            contains_batch(original, scalar_dictionary, grid), contains_batch(restored, dictionary, grid)
        )


def test_bundle_rejects_foreign_dictionary(tmp_path, scalar_dictionary, planar_dictionary):
    path = save_bundle(AdmissibleSet((unit_set(planar_dictionary, 0.0),)), scalar_dictionary, tmp_path / "b.json")
    with pytest.raises(ValueError):
        load_bundle(path)


def test_containment_frame(lag_admissible, scalar_dictionary):
    grid = np.array([[0.0], [0.9], [1.2]])
    frame = containment_frame(lag_admissible, scalar_dictionary, grid, references=[0.0])
    assert list(frame.columns) == ["x1", "r_bar", "V", "inside"]
    assert frame["inside"].tolist() == [True, True, False]


def test_validation_passes_for_invariant_set(scalar_dictionary):
    """Para |a| < 1 o intervalo [-1, 1] é invariante: nenhuma violação."""
    report = validate_invariance(unit_set(scalar_dictionary, 0.0), scalar_dictionary, LagPlant(a=0.5), n_points=2000)
    assert report.status == "pass", report
    assert report.n_violations == 0
    assert report.n_members == 2000
    assert report.n_boundary == 1000


def test_validation_reports_violations(scalar_dictionary):
    """Com a = 1.5 os pontos perto da fronteira saem do intervalo."""
    report = validate_invariance(unit_set(scalar_dictionary, 0.0), scalar_dictionary, LagPlant(a=1.5), n_points=500)
    assert report.status == "fail"
    assert report.n_violations > 0
    assert report.worst_overshoot > 0
    assert all(abs(p[0]) > 2.0 / 3.0 for p in report.violating_points)
