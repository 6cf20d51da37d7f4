"""
Testes do dicionário de funções de base.

Cobrem o primeiro elemento ``phi_1 = g``, o núcleo thin-plate, a rejeição de
estados fora do domínio e a cota de Lipschitz comparada com razões de
diferenças medidas em pares aleatórios.
"""

import numpy as np
import pytest

from ddrg_lab.lift import Box, BoxConstraint, Dictionary, DomainError, build_dictionary, eval_phi, eval_varphi
from ddrg_lab.lift import lipschitz_bound, thin_plate


def test_first_element_is_constraint(planar_dictionary):
    """phi_1(x) deve ser g(x) = (x1 / 1)^2, com subnível unitário igual à restrição."""
    for x in ([1.0, 0.0], [-1.0, 3.0], [0.5, -2.0]):
        phi = eval_phi(planar_dictionary, np.array(x))
        assert phi[0] == pytest.approx(x[0] ** 2), f"phi_1 incorreto em {x}: {phi[0]}"
    assert planar_dictionary.n_phi == 10


def test_thin_plate_kernel():
    """rho^2 ln(rho) vale 0 na origem e e^2 em rho = e."""
    values = thin_plate(np.array([0.0, np.e ** 2, 1.0]))
    assert values[0] == 0.0
    assert values[1] == pytest.approx(np.e ** 2)
    assert values[2] == 0.0, "ln(1) = 0"


def test_batch_matches_single(planar_dictionary):
    rng = np.random.default_rng(0)
    pts = planar_dictionary.domain.sample(rng, 7)
    batch = eval_phi(planar_dictionary, pts)
    for i, x in enumerate(pts):
        np.testing.assert_allclose(batch[i], eval_phi(planar_dictionary, x), rtol=0, atol=1e-12)


def test_varphi_is_zero_at_equilibrium(planar_dictionary):
    x_inf = np.array([0.3, 0.0])
    assert np.all(eval_varphi(planar_dictionary, x_inf, x_inf) == 0.0)


def test_rejects_points_outside_working_domain(planar_dictionary):
    """Estados fora do domínio expandido ou não finitos levantam DomainError."""
    with pytest.raises(DomainError):
        eval_phi(planar_dictionary, np.array([5.0, 0.0]))
    with pytest.raises(DomainError):
        eval_phi(planar_dictionary, np.array([np.nan, 0.0]))
    with pytest.raises(DomainError):
        eval_phi(planar_dictionary, np.array([0.0, 0.0, 0.0]))
    # dentro da folga de 50% continua válido
    eval_phi(planar_dictionary, np.array([1.5, 9.0]))


def test_build_dictionary_covers_constraint_interval():
    """Mesmo com dados concentrados, o eixo restrito cobre [-bound, bound]."""
    states = np.array([[0.1, -0.2], [0.2, 0.3], [0.15, 0.0]])
    d = build_dictionary(states, (4, 5), BoxConstraint(axis=0, bound=2.0))
    assert d.domain.lower[0] <= -2.0 and d.domain.upper[0] >= 2.0
    assert d.centers.shape == (20, 2)
    assert d.grid_shape == (4, 5)


def test_fingerprint_survives_serialization(planar_dictionary):
    restored = Dictionary.from_dict(planar_dictionary.to_dict())
    assert restored.fingerprint == planar_dictionary.fingerprint
    other = Dictionary.from_grid(planar_dictionary.domain, (4, 4), planar_dictionary.constraint_fn)
    assert other.fingerprint != planar_dictionary.fingerprint


def test_invalid_construction():
    with pytest.raises(ValueError):
        BoxConstraint(axis=0, bound=0.0)
    with pytest.raises(ValueError):
        Box(np.array([1.0]), np.array([0.0]))
    with pytest.raises(ValueError):
        Dictionary(np.array([[5.0]]), Box(np.array([-1.0]), np.array([1.0])), BoxConstraint(0, 1.0))


def test_lipschitz_bound_dominates_difference_quotients(planar_dictionary):
    """Nenhum par de pontos do domínio deve exceder a cota L_phi."""
    bound = lipschitz_bound(planar_dictionary, points_per_axis=120, safety=1.1)
    rng = np.random.default_rng(1)
    a = planar_dictionary.domain.sample(rng, 10_000)
    b = a + rng.normal(scale=0.05, size=a.shape)
    b = np.clip(b, planar_dictionary.domain.lower, planar_dictionary.domain.upper)
    num = np.linalg.norm(eval_phi(planar_dictionary, a) - eval_phi(planar_dictionary, b), axis=1)
    den = np.linalg.norm(a - b, axis=1)
    ratios = num[den > 1e-9] / den[den > 1e-9]
    assert ratios.max() <= bound.l_phi, f"Razão {ratios.max():.4f} acima de L_phi={bound.l_phi:.4f}"


def test_lipschitz_rejects_low_safety(planar_dictionary):
    with pytest.raises(ValueError):
        lipschitz_bound(planar_dictionary, safety=0.9)
