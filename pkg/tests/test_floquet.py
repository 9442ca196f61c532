"""Quasienergy branches and their counting-phase derivatives."""

import math

import numpy as np
import pytest

from prft.core import (
    CountingGrid,
    DegenerateQuasienergyError,
    MatterState,
    ValidationError,
)
from prft.floquet import (
    decompose_system,
    expand_in_floquet_basis,
    floquet_decompose,
    quasienergy_phase_derivatives,
)
from prft.semiclassical import propagate_generalized, two_mode_jc_system

G = 0.2
PHI2 = math.pi / 2.0
# analytic exchange-point values recomputed by scripts/freeze_expected.py
FOLDED = 0.06568542494923812  # 2 sqrt(2) g - omega / 2
FIRST = math.sqrt(2.0) * G
SECOND = G / math.sqrt(2.0)


def exchange_system():
    return two_mode_jc_system(1.0, 1.0, G, G, 0.0, PHI2)


def asymmetric_system():
    """Unequal couplings keep |W(chi_1)| > 0, so no branch crossing on the loop.

    The symmetric exchange point is degenerate at chi_1 = pi/2 (the effective
    coupling vanishes there), which full-loop decompositions must reject; see
    test_degenerate_quasienergies_are_rejected.
    """
    return two_mode_jc_system(1.0, 1.0, 0.25, 0.15, 0.0, PHI2)


# ---------------------------------------------------------------------------
# exchange-point closed forms
# ---------------------------------------------------------------------------

def test_quasienergies_match_closed_form():
    ders = quasienergy_phase_derivatives(exchange_system(), 0, order=2)
    energies = np.sort(ders.energies)
    np.testing.assert_allclose(energies, [-FOLDED, FOLDED], atol=1e-9)


def test_phase_derivatives_match_closed_form():
    ders = quasienergy_phase_derivatives(exchange_system(), 0, order=2)
    order = np.argsort(ders.energies)
    first = ders.first[order]
    second = ders.second[order]
    # lower branch drains mode 1 into mode 2: positive dE/dchi_1 there
    np.testing.assert_allclose(first, [FIRST, -FIRST], atol=1e-9)
    np.testing.assert_allclose(second, [SECOND, -SECOND], atol=1e-6)
    assert first[0] + first[1] == pytest.approx(0.0, abs=1e-10)
    assert np.all(ders.first_error < 1e-8)
    assert np.all(ders.second_error < 1e-6)


def test_second_mode_derivatives_mirror_the_first():
    """E depends on the counting fields only through chi_1 - chi_2."""
    d0 = quasienergy_phase_derivatives(exchange_system(), 0, order=2)
    d1 = quasienergy_phase_derivatives(exchange_system(), 1, order=2)
    # identical branch labels at chi = 0, so compare without sorting
    np.testing.assert_allclose(d1.first, -d0.first, atol=1e-9)
    np.testing.assert_allclose(d1.second, d0.second, atol=1e-6)


def test_derivative_input_validation():
    system = exchange_system()
    with pytest.raises(ValidationError):
        quasienergy_phase_derivatives(system, 5)
    with pytest.raises(ValidationError):
        quasienergy_phase_derivatives(system, 0, order=3)
    with pytest.raises(ValidationError):
        quasienergy_phase_derivatives(system, 0, delta=0.0)


# ---------------------------------------------------------------------------
# branch structure over the counting grid
# ---------------------------------------------------------------------------

def test_decomposition_continuity_and_folding():
    system = asymmetric_system()
    grid = CountingGrid(mode_indices=(0,), n_samples=(64,))
    solution = decompose_system(system, grid)
    energies = np.real(solution.quasienergies)
    # continued branches vary smoothly along the chi loop
    steps = np.abs(np.diff(energies, axis=0))
    assert np.max(steps) < 0.05
    folded = solution.folded()
    w = solution.frequency
    assert np.all(folded > -w / 2.0 - 1e-12)
    assert np.all(folded <= w / 2.0 + 1e-12)
    # windings count integer branch-window multiples over the closed loop
    assert solution.windings.shape == (1, 2)
    assert np.allclose(solution.windings, np.round(solution.windings))


def test_origin_modes_are_orthonormal():
    system = asymmetric_system()
    grid = CountingGrid(mode_indices=(0,), n_samples=(16,))
    solution = decompose_system(system, grid)
    basis = solution.origin_states()
    np.testing.assert_allclose(basis.conj().T @ basis, np.eye(2), atol=1e-10)


def test_expand_in_floquet_basis_round_trip():
    system = asymmetric_system()
    grid = CountingGrid(mode_indices=(0,), n_samples=(16,))
    solution = decompose_system(system, grid)
    basis = solution.origin_states()
    balanced = MatterState((basis[:, 0] + basis[:, 1]) / math.sqrt(2.0))
    coeffs = expand_in_floquet_basis(balanced, solution)
    np.testing.assert_allclose(np.abs(coeffs) ** 2, [0.5, 0.5], atol=1e-12)
    up = expand_in_floquet_basis(MatterState.up(), solution)
    assert np.sum(np.abs(up) ** 2) == pytest.approx(1.0, abs=1e-12)


def test_degenerate_quasienergies_are_rejected():
    # opposite phases cancel the effective coupling: both branches collapse
    system = two_mode_jc_system(1.0, 1.0, G, G, 0.0, math.pi)
    grid = CountingGrid(mode_indices=(0,), n_samples=(8,))
    with pytest.raises(DegenerateQuasienergyError):
        decompose_system(system, grid)


def test_decompose_requires_period_sample():
    system = exchange_system()
    grid = CountingGrid(mode_indices=(0,), n_samples=(8,))
    propset = propagate_generalized(system, grid, np.array([0.0, 1.0]))
    with pytest.raises(Exception):
        floquet_decompose(propset)  # t = 2 pi not in the set
