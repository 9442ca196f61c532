"""Construction, validation and algebra of the shared core types."""

import math

import numpy as np
import pytest
import scipy.linalg

from prft import core
from prft.core import (
    CommensurabilityError,
    CountingGrid,
    MatterState,
    ModeSpec,
    PhotonicInitialState,
    ValidationError,
    build_driven_system,
    fundamental_period,
    spin_half_operators,
)


# ---------------------------------------------------------------------------
# operators
# ---------------------------------------------------------------------------

def test_spin_operators_algebra():
    ops = spin_half_operators()
    np.testing.assert_allclose(ops["plus"], [[0.0, 2.0], [0.0, 0.0]])
    np.testing.assert_allclose(ops["minus"], [[0.0, 0.0], [2.0, 0.0]])
    comm = ops["x"] @ ops["y"] - ops["y"] @ ops["x"]
    np.testing.assert_allclose(comm, 2j * ops["z"], atol=1e-15)
    for key in ("x", "y", "z"):
        np.testing.assert_allclose(ops[key] @ ops[key], np.eye(2), atol=1e-15)


def test_matrix_exponentials_match_scipy():
    rng = np.random.default_rng(7)
    a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    a = -1j * (a + a.conj().T)  # skew-hermitian, like -i H dt
    np.testing.assert_allclose(core.expm2(a), scipy.linalg.expm(a), atol=1e-13)
    b = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    b = -1j * 0.05 * (b + b.conj().T)
    np.testing.assert_allclose(core.expm_small(b), scipy.linalg.expm(b), atol=1e-13)


# ---------------------------------------------------------------------------
# ModeSpec
# ---------------------------------------------------------------------------

def test_mode_spec_coupling_bookkeeping():
    mode = ModeSpec(frequency=2.0, phase=7.0, bare_coupling=0.25, amplitude=4.0)
    assert mode.g == pytest.approx(1.0)
    assert 0.0 <= mode.phase < 2.0 * math.pi
    assert mode.phase == pytest.approx(7.0 - 2.0 * math.pi)


@pytest.mark.parametrize(
    "kwargs",
    [
        {},  # neither route
        {"coupling": 1.0, "bare_coupling": 0.5, "amplitude": 2.0},  # both routes
        {"bare_coupling": 0.5},  # half a pair
        {"coupling": 1.0, "form": "square"},
        {"coupling": 1.0, "amplitude": -1.0, "bare_coupling": 0.5},
    ],
)
def test_mode_spec_rejects_inconsistent_input(kwargs):
    with pytest.raises(ValidationError):
        ModeSpec(frequency=1.0, **kwargs)


def test_mode_spec_rejects_nonpositive_frequency():
    with pytest.raises(ValidationError):
        ModeSpec(frequency=0.0, coupling=1.0)


# ---------------------------------------------------------------------------
# DrivenSystem
# ---------------------------------------------------------------------------

def test_driven_system_counting_phase_convention():
    """The raising-type coupling carries exp(-i(chi - phi) - i omega t)."""
    ops = spin_half_operators()
    phi, omega, g = 0.7, 1.5, 0.3
    system = build_driven_system(
        0.5 * ops["z"], [(ops["plus"], ModeSpec(frequency=omega, phase=phi, coupling=g, form="rwa"))]
    )
    chi = 0.4
    t = 0.9
    h = system.hamiltonian(t, np.array([chi]))
    expected_01 = 2.0 * g * np.exp(-1j * (chi - phi) - 1j * omega * t)
    assert h[0, 1] == pytest.approx(expected_01)
    assert h[1, 0] == pytest.approx(np.conj(expected_01))
    h0 = system.hamiltonian(t)
    np.testing.assert_allclose(h0, h0.conj().T, atol=1e-15)


def test_driven_system_time_derivative_matches_finite_difference():
    ops = spin_half_operators()
    system = build_driven_system(
        0.5 * ops["z"],
        [
            (ops["plus"], ModeSpec(frequency=1.0, phase=0.2, coupling=0.4, form="rwa")),
            (ops["x"], ModeSpec(frequency=2.0, phase=0.0, coupling=0.1, form="cos")),
        ],
    )
    chi = np.array([0.3, -0.1])
    t, eps = 0.57, 1e-6
    fd = (system.hamiltonian(t + eps, chi) - system.hamiltonian(t - eps, chi)) / (2.0 * eps)
    np.testing.assert_allclose(system.hamiltonian_time_derivative(t, chi), fd, atol=1e-7)


def test_driven_system_rejects_nonhermitian_h0():
    ops = spin_half_operators()
    with pytest.raises(ValidationError):
        build_driven_system(
            np.array([[0.0, 1.0], [0.0, 0.0]]),
            [(ops["plus"], ModeSpec(frequency=1.0, coupling=0.1, form="rwa"))],
        )


def test_driven_system_chi_shape_checked():
    ops = spin_half_operators()
    system = build_driven_system(
        0.5 * ops["z"], [(ops["plus"], ModeSpec(frequency=1.0, coupling=0.1, form="rwa"))]
    )
    with pytest.raises(ValidationError):
        system.hamiltonian(0.0, np.array([0.1, 0.2]))


# ---------------------------------------------------------------------------
# states
# ---------------------------------------------------------------------------

def test_matter_state_norm_enforced():
    with pytest.raises(ValidationError):
        MatterState(np.array([1.0, 1.0]))
    up = MatterState.up()
    assert up.dim == 2
    np.testing.assert_allclose(up.amplitudes, [1.0, 0.0])


def test_photonic_state_gaussian_profile():
    spec = PhotonicInitialState(mean=50.0, variance=9.0, phase=0.3)
    n = np.arange(20, 81)
    a = spec.amplitudes(n)
    assert np.sum(np.abs(a) ** 2) == pytest.approx(1.0, abs=1e-12)
    # probabilities proportional to exp(-(n - mean)^2 / (2 sigma^2))
    expected = np.exp(-((n - 50.0) ** 2) / (2.0 * 9.0))
    expected /= expected.sum()
    np.testing.assert_allclose(np.abs(a) ** 2, expected, atol=1e-12)
    # phases exactly linear in n
    rel = a * np.exp(-1j * 0.3 * n)
    assert np.max(np.abs(np.imag(rel))) < 1e-12
    assert spec.sigma == pytest.approx(3.0)


def test_photonic_state_window_overlap_required():
    spec = PhotonicInitialState(mean=0.0, variance=1.0)
    with pytest.raises(core.WindowError):
        spec.amplitudes(np.arange(1000, 1010))


def test_photonic_state_family_validation():
    with pytest.raises(ValidationError):
        PhotonicInitialState(mean=10.0, variance=5.0, family="coherent")
    with pytest.raises(ValidationError):
        PhotonicInitialState(mean=10.0, variance=0.0)
    with pytest.raises(ValidationError):
        PhotonicInitialState(mean=10.0, variance=10.0, family="thermal")


# ---------------------------------------------------------------------------
# counting grid
# ---------------------------------------------------------------------------

def test_counting_grid_points_and_spacing():
    grid = CountingGrid(mode_indices=(0,), n_samples=(8,))
    pts = grid.points()
    assert pts[0] == 0.0
    assert grid.spacing() == pytest.approx(2.0 * math.pi / 8.0)
    np.testing.assert_allclose(np.diff(pts), grid.spacing())
    assert grid.size == 8


def test_counting_grid_validation():
    with pytest.raises(ValidationError):
        CountingGrid(mode_indices=(0,), n_samples=(12,))  # not a power of two
    with pytest.raises(ValidationError):
        CountingGrid(mode_indices=(0, 0), n_samples=(4, 4))  # duplicate mode
    with pytest.raises(ValidationError):
        CountingGrid(mode_indices=(0, 1), n_samples=(4,))  # length mismatch
    with pytest.raises(ValidationError):
        CountingGrid(mode_indices=(), n_samples=())


def test_counting_grid_chi_vectors_zero_on_uncounted_modes():
    grid = CountingGrid(mode_indices=(1,), n_samples=(4,))
    vecs = grid.chi_vectors(3)
    assert vecs.shape == (4, 3)
    np.testing.assert_allclose(vecs[:, 0], 0.0)
    np.testing.assert_allclose(vecs[:, 2], 0.0)
    np.testing.assert_allclose(vecs[:, 1], grid.points())
    with pytest.raises(ValidationError):
        grid.chi_vectors(1)


# ---------------------------------------------------------------------------
# period arithmetic
# ---------------------------------------------------------------------------

def test_fundamental_period_single_and_rational():
    assert fundamental_period([1.0]) == pytest.approx(2.0 * math.pi)
    assert fundamental_period([2.0, 3.0]) == pytest.approx(2.0 * math.pi)
    assert fundamental_period([1.0, 1.5]) == pytest.approx(4.0 * math.pi)
    assert fundamental_period([1.0, 2.0, 3.0]) == pytest.approx(2.0 * math.pi)


def test_fundamental_period_rejects_irrational_ratio():
    with pytest.raises(CommensurabilityError):
        fundamental_period([1.0, math.sqrt(2.0)])
