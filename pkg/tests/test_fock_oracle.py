"""Tests for the truncated-Fock-space reference dynamics."""

import math

import numpy as np
import pytest
import scipy.linalg
import scipy.stats

from prft.core import (
    LeakageError,
    MatterState,
    PhotonicInitialState,
    ValidationError,
    WindowError,
)
from prft.fock_oracle import (
    BlockFockEnsemble,
    FockWindow,
    GridFockEnsemble,
    build_initial_fock_state,
    distribution_cumulants,
    evolve_rabi_fock,
    evolve_two_mode_jc_fock,
    jc_two_level_block,
    photon_marginal,
    purity,
    reduced_matter_density,
    spin_expectations,
    suggested_fock_window,
)


# ---------------------------------------------------------------------------
# windows
# ---------------------------------------------------------------------------

def test_fock_window_bookkeeping():
    w = FockWindow(center=50, half_width=40)
    assert (w.lo, w.hi, w.size) == (10, 90, 81)
    np.testing.assert_array_equal(w.indices(), np.arange(10, 91))


@pytest.mark.parametrize("center,half_width", [(50, -1), (10, 11), (0, 1)])
def test_fock_window_rejects_unphysical_ranges(center, half_width):
    with pytest.raises(ValidationError):
        FockWindow(center=center, half_width=half_width)


def test_suggested_window_covers_eight_sigma_plus_drift():
    w = suggested_fock_window(PhotonicInitialState(mean=100.0, variance=100.0))
    assert (w.center, w.half_width) == (100, 80)
    # the 40-photon floor applies for narrow profiles; drift is added on top
    w = suggested_fock_window(PhotonicInitialState(mean=100.0, variance=1.0), drift=12.3)
    assert (w.center, w.half_width) == (100, 53)


# ---------------------------------------------------------------------------
# two-level closed form
# ---------------------------------------------------------------------------

def test_jc_block_matches_rabi_flopping_closed_form():
    times = np.linspace(0.0, 9.0, 41)
    # resonant pair {|up, n>, |down, n+1>}: full-contrast flopping at 2 g sqrt(n+1)
    h_z = omega = 1.0
    g, n = 0.3, 7
    amps = jc_two_level_block(h_z, omega, g, n, times)
    rabi = 2.0 * g * math.sqrt(n + 1.0)
    np.testing.assert_allclose(np.sum(np.abs(amps) ** 2, axis=1), 1.0, atol=1e-12)
    np.testing.assert_allclose(np.abs(amps[:, 1]) ** 2, np.sin(rabi * times) ** 2, atol=1e-12)
    # detuned pair: generalized Rabi formula with reduced contrast
    h_z, omega, g, n = 1.3, 0.9, 0.25, 4
    amps = jc_two_level_block(h_z, omega, g, n, times)
    delta = h_z - omega
    v = 2.0 * g * math.sqrt(n + 1.0)
    big_omega = math.hypot(0.5 * delta, v)
    expected = (v / big_omega) ** 2 * np.sin(big_omega * times) ** 2
    np.testing.assert_allclose(np.abs(amps[:, 1]) ** 2, expected, atol=1e-12)


# ---------------------------------------------------------------------------
# initial states
# ---------------------------------------------------------------------------

def test_initial_grid_state_profile_and_mass_guard():
    spec = PhotonicInitialState(mean=50.0, variance=25.0, phase=0.1)
    win = FockWindow(center=50, half_width=40)
    ens = build_initial_fock_state(MatterState.up(), [spec], win)
    assert isinstance(ens, GridFockEnsemble)
    assert ens.amplitudes.shape == (2, 81)
    assert ens.norm() == pytest.approx(1.0, abs=1e-12)
    # spin-up matter leaves the spin-down row empty
    assert np.max(np.abs(ens.amplitudes[1])) == 0.0
    n, p = photon_marginal(ens)
    ratio = np.log(p[35:46]) + (n[35:46] - spec.mean) ** 2 / (2.0 * spec.variance)
    np.testing.assert_allclose(ratio, ratio[0], atol=1e-10)  # Gaussian profile
    # a wide-enough window that misses the profile clips most of the mass
    with pytest.raises(WindowError):
        build_initial_fock_state(MatterState.up(), [spec], FockWindow(center=100, half_width=45))
    # a window narrower than eight sigma is rejected outright
    with pytest.raises(ValidationError):
        build_initial_fock_state(MatterState.up(), [spec], FockWindow(center=50, half_width=30))
    with pytest.raises(ValidationError):
        build_initial_fock_state(MatterState.up(), [spec, spec, spec], win)


def test_initial_block_state_partitions_total_excitation():
    spec1 = PhotonicInitialState(mean=30.0, variance=9.0)
    spec2 = PhotonicInitialState(mean=30.0, variance=9.0, phase=0.2)
    win = FockWindow(center=30, half_width=24)
    ens = build_initial_fock_state(MatterState.up(), [spec1, spec2], win)
    assert isinstance(ens, BlockFockEnsemble)
    assert ens.norm() == pytest.approx(1.0, abs=1e-12)
    keys = sorted(ens.blocks.keys())
    # spin-up carries one excitation: K is centered on 30 + 30 + 1
    assert sum(k * w for k, w in ens.block_norms().items()) == pytest.approx(61.0, abs=1e-9)
    # slots with n2 = K - s - n1 < 0 are padding and must stay empty
    n1 = win.indices()
    for k in keys:
        for s in (0, 1):
            pad = k - s - n1 < 0
            assert np.max(np.abs(ens.blocks[k][s, pad]), initial=0.0) == 0.0
    for mode in (1, 2):
        n, p = photon_marginal(ens, mode)
        c = distribution_cumulants(n, p)
        assert c[1] == pytest.approx(30.0, abs=1e-9)
        assert c[2] == pytest.approx(9.0, abs=1e-6)
    assert purity(ens) == pytest.approx(1.0, abs=1e-12)  # product state
    # too little excitation padding clips measurable mass
    with pytest.raises(WindowError):
        build_initial_fock_state(MatterState.up(), [spec1, spec2], win, k_pad_sigmas=6.0)


# ---------------------------------------------------------------------------
# single-mode evolution
# ---------------------------------------------------------------------------

def test_rabi_fock_evolution_matches_dense_rebuild():
    spec = PhotonicInitialState(mean=50.0, variance=25.0, phase=0.1)
    win = FockWindow(center=50, half_width=40)
    matter = MatterState(np.array([1.0, 1.0]) / math.sqrt(2.0))
    h_z, omega, g_bare, t = 1.0, 0.8, 0.02, 3.0
    states = evolve_rabi_fock(h_z, omega, matter, spec, win, [t], bare_coupling=g_bare)

    # independent dense rebuild of the same truncated Hamiltonian
    n = win.indices()
    size = win.size
    a_op = np.zeros((size, size))
    idx = np.arange(size - 1)
    a_op[idx, idx + 1] = np.sqrt(n[:-1] + 1.0)
    ham = (
        0.5 * h_z * np.kron(np.diag([1.0, -1.0]), np.eye(size))
        + omega * np.kron(np.eye(2), np.diag(n.astype(float)))
        + g_bare * np.kron(np.array([[0.0, 1.0], [1.0, 0.0]]), a_op + a_op.T)
    )
    psi0 = build_initial_fock_state(matter, [spec], win).amplitudes.reshape(-1)
    expected = (scipy.linalg.expm(-1j * t * ham) @ psi0).reshape(2, size)
    np.testing.assert_allclose(states[0].amplitudes, expected, atol=1e-12)
    assert states[0].time == t


def test_rabi_fock_zero_coupling_precesses_matter_only():
    spec = PhotonicInitialState(mean=50.0, variance=25.0)
    win = FockWindow(center=50, half_width=40)
    matter = MatterState(np.array([1.0, 1.0]) / math.sqrt(2.0))
    states = evolve_rabi_fock(1.0, 0.8, matter, spec, win, [0.7, 1.9], bare_coupling=0.0)
    _, p0 = photon_marginal(build_initial_fock_state(matter, [spec], win))
    for st in states:
        se = spin_expectations(st)
        assert se["x"] == pytest.approx(math.cos(st.time), abs=1e-10)
        assert se["y"] == pytest.approx(math.sin(st.time), abs=1e-10)
        np.testing.assert_allclose(photon_marginal(st)[1], p0, atol=1e-12)


def test_rabi_fock_coupling_arguments_are_exclusive():
    spec = PhotonicInitialState(mean=50.0, variance=25.0)
    win = FockWindow(center=50, half_width=40)
    with pytest.raises(ValidationError):
        evolve_rabi_fock(1.0, 1.0, MatterState.up(), spec, win, [1.0])
    with pytest.raises(ValidationError):
        evolve_rabi_fock(1.0, 1.0, MatterState.up(), spec, win, [1.0],
                         bare_coupling=0.1, coupling=0.1)
    # the effective coupling is bare * sqrt(mean): both routes must agree
    by_bare = evolve_rabi_fock(1.0, 1.0, MatterState.up(), spec, win, [2.0],
                               bare_coupling=0.02)
    by_eff = evolve_rabi_fock(1.0, 1.0, MatterState.up(), spec, win, [2.0],
                              coupling=0.02 * math.sqrt(50.0))
    np.testing.assert_allclose(by_bare[0].amplitudes, by_eff[0].amplitudes, atol=1e-12)
    with pytest.raises(ValidationError):
        evolve_rabi_fock(1.0, 1.0, MatterState.up(), spec, win, [2.0, 1.0],
                         bare_coupling=0.02)


def test_rabi_fock_flags_window_leakage():
    spec = PhotonicInitialState(mean=50.0, variance=25.0)
    win = FockWindow(center=50, half_width=40)
    with pytest.raises(LeakageError):
        evolve_rabi_fock(1.0, 1.0, MatterState.up(), spec, win, [40.0], bare_coupling=0.5)


# ---------------------------------------------------------------------------
# two-mode evolution
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def two_mode_runs():
    spec1 = PhotonicInitialState(mean=30.0, variance=9.0)
    spec2 = PhotonicInitialState(mean=30.0, variance=9.0, phase=0.2)
    ens = build_initial_fock_state(
        MatterState.up(), [spec1, spec2], FockWindow(center=30, half_width=24)
    )
    times = [5.0, 10.0]
    semi = evolve_two_mode_jc_fock(1.0, 1.0, 0.04, 0.04, ens, times)
    exact = evolve_two_mode_jc_fock(
        1.0, 1.0, 0.04, 0.04, ens, times, semiclassical_elements=False
    )
    return ens, semi, exact


def test_two_mode_evolution_conserves_total_excitation(two_mode_runs):
    ens, semi, exact = two_mode_runs
    for states in (semi, exact):
        for st in states:
            assert st.norm() == pytest.approx(1.0, abs=1e-9)
            # per-block weights are constants of motion
            for k, w in st.block_norms().items():
                assert w == pytest.approx(ens.block_norms()[k], abs=1e-9)
            m1 = distribution_cumulants(*photon_marginal(st, 1))[1]
            m2 = distribution_cumulants(*photon_marginal(st, 2))[1]
            p_up = 0.5 * (1.0 + spin_expectations(st)["z"])
            assert m1 + m2 + p_up == pytest.approx(61.0, abs=1e-9)
            # exchanging photons with the matter entangles the two
            assert purity(st) < 0.999


def test_two_mode_exact_and_frozen_elements_agree_at_short_time(two_mode_runs):
    _, semi, exact = two_mode_runs
    for st_s, st_e in zip(semi, exact):
        for mode in (1, 2):
            p_s = photon_marginal(st_s, mode)[1]
            p_e = photon_marginal(st_e, mode)[1]
            assert np.max(np.abs(p_s - p_e)) < 0.01


# ---------------------------------------------------------------------------
# observables
# ---------------------------------------------------------------------------

def test_photon_marginal_rejects_unknown_modes(two_mode_runs):
    ens, _, _ = two_mode_runs
    spec = PhotonicInitialState(mean=50.0, variance=25.0)
    grid = build_initial_fock_state(MatterState.up(), [spec], FockWindow(50, 40))
    with pytest.raises(ValidationError):
        photon_marginal(grid, mode=2)
    with pytest.raises(ValidationError):
        photon_marginal(ens, mode=3)
    with pytest.raises(ValidationError):
        photon_marginal(np.zeros(4))


def test_distribution_cumulants_match_poisson():
    lam = 7.0
    n = np.arange(0, 61)
    p = scipy.stats.poisson.pmf(n, lam)
    c = distribution_cumulants(n, p)
    for order in (1, 2, 3, 4):
        assert c[order] == pytest.approx(lam, abs=1e-9)
    c = distribution_cumulants(np.array([12]), np.array([1.0]))
    assert (c[1], c[2], c[3], c[4]) == (12.0, 0.0, 0.0, 0.0)


def test_reduced_density_reproduces_bloch_vector():
    spec = PhotonicInitialState(mean=50.0, variance=25.0)
    win = FockWindow(center=50, half_width=40)
    matter = MatterState(np.array([1.0, 1.0j]) / math.sqrt(2.0))
    ens = build_initial_fock_state(matter, [spec], win)
    rho = reduced_matter_density(ens)
    assert np.trace(rho) == pytest.approx(1.0, abs=1e-12)
    se = spin_expectations(ens)
    # |up> + i |down> points along +y
    assert se["x"] == pytest.approx(0.0, abs=1e-12)
    assert se["y"] == pytest.approx(1.0, abs=1e-12)
    assert se["z"] == pytest.approx(0.0, abs=1e-12)
    assert purity(ens) == pytest.approx(1.0, abs=1e-12)
