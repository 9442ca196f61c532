"""Generalized propagation: integrator accuracy, frames, photon components."""

import math
import os
import subprocess
import sys

import numpy as np
import pytest

from prft import _kernel, semiclassical
from prft.core import (
    AliasingWarning,
    CountingGrid,
    CoverageError,
    MatterState,
    ModeSpec,
    ValidationError,
    build_driven_system,
    spin_half_operators,
)
from prft.semiclassical import (
    IntegratorSpec,
    convert_picture,
    extend_stroboscopic,
    fock_projector_expectation,
    jc_propagator,
    jc_system,
    photon_resolved_operators,
    propagate_generalized,
    rotating_frame_propagator,
    two_mode_jc_propagator_set,
    two_mode_jc_system,
)

EXCHANGE = dict(h_z=1.0, omega=1.0, g1=0.2, g2=0.2, phi1=0.0, phi2=math.pi / 2.0)


def exchange_system():
    p = EXCHANGE
    return two_mode_jc_system(p["h_z"], p["omega"], p["g1"], p["g2"], p["phi1"], p["phi2"])


# ---------------------------------------------------------------------------
# integrator accuracy
# ---------------------------------------------------------------------------

def test_integrator_is_fourth_order():
    """Halving the step shrinks the closed-form error by about 2^4."""
    system = jc_system(1.0, 0.8, 0.35, phi=0.4)
    grid = CountingGrid(mode_indices=(0,), n_samples=(2,))
    times = np.array([0.0, 3.0])
    exact = two_mode_jc_propagator_set(
        1.0, 0.8, 0.35, 0.0, 0.4, 0.0,
        CountingGrid(mode_indices=(0, 1), n_samples=(2, 2)), times, picture="full",
    ).values[-1][::2]  # chi_2 = 0 slice matches the single-mode grid

    errors = []
    for h in (0.05, 0.025):
        propset = propagate_generalized(
            system, grid, times, integrator=IntegratorSpec(max_step=h)
        )
        errors.append(np.max(np.abs(propset.values[-1] - exact)))
    ratio = errors[0] / errors[1]
    assert 8.0 < ratio < 40.0, f"step-halving error ratio {ratio:.2f} not ~16"


def test_numeric_propagator_matches_closed_form():
    """Dual route: CF4 integration against the rotating-frame closed form."""
    system = exchange_system()
    grid = CountingGrid(mode_indices=(0,), n_samples=(16,))
    times = np.array([0.0, 1.7, 4.0])
    numeric = propagate_generalized(system, grid, times)
    closed = two_mode_jc_propagator_set(
        EXCHANGE["h_z"], EXCHANGE["omega"], EXCHANGE["g1"], EXCHANGE["g2"],
        EXCHANGE["phi1"], EXCHANGE["phi2"],
        CountingGrid(mode_indices=(0, 1), n_samples=(16, 2)), times, picture="full",
    )
    # chi_2 = 0 slice of the closed-form grid: every second flat index
    closed_slice = closed.values[:, ::2]
    assert np.max(np.abs(numeric.values - closed_slice)) < 1e-8


def test_propagators_unitary_at_every_real_chi():
    system = jc_system(1.0, 2.0, 0.5)
    grid = CountingGrid(mode_indices=(0,), n_samples=(8,))
    propset = propagate_generalized(system, grid, np.array([0.0, 2.5]))
    u = propset.values[-1]
    prod = np.matmul(u.conj().swapaxes(-1, -2), u)
    np.testing.assert_allclose(prod, np.broadcast_to(np.eye(2), prod.shape), atol=1e-10)


def test_thread_count_does_not_change_results():
    system = exchange_system()
    grid = CountingGrid(mode_indices=(0,), n_samples=(16,))
    times = np.array([0.0, 1.3])
    a = propagate_generalized(system, grid, times, threads=1)
    b = propagate_generalized(system, grid, times, threads=3)
    assert np.array_equal(a.values, b.values)


def test_propagation_input_validation():
    system = jc_system(1.0, 1.0, 0.1)
    grid = CountingGrid(mode_indices=(0,), n_samples=(4,))
    with pytest.raises(ValidationError):
        propagate_generalized(system, grid, np.array([1.0, 2.0]))  # must start at 0
    with pytest.raises(ValidationError):
        propagate_generalized(system, grid, np.array([0.0, 2.0, 1.0]))  # not increasing
    with pytest.raises(ValidationError):
        IntegratorSpec(max_step=-0.1)
    with pytest.raises(ValidationError):
        IntegratorSpec(substeps_per_period=0)


def test_time_lookup_raises_outside_coverage():
    system = jc_system(1.0, 1.0, 0.1)
    grid = CountingGrid(mode_indices=(0,), n_samples=(4,))
    propset = propagate_generalized(system, grid, np.array([0.0, 1.0]))
    with pytest.raises(CoverageError):
        propset.at_time(0.5)


# ---------------------------------------------------------------------------
# kernels
# ---------------------------------------------------------------------------

def test_compiled_and_fallback_kernels_agree():
    system = exchange_system()
    chi = CountingGrid(mode_indices=(0,), n_samples=(8,)).chi_vectors(2)
    h0 = np.ascontiguousarray(system.h0, dtype=complex)
    ops = np.ascontiguousarray(np.stack(system.coupling_ops), dtype=complex)
    g = np.ascontiguousarray([m.g for m in system.modes], dtype=float)
    omega = np.ascontiguousarray([m.frequency for m in system.modes], dtype=float)
    phases = np.array([m.phase for m in system.modes])
    zphase = np.ascontiguousarray(np.exp(-1j * (chi - phases)), dtype=complex)

    u1 = np.tile(np.eye(2, dtype=complex), (chi.shape[0], 1, 1))
    u2 = u1.copy()
    _kernel.cf4_advance(u1, h0, ops, g, omega, zphase, 0.0, 0.01, 250)
    _kernel.cf4_advance_fallback(u2, h0, ops, g, omega, zphase, 0.0, 0.01, 250)
    np.testing.assert_allclose(u1, u2, atol=1e-12)


def test_pure_python_env_var_selects_fallback():
    env = dict(os.environ, PRFT_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", "import prft; print(prft.KERNEL_NAME)"],
        capture_output=True, text=True, env=env, check=True,
    )
    assert out.stdout.strip() == "numpy-fallback"
    assert _kernel.KERNEL_NAME in ("cython", "numpy-fallback")


# ---------------------------------------------------------------------------
# frames and stroboscopic extension
# ---------------------------------------------------------------------------

def test_picture_conversion_round_trip():
    propset = two_mode_jc_propagator_set(
        1.0, 1.0, 0.2, 0.2, 0.0, math.pi / 2.0,
        CountingGrid(mode_indices=(0,), n_samples=(4,)),
        np.array([0.0, 2.0, 5.0]), picture="full",
    )
    back = convert_picture(convert_picture(propset, "interaction"), "full")
    np.testing.assert_allclose(back.values, propset.values, atol=1e-12)
    assert back.picture == "full"


def test_rotating_frame_anchored_at_zero():
    chi = 2.0 * math.pi * 3.0 / 32.0  # grid point j = 3 of a 32-point grid
    u_i = jc_propagator(1.0, 1.0, 0.3, chi=chi, phi=0.1, t=1.4)
    u_full = rotating_frame_propagator(u_i, 1.0, 1.4)
    # same transformation as the closed-form full-picture propagator set
    propset = two_mode_jc_propagator_set(
        1.0, 1.0, 0.3, 0.0, 0.1, 0.0,
        CountingGrid(mode_indices=(0,), n_samples=(32,)),
        np.array([0.0, 1.4]), picture="full",
    )
    np.testing.assert_allclose(u_full, propset.values[-1, 3], atol=1e-12)


def test_stroboscopic_extension_squares_the_period_map():
    system = exchange_system()
    grid = CountingGrid(mode_indices=(0,), n_samples=(8,))
    period = system.period
    base = propagate_generalized(system, grid, np.array([0.0, period]))
    extended = extend_stroboscopic(base, 3)
    u_t = base.values[-1]
    np.testing.assert_allclose(extended.values[1], u_t, atol=1e-12)
    np.testing.assert_allclose(extended.values[2], np.matmul(u_t, u_t), atol=1e-10)
    np.testing.assert_allclose(
        extended.values[3], np.matmul(u_t, np.matmul(u_t, u_t)), atol=1e-10
    )
    np.testing.assert_allclose(extended.times, [0.0, period, 2 * period, 3 * period])


# ---------------------------------------------------------------------------
# photon-resolved components
# ---------------------------------------------------------------------------

def test_photon_components_resolve_the_identity():
    system = exchange_system()
    grid = CountingGrid(mode_indices=(0,), n_samples=(16,))
    propset = propagate_generalized(system, grid, np.array([0.0, 3.0]))
    ops = photon_resolved_operators(propset, 3.0)
    total = sum(op.conj().T @ op for op in ops.values())
    np.testing.assert_allclose(total, np.eye(2), atol=1e-10)
    assert set(ops) == set(range(-8, 8))


def test_photon_components_warn_when_grid_too_coarse():
    # a strong cosine drive populates harmonics far beyond +-2 by t = 12
    # (raising-type couplings stop at |m| = 1 and can never alias)
    ops = spin_half_operators()
    system = build_driven_system(
        0.5 * ops["z"], [(ops["x"], ModeSpec(frequency=10.0, coupling=10.0, form="cos"))]
    )
    grid = CountingGrid(mode_indices=(0,), n_samples=(4,))
    propset = propagate_generalized(system, grid, np.array([0.0, 12.0]))
    with pytest.warns(AliasingWarning):
        photon_resolved_operators(propset, 12.0)


def test_fock_projector_expectation_covers_window():
    system = jc_system(1.0, 1.0, 0.3)
    grid = CountingGrid(mode_indices=(0,), n_samples=(8,))
    propset = propagate_generalized(system, grid, np.array([0.0, 2.0]))
    ops = photon_resolved_operators(propset, 2.0)
    amps = np.zeros(9)
    amps[4] = 1.0
    p = fock_projector_expectation(ops, MatterState.up(), amps, 16, [20, 21])
    assert p[0] + p[1] == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(CoverageError):
        fock_projector_expectation(ops, MatterState.up(), amps[:3], 19, [20, 21])


def test_joint_two_mode_grid_components():
    system = exchange_system()
    grid = CountingGrid(mode_indices=(0, 1), n_samples=(16, 16))
    propset = propagate_generalized(system, grid, np.array([0.0, 2.0]))
    ops = photon_resolved_operators(propset, 2.0)
    total = sum(op.conj().T @ op for op in ops.values())
    np.testing.assert_allclose(total, np.eye(2), atol=1e-10)
    assert all(isinstance(m, tuple) and len(m) == 2 for m in ops)
