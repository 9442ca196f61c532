"""Tests for the SI-units applications layer."""

import math

import numpy as np
import pytest
import scipy.constants

from prft.applications import (
    PhysicalUnits,
    ProtocolState,
    coherence_time_closed,
    coherence_time_traveling,
    ghz_enhanced_splitting,
    mean_photon_number_closed,
    photon_energy,
    protocol_simulate,
    purity_prediction,
    transfer_consistency,
    transfer_rate,
)
from prft.core import ValidationError

TWO_PI = 2.0 * math.pi

# shared SI block: 12 atoms, 4e7 1/s splitting, optical carrier, 10 uW,
# 0.051/km loss over 500 km
SI = dict(
    n_atoms=12,
    rabi_frequency=4.0e7,
    photon_frequency=4.0e14,
    power=1.0e-5,
    loss_rate=0.051,
    distance=500.0,
)


def test_photon_energy_conventions():
    e_lit = photon_energy(4.0e14, "literal")
    assert e_lit == pytest.approx(scipy.constants.hbar * 4.0e14, rel=1e-15)
    assert photon_energy(4.0e14, "angular") == pytest.approx(TWO_PI * e_lit, rel=1e-15)
    with pytest.raises(ValidationError):
        photon_energy(4.0e14, "cycles")
    with pytest.raises(ValidationError):
        photon_energy(0.0)


def test_physical_units_validation():
    good = dict(SI, pulse_duration=5e-3)
    assert PhysicalUnits(**good).n_atoms == 12
    assert PhysicalUnits(**dict(good, loss_rate=0.0)).loss_rate == 0.0
    for bad in (
        dict(good, power=0.0),
        dict(good, distance=-1.0),
        dict(good, pulse_duration=0.0),
        dict(good, loss_rate=-0.1),
        dict(good, n_atoms=0),
        dict(good, n_atoms=2.0),
        dict(good, field_amplitude=-5.0),
        dict(good, volume=0.0),
    ):
        with pytest.raises(ValidationError):
            PhysicalUnits(**bad)


def test_purity_prediction_limits_and_monotonicity():
    c = 1.0 / math.sqrt(2.0)
    e1p, e2p, var = 0.2828, -0.2828, 100.0
    t = np.linspace(0.0, 400.0, 200)
    p = purity_prediction(c, c, e1p, e2p, var, t)
    assert p.shape == t.shape
    assert p[0] == pytest.approx(1.0, abs=1e-14)
    assert np.all(np.diff(p) <= 0.0)
    assert p[-1] == pytest.approx(0.5, abs=1e-12)  # balanced superposition floor
    # unbalanced weights keep a purity floor of (1 + (w1 - w2)^2) / 2
    p_tilt = purity_prediction(math.sqrt(0.9), math.sqrt(0.1), e1p, e2p, var, 1e6)
    assert p_tilt == pytest.approx(0.5 * (1.0 + 0.8**2), abs=1e-12)
    # equal derivatives never dephase
    assert purity_prediction(c, c, 0.3, 0.3, var, 1e9) == pytest.approx(1.0, abs=1e-14)
    # scalar time in, scalar out
    assert isinstance(purity_prediction(c, c, e1p, e2p, var, 3.0), float)
    with pytest.raises(ValidationError):
        purity_prediction(1.0, 1.0, e1p, e2p, var, 1.0)  # weights sum to 2
    with pytest.raises(ValidationError):
        purity_prediction(c, c, e1p, e2p, 0.0, 1.0)


def test_mean_photon_number_closed_form():
    e_field, volume, nu = 150.0, 2.0e-6, 4.0e14
    expected = (
        scipy.constants.epsilon_0 * e_field**2 * volume
        / (2.0 * scipy.constants.hbar * TWO_PI * nu)
    )
    assert mean_photon_number_closed(e_field, volume, nu) == pytest.approx(expected, rel=1e-15)
    assert mean_photon_number_closed(e_field, volume, nu, "literal") == pytest.approx(
        TWO_PI * expected, rel=1e-15
    )
    with pytest.raises(ValidationError):
        mean_photon_number_closed(0.0, volume, nu)
    with pytest.raises(ValidationError):
        mean_photon_number_closed(e_field, -1.0, nu)


def test_coherence_time_closed_takes_the_worst_mode():
    e_field, volume = 150.0, 2.0e-6
    modes = [(4.0e14, [0.0, 4.0e7]), (8.0e14, [0.0, 4.0e7])]
    t = coherence_time_closed(modes, e_field, volume)
    # the higher carrier holds fewer photons at fixed field energy, so it
    # dephases first: t = sqrt(nbar) / |dE'| for that mode
    nbar_hi = mean_photon_number_closed(e_field, volume, 8.0e14)
    assert t == pytest.approx(math.sqrt(nbar_hi) / 4.0e7, rel=1e-12)
    # degenerate derivatives never resolve the states
    assert coherence_time_closed([(4.0e14, [1.0, 1.0])], e_field, volume) == math.inf
    with pytest.raises(ValidationError):
        coherence_time_closed([(4.0e14, [1.0])], e_field, volume)


def test_coherence_time_traveling_frozen_values():
    optical = [(4.0e14, 1.0e-5, [0.0, 4.0e7])]
    radio = [(1.0e7, 10.0, [0.0, 1.0e4])]
    assert coherence_time_traveling(optical) == pytest.approx(0.023581096556908623, rel=1e-12)
    assert coherence_time_traveling(optical, "literal") == pytest.approx(
        0.1481643994135514, rel=1e-12
    )
    assert coherence_time_traveling(radio) == pytest.approx(1.5091901796421517e19, rel=1e-12)
    assert coherence_time_traveling(radio, "literal") == pytest.approx(
        9.482521562467289e19, rel=1e-12
    )
    # the literal convention divides the photon energy by 2 pi
    assert coherence_time_traveling(optical, "literal") == pytest.approx(
        TWO_PI * coherence_time_traveling(optical), rel=1e-12
    )
    assert coherence_time_traveling([(4.0e14, 1.0e-5, [2.0, 2.0])]) == math.inf
    with pytest.raises(ValidationError):
        coherence_time_traveling([(4.0e14, 0.0, [0.0, 1.0])])


def test_ghz_splitting_is_additive():
    np.testing.assert_allclose(
        ghz_enhanced_splitting(12, [0.1, -0.1]), [1.2, -1.2], rtol=1e-15
    )
    assert ghz_enhanced_splitting(1, 0.25) == pytest.approx(0.25)
    with pytest.raises(ValidationError):
        ghz_enhanced_splitting(0, 0.1)
    with pytest.raises(ValidationError):
        ghz_enhanced_splitting(2.5, 0.1)


def test_transfer_rate_frozen_values():
    assert transfer_rate(**SI) == pytest.approx(119.73698529882353, rel=1e-12)
    assert transfer_rate(**SI, convention="literal") == pytest.approx(
        19.056733081229368, rel=1e-12
    )
    assert transfer_rate(**SI) == pytest.approx(
        TWO_PI * transfer_rate(**SI, convention="literal"), rel=1e-12
    )
    with pytest.raises(ValidationError):
        transfer_rate(**dict(SI, loss_rate=0.0))
    with pytest.raises(ValidationError):
        transfer_rate(**dict(SI, n_atoms=0))


def test_transfer_consistency_separation_equals_broadening():
    cons = transfer_consistency(**SI)
    assert cons["rate_hz"] == pytest.approx(119.73698529882353, rel=1e-12)
    assert cons["pulse_duration_s"] == pytest.approx(1.0 / cons["rate_hz"], rel=1e-15)
    # at t_p = 1/f the two-peak separation exactly matches the broadening
    assert cons["separation_photons"] == pytest.approx(
        cons["broadening_photons"], rel=1e-12
    )
    assert cons["relative_residual"] <= 1e-12


def test_protocol_simulation_matches_frozen_seeded_run():
    # lossless run: broadening vanishes and the width stays at sqrt(nbar)
    result = protocol_simulate(
        12, 4.0e7, 4.0e14, 1.0e-5, 0.0, 500.0, 0.1, 100000, 20240817
    )
    assert result.success_rate == pytest.approx(0.50208, abs=1e-12)
    assert result.success_rate_analytic == pytest.approx(0.5, abs=1e-12)
    assert result.separation == pytest.approx(4.8e7, rel=1e-15)
    assert result.sigma_effective == pytest.approx(1942414.849898286, rel=1e-12)
    assert result.broadening == 0.0
    assert result.branch_counts == (24880, 25005, 25203, 24912)
    assert sum(result.branch_counts) == result.trials == 100000
    assert result.peaks_resolved
    # widely separated lossless peaks are never misclassified
    assert result.fidelity_proxy == pytest.approx(1.0, abs=1e-12)
    assert result.fidelity_empirical == 1.0
    assert result.state.peak_positions == (-4.8e7, 0.0, 0.0, 4.8e7)
    assert result.state.peak_width == result.sigma_effective

    again = protocol_simulate(
        12, 4.0e7, 4.0e14, 1.0e-5, 0.0, 500.0, 0.1, 100000, 20240817
    )
    assert again.success_rate == result.success_rate
    assert again.branch_counts == result.branch_counts
    other_seed = protocol_simulate(
        12, 4.0e7, 4.0e14, 1.0e-5, 0.0, 500.0, 0.1, 100000, 7
    )
    assert other_seed.branch_counts != result.branch_counts


def test_protocol_chunked_rng_handles_ragged_trial_counts():
    # 5000 trials straddle the 4096-trial RNG chunk boundary
    result = protocol_simulate(12, 4.0e7, 4.0e14, 1.0e-5, 0.051, 500.0, 0.1, 5000, 11)
    assert sum(result.branch_counts) == 5000
    assert result.sigma_effective > result.state.initial_width  # loss broadens
    again = protocol_simulate(12, 4.0e7, 4.0e14, 1.0e-5, 0.051, 500.0, 0.1, 5000, 11)
    assert again.success_rate == result.success_rate


def test_protocol_validation():
    with pytest.raises(ValidationError):
        protocol_simulate(12, 4.0e7, 4.0e14, 1.0e-5, 0.0, 500.0, 0.1, 0, 1)
    with pytest.raises(ValidationError):
        protocol_simulate(12, 4.0e7, 4.0e14, 1.0e-5, 0.0, 500.0, 0.0, 100, 1)
    with pytest.raises(ValidationError):
        protocol_simulate(12, 4.0e7, 4.0e14, 1.0e-5, -0.1, 500.0, 0.1, 100, 1)
    with pytest.raises(ValidationError):
        protocol_simulate(12, 4.0e7, 4.0e14, 1.0e-5, 0.0, 500.0, 0.1, 100, 1,
                          acceptance_window=-1.0)


def test_protocol_state_validation():
    half = (0.5, 0.5, 0.5, 0.5)
    ProtocolState(amplitudes=half, peak_positions=(-1, 0, 0, 1),
                  peak_width=2.0, initial_width=1.0)
    with pytest.raises(ValidationError):
        ProtocolState(amplitudes=(1.0, 1.0, 0.0, 0.0), peak_positions=(-1, 0, 0, 1),
                      peak_width=2.0, initial_width=1.0)
    with pytest.raises(ValidationError):
        ProtocolState(amplitudes=half, peak_positions=(-1, 0, 0, 1),
                      peak_width=0.5, initial_width=1.0)
