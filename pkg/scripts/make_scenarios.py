"""Regenerate the bundled scenario JSON files (developer utility)."""

import json
import math
import os

HERE = os.path.dirname(os.path.abspath(__file__))
OUT = os.path.join(HERE, "..", "src", "prft", "scenarios")

PI_2 = math.pi / 2.0
PI_4 = math.pi / 4.0
T_SLOW = 1.2 * 2.0 * math.pi / 1.0

SCENARIOS = {
    "rabi_cumulants": {
        "name": "rabi_cumulants",
        "description": "Transversally driven two-level system: photon cumulant "
                       "growth and matter spin components against the exact "
                       "truncated-Fock reference.",
        "model": "rabi",
        "parameters": {"h_z": 1.0, "omega": 10.0, "coupling": 10.0},
        "photonic": [{"mean": 1000.0, "variance": 1000.0, "phase": 0.0,
                      "family": "coherent"}],
        "initial_states": [{"label": "up", "kind": "basis", "state": "up"}],
        "counting": {"modes": [0], "n_samples": 256, "window": 40},
        "times": {"start": 0.0, "stop": 12.0, "num": 61},
        "tasks": ["propagate", "cumulants", "oracle_compare"],
        "oracle": {"enabled": True},
    },
    "rabi_negativity_slow": {
        "name": "rabi_negativity_slow",
        "description": "Quasiprobability extraction for a resonantly driven "
                       "two-level system after 1.2 drive periods; the "
                       "redistributed photon distribution is checked against "
                       "the exact reference.",
        "model": "rabi",
        "parameters": {"h_z": 1.0, "omega": 1.0, "coupling": 1.0},
        "photonic": [{"mean": 1000.0, "variance": 1000.0, "phase": 0.0,
                      "family": "coherent"}],
        "initial_states": [{"label": "up", "kind": "basis", "state": "up"}],
        "counting": {"modes": [0], "n_samples": 1024, "window": 150},
        "times": {"start": 0.0, "stop": T_SLOW, "num": 6},
        "snapshots": [T_SLOW],
        "tasks": ["quasiprob", "redistribute", "oracle_compare"],
        "oracle": {"enabled": True},
    },
    "rabi_negativity_fast": {
        "name": "rabi_negativity_fast",
        "description": "Same two-point measurement readout after the same "
                       "elapsed time but with the drive frequency and "
                       "coupling ten times larger; virtual processes make "
                       "the quasiprobabilities markedly more negative.",
        "model": "rabi",
        "parameters": {"h_z": 1.0, "omega": 10.0, "coupling": 10.0},
        "photonic": [{"mean": 1000.0, "variance": 1000.0, "phase": 0.0,
                      "family": "coherent"}],
        "initial_states": [{"label": "up", "kind": "basis", "state": "up"}],
        "counting": {"modes": [0], "n_samples": 1024, "window": 200},
        "times": {"start": 0.0, "stop": T_SLOW, "num": 6},
        "snapshots": [T_SLOW],
        "tasks": ["quasiprob", "redistribute", "oracle_compare"],
        "oracle": {"enabled": True},
    },
    "two_mode_exchange": {
        "name": "two_mode_exchange",
        "description": "Phase-controlled photon exchange between two "
                       "degenerate rotating-frame modes: mean photon flux and "
                       "number variance for both quasienergy states and their "
                       "balanced superposition.",
        "model": "two_mode_jc",
        "parameters": {"h_z": 1.0, "omega": 1.0, "couplings": [0.2, 0.2]},
        "photonic": [
            {"mean": 1000.0, "variance": 100.0, "phase": 0.0,
             "family": "gaussian-squeezed"},
            {"mean": 1000.0, "variance": 100.0, "phase": PI_2,
             "family": "gaussian-squeezed"},
        ],
        "initial_states": [
            {"label": "floquet-0", "kind": "floquet", "index": 0},
            {"label": "balanced", "kind": "floquet-superposition",
             "weights": [0.5, 0.5]},
            {"label": "floquet-1", "kind": "floquet", "index": 1},
        ],
        "counting": {"modes": [0, 1], "n_samples": 16384, "window": 700},
        "times": {"start": 0.0, "stop": 1200.0, "num": 13},
        "snapshots": [0.0, 600.0, 1200.0],
        "tasks": ["cumulants", "quasiprob", "oracle_compare"],
        "oracle": {"enabled": True, "semiclassical_elements": True},
    },
    "purity_floquet": {
        "name": "purity_floquet",
        "description": "Matter purity of a quasienergy eigenstate under "
                       "two-mode driving stays at one; closed form against "
                       "the exact reference for two photon-number spreads.",
        "model": "two_mode_jc",
        "parameters": {"h_z": 1.0, "omega": 1.0, "couplings": [0.2, 0.2]},
        "photonic": [
            {"mean": 1000.0, "variance": 100.0, "phase": 0.0,
             "family": "gaussian-squeezed"},
            {"mean": 1000.0, "variance": 100.0, "phase": PI_2,
             "family": "gaussian-squeezed"},
        ],
        "initial_states": [
            {"label": "floquet-0", "kind": "floquet", "index": 0},
        ],
        "counting": {"modes": [0], "n_samples": 1024, "window": 100},
        "times": {"start": 0.0, "stop": 120.0, "num": 13},
        "tasks": ["purity", "oracle_compare"],
        "oracle": {"enabled": True, "semiclassical_elements": True},
        "grid": [
            {"label": "var100"},
            {"label": "var400", "photonic": {"variance": 400.0}},
        ],
    },
    "purity_superposition": {
        "name": "purity_superposition",
        "description": "Measurement-free decoherence of a balanced "
                       "quasienergy superposition: Gaussian purity decay "
                       "whose rate is set by the photon-number spread.",
        "model": "two_mode_jc",
        "parameters": {"h_z": 1.0, "omega": 1.0, "couplings": [0.2, 0.2]},
        "photonic": [
            {"mean": 1000.0, "variance": 100.0, "phase": 0.0,
             "family": "gaussian-squeezed"},
            {"mean": 1000.0, "variance": 100.0, "phase": PI_2,
             "family": "gaussian-squeezed"},
        ],
        "initial_states": [
            {"label": "balanced", "kind": "floquet-superposition",
             "weights": [0.5, 0.5]},
        ],
        "counting": {"modes": [0], "n_samples": 1024, "window": 100},
        "times": {"start": 0.0, "stop": 120.0, "num": 13},
        "tasks": ["purity", "oracle_compare"],
        "oracle": {"enabled": True, "semiclassical_elements": True},
        "grid": [
            {"label": "var100"},
            {"label": "var400", "photonic": {"variance": 400.0}},
        ],
    },
    "three_mode_counting": {
        "name": "three_mode_counting",
        "description": "Three commensurate drive tones with counting on the "
                       "highest-frequency mode: opposite photon fluxes for "
                       "the two quasienergy states, ballistic variance for "
                       "their superposition.",
        "model": "three_mode_rabi",
        "parameters": {"h_z": 2.1, "frequencies": [1.0, 2.0, 3.0],
                       "couplings": [1.0, 1.0, 1.0]},
        "photonic": [
            {"mean": 1000.0, "variance": 1000.0, "phase": 0.5,
             "family": "coherent"},
            {"mean": 1000.0, "variance": 1000.0, "phase": 0.25,
             "family": "coherent"},
            {"mean": 1000.0, "variance": 1000.0, "phase": 0.5,
             "family": "coherent"},
        ],
        "initial_states": [
            {"label": "floquet-0", "kind": "floquet", "index": 0},
            {"label": "balanced", "kind": "floquet-superposition",
             "weights": [0.5, 0.5]},
            {"label": "floquet-1", "kind": "floquet", "index": 1},
        ],
        "counting": {"modes": [2], "n_samples": 2048, "window": 200},
        "times": {"start": 0.0, "stop": 40.0, "num": 11},
        "tasks": ["propagate", "cumulants", "quasiprob"],
    },
    "two_mode_validation_grid": {
        "name": "two_mode_validation_grid",
        "description": "Redistributed photon distributions against the exact "
                       "truncated-Fock dynamics across a small grid of "
                       "coupling asymmetries and detunings.",
        "model": "two_mode_jc",
        "parameters": {"h_z": 1.0, "omega": 1.0, "couplings": [0.05, 0.05]},
        "photonic": [
            {"mean": 1000.0, "variance": 1000.0, "phase": PI_4,
             "family": "coherent"},
            {"mean": 1000.0, "variance": 1000.0, "phase": 0.0,
             "family": "coherent"},
        ],
        "initial_states": [{"label": "up", "kind": "basis", "state": "up"}],
        "counting": {"modes": [0], "n_samples": 4096, "window": 120},
        "times": {"start": 0.0, "stop": 600.0, "num": 3},
        "snapshots": [0.0, 300.0, 600.0],
        "tasks": ["quasiprob", "redistribute", "oracle_compare"],
        "oracle": {"enabled": True, "semiclassical_elements": False},
        "grid": [
            {"label": "sym-res"},
            {"label": "asym-res", "parameters": {"couplings": [0.05, 0.1]}},
            {"label": "sym-det", "parameters": {"omega": 1.05}},
            {"label": "asym-det", "parameters": {"couplings": [0.05, 0.1],
                                                 "omega": 1.05}},
        ],
    },
    "coherence_optical": {
        "name": "coherence_optical",
        "description": "Decoherence time of a matter superposition coupled "
                       "to a traveling optical mode at 10 microwatts.",
        "model": "custom",
        "tasks": ["coherence_time"],
        "applications": {
            "convention": "angular",
            "coherence": {
                "kind": "traveling",
                "modes": [
                    {"frequency_hz": 4.0e14, "power_w": 1.0e-5,
                     "derivatives_per_state": [0.0, 4.0e7]},
                ],
            },
        },
    },
    "coherence_radio": {
        "name": "coherence_radio",
        "description": "Decoherence time of a matter superposition coupled "
                       "to a traveling radio-frequency mode at 10 watts.",
        "model": "custom",
        "tasks": ["coherence_time"],
        "applications": {
            "convention": "angular",
            "coherence": {
                "kind": "traveling",
                "modes": [
                    {"frequency_hz": 1.0e7, "power_w": 10.0,
                     "derivatives_per_state": [0.0, 1.0e4]},
                ],
            },
        },
    },
    "transfer_500km": {
        "name": "transfer_500km",
        "description": "Entanglement-transfer rate over a 500 km lossy fiber "
                       "for a twelve-atom register, reported in both "
                       "frequency conventions.",
        "model": "custom",
        "tasks": ["transfer_rate"],
        "applications": {
            "convention": "angular",
            "transfer": {
                "n_atoms": 12,
                "rabi_frequency_hz": 4.0e7,
                "photon_frequency_hz": 4.0e14,
                "power_w": 1.0e-5,
                "loss_rate_per_km": 0.051,
                "distance_km": 500.0,
            },
        },
    },
    "protocol_desk": {
        "name": "protocol_desk",
        "description": "Monte Carlo of the photon-number-readout protocol "
                       "without fiber loss: acceptance rate and empirical "
                       "fidelity proxy from resolved branches.",
        "model": "custom",
        "tasks": ["protocol"],
        "seed": 20240817,
        "applications": {
            "convention": "angular",
            "protocol": {
                "n_atoms": 12,
                "rabi_frequency_hz": 4.0e7,
                "photon_frequency_hz": 4.0e14,
                "power_w": 1.0e-5,
                "loss_rate_per_km": 0.0,
                "distance_km": 500.0,
                "pulse_duration_s": 0.1,
                "trials": 100000,
            },
        },
    },
}


def main():
    os.makedirs(OUT, exist_ok=True)
    for name, scenario in SCENARIOS.items():
        path = os.path.join(OUT, f"{name}.json")
        with open(path, "w") as fh:
            json.dump(scenario, fh, indent=2)
            fh.write("\n")
        print(path)


if __name__ == "__main__":
    main()
