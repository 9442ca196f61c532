"""Scenario-driven command line front end.

A scenario is a JSON file that declares a model, its drive/counting
parameters and a list of tasks; ``prft run`` executes it into an output
directory of CSV tables plus ``manifest.json`` / ``summary.json``, and
``prft validate`` checks a file without running anything.  A handful of
ready-made scenarios ship inside the package (``prft list-scenarios``).

Exit codes: 0 on success, 2 for validation problems (schema or physics),
3 when a numerical invariant or tolerance check fails at run time (the
message names the failing check).

All CSV floats are written with ``repr`` (shortest round-trip), so output
bodies are byte-identical across runs on the same machine; only the
timings inside the manifest vary.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time as _time
from importlib import resources

import numpy as np

from . import __version__, applications, counting, fock_oracle
from ._kernel import KERNEL_NAME
from .core import (
    CountingGrid,
    MatterState,
    ModeSpec,
    PhotonicInitialState,
    PRFTError,
    ValidationError,
    build_driven_system,
    fundamental_period,
    spin_half_operators,
)
from .counting import _negation_map
from .floquet import quasienergy_phase_derivatives
from .semiclassical import (
    photon_resolved_operators,
    propagate_generalized,
    two_mode_jc_propagator_set,
)

MODELS = ("jc", "rabi", "two_mode_jc", "three_mode_rabi", "custom")
TASKS = (
    "propagate",
    "cumulants",
    "quasiprob",
    "redistribute",
    "purity",
    "oracle_compare",
    "coherence_time",
    "transfer_rate",
    "protocol",
)
_N_MODES = {"jc": 1, "rabi": 1, "two_mode_jc": 2, "three_mode_rabi": 3}
_DYNAMICAL = ("jc", "rabi", "two_mode_jc", "three_mode_rabi")
_APP_TASKS = ("coherence_time", "transfer_rate", "protocol")

# window margin added on top of the flux-drift estimate when sizing oracle
# Fock windows; the edge-leakage check is the real safety net
ORACLE_WINDOW_MARGIN = 16


# ---------------------------------------------------------------------------
# schema
# ---------------------------------------------------------------------------

_TOP_KEYS = {
    "name",
    "description",
    "model",
    "parameters",
    "photonic",
    "initial_states",
    "counting",
    "times",
    "snapshots",
    "tasks",
    "oracle",
    "applications",
    "seed",
    "grid",
}
_PARAM_KEYS = {
    "jc": {"h_z", "omega", "coupling"},
    "rabi": {"h_z", "omega", "coupling"},
    "two_mode_jc": {"h_z", "omega", "couplings"},
    "three_mode_rabi": {"h_z", "frequencies", "couplings"},
}
_PHOTONIC_KEYS = {"mean", "variance", "phase", "family"}
_STATE_KEYS = {"label", "kind", "state", "index", "weights", "coefficients"}
_COUNTING_KEYS = {"modes", "n_samples", "window"}
_TIMES_KEYS = {"start", "stop", "num"}
_ORACLE_KEYS = {"enabled", "semiclassical_elements", "window_margin", "k_pad_sigmas"}
_VARIANT_KEYS = {"label", "parameters", "photonic"}
_APP_KEYS = {"convention", "coherence", "transfer", "protocol"}
_COHERENCE_KEYS = {"kind", "modes", "field_v_per_m", "volume_m3"}
_COH_MODE_KEYS = {"frequency_hz", "power_w", "derivatives_per_state"}
_TRANSFER_KEYS = {
    "n_atoms",
    "rabi_frequency_hz",
    "photon_frequency_hz",
    "power_w",
    "loss_rate_per_km",
    "distance_km",
}
_PROTOCOL_KEYS = _TRANSFER_KEYS | {"pulse_duration_s", "trials", "acceptance_window"}


def _unknown(obj: dict, allowed: set, where: str, problems: list):
    extra = sorted(set(obj) - allowed)
    if extra:
        problems.append(f"{where}: unknown keys {extra}")


def validate_scenario(scenario: dict) -> list:
    """Schema plus physics checks; returns a list of problem strings.

    Never runs dynamics and never mutates the input.  An empty list means
    the scenario is runnable.
    """
    problems: list = []
    if not isinstance(scenario, dict):
        return ["scenario must be a JSON object"]
    _unknown(scenario, _TOP_KEYS, "scenario", problems)
    for key in ("name", "model", "tasks"):
        if key not in scenario:
            problems.append(f"scenario: missing required key {key!r}")
    model = scenario.get("model")
    if model is not None and model not in MODELS:
        problems.append(f"model: {model!r} is not one of {list(MODELS)}")
    tasks = scenario.get("tasks", [])
    if not isinstance(tasks, list) or not tasks:
        problems.append("tasks: must be a non-empty list")
        tasks = []
    for t in tasks:
        if t not in TASKS:
            problems.append(f"tasks: unknown task {t!r}")
    if problems:
        return problems  # no point continuing with a broken skeleton

    if model in _DYNAMICAL:
        _validate_dynamical(scenario, model, tasks, problems)
    else:
        for key in ("parameters", "photonic", "initial_states", "counting", "times"):
            if key in scenario:
                problems.append(f"{key}: not allowed for model 'custom'")
        if not any(t in _APP_TASKS for t in tasks):
            problems.append("tasks: model 'custom' supports only application tasks")
        for t in tasks:
            if t not in _APP_TASKS:
                problems.append(f"tasks: task {t!r} needs a dynamical model")

    _validate_applications(scenario, tasks, problems)
    seed = scenario.get("seed")
    if seed is not None and not isinstance(seed, int):
        problems.append("seed: must be an integer")
    if "protocol" in tasks and seed is None:
        problems.append("protocol task requires a 'seed' (or pass --seed)")
    return problems


def _validate_dynamical(scenario: dict, model: str, tasks: list, problems: list):
    n_modes = _N_MODES[model]
    for key in ("parameters", "photonic", "initial_states", "counting", "times"):
        if key not in scenario:
            problems.append(f"scenario: missing required key {key!r} for model {model!r}")
            return

    params = scenario["parameters"]
    _unknown(params, _PARAM_KEYS[model], "parameters", problems)
    missing = sorted(_PARAM_KEYS[model] - set(params))
    if missing:
        problems.append(f"parameters: missing {missing}")
        return
    variants = scenario.get("grid", [{"label": ""}])
    if not isinstance(variants, list) or not variants:
        problems.append("grid: must be a non-empty list of variants")
        variants = [{"label": ""}]
    labels = []
    for v in variants:
        if not isinstance(v, dict) or "label" not in v:
            problems.append("grid: every variant needs a 'label'")
            continue
        _unknown(v, _VARIANT_KEYS, f"grid[{v.get('label')}]", problems)
        if isinstance(v.get("parameters"), dict):
            _unknown(v["parameters"], _PARAM_KEYS[model],
                     f"grid[{v['label']}].parameters", problems)
        if isinstance(v.get("photonic"), dict):
            _unknown(v["photonic"], _PHOTONIC_KEYS,
                     f"grid[{v['label']}].photonic", problems)
        labels.append(v["label"])
    if len(set(labels)) != len(labels):
        problems.append("grid: variant labels must be unique")

    photonic = scenario["photonic"]
    if len(photonic) != n_modes:
        problems.append(
            f"photonic: {len(photonic)} entries for a {n_modes}-mode model"
        )
    specs = []
    for i, entry in enumerate(photonic):
        _unknown(entry, _PHOTONIC_KEYS, f"photonic[{i}]", problems)
        try:
            specs.append(PhotonicInitialState(**entry))
        except (ValidationError, TypeError) as exc:
            problems.append(f"photonic[{i}]: {exc}")

    for i, entry in enumerate(scenario["initial_states"]):
        _unknown(entry, _STATE_KEYS, f"initial_states[{i}]", problems)
        kind = entry.get("kind")
        if "label" not in entry:
            problems.append(f"initial_states[{i}]: missing 'label'")
        if kind == "basis":
            if entry.get("state") not in ("up", "down"):
                problems.append(f"initial_states[{i}]: state must be 'up' or 'down'")
        elif kind == "floquet":
            if entry.get("index") not in (0, 1):
                problems.append(f"initial_states[{i}]: index must be 0 or 1")
        elif kind == "floquet-superposition":
            weights = entry.get("weights")
            coeffs = entry.get("coefficients")
            if (weights is None) == (coeffs is None):
                problems.append(
                    f"initial_states[{i}]: give exactly one of weights/coefficients"
                )
            elif weights is not None and abs(sum(weights) - 1.0) > 1e-9:
                problems.append(f"initial_states[{i}]: weights must sum to 1")
        else:
            problems.append(f"initial_states[{i}]: unknown kind {kind!r}")

    cnt = scenario["counting"]
    _unknown(cnt, _COUNTING_KEYS, "counting", problems)
    modes = cnt.get("modes", [])
    n_chi = cnt.get("n_samples", 0)
    window = cnt.get("window", 0)
    if not modes or any(not (0 <= m < n_modes) for m in modes):
        problems.append(f"counting.modes: indices must lie in 0..{n_modes - 1}")
    try:
        CountingGrid(mode_indices=tuple(modes) or (0,), n_samples=(n_chi,) * max(len(modes), 1))
    except ValidationError as exc:
        problems.append(f"counting: {exc}")
    if not isinstance(window, int) or window < 1:
        problems.append("counting.window: must be a positive integer")
    elif n_chi < 2 * window + 2:
        problems.append(
            f"counting: {n_chi} samples cannot resolve shifts up to +-{window} (aliasing)"
        )

    times = scenario["times"]
    _unknown(times, _TIMES_KEYS, "times", problems)
    start, stop, num = times.get("start"), times.get("stop"), times.get("num")
    if start != 0.0:
        problems.append("times.start: must be 0")
    if not isinstance(num, int) or num < 2:
        problems.append("times.num: must be an integer >= 2")
    if not isinstance(stop, (int, float)) or (isinstance(start, (int, float)) and stop <= start):
        problems.append("times.stop: must exceed times.start")
    snapshots = scenario.get("snapshots")
    if snapshots is not None and isinstance(stop, (int, float)) and isinstance(num, int) and num >= 2:
        tgrid = np.linspace(0.0, stop, num)
        for s in snapshots:
            if not np.any(np.isclose(tgrid, s, rtol=0, atol=1e-9 * max(1.0, abs(stop)))):
                problems.append(f"snapshots: {s} is not one of the output times")

    # drive commensurability (all variants)
    for v in variants:
        merged = {**params, **(v.get("parameters") or {})}
        freqs = merged.get("frequencies", [merged.get("omega")])
        try:
            if all(isinstance(f, (int, float)) for f in freqs):
                fundamental_period(freqs)
        except ValidationError as exc:
            label = v.get("label", "")
            problems.append(f"parameters[{label}]: {exc}")

    if "oracle_compare" in tasks:
        if model not in ("rabi", "two_mode_jc"):
            problems.append(f"oracle_compare: no exact reference for model {model!r}")
        if "oracle" not in scenario:
            problems.append("oracle_compare: needs an 'oracle' settings block")
    if "oracle" in scenario:
        _unknown(scenario["oracle"], _ORACLE_KEYS, "oracle", problems)
    if "purity" in tasks:
        if model != "two_mode_jc":
            problems.append("purity: closed-form purity applies to model 'two_mode_jc'")
        variances = {entry.get("variance") for entry in photonic}
        if len(variances) > 1:
            problems.append("purity: photonic variances must be equal across modes")


def _validate_applications(scenario: dict, tasks: list, problems: list):
    app = scenario.get("applications")
    wanted = [t for t in tasks if t in _APP_TASKS]
    if app is None:
        if wanted:
            problems.append(f"applications: block required for tasks {wanted}")
        return
    _unknown(app, _APP_KEYS, "applications", problems)
    conv = app.get("convention", "angular")
    if conv not in applications.CONVENTIONS:
        problems.append(f"applications.convention: {conv!r} not in {list(applications.CONVENTIONS)}")
    if "coherence_time" in tasks:
        coh = app.get("coherence")
        if coh is None:
            problems.append("coherence_time: needs applications.coherence")
        else:
            _unknown(coh, _COHERENCE_KEYS, "applications.coherence", problems)
            kind = coh.get("kind")
            if kind not in ("traveling", "closed"):
                problems.append("applications.coherence.kind: 'traveling' or 'closed'")
            for i, m in enumerate(coh.get("modes", [])):
                _unknown(m, _COH_MODE_KEYS, f"applications.coherence.modes[{i}]", problems)
                if kind == "traveling" and "power_w" not in m:
                    problems.append(f"applications.coherence.modes[{i}]: missing power_w")
            if not coh.get("modes"):
                problems.append("applications.coherence.modes: must be non-empty")
            if kind == "closed" and ("field_v_per_m" not in coh or "volume_m3" not in coh):
                problems.append("applications.coherence: closed kind needs field_v_per_m and volume_m3")
    if "transfer_rate" in tasks:
        tr = app.get("transfer")
        if tr is None:
            problems.append("transfer_rate: needs applications.transfer")
        else:
            _unknown(tr, _TRANSFER_KEYS, "applications.transfer", problems)
            missing = sorted(_TRANSFER_KEYS - set(tr))
            if missing:
                problems.append(f"applications.transfer: missing {missing}")
    if "protocol" in tasks:
        pr = app.get("protocol")
        if pr is None:
            problems.append("protocol: needs applications.protocol")
        else:
            _unknown(pr, _PROTOCOL_KEYS, "applications.protocol", problems)
            missing = sorted((_TRANSFER_KEYS | {"pulse_duration_s", "trials"}) - set(pr))
            if missing:
                problems.append(f"applications.protocol: missing {missing}")


# ---------------------------------------------------------------------------
# model assembly
# ---------------------------------------------------------------------------

def _build_system(model: str, params: dict, specs: list):
    ops = spin_half_operators()
    h0 = 0.5 * params["h_z"] * ops["z"]
    if model in ("jc", "two_mode_jc"):
        gs = [params["coupling"]] if model == "jc" else list(params["couplings"])
        pairs = [
            (ops["plus"], ModeSpec(frequency=params["omega"], phase=s.phase, coupling=g, form="rwa"))
            for g, s in zip(gs, specs)
        ]
        return build_driven_system(h0, pairs)
    if model == "rabi":
        mode = ModeSpec(
            frequency=params["omega"], phase=specs[0].phase, coupling=params["coupling"], form="cos"
        )
        return build_driven_system(h0, [(ops["x"], mode)])
    pairs = [
        (ops["x"], ModeSpec(frequency=f, phase=s.phase, coupling=g, form="cos"))
        for f, g, s in zip(params["frequencies"], params["couplings"], specs)
    ]
    return build_driven_system(h0, pairs)


def _tmjc_arguments(model: str, params: dict, specs: list) -> tuple:
    """(g1, g2, phi1, phi2) for the closed-form two-mode JC family."""
    if model == "jc":
        return params["coupling"], 0.0, specs[0].phase, 0.0
    g1, g2 = params["couplings"]
    return g1, g2, specs[0].phase, specs[1].phase


def _initial_states(entries: list, basis: np.ndarray) -> list:
    """Resolve declared initial states against the sorted chi=0 Floquet basis.

    Returns (label, MatterState, floquet_coefficients) triples.
    """
    out = []
    d = basis.shape[0]
    for ent in entries:
        kind = ent["kind"]
        if kind == "basis":
            vec = np.zeros(d, dtype=complex)
            vec[0 if ent["state"] == "up" else 1] = 1.0
        elif kind == "floquet":
            vec = basis[:, int(ent["index"])].copy()
        else:
            if ent.get("coefficients") is not None:
                c = np.array([complex(re, im) for re, im in ent["coefficients"]])
            else:
                c = np.sqrt(np.asarray(ent["weights"], dtype=float)).astype(complex)
            if c.size != d:
                raise ValidationError(
                    f"initial state {ent['label']!r}: {c.size} coefficients for dimension {d}"
                )
            vec = basis @ c
        vec = vec / np.linalg.norm(vec)
        coeffs = basis.conj().T @ vec
        out.append((ent["label"], MatterState(vec), coeffs))
    return out


def _apply_variant(scenario: dict, variant: dict) -> tuple:
    params = {**scenario["parameters"], **(variant.get("parameters") or {})}
    override = variant.get("photonic") or {}
    photonic = [{**entry, **override} for entry in scenario["photonic"]]
    return params, photonic


# ---------------------------------------------------------------------------
# invariant bookkeeping
# ---------------------------------------------------------------------------

class _Invariants:
    """Worst-residual tracker; any breach fails the run with exit code 3."""

    def __init__(self):
        self.records: dict = {}

    def record(self, name: str, residual: float, tol: float):
        residual = float(residual)
        old = self.records.get(name)
        if old is not None and old.get("status") != "not-applicable":
            residual = max(residual, old["residual"])
        self.records[name] = {
            "residual": residual,
            "tolerance": float(tol),
            "status": "pass" if residual <= tol else "fail",
        }

    def fail(self, name: str, message: str):
        self.records[name] = {"status": "fail", "detail": message}

    def not_applicable(self, name: str, reason: str):
        if name not in self.records:
            self.records[name] = {"status": "not-applicable", "reason": reason}

    def raise_on_failure(self):
        for name, rec in self.records.items():
            if rec.get("status") == "fail":
                detail = rec.get("detail", f"residual {rec.get('residual'):.3e} "
                                           f"exceeds {rec.get('tolerance'):.3e}")
                raise counting.ToleranceError(f"invariant '{name}' failed: {detail}")


def _record_mgf_invariants(inv: _Invariants, samples):
    values = samples.values
    inv.record("normalization_at_zero_field", np.max(np.abs(values[:, 0] - 1.0)), 1e-10)
    neg = _negation_map(samples.grid.n_samples)
    inv.record(
        "conjugation_symmetry", np.max(np.abs(values[:, neg] - np.conj(values))), 1e-10
    )


def _record_completeness(inv: _Invariants, propset, t_final: float):
    ops = photon_resolved_operators(propset, t_final)
    total = sum(op.conj().T @ op for op in ops.values())
    inv.record(
        "fourier_completeness",
        np.max(np.abs(total - np.eye(propset.dim))),
        1e-10,
    )


def _record_energy_current(inv: _Invariants, system, threads):
    period = system.period
    grid = CountingGrid(mode_indices=(0,), n_samples=(64,))
    times = np.linspace(0.0, period / 32.0, 9)
    propset = propagate_generalized(system, grid, times, threads=threads)
    _, lhs, rhs = counting.energy_current_residual(propset, MatterState.up())
    scale = max(1.0, float(np.max(np.abs(rhs))))
    inv.record("energy_current", np.max(np.abs(lhs - rhs)), 2e-5 * scale)


# ---------------------------------------------------------------------------
# dynamical pipeline
# ---------------------------------------------------------------------------

def _run_dynamics(scenario: dict, threads: int, summary: dict, inv: _Invariants, timings: dict):
    model = scenario["model"]
    tasks = scenario["tasks"]
    cnt = scenario["counting"]
    counted = list(cnt["modes"])
    n_chi = int(cnt["n_samples"])
    q_window = int(cnt["window"])
    tcfg = scenario["times"]
    times = np.linspace(float(tcfg["start"]), float(tcfg["stop"]), int(tcfg["num"]))
    snapshots = scenario.get("snapshots", [float(times[-1])])
    snap_idx = [int(np.argmin(np.abs(times - s))) for s in snapshots]
    variants = scenario.get("grid", [{"label": ""}])
    oracle_cfg = scenario.get("oracle", {})
    oracle_on = "oracle_compare" in tasks and oracle_cfg.get("enabled", True)
    margin = int(oracle_cfg.get("window_margin", ORACLE_WINDOW_MARGIN))
    k_pad = float(oracle_cfg.get("k_pad_sigmas", 8.0))

    tables = {
        "cumulants": [],
        "spins": [],
        "quasiprob": [],
        "pn": [],
        "purity": [],
    }
    summary["floquet"] = {}

    for variant in variants:
        vlabel = variant.get("label", "")
        params, photonic = _apply_variant(scenario, variant)
        specs = [PhotonicInitialState(**entry) for entry in photonic]
        system = _build_system(model, params, specs)

        t0 = _time.perf_counter()
        ders = {
            k: quasienergy_phase_derivatives(system, k, order=2, threads=threads)
            for k in counted
        }
        d0 = ders[counted[0]]
        order = np.argsort(d0.energies)
        basis = d0.states[:, order]
        summary["floquet"][vlabel or "base"] = {
            "quasienergies": [float(d0.energies[i]) for i in order],
            "first_derivative": {
                f"mode{k}": [float(ders[k].first[i]) for i in order] for k in counted
            },
            "second_derivative": {
                f"mode{k}": [float(ders[k].second[i]) for i in order] for k in counted
            },
        }
        states = _initial_states(scenario["initial_states"], basis)
        timings["floquet"] = timings.get("floquet", 0.0) + _time.perf_counter() - t0

        # --- generating functions per counted mode ---------------------------
        t0 = _time.perf_counter()
        propsets = {}
        if model in ("rabi", "three_mode_rabi"):
            for k in counted:
                grid = CountingGrid(mode_indices=(k,), n_samples=(n_chi,))
                propsets[k] = propagate_generalized(system, grid, times, threads=threads)
        mgf = {}
        for k in counted:
            for label, psi, _ in states:
                if model in ("jc", "two_mode_jc"):
                    g1, g2, phi1, phi2 = _tmjc_arguments(model, params, specs)
                    grid = CountingGrid(mode_indices=(k,), n_samples=(n_chi,))
                    samples = counting.two_mode_jc_mgf_closed_form(
                        params["h_z"], params["omega"], g1, g2, phi1, phi2,
                        psi, grid, times,
                    )
                else:
                    samples = counting.dynamical_mgf(propsets[k], psi)
                mgf[(k, label)] = samples
                _record_mgf_invariants(inv, samples)
        timings["generating_function"] = (
            timings.get("generating_function", 0.0) + _time.perf_counter() - t0
        )

        # --- structural invariants -------------------------------------------
        t_final = float(times[-1])
        if model in ("jc", "two_mode_jc"):
            g1, g2, phi1, phi2 = _tmjc_arguments(model, params, specs)
            inv_grid = CountingGrid(mode_indices=(counted[0],), n_samples=(n_chi,))
            inv_propset = two_mode_jc_propagator_set(
                params["h_z"], params["omega"], g1, g2, phi1, phi2,
                inv_grid, np.array([0.0, t_final]), picture="full",
            )
            _record_completeness(inv, inv_propset, t_final)
        else:
            _record_completeness(inv, propsets[counted[0]], t_final)

        spin_propset = None
        if "propagate" in tasks:
            if model in ("jc", "two_mode_jc"):
                g1, g2, phi1, phi2 = _tmjc_arguments(model, params, specs)
                spin_grid = CountingGrid(mode_indices=(counted[0],), n_samples=(4,))
                spin_propset = two_mode_jc_propagator_set(
                    params["h_z"], params["omega"], g1, g2, phi1, phi2,
                    spin_grid, times, picture="full",
                )
            else:
                spin_propset = propsets[counted[0]]
        if model in ("rabi", "jc"):
            _record_energy_current(inv, system, threads)
        else:
            inv.not_applicable("energy_current", "identity applies to single-mode driving")

        # --- PRFT statistics ---------------------------------------------------
        t0 = _time.perf_counter()
        kappa = {}
        if "cumulants" in tasks:
            for (k, label), samples in mgf.items():
                kappa[(k, label)] = counting.cumulants(samples, k)
        qres = {}
        if "quasiprob" in tasks or "redistribute" in tasks:
            for (k, label), samples in mgf.items():
                qres[(k, label)] = counting.quasiprobabilities(samples, q_window, k)
                shifts, q = qres[(k, label)]
                inv.record(
                    "quasiprobability_sum", np.max(np.abs(np.sum(q, axis=-1) - 1.0)), 1e-8
                )
        else:
            # record the sum invariant on a small window even when no
            # quasiprobability output is requested
            for (k, label), samples in mgf.items():
                w = min(q_window, n_chi // 2 - 1)
                _, q = counting.quasiprobabilities(samples, w, k)
                inv.record(
                    "quasiprobability_sum", np.max(np.abs(np.sum(q, axis=-1) - 1.0)), 1e-8
                )
        timings["statistics"] = timings.get("statistics", 0.0) + _time.perf_counter() - t0

        # --- oracle -------------------------------------------------------------
        oracle = {}
        if oracle_on:
            t0 = _time.perf_counter()
            flux_max = max(
                abs(float(ders[k].first[i])) for k in counted for i in range(system.dim)
            )
            drift = math.ceil(flux_max * t_final) + margin
            if model == "rabi":
                window = fock_oracle.suggested_fock_window(specs[0], drift=drift)
                for label, psi, _ in states:
                    oracle[label] = fock_oracle.evolve_rabi_fock(
                        params["h_z"], params["omega"], psi, specs[0], window,
                        times, coupling=params["coupling"],
                    )
            else:
                window1 = fock_oracle.suggested_fock_window(specs[0], drift=drift)
                g1, g2, _, _ = _tmjc_arguments(model, params, specs)
                semi = bool(oracle_cfg.get("semiclassical_elements", True))
                a1 = math.sqrt(specs[0].mean)
                a2 = math.sqrt(specs[1].mean)
                for label, psi, _ in states:
                    ens0 = fock_oracle.build_initial_fock_state(
                        psi, specs, window1, k_pad_sigmas=k_pad
                    )
                    oracle[label] = fock_oracle.evolve_two_mode_jc_fock(
                        params["h_z"], params["omega"], g1 / a1, g2 / a2,
                        ens0, times, semiclassical_elements=semi,
                    )
            for ens_list in oracle.values():
                drift_norm = max(abs(ens.norm() - 1.0) for ens in ens_list)
                inv.record("excitation_conservation", drift_norm, 1e-8)
            timings["oracle"] = timings.get("oracle", 0.0) + _time.perf_counter() - t0
        else:
            inv.not_applicable("excitation_conservation", "no oracle comparison requested")

        # --- tables ---------------------------------------------------------------
        _emit_tables(
            tables, vlabel, states, counted, times, snap_idx,
            kappa, qres, oracle, specs, tasks, ders, order, spin_propset,
        )

    return tables, bool(oracle_on), times


def _oracle_series(oracle_states: list, mode_number: int) -> dict:
    """Per-time marginal cumulant changes for one evolved oracle state."""
    series = {1: [], 2: [], 3: [], 4: []}
    base = None
    for ens in oracle_states:
        n_values, p = fock_oracle.photon_marginal(ens, mode=mode_number)
        cums = fock_oracle.distribution_cumulants(n_values, p)
        if base is None:
            base = cums
        for order in series:
            series[order].append(cums[order] - base[order])
    return series


def _emit_tables(
    tables, vlabel, states, counted, times, snap_idx, kappa, qres,
    oracle, specs, tasks, ders, order, spin_propset,
):
    ops = spin_half_operators()
    # cumulants.csv
    if kappa:
        for (k, label), result in sorted(kappa.items(), key=lambda kv: (kv[0][1], kv[0][0])):
            oseries = None
            if oracle.get(label) is not None:
                oseries = _oracle_series(oracle[label], mode_number=k + 1)
            for it, t in enumerate(times):
                row = [vlabel, label, k, float(t)]
                for o in (1, 2, 3, 4):
                    row.append(float(result.kappa[o][it]))
                    row.append(float(result.error[o][it]))
                if oseries is not None:
                    row.extend(float(oseries[o][it]) for o in (1, 2, 3, 4))
                tables["cumulants"].append(row)

    # spins.csv: semiclassical spin components at zero counting field
    if spin_propset is not None:
        for label, psi, _ in states:
            v = np.einsum("tab,b->ta", spin_propset.values[:, 0], psi.amplitudes)
            sx = np.real(np.einsum("ta,ab,tb->t", np.conj(v), ops["x"], v))
            sy = np.real(np.einsum("ta,ab,tb->t", np.conj(v), ops["y"], v))
            sz = np.real(np.einsum("ta,ab,tb->t", np.conj(v), ops["z"], v))
            ospins = None
            if oracle.get(label) is not None:
                ospins = [fock_oracle.spin_expectations(ens) for ens in oracle[label]]
            for it, t in enumerate(times):
                row = [vlabel, label, float(t), float(sx[it]), float(sy[it]), float(sz[it])]
                if ospins is not None:
                    row.extend(
                        float(ospins[it][c]) for c in ("x", "y", "z")
                    )
                tables["spins"].append(row)

    # quasiprob.csv at snapshot times
    if "quasiprob" in tasks:
        for (k, label), (shifts, q) in sorted(qres.items(), key=lambda kv: (kv[0][1], kv[0][0])):
            for it in snap_idx:
                for m, value in zip(shifts, q[it]):
                    tables["quasiprob"].append(
                        [vlabel, label, k, float(times[it]), int(m), float(value)]
                    )

    # pn.csv: initial distribution pushed through the quasiprobabilities
    if "redistribute" in tasks:
        for (k, label), (shifts, q) in sorted(qres.items(), key=lambda kv: (kv[0][1], kv[0][0])):
            spec = specs[k]
            window = fock_oracle.suggested_fock_window(spec)
            n_values = window.indices()
            p0 = np.abs(spec.amplitudes(n_values)) ** 2
            n_out, p = counting.redistribute(shifts, q[snap_idx], n_values, p0)
            marginals = {}
            if oracle.get(label) is not None:
                for j, it in enumerate(snap_idx):
                    nv, pv = fock_oracle.photon_marginal(oracle[label][it], mode=k + 1)
                    marginals[j] = dict(zip(nv.tolist(), pv.tolist()))
            for j, it in enumerate(snap_idx):
                for n, value in zip(n_out, p[j]):
                    row = [vlabel, label, k, float(times[it]), int(n), float(value)]
                    if oracle.get(label) is not None:
                        row.append(float(marginals[j].get(int(n), 0.0)))
                    tables["pn"].append(row)

    # purity.csv
    if "purity" in tasks:
        e1p = float(ders[counted[0]].first[order[0]])
        e2p = float(ders[counted[0]].first[order[1]])
        variance = specs[0].variance
        for label, psi, coeffs in states:
            closed = applications.purity_prediction(
                coeffs[0], coeffs[1], e1p, e2p, variance, times
            )
            opur = None
            if oracle.get(label) is not None:
                opur = [fock_oracle.purity(ens) for ens in oracle[label]]
            for it, t in enumerate(times):
                row = [vlabel, label, float(t), float(closed[it])]
                if opur is not None:
                    row.append(float(opur[it]))
                tables["purity"].append(row)


# ---------------------------------------------------------------------------
# applications pipeline
# ---------------------------------------------------------------------------

def _run_applications(scenario: dict, seed: int | None, summary: dict):
    app = scenario.get("applications")
    if app is None:
        return
    tasks = scenario["tasks"]
    conv = app.get("convention", "angular")
    out = {"declared_convention": conv}

    if "coherence_time" in tasks:
        coh = app["coherence"]
        values = {}
        for convention in applications.CONVENTIONS:
            if coh["kind"] == "traveling":
                modes = [
                    (m["frequency_hz"], m["power_w"], m["derivatives_per_state"])
                    for m in coh["modes"]
                ]
                values[convention] = applications.coherence_time_traveling(
                    modes, convention=convention
                )
            else:
                modes = [
                    (m["frequency_hz"], m["derivatives_per_state"]) for m in coh["modes"]
                ]
                values[convention] = applications.coherence_time_closed(
                    modes, coh["field_v_per_m"], coh["volume_m3"], convention=convention
                )
        out["coherence_time_s"] = values
        out["coherence_time_declared_s"] = values[conv]

    if "transfer_rate" in tasks:
        tr = app["transfer"]
        args = (
            tr["n_atoms"], tr["rabi_frequency_hz"], tr["photon_frequency_hz"],
            tr["power_w"], tr["loss_rate_per_km"], tr["distance_km"],
        )
        rates = {
            convention: applications.transfer_rate(*args, convention=convention)
            for convention in applications.CONVENTIONS
        }
        out["transfer_rate_hz"] = rates
        out["transfer_rate_declared_hz"] = rates[conv]
        out["transfer_consistency"] = applications.transfer_consistency(
            *args, convention=conv
        )

    if "protocol" in tasks:
        pr = app["protocol"]
        result = applications.protocol_simulate(
            pr["n_atoms"], pr["rabi_frequency_hz"], pr["photon_frequency_hz"],
            pr["power_w"], pr["loss_rate_per_km"], pr["distance_km"],
            pr["pulse_duration_s"], int(pr["trials"]), int(seed),
            convention=conv, acceptance_window=pr.get("acceptance_window"),
        )
        out["protocol"] = {
            "trials": result.trials,
            "seed": result.seed,
            "acceptance_window_photons": result.acceptance_window,
            "success_rate": result.success_rate,
            "success_rate_analytic": result.success_rate_analytic,
            "fidelity_proxy": result.fidelity_proxy,
            "fidelity_empirical": result.fidelity_empirical,
            "separation_photons": result.separation,
            "broadening_photons": result.broadening,
            "sigma_effective_photons": result.sigma_effective,
            "peaks_resolved": result.peaks_resolved,
            "branch_counts": list(result.branch_counts),
        }

    summary["applications"] = out


# ---------------------------------------------------------------------------
# output writers
# ---------------------------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _write_csv(path: str, header: list, rows: list):
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _json_safe(obj):
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        return value if math.isfinite(value) else repr(value)
    if isinstance(obj, np.ndarray):
        return [_json_safe(v) for v in obj.tolist()]
    return obj


def _write_json(path: str, obj):
    with open(path, "w") as fh:
        json.dump(_json_safe(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


_HEADERS = {
    "cumulants": ["variant", "state", "mode", "time",
                  "kappa1", "kappa1_err", "kappa2", "kappa2_err",
                  "kappa3", "kappa3_err", "kappa4", "kappa4_err"],
    "spins": ["variant", "state", "time", "sx", "sy", "sz"],
    "quasiprob": ["variant", "state", "mode", "time", "delta_n", "q"],
    "pn": ["variant", "state", "mode", "time", "n", "p"],
    "purity": ["variant", "state", "time", "purity_prft"],
}
_ORACLE_COLUMNS = {
    "cumulants": ["kappa1_oracle", "kappa2_oracle", "kappa3_oracle", "kappa4_oracle"],
    "spins": ["sx_oracle", "sy_oracle", "sz_oracle"],
    "pn": ["p_oracle"],
    "purity": ["purity_oracle"],
    "quasiprob": [],
}
_FILENAMES = {
    "cumulants": "cumulants.csv",
    "spins": "spins.csv",
    "quasiprob": "quasiprob.csv",
    "pn": "pn.csv",
    "purity": "purity.csv",
}


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _bundled_names() -> list:
    root = resources.files("prft") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def _load_scenario(ref: str) -> dict:
    if os.path.isfile(ref):
        with open(ref) as fh:
            try:
                return json.load(fh)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{ref}: not valid JSON ({exc})") from None
    candidate = resources.files("prft") / "scenarios" / f"{ref}.json"
    if candidate.is_file():
        return json.loads(candidate.read_text())
    raise ValidationError(
        f"{ref!r}: no such file and no bundled scenario of that name "
        f"(bundled: {', '.join(_bundled_names())})"
    )


def run_scenario(scenario: dict, out_dir: str, threads: int | None = None,
                 seed: int | None = None) -> dict:
    """Execute a validated scenario into ``out_dir``; returns the summary."""
    if seed is not None:
        scenario = {**scenario, "seed": int(seed)}
    problems = validate_scenario(scenario)
    if problems:
        raise ValidationError("; ".join(problems))
    os.makedirs(out_dir, exist_ok=True)
    seed = scenario.get("seed")
    summary: dict = {"name": scenario["name"]}
    inv = _Invariants()
    timings: dict = {}
    outputs = []

    t_start = _time.perf_counter()
    tables = None
    oracle_on = False
    if scenario["model"] in _DYNAMICAL:
        tables, oracle_on, _ = _run_dynamics(scenario, threads, summary, inv, timings)

    t0 = _time.perf_counter()
    _run_applications(scenario, seed, summary)
    timings["applications"] = _time.perf_counter() - t0

    if tables is not None:
        for key, rows in tables.items():
            if not rows:
                continue
            header = list(_HEADERS[key])
            if oracle_on:
                header += _ORACLE_COLUMNS[key]
            # rows without oracle columns keep the narrow header
            if rows and len(rows[0]) == len(_HEADERS[key]):
                header = list(_HEADERS[key])
            path = os.path.join(out_dir, _FILENAMES[key])
            _write_csv(path, header, rows)
            outputs.append(_FILENAMES[key])

    summary["invariants"] = inv.records
    _write_json(os.path.join(out_dir, "summary.json"), summary)
    outputs.append("summary.json")

    timings["total"] = _time.perf_counter() - t_start
    manifest = {
        "scenario": scenario,
        "outputs": sorted(outputs),
        "seed": seed,
        "threads": threads,
        "versions": {
            "prft": __version__,
            "numpy": np.__version__,
            "python": sys.version.split()[0],
            "kernel": KERNEL_NAME,
        },
        "timings_s": timings,
    }
    _write_json(os.path.join(out_dir, "manifest.json"), manifest)

    inv.raise_on_failure()
    return summary


def cmd_run(args) -> int:
    scenario = _load_scenario(args.scenario)
    out_dir = args.out or f"prft_{scenario.get('name', 'scenario')}"
    threads = args.threads
    if threads is None:
        env = os.environ.get("PRFT_THREADS")
        threads = int(env) if env else None
    run_scenario(scenario, out_dir, threads=threads, seed=args.seed)
    print(f"wrote {out_dir}/")
    return 0


def cmd_validate(args) -> int:
    scenario = _load_scenario(args.scenario)
    problems = validate_scenario(scenario)
    if not problems:
        print("ok")
        return 0
    for p in problems:
        print(f"problem: {p}")
    return 2


def cmd_list(_args) -> int:
    for name in _bundled_names():
        print(name)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="prft",
        description="photon-resolved counting statistics of driven quantum systems",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a scenario file or bundled scenario name")
    p_run.add_argument("scenario", help="path to a scenario JSON or a bundled name")
    p_run.add_argument("--out", help="output directory (default: prft_<name>)")
    p_run.add_argument("--threads", type=int, default=None,
                       help="worker threads (default: PRFT_THREADS or 1)")
    p_run.add_argument("--seed", type=int, default=None,
                       help="override the scenario seed (protocol task)")
    p_run.set_defaults(func=cmd_run)

    p_val = sub.add_parser("validate", help="check a scenario without running it")
    p_val.add_argument("scenario", help="path to a scenario JSON or a bundled name")
    p_val.set_defaults(func=cmd_validate)

    p_list = sub.add_parser("list-scenarios", help="names of the bundled scenarios")
    p_list.set_defaults(func=cmd_list)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 2
    except PRFTError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
