"""Propagation of driven matter systems with counting fields on the drive modes.

Computes the generalized time-evolution operators U_chi(t) — numerically with
a commutator-free 4th-order exponential integrator for generic systems, and
in closed form for the (two-mode) Jaynes-Cummings family — plus the
photon-resolved operators U^(m)(t) and Fock-projector expectations built from
them.

Sign bookkeeping (see :mod:`prft.core` for the coupling convention): in
``U_chi = sum_m U^(m) exp(+i m chi)`` positive ``m`` means photons *gained*
by the counted field mode, i.e. the de-exciting part of the matter coupling
carries ``exp(+i chi)``.
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernel
from .core import (
    AliasingWarning,
    CountingGrid,
    CoverageError,
    DrivenSystem,
    IntegrationError,
    MatterState,
    ModeSpec,
    ToleranceError,
    ValidationError,
    build_driven_system,
    spin_half_operators,
)

__all__ = [
    "IntegratorSpec",
    "GeneralizedHamiltonian",
    "GeneralizedPropagatorSet",
    "propagate_generalized",
    "jc_propagator",
    "two_mode_jc_propagator",
    "jc_system",
    "two_mode_jc_system",
    "two_mode_jc_propagator_set",
    "rotating_frame_propagator",
    "convert_picture",
    "extend_stroboscopic",
    "photon_resolved_operators",
    "fock_projector_expectation",
]

DEFAULT_SUBSTEPS_PER_PERIOD = 2000
UNITARITY_TOL = 1e-10
TIME_MATCH_TOL = 1e-9


def _default_threads(threads: int | None) -> int:
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get("PRFT_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


@dataclass(frozen=True)
class IntegratorSpec:
    """Fixed-step integrator configuration.

    ``max_step`` bounds the sub-step length; when ``None`` it defaults to
    (shortest driving period) / ``substeps_per_period``.
    """

    max_step: float | None = None
    substeps_per_period: int = DEFAULT_SUBSTEPS_PER_PERIOD

    def __post_init__(self):
        if self.max_step is not None and self.max_step <= 0:
            raise ValidationError(f"max_step must be positive, got {self.max_step}")
        if self.substeps_per_period < 1:
            raise ValidationError("substeps_per_period must be >= 1")

    def step_bound(self, system: DrivenSystem) -> float:
        if self.max_step is not None:
            return self.max_step
        shortest = min(2.0 * math.pi / m.frequency for m in system.modes)
        return shortest / self.substeps_per_period


@dataclass(frozen=True)
class GeneralizedHamiltonian:
    """The driven Hamiltonian at a fixed counting-field vector ``chi``."""

    system: DrivenSystem
    chi: np.ndarray

    def __post_init__(self):
        chi = np.asarray(self.chi, dtype=float).ravel()
        if chi.shape != (self.system.n_modes,):
            raise ValidationError(
                f"chi must have {self.system.n_modes} entries, got shape {chi.shape}"
            )
        object.__setattr__(self, "chi", chi)

    def matrix(self, t: float) -> np.ndarray:
        return self.system.hamiltonian(t, self.chi)

    def time_derivative(self, t: float) -> np.ndarray:
        return self.system.hamiltonian_time_derivative(t, self.chi)


@dataclass(frozen=True)
class GeneralizedPropagatorSet:
    """Propagators U_chi(t) over a counting grid and a list of times.

    ``values[m, j]`` is the d x d propagator at time ``times[m]`` and grid
    point ``j`` (row-major over the grid axes).  ``picture`` records whether
    the propagators are in the lab frame ("full") or in the rotating frame
    of the common drive frequency ("interaction").
    """

    system: DrivenSystem
    grid: CountingGrid
    times: np.ndarray
    values: np.ndarray
    picture: str = "full"
    _skip_checks: bool = field(default=False, repr=False)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float).ravel()
        values = np.asarray(self.values, dtype=complex)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)
        d = self.system.dim
        expected = (times.size, self.grid.size, d, d)
        if values.shape != expected:
            raise ValidationError(
                f"propagator array has shape {values.shape}, expected {expected}"
            )
        if self.picture not in ("full", "interaction"):
            raise ValidationError(f"unknown picture {self.picture!r}")
        if self._skip_checks:
            return
        # chi = 0 is always grid index 0 (chi_j = 2*pi*j/N starts at 0)
        u0 = values[:, 0]
        eye = np.eye(d)
        dev = np.max(np.abs(np.matmul(u0.conj().swapaxes(-1, -2), u0) - eye))
        if dev > UNITARITY_TOL:
            raise ToleranceError(
                f"chi=0 propagator not unitary: max deviation {dev:.3e} > {UNITARITY_TOL:.1e}"
            )
        if times.size and abs(times[0]) < TIME_MATCH_TOL:
            dev0 = np.max(np.abs(values[0] - eye))
            if dev0 > UNITARITY_TOL:
                raise ToleranceError(
                    f"U_chi(0) deviates from identity by {dev0:.3e}"
                )

    @property
    def dim(self) -> int:
        return self.system.dim

    def time_index(self, t: float) -> int:
        idx = np.argmin(np.abs(self.times - t))
        if abs(self.times[idx] - t) > TIME_MATCH_TOL * max(1.0, abs(t)):
            raise CoverageError(
                f"time {t} not in the propagator set (closest is {self.times[idx]})"
            )
        return int(idx)

    def at_time(self, t: float) -> np.ndarray:
        """All grid-point propagators at the stored time closest to ``t``."""
        return self.values[self.time_index(t)]


# ---------------------------------------------------------------------------
# numeric propagation
# ---------------------------------------------------------------------------

def _propagate_chi_vectors(
    system: DrivenSystem,
    chi_vectors: np.ndarray,
    times: np.ndarray,
    integrator: IntegratorSpec | None = None,
    threads: int | None = None,
) -> np.ndarray:
    """Propagators (len(times), len(chi_vectors), d, d) for explicit chi rows.

    ``times`` must be increasing and start at 0.  This is the engine behind
    :func:`propagate_generalized`; the Floquet derivative stencils call it
    directly with a handful of chi vectors.
    """
    integrator = integrator or IntegratorSpec()
    times = np.asarray(times, dtype=float).ravel()
    if times.size == 0:
        raise ValidationError("at least one output time required")
    if abs(times[0]) > TIME_MATCH_TOL:
        raise ValidationError(f"times must start at 0, got {times[0]}")
    if np.any(np.diff(times) <= 0):
        raise ValidationError("times must be strictly increasing")
    chi_vectors = np.atleast_2d(np.asarray(chi_vectors, dtype=float))
    if chi_vectors.shape[1] != system.n_modes:
        raise ValidationError(
            f"chi vectors must have {system.n_modes} columns, got {chi_vectors.shape[1]}"
        )
    d = system.dim
    G = chi_vectors.shape[0]
    h_max = integrator.step_bound(system)

    h0 = np.ascontiguousarray(system.h0, dtype=complex)
    ops = np.ascontiguousarray(np.stack(system.coupling_ops), dtype=complex)
    g = np.ascontiguousarray([m.g for m in system.modes], dtype=float)
    omega = np.ascontiguousarray([m.frequency for m in system.modes], dtype=float)
    phases = np.array([m.phase for m in system.modes])
    zphase = np.ascontiguousarray(np.exp(-1j * (chi_vectors - phases)), dtype=complex)

    out = np.empty((times.size, G, d, d), dtype=complex)
    u = np.tile(np.eye(d, dtype=complex), (G, 1, 1))
    out[0] = u
    n_threads = _default_threads(threads)

    def advance(ublock, zblock, t0, h, nsteps):
        _kernel.cf4_advance(ublock, h0, ops, g, omega, zblock, t0, h, nsteps)

    for m in range(times.size - 1):
        t0, t1 = times[m], times[m + 1]
        dt = t1 - t0
        nsteps = max(1, math.ceil(dt / h_max - 1e-12))
        if nsteps > 2**40:
            raise IntegrationError(
                f"step-size underflow on [{t0}, {t1}] (would need {nsteps} sub-steps) "
                f"for the whole chi grid"
            )
        h = dt / nsteps
        if t0 + h == t0:
            raise IntegrationError(
                f"step-size underflow at t = {t0} (h = {h}) for the whole chi grid"
            )
        if n_threads == 1 or G < 2 * n_threads:
            advance(u, zphase, t0, h, nsteps)
        else:
            bounds = np.linspace(0, G, n_threads + 1).astype(int)
            with ThreadPoolExecutor(max_workers=n_threads) as pool:
                futs = [
                    pool.submit(advance, u[a:b], zphase[a:b], t0, h, nsteps)
                    for a, b in zip(bounds[:-1], bounds[1:])
                    if b > a
                ]
                for f in futs:
                    f.result()
        out[m + 1] = u
    return out


def propagate_generalized(
    system: DrivenSystem,
    grid: CountingGrid,
    times,
    integrator: IntegratorSpec | None = None,
    threads: int | None = None,
) -> GeneralizedPropagatorSet:
    """Integrate U_chi(t) on every counting-grid point.

    Parameters
    ----------
    system : DrivenSystem
    grid : CountingGrid
        Counting fields are applied to ``grid.mode_indices``; all other
        modes are propagated at chi = 0.
    times : array_like
        Strictly increasing output times starting at 0.
    integrator : IntegratorSpec, optional
        Step-size policy; default is (shortest period) / 2000.
    threads : int, optional
        Worker threads over grid chunks (falls back to ``PRFT_THREADS``,
        then 1).  The output is independent of the thread count.

    Returns
    -------
    GeneralizedPropagatorSet
        Lab-frame ("full" picture) propagators; unitarity of the chi = 0
        column is validated on construction.
    """
    chi_vectors = grid.chi_vectors(system.n_modes)
    values = _propagate_chi_vectors(system, chi_vectors, times, integrator, threads)
    return GeneralizedPropagatorSet(
        system=system, grid=grid, times=np.asarray(times, dtype=float), values=values
    )


# ---------------------------------------------------------------------------
# closed forms for the (two-mode) Jaynes-Cummings family
# ---------------------------------------------------------------------------

def _jc_closed_form(h_z: float, omega: float, w, t) -> np.ndarray:
    """Rotating-frame propagator for H_I = (Delta/2) sigma_z + (2W sigma_+ + h.c.)/2.

    ``w`` is the complex effective coupling W (possibly an array); ``t``
    broadcasts against it.  Branch-free in the degenerate limit E -> 0.
    """
    w = np.asarray(w, dtype=complex)
    t = np.asarray(t, dtype=float)
    delta = h_z - omega
    e = 0.5 * np.sqrt(delta**2 + 16.0 * np.abs(w) ** 2)
    cos = np.cos(e * t)
    # sin(E t)/E, safe at E = 0
    s = t * np.sinc(e * t / math.pi)
    shape = np.broadcast_shapes(w.shape, t.shape)
    u = np.empty(shape + (2, 2), dtype=complex)
    u[..., 0, 0] = cos - 1j * s * (delta / 2.0)
    u[..., 1, 1] = cos + 1j * s * (delta / 2.0)
    u[..., 0, 1] = -1j * s * 2.0 * w
    u[..., 1, 0] = -1j * s * 2.0 * np.conj(w)
    return u


def jc_propagator(h_z: float, omega: float, g: float, chi=0.0, phi=0.0, t=0.0) -> np.ndarray:
    """Closed-form rotating-frame propagator of the driven Jaynes-Cummings model.

    The counted drive enters through the effective coupling
    ``W = g * exp(i (phi - chi))``; the splitting is
    ``E = sqrt((h_z - omega)^2 + 16 g^2) / 2`` (``E = 2g`` on resonance).
    ``chi``, ``phi`` and ``t`` broadcast.

    Returns
    -------
    ndarray, shape (..., 2, 2)
        ``U = cos(E t) I - i sin(E t) sigma_hat`` with the unit generator
        ``sigma_hat`` set by the detuning and W.  Use
        :func:`rotating_frame_propagator` to return to the lab frame.
    """
    chi = np.asarray(chi, dtype=float)
    phi = np.asarray(phi, dtype=float)
    w = g * np.exp(1j * (phi - chi))
    return _jc_closed_form(h_z, omega, w, t)


def two_mode_jc_propagator(
    h_z: float,
    omega: float,
    g1: float,
    g2: float,
    chi1=0.0,
    chi2=0.0,
    phi1=0.0,
    phi2=0.0,
    t=0.0,
) -> np.ndarray:
    """Closed-form rotating-frame propagator for two degenerate JC drive modes.

    Both modes share the frequency ``omega``; the effective coupling is
    ``W = g1 exp(i(phi1 - chi1)) + g2 exp(i(phi2 - chi2))``, so the splitting
    depends on the counting fields only through phase *differences* (a
    common shift of chi1 and chi2 leaves |W| unchanged).  Reduces to
    :func:`jc_propagator` for ``g2 = 0``.
    """
    w = g1 * np.exp(1j * (np.asarray(phi1, float) - np.asarray(chi1, float)))
    w = w + g2 * np.exp(1j * (np.asarray(phi2, float) - np.asarray(chi2, float)))
    return _jc_closed_form(h_z, omega, w, t)


def jc_system(h_z: float, omega: float, g: float, phi: float = 0.0) -> DrivenSystem:
    """DrivenSystem for the single-mode JC family (raising-type coupling)."""
    ops = spin_half_operators()
    h0 = 0.5 * h_z * ops["z"]
    mode = ModeSpec(frequency=omega, phase=phi, coupling=g, form="rwa")
    # sigma_plus has matrix entries 2; that normalization is what makes the
    # resonant splitting E = 2g of the closed form come out.
    return build_driven_system(h0, [(ops["plus"], mode)])


def two_mode_jc_system(
    h_z: float, omega: float, g1: float, g2: float, phi1: float = 0.0, phi2: float = 0.0
) -> DrivenSystem:
    """DrivenSystem for two degenerate JC drive modes."""
    ops = spin_half_operators()
    h0 = 0.5 * h_z * ops["z"]
    m1 = ModeSpec(frequency=omega, phase=phi1, coupling=g1, form="rwa")
    m2 = ModeSpec(frequency=omega, phase=phi2, coupling=g2, form="rwa")
    return build_driven_system(h0, [(ops["plus"], m1), (ops["plus"], m2)])


def two_mode_jc_propagator_set(
    h_z: float,
    omega: float,
    g1: float,
    g2: float,
    phi1: float,
    phi2: float,
    grid: CountingGrid,
    times,
    picture: str = "interaction",
) -> GeneralizedPropagatorSet:
    """Closed-form GeneralizedPropagatorSet for the two-mode JC family."""
    system = two_mode_jc_system(h_z, omega, g1, g2, phi1, phi2)
    chi_vectors = grid.chi_vectors(system.n_modes)
    times = np.asarray(times, dtype=float).ravel()
    w = g1 * np.exp(1j * (phi1 - chi_vectors[:, 0])) + g2 * np.exp(
        1j * (phi2 - chi_vectors[:, 1])
    )
    values = _jc_closed_form(h_z, omega, w[None, :], times[:, None])
    if picture == "full":
        values = np.einsum(
            "tab,tgbc->tgac", _rotation_matrices(omega, times), values
        )
    return GeneralizedPropagatorSet(
        system=system, grid=grid, times=times, values=values, picture=picture
    )


def _rotation_matrices(omega: float, times: np.ndarray) -> np.ndarray:
    """exp(-i omega t sigma_z / 2) for each time, shape (T, 2, 2)."""
    t = np.asarray(times, dtype=float).ravel()
    r = np.zeros((t.size, 2, 2), dtype=complex)
    r[:, 0, 0] = np.exp(-0.5j * omega * t)
    r[:, 1, 1] = np.exp(+0.5j * omega * t)
    return r


def rotating_frame_propagator(u_interaction: np.ndarray, omega: float, t) -> np.ndarray:
    """Convert a rotating-frame 2x2 propagator to the lab frame.

    ``U_full(t) = exp(-i omega t sigma_z / 2) @ U_interaction(t)``; the two
    frames coincide at t = 0 (our rotating frame is anchored there).
    """
    u = np.asarray(u_interaction, dtype=complex)
    t = np.asarray(t, dtype=float)
    phase_up = np.exp(-0.5j * omega * t)
    out = np.empty(np.broadcast_shapes(u.shape[:-2], t.shape) + (2, 2), dtype=complex)
    out[..., 0, :] = phase_up[..., None, None] * u[..., 0, :]
    out[..., 1, :] = np.conj(phase_up)[..., None, None] * u[..., 1, :]
    return out


def convert_picture(propset: GeneralizedPropagatorSet, to: str) -> GeneralizedPropagatorSet:
    """Convert a two-level propagator set between lab and rotating frames.

    Requires every mode to share one drive frequency (the rotating frame is
    generated by (omega/2) sigma_z).
    """
    if to not in ("full", "interaction"):
        raise ValidationError(f"unknown picture {to!r}")
    if propset.picture == to:
        return propset
    if propset.dim != 2:
        raise ValidationError("picture conversion implemented for two-level systems only")
    freqs = {m.frequency for m in propset.system.modes}
    if len(freqs) != 1:
        raise ValidationError("picture conversion requires a single common drive frequency")
    omega = freqs.pop()
    rot = _rotation_matrices(omega, propset.times)
    if to == "full":
        values = np.einsum("tab,tgbc->tgac", rot, propset.values)
    else:
        values = np.einsum("tab,tgbc->tgac", rot.conj().swapaxes(-1, -2), propset.values)
    return GeneralizedPropagatorSet(
        system=propset.system,
        grid=propset.grid,
        times=propset.times,
        values=values,
        picture=to,
    )


def extend_stroboscopic(propset: GeneralizedPropagatorSet, n_periods: int) -> GeneralizedPropagatorSet:
    """Propagators at t = 0, tau, ..., n_periods*tau by matrix powers of U(tau).

    Uses the periodicity of the generalized Hamiltonian in t; the input set
    must contain the one-period time tau.
    """
    if n_periods < 1:
        raise ValidationError("n_periods must be >= 1")
    tau = propset.system.period
    u1 = propset.at_time(tau)
    d = propset.dim
    out = np.empty((n_periods + 1, propset.grid.size, d, d), dtype=complex)
    out[0] = np.eye(d)
    for k in range(n_periods):
        out[k + 1] = np.matmul(u1, out[k])
    times = tau * np.arange(n_periods + 1)
    return GeneralizedPropagatorSet(
        system=propset.system,
        grid=propset.grid,
        times=times,
        values=out,
        picture=propset.picture,
    )


# ---------------------------------------------------------------------------
# photon-resolved operators
# ---------------------------------------------------------------------------

def photon_resolved_operators(propset: GeneralizedPropagatorSet, t: float) -> dict:
    """Fourier components U^(m)(t) of the generalized propagator over chi.

    ``U^(m) = (1/N) sum_j U_{chi_j} exp(-i m chi_j)``; the map key is the
    signed photon-number change m of the counted mode (a tuple for joint
    multi-mode grids).  Emits :class:`AliasingWarning` when the shared
    +-N/2 component carries weight above 1e-8 (grid too coarse for the
    support).
    """
    slab = propset.at_time(t)
    grid = propset.grid
    if grid.n_axes == 1:
        n = grid.n_samples[0]
        comps = np.fft.fft(slab, axis=0) / n
        edge = np.max(np.abs(comps[n // 2]))
        if edge > 1e-8:
            warnings.warn(
                f"photon-number support reaches the grid edge m = +-{n // 2} "
                f"(weight {edge:.2e}); increase N_chi",
                AliasingWarning,
            )
        return {m: comps[m % n] for m in range(-n // 2, n // 2)}
    shape = tuple(grid.n_samples)
    slab = slab.reshape(shape + slab.shape[1:])
    axes = tuple(range(grid.n_axes))
    comps = np.fft.fftn(slab, axes=axes) / grid.size
    edge = 0.0
    for a, n in enumerate(shape):
        edge = max(edge, np.max(np.abs(np.take(comps, n // 2, axis=a))))
    if edge > 1e-8:
        warnings.warn(
            f"photon-number support reaches a grid edge (weight {edge:.2e}); "
            "increase N_chi",
            AliasingWarning,
        )
    out = {}
    for idx in np.ndindex(shape):
        m = tuple(i if i < n // 2 else i - n for i, n in zip(idx, shape))
        out[m] = comps[idx]
    return out


def fock_projector_expectation(
    ops: dict,
    matter_state: MatterState,
    photon_amplitudes: np.ndarray,
    first_n: int,
    n,
) -> np.ndarray:
    """Probability of finding the counted mode with n photons at the later time.

    Parameters
    ----------
    ops : dict
        Photon-resolved operators from :func:`photon_resolved_operators`
        (single counted mode).
    matter_state : MatterState
    photon_amplitudes : array_like
        Initial photon-number amplitudes ``a_k`` for
        ``k = first_n ... first_n + len - 1``; indices outside this window
        are *not* assumed zero — they raise :class:`CoverageError`.
    first_n : int
        Photon number of the first amplitude entry.
    n : int or array_like
        Photon number(s) to evaluate.

    Returns
    -------
    ndarray or float
        ``<P_n> = || sum_m a_{n-m} U^(m) |psi> ||^2``.
    """
    a = np.asarray(photon_amplitudes, dtype=complex).ravel()
    n_arr = np.atleast_1d(np.asarray(n, dtype=int))
    active = {}
    for m, op in ops.items():
        if not isinstance(m, (int, np.integer)):
            raise ValidationError("fock_projector_expectation needs a single counted mode")
        if np.max(np.abs(op)) > 1e-12:
            active[int(m)] = op @ matter_state.amplitudes
    lo, hi = first_n, first_n + a.size - 1
    for m in active:
        need_lo, need_hi = n_arr.min() - m, n_arr.max() - m
        if need_lo < lo or need_hi > hi:
            raise CoverageError(
                f"photon amplitude window [{lo}, {hi}] does not cover index range "
                f"[{need_lo}, {need_hi}] required by the m = {m} component"
            )
    d = matter_state.dim
    acc = np.zeros((n_arr.size, d), dtype=complex)
    for m, vec in active.items():
        acc += a[n_arr - m - first_n, None] * vec[None, :]
    probs = np.sum(np.abs(acc) ** 2, axis=1)
    return probs if np.ndim(n) else float(probs[0])
