"""Photon full-counting statistics from two-point tomographic measurements.

The central object is the sampled dynamical moment-generating function

    M(chi, t) = (1/2) < U_0(t)^dag U_chi(t) + U_{-chi}(t)^dag U_0(t) >

over a periodic counting-field grid; the physical drive phases live inside
the propagators, the counting field chi is the offset from them.  From the
samples: cumulants (stencil differentiation of the unwrapped log), integer
quasiprobabilities (inverse DFT), probability redistribution, asymptotic
long-time statistics built from Floquet data, and the projective
two-point-measurement surrogate used as a comparator.

Sign bookkeeping matches :mod:`prft.semiclassical`: M(chi) = sum_m q_m
e^{+i m chi} with m > 0 meaning photons gained by the field, so q_m is
``fft(M)/N`` at index m.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from .core import (
    BranchError,
    CountingGrid,
    MatterState,
    ToleranceError,
    ValidationError,
    WindowError,
)
from .floquet import FloquetSolution, QuasienergyDerivatives
from .semiclassical import GeneralizedPropagatorSet, _jc_closed_form

__all__ = [
    "GeneratingFunctionSamples",
    "CumulantResult",
    "AsymptoticStatistics",
    "dynamical_mgf",
    "standard_fcs_mgf",
    "two_mode_jc_mgf_closed_form",
    "cumulants",
    "quasiprobabilities",
    "redistribute",
    "asymptotic_statistics",
    "energy_current_residual",
    "distribution_cumulants",
]

NORMALIZATION_TOL = 1e-10
CONJUGATION_TOL = 1e-10
QUASIPROB_IMAG_TOL = 1e-10
QUASIPROB_MASS_TOL = 1e-8
NEGATIVITY_TOL = 1e-8
PHASE_STEP_LIMIT = 2.5  # rad; unwrap is ambiguous as steps approach pi
STENCIL_HALF = 4  # 9-point stencils; Richardson doubling reaches offset 8
MIN_GRID_FOR_CUMULANTS = 32
ASYMPTOTIC_CAVEAT = (
    "orders 3 and 4 from the asymptotic generating function inherit the "
    "two-branch averaging ambiguity; treat them as qualitative"
)


@functools.lru_cache(maxsize=None)
def _negation_map(shape: tuple) -> np.ndarray:
    """Flat-index map j -> index of -chi_j on the periodic grid."""
    idx = np.arange(int(np.prod(shape))).reshape(shape)
    for axis in range(len(shape)):
        idx = np.roll(np.flip(idx, axis=axis), 1, axis=axis)
    return idx.reshape(-1)


@functools.lru_cache(maxsize=None)
def _stencil_weights(order: int) -> np.ndarray:
    """Central finite-difference weights on offsets -4..4 for d^order/dx^order."""
    offsets = np.arange(-STENCIL_HALF, STENCIL_HALF + 1)
    a = np.vander(offsets, increasing=True).T.astype(float)  # a[i, k] = k-th offset ** i
    rhs = np.zeros(offsets.size)
    rhs[order] = math.factorial(order)
    w = np.linalg.solve(a, rhs)
    # enforce the exact +-j symmetry the solve only approximates
    return 0.5 * (w + ((-1) ** order) * w[::-1])


@dataclass(frozen=True)
class GeneratingFunctionSamples:
    """Generating-function values over (times) x (flat counting grid).

    ``flag`` records provenance: ``exact-expectation`` for sampled
    two-point expectation values, ``floquet-asymptotic`` for the long-time
    Floquet reconstruction.
    """

    grid: CountingGrid
    times: np.ndarray
    values: np.ndarray
    flag: str

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float).ravel()
        values = np.asarray(self.values, dtype=complex)
        if self.flag not in ("exact-expectation", "floquet-asymptotic"):
            raise ValidationError(f"unknown flag {self.flag!r}")
        if values.shape != (times.size, self.grid.size):
            raise ValidationError(
                f"values shape {values.shape} does not match "
                f"(n_times, grid size) = ({times.size}, {self.grid.size})"
            )
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)
        worst = np.max(np.abs(values[:, 0] - 1.0)) if times.size else 0.0
        if worst > NORMALIZATION_TOL:
            raise ValidationError(
                f"M at zero counting field deviates from 1 by {worst:.2e}"
            )
        neg = _negation_map(self.grid.n_samples)
        mismatch = np.max(np.abs(values[:, neg] - np.conj(values)))
        if mismatch > CONJUGATION_TOL:
            raise ValidationError(
                f"conjugation symmetry M(-chi) = conj(M(chi)) violated by {mismatch:.2e}"
            )

    @property
    def n_axes(self) -> int:
        return len(self.grid.mode_indices)

    def axis_of_mode(self, mode_index: int) -> int:
        try:
            return self.grid.mode_indices.index(mode_index)
        except ValueError:
            raise ValidationError(
                f"mode {mode_index} is not counted on this grid {self.grid.mode_indices}"
            ) from None

    def line(self, mode_index: int) -> np.ndarray:
        """Samples along one counting axis, other counting fields at 0: (T, N)."""
        axis = self.axis_of_mode(mode_index)
        shaped = self.values.reshape((self.times.size,) + tuple(self.grid.n_samples))
        sel = tuple(slice(None) if a == axis else 0 for a in range(self.n_axes))
        return shaped[(slice(None),) + sel]

    def cgf_near_origin(self, mode_index: int, half_range: int = 2 * STENCIL_HALF):
        """Unwrapped log M at offsets -half_range..half_range along one axis.

        The branch is fixed by continuity from chi = 0 outward, never by a
        pointwise principal value.  Returns (offsets, K) with K of shape
        (T, 2 * half_range + 1).

        Raises :class:`BranchError` if a sample magnitude underflows or a
        phase step is too large to unwrap reliably.
        """
        n = self.grid.n_samples[self.axis_of_mode(mode_index)]
        if 2 * half_range >= n:
            raise ValidationError(
                f"counting grid with {n} samples cannot host offsets +-{half_range}"
            )
        line = self.line(mode_index)
        offsets = np.arange(-half_range, half_range + 1)
        m_vals = line[:, offsets % n]
        mags = np.abs(m_vals)
        if np.min(mags) < 1e-300:
            raise BranchError(
                "generating function magnitude underflowed inside the stencil"
            )
        theta = np.angle(m_vals)
        c = half_range  # column of chi = 0
        pos = np.unwrap(theta[:, c:], axis=1)
        neg = np.unwrap(theta[:, c::-1], axis=1)
        step = max(
            np.max(np.abs(np.diff(pos, axis=1)), initial=0.0),
            np.max(np.abs(np.diff(neg, axis=1)), initial=0.0),
        )
        if step > PHASE_STEP_LIMIT:
            raise BranchError(
                f"phase step {step:.2f} rad between adjacent counting-grid points; "
                "the grid is too coarse for branch-safe unwrapping"
            )
        unwrapped = np.concatenate([neg[:, ::-1], pos[:, 1:]], axis=1)
        return offsets, np.log(mags) + 1j * unwrapped


@dataclass(frozen=True)
class CumulantResult:
    """Stencil-extracted cumulants per time, with Richardson error estimates."""

    mode_index: int
    times: np.ndarray
    kappa: dict
    error: dict
    caveat: str | None = None

    def __getitem__(self, order: int) -> np.ndarray:
        return self.kappa[order]


def dynamical_mgf(
    propset: GeneralizedPropagatorSet, matter_state: MatterState
) -> GeneratingFunctionSamples:
    """Two-point tomographic generating function from sampled propagators.

    Both invariants (value 1 at zero counting field, conjugation symmetry)
    hold exactly by construction: with ``v_j = U_{chi_j} psi`` and
    ``c_j = v_0^dag v_j`` the symmetrized samples are
    ``M_j = (c_j + conj(c_{-j})) / 2``.
    """
    if matter_state.dim != propset.dim:
        raise ValidationError("matter state dimension does not match the propagators")
    psi = matter_state.amplitudes
    v = np.einsum("tgab,b->tga", propset.values, psi)
    c = np.einsum("ta,tga->tg", np.conj(v[:, 0, :]), v)
    neg = _negation_map(propset.grid.n_samples)
    m = 0.5 * (c + np.conj(c[:, neg]))
    return GeneratingFunctionSamples(
        grid=propset.grid, times=propset.times, values=m, flag="exact-expectation"
    )


def standard_fcs_mgf(
    propset: GeneralizedPropagatorSet, matter_state: MatterState
) -> GeneratingFunctionSamples:
    """Projective two-point-measurement surrogate (comparator only).

    Samples ``M~(chi') = < U_{-chi'/2}^dag U_{+chi'/2} >``.  Because the
    surrogate carries half-integer shift content it is 4 pi periodic in
    chi', and the samples live on a grid with half as many points:
    chi'_m = 2 chi_m, with the signed half-offsets read from the input
    grid.  That half-size grid spans only half of the surrogate's period,
    so the self-paired Nyquist sample is replaced by its even (real) part;
    all other samples are exact and conjugation symmetry holds by
    construction.  Derivatives at zero counting field are unaffected.
    """
    grid = propset.grid
    ns = tuple(grid.n_samples)
    if min(ns) < 4:
        raise ValidationError("standard-FCS surrogate needs at least 4 grid samples")
    halves = tuple(n // 2 for n in ns)
    out_grid = CountingGrid(mode_indices=grid.mode_indices, n_samples=halves)
    if matter_state.dim != propset.dim:
        raise ValidationError("matter state dimension does not match the propagators")
    psi = matter_state.amplitudes
    v = np.einsum("tgab,b->tga", propset.values, psi)
    # signed index per output axis: m' = m for m < half/2 else m - half
    signed_axes = [
        np.where(np.arange(h) < h // 2, np.arange(h), np.arange(h) - h) for h in halves
    ]
    grids = np.meshgrid(*signed_axes, indexing="ij")
    plus_idx = np.ravel_multi_index(
        tuple((+g) % n for g, n in zip(grids, ns)), ns
    ).reshape(-1)
    minus_idx = np.ravel_multi_index(
        tuple((-g) % n for g, n in zip(grids, ns)), ns
    ).reshape(-1)
    m = np.sum(np.conj(v[:, minus_idx, :]) * v[:, plus_idx, :], axis=-1)
    m = 0.5 * (m + np.conj(m[:, _negation_map(halves)]))
    return GeneratingFunctionSamples(
        grid=out_grid, times=propset.times, values=m, flag="exact-expectation"
    )


def standard_fcs_variance_asymptote(
    derivatives: QuasienergyDerivatives, branch: int, times
) -> np.ndarray:
    """Variance the projective comparator assigns to a Floquet state.

    Projecting onto the photon-number basis at the first measurement point
    randomizes the field phase, and the resulting conditional statistics
    broaden quadratically with rate set by the quasienergy curvature:
    variance(t) = (d^2 E_branch / d chi_k^2) * t^2.  The curvature can be
    negative, in which case the comparator predicts an impossible negative
    variance — the tomographic first point keeps the true variance bounded
    instead.  Comparator only; ``derivatives`` must carry second order.
    """
    if derivatives.second is None:
        raise ValidationError("second-order quasienergy derivatives required")
    if not 0 <= branch < derivatives.second.size:
        raise ValidationError(f"branch {branch} out of range")
    times = np.asarray(times, dtype=float).ravel()
    return float(derivatives.second[branch]) * times**2


def two_mode_jc_mgf_closed_form(
    h_z: float,
    omega: float,
    g1: float,
    g2: float,
    phi1: float,
    phi2: float,
    matter_state: MatterState,
    grid: CountingGrid,
    times,
    variant: str = "exact",
) -> GeneratingFunctionSamples:
    """Closed-form generating function of the two-mode Jaynes-Cummings model.

    No propagator set is materialized; the rotating-frame closed form is
    evaluated directly on the counting grid.  ``variant="exact"`` keeps the
    counting field everywhere; ``variant="approximate"`` drops it from the
    precession-axis operator (keeping it in the phase factors), which is
    accurate up to sub-leading-in-time terms.
    """
    if variant not in ("exact", "approximate"):
        raise ValidationError(f"unknown variant {variant!r}")
    if matter_state.dim != 2:
        raise ValidationError("closed form applies to two-level matter")
    times = np.asarray(times, dtype=float).ravel()
    chis = grid.chi_vectors(2)
    w_field = g1 * np.exp(1j * (phi1 - chis[:, 0])) + g2 * np.exp(1j * (phi2 - chis[:, 1]))
    delta = h_z - omega
    psi = matter_state.amplitudes
    if variant == "exact":
        u = _jc_closed_form(h_z, omega, w_field[None, :], times[:, None])
    else:
        # counting field only in the oscillation rate, axis frozen at chi = 0
        w0 = g1 * np.exp(1j * phi1) + g2 * np.exp(1j * phi2)
        e0 = 0.5 * math.sqrt(delta**2 + 16.0 * abs(w0) ** 2)
        e_chi = 0.5 * np.sqrt(delta**2 + 16.0 * np.abs(w_field[None, :]) ** 2)
        arg = e_chi * times[:, None]
        cos = np.cos(arg)
        if e0 == 0.0:
            raise ValidationError("approximate variant undefined at zero splitting")
        s = np.sin(arg) / e0
        u = np.empty(arg.shape + (2, 2), dtype=complex)
        u[..., 0, 0] = cos - 1j * s * (0.5 * delta)
        u[..., 0, 1] = -1j * s * (2.0 * w0)
        u[..., 1, 0] = -1j * s * (2.0 * np.conj(w0))
        u[..., 1, 1] = cos + 1j * s * (0.5 * delta)
    v = np.einsum("tgab,b->tga", u, psi)
    c = np.einsum("ta,tga->tg", np.conj(v[:, 0, :]), v)
    neg = _negation_map(grid.n_samples)
    m = 0.5 * (c + np.conj(c[:, neg]))
    return GeneratingFunctionSamples(grid=grid, times=times, values=m, flag="exact-expectation")


def cumulants(
    samples: GeneratingFunctionSamples, mode_index: int, orders=(1, 2, 3, 4)
) -> CumulantResult:
    """Cumulants kappa_n = (-i)^n d^n log M / d chi^n at zero counting field.

    Nine-point central stencils on the unwrapped log, with one Richardson
    step (doubling the spacing) supplying both an improved value and an
    error estimate.  Cumulants must come out real within 1e-8 (relative for
    large values) or within the stencil's double-precision conditioning
    floor (rounding noise is amplified by 1/h^order, which dominates on
    very fine grids); a violation raises :class:`ToleranceError`.  The
    measured imaginary residue is folded into the error estimate, so the
    reported uncertainty covers the rounding floor as well.
    """
    orders = tuple(orders)
    if any(o not in (1, 2, 3, 4) for o in orders):
        raise ValidationError("cumulant orders are limited to 1..4")
    axis = samples.axis_of_mode(mode_index)
    if samples.grid.n_samples[axis] < MIN_GRID_FOR_CUMULANTS:
        raise ValidationError(
            f"cumulant stencil needs at least {MIN_GRID_FOR_CUMULANTS} grid samples"
        )
    offsets, k = samples.cgf_near_origin(mode_index, half_range=2 * STENCIL_HALF)
    h = samples.grid.spacing(axis)
    center = 2 * STENCIL_HALF
    fine = k[:, center - STENCIL_HALF : center + STENCIL_HALF + 1]
    coarse = k[:, ::2]
    # Richardson orders of the 9-point central stencils for n = 1..4
    accuracy = {1: 8, 2: 8, 3: 6, 4: 6}
    kappa = {}
    error = {}
    k_scale = np.maximum(1.0, np.max(np.abs(k), axis=1))
    for order in orders:
        w = _stencil_weights(order)
        d_h = fine @ w / h**order
        d_2h = coarse @ w / (2.0 * h) ** order
        gain = 2.0 ** accuracy[order]
        improved = (gain * d_h - d_2h) / (gain - 1.0)
        est = np.abs(d_h - d_2h) / (gain - 1.0)
        value = (-1j) ** order * improved
        noise_floor = (
            256.0 * np.finfo(float).eps * np.abs(w).sum() * k_scale / h**order
        )
        tol = np.maximum(1e-8 * np.maximum(1.0, np.abs(np.real(value))), noise_floor)
        if np.any(np.abs(np.imag(value)) > tol):
            raise ToleranceError(
                f"order-{order} cumulant has imaginary residue "
                f"{np.max(np.abs(np.imag(value))):.2e}"
            )
        kappa[order] = np.real(value)
        error[order] = np.maximum(est, np.abs(np.imag(value)))
    caveat = None
    if samples.flag == "floquet-asymptotic" and any(o >= 3 for o in orders):
        caveat = ASYMPTOTIC_CAVEAT
    return CumulantResult(
        mode_index=mode_index,
        times=samples.times,
        kappa=kappa,
        error=error,
        caveat=caveat,
    )


def quasiprobabilities(
    samples: GeneratingFunctionSamples, window: int, mode_index: int | None = None
):
    """Integer-shift quasiprobabilities q_m over m in [-window, window].

    Inverse DFT of the generating-function samples along one counting axis
    (other counting fields at zero).  ``mode_index=None`` is allowed only
    for a single-axis grid.  The q_m are real (imaginary residue checked to
    1e-10), sum to 1 within 1e-8, and MAY be negative — that is the point.

    Raises :class:`WindowError` when more than 1e-8 of |q| lies outside the
    requested window (aliasing, or the window is too small).
    """
    if mode_index is None:
        if samples.n_axes != 1:
            raise ValidationError("mode_index required for multi-axis grids")
        mode_index = samples.grid.mode_indices[0]
    n = samples.grid.n_samples[samples.axis_of_mode(mode_index)]
    if window < 0:
        raise ValidationError("window must be nonnegative")
    if n < 2 * window + 2:
        raise WindowError(
            f"grid with {n} samples cannot resolve shifts up to +-{window}"
        )
    line = samples.line(mode_index)
    q_full = np.fft.fft(line, axis=-1) / n
    imag = np.max(np.abs(q_full.imag))
    if imag > QUASIPROB_IMAG_TOL:
        raise ToleranceError(f"quasiprobability imaginary residue {imag:.2e}")
    q_real = q_full.real
    shifts = np.arange(-window, window + 1)
    inside = q_real[:, shifts % n]
    outside_mass = np.sum(np.abs(q_real), axis=-1) - np.sum(np.abs(inside), axis=-1)
    worst = float(np.max(outside_mass))
    if worst > QUASIPROB_MASS_TOL:
        raise WindowError(
            f"{worst:.2e} of |q| lies outside the window +-{window}; "
            "enlarge the window or the counting grid"
        )
    total = np.sum(inside, axis=-1)
    if np.max(np.abs(total - 1.0)) > QUASIPROB_MASS_TOL:
        raise ToleranceError(
            f"quasiprobabilities sum to {total[np.argmax(np.abs(total - 1.0))]:.10f}"
        )
    return shifts, inside


def redistribute(shifts: np.ndarray, q: np.ndarray, n_values: np.ndarray, p0: np.ndarray):
    """Convolve an initial photon-number distribution with quasiprobabilities.

    ``p(n, t) = sum_m q_m(t) p0(n - m)``.  Accepts q of shape (Q,) or
    (T, Q).  Returns (n_out, p) with p matching q's leading shape.  Negative
    output beyond -1e-8 raises :class:`ToleranceError` (reported, never
    clipped): it signals a too-small quasiprobability window or a breakdown
    of the semiclassical assumptions.
    """
    shifts = np.asarray(shifts)
    n_values = np.asarray(n_values)
    q = np.asarray(q, dtype=float)
    single = q.ndim == 1
    q = np.atleast_2d(q)
    p0 = np.asarray(p0, dtype=float)
    if shifts.size != q.shape[-1]:
        raise ValidationError("shifts and q lengths differ")
    if n_values.size != p0.size:
        raise ValidationError("n_values and p0 lengths differ")
    if np.any(np.diff(shifts) != 1) or np.any(np.diff(n_values) != 1):
        raise ValidationError("shifts and n_values must be contiguous integer ranges")
    out = np.stack([np.convolve(p0, qt, mode="full") for qt in q])
    n_out = np.arange(
        n_values[0] + shifts[0], n_values[-1] + shifts[-1] + 1
    )
    target = np.sum(p0) * np.sum(q, axis=-1)
    sums = np.sum(out, axis=-1)
    if np.max(np.abs(sums - target)) > QUASIPROB_MASS_TOL:
        raise ToleranceError("redistributed distribution lost mass")
    worst = float(np.min(out))
    if worst < -NEGATIVITY_TOL:
        raise ToleranceError(
            f"redistributed probability reaches {worst:.2e}; quasiprobability "
            "window too small or semiclassical assumptions violated"
        )
    return n_out, (out[0] if single else out)


@dataclass(frozen=True)
class AsymptoticStatistics:
    """Long-time statistics reconstructed from Floquet data."""

    samples: GeneratingFunctionSamples
    weights: np.ndarray
    mean_change: dict
    variance_change: dict

    @property
    def times(self) -> np.ndarray:
        return self.samples.times


def asymptotic_statistics(
    solution: FloquetSolution,
    derivatives,
    coefficients: np.ndarray,
    times,
) -> AsymptoticStatistics:
    """Asymptotic generating function and low cumulants from Floquet data.

    The generating function is the |c_mu|^2-weighted average of the
    two-branch exponentials built from the continued quasienergy surfaces;
    mean changes are ``-sum_mu |c_mu|^2 E'_mu t`` per counted mode, and
    variance changes ``t^2 Var_{|c|^2}(E')`` — exactly zero for a pure
    Floquet state.

    ``derivatives`` is one :class:`QuasienergyDerivatives` or a sequence of
    them (one per counted mode).
    """
    times = np.asarray(times, dtype=float).ravel()
    coeffs = np.asarray(coefficients, dtype=complex).ravel()
    d = solution.dim
    if coeffs.size != d:
        raise ValidationError("coefficient count does not match the matter dimension")
    weights = np.abs(coeffs) ** 2
    total = float(weights.sum())
    if abs(total - 1.0) > 1e-10:
        raise ValidationError(f"expansion weights sum to {total:.12f}, expected 1")
    energies = np.real(solution.quasienergies)  # (G, d), continued branches
    imag = np.max(np.abs(np.imag(solution.quasienergies)))
    if imag > 1e-8:
        raise ToleranceError(f"quasienergies carry imaginary parts up to {imag:.2e}")
    e0 = energies[0]
    neg = _negation_map(solution.grid.n_samples)
    e_neg = energies[neg]
    tt = times[:, None, None]
    branch_plus = np.exp(1j * (e0[None, None, :] - energies[None, :, :]) * tt)
    branch_minus = np.exp(1j * (e_neg[None, :, :] - e0[None, None, :]) * tt)
    m = 0.5 * np.einsum("m,tgm->tg", weights, branch_plus + branch_minus)
    samples = GeneratingFunctionSamples(
        grid=solution.grid, times=times, values=m, flag="floquet-asymptotic"
    )
    if isinstance(derivatives, QuasienergyDerivatives):
        derivatives = [derivatives]
    mean_change = {}
    variance_change = {}
    for der in derivatives:
        if der.first.size != d:
            raise ValidationError("derivative set does not match the matter dimension")
        mean_first = float(np.dot(weights, der.first))
        mean_sq = float(np.dot(weights, der.first**2))
        mean_change[der.mode_index] = -mean_first * times
        variance_change[der.mode_index] = (mean_sq - mean_first**2) * times**2
    return AsymptoticStatistics(
        samples=samples,
        weights=weights,
        mean_change=mean_change,
        variance_change=variance_change,
    )


def energy_current_residual(
    propset: GeneralizedPropagatorSet, matter_state: MatterState
):
    """Check that photon-energy flow balances the drive's explicit power.

    For single-mode driving: omega * d(kappa_1)/dt must equal minus the
    expectation of the explicit time derivative of the driven Hamiltonian.
    Both sides are evaluated on the interior of a uniform time grid (the
    derivative by a five-point stencil).  Returns (times, lhs, rhs).
    """
    system = propset.system
    if system.n_modes != 1:
        raise ValidationError("energy-current identity applies to single-mode driving")
    if propset.picture != "full":
        raise ValidationError("full-picture propagators required")
    times = propset.times
    if times.size < 5:
        raise ValidationError("need at least five uniformly spaced times")
    dt = np.diff(times)
    if np.max(np.abs(dt - dt[0])) > 1e-9 * max(1.0, abs(float(dt[0]))):
        raise ValidationError("times must be uniformly spaced")
    dt = float(dt[0])
    omega = system.modes[0].frequency
    samples = dynamical_mgf(propset, matter_state)
    kappa1 = cumulants(samples, samples.grid.mode_indices[0], orders=(1,))[1]
    # five-point first derivative on the interior
    dk = (
        kappa1[:-4] - 8.0 * kappa1[1:-3] + 8.0 * kappa1[3:-1] - kappa1[4:]
    ) / (12.0 * dt)
    lhs = omega * dk
    inner = times[2:-2]
    psi = matter_state.amplitudes
    rhs = np.empty(inner.size)
    for j, t in enumerate(inner):
        u = propset.at_time(t)[0]  # chi = 0 propagator
        state = u @ psi
        hdot = system.hamiltonian_time_derivative(t)
        rhs[j] = -float(np.real(np.vdot(state, hdot @ state)))
    return inner, lhs, rhs


def distribution_cumulants(n_values: np.ndarray, p: np.ndarray) -> dict:
    """First four cumulants of a (quasi)distribution over integers.

    The moment route: valid for signed q as well as for probabilities,
    which makes it the independent cross-check for the stencil route.
    """
    n = np.asarray(n_values, dtype=float)
    p = np.asarray(p, dtype=float)
    m1 = float(np.dot(p, n))
    m2 = float(np.dot(p, n**2))
    m3 = float(np.dot(p, n**3))
    m4 = float(np.dot(p, n**4))
    k1 = m1
    k2 = m2 - m1**2
    k3 = m3 - 3.0 * m2 * m1 + 2.0 * m1**3
    k4 = m4 - 4.0 * m3 * m1 - 3.0 * m2**2 + 12.0 * m2 * m1**2 - 6.0 * m1**4
    return {1: k1, 2: k2, 3: k3, 4: k4}
