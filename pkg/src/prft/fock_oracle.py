"""Exact quantum dynamics in truncated Fock space.

Ground truth for the semiclassical counting-field predictions: the quantum
Rabi model on a full (spin x photon-number) grid, and the two-mode
Jaynes-Cummings model in its excitation-number block decomposition.  The
second mode of a block never needs its own truncation — within a block the
occupation ``n2 = K - s - n1`` is fixed by the conserved excitation number
``K``, so only mode 1 carries a window.

Conventions match :mod:`prft.core`: matter basis index 0 is spin-up, the
raising/lowering operators carry matrix entries 2, and photon-number
amplitude phases are ``arg a_n = phase * n``.  The spin-up flag ``s`` used
for block bookkeeping maps to matter index ``0 <-> s = 1``.

All evolutions factor out a global ``exp(-i omega K t)`` (or ``exp(-i omega
nbar t)`` for the Rabi grid) photon-energy phase per block before
exponentiating and reattach it afterwards, so stored amplitudes are the true
Schroedinger-picture ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse
from scipy.sparse.linalg import expm_multiply

from .core import (
    LeakageError,
    MatterState,
    PhotonicInitialState,
    ValidationError,
    WindowError,
    expm2,
)

__all__ = [
    "FockWindow",
    "GridFockEnsemble",
    "BlockFockEnsemble",
    "suggested_fock_window",
    "build_initial_fock_state",
    "evolve_rabi_fock",
    "evolve_two_mode_jc_fock",
    "jc_two_level_block",
    "photon_marginal",
    "distribution_cumulants",
    "reduced_matter_density",
    "purity",
    "spin_expectations",
]

MASS_TOL = 1e-12
BLOCK_DROP_TOL = 1e-12
LEAKAGE_TOL = 1e-8
EXCITATION_TOL = 1e-9


@dataclass(frozen=True)
class FockWindow:
    """Retained photon numbers [center - half_width, center + half_width]."""

    center: int
    half_width: int

    def __post_init__(self):
        if self.half_width < 0:
            raise ValidationError("half_width must be >= 0")
        if self.center - self.half_width < 0:
            raise ValidationError(
                f"window [{self.lo}, {self.hi}] reaches below n = 0"
            )

    @property
    def lo(self) -> int:
        return self.center - self.half_width

    @property
    def hi(self) -> int:
        return self.center + self.half_width

    @property
    def size(self) -> int:
        return 2 * self.half_width + 1

    def indices(self) -> np.ndarray:
        return np.arange(self.lo, self.hi + 1)


def suggested_fock_window(
    spec: PhotonicInitialState, drift: float = 0.0, minimum: int = 40
) -> FockWindow:
    """Window sized 8 sigma (at least ``minimum``) plus expected mean drift."""
    w = max(int(math.ceil(8.0 * spec.sigma)), minimum) + int(math.ceil(abs(drift)))
    return FockWindow(center=int(round(spec.mean)), half_width=w)


def _check_window_vs_spec(window: FockWindow, spec: PhotonicInitialState, name: str):
    if window.half_width < 8.0 * spec.sigma - 1e-9:
        raise ValidationError(
            f"{name}: half-width {window.half_width} is below 8 sigma = {8 * spec.sigma:.1f}"
        )


# ---------------------------------------------------------------------------
# ensembles
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GridFockEnsemble:
    """Single-mode state on the full (matter index, photon number) grid.

    ``amplitudes[i, k]`` with matter index i (0 = spin-up) and photon number
    ``window.lo + k``.
    """

    window: FockWindow
    amplitudes: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (2, self.window.size):
            raise ValidationError(
                f"amplitudes shape {amps.shape} does not match window size {self.window.size}"
            )
        object.__setattr__(self, "amplitudes", amps)
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > 1e-10:
            raise ValidationError(f"ensemble norm is {norm:.12g}, expected 1")

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


@dataclass(frozen=True)
class BlockFockEnsemble:
    """Two-mode JC state in excitation-number blocks.

    ``blocks[K]`` has shape (2, window1.size): rows are the spin-up flag
    ``s`` (s = 1 means matter spin-up), columns are mode-1 occupations over
    ``window1``; the mode-2 occupation is ``n2 = K - s - n1``.  Slots with
    ``n2 < 0`` are unphysical padding and must stay (numerically) empty.
    """

    window1: FockWindow
    blocks: dict
    time: float = 0.0
    photon_means: tuple = (0.0, 0.0)
    _skip_checks: bool = field(default=False, repr=False)

    def __post_init__(self):
        if not self.blocks:
            raise ValidationError("at least one excitation block required")
        w = self.window1.size
        for k, b in self.blocks.items():
            if b.shape != (2, w):
                raise ValidationError(
                    f"block {k} has shape {b.shape}, expected (2, {w})"
                )
        if self._skip_checks:
            return
        norm = self.norm()
        if abs(norm - 1.0) > 1e-10:
            raise ValidationError(f"ensemble norm is {norm:.12g}, expected 1")

    def norm(self) -> float:
        return math.sqrt(sum(float(np.sum(np.abs(b) ** 2)) for b in self.blocks.values()))

    def block_norms(self) -> dict:
        return {k: float(np.sum(np.abs(b) ** 2)) for k, b in self.blocks.items()}


# ---------------------------------------------------------------------------
# initial states
# ---------------------------------------------------------------------------

def build_initial_fock_state(
    matter_state: MatterState,
    photonic_specs,
    window1: FockWindow,
    k_pad_sigmas: float = 8.0,
) -> GridFockEnsemble | BlockFockEnsemble:
    """Product of a matter state and Gaussian photon-number profiles.

    One photonic spec gives a :class:`GridFockEnsemble`; two give a
    :class:`BlockFockEnsemble` whose excitation range covers ``k_pad_sigmas``
    standard deviations of the total-photon-number distribution (blocks with
    negligible weight are dropped).

    Raises
    ------
    WindowError
        If more than 1e-12 of the probability mass falls outside the
        retained window / blocks.
    """
    specs = list(photonic_specs)
    if matter_state.dim != 2:
        raise ValidationError("oracle ensembles are two-level-matter only")
    if len(specs) == 1:
        spec = specs[0]
        _check_window_vs_spec(window1, spec, "mode 1")
        a = spec.amplitudes(window1.indices())
        # amplitudes() renormalizes, so estimate the clipped tail directly
        tail = _gaussian_tail_mass(spec, window1)
        if tail > MASS_TOL:
            raise WindowError(
                f"window [{window1.lo}, {window1.hi}] clips {tail:.2e} of the mass"
            )
        amps = np.outer(matter_state.amplitudes, a)
        amps /= np.linalg.norm(amps)
        return GridFockEnsemble(window=window1, amplitudes=amps, time=0.0)
    if len(specs) != 2:
        raise ValidationError("one or two photonic specs supported")
    spec1, spec2 = specs
    _check_window_vs_spec(window1, spec1, "mode 1")
    tail1 = _gaussian_tail_mass(spec1, window1)
    if tail1 > MASS_TOL:
        raise WindowError(
            f"mode-1 window [{window1.lo}, {window1.hi}] clips {tail1:.2e} of the mass"
        )
    n1 = window1.indices()
    a1 = spec1.amplitudes(n1)
    sigma_k = math.sqrt(spec1.variance + spec2.variance)
    k_center = spec1.mean + spec2.mean
    k_lo = int(math.floor(k_center - k_pad_sigmas * sigma_k))
    k_hi = int(math.ceil(k_center + k_pad_sigmas * sigma_k)) + 1
    b = matter_state.amplitudes  # index 0 = spin-up = s = 1
    b_by_s = {1: b[0], 0: b[1]}
    blocks = {}
    total = 0.0
    for k in range(k_lo, k_hi + 1):
        blk = np.zeros((2, window1.size), dtype=complex)
        for s in (0, 1):
            if abs(b_by_s[s]) == 0.0:
                continue
            n2 = k - s - n1
            valid = n2 >= 0
            if not np.any(valid):
                continue
            a2 = np.zeros(window1.size, dtype=complex)
            a2[valid] = _gaussian_amplitudes(spec2, n2[valid])
            blk[s] = b_by_s[s] * a1 * a2
        w = float(np.sum(np.abs(blk) ** 2))
        if w > 0.0:
            blocks[k] = blk
            total += w
    if 1.0 - total > MASS_TOL:
        raise WindowError(
            f"retained excitation blocks carry {total:.15f} of the mass "
            f"(clipped {1.0 - total:.2e} > {MASS_TOL:.0e})"
        )
    # drop negligible blocks, then renormalize
    keep = {k: blk for k, blk in blocks.items() if np.sum(np.abs(blk) ** 2) > BLOCK_DROP_TOL * total}
    norm = math.sqrt(sum(float(np.sum(np.abs(blk) ** 2)) for blk in keep.values()))
    keep = {k: blk / norm for k, blk in sorted(keep.items())}
    return BlockFockEnsemble(
        window1=window1,
        blocks=keep,
        time=0.0,
        photon_means=(spec1.mean, spec2.mean),
    )


def _gaussian_amplitudes(spec: PhotonicInitialState, n: np.ndarray) -> np.ndarray:
    """Unnormalized Gaussian amplitude profile with linear phases."""
    n = np.asarray(n, dtype=float)
    a = (2.0 * math.pi * spec.variance) ** (-0.25) * np.exp(
        -((n - spec.mean) ** 2) / (4.0 * spec.variance)
    )
    return a * np.exp(1j * spec.phase * n)


def _gaussian_tail_mass(spec: PhotonicInitialState, window: FockWindow) -> float:
    """Probability mass of the (continuous) Gaussian outside the window."""
    z_lo = (window.lo - 0.5 - spec.mean) / spec.sigma
    z_hi = (window.hi + 0.5 - spec.mean) / spec.sigma
    return 0.5 * math.erfc(z_hi / math.sqrt(2.0)) + 0.5 * math.erfc(-z_lo / math.sqrt(2.0))


# ---------------------------------------------------------------------------
# evolutions
# ---------------------------------------------------------------------------

def _leakage_check_grid(amps: np.ndarray, window: FockWindow, t: float):
    lo_mass = float(np.sum(np.abs(amps[:, 0]) ** 2))
    hi_mass = float(np.sum(np.abs(amps[:, -1]) ** 2))
    if lo_mass > LEAKAGE_TOL:
        raise LeakageError(
            f"probability {lo_mass:.2e} at the lower window edge n = {window.lo} (t = {t})"
        )
    if hi_mass > LEAKAGE_TOL:
        raise LeakageError(
            f"probability {hi_mass:.2e} at the upper window edge n = {window.hi} (t = {t})"
        )


def evolve_rabi_fock(
    h_z: float,
    omega: float,
    matter_state: MatterState,
    photonic_spec: PhotonicInitialState,
    window: FockWindow,
    times,
    bare_coupling: float | None = None,
    coupling: float | None = None,
) -> list:
    """Exact quantum Rabi dynamics on the truncated (spin, n) grid.

    ``H = (h_z/2) sigma_z + omega a^dag a + g_bare sigma_x (a + a^dag)``.
    Give either ``bare_coupling`` (g_bare) or the effective ``coupling``
    g = g_bare * sqrt(mean photon number).  Returns one
    :class:`GridFockEnsemble` per requested time; edge leakage beyond 1e-8
    raises :class:`LeakageError` naming the edge.
    """
    if (bare_coupling is None) == (coupling is None):
        raise ValidationError("give exactly one of bare_coupling or coupling")
    if bare_coupling is None:
        bare_coupling = coupling / math.sqrt(photonic_spec.mean)
    times = np.asarray(times, dtype=float).ravel()
    if times.size == 0 or np.any(np.diff(times) <= 0) or times[0] < 0:
        raise ValidationError("times must be increasing and nonnegative")
    initial = build_initial_fock_state(matter_state, [photonic_spec], window)
    n = window.indices()
    size = window.size
    # order: matter-major, [(up, n...), (down, n...)]
    diag = np.concatenate(
        [0.5 * h_z + omega * (n - window.center), -0.5 * h_z + omega * (n - window.center)]
    )
    lad = bare_coupling * np.sqrt(n[:-1] + 1.0)  # <s', n+1 | sigma_x a^dag | s, n>
    rows, cols, vals = [], [], []
    for i in range(size - 1):
        # sigma_x flips the matter index; a/a^dag shift n by -+1
        rows += [i + 1 + size, i, i + 1, i + size]
        cols += [i, i + 1 + size, i + size, i + 1]
        vals += [lad[i], lad[i], lad[i], lad[i]]
    ham = scipy.sparse.csr_matrix(
        (np.array(vals, dtype=float), (np.array(rows), np.array(cols))),
        shape=(2 * size, 2 * size),
    )
    ham = ham + scipy.sparse.diags(diag)
    psi = initial.amplitudes.reshape(-1).copy()
    out = []
    t_prev = 0.0
    # global phase exp(-i omega center t) was factored out of the diagonal
    for t in times:
        dt = t - t_prev
        if dt > 0:
            psi = expm_multiply(-1j * dt * ham, psi)
        t_prev = t
        amps = (np.exp(-1j * omega * window.center * t) * psi).reshape(2, size)
        _leakage_check_grid(amps, window, t)
        nrm = np.linalg.norm(amps)
        if abs(nrm - 1.0) > 1e-9:
            raise ValidationError(f"norm drifted to {nrm:.12g} at t = {t}")
        out.append(GridFockEnsemble(window=window, amplitudes=amps / nrm, time=float(t)))
    return out


def _block_hamiltonian_exact(
    h_z: float, omega: float, g1: float, g2: float, k: int, window1: FockWindow
) -> scipy.sparse.csr_matrix:
    """Block Hamiltonian with exact sqrt(n) elements, common omega*K removed.

    Layout: index = s * size + (n1 - lo).
    """
    size = window1.size
    n1 = window1.indices()
    diag = np.concatenate([
        np.full(size, -0.5 * h_z),          # s = 0
        np.full(size, +0.5 * h_z - omega),  # s = 1
    ])
    rows, cols, vals = [], [], []
    # mode 1: (s=0, n1) <-> (s=1, n1 - 1), element 2 g1 sqrt(n1)
    for i in range(1, size):
        el = 2.0 * g1 * math.sqrt(n1[i])
        rows += [size + i - 1, i]
        cols += [i, size + i - 1]
        vals += [el, el]
    # mode 2: (s=0, n1) <-> (s=1, n1), element 2 g2 sqrt(n2 of the s=0 ket)
    n2_ket = k - n1
    for i in range(size):
        if n2_ket[i] <= 0:
            continue
        el = 2.0 * g2 * math.sqrt(n2_ket[i])
        rows += [size + i, i]
        cols += [i, size + i]
        vals += [el, el]
    ham = scipy.sparse.csr_matrix(
        (np.array(vals, dtype=float), (np.array(rows), np.array(cols))),
        shape=(2 * size, 2 * size),
    )
    return ham + scipy.sparse.diags(diag)


def _shared_hamiltonian_semiclassical(
    h_z: float, omega: float, g1_eff: float, g2_eff: float, window1: FockWindow
) -> np.ndarray:
    """Excitation-independent block Hamiltonian (sqrt(n) -> alpha), dense."""
    size = window1.size
    ham = np.zeros((2 * size, 2 * size))
    ham[np.arange(size), np.arange(size)] = -0.5 * h_z
    ham[size + np.arange(size), size + np.arange(size)] = 0.5 * h_z - omega
    for i in range(1, size):
        ham[size + i - 1, i] = ham[i, size + i - 1] = 2.0 * g1_eff
    for i in range(size):
        ham[size + i, i] = ham[i, size + i] = 2.0 * g2_eff
    return ham


def evolve_two_mode_jc_fock(
    h_z: float,
    omega: float,
    g1: float,
    g2: float,
    ensemble: BlockFockEnsemble,
    times,
    semiclassical_elements: bool = True,
    alpha1: float | None = None,
    alpha2: float | None = None,
) -> list:
    """Evolve a block ensemble under the two-mode JC Hamiltonian.

    ``g1, g2`` are the bare (single-photon) couplings.  With
    ``semiclassical_elements`` the ladder factors sqrt(n_k) are replaced by
    ``alpha_k`` (default: sqrt of the initial means), which makes the block
    Hamiltonian excitation-independent — it is diagonalized once and reused
    for every block.  Without it each block gets its exact sparse
    Hamiltonian.

    Returns one :class:`BlockFockEnsemble` per time.  Excitation-block norms
    are conserved by construction and checked to 1e-9; mode-1 window-edge
    probability beyond 1e-8 raises :class:`LeakageError`.
    """
    times = np.asarray(times, dtype=float).ravel()
    if times.size == 0 or np.any(np.diff(times) <= 0) or times[0] < 0:
        raise ValidationError("times must be increasing and nonnegative")
    window1 = ensemble.window1
    size = window1.size
    keys = sorted(ensemble.blocks.keys())
    norms0 = ensemble.block_norms()

    out_blocks = {t: {} for t in times}
    if semiclassical_elements:
        if alpha1 is None:
            alpha1 = math.sqrt(ensemble.photon_means[0])
        if alpha2 is None:
            alpha2 = math.sqrt(ensemble.photon_means[1])
        ham = _shared_hamiltonian_semiclassical(h_z, omega, g1 * alpha1, g2 * alpha2, window1)
        evals, vecs = np.linalg.eigh(ham)
        v0 = np.stack([ensemble.blocks[k].reshape(-1) for k in keys], axis=1)
        w0 = vecs.T @ v0  # (2*size, n_blocks)
        karr = np.array(keys, dtype=float)
        for t in times:
            phases = np.exp(-1j * evals * t)
            vt = vecs @ (phases[:, None] * w0)
            vt = vt * np.exp(-1j * omega * karr * t)[None, :]
            for j, k in enumerate(keys):
                out_blocks[t][k] = vt[:, j].reshape(2, size)
    else:
        for k in keys:
            ham = _block_hamiltonian_exact(h_z, omega, g1, g2, k, window1)
            psi = ensemble.blocks[k].reshape(-1).copy()
            t_prev = 0.0
            for t in times:
                dt = t - t_prev
                if dt > 0:
                    psi = expm_multiply(-1j * dt * ham, psi)
                t_prev = t
                out_blocks[t][k] = (np.exp(-1j * omega * k * t) * psi).reshape(2, size)

    results = []
    for t in times:
        blocks = {k: out_blocks[t][k] for k in keys}
        for k in keys:
            drift = abs(float(np.sum(np.abs(blocks[k]) ** 2)) - norms0[k])
            if drift > EXCITATION_TOL:
                raise ValidationError(
                    f"excitation block {k} norm drifted by {drift:.2e} at t = {t}"
                )
        edge = 0.0
        for k in keys:
            edge = max(
                edge,
                float(np.sum(np.abs(blocks[k][:, 0]) ** 2)),
                float(np.sum(np.abs(blocks[k][:, -1]) ** 2)),
            )
        if edge > LEAKAGE_TOL:
            raise LeakageError(
                f"probability {edge:.2e} at a mode-1 window edge "
                f"(n1 = {window1.lo} or {window1.hi}) at t = {t}"
            )
        results.append(
            BlockFockEnsemble(
                window1=window1,
                blocks=blocks,
                time=float(t),
                photon_means=ensemble.photon_means,
                _skip_checks=True,
            )
        )
    return results


def jc_two_level_block(h_z: float, omega: float, g_bare: float, n: int, times) -> np.ndarray:
    """Exact amplitudes (c_up, c_down) for the JC pair {|up, n>, |down, n+1>}.

    The block Hamiltonian is ``[[h_z/2 + omega n, 2 g sqrt(n+1)],
    [2 g sqrt(n+1), -h_z/2 + omega (n+1)]]`` and the initial state |up, n>.
    Returns shape (len(times), 2).
    """
    times = np.asarray(times, dtype=float).ravel()
    el = 2.0 * g_bare * math.sqrt(n + 1.0)
    ham = np.array(
        [[0.5 * h_z + omega * n, el], [el, -0.5 * h_z + omega * (n + 1.0)]],
        dtype=complex,
    )
    mats = expm2(-1j * times[:, None, None] * ham[None, :, :])
    return mats[:, :, 0]


# ---------------------------------------------------------------------------
# observables
# ---------------------------------------------------------------------------

def photon_marginal(ensemble, mode: int = 1):
    """Photon-number distribution of one mode: ``(n_values, p)``."""
    if isinstance(ensemble, GridFockEnsemble):
        if mode != 1:
            raise ValidationError("grid ensembles hold a single mode")
        p = np.sum(np.abs(ensemble.amplitudes) ** 2, axis=0)
        return ensemble.window.indices(), p
    if not isinstance(ensemble, BlockFockEnsemble):
        raise ValidationError(f"unsupported ensemble type {type(ensemble)!r}")
    w = ensemble.window1
    if mode == 1:
        p = np.zeros(w.size)
        for blk in ensemble.blocks.values():
            p += np.sum(np.abs(blk) ** 2, axis=0)
        return w.indices(), p
    if mode != 2:
        raise ValidationError("mode must be 1 or 2")
    keys = sorted(ensemble.blocks.keys())
    n2_min = min(keys[0] - 1 - w.hi, 0)
    n2_max = keys[-1] - w.lo
    p = np.zeros(n2_max - n2_min + 1)
    for k, blk in ensemble.blocks.items():
        for s in (0, 1):
            # n2 = k - s - n1 decreases as n1 increases
            lo_idx = (k - s - w.hi) - n2_min
            p[lo_idx : lo_idx + w.size] += np.abs(blk[s, ::-1]) ** 2
    n_values = np.arange(n2_min, n2_max + 1)
    keep = n_values >= 0
    return n_values[keep], p[keep]


def distribution_cumulants(n_values: np.ndarray, p: np.ndarray) -> dict:
    """First four cumulants of a distribution over integers."""
    n = np.asarray(n_values, dtype=float)
    p = np.asarray(p, dtype=float)
    total = p.sum()
    mean = float(np.dot(p, n) / total)
    c = n - mean
    mu2 = float(np.dot(p, c**2) / total)
    mu3 = float(np.dot(p, c**3) / total)
    mu4 = float(np.dot(p, c**4) / total)
    return {1: mean, 2: mu2, 3: mu3, 4: mu4 - 3.0 * mu2**2}


def reduced_matter_density(ensemble) -> np.ndarray:
    """Matter density matrix (index 0 = spin-up), trace-normalized input."""
    if isinstance(ensemble, GridFockEnsemble):
        a = ensemble.amplitudes
        return a @ a.conj().T
    if not isinstance(ensemble, BlockFockEnsemble):
        raise ValidationError(f"unsupported ensemble type {type(ensemble)!r}")
    rho_uu = 0.0
    rho_dd = 0.0
    rho_ud = 0.0 + 0.0j
    keys = sorted(ensemble.blocks.keys())
    blocks = ensemble.blocks
    for k in keys:
        blk = blocks[k]
        rho_uu += float(np.sum(np.abs(blk[1]) ** 2))
        rho_dd += float(np.sum(np.abs(blk[0]) ** 2))
        prev = blocks.get(k - 1)
        if prev is not None:
            # (s=1, n1) in block k and (s=0, n1) in block k-1 share (n1, n2)
            rho_ud += complex(np.dot(blk[1], prev[0].conj()))
    return np.array([[rho_uu, rho_ud], [np.conj(rho_ud), rho_dd]], dtype=complex)


def purity(ensemble) -> float:
    """Tr(rho_matter^2), in [1/2, 1] for two-level matter."""
    rho = reduced_matter_density(ensemble)
    return float(np.real(np.trace(rho @ rho)))


def spin_expectations(ensemble) -> dict:
    """<sigma_x>, <sigma_y>, <sigma_z> of the matter state."""
    rho = reduced_matter_density(ensemble)
    return {
        "x": float(np.real(rho[0, 1] + rho[1, 0])),
        "y": float(np.real(1j * (rho[0, 1] - rho[1, 0]))),
        "z": float(np.real(rho[0, 0] - rho[1, 1])),
    }
