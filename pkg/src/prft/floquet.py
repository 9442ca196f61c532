"""Floquet analysis of the counting-field-dressed propagator.

One-period propagators ``U(tau, chi)`` are eigendecomposed per counting-field
grid point with a general (non-unitary-safe) solver, quasienergies are read
off the eigenvalue phases, and branches are continued smoothly across the
grid by maximal-overlap matching of the eigenvectors.  Counting-phase
derivatives of the quasienergies — the quantities that drive mean photon
flow — are computed by Richardson-extrapolated central differences on a
dedicated five-point stencil.

Branch bookkeeping: ``quasienergies`` on a :class:`FloquetSolution` are the
*continued* values (continuous in chi, anchored at chi = 0); use
:meth:`FloquetSolution.folded` for values mapped into the principal window
(-omega_bar/2, omega_bar/2].  A closed 2 pi loop along a grid axis may end
an integer number of omega_bar away from where it started; that winding is
recorded, never treated as an error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.optimize

from .core import (
    CountingGrid,
    DegenerateQuasienergyError,
    DrivenSystem,
    MatterState,
    ToleranceError,
    ValidationError,
)
from .semiclassical import (
    GeneralizedPropagatorSet,
    IntegratorSpec,
    _propagate_chi_vectors,
    propagate_generalized,
)

__all__ = [
    "FloquetSolution",
    "QuasienergyDerivatives",
    "floquet_decompose",
    "quasienergy_phase_derivatives",
    "expand_in_floquet_basis",
]

DEGENERACY_TOL = 1e-10
ORIGIN_REALITY_TOL = 1e-10
ORTHONORMALITY_TOL = 1e-10
GREEDY_AMBIGUITY = 0.5  # squared overlap below this sends matching to optimal assignment


@dataclass(frozen=True)
class FloquetSolution:
    """Eigendecomposition of the one-period propagator across a counting grid.

    ``quasienergies[j, mu]`` is the branch-continued (unfolded) quasienergy
    of state ``mu`` at flat grid point ``j``; ``modes[j, :, mu]`` the matching
    eigenvector.  ``permutations[j]`` records how the raw eigensolver output
    at point ``j`` was reordered to follow the branches of its grid
    neighbour.  ``windings[a, mu]`` counts the multiples of
    ``2 pi / period`` picked up along the closed 2 pi loop of grid axis
    ``a``; ``loop_permutations[a]`` the state relabeling after that loop.
    """

    grid: CountingGrid
    period: float
    quasienergies: np.ndarray
    modes: np.ndarray
    permutations: np.ndarray
    windings: np.ndarray
    loop_permutations: np.ndarray

    @property
    def dim(self) -> int:
        return self.modes.shape[1]

    @property
    def frequency(self) -> float:
        """Branch-window width omega_bar = 2 pi / period."""
        return 2.0 * np.pi / self.period

    def folded(self) -> np.ndarray:
        """Real parts mapped into the principal window (-w/2, w/2]."""
        w = self.frequency
        e = np.real(self.quasienergies)
        return e - w * np.ceil(e / w - 0.5)

    def origin_states(self) -> np.ndarray:
        """Eigenvectors at chi = 0 (columns), orthonormal for unitary U."""
        return self.modes[0]

    def origin_energies(self) -> np.ndarray:
        return np.real(self.quasienergies[0])


@dataclass(frozen=True)
class QuasienergyDerivatives:
    """Counting-phase derivatives dE_mu / d chi_k at zero counting field.

    The physical drive phases stay inside the system; the derivative is
    taken in the counting field chi_k of ``mode_index``.  ``first`` (and
    ``second`` when requested) come with Richardson error estimates.
    """

    mode_index: int
    delta: float
    energies: np.ndarray
    states: np.ndarray
    first: np.ndarray
    first_error: np.ndarray
    second: np.ndarray | None = None
    second_error: np.ndarray | None = None

    def __post_init__(self):
        scale = np.maximum(np.abs(self.energies), 0.0)
        tol = np.maximum(1e-6 * scale, 1e-10)
        if np.any(self.first_error > tol):
            raise ToleranceError(
                f"first-derivative error estimate {self.first_error.max():.2e} "
                f"exceeds {tol.min():.2e}"
            )
        if self.second_error is not None and np.any(self.second_error > tol):
            raise ToleranceError(
                f"second-derivative error estimate {self.second_error.max():.2e} "
                f"exceeds {tol.min():.2e}"
            )


def _match_columns(reference: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    """Permutation p with vectors[:, p[mu]] continuing reference[:, mu].

    Greedy maximal |overlap| assignment with an optimal-assignment fallback
    when the greedy choice is ambiguous.
    """
    weight = np.abs(reference.conj().T @ vectors) ** 2  # [mu_ref, mu_new]
    d = weight.shape[0]
    perm = np.full(d, -1)
    work = weight.copy()
    ok = True
    for _ in range(d):
        i, j = np.unravel_index(np.argmax(work), work.shape)
        if work[i, j] < GREEDY_AMBIGUITY:
            ok = False
            break
        perm[i] = j
        work[i, :] = -1.0
        work[:, j] = -1.0
    if not ok or -1 in perm:
        rows, cols = scipy.optimize.linear_sum_assignment(-weight)
        perm = np.empty(d, dtype=int)
        perm[rows] = cols
    return perm


def _parent_flat_index(flat: int, shape: tuple) -> int:
    """Grid point one index step closer to the origin (last nonzero axis)."""
    idx = list(np.unravel_index(flat, shape))
    for a in range(len(shape) - 1, -1, -1):
        if idx[a] > 0:
            idx[a] -= 1
            return int(np.ravel_multi_index(idx, shape))
    raise ValueError("origin has no parent")


def _check_degenerate(evals: np.ndarray, tau: float, chi: np.ndarray):
    """Raise if two propagator eigenvalues collide (quasienergy degeneracy)."""
    d = evals.shape[0]
    for i in range(d):
        for j in range(i + 1, d):
            # |d lambda| ~ tau |dE| on the unit circle
            if abs(evals[i] - evals[j]) < DEGENERACY_TOL * tau:
                raise DegenerateQuasienergyError(
                    f"quasienergy branches {i} and {j} collide at "
                    f"chi = {tuple(np.atleast_1d(chi))}",
                    pair=(i, j),
                    chi=tuple(np.atleast_1d(chi)),
                )


def floquet_decompose(
    propset: GeneralizedPropagatorSet, period: float | None = None
) -> FloquetSolution:
    """Decompose the one-period propagator over the counting grid.

    Pre: the propagator set contains ``t = period`` (default: the system's
    fundamental period).  Quasienergies are ``i log(lambda) / period``,
    branch-continued from the origin outward along the grid; eigenvectors
    are column-matched between neighbouring grid points by maximal overlap.

    Raises :class:`DegenerateQuasienergyError` when two quasienergies
    collide within 1e-10 at any grid point (the caller should perturb the
    grid), and :class:`ToleranceError` when the grid is too coarse to
    continue branches (adjacent jump above a quarter window).
    """
    system = propset.system
    tau = system.period if period is None else float(period)
    u_tau = propset.at_time(tau)
    grid = propset.grid
    n_axes = len(grid.mode_indices)
    shape = tuple(grid.n_samples)
    total = grid.size
    d = propset.dim
    omega_bar = 2.0 * np.pi / tau
    chis = grid.chi_vectors(system.n_modes)

    evals, evecs = np.linalg.eig(u_tau)  # batched over the flat grid
    for j in range(total):
        _check_degenerate(evals[j], tau, chis[j][list(grid.mode_indices)])

    # origin: quasienergies real (unitary U), states orthonormal
    lam0 = evals[0]
    if np.max(np.abs(np.abs(lam0) - 1.0)) > ORIGIN_REALITY_TOL:
        raise ToleranceError("propagator at zero counting field is not unitary")
    gram = evecs[0].conj().T @ evecs[0]
    if np.max(np.abs(gram - np.eye(d))) > ORTHONORMALITY_TOL:
        raise ToleranceError("eigenvectors at zero counting field are not orthonormal")

    energies = np.empty((total, d), dtype=complex)
    modes = np.empty((total, d, d), dtype=complex)
    perms = np.empty((total, d), dtype=int)
    ordered_evals = np.empty((total, d), dtype=complex)

    energies[0] = -np.angle(lam0) / tau + 1j * (np.log(np.abs(lam0)) / tau)
    modes[0] = evecs[0]
    perms[0] = np.arange(d)
    ordered_evals[0] = lam0

    for flat in range(1, total):
        parent = _parent_flat_index(flat, shape)
        perm = _match_columns(modes[parent], evecs[flat])
        perms[flat] = perm
        lam = evals[flat][perm]
        ordered_evals[flat] = lam
        modes[flat] = evecs[flat][:, perm]
        rel = lam * np.conj(ordered_evals[parent])
        jump = -np.angle(rel) / tau
        if np.max(np.abs(jump)) > omega_bar / 4.0:
            raise ToleranceError(
                "counting grid too coarse for branch continuation "
                f"(quasienergy jump {np.max(np.abs(jump)):.3e} > {omega_bar / 4:.3e})"
            )
        energies[flat] = np.real(energies[parent]) + jump + 1j * (np.log(np.abs(lam)) / tau)

    # closed-loop winding per axis: one more matching step back to the origin
    windings = np.zeros((n_axes, d), dtype=int)
    loop_perms = np.zeros((n_axes, d), dtype=int)
    for a in range(n_axes):
        idx = [0] * n_axes
        idx[a] = grid.n_samples[a] - 1
        last = int(np.ravel_multi_index(idx, shape))
        perm = _match_columns(modes[last], modes[0])
        closing = -np.angle(ordered_evals[0][perm] * np.conj(ordered_evals[last])) / tau
        loop_end = np.real(energies[last]) + closing
        windings[a] = np.round((loop_end - np.real(energies[0][perm])) / omega_bar).astype(int)
        loop_perms[a] = perm

    return FloquetSolution(
        grid=grid,
        period=tau,
        quasienergies=energies,
        modes=modes,
        permutations=perms,
        windings=windings,
        loop_permutations=loop_perms,
    )


def _stencil_energies(
    system: DrivenSystem,
    mode_index: int,
    delta: float,
    integrator: IntegratorSpec | None,
    threads: int | None,
):
    """Quasienergies at chi_k in {0, +-delta/2, +-delta}, branch-matched."""
    tau = system.period
    offsets = np.array([0.0, 0.5 * delta, -0.5 * delta, delta, -delta])
    chis = np.zeros((offsets.size, system.n_modes))
    chis[:, mode_index] = offsets
    values = _propagate_chi_vectors(
        system, chis, np.array([0.0, tau]), integrator=integrator, threads=threads
    )
    u_tau = values[-1]
    evals, evecs = np.linalg.eig(u_tau)
    for j in range(offsets.size):
        _check_degenerate(evals[j], tau, chis[j])
    lam0 = evals[0]
    if np.max(np.abs(np.abs(lam0) - 1.0)) > ORIGIN_REALITY_TOL:
        raise ToleranceError("propagator at zero counting field is not unitary")
    e0 = -np.angle(lam0) / tau
    energies = np.empty((offsets.size, len(lam0)))
    energies[0] = e0
    for j in range(1, offsets.size):
        perm = _match_columns(evecs[0], evecs[j])
        rel = evals[j][perm] * np.conj(lam0)
        energies[j] = e0 - np.angle(rel) / tau
    return offsets, energies, e0, evecs[0]


def quasienergy_phase_derivatives(
    system: DrivenSystem,
    mode_index: int,
    order: int = 2,
    delta: float = 1e-3,
    integrator: IntegratorSpec | None = None,
    threads: int | None = None,
) -> QuasienergyDerivatives:
    """Richardson-extrapolated dE/d chi_k (and optionally d^2 E/d chi_k^2).

    Central differences on chi_k in {0, +-delta/2, +-delta} around zero
    counting field, one Richardson halving, branch-consistent via
    eigenvector matching to the chi = 0 labels.
    """
    if order not in (1, 2):
        raise ValidationError("order must be 1 or 2")
    if not 0 <= mode_index < system.n_modes:
        raise ValidationError(f"mode_index {mode_index} out of range")
    if delta <= 0:
        raise ValidationError("delta must be positive")
    _, energies, e0, states = _stencil_energies(system, mode_index, delta, integrator, threads)
    e_ph, e_mh = energies[3], energies[4]  # +-delta
    e_ph2, e_mh2 = energies[1], energies[2]  # +-delta/2
    d1_h = (e_ph - e_mh) / (2.0 * delta)
    d1_h2 = (e_ph2 - e_mh2) / delta
    first = (4.0 * d1_h2 - d1_h) / 3.0
    first_err = np.abs(d1_h2 - d1_h) / 3.0
    second = second_err = None
    if order == 2:
        d2_h = (e_ph - 2.0 * e0 + e_mh) / delta**2
        d2_h2 = (e_ph2 - 2.0 * e0 + e_mh2) / (0.5 * delta) ** 2
        second = (4.0 * d2_h2 - d2_h) / 3.0
        second_err = np.abs(d2_h2 - d2_h) / 3.0
    return QuasienergyDerivatives(
        mode_index=mode_index,
        delta=delta,
        energies=e0,
        states=states,
        first=first,
        first_error=first_err,
        second=second,
        second_error=second_err,
    )


def expand_in_floquet_basis(state: MatterState, solution: FloquetSolution) -> np.ndarray:
    """Coefficients c_mu of a matter state in the chi = 0 Floquet modes.

    Post: the coefficients resynthesize the state within 1e-12 and satisfy
    sum |c_mu|^2 = 1 within 1e-12.
    """
    basis = solution.origin_states()
    psi = state.amplitudes
    coeffs = np.linalg.solve(basis, psi)
    if np.linalg.norm(basis @ coeffs - psi) > 1e-12:
        raise ToleranceError("Floquet-basis resynthesis failed")
    total = float(np.sum(np.abs(coeffs) ** 2))
    if abs(total - 1.0) > 1e-12:
        raise ToleranceError(f"expansion weights sum to {total:.15f}, expected 1")
    return coeffs


def decompose_system(
    system: DrivenSystem,
    grid: CountingGrid,
    integrator: IntegratorSpec | None = None,
    threads: int | None = None,
) -> FloquetSolution:
    """Propagate one period on the grid, then decompose (convenience)."""
    tau = system.period
    propset = propagate_generalized(
        system, grid, np.array([0.0, tau]), integrator=integrator, threads=threads
    )
    return floquet_decompose(propset)
