"""Domain types and small-matrix linear algebra shared by all modules.

Conventions used throughout the package (hbar = 1):

* Matter basis index 0 is spin-up (``sigma_z`` eigenvalue +1), index 1 is
  spin-down.
* ``sigma_plus = sigma_x + i*sigma_y`` (matrix entries 2, not 1).  This
  convention is what puts the factor 16 under the square root in the
  two-level closed forms of :mod:`prft.semiclassical`.
* A driven mode with field phase ``phi`` and counting field ``chi``
  contributes ``g * (V exp(-i(w t - phi + chi)) + V^dag exp(+i(w t - phi
  + chi)))`` to the Hamiltonian, where ``V`` is the mode's coupling
  operator.  For a Hermitian ``V`` this is ``2 g V cos(w t - phi + chi)``
  (real-drive form); for a raising-type ``V`` (e.g. ``sigma_plus``) it is
  the rotating-wave form in which the raising operator carries
  ``exp(-i w t - i chi)``.  The sign of ``phi`` is fixed by the coherent
  state ``<a(t)> = alpha exp(i phi - i w t)`` together with the counting
  insertion ``a -> a exp(-i chi)``; with this choice a positive photon
  number change always means photons gained by the field mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg

__all__ = [
    "PRFTError",
    "ValidationError",
    "CommensurabilityError",
    "DegenerateQuasienergyError",
    "CoverageError",
    "WindowError",
    "LeakageError",
    "IntegrationError",
    "BranchError",
    "ToleranceError",
    "AliasingWarning",
    "ModeSpec",
    "DrivenSystem",
    "MatterState",
    "PhotonicInitialState",
    "CountingGrid",
    "build_driven_system",
    "spin_half_operators",
    "fundamental_period",
    "require_hermitian",
    "expm2",
    "expm_small",
]

HERMITICITY_TOL = 1e-12


# ---------------------------------------------------------------------------
# errors
# ---------------------------------------------------------------------------

class PRFTError(Exception):
    """Base class for all package errors."""


class ValidationError(PRFTError):
    """Invalid input data (non-Hermitian matrix, bad norm, bad schema...)."""


class CommensurabilityError(ValidationError):
    """Mode frequencies are not pairwise commensurate."""


class DegenerateQuasienergyError(PRFTError):
    """Two quasienergy branches collide; smooth continuation is impossible.

    Attributes
    ----------
    pair : tuple of int
        Indices of the colliding branches.
    chi : float or ndarray
        Counting-field value at which the collision was detected.
    """

    def __init__(self, message, pair=None, chi=None):
        super().__init__(message)
        self.pair = pair
        self.chi = chi


class CoverageError(PRFTError):
    """Requested evaluation point is not covered by the available data."""


class WindowError(PRFTError):
    """A photon-number or quasiprobability window is too small."""


class LeakageError(PRFTError):
    """Probability leaked to the edge of a truncated Fock window."""


class IntegrationError(PRFTError):
    """Time integration failed (step-size underflow or similar)."""


class BranchError(PRFTError):
    """Branch tracking of the log/quasienergy failed near chi = 0."""


class ToleranceError(PRFTError):
    """A numerical invariant was violated beyond its stated tolerance."""


class AliasingWarning(UserWarning):
    """Photon-number support reaches the edge of the counting grid."""


def require_hermitian(mat: np.ndarray, name: str, tol: float = HERMITICITY_TOL) -> None:
    """Raise :class:`ValidationError` if ``mat`` is not Hermitian within ``tol``."""
    dev = np.max(np.abs(mat - mat.conj().T))
    if dev > tol:
        raise ValidationError(
            f"matrix {name!r} is not Hermitian: max |M - M^dag| = {dev:.3e} > {tol:.1e}"
        )


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModeSpec:
    """Parameters of one driving/counted field mode.

    Exactly one of ``coupling`` (the effective coupling ``g = g_bare *
    amplitude``) or the pair ``(bare_coupling, amplitude)`` must be given.

    Parameters
    ----------
    frequency : float
        Mode frequency (energy units, hbar = 1).  Must be positive.
    phase : float
        Field phase ``phi`` in radians; stored reduced to ``[0, 2*pi)``.
        This is the phase of the photonic amplitude profile
        (``arg a_n = phi * n``), not a bare Hamiltonian phase.
    amplitude : float, optional
        Dimensionless field amplitude ``alpha >= 0`` (``alpha**2`` is the
        mean photon number of the matching coherent state).
    bare_coupling : float, optional
        Single-photon coupling ``g_bare``.
    coupling : float, optional
        Effective coupling ``g = g_bare * alpha``.
    form : str
        ``"cos"`` for a Hermitian coupling operator entering through a real
        cosine drive, ``"rwa"`` for a raising-type operator carrying
        ``exp(-i w t - i chi)``.
    """

    frequency: float
    phase: float = 0.0
    amplitude: float | None = None
    bare_coupling: float | None = None
    coupling: float | None = None
    form: str = "cos"

    def __post_init__(self):
        if self.frequency <= 0:
            raise ValidationError(f"mode frequency must be positive, got {self.frequency}")
        if self.form not in ("cos", "rwa"):
            raise ValidationError(f"unknown coupling form {self.form!r} (use 'cos' or 'rwa')")
        have_pair = self.bare_coupling is not None and self.amplitude is not None
        have_half_pair = (self.bare_coupling is None) != (self.amplitude is None)
        if have_half_pair:
            raise ValidationError("bare_coupling and amplitude must be given together")
        if have_pair == (self.coupling is not None):
            raise ValidationError(
                "give exactly one of coupling=g or (bare_coupling, amplitude)"
            )
        if self.amplitude is not None and self.amplitude < 0:
            raise ValidationError(f"amplitude must be >= 0, got {self.amplitude}")
        if have_pair:
            object.__setattr__(self, "coupling", self.bare_coupling * self.amplitude)
        object.__setattr__(self, "phase", float(self.phase) % (2.0 * math.pi))

    @property
    def g(self) -> float:
        """Effective coupling ``g = g_bare * alpha``."""
        return self.coupling


@dataclass(frozen=True)
class DrivenSystem:
    """A matter system driven by one or more classical field modes.

    Built by :func:`build_driven_system`; do not construct directly.
    """

    h0: np.ndarray
    coupling_ops: tuple
    modes: tuple
    _period: float | None = field(default=None, repr=False)
    _period_reason: str | None = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return self.h0.shape[0]

    @property
    def n_modes(self) -> int:
        return len(self.modes)

    @property
    def period(self) -> float:
        """Common driving period; raises if the frequencies are incommensurate."""
        if self._period is None:
            raise CommensurabilityError(self._period_reason or "no commensurate period")
        return self._period

    def _phase_factors(self, chi: np.ndarray | None) -> np.ndarray:
        """Per-mode static phases exp(-i(chi_k - phi_k))."""
        chi = np.zeros(self.n_modes) if chi is None else np.asarray(chi, dtype=float)
        if chi.shape != (self.n_modes,):
            raise ValidationError(
                f"chi must have one entry per mode ({self.n_modes}), got shape {chi.shape}"
            )
        phases = np.array([m.phase for m in self.modes])
        return np.exp(-1j * (chi - phases))

    def hamiltonian(self, t: float, chi: np.ndarray | None = None) -> np.ndarray:
        """Counting-field-generalized Hamiltonian ``H_chi(t)``."""
        z = self._phase_factors(chi)
        h = self.h0.astype(complex).copy()
        for k, (op, mode) in enumerate(zip(self.coupling_ops, self.modes)):
            w = z[k] * np.exp(-1j * mode.frequency * t)
            h += mode.g * (op * w + op.conj().T * (1.0 / w))
        return h

    def hamiltonian_time_derivative(self, t: float, chi: np.ndarray | None = None) -> np.ndarray:
        """``dH_chi(t)/dt`` at fixed ``chi``."""
        z = self._phase_factors(chi)
        dh = np.zeros_like(self.h0, dtype=complex)
        for k, (op, mode) in enumerate(zip(self.coupling_ops, self.modes)):
            w = z[k] * np.exp(-1j * mode.frequency * t)
            dh += mode.g * (-1j * mode.frequency) * (op * w - op.conj().T * (1.0 / w))
        return dh


@dataclass(frozen=True)
class MatterState:
    """Pure state of the matter system (complex amplitude vector, norm 1)."""

    amplitudes: np.ndarray
    basis: str = "spin-z"

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=complex).ravel()
        object.__setattr__(self, "amplitudes", amp)
        norm = np.linalg.norm(amp)
        if abs(norm - 1.0) > 1e-12:
            raise ValidationError(f"matter state norm is {norm:.15g}, expected 1 within 1e-12")

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    @staticmethod
    def up() -> "MatterState":
        return MatterState(np.array([1.0, 0.0]))

    @staticmethod
    def down() -> "MatterState":
        return MatterState(np.array([0.0, 1.0]))


@dataclass(frozen=True)
class PhotonicInitialState:
    """Gaussian photon-number amplitude profile of one counted mode.

    The amplitude coefficients are ``a_n = (2 pi sigma^2)^(-1/4)
    * exp(-(n - mean)^2 / (4 sigma^2)) * exp(i phase * n)``, i.e. the
    *probability* distribution is a Gaussian with variance ``sigma^2``
    and the phases are exactly linear in ``n``.
    """

    mean: float
    variance: float
    phase: float = 0.0
    family: str = "gaussian-squeezed"

    def __post_init__(self):
        if self.variance <= 0:
            raise ValidationError(f"photonic variance must be > 0, got {self.variance}")
        if self.family not in ("coherent", "gaussian-squeezed"):
            raise ValidationError(f"unknown photonic family {self.family!r}")
        if self.family == "coherent" and abs(self.variance - self.mean) > 1e-9 * max(1.0, self.mean):
            raise ValidationError("coherent family requires variance == mean")

    @property
    def sigma(self) -> float:
        return math.sqrt(self.variance)

    def amplitudes(self, n_values: np.ndarray) -> np.ndarray:
        """Unnormalized-then-renormalized amplitudes on integer points ``n_values``."""
        n = np.asarray(n_values, dtype=float)
        a = np.exp(-((n - self.mean) ** 2) / (4.0 * self.variance)).astype(complex)
        norm = np.linalg.norm(a)
        if norm == 0.0:
            raise WindowError("photonic window does not overlap the Gaussian support")
        a /= norm
        a *= np.exp(1j * self.phase * np.asarray(n_values, dtype=float))
        return a


@dataclass(frozen=True)
class CountingGrid:
    """Uniform counting-field grids for the counted modes.

    Parameters
    ----------
    mode_indices : tuple of int
        Which system modes carry a counting field.  At most two joint modes
        are supported by the statistics operations.
    n_samples : tuple of int
        Number of grid points per counted mode; each must be a power of two.
        Grid points are ``chi_j = 2 pi j / N``.
    """

    mode_indices: tuple
    n_samples: tuple

    def __post_init__(self):
        mi = tuple(int(i) for i in np.atleast_1d(self.mode_indices))
        ns = tuple(int(n) for n in np.atleast_1d(self.n_samples))
        object.__setattr__(self, "mode_indices", mi)
        object.__setattr__(self, "n_samples", ns)
        if len(mi) != len(ns):
            raise ValidationError("mode_indices and n_samples must have equal length")
        if len(mi) == 0:
            raise ValidationError("at least one counted mode is required")
        if len(set(mi)) != len(mi):
            raise ValidationError("counted mode indices must be distinct")
        for n in ns:
            if n < 2 or (n & (n - 1)) != 0:
                raise ValidationError(f"N_chi must be a power of two >= 2, got {n}")

    @property
    def n_axes(self) -> int:
        return len(self.mode_indices)

    @property
    def size(self) -> int:
        return int(np.prod(self.n_samples))

    def points(self, axis: int = 0) -> np.ndarray:
        """Grid points ``chi_j = 2 pi j / N`` along one counted axis."""
        n = self.n_samples[axis]
        return 2.0 * math.pi * np.arange(n) / n

    def spacing(self, axis: int = 0) -> float:
        return 2.0 * math.pi / self.n_samples[axis]

    def chi_vectors(self, n_modes: int) -> np.ndarray:
        """Full chi vectors, shape ``(size, n_modes)``; uncounted modes get 0."""
        for i in self.mode_indices:
            if not 0 <= i < n_modes:
                raise ValidationError(f"counted mode index {i} out of range for {n_modes} modes")
        axes = [self.points(a) for a in range(self.n_axes)]
        mesh = np.meshgrid(*axes, indexing="ij")
        out = np.zeros((self.size, n_modes))
        for a, m in enumerate(mesh):
            out[:, self.mode_indices[a]] = m.ravel()
        return out


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------

def spin_half_operators() -> dict:
    """Pauli matrices and ``sigma_pm = sigma_x +- i sigma_y`` (entries 2).

    Basis: index 0 is spin-up.  Keys: ``"x", "y", "z", "plus", "minus",
    "id"``.
    """
    sx = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
    sy = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
    sz = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
    return {
        "x": sx,
        "y": sy,
        "z": sz,
        "plus": sx + 1j * sy,
        "minus": sx - 1j * sy,
        "id": np.eye(2, dtype=complex),
    }


def fundamental_period(
    frequencies: Sequence[float],
    tol: float = 1e-9,
    max_denominator: int = 64,
) -> float:
    """Common period ``2 pi / gcd-frequency`` of commensurate mode frequencies.

    Frequency ratios must be ratios of small integers (denominator up to
    ``max_denominator``) within ``tol``; otherwise
    :class:`CommensurabilityError` is raised.
    """
    freqs = [float(w) for w in frequencies]
    if not freqs:
        raise ValidationError("at least one frequency required")
    ref = freqs[0]
    fracs = []
    for w in freqs:
        r = w / ref
        fr = Fraction(r).limit_denominator(max_denominator)
        if abs(r - float(fr)) > tol * max(1.0, abs(r)) or fr == 0:
            raise CommensurabilityError(
                f"frequency ratio {w}/{ref} = {r!r} is not a ratio of small integers"
            )
        fracs.append(fr)
    lcm_den = 1
    for fr in fracs:
        lcm_den = lcm_den * fr.denominator // math.gcd(lcm_den, fr.denominator)
    ints = [fr.numerator * (lcm_den // fr.denominator) for fr in fracs]
    g = 0
    for m in ints:
        g = math.gcd(g, m)
    base = ref / lcm_den * g
    return 2.0 * math.pi / base


def build_driven_system(h0: np.ndarray, couplings: Iterable[tuple]) -> DrivenSystem:
    """Validate and assemble a :class:`DrivenSystem`.

    Parameters
    ----------
    h0 : ndarray
        Static Hamiltonian, Hermitian ``d x d``.
    couplings : iterable of (operator, ModeSpec)
        One coupling operator per mode.  ``"cos"``-form operators must be
        Hermitian; ``"rwa"``-form operators are raising-type (the conjugate
        term is added automatically).

    Raises
    ------
    ValidationError
        On dimension mismatch or non-Hermitian input (names the matrix).
    """
    h0 = np.asarray(h0, dtype=complex)
    if h0.ndim != 2 or h0.shape[0] != h0.shape[1]:
        raise ValidationError(f"h0 must be square, got shape {h0.shape}")
    require_hermitian(h0, "h0")
    d = h0.shape[0]
    ops = []
    modes = []
    for k, (op, mode) in enumerate(couplings):
        op = np.asarray(op, dtype=complex)
        if op.shape != (d, d):
            raise ValidationError(
                f"coupling operator {k} has shape {op.shape}, expected {(d, d)}"
            )
        if not isinstance(mode, ModeSpec):
            raise ValidationError(f"coupling {k}: expected a ModeSpec, got {type(mode)!r}")
        if mode.form == "cos":
            require_hermitian(op, f"coupling operator {k}")
        ops.append(op)
        modes.append(mode)
    period = None
    reason = None
    if modes:
        try:
            period = fundamental_period([m.frequency for m in modes])
        except CommensurabilityError as err:
            reason = str(err)
    system = DrivenSystem(
        h0=h0, coupling_ops=tuple(ops), modes=tuple(modes),
        _period=period, _period_reason=reason,
    )
    # spot-check Hermiticity of the assembled generalized Hamiltonian at a
    # real sample point (guards rwa-form operator mistakes)
    if modes:
        sample = system.hamiltonian(0.37, np.full(len(modes), 0.59))
        require_hermitian(sample, "H_chi(t) at a real sample point", tol=1e-10)
    return system


# ---------------------------------------------------------------------------
# small-matrix exponentials
# ---------------------------------------------------------------------------

def expm2(a: np.ndarray) -> np.ndarray:
    """Exponential of (a batch of) 2x2 complex matrices, closed form.

    ``a`` has shape ``(..., 2, 2)``.  Uses ``exp(c) (cosh(delta) I +
    sinhc(delta) B)`` where ``c = tr(a)/2``, ``B = a - c I`` and ``delta^2 =
    B00^2 + B01 B10``; the result is branch-free because cosh and sinhc are
    even.
    """
    a = np.asarray(a, dtype=complex)
    c = 0.5 * (a[..., 0, 0] + a[..., 1, 1])
    b00 = a[..., 0, 0] - c
    b01 = a[..., 0, 1]
    b10 = a[..., 1, 0]
    delta2 = b00 * b00 + b01 * b10
    delta = np.sqrt(delta2)
    cosh = np.cosh(delta)
    small = np.abs(delta) < 1e-6
    with np.errstate(invalid="ignore", divide="ignore"):
        sinhc = np.where(small, 1.0 + delta2 / 6.0 + delta2 * delta2 / 120.0,
                         np.sinh(np.where(small, 1.0, delta)) / np.where(small, 1.0, delta))
    ec = np.exp(c)
    out = np.empty_like(a)
    out[..., 0, 0] = ec * (cosh + sinhc * b00)
    out[..., 1, 1] = ec * (cosh - sinhc * b00)
    out[..., 0, 1] = ec * sinhc * b01
    out[..., 1, 0] = ec * sinhc * b10
    return out


def expm_small(a: np.ndarray) -> np.ndarray:
    """Matrix exponential for small dimensions.

    2x2 uses the closed form; 3x3/4x4 use eigendecomposition with a
    conditioning guard; anything larger (or ill-conditioned) falls back to
    scipy's Pade approximation.
    """
    a = np.asarray(a, dtype=complex)
    d = a.shape[-1]
    if d == 2:
        return expm2(a)
    if d <= 4 and a.ndim == 2:
        vals, vecs = np.linalg.eig(a)
        try:
            cond = np.linalg.cond(vecs)
        except np.linalg.LinAlgError:
            cond = np.inf
        if cond < 1e8:
            return (vecs * np.exp(vals)) @ np.linalg.inv(vecs)
    if a.ndim == 2:
        return scipy.linalg.expm(a)
    return np.stack([expm_small(m) for m in a.reshape(-1, d, d)]).reshape(a.shape)
