"""Pure-NumPy fixed-step propagation kernel (fallback for the compiled one).

Advances a batch of generalized propagators through a commutator-free
fourth-order exponential integrator: per step ``U <- exp(X2) exp(X1) U``
with ``X1 = h (a1 B1 + a2 B2)``, ``X2 = h (a2 B1 + a1 B2)``, ``B_i = -i
H(t + c_i h)`` evaluated at the two Gauss-Legendre nodes.  The counting
fields are assumed real, so the conjugate coupling term uses the complex
conjugate of the forward phase factor.
"""

from __future__ import annotations

import numpy as np

from .core import expm2, expm_small

# Gauss-Legendre nodes and exponential weights of the 4th-order
# commutator-free scheme.
SQRT3_6 = np.sqrt(3.0) / 6.0
C1 = 0.5 - SQRT3_6
C2 = 0.5 + SQRT3_6
A1 = 0.25 + SQRT3_6
A2 = 0.25 - SQRT3_6

KERNEL_NAME = "numpy-fallback"


def cf4_advance(
    u: np.ndarray,
    h0: np.ndarray,
    ops: np.ndarray,
    g: np.ndarray,
    omega: np.ndarray,
    zphase: np.ndarray,
    t0: float,
    h: float,
    nsteps: int,
) -> None:
    """Advance propagators ``u`` in place by ``nsteps`` steps of size ``h``.

    Parameters
    ----------
    u : ndarray, shape (G, d, d)
        Propagator batch, updated in place.
    h0 : ndarray, shape (d, d)
        Static Hamiltonian.
    ops : ndarray, shape (K, d, d)
        Per-mode coupling operators (forward/raising part).
    g, omega : ndarray, shape (K,)
        Effective couplings and mode frequencies.
    zphase : ndarray, shape (G, K)
        Static per-grid-point factors ``exp(-i (chi_k - phi_k))`` (unit
        modulus).
    t0, h, nsteps
        Start time, step size, number of steps.
    """
    d = h0.shape[0]
    ops_dag = ops.conj().transpose(0, 2, 1)
    gz = zphase * g  # (G, K)
    for step in range(nsteps):
        t = t0 + step * h
        w1 = np.exp(-1j * omega * (t + C1 * h))  # (K,)
        w2 = np.exp(-1j * omega * (t + C2 * h))
        f1 = gz * w1  # (G, K)
        f2 = gz * w2
        h1 = h0 + np.einsum("gk,kab->gab", f1, ops) + np.einsum(
            "gk,kab->gab", f1.conj(), ops_dag
        )
        h2 = h0 + np.einsum("gk,kab->gab", f2, ops) + np.einsum(
            "gk,kab->gab", f2.conj(), ops_dag
        )
        x1 = (-1j * h) * (A1 * h1 + A2 * h2)
        x2 = (-1j * h) * (A2 * h1 + A1 * h2)
        if d == 2:
            e1 = expm2(x1)
            e2 = expm2(x2)
        else:
            e1 = expm_small(x1)
            e2 = expm_small(x2)
        u[:] = np.matmul(e2, np.matmul(e1, u))
