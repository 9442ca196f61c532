# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled fixed-step propagation kernel for two-level matter systems.

Same contract as :mod:`prft._cf4_fallback` (commutator-free fourth-order
exponential integrator), specialized to d = 2 with a closed-form 2x2
matrix exponential.  Releases the GIL so grid chunks can run on threads.
"""

import numpy as np

cimport cython
from libc.math cimport sqrt

cdef extern from "complex.h" nogil:
    double complex cexp(double complex)
    double complex csqrt(double complex)
    double complex ccosh(double complex)
    double complex csinh(double complex)
    double cabs(double complex)
    double complex conj(double complex)

KERNEL_NAME = "cython"

cdef double SQRT3_6 = sqrt(3.0) / 6.0


cdef inline void _expm2(double complex a00, double complex a01,
                        double complex a10, double complex a11,
                        double complex *out) noexcept nogil:
    """out[0..3] = exp([[a00, a01], [a10, a11]]) (closed form)."""
    cdef double complex c = 0.5 * (a00 + a11)
    cdef double complex b00 = a00 - c
    cdef double complex d2 = b00 * b00 + a01 * a10
    cdef double complex d = csqrt(d2)
    cdef double complex ch, shc, ec
    if cabs(d) < 1e-6:
        ch = 1.0 + 0.5 * d2 * (1.0 + d2 / 12.0)
        shc = 1.0 + d2 / 6.0 * (1.0 + d2 / 20.0)
    else:
        ch = ccosh(d)
        shc = csinh(d) / d
    ec = cexp(c)
    out[0] = ec * (ch + shc * b00)
    out[1] = ec * shc * a01
    out[2] = ec * shc * a10
    out[3] = ec * (ch - shc * b00)


def cf4_advance(double complex[:, :, ::1] u,
                double complex[:, ::1] h0,
                double complex[:, :, ::1] ops,
                double[::1] g,
                double[::1] omega,
                double complex[:, ::1] zphase,
                double t0,
                double h,
                long nsteps):
    """Advance propagators ``u`` (G, 2, 2) in place; see the fallback kernel."""
    cdef Py_ssize_t G = u.shape[0]
    cdef Py_ssize_t K = ops.shape[0]
    if u.shape[1] != 2 or u.shape[2] != 2 or h0.shape[0] != 2:
        raise ValueError("compiled kernel supports d = 2 only")

    cdef double complex[:, :, ::1] vk = ops
    cdef double c1 = 0.5 - SQRT3_6
    cdef double c2 = 0.5 + SQRT3_6
    cdef double a1w = 0.25 + SQRT3_6
    cdef double a2w = 0.25 - SQRT3_6

    cdef Py_ssize_t step, j, k
    cdef double t
    cdef double complex w1, w2, f1, f2, cf1, cf2
    cdef double complex h1_00, h1_01, h1_10, h1_11
    cdef double complex h2_00, h2_01, h2_10, h2_11
    cdef double complex x1_00, x1_01, x1_10, x1_11
    cdef double complex x2_00, x2_01, x2_10, x2_11
    cdef double complex mih = -1j * h
    cdef double complex e1[4]
    cdef double complex e2[4]
    cdef double complex u00, u01, u10, u11, v00, v01, v10, v11
    # per-step mode phase factors, reused across grid points
    cdef double complex[::1] p1 = np.empty(K, dtype=np.complex128)
    cdef double complex[::1] p2 = np.empty(K, dtype=np.complex128)

    with nogil:
        for step in range(nsteps):
            t = t0 + step * h
            for k in range(K):
                p1[k] = cexp(-1j * omega[k] * (t + c1 * h)) * g[k]
                p2[k] = cexp(-1j * omega[k] * (t + c2 * h)) * g[k]
            for j in range(G):
                h1_00 = h0[0, 0]; h1_01 = h0[0, 1]
                h1_10 = h0[1, 0]; h1_11 = h0[1, 1]
                h2_00 = h0[0, 0]; h2_01 = h0[0, 1]
                h2_10 = h0[1, 0]; h2_11 = h0[1, 1]
                for k in range(K):
                    f1 = zphase[j, k] * p1[k]
                    f2 = zphase[j, k] * p2[k]
                    cf1 = conj(f1)
                    cf2 = conj(f2)
                    h1_00 += f1 * vk[k, 0, 0] + cf1 * conj(vk[k, 0, 0])
                    h1_01 += f1 * vk[k, 0, 1] + cf1 * conj(vk[k, 1, 0])
                    h1_10 += f1 * vk[k, 1, 0] + cf1 * conj(vk[k, 0, 1])
                    h1_11 += f1 * vk[k, 1, 1] + cf1 * conj(vk[k, 1, 1])
                    h2_00 += f2 * vk[k, 0, 0] + cf2 * conj(vk[k, 0, 0])
                    h2_01 += f2 * vk[k, 0, 1] + cf2 * conj(vk[k, 1, 0])
                    h2_10 += f2 * vk[k, 1, 0] + cf2 * conj(vk[k, 0, 1])
                    h2_11 += f2 * vk[k, 1, 1] + cf2 * conj(vk[k, 1, 1])
                x1_00 = mih * (a1w * h1_00 + a2w * h2_00)
                x1_01 = mih * (a1w * h1_01 + a2w * h2_01)
                x1_10 = mih * (a1w * h1_10 + a2w * h2_10)
                x1_11 = mih * (a1w * h1_11 + a2w * h2_11)
                x2_00 = mih * (a2w * h1_00 + a1w * h2_00)
                x2_01 = mih * (a2w * h1_01 + a1w * h2_01)
                x2_10 = mih * (a2w * h1_10 + a1w * h2_10)
                x2_11 = mih * (a2w * h1_11 + a1w * h2_11)
                _expm2(x1_00, x1_01, x1_10, x1_11, e1)
                _expm2(x2_00, x2_01, x2_10, x2_11, e2)
                u00 = u[j, 0, 0]; u01 = u[j, 0, 1]
                u10 = u[j, 1, 0]; u11 = u[j, 1, 1]
                v00 = e1[0] * u00 + e1[1] * u10
                v01 = e1[0] * u01 + e1[1] * u11
                v10 = e1[2] * u00 + e1[3] * u10
                v11 = e1[2] * u01 + e1[3] * u11
                u[j, 0, 0] = e2[0] * v00 + e2[1] * v10
                u[j, 0, 1] = e2[0] * v01 + e2[1] * v11
                u[j, 1, 0] = e2[2] * v00 + e2[3] * v10
                u[j, 1, 1] = e2[2] * v01 + e2[3] * v11
