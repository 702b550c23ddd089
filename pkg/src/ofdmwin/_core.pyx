# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; see ``_core_py`` for the reference semantics."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, cos, sin, fabs

cnp.import_array()

cdef int CMAC = 8


def tap_correlation(const double complex[:, ::1] taps,
                    const double complex[:, ::1] kappa,
                    double complex[:, ::1] out,
                    double lam):
    cdef Py_ssize_t l = taps.shape[0]
    cdef Py_ssize_t n = taps.shape[1]
    cdef Py_ssize_t i, j, p, q, d
    cdef double complex acc, hp
    for i in range(n):
        for j in range(n):
            d = i - j
            if d < 0:
                d += n
            acc = 0
            for p in range(l):
                hp = taps[p, i].conjugate()
                for q in range(l):
                    acc = acc + hp * taps[q, j] * kappa[d, p - q + l - 1]
            out[i, j] = lam * out[i, j] + acc
    return 2 * CMAC * n * n * l * l + 2 * n * n


def jacobi_eigh(a_in, double tol=1e-14, int max_sweeps=50):
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] a_arr = np.array(a_in, dtype=np.complex128, order="C", copy=True)
    cdef Py_ssize_t n = a_arr.shape[0]
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] v_arr = np.eye(n, dtype=np.complex128)
    cdef double complex[:, ::1] a = a_arr
    cdef double complex[:, ::1] v = v_arr
    cdef double scale = np.linalg.norm(a_arr)
    cdef long rotations = 0
    cdef int sweep
    cdef Py_ssize_t p, q, k
    cdef double off, r, tau, t, c, s
    cdef double complex z, e, ec, xp, xq
    if scale == 0.0:
        return np.zeros(n), v_arr, 0, 0, 0
    for sweep in range(1, max_sweeps + 1):
        off = 0.0
        for p in range(n):
            for q in range(p + 1, n):
                off += a[p, q].real * a[p, q].real + a[p, q].imag * a[p, q].imag
        if sqrt(off) <= tol * scale:
            return a_arr.diagonal().real.copy(), v_arr, rotations, sweep - 1, rotations * 6 * n * CMAC
        for p in range(n - 1):
            for q in range(p + 1, n):
                z = a[p, q]
                r = sqrt(z.real * z.real + z.imag * z.imag)
                if r <= 1e-300:
                    continue
                e = z / r
                ec = e.conjugate()
                tau = (a[q, q].real - a[p, p].real) / (2.0 * r)
                if tau >= 0:
                    t = 1.0 / (tau + sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + sqrt(1.0 + tau * tau))
                c = 1.0 / sqrt(1.0 + t * t)
                s = t * c
                for k in range(n):
                    xp = a[k, p]
                    xq = a[k, q]
                    a[k, p] = c * xp - s * ec * xq
                    a[k, q] = s * xp + c * ec * xq
                for k in range(n):
                    xp = a[p, k]
                    xq = a[q, k]
                    a[p, k] = c * xp - s * e * xq
                    a[q, k] = s * xp + c * e * xq
                a[p, q] = 0
                a[q, p] = 0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
                for k in range(n):
                    xp = v[k, p]
                    xq = v[k, q]
                    v[k, p] = c * xp - s * ec * xq
                    v[k, q] = s * xp + c * ec * xq
                rotations += 1
    return a_arr.diagonal().real.copy(), v_arr, rotations, max_sweeps + 1, rotations * 6 * n * CMAC


def sos_process(double nu, const double[::1] alpha, const double[::1] phase,
                double amp, long start, Py_ssize_t n_samples):
    cdef Py_ssize_t m = alpha.shape[0]
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] out_arr = np.zeros(n_samples, dtype=np.complex128)
    cdef double complex[::1] out = out_arr
    cdef cnp.ndarray[cnp.float64_t, ndim=1] freq_arr = 2.0 * np.pi * nu * np.cos(np.asarray(alpha))
    cdef double[::1] freq = freq_arr
    cdef Py_ssize_t t, k
    cdef double re, im, arg, tt
    for t in range(n_samples):
        tt = <double>(start + t)
        re = 0.0
        im = 0.0
        for k in range(m):
            arg = freq[k] * tt + phase[k]
            re += cos(arg)
            im += sin(arg)
        out[t] = amp * (re + 1j * im)
    return out_arr, n_samples * m * 2 * CMAC


def tap_correlation_batch(const double complex[:, :, ::1] taps,
                          const double complex[:, ::1] kappa):
    cdef Py_ssize_t nb = taps.shape[0]
    cdef Py_ssize_t l = taps.shape[1]
    cdef Py_ssize_t n = taps.shape[2]
    cdef cnp.ndarray[cnp.complex128_t, ndim=3] out_arr = np.empty((nb, n, n), dtype=np.complex128)
    cdef double complex[:, :, ::1] out = out_arr
    cdef Py_ssize_t b, i, j, p, q, d
    cdef double complex acc, hp
    for b in range(nb):
        for i in range(n):
            for j in range(n):
                d = i - j
                if d < 0:
                    d += n
                acc = 0
                for p in range(l):
                    hp = taps[b, p, i].conjugate()
                    for q in range(l):
                        acc = acc + hp * taps[b, q, j] * kappa[d, p - q + l - 1]
                out[b, i, j] = acc
    return out_arr, nb * 2 * CMAC * n * n * l * l


def ewma(x, double lam):
    arr = np.ascontiguousarray(x)
    out = np.empty_like(arr)
    flat_in = arr.reshape(arr.shape[0], -1)
    flat_out = out.reshape(arr.shape[0], -1)
    if np.iscomplexobj(arr):
        _ewma_complex(flat_in, flat_out, lam)
        return out, arr.size * CMAC
    _ewma_real(flat_in, flat_out, lam)
    return out, arr.size * 2


cdef void _ewma_complex(const double complex[:, ::1] x, double complex[:, ::1] out, double lam) noexcept:
    cdef Py_ssize_t b, i
    for i in range(x.shape[1]):
        out[0, i] = x[0, i]
    for b in range(1, x.shape[0]):
        for i in range(x.shape[1]):
            out[b, i] = lam * out[b - 1, i] + x[b, i]


cdef void _ewma_real(const double[:, ::1] x, double[:, ::1] out, double lam) noexcept:
    cdef Py_ssize_t b, i
    for i in range(x.shape[1]):
        out[0, i] = x[0, i]
    for b in range(1, x.shape[0]):
        for i in range(x.shape[1]):
            out[b, i] = lam * out[b - 1, i] + x[b, i]


def oja_run(const double complex[:, :, ::1] r_bar, const double[:, ::1] lam_bar,
            const double[::1] gammas, v0):
    cdef Py_ssize_t nb = r_bar.shape[0]
    cdef Py_ssize_t n = r_bar.shape[1]
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] out_arr = np.empty((nb, n), dtype=np.complex128)
    cdef double complex[:, ::1] out = out_arr
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] v_arr = np.array(v0, dtype=np.complex128, copy=True)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] sv_arr = np.empty(n, dtype=np.complex128)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] s_arr = np.empty(n, dtype=np.float64)
    cdef double complex[::1] v = v_arr
    cdef double complex[::1] sv = sv_arr
    cdef double[::1] s = s_arr
    cdef Py_ssize_t b, i, j
    cdef double complex acc
    cdef double norm
    for b in range(nb):
        for i in range(n):
            s[i] = 1.0 / sqrt(lam_bar[b, i])
            sv[i] = s[i] * v[i]
        norm = 0.0
        for i in range(n):
            acc = 0
            for j in range(n):
                acc = acc + r_bar[b, i, j] * sv[j]
            out[b, i] = v[i] + gammas[b] * s[i] * acc
            norm += out[b, i].real * out[b, i].real + out[b, i].imag * out[b, i].imag
        norm = sqrt(norm)
        for i in range(n):
            out[b, i] = out[b, i] / norm
            v[i] = out[b, i]
    return out_arr, nb * CMAC * (n * n + 4 * n)
