"""Pure numpy implementations of the hot kernels.

Each function mirrors the signature of its counterpart in ``_core.pyx`` and
returns the number of real floating point operations it performed as the
last element, so both backends can be instrumented identically.
"""

import numpy as np

# real flops per complex multiply-add
CMAC = 8


def _pair_index(n, l):
    i = np.arange(n)
    delta = (i[:, None] - i[None, :]) % n
    p = np.arange(l)
    shift = p[:, None] - p[None, :] + (l - 1)
    return delta[:, :, None, None], shift[None, None, :, :]


def tap_correlation(taps, kappa, out, lam):
    """``out <- lam * out + R`` where ``R`` is built from time-domain taps.

    ``R[i, j] = sum_{p,q} conj(taps[p, i]) * taps[q, j] * kappa[(i-j) % N, p-q+L-1]``
    """
    l, n = taps.shape
    d, s = _pair_index(n, l)
    kern = kappa[d, s]
    r = np.einsum("pi,qj,ijpq->ij", taps.conj(), taps, kern, optimize=True)
    out *= lam
    out += r
    return 2 * CMAC * n * n * l * l + 2 * n * n


def jacobi_eigh(a, tol=1e-14, max_sweeps=50):
    """Cyclic Jacobi eigensolver for a complex Hermitian matrix.

    Returns ``(eigenvalues, eigenvectors, rotations, sweeps, flops)``;
    eigenvalues are unsorted. ``sweeps == max_sweeps + 1`` signals that the
    off-diagonal mass did not fall below ``tol * ||A||_F``.
    """
    a = np.array(a, dtype=np.complex128, copy=True)
    n = a.shape[0]
    v = np.eye(n, dtype=np.complex128)
    scale = np.linalg.norm(a)
    rotations = 0
    if scale == 0.0:
        return np.zeros(n), v, 0, 0, 0
    for sweep in range(1, max_sweeps + 1):
        off = np.sqrt(np.sum(np.abs(np.triu(a, 1)) ** 2))
        if off <= tol * scale:
            return a.diagonal().real.copy(), v, rotations, sweep - 1, rotations * 6 * n * CMAC
        for p in range(n - 1):
            for q in range(p + 1, n):
                z = a[p, q]
                r = abs(z)
                if r <= 1e-300:
                    continue
                e = z / r
                tau = (a[q, q].real - a[p, p].real) / (2.0 * r)
                t = (1.0 if tau >= 0 else -1.0) / (abs(tau) + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                ec = np.conj(e)
                # columns: A <- A G, G = [[c, s], [-s conj(e), c conj(e)]]
                colp = a[:, p].copy()
                colq = a[:, q]
                a[:, p] = c * colp - s * ec * colq
                a[:, q] = s * colp + c * ec * colq
                rowp = a[p, :].copy()
                rowq = a[q, :]
                a[p, :] = c * rowp - s * e * rowq
                a[q, :] = s * rowp + c * e * rowq
                a[p, q] = 0.0
                a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
                vp = v[:, p].copy()
                vq = v[:, q]
                v[:, p] = c * vp - s * ec * vq
                v[:, q] = s * vp + c * ec * vq
                rotations += 1
    return a.diagonal().real.copy(), v, rotations, max_sweeps + 1, rotations * 6 * n * CMAC


def sos_process(nu, alpha, phase, amp, start, n_samples):
    """Sum-of-sinusoids fading process over samples ``start .. start+n_samples-1``.

    ``h[t] = amp * sum_k exp(j (2 pi nu t cos(alpha_k) + phase_k))``
    """
    out = np.zeros(n_samples, dtype=np.complex128)
    freq = 2.0 * np.pi * nu * np.cos(alpha)
    chunk = 4096
    for lo in range(0, n_samples, chunk):
        t = np.arange(start + lo, start + min(lo + chunk, n_samples), dtype=np.float64)
        out[lo:lo + t.size] = np.exp(1j * (np.outer(t, freq) + phase)).sum(axis=1)
    out *= amp
    return out, n_samples * alpha.size * 2 * CMAC


def tap_correlation_batch(taps, kappa):
    """Per-block ``R`` for a stack of tap matrices ``taps[b, l, n]``."""
    nb, l, n = taps.shape
    d, s = _pair_index(n, l)
    kern = kappa[d, s]
    r = np.einsum("bpi,bqj,ijpq->bij", taps.conj(), taps, kern, optimize=True)
    return r, nb * 2 * CMAC * n * n * l * l


def ewma(x, lam):
    """``out[b] = lam * out[b-1] + x[b]`` along the first axis, ``out[-1] = 0``."""
    out = np.empty_like(x)
    acc = np.zeros_like(x[0])
    for b in range(x.shape[0]):
        acc = lam * acc + x[b]
        out[b] = acc
    return out, x.size * (CMAC if np.iscomplexobj(x) else 2)


def oja_run(r_bar, lam_bar, gammas, v0):
    """Normalised Oja iterations over a sequence of accumulators.

    ``v[b] = normalise(v[b-1] + gammas[b] * Q[b] v[b-1])`` with
    ``Q[b] = diag(s) r_bar[b] diag(s)``, ``s = lam_bar[b]^-1/2``.
    """
    nb, n, _ = r_bar.shape
    out = np.empty((nb, n), dtype=np.complex128)
    v = np.asarray(v0, dtype=np.complex128).copy()
    for b in range(nb):
        s = 1.0 / np.sqrt(lam_bar[b])
        v = v + gammas[b] * (s * (r_bar[b] @ (s * v)))
        v /= np.linalg.norm(v)
        out[b] = v
    return out, nb * CMAC * (n * n + 4 * n)
