"""Reference computations written from the definitions, sharing no code with the package."""

import numpy as np


def dft(n):
    f = np.empty((n, n), dtype=complex)
    for k in range(n):
        for l in range(n):
            f[k, l] = np.exp(-2j * np.pi * k * l / n) / np.sqrt(n)
    return f


def band(n, k):
    half = (k - 1) // 2
    return np.array([[1.0 if abs(i - j) <= half else 0.0 for j in range(n)] for i in range(n)])


def circulant(w):
    # windowing in time then transforming: C y = F (w * F^H y), column by column
    n = len(w)
    f = dft(n)
    return f @ np.diag(w) @ f.conj().T


def channel_from_taps(taps):
    """Frequency-domain matrix of a time-varying circular convolution."""
    l, n = taps.shape
    h_t = np.zeros((n, n), dtype=complex)
    for row in range(n):
        for tap in range(l):
            h_t[row, (row - tap) % n] += taps[tap, row]
    f = dft(n)
    return f @ h_t @ f.conj().T


def powers(w, h, sigma_z2, k):
    """In-band and out-of-band-plus-noise power of the windowed channel."""
    n = h.shape[0]
    c = circulant(w)
    x = c @ h
    t = band(n, k)
    p_s = np.sum(np.abs(t * x) ** 2)
    p_ni = np.sum(np.abs((1 - t) * x) ** 2) + sigma_z2 * np.sum(np.abs(c) ** 2)
    return p_s, p_ni


def literal_operands(h, sigma_z2, k):
    """R and Lambda from per-row outer products, element by element."""
    n = h.shape[0]
    f = dft(n)
    c = f @ h.conj()
    t = band(n, k)
    r = np.zeros((n, n), dtype=complex)
    for row in range(n):
        b = (c * t[row]) @ c.conj().T
        r += np.outer(f[row].conj(), f[row]) * b
    lam = np.real(np.diag(c @ c.conj().T)) + sigma_z2
    return r, lam


def best_window_by_search(h, sigma_z2, k):
    """Generalised eigenvector of the pencil via scipy, independent of the whitening route."""
    import scipy.linalg

    r, lam = literal_operands(h, sigma_z2, k)
    a = 0.5 * (r + r.conj().T)
    b = np.diag(lam) - a
    vals, vecs = scipy.linalg.eigh(a, b)
    return vecs[:, -1], vals[-1]


def rand_complex(rng, shape, var=1.0):
    return np.sqrt(var / 2) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def random_channel(rng, n, l=3):
    taps = rand_complex(rng, (l, n), 1.0 / l)
    return taps, channel_from_taps(taps)
