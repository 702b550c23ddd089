"""QPSK block transmission, receiver windowing and banded MMSE equalization."""

from dataclasses import dataclass

import numpy as np

from .numerics import band_mask, circulant_of_window, linear_solve_hermitian

_QPSK = np.array([1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j]) / np.sqrt(2)


@dataclass(frozen=True)
class EqualizerParams:
    """Band size ``k`` and regularisation; ``rho = sigma_z2 / epsilon``."""

    k: int = 3
    epsilon: float = 0.1
    sigma_z2: float = 0.0

    def __post_init__(self):
        if self.k % 2 == 0:
            raise ValueError(f"band size must be odd, got {self.k}")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.sigma_z2 < 0:
            raise ValueError("sigma_z2 must be non-negative")

    @property
    def rho(self):
        return self.sigma_z2 / self.epsilon


def modulate_qpsk(bits, n):
    """Gray-mapped QPSK: bit pair ``(b0, b1)`` maps to ``((1-2 b0) + j(1-2 b1)) / sqrt(2)``."""
    bits = np.asarray(bits, dtype=np.int64).ravel()
    if bits.size != 2 * n:
        raise ValueError(f"expected {2 * n} bits, got {bits.size}")
    if np.any((bits != 0) & (bits != 1)):
        raise ValueError("bits must be 0 or 1")
    pairs = bits.reshape(n, 2)
    return _QPSK[2 * pairs[:, 0] + pairs[:, 1]]


def qpsk_indices(symbols):
    """Nearest-neighbour QPSK decision as constellation indices 0..3."""
    symbols = np.asarray(symbols)
    return 2 * (symbols.real < 0) + (symbols.imag < 0)


def demodulate_qpsk(symbols):
    idx = qpsk_indices(symbols)
    return np.stack([idx // 2, idx % 2], axis=-1).ravel()


def transmit(x, h_f, sigma_z2, rng=None, noise=None):
    """``y = H x + z`` with ``z ~ CN(0, sigma_z2 I)``.

    ``noise`` may carry a pre-drawn unit-variance vector so that several SNR
    points can share one noise realisation.
    """
    x = np.asarray(x, dtype=np.complex128)
    h_f = np.asarray(h_f)
    if h_f.shape != (x.size, x.size):
        raise ValueError(f"channel shape {h_f.shape} does not match block length {x.size}")
    y = h_f @ x
    if sigma_z2 > 0:
        if noise is None:
            noise = (rng.standard_normal(x.size) + 1j * rng.standard_normal(x.size)) / np.sqrt(2)
        y = y + np.sqrt(sigma_z2) * noise
    return y


def apply_window(y, w):
    """``C(w) y``; equivalent to multiplying the time-domain block by ``w``."""
    y = np.asarray(y, dtype=np.complex128)
    w = np.asarray(w, dtype=np.complex128)
    if y.size != w.size:
        raise ValueError("window and block lengths differ")
    n = y.size
    return np.fft.fft(w * np.fft.ifft(y, norm="ortho"), norm="ortho") if n > 1 else w * y


def banded_mmse(y, h_f, params):
    """Soft decisions ``H_B^H (H_B H_B^H + rho I)^{-1} y`` with ``H_B = T_K o H``."""
    h_f = np.asarray(h_f)
    n = h_f.shape[0]
    h_b = band_mask(n, params.k) * h_f
    gram = h_b @ h_b.conj().T + params.rho * np.eye(n)
    return h_b.conj().T @ linear_solve_hermitian(gram, y)


def banded_mmse_windowed(y_w, h_f, w, params):
    """Windowed banded MMSE.

    ``H_B = T_K o (C(w) H)`` is the band of the windowed channel and the noise
    term is coloured by the window: ``rho C(w) C(w)^H``.
    """
    h_f = np.asarray(h_f)
    n = h_f.shape[0]
    c = circulant_of_window(w)
    h_b = band_mask(n, params.k) * (c @ h_f)
    gram = h_b @ h_b.conj().T + params.rho * (c @ c.conj().T)
    return h_b.conj().T @ linear_solve_hermitian(gram, y_w)


def detect_and_count(x_tilde, x_true):
    """Return ``(decisions, symbol_errors)`` for nearest-neighbour QPSK detection."""
    x_tilde = np.asarray(x_tilde)
    x_true = np.asarray(x_true)
    if x_tilde.shape != x_true.shape:
        raise ValueError("soft decisions and reference differ in length")
    decisions = qpsk_indices(x_tilde)
    return decisions, int(np.count_nonzero(decisions != qpsk_indices(x_true)))


def circulant_stack(w):
    """``C(w_b)`` for every row of ``w``; ``C[i, k] = fft(w)[(i - k) mod n] / n``."""
    w = np.asarray(w, dtype=np.complex128)
    n = w.shape[-1]
    idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
    return (np.fft.fft(w, axis=-1) / n)[..., idx]


def banded_mmse_windowed_batch(y, h_f, w, params):
    """:func:`banded_mmse_windowed` over stacks, taking the *unwindowed* blocks ``y[b]``.

    Returns soft decisions of shape ``(blocks, n)``.
    """
    y = np.asarray(y, dtype=np.complex128)
    h_f = np.asarray(h_f, dtype=np.complex128)
    w = np.asarray(w, dtype=np.complex128)
    n = y.shape[-1]
    # C(w) X = F (w * F^H X), column by column
    cx = np.fft.fft(w[:, :, None] * np.fft.ifft(h_f, axis=1, norm="ortho"), axis=1, norm="ortho")
    h_b = band_mask(n, params.k) * cx
    y_w = np.fft.fft(w * np.fft.ifft(y, axis=1, norm="ortho"), axis=1, norm="ortho")
    gram = h_b @ h_b.conj().transpose(0, 2, 1) + params.rho * circulant_stack(np.abs(w) ** 2)
    sol = np.linalg.solve(gram, y_w[..., None])[..., 0]
    return np.einsum("bji,bj->bi", h_b.conj(), sol)
