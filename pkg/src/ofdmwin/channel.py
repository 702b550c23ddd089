"""Doubly selective tapped-delay-line channels with Jakes-correlated taps.

Doppler convention: by default ``f_d`` is the maximum Doppler spread
normalised to one OFDM block of ``n`` samples, so each tap evolves with a
per-sample normalised Doppler of ``f_d / n``. ``doppler_norm="sample"``
reinterprets ``f_d`` as already normalised to the sample rate. Blocks are
indexed from 0; block ``m`` covers samples ``m*n .. m*n + n - 1``. No cyclic prefix is
simulated: the circular convolution matrix model is used directly.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .numerics import dft_matrix, record


@dataclass(frozen=True)
class ChannelParams:
    n: int = 16
    l: int = 3
    pdp_decay: float = 1.0
    f_d: float = 0.01
    seed: int = 0
    n_sinusoids: int = 32
    doppler_norm: str = "block"

    def __post_init__(self):
        if self.doppler_norm not in ("block", "sample"):
            raise ValueError(f"doppler_norm must be 'block' or 'sample', got {self.doppler_norm!r}")
        if self.l < 1 or self.l > self.n:
            raise ValueError(f"tap count must satisfy 1 <= l <= n, got l={self.l}")
        if not 0.0 <= self.f_d < 0.5:
            raise ValueError(f"f_d must lie in [0, 0.5), got {self.f_d}")
        if self.n_sinusoids < 1:
            raise ValueError("n_sinusoids must be >= 1")

    @property
    def pdp(self):
        """Tap powers ``p_l ~ exp(-pdp_decay * l)``, normalised to sum to one."""
        p = np.exp(-self.pdp_decay * np.arange(self.l))
        return p / p.sum()

    @property
    def nu(self):
        """Per-sample normalised Doppler."""
        return self.f_d / self.n if self.doppler_norm == "block" else self.f_d

    def with_doppler(self, f_d):
        return ChannelParams(self.n, self.l, self.pdp_decay, f_d, self.seed, self.n_sinusoids, self.doppler_norm)


@dataclass(frozen=True)
class CsiErrorModel:
    sigma_o2: float = 0.0
    doppler_err_max: float = 0.0

    def __post_init__(self):
        if self.sigma_o2 < 0 or self.doppler_err_max < 0:
            raise ValueError("CSI error parameters must be non-negative")


@dataclass
class TapProcesses:
    """Per-tap complex gains for a run of consecutive blocks.

    ``gains[l, t]`` is tap ``l`` at absolute sample ``t``.
    """

    n: int
    gains: np.ndarray
    f_d: np.ndarray = field(default=None)

    @property
    def n_blocks(self):
        return self.gains.shape[1] // self.n

    def block_taps(self, m):
        if not 0 <= m < self.n_blocks:
            raise IndexError(f"block {m} outside generated range 0..{self.n_blocks - 1}")
        return self.gains[:, m * self.n:(m + 1) * self.n]


@dataclass(frozen=True)
class ChannelRealization:
    block_index: int
    taps: np.ndarray
    h_t: np.ndarray
    h_f: np.ndarray


def _rng(seed_or_rng):
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.default_rng(seed_or_rng)


def generate_tap_processes(params, n_blocks, rng=None, start_sample=0):
    """Independent sum-of-sinusoids Jakes processes, one per tap.

    Each tap is ``sqrt(p_l / M) * sum_k exp(j(2 pi nu t cos a_k + phi_k))``
    with ``nu = params.nu`` and ``M`` oscillators whose arrival angles and
    phases are drawn uniformly per realization. Its autocorrelation averaged
    over realizations is ``p_l * J0(2 pi nu tau)``.
    """
    if n_blocks < 1:
        raise ValueError("n_blocks must be >= 1")
    rng = _rng(params.seed if rng is None else rng)
    nu = params.nu
    n_samples = n_blocks * params.n
    m = params.n_sinusoids
    gains = np.empty((params.l, n_samples), dtype=np.complex128)
    for tap, power in enumerate(params.pdp):
        alpha = rng.uniform(0.0, 2.0 * np.pi, m)
        phase = rng.uniform(0.0, 2.0 * np.pi, m)
        gains[tap], flops = kernels.sos_process(
            nu, alpha, phase, float(np.sqrt(power / m)), int(start_sample), n_samples
        )
        record("sos_process", flops)
    return TapProcesses(params.n, gains, np.full(n_blocks, params.f_d))


def concatenate_processes(first, second):
    """Join two runs in time; the second starts at the block after the first ends."""
    if first.n != second.n or first.gains.shape[0] != second.gains.shape[0]:
        raise ValueError("processes must share block size and tap count")
    return TapProcesses(
        first.n,
        np.concatenate([first.gains, second.gains], axis=1),
        np.concatenate([first.f_d, second.f_d]),
    )


def time_domain_matrix(taps):
    """Circular convolution matrix with ``H_t[n, (n - l) mod N] = taps[l, n]``."""
    l, n = taps.shape
    h_t = np.zeros((n, n), dtype=np.complex128)
    rows = np.arange(n)
    for tap in range(l):
        h_t[rows, (rows - tap) % n] += taps[tap]
    return h_t


def frequency_domain_matrix(h_t):
    f = dft_matrix(h_t.shape[0])
    return f @ h_t @ f.conj().T


def realize_block(processes, m):
    taps = processes.block_taps(m).copy()
    h_t = time_domain_matrix(taps)
    return ChannelRealization(m, taps, h_t, frequency_domain_matrix(h_t))


def block_taps_stack(processes):
    """All per-block tap matrices as one array ``taps[b, l, n]``."""
    l = processes.gains.shape[0]
    nb, n = processes.n_blocks, processes.n
    return np.ascontiguousarray(processes.gains[:, :nb * n].reshape(l, nb, n).transpose(1, 0, 2))


def frequency_domain_stack(taps):
    """Frequency-domain matrices for a stack ``taps[b, l, n]``."""
    nb, l, n = taps.shape
    h_t = np.zeros((nb, n, n), dtype=np.complex128)
    rows = np.arange(n)
    for tap in range(l):
        h_t[:, rows, (rows - tap) % n] += taps[:, tap, :]
    f = dft_matrix(n)
    return f @ h_t @ f.conj().T


def complex_gaussian(rng, shape, variance=1.0):
    """Circular complex Gaussian samples with ``E|z|^2 = variance``."""
    scale = np.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def corrupt_csi(h, err, rng):
    """``H + O`` with i.i.d. ``CN(0, sigma_o2)`` entries in ``O``."""
    h = np.asarray(h, dtype=np.complex128)
    if err.sigma_o2 == 0:
        return h.copy()
    return h + complex_gaussian(rng, h.shape, err.sigma_o2)


def perturb_doppler(f_d, err, rng):
    """``f_d + e`` with ``e ~ U(0, doppler_err_max)``."""
    if err.doppler_err_max == 0:
        return f_d
    return f_d + rng.uniform(0.0, err.doppler_err_max)


def sample_channel_ensemble(params, size, rng):
    """``size`` independent single-block frequency-domain channels drawn from ``params``.

    Used to approximate expectations of channel statistics by ensemble averaging.
    """
    rng = _rng(rng)
    return [realize_block(generate_tap_processes(params, 1, rng), 0).h_f for _ in range(size)]
