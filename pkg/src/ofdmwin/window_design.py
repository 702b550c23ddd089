"""Receiver window designers.

All designers work with the operand pair ``(R, Lambda)``: for any window
``w`` the in-band signal power of the windowed channel is ``w^H R w`` and the
out-of-band interference plus noise power is ``w^H (Lambda - R) w``. With
``C = F conj(H)`` and ``f_n`` the n-th row of the DFT matrix,

    R      = sum_n D(conj f_n) C D(T_n) C^H D(f_n)
    Lambda = D(C C^H) + sigma_z2 I

where ``T_n`` is the n-th row of the band mask. ``Lambda`` is diagonal, so
whitening by ``Lambda^{-1/2}`` is entry-wise and the SINR-optimal window is
``Lambda^{-1/2}`` times the dominant eigenvector of
``Q = Lambda^{-1/2} R Lambda^{-1/2}``.

Three routes build ``R`` and must agree to rounding:

``dense``
    any frequency-domain matrix, ``O(K N^3)``.
``taps``
    time-domain tap gains of a channel with ``L`` taps, ``O(L^2 N^2)``.
``literal``
    keeps the ``N`` accumulators ``B_n`` explicitly; reference only.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import kernels
from .channel import ChannelRealization
from .numerics import (
    CMAC,
    band_mask,
    circulant_of_window,
    dft_matrix,
    hermitian_eig_batch,
    hermitian_eig_full,
    record,
)


@dataclass(frozen=True)
class SinrOperands:
    r: np.ndarray
    lam: np.ndarray  # diagonal of Lambda, real

    @property
    def lam_matrix(self):
        return np.diag(self.lam).astype(np.complex128)

    def signal_power(self, w):
        return float(np.vdot(w, self.r @ w).real)

    def interference_noise_power(self, w):
        return float(np.vdot(w, self.lam * w).real) - self.signal_power(w)


@dataclass
class WindowDesign:
    w: np.ndarray
    method: str
    block: int = -1
    eigenvalue: float = float("nan")

    def __post_init__(self):
        if not np.all(np.isfinite(self.w)) or not np.any(self.w):
            raise ValueError("window must be finite and not identically zero")


def rectangular_window(n):
    return WindowDesign(np.ones(n, dtype=np.complex128), "rect")


# ---------------------------------------------------------------------------
# brute-force SINR
# ---------------------------------------------------------------------------


def sinr_powers(w, h, sigma_z2, k):
    """``(P_s, P_ni)`` from Frobenius norms of the masked windowed channel."""
    h = np.asarray(h)
    t = band_mask(h.shape[0], k)
    c = circulant_of_window(w)
    x = c @ h
    p_s = float(np.sum(np.abs(t * x) ** 2))
    p_ni = float(np.sum(np.abs((1.0 - t) * x) ** 2) + sigma_z2 * np.sum(np.abs(c) ** 2))
    return p_s, p_ni


def sinr_raw(w, h, sigma_z2, k):
    """``P_s / P_ni``; ``inf`` when there is neither noise nor out-of-band leakage."""
    w = np.asarray(w, dtype=np.complex128)
    if not np.any(w):
        raise ValueError("window must be non-zero")
    p_s, p_ni = sinr_powers(w, h, sigma_z2, k)
    # leakage at the rounding level of the circulant counts as none
    if p_ni <= 1e-24 * p_s:
        return float("inf")
    return p_s / p_ni


# ---------------------------------------------------------------------------
# operands
# ---------------------------------------------------------------------------


@lru_cache(maxsize=32)
def _band_columns(n, k):
    half = (k - 1) // 2
    cols = np.arange(n)[:, None] + np.arange(-half, half + 1)[None, :]
    valid = (cols >= 0) & (cols < n)
    return np.clip(cols, 0, n - 1), valid


def _dense_r(c, k):
    n = c.shape[0]
    f = dft_matrix(n)
    cols, valid = _band_columns(n, k)
    # m[n, i, j] = conj(F[n, i]) * C[i, band(n)_j]
    m = f.conj()[:, :, None] * c[:, cols].transpose(1, 0, 2) * valid[:, None, :]
    r = np.einsum("nik,njk->ij", m, m.conj(), optimize=True)
    record("operands_dense", 2 * CMAC * n**3 * k)
    return 0.5 * (r + r.conj().T)


def _c_matrix(h):
    return dft_matrix(h.shape[0]) @ np.asarray(h, dtype=np.complex128).conj()


def build_operands(h, sigma_z2, k):
    """``(R, Lambda)`` for a frequency-domain channel matrix (dense route)."""
    h = np.asarray(h, dtype=np.complex128)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError(f"expected a square channel matrix, got {h.shape}")
    if sigma_z2 < 0:
        raise ValueError("sigma_z2 must be non-negative")
    band_mask(h.shape[0], k)
    c = _c_matrix(h)
    lam = np.sum(np.abs(c) ** 2, axis=1) + sigma_z2
    return SinrOperands(_dense_r(c, k), lam)


@lru_cache(maxsize=32)
def tap_kernel(n, k, l):
    """Kernel ``kappa[d, s]`` such that ``R[i, j] = sum_{p,q} conj(h_p[i]) h_q[j] kappa[(i-j) % n, p-q+l-1]``.

    ``kappa[d, s] = n^-2 sum_n sum_{b in band(n)} exp(2j pi ((n-b) d + b s) / n)``
    """
    cols, valid = _band_columns(n, k)
    rows = np.repeat(np.arange(n)[:, None], cols.shape[1], axis=1)
    pn, pb = rows[valid], cols[valid]
    d = np.arange(n)
    s = np.arange(-(l - 1), l)
    phase = (pn - pb)[:, None, None] * d[None, :, None] + pb[:, None, None] * s[None, None, :]
    kappa = np.exp(2j * np.pi * phase / n).sum(axis=0) / n**2
    return np.ascontiguousarray(kappa)


def _accumulate_taps(out, taps, k, lam):
    taps = np.ascontiguousarray(taps, dtype=np.complex128)
    l, n = taps.shape
    flops = kernels.tap_correlation(taps, tap_kernel(n, k, l), out, lam)
    record("operands_taps", flops)
    return np.sum(np.abs(taps) ** 2, axis=0)


def build_operands_from_taps(taps, sigma_z2, k):
    """``(R, Lambda)`` from time-domain tap gains ``taps[l, n]`` (structured route)."""
    taps = np.asarray(taps, dtype=np.complex128)
    n = taps.shape[1]
    band_mask(n, k)
    r = np.zeros((n, n), dtype=np.complex128)
    power = _accumulate_taps(r, taps, k, 0.0)
    return SinrOperands(r, power + sigma_z2)


def average_operands(operands):
    operands = list(operands)
    if not operands:
        raise ValueError("ensemble must be non-empty")
    r = sum(op.r for op in operands) / len(operands)
    lam = sum(op.lam for op in operands) / len(operands)
    return SinrOperands(r, lam)


# ---------------------------------------------------------------------------
# batch designers
# ---------------------------------------------------------------------------


def whitened(operands):
    s = 1.0 / np.sqrt(operands.lam)
    return s[:, None] * operands.r * s[None, :], s


def dominant_direction(kappa, vecs, ref, rtol=1e-9):
    """Leading eigenvector, with ties broken towards ``ref``.

    Parameters
    ----------
    kappa : ndarray, shape (..., n)
        Eigenvalues in descending order.
    vecs : ndarray, shape (..., n, n)
        Matching eigenvectors in columns.
    ref : ndarray, shape (..., n)
        Preferred direction. When the leading eigenvalue is repeated to within
        ``rtol`` the result is the normalised projection of ``ref`` onto the
        tied eigenspace, so a flat objective does not hand back an arbitrary
        basis vector.
    """
    scale = np.maximum(np.abs(kappa).max(axis=-1, keepdims=True), np.finfo(float).tiny)
    tied = kappa >= kappa[..., :1] - rtol * scale
    coef = np.einsum("...ij,...i->...j", vecs.conj(), ref) * tied
    proj = np.einsum("...ij,...j->...i", vecs, coef)
    norm = np.linalg.norm(proj, axis=-1, keepdims=True)
    usable = (tied.sum(axis=-1, keepdims=True) > 1) & (norm > 1e-8 * np.linalg.norm(ref, axis=-1, keepdims=True))
    return np.where(usable, proj / np.where(usable, norm, 1.0), vecs[..., 0])


def design_from_operands(operands, method, block=-1, eig_method="lapack"):
    """Dominant eigenvector of the whitened operand, mapped back by ``Lambda^{-1/2}``.

    If every window in a subspace is equally good, the one closest to the
    rectangular window is returned.
    """
    if np.any(operands.lam <= 0):
        raise ValueError("Lambda must be positive definite; use sigma_z2 > 0")
    q, s = whitened(operands)
    kappa, vecs = hermitian_eig_full(q, method=eig_method)
    return WindowDesign(s * dominant_direction(kappa, vecs, 1.0 / s), method, block, float(kappa[0]))


def max_sinr_window(h, sigma_z2, k, block=-1):
    """Per-realisation SINR-optimal window."""
    return design_from_operands(build_operands(h, sigma_z2, k), "max_sinr", block)


def max_avg_sinr_window(h_ensemble, sigma_z2, k):
    """Window maximising the ratio of ensemble-averaged signal and interference-plus-noise powers."""
    h_ensemble = list(h_ensemble)
    if not h_ensemble:
        raise ValueError("ensemble must be non-empty")
    ops = average_operands(build_operands(h, sigma_z2, k) for h in h_ensemble)
    return design_from_operands(ops, "max_avg_sinr")


def pencil_eigenvalue(kappa):
    """Map a whitened eigenvalue ``kappa`` to the SINR ``eta = kappa / (1 - kappa)``."""
    return kappa / (1.0 - kappa)


# ---------------------------------------------------------------------------
# step sizes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PowerLawSchedule:
    """``gamma_m = coef * n**n_power / m**m_power``."""

    coef: float = 1.0
    n_power: float = 4.0
    m_power: float = 1.0

    def __call__(self, m, n):
        if m < 1:
            raise ValueError(f"block index must be >= 1, got {m}")
        return self.coef * float(n) ** self.n_power / float(m) ** self.m_power

    def convergence_conditions(self):
        """Truth values of ``gamma >= 0``, ``sum gamma^2 < inf``, ``sum gamma = inf`` (p-series test)."""
        return {
            "nonnegative": self.coef >= 0,
            "square_summable": self.coef == 0 or 2 * self.m_power > 1,
            "divergent_sum": self.coef > 0 and self.m_power <= 1,
        }

    def satisfies_conditions(self):
        return all(self.convergence_conditions().values())


DEFAULT_SCHEDULE = PowerLawSchedule()


def gamma_default(m, n):
    """``N^4 / m``."""
    return DEFAULT_SCHEDULE(m, n)


# ---------------------------------------------------------------------------
# adaptive tracker
# ---------------------------------------------------------------------------


@dataclass
class AdaptiveState:
    """Exponentially weighted accumulators and the eigenvector iterate.

    ``r_bar`` and ``lam_bar`` omit the ``1/m`` normalisation; ``Q`` is
    invariant to a common scale of both. ``b`` holds the per-row accumulators
    ``B_n`` and is only maintained when ``literal`` is set.
    """

    n: int
    lambda_ff: float
    gamma_schedule: object
    r_bar: np.ndarray
    lam_bar: np.ndarray
    v_bar: np.ndarray
    m: int = 0
    literal: bool = False
    b: np.ndarray = field(default=None, repr=False)

    def copy(self):
        return AdaptiveState(
            self.n, self.lambda_ff, self.gamma_schedule, self.r_bar.copy(), self.lam_bar.copy(),
            self.v_bar.copy(), self.m, self.literal, None if self.b is None else self.b.copy(),
        )

    @property
    def operands(self):
        return SinrOperands(self.r_bar, self.lam_bar)

    def whitening(self):
        return 1.0 / np.sqrt(np.maximum(self.lam_bar, 1e-12 * self.lam_bar.mean()))

    def q_matrix(self):
        s = self.whitening()
        return s[:, None] * self.r_bar * s[None, :]


def adaptive_init(n, lambda_ff, gamma_schedule=gamma_default, literal=False):
    if not 0.0 < lambda_ff <= 1.0:
        raise ValueError(f"forgetting factor must lie in (0, 1], got {lambda_ff}")
    return AdaptiveState(
        n=n,
        lambda_ff=float(lambda_ff),
        gamma_schedule=gamma_schedule,
        r_bar=np.zeros((n, n), dtype=np.complex128),
        lam_bar=np.zeros(n),
        v_bar=np.ones(n, dtype=np.complex128) / np.sqrt(n),
        literal=literal,
        b=np.zeros((n, n, n), dtype=np.complex128) if literal else None,
    )


def _accumulate_literal(state, c, k):
    n = state.n
    t = band_mask(n, k)
    f = dft_matrix(n)
    for row in range(n):
        state.b[row] = state.lambda_ff * state.b[row] + (c * t[row]) @ c.conj().T
    r = np.einsum("ni,nij,nj->ij", f.conj(), state.b, f)
    state.r_bar = 0.5 * (r + r.conj().T)
    record("operands_literal", CMAC * n**4 + 2 * CMAC * n**3)


def adaptive_update(state, h_tilde, sigma_z2, k, path="auto"):
    """One block of the adaptive windowing recursion; mutates ``state``.

    ``h_tilde`` is either a frequency-domain channel estimate (``N x N``) or a
    :class:`~ofdmwin.channel.ChannelRealization`, whose tap gains enable the
    ``O(L^2 N^2)`` route. ``path`` forces ``"taps"``, ``"dense"`` or
    ``"literal"``. No eigendecomposition is performed.
    """
    n = state.n
    lam_ff = state.lambda_ff
    if state.literal:
        path = "literal"
    elif path == "auto":
        path = "taps" if isinstance(h_tilde, ChannelRealization) else "dense"
    if path == "taps":
        if not isinstance(h_tilde, ChannelRealization):
            raise TypeError("the taps route needs a ChannelRealization")
        power = _accumulate_taps(state.r_bar, h_tilde.taps, k, lam_ff)
    else:
        h = h_tilde.h_f if isinstance(h_tilde, ChannelRealization) else np.asarray(h_tilde)
        if h.shape != (n, n):
            raise ValueError(f"channel shape {h.shape} does not match state size {n}")
        c = _c_matrix(h)
        power = np.sum(np.abs(c) ** 2, axis=1)
        if path == "literal":
            if state.b is None:
                raise ValueError("state was not initialised with literal=True")
            _accumulate_literal(state, c, k)
        elif path == "dense":
            state.r_bar *= lam_ff
            state.r_bar += _dense_r(c, k)
        else:
            raise ValueError(f"unknown path {path!r}")
    state.lam_bar = lam_ff * state.lam_bar + power + sigma_z2
    state.m += 1

    s = state.whitening()
    qv = s * (state.r_bar @ (s * state.v_bar))
    v = state.v_bar + state.gamma_schedule(state.m, n) * qv
    norm = np.linalg.norm(v)
    if not np.isfinite(norm) or norm == 0.0:
        raise FloatingPointError("non-finite eigenvector update; Lambda_bar is degenerate")
    state.v_bar = v / norm
    record("oja_step", CMAC * (n * n + 4 * n))
    return WindowDesign(s * state.v_bar, "adaptive", state.m)


def ground_truth_window(state, eig_method="lapack"):
    """Window from the exact dominant eigenvector of the current ``Q``."""
    if state.m < 1:
        raise ValueError("no blocks accumulated yet")
    return design_from_operands(state.operands, "ground_truth", state.m, eig_method)


def ground_truth_eigvec(state, eig_method="lapack"):
    kappa, vecs = hermitian_eig_full(state.q_matrix(), method=eig_method)
    return dominant_direction(kappa, vecs, np.sqrt(state.lam_bar)), float(kappa[0])


# ---------------------------------------------------------------------------
# batch form of the adaptive recursion
# ---------------------------------------------------------------------------


@dataclass
class OperandSequence:
    """Per-block ``R(m)`` and ``diag(C C^H)`` for a run of channel estimates."""

    r: np.ndarray  # (blocks, n, n)
    power: np.ndarray  # (blocks, n)

    @classmethod
    def from_taps(cls, taps, k):
        """From tap gains ``taps[b, l, n]`` (structured route)."""
        taps = np.ascontiguousarray(taps, dtype=np.complex128)
        nb, l, n = taps.shape
        band_mask(n, k)
        r, flops = kernels.tap_correlation_batch(taps, tap_kernel(n, k, l))
        record("operands_taps", flops)
        return cls(r, np.sum(np.abs(taps) ** 2, axis=1))

    @classmethod
    def from_matrices(cls, h, k, chunk=256):
        """From frequency-domain estimates ``h[b]`` (dense route)."""
        h = np.asarray(h, dtype=np.complex128)
        nb, n, _ = h.shape
        band_mask(n, k)
        f = dft_matrix(n)
        cols, valid = _band_columns(n, k)
        c = f @ h.conj()
        r = np.empty((nb, n, n), dtype=np.complex128)
        for lo in range(0, nb, chunk):
            cb = c[lo:lo + chunk]
            m = f.conj()[None, :, :, None] * cb[:, :, cols].transpose(0, 2, 1, 3) * valid[None, :, None, :]
            rb = np.einsum("bnik,bnjk->bij", m, m.conj(), optimize=True)
            r[lo:lo + chunk] = 0.5 * (rb + rb.conj().transpose(0, 2, 1))
        record("operands_dense", 2 * CMAC * nb * n**3 * k)
        return cls(r, np.sum(np.abs(c) ** 2, axis=2))

    def __len__(self):
        return self.r.shape[0]

    def operands(self, b, sigma_z2):
        return SinrOperands(self.r[b], self.power[b] + sigma_z2)

    def mean_operands(self, sigma_z2):
        return SinrOperands(self.r.mean(axis=0), self.power.mean(axis=0) + sigma_z2)


@dataclass
class AdaptiveTrace:
    """Accumulators and iterates after each block of an :func:`adaptive_run`."""

    first_block: int  # 1-based index of the first row
    r_bar: np.ndarray
    lam_bar: np.ndarray
    v_bar: np.ndarray

    @property
    def windows(self):
        return self.v_bar / np.sqrt(self.lam_bar)

    def q_matrices(self):
        s = 1.0 / np.sqrt(self.lam_bar)
        return s[:, :, None] * self.r_bar * s[:, None, :]

    def ground_truth(self):
        """Dominant eigenpairs of every ``Q(m)`` in the trace: ``(kappa, v_star)``."""
        kappa, vecs = hermitian_eig_batch(self.q_matrices())
        return kappa[:, 0], dominant_direction(kappa, vecs, np.sqrt(self.lam_bar))


def adaptive_run(state, seq, sigma_z2):
    """Apply :func:`adaptive_update` for every block of ``seq``; mutates ``state``.

    The accumulators are linear recursions and are evaluated for the whole
    run at once; only the normalised eigenvector step is sequential.
    """
    nb = len(seq)
    lam = state.lambda_ff
    if seq.r.shape[1] != state.n:
        raise ValueError("operand sequence does not match state size")
    if state.literal:
        raise ValueError("literal accumulators are only supported by adaptive_update")
    decay = lam ** np.arange(1, nb + 1)
    r_bar, flops_r = kernels.ewma(np.ascontiguousarray(seq.r), lam)
    lam_bar, flops_l = kernels.ewma(np.ascontiguousarray(seq.power + sigma_z2), lam)
    if state.m > 0:
        r_bar += decay[:, None, None] * state.r_bar
        lam_bar += decay[:, None] * state.lam_bar
    m = state.m + np.arange(1, nb + 1)
    gammas = np.array([state.gamma_schedule(int(i), state.n) for i in m], dtype=np.float64)
    v, flops_v = kernels.oja_run(r_bar, lam_bar, gammas, state.v_bar)
    record("accumulate", flops_r + flops_l)
    record("oja_step", flops_v)
    if not np.all(np.isfinite(v)):
        raise FloatingPointError("non-finite eigenvector update; Lambda_bar is degenerate")
    trace = AdaptiveTrace(state.m + 1, r_bar, lam_bar, v)
    state.r_bar = r_bar[-1].copy()
    state.lam_bar = lam_bar[-1].copy()
    state.v_bar = v[-1].copy()
    state.m += nb
    return trace
