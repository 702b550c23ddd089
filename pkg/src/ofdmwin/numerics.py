"""Dense complex linear algebra used by the channel, equalizer and window designers.

Matrices are plain ``numpy`` complex128 arrays. The DFT convention is unitary,
``F[k, l] = exp(-2j*pi*k*l/n) / sqrt(n)``, so ``F^H = F^{-1}``.
"""

from collections import Counter
from contextlib import contextmanager
from functools import lru_cache

import numpy as np
import scipy.linalg

from . import kernels
from ._core_py import CMAC


class NotHermitianError(ValueError):
    pass


class NotPositiveSemidefiniteError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    def __init__(self, message, iterations):
        super().__init__(f"{message} (after {iterations} iterations)")
        self.iterations = iterations


class SingularSystemError(ValueError):
    pass


class Counters:
    """Call and flop tallies keyed by operation name."""

    def __init__(self):
        self.calls = Counter()
        self.flops = Counter()

    def total_flops(self):
        return sum(self.flops.values())


_probes = []


def record(name, flops=0):
    for probe in _probes:
        probe.calls[name] += 1
        probe.flops[name] += int(flops)


@contextmanager
def instrumented():
    """Count calls and flops of instrumented operations inside the block.

    Probes nest; each sees everything recorded while it is open.
    """
    probe = Counters()
    _probes.append(probe)
    try:
        yield probe
    finally:
        _probes.remove(probe)


@lru_cache(maxsize=64)
def _dft(n):
    k = np.arange(n)
    f = np.exp(-2j * np.pi * np.outer(k, k) / n) / np.sqrt(n)
    f.setflags(write=False)
    return f


def dft_matrix(n):
    """Unitary ``n``-point DFT matrix (read-only, cached)."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return _dft(int(n))


@lru_cache(maxsize=64)
def _band(n, k):
    idx = np.arange(n)
    t = (np.abs(idx[:, None] - idx[None, :]) <= (k - 1) // 2).astype(np.float64)
    t.setflags(write=False)
    return t


def band_mask(n, k):
    """0/1 mask with ones where ``|i - j| <= (k - 1) / 2``; no cyclic wrap.

    ``k = 2 n - 1`` gives the full band (all ones).
    """
    if k % 2 == 0:
        raise ValueError(f"band size must be odd, got {k}")
    if not 1 <= k <= 2 * n - 1:
        raise ValueError(f"band size must satisfy 1 <= k <= 2n - 1, got k={k}, n={n}")
    return _band(int(n), int(k))


def circulant_of_window(w):
    """``C(w) = F diag(w) F^H``: frequency-domain view of time-domain windowing."""
    w = np.asarray(w, dtype=np.complex128)
    f = dft_matrix(w.size)
    return (f * w) @ f.conj().T


def hermitian_defect(a):
    a = np.asarray(a)
    return np.max(np.abs(a - a.conj().T)) if a.size else 0.0


def check_hermitian(a, rtol=1e-12):
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NotHermitianError(f"expected a square matrix, got shape {a.shape}")
    scale = np.linalg.norm(a)
    if hermitian_defect(a) > rtol * max(scale, np.finfo(float).tiny):
        raise NotHermitianError(
            f"matrix is not Hermitian: defect {hermitian_defect(a):.3e} vs ||A||_F {scale:.3e}"
        )


def hermitian_eig_full(a, method="lapack", tol=1e-14, max_sweeps=50):
    """Full eigendecomposition of a Hermitian matrix, eigenvalues descending.

    Parameters
    ----------
    a : array_like
        Hermitian matrix.
    method : {"lapack", "jacobi"}
        ``"lapack"`` uses Householder tridiagonalisation (``numpy.linalg.eigh``);
        ``"jacobi"`` runs the cyclic Jacobi kernel, which also reports a
        measured flop count through :func:`instrumented`.

    Returns
    -------
    eigenvalues : ndarray, shape (n,)
        Real, sorted descending.
    eigenvectors : ndarray, shape (n, n)
        Orthonormal columns matching ``eigenvalues``.
    """
    a = np.asarray(a, dtype=np.complex128)
    check_hermitian(a, rtol=1e-10)
    a = 0.5 * (a + a.conj().T)
    n = a.shape[0]
    if method == "jacobi":
        lam, vec, _, sweeps, flops = kernels.jacobi_eigh(a, tol, max_sweeps)
        record("hermitian_eig_full", flops)
        if sweeps > max_sweeps:
            raise ConvergenceError("Jacobi eigensolver did not converge", max_sweeps)
    elif method == "lapack":
        try:
            lam, vec = np.linalg.eigh(a)
        except np.linalg.LinAlgError as exc:
            raise ConvergenceError(f"eigh failed: {exc}", 30 * n) from exc
        # zheevd operation count with eigenvectors, dominant terms
        record("hermitian_eig_full", (4 * 16 // 3 + 4 * 9) * n**3)
    else:
        raise ValueError(f"unknown method {method!r}")
    order = np.argsort(lam)[::-1]
    return lam[order], vec[:, order]


def hermitian_eig_batch(a):
    """:func:`hermitian_eig_full` (LAPACK route) over a stack ``a[b]``, eigenvalues descending."""
    a = np.asarray(a, dtype=np.complex128)
    scale = np.linalg.norm(a, axis=(1, 2))
    defect = np.max(np.abs(a - a.conj().transpose(0, 2, 1)), axis=(1, 2))
    if np.any(defect > 1e-10 * np.maximum(scale, np.finfo(float).tiny)):
        raise NotHermitianError("stack contains a non-Hermitian matrix")
    try:
        lam, vec = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"eigh failed: {exc}", 30 * a.shape[1]) from exc
    n = a.shape[1]
    for _ in range(a.shape[0]):
        record("hermitian_eig_full", (4 * 16 // 3 + 4 * 9) * n**3)
    return lam[:, ::-1], vec[:, :, ::-1]


def dominant_eigvec(a, method="lapack"):
    lam, vec = hermitian_eig_full(a, method=method)
    return lam[0], vec[:, 0]


def default_floor(a):
    a = np.asarray(a)
    n = a.shape[0]
    return 1e-12 * abs(np.trace(a).real) / n


def hermitian_psd_inv_sqrt(a, floor=None):
    """``A^{-1/2}`` with eigenvalues clamped below at ``floor`` before inversion.

    Diagonal inputs skip the eigendecomposition.
    """
    a = np.asarray(a, dtype=np.complex128)
    check_hermitian(a, rtol=1e-10)
    if floor is None:
        floor = default_floor(a)
    scale = np.linalg.norm(a)
    if np.count_nonzero(a - np.diag(np.diag(a))) == 0:
        lam = np.diag(a).real
        if lam.min(initial=0.0) < -1e-8 * scale:
            raise NotPositiveSemidefiniteError(f"negative eigenvalue {lam.min():.3e}")
        return np.diag(1.0 / np.sqrt(np.maximum(lam, floor))).astype(np.complex128)
    lam, vec = hermitian_eig_full(a)
    if lam[-1] < -1e-8 * scale:
        raise NotPositiveSemidefiniteError(f"negative eigenvalue {lam[-1]:.3e}")
    return (vec / np.sqrt(np.maximum(lam, floor))) @ vec.conj().T


def linear_solve_hermitian(a, b):
    """Solve ``A X = B`` for Hermitian positive definite ``A`` via Cholesky."""
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    try:
        factor = scipy.linalg.cho_factor(a, lower=True, check_finite=True)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(f"matrix is not positive definite: {exc}") from exc
    x = scipy.linalg.cho_solve(factor, b, check_finite=False)
    resid = a @ x - b
    if np.linalg.norm(resid) > 1e-9 * np.linalg.norm(b):
        x = x - scipy.linalg.cho_solve(factor, resid, check_finite=False)
        resid = a @ x - b
    # backward error bound; beyond this the matrix is numerically singular
    if np.linalg.norm(resid) > 1e-8 * (np.linalg.norm(a) * np.linalg.norm(x) + np.linalg.norm(b)):
        raise SingularSystemError(f"ill-conditioned system, residual {np.linalg.norm(resid):.3e}")
    return x


def alignment(u, v):
    """``|<u/||u||, v/||v||>|^2``; 1 for parallel vectors regardless of phase."""
    u = np.asarray(u)
    v = np.asarray(v)
    return float(abs(np.vdot(u, v)) ** 2 / (np.vdot(u, u).real * np.vdot(v, v).real))
