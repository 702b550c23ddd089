"""Quick numerical self-checks of the window-design identities.

Each check compares a fast route against a brute-force evaluation on random
channels and returns ``(name, passed, detail)``.
"""

import numpy as np

from .. import channel as ch
from .. import kernels
from .. import _core_py
from .. import window_design as wd
from ..numerics import hermitian_eig_full


def _random_case(rng, n=16, l=3, k=3):
    taps = ch.complex_gaussian(rng, (l, n), 1.0 / l)
    h = ch.frequency_domain_matrix(ch.time_domain_matrix(taps))
    return taps, h, k


def check_power_identities(rng, trials=20):
    """``w^H R w`` and ``w^H (Lambda - R) w`` equal the directly measured powers."""
    worst = 0.0
    for _ in range(trials):
        taps, h, k = _random_case(rng)
        s2 = rng.uniform(0.0, 1.0)
        w = ch.complex_gaussian(rng, h.shape[0])
        ops = wd.build_operands(h, s2, k)
        p_s, p_ni = wd.sinr_powers(w, h, s2, k)
        scale = p_s + p_ni
        worst = max(worst, abs(ops.signal_power(w) - p_s) / scale,
                    abs(ops.interference_noise_power(w) - p_ni) / scale)
    return "power identities", worst < 1e-10, f"max relative error {worst:.2e}"


def check_routes_agree(rng, trials=10):
    """Tap and dense routes build the same operands."""
    worst = 0.0
    for _ in range(trials):
        taps, h, k = _random_case(rng)
        a = wd.build_operands(h, 0.1, k)
        b = wd.build_operands_from_taps(taps, 0.1, k)
        worst = max(worst, np.abs(a.r - b.r).max() / np.abs(a.r).max(), np.abs(a.lam - b.lam).max())
    return "tap and dense routes", worst < 1e-10, f"max deviation {worst:.2e}"


def check_psd(rng, trials=10):
    """``R`` and ``Lambda - R`` are positive semidefinite."""
    lowest = np.inf
    for _ in range(trials):
        _, h, k = _random_case(rng)
        ops = wd.build_operands(h, 0.0, k)
        scale = ops.lam.max()
        lowest = min(lowest, np.linalg.eigvalsh(ops.r).min() / scale,
                     np.linalg.eigvalsh(ops.lam_matrix - ops.r).min() / scale)
    return "positive semidefinite", lowest > -1e-12, f"smallest scaled eigenvalue {lowest:.2e}"


def check_optimality(rng, trials=10, probes=200):
    """The designed window beats random windows and attains ``kappa / (1 - kappa)``."""
    ok = True
    worst = 0.0
    for _ in range(trials):
        _, h, k = _random_case(rng)
        s2 = 0.05
        design = wd.max_sinr_window(h, s2, k)
        best = wd.sinr_raw(design.w, h, s2, k)
        predicted = wd.pencil_eigenvalue(design.eigenvalue)
        worst = max(worst, abs(best - predicted) / predicted)
        for _ in range(probes):
            w = ch.complex_gaussian(rng, h.shape[0])
            ok &= wd.sinr_raw(w, h, s2, k) <= best * (1 + 1e-10)
    return "SINR optimality", bool(ok) and worst < 1e-8, f"eigenvalue mapping error {worst:.2e}"


def check_eigensolvers(rng, trials=5):
    """Jacobi and LAPACK agree on the whitened operand."""
    worst = 0.0
    for _ in range(trials):
        _, h, k = _random_case(rng)
        q, _ = wd.whitened(wd.build_operands(h, 0.1, k))
        a, _ = hermitian_eig_full(q, method="lapack")
        b, _ = hermitian_eig_full(q, method="jacobi")
        worst = max(worst, np.abs(a - b).max())
    return "eigensolvers", worst < 1e-10, f"max eigenvalue gap {worst:.2e}"


def check_recursion_forms(rng, blocks=50):
    """Block-by-block and batched adaptive recursions produce the same iterates."""
    n, k = 16, 3
    proc = ch.generate_tap_processes(ch.ChannelParams(n=n), blocks, rng)
    state = wd.adaptive_init(n, 0.99)
    for m in range(blocks):
        wd.adaptive_update(state, ch.realize_block(proc, m), 0.1, k)
    seq = wd.OperandSequence.from_taps(ch.block_taps_stack(proc), k)
    trace = wd.adaptive_run(wd.adaptive_init(n, 0.99), seq, 0.1)
    dev = np.abs(trace.v_bar[-1] - state.v_bar).max()
    return "recursion forms", dev < 1e-10, f"final iterate deviation {dev:.2e}"


def check_backends(rng):
    """The active kernel backend matches the numpy reference."""
    if kernels.BACKEND == "python":
        return "kernel backends", True, "numpy fallback active; nothing to compare"
    taps = ch.complex_gaussian(rng, (20, 3, 16))
    kappa = wd.tap_kernel(16, 3, 3)
    a, _ = kernels.tap_correlation_batch(taps, kappa)
    b, _ = _core_py.tap_correlation_batch(taps, kappa)
    dev = np.abs(a - b).max()
    return "kernel backends", dev < 1e-12, f"compiled vs numpy deviation {dev:.2e}"


CHECKS = (
    check_power_identities,
    check_routes_agree,
    check_psd,
    check_optimality,
    check_eigensolvers,
    check_recursion_forms,
    check_backends,
)


def run_selftest(seed=0):
    rng = np.random.default_rng(seed)
    return [check(rng) for check in CHECKS]
