"""Compare the compiled kernels with the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5] [--n 16]

Prints one line per kernel with the best wall time of each backend and the
speed-up. Both backends are imported directly, so the environment switch
that selects the runtime backend does not matter here.
"""

import argparse
import sys
import timeit

import numpy as np

from ofdmwin import _core_py
from ofdmwin.window_design import tap_kernel

try:
    from ofdmwin import _core
except ImportError:
    _core = None


def _complex(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def cases(n, rng):
    l, k, blocks = 3, 3, 2000
    taps = np.ascontiguousarray(_complex(rng, (l, n)))
    taps_b = np.ascontiguousarray(_complex(rng, (blocks, l, n)))
    kappa = tap_kernel(n, k, l)
    herm = _complex(rng, (n, n))
    herm = herm + herm.conj().T
    r = _complex(rng, (blocks, n, n))
    r = np.ascontiguousarray(r @ r.conj().transpose(0, 2, 1))
    lam = rng.uniform(1, 2, (blocks, n))
    gammas = 1.0 / np.arange(1, blocks + 1)
    v0 = np.ones(n, dtype=complex) / np.sqrt(n)
    alpha = rng.uniform(0, 2 * np.pi, 32)
    phase = rng.uniform(0, 2 * np.pi, 32)
    x = _complex(rng, (blocks, n, n))
    return {
        "tap_correlation": lambda m: m.tap_correlation(taps, kappa, np.zeros((n, n), complex), 0.9),
        f"tap_correlation_batch[{blocks}]": lambda m: m.tap_correlation_batch(taps_b, kappa),
        "jacobi_eigh": lambda m: m.jacobi_eigh(herm),
        f"sos_process[{blocks * n}]": lambda m: m.sos_process(1e-3, alpha, phase, 0.1, 0, blocks * n),
        f"ewma[{blocks}]": lambda m: m.ewma(x, 0.999),
        f"oja_run[{blocks}]": lambda m: m.oja_run(r, lam, gammas, v0),
    }


def best_time(fn, repeat):
    number = 1
    while timeit.timeit(fn, number=number) < 0.05 and number < 10_000:
        number *= 4
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--n", type=int, default=16, help="subcarriers")
    args = ap.parse_args(argv)
    if _core is None:
        print("compiled extension not built; run `pip install -e . --no-build-isolation`", file=sys.stderr)
        return 1
    rng = np.random.default_rng(0)
    print(f"{'kernel':<28}{'cython':>12}{'python':>12}{'speed-up':>10}   (n={args.n})")
    for name, call in cases(args.n, rng).items():
        tc = best_time(lambda: call(_core), args.repeat)
        tp = best_time(lambda: call(_core_py), args.repeat)
        print(f"{name:<28}{tc * 1e6:>10.1f}us{tp * 1e6:>10.1f}us{tp / tc:>9.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
