"""Monte Carlo drivers for the SER sweep, learning-curve and tracking scenarios.

Every trial draws its own channel, CSI error, bits and noise from a seed
sequence keyed by ``(seed, trial)``. Within a trial all methods and SNR
points share those draws (common random numbers); noise is drawn once at
unit variance and scaled per SNR.
"""

from dataclasses import dataclass

import numpy as np

from .. import channel as ch
from .. import ofdm
from .. import window_design as wd
from ..numerics import hermitian_eig_batch

_STREAMS = ("channel", "csi", "doppler", "ensemble", "bits", "noise")
# spawn key for draws shared by all trials (regime reference windows)
_SHARED_KEY = 2**31 - 1


@dataclass(frozen=True)
class ResultRow:
    scenario: str
    method: str
    snr_db: float
    block: object  # int, or None for run-level summaries
    metric: str
    value: float
    n_trials: int
    stderr: float


def trial_rngs(seed, trial):
    children = np.random.SeedSequence(seed, spawn_key=(trial,)).spawn(len(_STREAMS))
    return {name: np.random.default_rng(s) for name, s in zip(_STREAMS, children)}


def channel_params(cfg, f_d=None):
    return ch.ChannelParams(
        n=cfg.n, l=cfg.l, pdp_decay=cfg.pdp_decay, f_d=cfg.f_d if f_d is None else f_d,
        seed=cfg.seed, n_sinusoids=cfg.n_sinusoids, doppler_norm=cfg.doppler_norm,
    )


def csi_model(cfg):
    if cfg.csi == "perfect":
        return ch.CsiErrorModel()
    return ch.CsiErrorModel(cfg.sigma_o2, cfg.doppler_err_max)


def schedule(cfg):
    return wd.PowerLawSchedule(cfg.gamma_coef, cfg.gamma_n_power, cfg.gamma_m_power)


def simulate_taps(cfg, rng):
    """Tap gains ``taps[b, l, n]`` for one trial, switching Doppler at ``jump_block`` if set."""
    p = channel_params(cfg)
    if cfg.jump_block > 0:
        first = ch.generate_tap_processes(p, cfg.jump_block, rng)
        second = ch.generate_tap_processes(
            p.with_doppler(cfg.f_d_after), cfg.n_blocks - cfg.jump_block, rng,
            start_sample=cfg.jump_block * cfg.n,
        )
        proc = ch.concatenate_processes(first, second)
    else:
        proc = ch.generate_tap_processes(p, cfg.n_blocks, rng)
    return ch.block_taps_stack(proc)


def channel_estimates(cfg, taps, h, rng):
    """Receiver-side estimates and their per-block SINR operands.

    With perfect CSI the operands come from the taps directly; otherwise from
    the corrupted frequency-domain matrices.
    """
    if cfg.csi == "perfect":
        return h, wd.OperandSequence.from_taps(taps, cfg.k)
    h_est = ch.corrupt_csi(h, csi_model(cfg), rng)
    return h_est, wd.OperandSequence.from_matrices(h_est, cfg.k)


def ensemble_operands(cfg, f_d, rng):
    """Operands of ``ensemble_size`` independent model channels at Doppler ``f_d``."""
    p = channel_params(cfg, f_d)
    taps = np.stack([ch.generate_tap_processes(p, 1, rng).gains for _ in range(cfg.ensemble_size)])
    return wd.OperandSequence.from_taps(taps, cfg.k)


def qpsk_blocks(rng, n_blocks, n):
    bits = rng.integers(0, 2, (n_blocks, 2 * n))
    return ofdm.modulate_qpsk(bits.ravel(), n_blocks * n).reshape(n_blocks, n)


def equalize(y, h, w, params, chunk=1024):
    out = np.empty(y.shape, dtype=np.complex128)
    for lo in range(0, len(y), chunk):
        sl = slice(lo, lo + chunk)
        out[sl] = ofdm.banded_mmse_windowed_batch(y[sl], h[sl], w[sl], params)
    return out


def batch_max_sinr(seq, sigma_z2, every=1):
    """SINR-optimal windows, redesigned every ``every`` blocks and held in between."""
    design_at = np.arange(0, len(seq), every)
    lam = seq.power[design_at] + sigma_z2
    s = 1.0 / np.sqrt(lam)
    _, vecs = hermitian_eig_batch(s[:, :, None] * seq.r[design_at] * s[:, None, :])
    return np.repeat(vecs[:, :, 0] * s, every, axis=0)[:len(seq)]


def method_windows(cfg, methods, seq, ens, sigma_z2):
    """Windows ``w[b]`` for each requested method over the whole run."""
    nb, n = seq.power.shape
    out = {}
    trace = None
    for method in methods:
        if method in ("none", "rect"):
            out[method] = np.ones((nb, n), dtype=np.complex128)
        elif method == "max_sinr":
            out[method] = batch_max_sinr(seq, sigma_z2, cfg.max_sinr_every)
        elif method == "max_avg_sinr":
            w = wd.design_from_operands(ens.mean_operands(sigma_z2), method).w
            out[method] = np.broadcast_to(w, (nb, n))
        elif method in ("adaptive", "ground_truth"):
            if trace is None:
                state = wd.adaptive_init(n, cfg.lambda_ff, schedule(cfg))
                trace = wd.adaptive_run(state, seq, sigma_z2)
            if method == "adaptive":
                out[method] = trace.windows
            else:
                out[method] = trace.ground_truth()[1] / np.sqrt(trace.lam_bar)
        else:
            raise ValueError(f"unknown method {method!r}")
    return out


def _mean_se(samples):
    samples = np.asarray(samples, dtype=np.float64)
    mean = samples.mean(axis=0)
    if samples.shape[0] < 2:
        return mean, np.full_like(mean, np.nan)
    return mean, samples.std(axis=0, ddof=1) / np.sqrt(samples.shape[0])


# ---------------------------------------------------------------------------
# SER sweep
# ---------------------------------------------------------------------------


def ser_trial(cfg, trial):
    """Symbol error rate of every method at every SNR for one trial."""
    rng = trial_rngs(cfg.seed, trial)
    nb, n = cfg.n_blocks, cfg.n
    taps = simulate_taps(cfg, rng["channel"])
    h = ch.frequency_domain_stack(taps)
    h_est, seq = channel_estimates(cfg, taps, h, rng["csi"])
    h_eq = h if cfg.eq_csi == "true" else h_est
    x = qpsk_blocks(rng["bits"], nb, n)
    z = ch.complex_gaussian(rng["noise"], (nb, n))
    hx = np.einsum("bij,bj->bi", h, x)
    ens = None
    if "max_avg_sinr" in cfg.methods:
        f_model = ch.perturb_doppler(cfg.f_d, csi_model(cfg), rng["doppler"])
        ens = ensemble_operands(cfg, f_model, rng["ensemble"])
    sl = slice(cfg.burn_in, nb)
    ref = ofdm.qpsk_indices(x[sl])
    out = {}
    for snr in cfg.snr_grid_db:
        s2 = 10.0 ** (-snr / 10.0)
        y = hx + np.sqrt(s2) * z
        params = ofdm.EqualizerParams(cfg.k, cfg.epsilon, s2)
        for method, w in method_windows(cfg, cfg.methods, seq, ens, s2).items():
            x_soft = equalize(y[sl], h_eq[sl], w[sl], params)
            out[(method, snr)] = np.count_nonzero(ofdm.qpsk_indices(x_soft) != ref) / ref.size
    return out


def run_ser_sweep(cfg):
    trials = [ser_trial(cfg, t) for t in range(cfg.n_trials)]
    rows = []
    for method in cfg.methods:
        for snr in cfg.snr_grid_db:
            mean, se = _mean_se([tr[(method, snr)] for tr in trials])
            rows.append(ResultRow(cfg.scenario, method, snr, None, "ser", float(mean), cfg.n_trials, float(se)))
    return rows


# ---------------------------------------------------------------------------
# learning curve and tracking
# ---------------------------------------------------------------------------


def alignment_error(a, b):
    """Row-wise ``1 - |<a, b>|^2 / (|a|^2 |b|^2)``."""
    num = np.abs(np.sum(a.conj() * b, axis=-1)) ** 2
    den = np.sum(np.abs(a) ** 2, axis=-1) * np.sum(np.abs(b) ** 2, axis=-1)
    return np.clip(1.0 - num / den, 0.0, 1.0)


def regime_references(cfg):
    """Dominant whitened eigenvector of the ensemble-averaged operands, per block and SNR.

    The reference switches to the second regime at ``jump_block``. These
    draws are shared by all trials.
    """
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(_SHARED_KEY,)))
    regimes = [ensemble_operands(cfg, cfg.f_d, rng)]
    if cfg.jump_block > 0:
        regimes.append(ensemble_operands(cfg, cfg.f_d_after, rng))
    refs = {}
    for snr in cfg.snr_grid_db:
        s2 = 10.0 ** (-snr / 10.0)
        vecs = []
        for ens in regimes:
            ops = ens.mean_operands(s2)
            vecs.append(wd.design_from_operands(ops, "regime").w * np.sqrt(ops.lam))
        ref = np.empty((cfg.n_blocks, cfg.n), dtype=np.complex128)
        ref[:] = vecs[0]
        if cfg.jump_block > 0:
            ref[cfg.jump_block:] = vecs[1]
        refs[snr] = ref
    return refs


def recorded_blocks(cfg):
    """Update counts ``m`` (0 = initial iterate, ``n_blocks`` = final) written to the table."""
    idx = np.arange(0, cfg.n_blocks + 1, cfg.record_every)
    return np.unique(np.concatenate([idx, [cfg.n_blocks]]))


def curve_trial(cfg, trial, refs, record_idx):
    """Alignment errors for ``m = 0 .. n_blocks`` and symbol MSE at the recorded ``m >= 1``.

    Entry ``m`` describes the iterate after ``m`` updates; ``m = 0`` is the
    initial iterate, compared with the first available ground truth. The
    symbol MSE at ``m`` is that of block ``m - 1`` equalized with the window
    designed from blocks up to and including it.
    """
    rng = trial_rngs(cfg.seed, trial)
    nb, n = cfg.n_blocks, cfg.n
    blocks = record_idx[record_idx >= 1] - 1
    taps = simulate_taps(cfg, rng["channel"])
    h = ch.frequency_domain_stack(taps)
    h_est, seq = channel_estimates(cfg, taps, h, rng["csi"])
    h_eq = (h if cfg.eq_csi == "true" else h_est)[blocks]
    x = qpsk_blocks(rng["bits"], nb, n)[blocks]
    z = ch.complex_gaussian(rng["noise"], (nb, n))[blocks]
    hx = np.einsum("bij,bj->bi", h[blocks], x)
    out = {}
    for snr in cfg.snr_grid_db:
        s2 = 10.0 ** (-snr / 10.0)
        state = wd.adaptive_init(n, cfg.lambda_ff, schedule(cfg))
        v0 = state.v_bar.copy()
        trace = wd.adaptive_run(state, seq, s2)
        _, v_star = trace.ground_truth()
        iterates = np.vstack([v0, trace.v_bar])
        params = ofdm.EqualizerParams(cfg.k, cfg.epsilon, s2)
        x_soft = equalize(hx + np.sqrt(s2) * z, h_eq, trace.windows[blocks], params)
        out[snr] = {
            "alignment_error": alignment_error(iterates, np.vstack([v_star[:1], v_star])),
            "regime_alignment_error": alignment_error(iterates, np.vstack([refs[snr][:1], refs[snr]])),
            "symbol_mse": np.mean(np.abs(x_soft - x) ** 2, axis=1),
        }
    return out


def first_passage(curve, threshold):
    """First index at which ``curve`` drops below ``threshold``; NaN if it never does."""
    hits = np.nonzero(curve < threshold)[0]
    return float(hits[0]) if hits.size else float("nan")


def reconvergence(curve, se, jump, floor_window):
    """Response of a trial-averaged error curve to a change at index ``jump``.

    The new-regime floor is the mean of the last ``floor_window`` entries.
    The post-jump peak is searched between the jump and that tail window,
    and ``reconvergence_blocks`` counts entries from the jump until the
    curve, after its peak, first lies within the floor plus two standard
    errors.
    """
    nb = len(curve)
    se = np.nan_to_num(se)
    tail = slice(max(jump + 1, nb - floor_window), nb)
    floor = float(curve[tail].mean())
    band = floor + 2.0 * float(se[tail].mean())
    pre = curve[max(0, jump - floor_window):jump]
    search_end = max(tail.start, jump + 1)
    peak = jump + int(np.argmax(curve[jump:search_end]))
    settled = np.nonzero(curve[peak:] <= band)[0]
    return {
        "pre_jump_floor": float(pre.mean()) if pre.size else float("nan"),
        "pre_jump_floor_stderr": float(se[max(0, jump - floor_window):jump].mean()) if pre.size else float("nan"),
        "post_jump_peak": float(curve[peak]),
        "post_jump_peak_block": float(peak),
        "post_jump_floor": floor,
        "reconvergence_blocks": float(peak + settled[0] - jump) if settled.size else float("nan"),
    }


def _run_curves(cfg):
    refs = regime_references(cfg)
    record_idx = recorded_blocks(cfg)
    trials = [curve_trial(cfg, t, refs, record_idx) for t in range(cfg.n_trials)]
    rows = []
    t = cfg.n_trials

    def add(snr, block, metric, value, se=float("nan")):
        rows.append(ResultRow(cfg.scenario, "adaptive", snr, block, metric, float(value), t, float(se)))

    for snr in cfg.snr_grid_db:
        for metric in ("alignment_error", "regime_alignment_error", "symbol_mse"):
            samples = np.stack([tr[snr][metric] for tr in trials])
            mean, se = _mean_se(samples)
            if metric == "symbol_mse":
                for j, m in enumerate(record_idx[record_idx >= 1]):
                    add(snr, int(m), metric, mean[j], se[j])
                continue
            for b in record_idx:
                add(snr, int(b), metric, mean[b], se[b])
            prefix = "regime_" if metric.startswith("regime") else ""
            median = np.median(samples, axis=0)
            for b in record_idx:
                add(snr, int(b), metric + "_median", median[b])
            add(snr, None, prefix + "first_passage_block", first_passage(mean, cfg.first_passage_threshold))
            add(snr, None, prefix + "final_alignment_error_median", median[-1])
            if cfg.jump_block > 0:
                # the first update that sees the new regime is m = jump_block + 1
                jump = cfg.jump_block + 1
                for key, value in reconvergence(mean, se, jump, cfg.floor_window).items():
                    add(snr, None, prefix + key, value)
    return rows


def run_learning_curve(cfg):
    return _run_curves(cfg)


def run_tracking(cfg):
    """Learning curve across a Doppler jump; with ``jump_block = 0`` it is a plain learning curve."""
    return _run_curves(cfg)


RUNNERS = {"ser_sweep": run_ser_sweep, "learning_curve": run_learning_curve, "tracking": run_tracking}


def run(cfg):
    return RUNNERS[cfg.scenario](cfg)
