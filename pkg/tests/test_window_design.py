import numpy as np
import pytest

from ofdmwin import channel as ch
from ofdmwin import window_design as wd
from ofdmwin.numerics import band_mask, dft_matrix, instrumented
from oracles import best_window_by_search, literal_operands, powers, rand_complex, random_channel


def unit(v):
    return v / np.linalg.norm(v)


def test_sinr_raw_examples(rng):
    for k in (1, 3, 5):
        p_s, p_ni = wd.sinr_powers(np.ones(8), np.eye(8), 1.0, k)
        assert (p_s, p_ni) == pytest.approx((8.0, 8.0))
        assert wd.sinr_raw(np.ones(8), np.eye(8), 1.0, k) == pytest.approx(1.0)
    _, h = random_channel(rng, 8)
    w = rand_complex(rng, 8)
    assert wd.sinr_raw(2 * w, h, 0.1, 3) == pytest.approx(wd.sinr_raw(w, h, 0.1, 3), rel=1e-12)
    assert wd.sinr_raw(np.ones(4), np.eye(4), 0.0, 3) == np.inf
    with pytest.raises(ValueError):
        wd.sinr_raw(np.zeros(4), np.eye(4), 0.1, 3)


def test_sinr_powers_match_oracle(rng):
    _, h = random_channel(rng, 8)
    w = rand_complex(rng, 8)
    assert wd.sinr_powers(w, h, 0.3, 3) == pytest.approx(powers(w, h, 0.3, 3), rel=1e-12)


def test_operands_full_band_identity():
    n = 6
    ops = wd.build_operands(np.eye(n), 0.2, 2 * n - 1)
    assert np.allclose(ops.r, np.eye(n))
    assert np.allclose(ops.lam, 1.2)
    ops = wd.build_operands(np.eye(n), 0.0, 2 * n - 1)
    assert np.allclose(ops.lam_matrix - ops.r, 0)


@pytest.mark.parametrize("k", [1, 3, 5])
def test_operand_quadratic_forms(rng, k):
    _, h = random_channel(rng, 8)
    ops = wd.build_operands(h, 0.1, k)
    for _ in range(100):
        w = rand_complex(rng, 8)
        p_s, p_ni = powers(w, h, 0.1, k)
        assert ops.signal_power(w) == pytest.approx(p_s, rel=1e-9)
        assert ops.interference_noise_power(w) == pytest.approx(p_ni, rel=1e-9)


def test_operands_match_literal_oracle(rng):
    _, h = random_channel(rng, 8)
    r, lam = literal_operands(h, 0.4, 3)
    ops = wd.build_operands(h, 0.4, 3)
    assert np.abs(ops.r - r).max() < 1e-12
    assert np.abs(ops.lam - lam).max() < 1e-12


@pytest.mark.parametrize("n,l,k", [(8, 1, 3), (8, 3, 5), (16, 3, 3), (5, 5, 9)])
def test_tap_route_matches_dense(rng, n, l, k):
    taps, h = random_channel(rng, n, l)
    a = wd.build_operands(h, 0.1, k)
    b = wd.build_operands_from_taps(taps, 0.1, k)
    assert np.abs(a.r - b.r).max() < 1e-12
    assert np.abs(a.lam - b.lam).max() < 1e-12


def test_operand_sequence_routes(rng):
    proc = ch.generate_tap_processes(ch.ChannelParams(n=8, f_d=0.05), 5, rng)
    taps = ch.block_taps_stack(proc)
    h = ch.frequency_domain_stack(taps)
    a = wd.OperandSequence.from_taps(taps, 3)
    b = wd.OperandSequence.from_matrices(h, 3, chunk=2)
    assert np.abs(a.r - b.r).max() < 1e-12
    assert np.abs(a.power - b.power).max() < 1e-12
    single = wd.build_operands(h[3], 0.2, 3)
    assert np.allclose(a.operands(3, 0.2).r, single.r)
    assert np.allclose(a.operands(3, 0.2).lam, single.lam)


def test_operands_are_psd(rng):
    for _ in range(20):
        _, h = random_channel(rng, 8)
        ops = wd.build_operands(h, 0.0, 3)
        norm_r = np.linalg.norm(ops.r)
        assert np.abs(ops.r - ops.r.conj().T).max() < 1e-10 * norm_r
        assert np.linalg.eigvalsh(ops.r).min() >= -1e-8 * norm_r
        gap = ops.lam_matrix - ops.r
        assert np.linalg.eigvalsh(gap).min() >= -1e-8 * np.linalg.norm(gap)


def test_max_sinr_matches_generalised_eigen_oracle(rng):
    _, h = random_channel(rng, 8)
    design = wd.max_sinr_window(h, 0.05, 3)
    w_ref, eta = best_window_by_search(h, 0.05, 3)
    assert wd.sinr_raw(design.w, h, 0.05, 3) == pytest.approx(eta, rel=1e-9)
    assert abs(np.vdot(unit(design.w), unit(w_ref))) == pytest.approx(1.0, abs=1e-8)
    assert wd.pencil_eigenvalue(design.eigenvalue) == pytest.approx(eta, rel=1e-9)


def test_max_sinr_dominates_random_windows(rng):
    _, h = random_channel(rng, 8)
    s2 = 0.01
    design = wd.max_sinr_window(h, s2, 3)
    ops = wd.build_operands(h, s2, 3)
    best = wd.sinr_raw(design.w, h, s2, 3)
    w = rand_complex(rng, (10000, 8))
    num = np.einsum("bi,ij,bj->b", w.conj(), ops.r, w).real
    den = np.einsum("bi,i,bi->b", w.conj(), ops.lam, w).real - num
    assert np.all(num / den <= best * (1 + 1e-10))
    assert wd.sinr_raw(np.ones(8), h, s2, 3) <= best


def test_max_sinr_is_locally_optimal(rng):
    _, h = random_channel(rng, 8)
    design = wd.max_sinr_window(h, 0.01, 3)
    best = wd.sinr_raw(design.w, h, 0.01, 3)
    scale = 1e-3 * np.linalg.norm(design.w)
    for _ in range(100):
        d = rand_complex(rng, 8)
        assert wd.sinr_raw(design.w + scale * unit(d), h, 0.01, 3) <= best * (1 + 1e-12)


def test_max_sinr_degenerate_spectrum():
    design = wd.max_sinr_window(np.eye(6), 0.1, 11)
    assert wd.sinr_raw(design.w, np.eye(6), 0.1, 11) == pytest.approx(10.0)


def test_max_avg_sinr_degenerate_ensembles(rng):
    _, h = random_channel(rng, 8)
    single = wd.max_sinr_window(h, 0.1, 3).w
    avg = wd.max_avg_sinr_window([h], 0.1, 3).w
    copies = wd.max_avg_sinr_window([h] * 4, 0.1, 3).w
    assert abs(np.vdot(unit(single), unit(avg))) == pytest.approx(1.0, abs=1e-10)
    assert abs(np.vdot(unit(single), unit(copies))) == pytest.approx(1.0, abs=1e-10)
    with pytest.raises(ValueError):
        wd.max_avg_sinr_window([], 0.1, 3)


def test_max_avg_sinr_generalises_across_ensembles():
    rng = np.random.default_rng(4)
    p = ch.ChannelParams(f_d=0.01)
    s2 = 10 ** -3

    def ensemble(size):
        taps = np.stack([ch.generate_tap_processes(p, 1, rng).gains for _ in range(size)])
        return wd.OperandSequence.from_taps(taps, 3)

    w_bar = wd.design_from_operands(ensemble(500).mean_operands(s2), "max_avg_sinr").w
    fresh = ensemble(500)
    fixed, per_block = [], []
    for b in range(len(fresh)):
        ops = fresh.operands(b, s2)
        s = ops.signal_power(w_bar)
        fixed.append(s / ops.interference_noise_power(w_bar))
        d = wd.design_from_operands(ops, "max_sinr")
        per_block.append(wd.pencil_eigenvalue(d.eigenvalue))
    assert np.mean(fixed) >= 0.95 * np.mean(per_block)


def test_window_design_validation():
    with pytest.raises(ValueError):
        wd.WindowDesign(np.zeros(4), "x")
    with pytest.raises(ValueError):
        wd.WindowDesign(np.array([1.0, np.nan]), "x")
    assert np.array_equal(wd.rectangular_window(3).w, np.ones(3))


def test_design_requires_positive_lambda():
    ops = wd.SinrOperands(np.zeros((2, 2), dtype=complex), np.array([1.0, 0.0]))
    with pytest.raises(ValueError):
        wd.design_from_operands(ops, "x")


def test_step_size_schedule():
    assert wd.gamma_default(1, 16) == 65536
    assert wd.gamma_default(2, 16) == 32768
    g = [wd.gamma_default(m, 16) for m in range(1, 200)]
    assert all(a > b for a, b in zip(g, g[1:]))
    assert wd.DEFAULT_SCHEDULE.satisfies_conditions()
    assert not wd.PowerLawSchedule(m_power=0.4).convergence_conditions()["square_summable"]
    assert not wd.PowerLawSchedule(m_power=2).convergence_conditions()["divergent_sum"]
    with pytest.raises(ValueError):
        wd.gamma_default(0, 16)


def test_adaptive_init():
    state = wd.adaptive_init(16, 0.999)
    assert np.linalg.norm(state.v_bar) == pytest.approx(1.0)
    assert np.all(state.lam_bar == 0)
    assert state.m == 0
    with pytest.raises(ValueError):
        wd.adaptive_init(16, 1.5)


def test_first_literal_update_is_outer_product(rng):
    _, h = random_channel(rng, 8)
    state = wd.adaptive_init(8, 0.9, literal=True)
    wd.adaptive_update(state, h, 0.1, 3)
    c = dft_matrix(8) @ h.conj()
    t = band_mask(8, 3)
    for row in range(8):
        assert np.abs(state.b[row] - (c * t[row]) @ c.conj().T).max() < 1e-13
    ops = wd.build_operands(h, 0.1, 3)
    assert np.abs(state.r_bar - ops.r).max() < 1e-12
    assert np.allclose(state.lam_bar, ops.lam)


def test_update_paths_agree(rng):
    proc = ch.generate_tap_processes(ch.ChannelParams(n=8, f_d=0.05), 30, rng)
    states = {p: wd.adaptive_init(8, 0.95) for p in ("taps", "dense")}
    states["literal"] = wd.adaptive_init(8, 0.95, literal=True)
    for m in range(30):
        real = ch.realize_block(proc, m)
        for path, state in states.items():
            wd.adaptive_update(state, real, 0.05, 3, path=path)
    for path in ("dense", "literal"):
        assert np.abs(states[path].r_bar - states["taps"].r_bar).max() < 1e-11
        assert np.abs(states[path].v_bar - states["taps"].v_bar).max() < 1e-10


def test_update_errors(rng):
    state = wd.adaptive_init(8, 0.9)
    with pytest.raises(TypeError):
        wd.adaptive_update(state, np.eye(8), 0.1, 3, path="taps")
    with pytest.raises(ValueError):
        wd.adaptive_update(state, np.eye(4), 0.1, 3)
    with pytest.raises(ValueError):
        wd.adaptive_update(state, np.eye(8), 0.1, 3, path="other")
    with pytest.raises(ValueError):
        wd.ground_truth_window(wd.adaptive_init(8, 0.9))


def test_running_means_with_unit_forgetting(rng):
    hs = [random_channel(rng, 8)[1] for _ in range(6)]
    state = wd.adaptive_init(8, 1.0)
    for h in hs:
        wd.adaptive_update(state, h, 0.1, 3)
    ops = [wd.build_operands(h, 0.1, 3) for h in hs]
    assert np.allclose(state.r_bar / 6, sum(o.r for o in ops) / 6)
    assert np.allclose(state.lam_bar / 6, sum(o.lam for o in ops) / 6)


def test_update_invariants_and_no_eigensolves(rng):
    proc = ch.generate_tap_processes(ch.ChannelParams(), 20, rng)
    state = wd.adaptive_init(16, 0.99)
    with instrumented() as probe:
        for m in range(20):
            design = wd.adaptive_update(state, ch.realize_block(proc, m), 0.01, 3)
            assert np.linalg.norm(state.v_bar) == pytest.approx(1.0, abs=1e-12)
            assert np.all(state.lam_bar > 0)
            assert design.block == m + 1
    assert probe.calls["hermitian_eig_full"] == 0
    assert probe.calls["oja_step"] == 20


def test_batch_run_matches_updates(rng):
    proc = ch.generate_tap_processes(ch.ChannelParams(), 40, rng)
    seq = wd.OperandSequence.from_taps(ch.block_taps_stack(proc), 3)
    state = wd.adaptive_init(16, 0.98)
    for m in range(40):
        wd.adaptive_update(state, ch.realize_block(proc, m), 0.01, 3)
    batch = wd.adaptive_init(16, 0.98)
    first = wd.adaptive_run(batch, wd.OperandSequence(seq.r[:15], seq.power[:15]), 0.01)
    second = wd.adaptive_run(batch, wd.OperandSequence(seq.r[15:], seq.power[15:]), 0.01)
    assert first.first_block == 1 and second.first_block == 16
    assert batch.m == 40
    assert np.abs(batch.v_bar - state.v_bar).max() < 1e-10
    assert np.abs(batch.r_bar - state.r_bar).max() < 1e-10 * np.abs(state.r_bar).max()
    assert np.allclose(second.windows[-1], state.whitening() * state.v_bar)


def test_adaptive_converges_to_batch_average():
    rng = np.random.default_rng(8)
    p = ch.ChannelParams(f_d=0.01)
    s2 = 10 ** -3
    proc = ch.generate_tap_processes(p, 6000, rng)
    seq = wd.OperandSequence.from_taps(ch.block_taps_stack(proc), 3)
    trace = wd.adaptive_run(wd.adaptive_init(16, 0.999), seq, s2)
    # batch reference: whitened average of the same realisations
    v_star = wd.design_from_operands(seq.mean_operands(s2), "batch").w * np.sqrt(seq.power.mean(0) + s2)
    tail = trace.v_bar[5000:]
    align = np.abs(tail @ unit(v_star).conj())
    assert align.min() >= 0.99


def test_ground_truth_window(rng):
    _, h = random_channel(rng, 8)
    state = wd.adaptive_init(8, 0.9)
    wd.adaptive_update(state, h, 0.1, 3)
    gt = wd.ground_truth_window(state)
    ref = wd.max_sinr_window(h, 0.1, 3)
    assert abs(np.vdot(unit(gt.w), unit(ref.w))) == pytest.approx(1.0, abs=1e-10)
    for _ in range(5):
        wd.adaptive_update(state, random_channel(rng, 8)[1], 0.1, 3)
    gt = wd.ground_truth_window(state, eig_method="jacobi")
    eta = wd.pencil_eigenvalue(gt.eigenvalue)
    r = state.r_bar
    resid = r @ gt.w - eta * (state.lam_bar * gt.w - r @ gt.w)
    assert np.linalg.norm(resid) <= 1e-8 * np.linalg.norm(r) * np.linalg.norm(gt.w) * max(1, eta)


def test_ground_truth_matches_converged_adaptive():
    rng = np.random.default_rng(5)
    proc = ch.generate_tap_processes(ch.ChannelParams(f_d=0.01), 3000, rng)
    seq = wd.OperandSequence.from_taps(ch.block_taps_stack(proc), 3)
    trace = wd.adaptive_run(wd.adaptive_init(16, 0.999), seq, 10 ** -3)
    _, v_star = trace.ground_truth()
    assert abs(np.vdot(v_star[-1], trace.v_bar[-1])) ** 2 >= 0.99


def test_literal_state_not_batchable():
    state = wd.adaptive_init(4, 0.9, literal=True)
    seq = wd.OperandSequence(np.zeros((1, 4, 4), dtype=complex), np.ones((1, 4)))
    with pytest.raises(ValueError):
        wd.adaptive_run(state, seq, 0.1)


def test_tied_eigenvalues_prefer_reference(rng):
    vecs = np.linalg.qr(rand_complex(rng, (5, 5)))[0]
    ref = rand_complex(rng, 5)
    kappa = np.array([2.0, 2.0, 1.0, 0.5, 0.1])
    out = wd.dominant_direction(kappa, vecs, ref)
    proj = vecs[:, :2] @ (vecs[:, :2].conj().T @ ref)
    assert np.allclose(out, proj / np.linalg.norm(proj))
    distinct = np.array([3.0, 2.0, 1.0, 0.5, 0.1])
    assert np.array_equal(wd.dominant_direction(distinct, vecs, ref), vecs[:, 0])
    batch = wd.dominant_direction(np.stack([kappa, distinct]), np.stack([vecs, vecs]), np.stack([ref, ref]))
    assert np.allclose(batch[0], out) and np.array_equal(batch[1], vecs[:, 0])


def test_flat_objective_gives_rectangular_window():
    # a static diagonal channel has no leakage: every window is optimal
    h = np.diag(np.exp(1j * np.arange(8.0)))
    design = wd.max_sinr_window(h, 1e-6, 3)
    assert np.allclose(design.w / design.w[0], 1.0)
