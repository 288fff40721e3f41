"""Acceptance suite: one test per release criterion, at the stated tolerances.

Each test prints a single ``[criterion N] PASS/FAIL`` line (visible with
``pytest -v -s`` or on failure) and asserts the criterion. The Monte Carlo
criteria use paired seeds throughout: trial t of every scheme and antenna
configuration sees the channel drawn with seed base_seed + t.
"""

import numpy as np
import pytest
from dataclasses import replace
from numpy.random import default_rng

from onebit_hbf.channel import ChannelRealization, generate_channel
from onebit_hbf.config import SystemConfig
from onebit_hbf.harness import (
    FULL_DIGITAL,
    HYBRID_FIXED_RF,
    HYBRID_REDESIGN,
    ExperimentPlan,
    run_sweep,
)
from onebit_hbf.precoding import (
    alternating_projection,
    design_hybrid,
    fixed_point_cov,
    greedy_phase_search,
    phase_grid,
    svd_rf_init,
)
from onebit_hbf.quantization import (
    LinearizationModel,
    SignalStats,
    arcsin_covariance,
    bussgang_linearize,
    one_bit_quantize,
)
from onebit_hbf.rate import RateContext, achievable_rate
from onebit_hbf.validate import draw_gaussian

CFG = SystemConfig()
BASE_SEED = 7000
N_TRIALS = 200
WORKERS = 2


def report(criterion: str, ok: bool, detail: str):
    print(f"[criterion {criterion:>3}] {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, f"criterion {criterion}: {detail}"


def paired_ge(a: np.ndarray, b: np.ndarray):
    """One-sided paired comparison a >= b within 2 standard errors."""
    d = np.asarray(a) - np.asarray(b)
    se = np.std(d, ddof=1) / np.sqrt(len(d))
    return d.mean() >= -2 * se, d.mean(), se


# ---------------------------------------------------------------------------
# shared Monte Carlo sweeps (computed once)
# ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def sweep_fixed_nrf4():
    plan = ExperimentPlan(tuple(CFG.snr_grid_db), N_TRIALS, (HYBRID_FIXED_RF,),
                          (1, 2), BASE_SEED)
    return run_sweep(plan, CFG, workers=WORKERS)


@pytest.fixture(scope="module")
def sweep_low_snr_nrf4():
    plan = ExperimentPlan((-10.0,), N_TRIALS, (FULL_DIGITAL, HYBRID_REDESIGN),
                          (3,), BASE_SEED)
    return run_sweep(plan, CFG, workers=WORKERS)


@pytest.fixture(scope="module")
def sweep_high_snr_nrf4():
    plan = ExperimentPlan((10.0,), N_TRIALS, (HYBRID_REDESIGN,), (3,), BASE_SEED)
    return run_sweep(plan, CFG, workers=WORKERS)


@pytest.fixture(scope="module")
def sweep_high_snr_nrf8():
    cfg8 = replace(CFG, n_rf=8, n_s=8)
    plan = ExperimentPlan((10.0,), N_TRIALS, (HYBRID_FIXED_RF, HYBRID_REDESIGN),
                          (3,), BASE_SEED)
    return run_sweep(plan, cfg8, workers=WORKERS)


# ---------------------------------------------------------------------------
# 1. fixed-point convergence
# ---------------------------------------------------------------------------


def test_criterion_01_fixed_point_convergence():
    hits, total = 0, 0
    worst_iters = 0
    for n_rf in (2, 4, 8):
        for seed in range(100):
            channel = generate_channel(CFG.channel_params(seed=BASE_SEED + seed))
            rf = alternating_projection(svd_rf_init(channel, n_rf)).matrix
            fp = fixed_point_cov(channel, rf, CFG.p_max, CFG.p_s, n_rf, 1e-12,
                                 max_iters=50)
            total += 1
            if fp.converged and fp.trace[-1] <= 1e-12:
                hits += 1
                worst_iters = max(worst_iters, fp.iterations)
    report("1", hits >= 0.99 * total,
           f"{hits}/{total} channels reached 1e-12 within 50 iterations "
           f"(worst {worst_iters})")


# ---------------------------------------------------------------------------
# 2. Bussgang arcsine-law oracle
# ---------------------------------------------------------------------------


def test_criterion_02_bussgang_monte_carlo_oracle():
    worst_rel = 0.0
    for seed in range(20):
        rng = default_rng(900 + seed)
        bb = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        stats = SignalStats.from_precoder(bb, CFG.p_s)
        analytic = arcsin_covariance(stats.input_cov)
        x = draw_gaussian(stats.input_cov, 1_000_000, rng)
        q = one_bit_quantize(x, 1.0)
        est = np.einsum("ij,ik->jk", q, q.conj()) / len(q)
        worst_rel = max(worst_rel,
                        np.linalg.norm(est - analytic) / np.linalg.norm(analytic))
    # diagonal case: exact (1 - 2/pi) I distortion analytically
    bb = 2.0 * np.eye(4, dtype=complex)
    model = bussgang_linearize(SignalStats.from_precoder(bb, CFG.p_s), bb)
    diag_err = float(np.max(np.abs(model.distortion_cov - (1 - 2 / np.pi) * np.eye(4))))
    ok = worst_rel < 0.01 and diag_err < 1e-10
    report("2", ok, f"worst MC relative Frobenius error {worst_rel:.4%} over "
                    f"20 precoders; diagonal-case error {diag_err:.2e}")


# ---------------------------------------------------------------------------
# 3. power constraint after every normalization
# ---------------------------------------------------------------------------


def test_criterion_03_power_constraint_instrumented():
    worst = 0.0
    n_checks = 0
    for seed in range(100):
        channel = generate_channel(CFG.channel_params(seed=BASE_SEED + seed))
        _, state = design_hybrid(channel, CFG, CFG.noise_variance(10.0))
        for pc in state.power_checks:
            worst = max(worst, pc.rel_error)
            n_checks += 1
    report("3", worst < 1e-8,
           f"{n_checks} normalizations over 100 runs, worst relative error {worst:.2e}")


# ---------------------------------------------------------------------------
# 4. greedy search accounting
# ---------------------------------------------------------------------------


def test_criterion_04_greedy_search_accounting():
    counts_ok, monotone_ok = True, True
    worst_gain = np.inf
    for seed in range(10):
        channel = generate_channel(CFG.channel_params(seed=BASE_SEED + seed))
        _, state = design_hybrid(channel, CFG, CFG.noise_variance(0.0))
        for search in state.greedy:
            counts_ok &= (search.n_evaluations == 9216)
            monotone_ok &= (search.final_rate >= search.input_rate)
            worst_gain = min(worst_gain, search.final_rate - search.input_rate)
    ok = counts_ok and monotone_ok
    report("4", ok, f"72*32*4 = 9216 evaluations per sweep: {counts_ok}; "
                    f"post >= pre on every sweep: {monotone_ok} "
                    f"(smallest gain {worst_gain:.3e} bits)")


# ---------------------------------------------------------------------------
# 5. greedy vs exhaustive optimum
# ---------------------------------------------------------------------------


def test_criterion_05_greedy_vs_exhaustive():
    delta = np.deg2rad(120.0)
    phases, n_search = phase_grid(delta)
    vals = np.exp(1j * phases) / np.sqrt(2)
    ratios = []
    never_below_start = True
    for seed in range(50):
        rng = default_rng(3000 + seed)
        h = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        f_rf = np.exp(1j * rng.uniform(-np.pi, np.pi, (2, 2))) / np.sqrt(2)
        bb = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        lin = bussgang_linearize(SignalStats.from_precoder(bb, 1.0), bb)
        ctx = RateContext(ChannelRealization.from_matrix(h), f_rf, lin, 1.0, 1.0, 2)
        result = greedy_phase_search(ctx, bb, delta)
        best = -np.inf
        for flat in np.ndindex((n_search,) * 4):
            cand = vals[np.array(flat).reshape(2, 2)]
            ctx2 = RateContext(ctx.channel, cand, lin, 1.0, 1.0, 2)
            best = max(best, achievable_rate(ctx2, bb))
        ratios.append(result.final_rate / best)
        never_below_start &= (result.final_rate >= result.start_rate)
    ok = min(ratios) >= 0.9 and never_below_start
    report("5", ok, f"50 instances: worst greedy/exhaustive ratio {min(ratios):.4f}, "
                    f"never below start: {never_below_start}")


# ---------------------------------------------------------------------------
# 6. Fig.-3(a)-style reproduction, N_RF = 4
# ---------------------------------------------------------------------------


def test_criterion_06a_second_iteration_improves(sweep_fixed_nrf4):
    details = []
    ok = True
    for snr in CFG.snr_grid_db:
        k2 = sweep_fixed_nrf4.raw[(HYBRID_FIXED_RF, 2, snr)]
        k1 = sweep_fixed_nrf4.raw[(HYBRID_FIXED_RF, 1, snr)]
        good, mean_d, se = paired_ge(k2, k1)
        ok &= good
        details.append(f"{snr:+.0f} dB: {mean_d:+.3f} (se {se:.3f})")
    report("6a", ok, "fixed-RF iteration-2 minus iteration-1 mean rate, "
                     + "; ".join(details))


def test_criterion_06b_redesign_beats_full_digital_low_snr(sweep_low_snr_nrf4):
    redesign = sweep_low_snr_nrf4.raw[(HYBRID_REDESIGN, 3, -10.0)]
    fd = sweep_low_snr_nrf4.raw[(FULL_DIGITAL, 3, -10.0)]
    good, mean_d, se = paired_ge(redesign, fd)
    report("6b", good,
           f"redesign minus full-digital at -10 dB: {mean_d:+.4f} bits "
           f"(se {se:.4f}, {N_TRIALS} paired trials)")


# ---------------------------------------------------------------------------
# 7. Fig.-3(b)-style reproduction, N_RF = 8
# ---------------------------------------------------------------------------


def test_criterion_07_nrf8_orderings(sweep_high_snr_nrf8, sweep_high_snr_nrf4):
    redesign8 = sweep_high_snr_nrf8.raw[(HYBRID_REDESIGN, 3, 10.0)]
    fixed8 = sweep_high_snr_nrf8.raw[(HYBRID_FIXED_RF, 3, 10.0)]
    redesign4 = sweep_high_snr_nrf4.raw[(HYBRID_REDESIGN, 3, 10.0)]
    ok1 = redesign8.mean() > fixed8.mean()
    ok2 = redesign4.mean() > redesign8.mean()
    report("7", ok1 and ok2,
           f"at 10 dB: redesign {redesign8.mean():.3f} vs fixed {fixed8.mean():.3f} "
           f"(N_RF=8); N_RF=4 {redesign4.mean():.3f} vs N_RF=8 {redesign8.mean():.3f}")


# ---------------------------------------------------------------------------
# 8. rate-formula oracles
# ---------------------------------------------------------------------------


def _cofactor_det(m):
    n = m.shape[0]
    if n == 1:
        return m[0, 0]
    return sum((-1) ** j * m[0, j] * _cofactor_det(np.delete(np.delete(m, 0, 0), j, 1))
               for j in range(n))


def test_criterion_08_rate_oracles():
    worst = 0.0
    for seed in range(100):
        rng = default_rng(4000 + seed)
        n_r = 2 + seed % 2  # N_r in {2, 3}
        h = rng.standard_normal((n_r, 4)) + 1j * rng.standard_normal((n_r, 4))
        f_rf = rng.standard_normal((4, 2)) + 1j * rng.standard_normal((4, 2))
        bb = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        a = np.diag(rng.uniform(0.3, 1.5, 2))
        q = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        cq = q @ q.conj().T
        sigma2 = rng.uniform(0.3, 3.0)
        lin = LinearizationModel("test", a, cq)
        ctx = RateContext(ChannelRealization.from_matrix(h), f_rf, lin,
                          sigma2, 2.0, 2)
        got = achievable_rate(ctx, bb)
        he = h @ f_rf @ a
        cnn = h @ f_rf @ cq @ f_rf.conj().T @ h.conj().T + sigma2 * np.eye(n_r)
        m = np.eye(n_r) + np.linalg.inv(cnn) @ he @ bb @ bb.conj().T @ he.conj().T
        brute = float(np.log2(_cofactor_det(m).real))
        worst = max(worst, abs(got - brute))
    # identity-channel case must be exactly N_r bits
    n = 3
    lin = LinearizationModel("test", np.eye(n), np.zeros((n, n), dtype=complex))
    ctx = RateContext(ChannelRealization.from_matrix(np.eye(n, dtype=complex)),
                      np.eye(n, dtype=complex), lin, 1.0, float(n), n)
    ident = achievable_rate(ctx, np.eye(n, dtype=complex))
    ok = worst < 1e-9 and ident == float(n)
    report("8", ok, f"100 brute-force instances, worst |error| {worst:.2e}; "
                    f"identity channel returns {ident}")


# ---------------------------------------------------------------------------
# 9. constraint invariants across full runs
# ---------------------------------------------------------------------------


def test_criterion_09_constraint_invariants():
    modulus_ok = True
    grid_ok = True
    residuals = []
    for n_rf in (4, 8):
        cfg = replace(CFG, n_rf=n_rf, n_s=n_rf)
        for seed in range(20):
            channel = generate_channel(cfg.channel_params(seed=BASE_SEED + seed))
            prec, state = design_hybrid(channel, cfg, cfg.noise_variance(0.0))
            modulus_ok &= all(err < 1e-10 for err in state.apa_modulus_errors)
            residuals.extend(state.apa_residuals)
            phases, n_search = phase_grid(cfg.delta_rad)
            grid_ok &= prec.phases is not None
            grid_ok &= bool(np.all((prec.phases >= 0) & (prec.phases < n_search)))
            grid_ok &= bool(np.array_equal(
                prec.rf, np.exp(1j * phases[prec.phases]) / np.sqrt(cfg.n_t)))
    frac = np.mean([r < 1e-2 for r in residuals])
    ok = modulus_ok and grid_ok and frac >= 0.95
    report("9", ok, f"constant modulus within 1e-10 after every projection: "
                    f"{modulus_ok}; grid membership by index: {grid_ok}; "
                    f"semi-unitary residual < 1e-2 on {frac:.0%} of "
                    f"{len(residuals)} projections")
