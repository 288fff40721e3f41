"""Self-contained property checks runnable from the CLI.

Each check re-derives its expected value from an independent route (hand
substitution, brute-force determinant, Monte Carlo estimate) and compares
against the library code at a fixed tolerance. The pytest suite covers the
same ground more exhaustively; this module exists so a deployed install can
be sanity-checked without a test harness.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.random import default_rng

from . import quantization
from .channel import ChannelParams, ChannelRealization, generate_channel
from .config import SystemConfig
from .precoding import (
    alternating_projection,
    bb_normalize,
    chain_power,
    fixed_point_cov,
    greedy_phase_search,
    phase_grid,
    svd_rf_init,
)
from .quantization import (
    ONE_BIT_DISTORTION_FACTOR,
    LinearizationModel,
    SignalStats,
    aqnm_linearize,
    bussgang_linearize,
    one_bit_quantize,
)
from .rate import RateContext, achievable_rate


@dataclass
class CheckResult:
    group: str
    name: str
    passed: bool
    detail: str


# ---------------------------------------------------------------------------
# shared Monte Carlo oracles
# ---------------------------------------------------------------------------


def draw_gaussian(cov: np.ndarray, n_samples: int, rng) -> np.ndarray:
    """Rows are circular complex Gaussian vectors with covariance ``cov``."""
    k = cov.shape[0]
    chol = np.linalg.cholesky(cov)
    z = (rng.standard_normal((n_samples, k))
         + 1j * rng.standard_normal((n_samples, k))) / np.sqrt(2.0)
    # row i is chol @ z_i, so E[x x^H] = chol chol^H = cov
    return z @ chol.T


def empirical_quantized_covariance(cov: np.ndarray, n_samples: int, seed: int):
    """MC estimate of E[q q^H] for unit-power one-bit outputs, plus a per-entry
    standard error estimate."""
    rng = default_rng(seed)
    x = draw_gaussian(cov, n_samples, rng)
    q = one_bit_quantize(x, 1.0)
    est = np.einsum("ij,ik->jk", q, q.conj()) / n_samples
    # per-entry standard error from the sample variance of the products
    k = cov.shape[0]
    sem = np.zeros((k, k))
    for i in range(k):
        for j in range(k):
            prod = q[:, i] * q[:, j].conj()
            sem[i, j] = max(np.std(prod.real), np.std(prod.imag)) / np.sqrt(n_samples)
    return est, sem


def dump_covariance_comparison_csv(analytic: np.ndarray, empirical: np.ndarray,
                                   path) -> None:
    """Optional debugging artifact: analytic vs empirical covariance entries."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("row,col,analytic_re,analytic_im,empirical_re,empirical_im\n")
        k = analytic.shape[0]
        for i in range(k):
            for j in range(k):
                vals = (analytic[i, j].real, analytic[i, j].imag,
                        empirical[i, j].real, empirical[i, j].imag)
                fh.write(f"{i},{j}," + ",".join(repr(float(v)) for v in vals) + "\n")


# ---------------------------------------------------------------------------
# checks
# ---------------------------------------------------------------------------


def _check_channel_energy() -> tuple[bool, str]:
    params = ChannelParams(32, 8, 1, 5, np.deg2rad(10.0))
    rng = default_rng(2024)
    n_draws = 2000
    total = 0.0
    for _ in range(n_draws):
        total += np.linalg.norm(generate_channel(params, rng).matrix) ** 2
    mean = total / n_draws
    target = 32 * 8
    rel = abs(mean - target) / target
    return rel < 0.10, f"mean ||H||^2 = {mean:.2f}, target {target}, rel err {rel:.3f}"


def _check_channel_determinism() -> tuple[bool, str]:
    params = ChannelParams(8, 4, 2, 3, np.deg2rad(10.0), seed=7)
    a = generate_channel(params).matrix
    b = generate_channel(params).matrix
    return bool(np.array_equal(a, b)), "same (params, seed) reproduces the matrix bitwise"


def _check_channel_rank() -> tuple[bool, str]:
    params = ChannelParams(32, 8, 1, 5, np.deg2rad(10.0), seed=3)
    s = np.linalg.svd(generate_channel(params).matrix, compute_uv=False)
    tail = s[5:] / s[0]
    return bool(np.all(tail < 1e-9)), f"max trailing singular value ratio {tail.max():.2e}"


def _check_quantizer_signs() -> tuple[bool, str]:
    got = one_bit_quantize(np.array([1 + 0.5j, -0.3 - 2j, 0 + 0j]), 1.0)
    want = np.array([1 + 1j, -1 - 1j, 1 + 1j]) / np.sqrt(2.0)
    ok = np.allclose(got, want, atol=1e-15) and np.allclose(np.abs(got) ** 2, 1.0)
    return ok, "sign convention and unit output power"


def _check_aqnm() -> tuple[bool, str]:
    eta = ONE_BIT_DISTORTION_FACTOR
    bb = np.eye(4, dtype=complex)
    model = aqnm_linearize(SignalStats.from_precoder(bb, 1.0), bb)
    want = (eta * (1 - eta) / 4) * np.eye(4)
    ok = np.allclose(model.distortion_cov, want, atol=1e-14)
    ok &= np.allclose(model.weight, np.sqrt(1 - eta) * np.eye(4), atol=1e-14)
    return bool(ok), f"diag value {model.distortion_cov[0, 0].real:.6f} vs {want[0, 0]:.6f}"


def _check_bussgang_diagonal() -> tuple[bool, str]:
    p = 3.7
    bb = np.sqrt(p) * np.eye(4, dtype=complex) * 2.0  # C_xx = p*I after P_s/N_s = 1/4
    model = bussgang_linearize(SignalStats.from_precoder(bb, 1.0), bb)
    want_cov = (1 - 2 / np.pi) * np.eye(4)
    want_w = np.sqrt(2 / (np.pi * p)) * np.eye(4)
    ok = np.allclose(model.distortion_cov, want_cov, atol=1e-10)
    ok &= np.allclose(model.weight, want_w, atol=1e-12)
    return bool(ok), "C_xx = p*I gives (1 - 2/pi) I distortion and sqrt(2/(pi p)) gain"


def _check_bussgang_scale_invariance() -> tuple[bool, str]:
    rng = default_rng(11)
    bb = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    base = bussgang_linearize(SignalStats.from_precoder(bb, 1.0), bb)
    worst = 0.0
    for c in (0.25, 3.0):
        scaled = bussgang_linearize(SignalStats.from_precoder(c * bb, 1.0), c * bb)
        worst = max(worst,
                    float(np.max(np.abs(scaled.weight - base.weight / c))),
                    float(np.max(np.abs(scaled.distortion_cov - base.distortion_cov))),
                    float(np.max(np.abs(scaled.weight @ (c * bb) - base.weight @ bb))))
    return worst < 1e-12, f"max deviation under rescaling {worst:.2e}"


def _check_bussgang_trace() -> tuple[bool, str]:
    rng = default_rng(5)
    bb = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
    model = bussgang_linearize(SignalStats.from_precoder(bb, 2.0), bb)
    tr = float(np.real(np.trace(model.distortion_cov)))
    want = 6 * (1 - 2 / np.pi)
    return abs(tr - want) < 1e-10, f"trace {tr:.12f} vs {want:.12f}"


def _check_bussgang_monte_carlo() -> tuple[bool, str]:
    c_xx = np.array([[1.0, 0.5], [0.5, 1.0]], dtype=complex)
    analytic = quantization.arcsin_covariance(c_xx)
    est, sem = empirical_quantized_covariance(c_xx, 300_000, seed=42)
    err_re = np.abs(est.real - analytic.real)
    err_im = np.abs(est.imag - analytic.imag)
    ok = bool(np.all(err_re <= 3 * sem + 1e-12) and np.all(err_im <= 3 * sem + 1e-12))
    return ok, f"max |err|/sem = {float(np.max(np.maximum(err_re, err_im) / (sem + 1e-300))):.2f}"


def _check_rate_identity() -> tuple[bool, str]:
    n = 3
    chan = ChannelRealization.from_matrix(np.eye(n, dtype=complex))
    lin = LinearizationModel("unquantized", np.eye(n), np.zeros((n, n), dtype=complex))
    ctx = RateContext(chan, np.eye(n, dtype=complex), lin, 1.0, float(n), n)
    rate = achievable_rate(ctx, np.eye(n, dtype=complex))
    return rate == float(n), f"identity channel rate {rate} (want {n})"


def _check_rate_brute_force() -> tuple[bool, str]:
    rng = default_rng(17)
    worst = 0.0
    for _ in range(20):
        h = rng.standard_normal((2, 3)) + 1j * rng.standard_normal((2, 3))
        f_rf = rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2))
        bb = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        a = np.diag(rng.uniform(0.5, 1.5, 2))
        q = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        cq = q @ q.conj().T
        sigma2 = rng.uniform(0.5, 2.0)
        lin = LinearizationModel("unquantized", a, cq)
        ctx = RateContext(ChannelRealization.from_matrix(h), f_rf, lin, sigma2, 2.0, 2)
        got = achievable_rate(ctx, bb)
        # explicit-inverse, cofactor-determinant route
        he = h @ f_rf @ a
        cnn = h @ f_rf @ cq @ f_rf.conj().T @ h.conj().T + sigma2 * np.eye(2)
        m = np.eye(2) + (2.0 / 2) * np.linalg.inv(cnn) @ he @ bb @ bb.conj().T @ he.conj().T
        det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
        worst = max(worst, abs(got - float(np.log2(det.real))))
    return worst < 1e-9, f"max |rate - brute force| = {worst:.2e}"


def _check_apa() -> tuple[bool, str]:
    rng = default_rng(23)
    worst_res, worst_cm = 0.0, 0.0
    for _ in range(3):
        cand = rng.standard_normal((32, 4)) + 1j * rng.standard_normal((32, 4))
        proj = alternating_projection(cand)
        worst_cm = max(worst_cm, float(np.max(np.abs(
            np.abs(proj.matrix) * np.sqrt(32) - 1.0))))
        worst_res = max(worst_res, proj.residual)
    ok = worst_cm < 1e-12 and worst_res < 1e-2
    return ok, f"modulus error {worst_cm:.2e}, semi-unitary residual {worst_res:.2e}"


def _tiny_greedy_setup(seed: int):
    rng = default_rng(seed)
    h = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    f_rf = np.exp(1j * rng.uniform(-np.pi, np.pi, (2, 2))) / np.sqrt(2)
    bb = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    stats = SignalStats.from_precoder(bb, 1.0)
    lin = bussgang_linearize(stats, bb)
    ctx = RateContext(ChannelRealization.from_matrix(h), f_rf, lin, 1.0, 1.0, 2)
    return ctx, bb


def _check_greedy_exhaustive() -> tuple[bool, str]:
    delta = np.deg2rad(120.0)
    ctx, bb = _tiny_greedy_setup(31)
    result = greedy_phase_search(ctx, bb, delta)
    phases, n_search = phase_grid(delta)
    best = -np.inf
    vals = np.exp(1j * phases[:n_search]) / np.sqrt(2)
    for i in range(n_search):
        for j in range(n_search):
            for k in range(n_search):
                for l in range(n_search):
                    f = np.array([[vals[i], vals[j]], [vals[k], vals[l]]])
                    ctx2 = RateContext(ctx.channel, f, ctx.linearization,
                                       ctx.noise_variance, ctx.data_power, ctx.num_streams)
                    best = max(best, achievable_rate(ctx2, bb))
    ok = result.final_rate >= 0.9 * best and result.final_rate >= result.start_rate
    return bool(ok), f"greedy {result.final_rate:.4f} vs exhaustive {best:.4f}"


def _check_greedy_count() -> tuple[bool, str]:
    rng = default_rng(37)
    h = rng.standard_normal((2, 4)) + 1j * rng.standard_normal((2, 4))
    f_rf = np.exp(1j * rng.uniform(-np.pi, np.pi, (4, 2))) / 2.0
    bb = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    lin = bussgang_linearize(SignalStats.from_precoder(bb, 1.0), bb)
    ctx = RateContext(ChannelRealization.from_matrix(h), f_rf, lin, 1.0, 1.0, 2)
    result = greedy_phase_search(ctx, bb, np.deg2rad(45.0))
    want = 8 * 4 * 2
    return result.n_evaluations == want, f"{result.n_evaluations} evaluations (want {want})"


def _check_power_normalize() -> tuple[bool, str]:
    rng = default_rng(41)
    bb_hat = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    q = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    lin = LinearizationModel("unquantized", np.diag(rng.uniform(0.5, 1.5, 4)),
                             0.1 * (q @ q.conj().T))
    bb = bb_normalize(bb_hat, lin, 10.0, 1.0, 4)
    lhs = chain_power(lin, bb, 1.0, 4)
    rel = abs(lhs - 10.0) / 10.0
    return rel < 1e-10, f"power identity relative error {rel:.2e}"


def _check_fixed_point() -> tuple[bool, str]:
    config = SystemConfig()
    channel = generate_channel(config.channel_params(seed=9))
    rf = alternating_projection(svd_rf_init(channel, 4)).matrix
    fp = fixed_point_cov(channel, rf, config.p_max, config.p_s, 4, 1e-12)
    monotone = bool(np.all(np.diff(fp.trace[1:]) < 0))
    ok = fp.converged and fp.iterations <= 50 and monotone
    return ok, (f"converged={fp.converged} in {fp.iterations} iterations, "
                f"strictly decreasing after warmup={monotone}")


_CHECKS: list[tuple[str, str, Callable[[], tuple[bool, str]]]] = [
    ("channel", "energy_normalization", _check_channel_energy),
    ("channel", "determinism", _check_channel_determinism),
    ("channel", "single_cluster_rank", _check_channel_rank),
    ("quantizer", "sign_convention", _check_quantizer_signs),
    ("aqnm", "weight_and_covariance", _check_aqnm),
    ("bussgang", "diagonal_case", _check_bussgang_diagonal),
    ("bussgang", "scale_invariance", _check_bussgang_scale_invariance),
    ("bussgang", "distortion_trace", _check_bussgang_trace),
    ("bussgang", "monte_carlo", _check_bussgang_monte_carlo),
    ("rate", "identity_channel", _check_rate_identity),
    ("rate", "brute_force", _check_rate_brute_force),
    ("apa", "constraints", _check_apa),
    ("greedy", "exhaustive_tiny", _check_greedy_exhaustive),
    ("greedy", "evaluation_count", _check_greedy_count),
    ("power", "normalization_identity", _check_power_normalize),
    ("fixed_point", "convergence", _check_fixed_point),
]


def run_checks(name_filter: str | None = None) -> list[CheckResult]:
    """Run all (or a filtered subset of) property checks."""
    results = []
    for group, name, fn in _CHECKS:
        if name_filter and name_filter not in group and name_filter not in name:
            continue
        try:
            passed, detail = fn()
        except Exception as exc:  # noqa: BLE001 - a crash is a failed check
            passed, detail = False, f"raised {type(exc).__name__}: {exc}"
        results.append(CheckResult(group, name, passed, detail))
    return results
