import numpy as np
import pytest
from numpy.random import default_rng

from onebit_hbf.channel import ChannelRealization
from onebit_hbf.quantization import LinearizationModel
from onebit_hbf.rate import (
    RateContext,
    RateEvaluationError,
    achievable_rate,
    aggregate_noise_cov,
    effective_channel,
)


def make_ctx(h, f_rf, weight, cov, sigma2=1.0, p_s=1.0, n_s=None):
    n_s = n_s if n_s is not None else f_rf.shape[1]
    lin = LinearizationModel("test", weight, np.asarray(cov, dtype=complex))
    return RateContext(ChannelRealization.from_matrix(h), f_rf, lin, sigma2, p_s, n_s)


def random_instance(seed, n_r=2, n_t=4, n_rf=2, n_s=2):
    rng = default_rng(seed)
    h = rng.standard_normal((n_r, n_t)) + 1j * rng.standard_normal((n_r, n_t))
    f_rf = rng.standard_normal((n_t, n_rf)) + 1j * rng.standard_normal((n_t, n_rf))
    bb = rng.standard_normal((n_rf, n_s)) + 1j * rng.standard_normal((n_rf, n_s))
    a = np.diag(rng.uniform(0.3, 1.5, n_rf))
    q = rng.standard_normal((n_rf, n_rf)) + 1j * rng.standard_normal((n_rf, n_rf))
    cq = q @ q.conj().T
    return h, f_rf, bb, a, cq


def naive_triple_product(h, f_rf, a):
    n_r, n_rf = h.shape[0], f_rf.shape[1]
    hf = np.zeros((n_r, n_rf), dtype=complex)
    for i in range(n_r):
        for j in range(n_rf):
            for k in range(h.shape[1]):
                hf[i, j] += h[i, k] * f_rf[k, j]
    out = np.zeros_like(hf)
    for i in range(n_r):
        for j in range(n_rf):
            for k in range(n_rf):
                out[i, j] += hf[i, k] * a[k, j]
    return out


# ---------------------------------------------------------------------------
# effective channel
# ---------------------------------------------------------------------------


def test_effective_channel_selection_matrix():
    rng = default_rng(1)
    h = rng.standard_normal((3, 5)) + 1j * rng.standard_normal((3, 5))
    f_rf = np.eye(5, dtype=complex)[:, :2]
    ctx = make_ctx(h, f_rf, np.eye(2), np.zeros((2, 2)))
    assert np.allclose(effective_channel(ctx), h[:, :2])


def test_effective_channel_scalar_weight():
    rng = default_rng(2)
    h = rng.standard_normal((3, 4)) + 1j * rng.standard_normal((3, 4))
    f_rf = rng.standard_normal((4, 2)) + 1j * rng.standard_normal((4, 2))
    ctx = make_ctx(h, f_rf, 0.7 * np.eye(2), np.zeros((2, 2)))
    assert np.allclose(effective_channel(ctx), 0.7 * (h @ f_rf), atol=1e-12)


def test_effective_channel_naive_oracle():
    h, f_rf, _, a, cq = random_instance(3)
    ctx = make_ctx(h, f_rf, a, cq)
    assert np.allclose(effective_channel(ctx), naive_triple_product(h, f_rf, a),
                       atol=1e-12)


def test_effective_channel_shape_mismatch():
    h = np.zeros((2, 3), dtype=complex)
    f_rf = np.zeros((4, 2), dtype=complex)
    ctx = make_ctx(np.zeros((2, 4), dtype=complex), f_rf, np.eye(2), np.zeros((2, 2)))
    ctx.channel = ChannelRealization.from_matrix(h)
    with pytest.raises(ValueError):
        effective_channel(ctx)


# ---------------------------------------------------------------------------
# aggregate noise covariance
# ---------------------------------------------------------------------------


def test_noise_cov_zero_distortion():
    h, f_rf, _, a, _ = random_instance(4)
    ctx = make_ctx(h, f_rf, a, np.zeros((2, 2)), sigma2=2.5)
    assert np.allclose(aggregate_noise_cov(ctx), 2.5 * np.eye(2), atol=1e-12)


def test_noise_cov_identity_distortion_semi_unitary():
    rng = default_rng(5)
    g = rng.standard_normal((6, 2)) + 1j * rng.standard_normal((6, 2))
    f_rf, _ = np.linalg.qr(g)
    h = rng.standard_normal((3, 6)) + 1j * rng.standard_normal((3, 6))
    ctx = make_ctx(h, f_rf, np.eye(2), np.eye(2), sigma2=1.0)
    want = np.eye(3) + h @ f_rf @ f_rf.conj().T @ h.conj().T
    assert np.allclose(aggregate_noise_cov(ctx), want, atol=1e-12)


def test_noise_cov_naive_oracle():
    h, f_rf, _, a, cq = random_instance(6)
    ctx = make_ctx(h, f_rf, a, cq, sigma2=0.7)
    g = h @ f_rf
    naive = np.zeros((2, 2), dtype=complex)
    for i in range(2):
        for j in range(2):
            for k in range(2):
                for l in range(2):
                    naive[i, j] += g[i, k] * cq[k, l] * np.conj(g[j, l])
    naive += 0.7 * np.eye(2)
    got = aggregate_noise_cov(ctx)
    assert np.allclose(got, naive, atol=1e-12)
    assert np.allclose(got, got.conj().T)
    assert np.all(np.linalg.eigvalsh(got) > 0)


# ---------------------------------------------------------------------------
# achievable rate
# ---------------------------------------------------------------------------


def test_rate_identity_channel_exact():
    n = 4
    ctx = make_ctx(np.eye(n, dtype=complex), np.eye(n, dtype=complex),
                   np.eye(n), np.zeros((n, n)), sigma2=1.0, p_s=float(n), n_s=n)
    assert achievable_rate(ctx, np.eye(n, dtype=complex)) == float(n)


def test_rate_zero_precoder():
    h, f_rf, _, a, cq = random_instance(7)
    ctx = make_ctx(h, f_rf, a, cq)
    assert achievable_rate(ctx, np.zeros((2, 2), dtype=complex)) == 0.0


def test_rate_brute_force_oracle():
    # explicit inverse plus cofactor determinant at N_r = 2
    for seed in range(100):
        h, f_rf, bb, a, cq = random_instance(seed + 100)
        sigma2 = 0.5 + (seed % 7) * 0.3
        ctx = make_ctx(h, f_rf, a, cq, sigma2=sigma2, p_s=2.0)
        got = achievable_rate(ctx, bb)
        he = h @ f_rf @ a
        cnn = h @ f_rf @ cq @ f_rf.conj().T @ h.conj().T + sigma2 * np.eye(2)
        m = np.eye(2) + (2.0 / 2) * np.linalg.inv(cnn) @ he @ bb @ bb.conj().T @ he.conj().T
        det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
        assert got == pytest.approx(float(np.log2(det.real)), abs=1e-9)


def test_rate_monotone_in_noise():
    h, f_rf, bb, a, cq = random_instance(8)
    rates = []
    for sigma2 in (0.1, 0.5, 1.0, 5.0, 25.0):
        ctx = make_ctx(h, f_rf, a, cq, sigma2=sigma2)
        rates.append(achievable_rate(ctx, bb))
    assert all(r1 > r2 for r1, r2 in zip(rates, rates[1:]))


def test_rate_unitary_rotation_invariance():
    h, f_rf, bb, a, cq = random_instance(9)
    rng = default_rng(10)
    g = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    q_mat, _ = np.linalg.qr(g)
    ctx = make_ctx(h, f_rf, a, cq)
    assert achievable_rate(ctx, bb) == pytest.approx(
        achievable_rate(ctx, bb @ q_mat), abs=1e-10)


def test_rate_reduces_to_unquantized():
    # with C_qq = 0 and A = I the formula is the plain MIMO log-det rate
    h, f_rf, bb, _, _ = random_instance(11, n_r=3, n_t=5, n_rf=3, n_s=2)
    sigma2 = 1.3
    ctx = make_ctx(h, f_rf, np.eye(3), np.zeros((3, 3)), sigma2=sigma2,
                   p_s=2.0, n_s=2)
    got = achievable_rate(ctx, bb)
    hf = h @ f_rf @ bb
    unquantized = np.log2(np.linalg.det(
        np.eye(3) + (2.0 / 2 / sigma2) * hf @ hf.conj().T).real)
    assert got == pytest.approx(unquantized, abs=1e-10)


def test_rate_nonnegative_on_random_instances():
    for seed in range(20):
        h, f_rf, bb, a, cq = random_instance(seed + 500)
        ctx = make_ctx(h, f_rf, a, cq, sigma2=10.0 ** ((seed % 5) - 2))
        assert achievable_rate(ctx, bb) >= 0.0


def test_rate_error_on_nonfinite():
    h = np.full((2, 2), np.nan, dtype=complex)
    ctx = make_ctx(h, np.eye(2, dtype=complex), np.eye(2), np.zeros((2, 2)))
    with pytest.raises(RateEvaluationError, match="ill-conditioned"):
        achievable_rate(ctx, np.eye(2, dtype=complex))


def test_noise_variance_must_be_positive():
    with pytest.raises(ValueError):
        make_ctx(np.eye(2, dtype=complex), np.eye(2, dtype=complex),
                 np.eye(2), np.zeros((2, 2)), sigma2=0.0)
