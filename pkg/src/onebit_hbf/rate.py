"""Effective channel, aggregate-noise covariance, and the achievable-rate bound.

The rate is the log-det lower bound obtained by treating the aggregate of
thermal noise and linearized quantization distortion as Gaussian with
matched covariance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .channel import ChannelRealization
from .quantization import LinearizationModel


class RateEvaluationError(RuntimeError):
    """Raised when the rate evaluation produces a non-finite value."""


@dataclass
class RateContext:
    """Everything needed to evaluate the rate except the baseband precoder."""

    channel: ChannelRealization
    rf_precoder: np.ndarray             # (N_t, N_rf)
    linearization: LinearizationModel
    noise_variance: float
    data_power: float
    num_streams: int

    def __post_init__(self):
        if not self.noise_variance > 0.0:
            raise ValueError("noise_variance must be > 0")


def effective_channel(ctx: RateContext) -> np.ndarray:
    """Compound channel H @ F_rf @ A seen by the baseband precoder."""
    h = ctx.channel.matrix
    if h.shape[1] != ctx.rf_precoder.shape[0]:
        raise ValueError("channel/RF precoder dimension mismatch")
    return h @ ctx.rf_precoder @ ctx.linearization.weight


def aggregate_noise_cov(ctx: RateContext) -> np.ndarray:
    """Covariance of thermal noise plus RF-precoded quantization distortion."""
    h = ctx.channel.matrix
    g = h @ ctx.rf_precoder
    cov = g @ ctx.linearization.distortion_cov @ g.conj().T
    cov = cov + ctx.noise_variance * np.eye(h.shape[0])
    return 0.5 * (cov + cov.conj().T)


def achievable_rate(ctx: RateContext, bb_precoder: np.ndarray) -> float:
    """Gaussian-noise lower bound on the rate, in bits/s/Hz.

    log2 det(I + (P_s/N_s) * C_nn^{-1} H_e F_bb F_bb^H H_e^H), evaluated
    through a Cholesky factorization of C_nn and the eigenvalues of the
    small-side Hermitian form; negative eigenvalue noise is clamped so the
    result is never below zero.
    """
    bb = np.asarray(bb_precoder, dtype=complex)
    h_e, c_nn = effective_channel(ctx), aggregate_noise_cov(ctx)
    b = h_e @ bb
    scale = ctx.data_power / ctx.num_streams
    try:
        factor = cho_factor(c_nn, lower=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        cond = np.linalg.cond(c_nn) if np.all(np.isfinite(c_nn)) else np.inf
        raise RateEvaluationError(
            f"ill-conditioned rate evaluation (cond={cond:.3e})") from exc
    m = scale * (b.conj().T @ cho_solve(factor, b))
    m = 0.5 * (m + m.conj().T)
    eigs = np.linalg.eigvalsh(m)
    rate = float(np.sum(np.log2(1.0 + np.clip(eigs, 0.0, None))))
    if not np.isfinite(rate):
        raise RateEvaluationError(
            f"ill-conditioned rate evaluation (cond={np.linalg.cond(c_nn):.3e})"
        )
    return rate
