"""One-bit quantizer and its two linear surrogates.

Both surrogates replace the elementwise one-bit DAC with a diagonal gain
plus additive distortion of known covariance:

* additive-noise model: scalar gain sqrt(1-eta), diagonal distortion
  covariance (entry correlations dropped);
* Bussgang decomposition: gain matched to the input/output cross-covariance,
  full distortion covariance obtained from the arcsine correlation of the
  hard-limited Gaussian input.

Quantizer outputs are taken at unit power per RF chain inside the
linearization math; the transmit amplitude is handled by the power
normalization in the precoding module.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Distortion factor of a one-bit converter (fraction of power lost).
ONE_BIT_DISTORTION_FACTOR = 0.3634

AQNM = "aqnm"
BUSSGANG = "bussgang"


class SilentRFChainError(ValueError):
    """An RF chain carries zero power, so the Bussgang gain is undefined."""


@dataclass
class LinearizationModel:
    """Gain matrix and distortion covariance of a linearized quantizer."""

    scheme: str                 # AQNM or BUSSGANG
    weight: np.ndarray          # (N_rf, N_rf) real diagonal
    distortion_cov: np.ndarray  # (N_rf, N_rf) Hermitian PSD

    @property
    def num_chains(self) -> int:
        return self.weight.shape[0]


@dataclass
class SignalStats:
    """Second-order statistics of the baseband-precoded data vector."""

    data_power: float           # total power of the unprecoded streams
    num_streams: int
    input_cov: np.ndarray       # (N_rf, N_rf) = (P_s/N_s) * F_bb F_bb^H

    @classmethod
    def from_precoder(cls, bb_precoder: np.ndarray, data_power: float) -> "SignalStats":
        bb = np.asarray(bb_precoder, dtype=complex)
        n_s = bb.shape[1]
        cov = (data_power / n_s) * (bb @ bb.conj().T)
        return cls(data_power, n_s, cov)


def distortion_factor(bits: int) -> float:
    """Power-loss fraction of a b-bit converter.

    Uses the tabulated one-bit value; higher resolutions fall back to the
    (pi*sqrt(3)/2) * 2^(-2b) approximation.
    """
    if bits < 1:
        raise ValueError("bits must be >= 1")
    if bits == 1:
        return ONE_BIT_DISTORTION_FACTOR
    return (np.pi * np.sqrt(3.0) / 2.0) * 2.0 ** (-2 * bits)


def one_bit_quantize(x: np.ndarray, per_entry_power: float = 1.0) -> np.ndarray:
    """Elementwise complex sign quantizer.

    Each output is sqrt(p/2) * (sign(Re x) + j sign(Im x)) with sign(0) = +1,
    so every entry has squared magnitude exactly ``per_entry_power``.
    """
    x = np.asarray(x)
    amp = np.sqrt(per_entry_power / 2.0)
    re = np.where(x.real >= 0.0, 1.0, -1.0)
    im = np.where(x.imag >= 0.0, 1.0, -1.0)
    return amp * (re + 1j * im)


def aqnm_linearize(stats: SignalStats, bb_precoder: np.ndarray,
                   eta: float = ONE_BIT_DISTORTION_FACTOR) -> LinearizationModel:
    """Additive-noise linearization: scalar gain, diagonal distortion covariance."""
    bb = np.asarray(bb_precoder, dtype=complex)
    n_rf = bb.shape[0]
    weight = np.sqrt(1.0 - eta) * np.eye(n_rf)
    gram_diag = np.real(np.einsum("ij,ij->i", bb, bb.conj()))
    cov = (stats.data_power / stats.num_streams) * eta * (1.0 - eta) * np.diag(gram_diag)
    return LinearizationModel(AQNM, weight, cov.astype(complex))


def arcsin_covariance(input_cov: np.ndarray) -> np.ndarray:
    """Covariance of the unit-power quantizer output for Gaussian input.

    Entrywise arcsine of the correlation-normalized real and imaginary parts
    of the input covariance, scaled by 2/pi. Has exact unit diagonal.
    """
    c = np.asarray(input_cov, dtype=complex)
    d = np.real(np.diag(c))
    if np.any(d <= 0.0):
        raise SilentRFChainError("silent RF chain: Bussgang weight undefined")
    inv_sqrt = 1.0 / np.sqrt(d)
    corr = c * np.outer(inv_sqrt, inv_sqrt)
    # guard against |corr| creeping past 1 by roundoff; the diagonal is 1 by
    # construction and must be pinned exactly (arcsin amplifies error near 1)
    re = np.clip(corr.real, -1.0, 1.0)
    im = np.clip(corr.imag, -1.0, 1.0)
    np.fill_diagonal(re, 1.0)
    np.fill_diagonal(im, 0.0)
    return (2.0 / np.pi) * (np.arcsin(re) + 1j * np.arcsin(im))


def bussgang_linearize(stats: SignalStats, bb_precoder: np.ndarray) -> LinearizationModel:
    """Bussgang decomposition of the one-bit quantizer.

    Gain is sqrt(2/pi) * diag(C_xx)^(-1/2); the distortion covariance is the
    arcsine-law output covariance minus the linearly explained part and is
    generally not diagonal.
    """
    c_xx = stats.input_cov
    d = np.real(np.diag(c_xx))
    if np.any(d <= 0.0):
        raise SilentRFChainError("silent RF chain: Bussgang weight undefined")
    weight = np.diag(np.sqrt(2.0 / np.pi) / np.sqrt(d))
    c_out = arcsin_covariance(c_xx)
    cov = c_out - weight @ c_xx @ weight
    cov = 0.5 * (cov + cov.conj().T)
    return LinearizationModel(BUSSGANG, weight, cov)
