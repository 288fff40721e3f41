"""Clustered mmWave MIMO channel generation.

Narrowband geometric model: a small number of scatterer clusters, each
contributing several rays whose departure/arrival angles are Laplace-spread
around the cluster angle. Both ends use half-wavelength uniform linear
arrays. The global scaling makes E[||H||_F^2] = N_t * N_r.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.random import Generator, default_rng


@dataclass(frozen=True)
class ChannelParams:
    """Geometry and statistics of the clustered channel."""

    num_tx_antennas: int
    num_rx_antennas: int
    num_clusters: int = 1
    num_rays: int = 5
    ray_angle_spread: float = np.deg2rad(10.0)  # radians (std of ray offsets)
    cluster_angle_distribution: str = "uniform"
    ray_angle_distribution: str = "laplace"
    seed: int = 0

    def __post_init__(self):
        if self.num_tx_antennas < 1 or self.num_rx_antennas < 1:
            raise ValueError("antenna counts must be >= 1")
        if self.num_clusters < 1 or self.num_rays < 1:
            raise ValueError("cluster and ray counts must be >= 1")
        if not self.ray_angle_spread > 0:
            raise ValueError("ray_angle_spread must be > 0")
        if self.cluster_angle_distribution != "uniform":
            raise ValueError("only uniform cluster angles are supported")
        if self.ray_angle_distribution != "laplace":
            raise ValueError("only laplace ray offsets are supported")


@dataclass
class ChannelRealization:
    """One channel draw plus the cluster/ray metadata that generated it."""

    matrix: np.ndarray                # (N_r, N_t) complex
    cluster_angles_tx: np.ndarray     # (N_c,) radians
    cluster_angles_rx: np.ndarray     # (N_c,)
    ray_angles_tx: np.ndarray         # (N_c, N_p) radians
    ray_angles_rx: np.ndarray         # (N_c, N_p)
    ray_gains: np.ndarray             # (N_c, N_p) complex

    @classmethod
    def from_matrix(cls, matrix: np.ndarray) -> "ChannelRealization":
        """Wrap an explicit matrix (synthetic tests, baselines) with empty metadata."""
        empty = np.zeros(0)
        return cls(np.asarray(matrix, dtype=complex), empty, empty,
                   np.zeros((0, 0)), np.zeros((0, 0)), np.zeros((0, 0), dtype=complex))

    @property
    def num_rx_antennas(self) -> int:
        return self.matrix.shape[0]

    @property
    def num_tx_antennas(self) -> int:
        return self.matrix.shape[1]


def ula_response(num_antennas: int, angle: float) -> np.ndarray:
    """Unit-norm steering vector of a half-wavelength ULA: exp(j*pi*k*sin a)/sqrt(N)."""
    k = np.arange(num_antennas)
    return np.exp(1j * np.pi * k * np.sin(angle)) / np.sqrt(num_antennas)


def generate_channel(params: ChannelParams, rng: Generator | None = None) -> ChannelRealization:
    """Draw one channel realization.

    Deterministic for a fixed (params, params.seed) when no generator is
    passed. Draw order is fixed (cluster angles tx/rx, ray offsets tx/rx,
    gains) so results are bitwise reproducible.
    """
    if rng is None:
        rng = default_rng(params.seed)
    n_c, n_p = params.num_clusters, params.num_rays
    # Laplace scale b gives std sqrt(2)*b; spread is specified as a std.
    b = params.ray_angle_spread / np.sqrt(2.0)

    cluster_tx = rng.uniform(-np.pi / 2, np.pi / 2, n_c)
    cluster_rx = rng.uniform(-np.pi / 2, np.pi / 2, n_c)
    ray_tx = cluster_tx[:, None] + rng.laplace(0.0, b, (n_c, n_p))
    ray_rx = cluster_rx[:, None] + rng.laplace(0.0, b, (n_c, n_p))
    gains = (rng.standard_normal((n_c, n_p)) + 1j * rng.standard_normal((n_c, n_p))) / np.sqrt(2.0)

    matrix = _assemble(params, ray_tx, ray_rx, gains)
    return ChannelRealization(matrix, cluster_tx, cluster_rx, ray_tx, ray_rx, gains)


def recombine(params: ChannelParams, realization: ChannelRealization) -> np.ndarray:
    """Rebuild the matrix from stored metadata (consistency oracle)."""
    return _assemble(params, realization.ray_angles_tx,
                     realization.ray_angles_rx, realization.ray_gains)


def _assemble(params: ChannelParams, ray_tx: np.ndarray, ray_rx: np.ndarray,
              gains: np.ndarray) -> np.ndarray:
    n_t, n_r = params.num_tx_antennas, params.num_rx_antennas
    n_c, n_p = params.num_clusters, params.num_rays
    scale = np.sqrt(n_t * n_r / (n_c * n_p))
    h = np.zeros((n_r, n_t), dtype=complex)
    for c in range(n_c):
        for p in range(n_p):
            a_rx = ula_response(n_r, ray_rx[c, p])
            a_tx = ula_response(n_t, ray_tx[c, p])
            h += gains[c, p] * np.outer(a_rx, a_tx.conj())
    return scale * h


def dump_channel_csv(realization: ChannelRealization, path) -> None:
    """Write the matrix row-major as re,im pairs (debug aid)."""
    h = realization.matrix
    n_t = h.shape[1]
    header = ",".join(f"re_{j},im_{j}" for j in range(n_t))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for row in h:
            fields = []
            for z in row:
                fields.append(repr(float(z.real)))
                fields.append(repr(float(z.imag)))
            fh.write(",".join(fields) + "\n")


def load_channel_csv(path) -> np.ndarray:
    """Read back a matrix written by :func:`dump_channel_csv`."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    rows = []
    for ln in lines[1:]:
        vals = [float(tok) for tok in ln.split(",")]
        rows.append([complex(vals[2 * j], vals[2 * j + 1]) for j in range(len(vals) // 2)])
    return np.array(rows, dtype=complex)
