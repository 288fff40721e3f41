"""RF and baseband precoder design.

Pipeline per channel realization: SVD-based RF selection, alternating
projection onto the constant-modulus/semi-unitary sets, a fixed-point loop
that solves the mutual dependency between the baseband scaling and the
distortion covariance, then rate-maximizing greedy phase updates of the RF
stage on the quantized phase grid for the remaining outer iterations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelRealization
from .quantization import (
    AQNM,
    ONE_BIT_DISTORTION_FACTOR,
    LinearizationModel,
    SignalStats,
    aqnm_linearize,
    bussgang_linearize,
)
from .rate import RateContext, achievable_rate, effective_channel

APA_TOL = 1e-8
APA_MAX_ITERS = 500
FIXED_POINT_MAX_ITERS = 200

_LN2 = math.log(2.0)


class PowerBudgetError(ValueError):
    """Distortion power alone exceeds the transmit power budget."""


class DecompositionError(RuntimeError):
    """A matrix factorization failed to converge."""


# ---------------------------------------------------------------------------
# data carriers
# ---------------------------------------------------------------------------


@dataclass
class HybridPrecoder:
    """RF/baseband precoder pair; phases holds grid indices when quantized."""

    rf: np.ndarray                      # (N_t, N_rf), entries of modulus 1/sqrt(N_t)
    bb: np.ndarray                      # (N_rf, N_s)
    phases: np.ndarray | None = None    # (N_t, N_rf) int indices into the phase grid


@dataclass
class ProjectionResult:
    matrix: np.ndarray
    residual: float        # ||F^H F - I||_F of the returned matrix
    iterations: int
    converged: bool


@dataclass
class GreedySearchResult:
    rf: np.ndarray
    phase_indices: np.ndarray
    n_evaluations: int
    input_rate: float               # rate of the matrix as passed in
    start_rate: float               # rate after snapping onto the grid
    final_rate: float
    entry_rates: np.ndarray         # accepted rate after each entry update
    entry_current_rates: np.ndarray  # in-batch rate of the incumbent phase


@dataclass
class FixedPointResult:
    bb: np.ndarray
    cov: np.ndarray
    trace: np.ndarray               # normalized covariance distances per iterate
    iterates: list[np.ndarray]
    converged: bool
    iterations: int
    power_checks: list["PowerCheck"]


@dataclass
class PowerCheck:
    """Transmit-power identity evaluated right after a normalization."""

    context: str
    lhs: float
    p_max: float

    @property
    def rel_error(self) -> float:
        return abs(self.lhs - self.p_max) / self.p_max


@dataclass
class PowerIdentityRecord:
    """Both forms of the transmit power plus the semi-unitarity residual."""

    precoded: float      # (P_s/N_s)||F_rf A F_bb||^2 + tr(F_rf C F_rf^H)
    chain: float         # (P_s/N_s)||A F_bb||^2 + tr(C)
    semi_residual: float


@dataclass
class DesignState:
    """Per-run diagnostics of the alternating optimization."""

    rates_per_iteration: list[float] = field(default_factory=list)
    post_projection_rates: list[float] = field(default_factory=list)
    cov_trace: np.ndarray = field(default_factory=lambda: np.zeros(0))
    linearization: LinearizationModel | None = None
    snapshots: list["IterationSnapshot"] = field(default_factory=list)
    apa_residuals: list[float] = field(default_factory=list)
    apa_modulus_errors: list[float] = field(default_factory=list)
    greedy: list[GreedySearchResult] = field(default_factory=list)
    power_checks: list[PowerCheck] = field(default_factory=list)
    power_identity: list[PowerIdentityRecord] = field(default_factory=list)
    snap_residuals: list[float] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    fixed_point_converged: bool = False
    fixed_point_iterations: int = 0


@dataclass
class IterationSnapshot:
    rf: np.ndarray
    bb: np.ndarray
    linearization: LinearizationModel
    phases: np.ndarray | None


# ---------------------------------------------------------------------------
# RF stage
# ---------------------------------------------------------------------------


def svd_rf_init(channel: ChannelRealization, n_rf: int) -> np.ndarray:
    """Right singular vectors of H for the n_rf largest singular values."""
    h = channel.matrix
    if n_rf > h.shape[1]:
        raise ValueError("n_rf cannot exceed the transmit array size")
    try:
        _, _, vh = np.linalg.svd(h, full_matrices=True)
    except np.linalg.LinAlgError as exc:
        raise DecompositionError("decomposition failed") from exc
    return vh[:n_rf].conj().T


def project_constant_modulus(f: np.ndarray, n_t: int | None = None) -> np.ndarray:
    """Nearest matrix with all entries of modulus 1/sqrt(N_t); zeros get phase 0."""
    if n_t is None:
        n_t = f.shape[0]
    return np.exp(1j * np.angle(f)) / np.sqrt(n_t)


def project_semi_unitary(f: np.ndarray) -> np.ndarray:
    """Polar factor of f: the closest matrix with orthonormal columns."""
    try:
        u, _, vh = np.linalg.svd(f, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise DecompositionError("decomposition failed") from exc
    return u @ vh


def semi_unitary_residual(f: np.ndarray) -> float:
    n = f.shape[1]
    return float(np.linalg.norm(f.conj().T @ f - np.eye(n)))


def alternating_projection(candidate: np.ndarray, max_iters: int = APA_MAX_ITERS,
                           tol: float = APA_TOL) -> ProjectionResult:
    """Alternate constant-modulus and semi-unitary projections.

    Stops when consecutive constant-modulus iterates are closer than ``tol``
    in Frobenius norm. The returned matrix is always the last constant-modulus
    projection, so the hardware constraint is exact and the orthonormality
    residual is reported, not guaranteed.
    """
    f = np.asarray(candidate, dtype=complex)
    n_t = f.shape[0]
    prev_cm = None
    cm = project_constant_modulus(f, n_t)
    converged = False
    iterations = 0
    for iterations in range(1, max_iters + 1):
        cm = project_constant_modulus(f, n_t)
        if prev_cm is not None and np.linalg.norm(cm - prev_cm) < tol:
            converged = True
            break
        prev_cm = cm
        f = project_semi_unitary(cm)
    return ProjectionResult(cm, semi_unitary_residual(cm), iterations, converged)


# ---------------------------------------------------------------------------
# quantized phase grid
# ---------------------------------------------------------------------------


def phase_grid(delta: float) -> tuple[np.ndarray, int]:
    """Grid {-pi, -pi+delta, ..., pi} and the number of distinct search points.

    The final +pi endpoint aliases -pi, so searches cover the first
    ceil(2*pi/delta) points only.
    """
    if not 0 < delta <= 2 * np.pi:
        raise ValueError("delta must be in (0, 2*pi]")
    n_search = int(np.ceil(2 * np.pi / delta - 1e-9))
    phases = -np.pi + delta * np.arange(n_search + 1)
    phases[-1] = np.pi
    return phases, n_search


def snap_to_grid(f: np.ndarray, delta: float) -> tuple[np.ndarray, np.ndarray]:
    """Round each entry's phase to the nearest grid point at modulus 1/sqrt(N_t)."""
    phases, n_search = phase_grid(delta)
    n_t = f.shape[0]
    idx = np.rint((np.angle(f) + np.pi) / delta).astype(int)
    idx %= n_search  # the +pi endpoint aliases index 0
    snapped = np.exp(1j * phases[idx]) / np.sqrt(n_t)
    return snapped, idx


def _batched_rates(g_stack: np.ndarray, distortion_cov: np.ndarray, w: np.ndarray,
                   noise_variance: float, scale: float) -> np.ndarray:
    """Rates for a stack of G = H @ F_rf candidates, via log-det differences."""
    n_r = g_stack.shape[1]
    eye = noise_variance * np.eye(n_r)
    c_all = g_stack @ distortion_cov @ g_stack.conj().transpose(0, 2, 1) + eye
    c_all = 0.5 * (c_all + c_all.conj().transpose(0, 2, 1))
    b_all = g_stack @ w
    s_all = c_all + scale * (b_all @ b_all.conj().transpose(0, 2, 1))
    s_all = 0.5 * (s_all + s_all.conj().transpose(0, 2, 1))
    _, ld_signal = np.linalg.slogdet(s_all)
    _, ld_noise = np.linalg.slogdet(c_all)
    return (ld_signal - ld_noise) / _LN2


def greedy_phase_search(ctx: RateContext, bb_precoder: np.ndarray,
                        delta: float) -> GreedySearchResult:
    """Coordinate ascent over the quantized phases of the RF precoder.

    The input is first snapped onto the grid; every entry is then visited
    once in row-major order and set to the rate-maximizing grid phase with
    all other entries held fixed. Each entry costs exactly ceil(2*pi/delta)
    rate evaluations; ties pick the smallest phase index. The incumbent
    phase is always among the candidates, so no entry update can lower the
    rate.
    """
    h = ctx.channel.matrix
    cq = ctx.linearization.distortion_cov
    w = ctx.linearization.weight @ np.asarray(bb_precoder, dtype=complex)
    sigma2 = ctx.noise_variance
    scale = ctx.data_power / ctx.num_streams
    n_t, n_rf = ctx.rf_precoder.shape

    phases, n_search = phase_grid(delta)
    cand_vals = np.exp(1j * phases[:n_search]) / np.sqrt(n_t)

    g_input = h @ ctx.rf_precoder
    input_rate = float(_batched_rates(g_input[None], cq, w, sigma2, scale)[0])

    f, indices = snap_to_grid(ctx.rf_precoder, delta)
    g = h @ f
    start_rate = float(_batched_rates(g[None], cq, w, sigma2, scale)[0])

    entry_rates = np.empty(n_t * n_rf)
    entry_current = np.empty(n_t * n_rf)
    n_evaluations = 0
    pos = 0
    for m in range(n_t):
        h_m = h[:, m]
        for n in range(n_rf):
            g_minus = g[:, n] - h_m * f[m, n]
            gn_all = g_minus[None, :] + cand_vals[:, None] * h_m[None, :]
            g_all = np.repeat(g[None], n_search, axis=0)
            g_all[:, :, n] = gn_all
            rates = _batched_rates(g_all, cq, w, sigma2, scale)
            n_evaluations += n_search
            best = int(np.argmax(rates))
            entry_current[pos] = rates[indices[m, n]]
            entry_rates[pos] = rates[best]
            f[m, n] = cand_vals[best]
            indices[m, n] = best
            g[:, n] = gn_all[best]
            pos += 1
    final_rate = float(entry_rates[-1])
    return GreedySearchResult(f, indices, n_evaluations, input_rate, start_rate,
                              final_rate, entry_rates, entry_current)


# ---------------------------------------------------------------------------
# baseband stage
# ---------------------------------------------------------------------------


def bb_design(eff_channel: np.ndarray, n_s: int) -> np.ndarray:
    """Dominant n_s right singular vectors of the effective channel."""
    if n_s > eff_channel.shape[1]:
        raise ValueError("n_s cannot exceed the number of RF chains")
    try:
        _, _, vh = np.linalg.svd(eff_channel, full_matrices=True)
    except np.linalg.LinAlgError as exc:
        raise DecompositionError("decomposition failed") from exc
    return vh[:n_s].conj().T


def bb_normalize(candidate_bb: np.ndarray, linearization: LinearizationModel,
                 p_max: float, p_s: float, n_s: int) -> np.ndarray:
    """Scale the candidate so the transmit-power identity holds with equality."""
    tr_c = float(np.real(np.trace(linearization.distortion_cov)))
    if p_max <= tr_c:
        raise PowerBudgetError("quantization distortion exceeds power budget")
    weighted = linearization.weight @ np.asarray(candidate_bb, dtype=complex)
    denom = (p_s / n_s) * float(np.linalg.norm(weighted) ** 2)
    if denom <= 0.0:
        raise ValueError("candidate precoder carries no power through the weight")
    return np.sqrt((p_max - tr_c) / denom) * candidate_bb


def chain_power(linearization: LinearizationModel, bb: np.ndarray,
                p_s: float, n_s: int) -> float:
    """(P_s/N_s)||A F_bb||_F^2 + tr(C), the per-chain form of the transmit power."""
    weighted = linearization.weight @ bb
    return (p_s / n_s) * float(np.linalg.norm(weighted) ** 2) \
        + float(np.real(np.trace(linearization.distortion_cov)))


def precoded_power(rf: np.ndarray, linearization: LinearizationModel, bb: np.ndarray,
                   p_s: float, n_s: int) -> float:
    """(P_s/N_s)||F_rf A F_bb||_F^2 + tr(F_rf C F_rf^H); equals the per-chain
    form when F_rf has orthonormal columns."""
    weighted = rf @ linearization.weight @ bb
    spread = rf @ linearization.distortion_cov @ rf.conj().T
    return (p_s / n_s) * float(np.linalg.norm(weighted) ** 2) \
        + float(np.real(np.trace(spread)))


def fixed_point_cov(channel: ChannelRealization, rf: np.ndarray, p_max: float,
                    p_s: float, n_s: int, epsilon: float,
                    max_iters: int = FIXED_POINT_MAX_ITERS,
                    eta: float = ONE_BIT_DISTORTION_FACTOR) -> FixedPointResult:
    """Solve the coupled baseband-scaling / distortion-covariance equations.

    Starting from a zero covariance, alternately rescales the SVD candidate
    to meet the power budget and refreshes the diagonal distortion
    covariance, until successive covariances differ by at most
    epsilon * N_rf in Frobenius norm.
    """
    n_rf = rf.shape[1]
    weight = np.sqrt(1.0 - eta) * np.eye(n_rf)
    h_e = channel.matrix @ rf @ weight
    bb_hat = bb_design(h_e, n_s)

    cov = np.zeros((n_rf, n_rf), dtype=complex)
    trace: list[float] = []
    iterates: list[np.ndarray] = []
    power_checks: list[PowerCheck] = []
    bb = bb_hat
    converged = False
    iterations = 0
    for iterations in range(1, max_iters + 1):
        lin = LinearizationModel(AQNM, weight, cov)
        bb = bb_normalize(bb_hat, lin, p_max, p_s, n_s)
        power_checks.append(PowerCheck(f"fixed_point[{iterations}]",
                                       chain_power(lin, bb, p_s, n_s), p_max))
        stats = SignalStats.from_precoder(bb, p_s)
        new_cov = aqnm_linearize(stats, bb, eta).distortion_cov
        dist = float(np.linalg.norm(new_cov - cov)) / n_rf
        trace.append(dist)
        iterates.append(new_cov.copy())
        cov = new_cov
        if dist <= epsilon:
            converged = True
            break
    return FixedPointResult(bb, cov, np.array(trace), iterates, converged,
                            iterations, power_checks)


# ---------------------------------------------------------------------------
# full alternating optimization
# ---------------------------------------------------------------------------


def design_hybrid(channel: ChannelRealization, config, noise_variance: float, *,
                  redesign_rf: bool = True,
                  n_iterations: int | None = None) -> tuple[HybridPrecoder, DesignState]:
    """Run the alternating optimization for ``n_iterations`` outer iterations.

    Iteration 1: SVD RF init, projection onto the hardware sets, and the
    additive-noise fixed-point loop for the baseband scaling. Iterations
    2..K: Bussgang gain/covariance from the previous baseband precoder,
    SVD redesign of the baseband stage, power normalization, and (unless
    ``redesign_rf`` is False) the greedy phase search over the quantized
    grid, followed by projection and a snap back onto the grid to prepare
    the next iteration.

    The recorded per-iteration rate uses the linearization pair current in
    that iteration. For a redesign iteration it is the rate achieved by the
    phase search (a grid-exact, power-feasible setting); the rate of the
    re-orthogonalized matrix handed to the next iteration is kept separately
    in ``post_projection_rates``.
    """
    k_outer = config.iterations if n_iterations is None else n_iterations
    if k_outer < 1:
        raise ValueError("need at least one outer iteration")
    state = DesignState()

    proj = alternating_projection(svd_rf_init(channel, config.n_rf))
    _record_apa(state, proj, config.n_t)
    rf = proj.matrix

    fp = fixed_point_cov(channel, rf, config.p_max, config.p_s, config.n_s,
                         config.epsilon)
    if not fp.converged:
        state.warnings.append("fixed-point covariance loop hit its iteration cap")
    state.cov_trace = fp.trace
    state.power_checks.extend(fp.power_checks)
    state.fixed_point_converged = fp.converged
    state.fixed_point_iterations = fp.iterations
    bb = fp.bb
    lin = LinearizationModel(AQNM, np.sqrt(1.0 - ONE_BIT_DISTORTION_FACTOR)
                             * np.eye(config.n_rf), fp.cov)
    phases = None
    rf_reported = rf
    _finish_iteration(state, channel, config, noise_variance, rf, bb, lin, phases)
    state.post_projection_rates.append(state.rates_per_iteration[-1])

    for i in range(2, k_outer + 1):
        stats = SignalStats.from_precoder(bb, config.p_s)
        lin = bussgang_linearize(stats, bb)
        ctx = RateContext(channel, rf, lin, noise_variance, config.p_s, config.n_s)
        bb_hat = bb_design(effective_channel(ctx), config.n_s)
        bb = bb_normalize(bb_hat, lin, config.p_max, config.p_s, config.n_s)
        state.power_checks.append(PowerCheck(f"iteration[{i}]",
                                             chain_power(lin, bb, config.p_s, config.n_s),
                                             config.p_max))
        rate_override = None
        if redesign_rf:
            ctx = RateContext(channel, rf, lin, noise_variance, config.p_s, config.n_s)
            search = greedy_phase_search(ctx, bb, config.delta_rad)
            state.greedy.append(search)
            rf_reported, phases = search.rf, search.phase_indices
            rate_override = search.final_rate
            proj = alternating_projection(search.rf)
            _record_apa(state, proj, config.n_t)
            rf, _ = snap_to_grid(proj.matrix, config.delta_rad)
            state.snap_residuals.append(semi_unitary_residual(rf))
        else:
            rf_reported = rf
        _finish_iteration(state, channel, config, noise_variance, rf_reported,
                          bb, lin, phases, rate=rate_override)
        post_ctx = RateContext(channel, rf, lin, noise_variance, config.p_s, config.n_s)
        state.post_projection_rates.append(achievable_rate(post_ctx, bb))

    state.linearization = lin
    return HybridPrecoder(rf_reported, bb, phases), state


def _record_apa(state: DesignState, proj: ProjectionResult, n_t: int) -> None:
    state.apa_residuals.append(proj.residual)
    state.apa_modulus_errors.append(
        float(np.max(np.abs(np.abs(proj.matrix) * np.sqrt(n_t) - 1.0))))
    if not proj.converged:
        state.warnings.append("alternating projection hit its iteration cap")


def _finish_iteration(state: DesignState, channel, config, noise_variance,
                      rf, bb, lin, phases, rate: float | None = None) -> None:
    if rate is None:
        ctx = RateContext(channel, rf, lin, noise_variance, config.p_s, config.n_s)
        rate = achievable_rate(ctx, bb)
    state.rates_per_iteration.append(rate)
    state.power_identity.append(PowerIdentityRecord(
        precoded_power(rf, lin, bb, config.p_s, config.n_s),
        chain_power(lin, bb, config.p_s, config.n_s),
        semi_unitary_residual(rf)))
    state.snapshots.append(IterationSnapshot(
        rf.copy(), bb.copy(), lin, None if phases is None else phases.copy()))


def full_digital_baseline(channel: ChannelRealization, config,
                          noise_variance: float) -> float:
    """Rate of the SVD precoder with ideal converters and the full power budget."""
    h = channel.matrix
    n_s = config.n_s
    if n_s > min(h.shape):
        raise ValueError("n_s exceeds the channel rank bound")
    try:
        _, _, vh = np.linalg.svd(h, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise DecompositionError("decomposition failed") from exc
    f_fd = np.sqrt(config.p_max / config.p_s) * vh[:n_s].conj().T
    lin = LinearizationModel("unquantized", np.eye(n_s),
                             np.zeros((n_s, n_s), dtype=complex))
    ctx = RateContext(channel, f_fd, lin, noise_variance, config.p_s, n_s)
    return achievable_rate(ctx, np.eye(n_s, dtype=complex))
