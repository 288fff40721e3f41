"""Monte Carlo experiment engine.

Trials are paired across schemes: trial t always draws its channel with
seed ``base_seed + t``, so every scheme and SNR point sees the identical
channel set. Trials are independent work items; aggregation is an ordered
reduction over trial indices, so results are bitwise reproducible whether
run serially or on a worker pool.
"""

from __future__ import annotations

import hashlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .channel import generate_channel
from .config import SystemConfig
from .precoding import (
    alternating_projection,
    design_hybrid,
    fixed_point_cov,
    full_digital_baseline,
    svd_rf_init,
)

FULL_DIGITAL = "full_digital"
HYBRID_FIXED_RF = "hybrid_fixed_rf"
HYBRID_REDESIGN = "hybrid_redesign"
ALL_SCHEMES = (FULL_DIGITAL, HYBRID_FIXED_RF, HYBRID_REDESIGN)


@dataclass(frozen=True)
class ExperimentPlan:
    snr_grid_db: tuple[float, ...]
    n_trials: int
    schemes: tuple[str, ...] = ALL_SCHEMES
    iteration_counts: tuple[int, ...] = (1, 2, 3)
    base_seed: int = 1

    def __post_init__(self):
        if self.n_trials < 1:
            raise ValueError("n_trials must be >= 1")
        if not self.snr_grid_db:
            raise ValueError("snr_grid_db must be nonempty")
        if any(b <= a for a, b in zip(self.snr_grid_db, self.snr_grid_db[1:])):
            raise ValueError("snr_grid_db must be strictly increasing")
        unknown = set(self.schemes) - set(ALL_SCHEMES)
        if unknown:
            raise ValueError(f"unknown schemes: {sorted(unknown)}")

    @classmethod
    def from_config(cls, config: SystemConfig,
                    schemes: tuple[str, ...] = ALL_SCHEMES) -> "ExperimentPlan":
        return cls(tuple(config.snr_grid_db), config.n_trials, schemes,
                   tuple(range(1, config.iterations + 1)), config.seed)


@dataclass(frozen=True)
class RateRecord:
    scheme: str
    iterations: int
    snr_db: float
    mean_rate: float
    std_rate: float
    n_trials: int


@dataclass(frozen=True)
class ConvergenceRecord:
    n_rf: int
    iteration: int
    normalized_distance: float


@dataclass
class SweepResult:
    records: list[RateRecord] = field(default_factory=list)
    raw: dict = field(default_factory=dict)        # (scheme, K, snr_db) -> np.ndarray
    channel_hashes: list[str] = field(default_factory=list)
    trial_errors: list[tuple[int, str]] = field(default_factory=list)
    incomplete_cells: list[tuple[str, int, float]] = field(default_factory=list)

    def cell(self, scheme: str, iterations: int, snr_db: float) -> RateRecord:
        for rec in self.records:
            if (rec.scheme, rec.iterations, rec.snr_db) == (scheme, iterations, snr_db):
                return rec
        raise KeyError((scheme, iterations, snr_db))


def channel_hash(matrix: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(matrix).tobytes()).hexdigest()[:16]


def _run_trial(args) -> tuple[int, str, dict | None, str | None]:
    """One paired trial: every (scheme, K, snr) cell on the same channel draw."""
    trial, config, plan = args
    seed = plan.base_seed + trial
    channel = generate_channel(config.channel_params(seed=seed))
    k_max = max(plan.iteration_counts)
    cells: dict = {}
    try:
        for snr_db in plan.snr_grid_db:
            sigma2 = config.noise_variance(snr_db)
            if FULL_DIGITAL in plan.schemes:
                rate = full_digital_baseline(channel, config, sigma2)
                for k in plan.iteration_counts:
                    cells[(FULL_DIGITAL, k, snr_db)] = rate
            if HYBRID_FIXED_RF in plan.schemes:
                _, st = design_hybrid(channel, config, sigma2,
                                      redesign_rf=False, n_iterations=k_max)
                for k in plan.iteration_counts:
                    cells[(HYBRID_FIXED_RF, k, snr_db)] = st.rates_per_iteration[k - 1]
            if HYBRID_REDESIGN in plan.schemes:
                _, st = design_hybrid(channel, config, sigma2,
                                      redesign_rf=True, n_iterations=k_max)
                for k in plan.iteration_counts:
                    cells[(HYBRID_REDESIGN, k, snr_db)] = st.rates_per_iteration[k - 1]
    except Exception as exc:  # noqa: BLE001 - sweep must survive a bad trial
        return trial, channel_hash(channel.matrix), None, f"{type(exc).__name__}: {exc}"
    return trial, channel_hash(channel.matrix), cells, None


def run_sweep(plan: ExperimentPlan, config: SystemConfig,
              workers: int | None = 1) -> SweepResult:
    """Run the full (scheme, K, SNR) matrix over ``plan.n_trials`` paired trials.

    ``workers=None`` uses one process per CPU; results are merged in trial
    order either way. A failing trial is recorded and excluded from every
    cell rather than aborting the sweep.
    """
    if not plan.schemes:
        raise ValueError("no schemes selected")
    config.validate()
    jobs = [(t, config, plan) for t in range(plan.n_trials)]
    if workers == 1 or plan.n_trials == 1:
        outcomes = [_run_trial(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_run_trial, jobs, chunksize=4))
    outcomes.sort(key=lambda item: item[0])

    result = SweepResult()
    per_cell: dict = {key: [] for key in _cell_keys(plan)}
    for trial, chash, cells, error in outcomes:
        result.channel_hashes.append(chash)
        if error is not None:
            result.trial_errors.append((trial, error))
            continue
        for key, rate in cells.items():
            per_cell[key].append(rate)

    for key in _cell_keys(plan):
        rates = np.array(per_cell[key])
        scheme, k, snr_db = key
        result.raw[key] = rates
        if len(rates) < plan.n_trials:
            result.incomplete_cells.append(key)
        if len(rates) == 0:
            result.records.append(RateRecord(scheme, k, snr_db, np.nan, np.nan, 0))
            continue
        std = float(np.std(rates, ddof=1)) if len(rates) > 1 else 0.0
        result.records.append(RateRecord(scheme, k, snr_db,
                                         float(np.mean(rates)), std, len(rates)))
    return result


def _cell_keys(plan: ExperimentPlan):
    return [(scheme, k, snr_db)
            for scheme in plan.schemes
            for k in plan.iteration_counts
            for snr_db in plan.snr_grid_db]


def run_convergence(config: SystemConfig, n_rf_list=(2, 4, 8),
                    max_iters: int | None = None) -> list[ConvergenceRecord]:
    """Fixed-point covariance traces of the initial iteration, per RF chain count."""
    if not n_rf_list:
        raise ValueError("n_rf_list must be nonempty")
    records: list[ConvergenceRecord] = []
    channel = generate_channel(config.channel_params())
    for n_rf in n_rf_list:
        proj = alternating_projection(svd_rf_init(channel, n_rf))
        kwargs = {} if max_iters is None else {"max_iters": max_iters}
        fp = fixed_point_cov(channel, proj.matrix, config.p_max, config.p_s,
                             n_rf, config.epsilon, **kwargs)
        for k, dist in enumerate(fp.trace, start=1):
            records.append(ConvergenceRecord(n_rf, k, float(dist)))
    return records
