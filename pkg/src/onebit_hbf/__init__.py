"""Hybrid precoding with one-bit DACs: design, rate evaluation, experiments."""

from .channel import ChannelParams, ChannelRealization, generate_channel
from .config import ConfigError, SystemConfig, load_config, save_config
from .harness import (
    ALL_SCHEMES,
    FULL_DIGITAL,
    HYBRID_FIXED_RF,
    HYBRID_REDESIGN,
    ExperimentPlan,
    SweepResult,
    run_convergence,
    run_sweep,
)
from .precoding import (
    DesignState,
    HybridPrecoder,
    alternating_projection,
    bb_design,
    bb_normalize,
    design_hybrid,
    fixed_point_cov,
    full_digital_baseline,
    greedy_phase_search,
    svd_rf_init,
)
from .quantization import (
    LinearizationModel,
    SignalStats,
    aqnm_linearize,
    bussgang_linearize,
    one_bit_quantize,
)
from .rate import RateContext, achievable_rate, aggregate_noise_cov, effective_channel

__all__ = [
    "ALL_SCHEMES",
    "ChannelParams",
    "ChannelRealization",
    "ConfigError",
    "DesignState",
    "ExperimentPlan",
    "FULL_DIGITAL",
    "HYBRID_FIXED_RF",
    "HYBRID_REDESIGN",
    "HybridPrecoder",
    "LinearizationModel",
    "RateContext",
    "SignalStats",
    "SweepResult",
    "SystemConfig",
    "achievable_rate",
    "aggregate_noise_cov",
    "alternating_projection",
    "aqnm_linearize",
    "bb_design",
    "bb_normalize",
    "bussgang_linearize",
    "design_hybrid",
    "effective_channel",
    "fixed_point_cov",
    "full_digital_baseline",
    "generate_channel",
    "greedy_phase_search",
    "load_config",
    "one_bit_quantize",
    "run_convergence",
    "run_sweep",
    "save_config",
    "svd_rf_init",
]

__version__ = "0.1.0"
