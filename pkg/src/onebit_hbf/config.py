"""System configuration: scalar simulation parameters, file parsing, validation.

Config files are INI-style ``key = value`` sections. Angles are given in
degrees in files and flags and converted to radians where the math needs
them. Precedence when assembling a run: command-line flags over file values
over built-in defaults.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, fields, replace

import numpy as np

from .channel import ChannelParams


class ConfigError(ValueError):
    """Invalid configuration file or parameter combination."""


@dataclass(frozen=True)
class SystemConfig:
    n_t: int = 32
    n_r: int = 8
    n_rf: int = 4
    n_s: int = 4
    p_max: float = 10.0          # watts
    p_s: float = 1.0             # watts
    n_c: int = 1
    n_p: int = 5
    ray_spread_deg: float = 10.0
    delta_deg: float = 5.0       # phase shifter resolution
    epsilon: float = 1e-12       # fixed-point stopping tolerance
    iterations: int = 3          # outer iterations K
    seed: int = 1
    snr_min_db: float = -10.0
    snr_max_db: float = 10.0
    snr_step_db: float = 5.0
    n_trials: int = 200

    @property
    def delta_rad(self) -> float:
        return float(np.deg2rad(self.delta_deg))

    @property
    def ray_spread_rad(self) -> float:
        return float(np.deg2rad(self.ray_spread_deg))

    @property
    def snr_grid_db(self) -> list[float]:
        n = int(round((self.snr_max_db - self.snr_min_db) / self.snr_step_db))
        return [self.snr_min_db + k * self.snr_step_db for k in range(n + 1)]

    def noise_variance(self, snr_db: float) -> float:
        """sigma_n^2 from SNR = P_max / sigma_n^2."""
        return self.p_max / 10.0 ** (snr_db / 10.0)

    def channel_params(self, seed: int | None = None) -> ChannelParams:
        return ChannelParams(
            num_tx_antennas=self.n_t,
            num_rx_antennas=self.n_r,
            num_clusters=self.n_c,
            num_rays=self.n_p,
            ray_angle_spread=self.ray_spread_rad,
            seed=self.seed if seed is None else seed,
        )

    def validate(self) -> "SystemConfig":
        if min(self.n_t, self.n_r, self.n_rf, self.n_s, self.n_c, self.n_p) < 1:
            raise ConfigError("all dimension parameters must be >= 1")
        if not (self.n_s <= self.n_rf <= self.n_t):
            raise ConfigError("need n_s <= n_rf <= n_t")
        if self.n_s > min(self.n_t, self.n_r):
            raise ConfigError("n_s exceeds the channel rank bound min(n_t, n_r)")
        if self.n_s != self.n_rf:
            raise ConfigError("n_s must equal n_rf (quantizer gain acts per RF chain)")
        if self.p_max <= 0 or self.p_s <= 0:
            raise ConfigError("powers must be positive")
        if self.ray_spread_deg <= 0:
            raise ConfigError("ray_spread_deg must be positive")
        if not 0 < self.delta_deg <= 360:
            raise ConfigError("delta_deg must be in (0, 360]")
        if self.epsilon <= 0:
            raise ConfigError("epsilon must be positive")
        if self.iterations < 1:
            raise ConfigError("iterations must be >= 1")
        if self.n_trials < 1:
            raise ConfigError("n_trials must be >= 1")
        if self.snr_step_db <= 0 or self.snr_max_db < self.snr_min_db:
            raise ConfigError("SNR grid must be increasing")
        return self


_SYSTEM_KEYS = ("n_t", "n_r", "n_rf", "n_s", "p_max", "p_s", "n_c", "n_p",
                "ray_spread_deg", "delta_deg", "epsilon", "iterations", "seed")
_EXPERIMENT_KEYS = ("snr_min_db", "snr_max_db", "snr_step_db", "n_trials")
_INT_KEYS = {"n_t", "n_r", "n_rf", "n_s", "n_c", "n_p", "iterations", "seed", "n_trials"}


def load_config(path) -> SystemConfig:
    """Parse an INI config file; unknown keys are rejected."""
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file: {path}")
    values: dict = {}
    known = {f.name for f in fields(SystemConfig)}
    for section in parser.sections():
        if section not in ("system", "experiment"):
            raise ConfigError(f"unknown config section [{section}]")
        for key, raw in parser.items(section):
            if key not in known:
                raise ConfigError(f"unknown config key: {key}")
            try:
                values[key] = int(raw) if key in _INT_KEYS else float(raw)
            except ValueError as exc:
                raise ConfigError(f"bad value for {key}: {raw!r}") from exc
    if "n_rf" in values and "n_s" not in values:
        values["n_s"] = values["n_rf"]
    return replace(SystemConfig(), **values).validate()


def save_config(config: SystemConfig, path) -> None:
    """Serialize so that load(save(c)) == c (floats written with full repr)."""
    parser = configparser.ConfigParser()
    parser["system"] = {k: repr(getattr(config, k)) for k in _SYSTEM_KEYS}
    parser["experiment"] = {k: repr(getattr(config, k)) for k in _EXPERIMENT_KEYS}
    with open(path, "w", encoding="utf-8") as fh:
        parser.write(fh)
