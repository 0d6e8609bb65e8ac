"""System parameters, unit conventions and derived constants.

All power-like quantities are stored linear; dB values are converted at the
CLI boundary only.  Shadowing standard deviation is the exception: sigma is
natively a dB quantity and is kept in dB everywhere.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass

XI = 10.0 / math.log(10.0)
"""dB-to-natural-log conversion constant, 10/ln(10)."""


class ConfigError(ValueError):
    """Raised when a configuration violates a model constraint.

    ``field`` names the offending parameter.
    """

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


@dataclass(frozen=True)
class SystemConfig:
    """Physical and simulation parameters of the uplink model.

    Defaults are the reference urban macro-cell parameter set used
    throughout the test suite: a 500 m cell, close-in distance 100 m,
    close-in gain -30 dB, path loss exponent 3.76, 128 BS antennas and
    30 orthogonal pilots.
    """

    R: float = 500.0            # cell radius, m
    d0: float = 100.0           # close-in reference distance, m
    A0: float = 1e-3            # close-in path gain, linear
    gamma: float = 3.76         # path loss exponent
    sigma_dB: float = 0.0       # log-normal shadowing std deviation, dB
    M: int = 128                # BS antennas
    K: int = 30                 # orthogonal pilots = served UEs per cell
    rho_p: float = 1.0          # training transmit power, linear
    rho_r: float = 1.0          # data transmit power, linear
    interference_limited: bool = True   # force 1/rho_p and 1/rho_r to zero
    trunc_factor: float = 51.0  # simulation window outer radius, in units of R
    n_spatial_trials: int = 10_000
    n_fading_trials: int = 100_000
    seed: int = 12345


@dataclass(frozen=True)
class DerivedConstants:
    """Constants implied by a validated :class:`SystemConfig`.

    ``lam`` is the out-of-cell UE intensity per pilot, pinned to
    1/(pi R^2) so that the UE density is homogeneous across the plane.
    ``mu`` is the shadowing moment factor exp(sigma^2/xi^2); the first and
    second moments of the shadowing coefficient are sqrt(mu) and mu^2.
    """

    lam: float
    l: float
    xi: float
    mu: float


def _require(ok: bool, field: str, message: str) -> None:
    if not ok:
        raise ConfigError(field, message)


def validate(config: SystemConfig) -> DerivedConstants:
    """Check every model constraint and return the derived constants.

    Validation is idempotent and has no side effects; configs are immutable
    and safe to share across workers once validated.
    """
    _require(config.d0 > 0, "d0", "close-in distance must be positive")
    _require(config.R > config.d0, "R",
             f"cell radius must exceed d0={config.d0}")
    _require(config.A0 > 0, "A0", "close-in path gain must be positive")
    _require(config.gamma > 2, "gamma",
             "path loss exponent must exceed 2 for finite out-of-cell "
             "interference integrals")
    _require(config.sigma_dB >= 0, "sigma_dB",
             "shadowing std deviation cannot be negative")
    _require(isinstance(config.K, int) and config.K >= 1, "K",
             "need at least one pilot")
    _require(isinstance(config.M, int) and config.M > config.K, "M",
             f"ZF reception needs strictly more antennas than pilots "
             f"(M={config.M}, K={config.K})")
    _require(config.rho_p > 0, "rho_p", "training power must be positive")
    _require(config.rho_r > 0, "rho_r", "data power must be positive")
    _require(config.trunc_factor > 1, "trunc_factor",
             "simulation window must extend beyond the cell")
    _require(config.n_spatial_trials >= 1, "n_spatial_trials",
             "need at least one trial")
    _require(config.n_fading_trials >= 1, "n_fading_trials",
             "need at least one draw")
    _require(isinstance(config.seed, int) and config.seed >= 0, "seed",
             "seed must be a non-negative integer")
    sigma_nat = config.sigma_dB / XI
    return DerivedConstants(
        lam=1.0 / (math.pi * config.R**2),
        l=config.d0 / config.R,
        xi=XI,
        mu=math.exp(sigma_nat**2),
    )


def default_config(sigma_dB: float = 0.0, **overrides) -> SystemConfig:
    """Reference parameter set with an adjustable shadowing level."""
    return SystemConfig(sigma_dB=sigma_dB, **overrides)


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(SystemConfig)}


def config_from_mapping(values: dict) -> SystemConfig:
    """Build a config from a flat key/value mapping (e.g. a JSON file)."""
    unknown = set(values) - set(_FIELD_TYPES)
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown configuration key")
    coerced = {}
    for name, value in values.items():
        if name in ("M", "K", "n_spatial_trials", "n_fading_trials", "seed"):
            if isinstance(value, float) and not value.is_integer():
                raise ConfigError(name, "must be an integer")
            coerced[name] = int(value)
        elif name == "interference_limited":
            coerced[name] = bool(value)
        else:
            coerced[name] = float(value)
    return SystemConfig(**coerced)


def load_config(path: str) -> SystemConfig:
    """Load a config from a flat JSON document mirroring the field names."""
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ConfigError("file", f"{path} does not contain a flat object")
    return config_from_mapping(data)


def config_to_dict(config: SystemConfig) -> dict:
    return dataclasses.asdict(config)


def config_hash(config: SystemConfig) -> str:
    """Short stable digest of the full parameter set, for output headers."""
    blob = json.dumps(config_to_dict(config), sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:12]
