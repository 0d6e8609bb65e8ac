"""Vectorized large-scale sampling kernels.

Group-level draws used by the campaign runner and the load-factor
constant estimator.  Path gain and shadowing are composed in the log
domain so each point costs one log, one normal and one exp.  The
distributions match the per-realization layout/propagation API exactly;
the equivalence is covered by tests.
"""

from __future__ import annotations

import math

import numpy as np

from .config import SystemConfig

_LN10_OVER_10 = math.log(10.0) / 10.0


def _log_close_in_gain(config: SystemConfig) -> float:
    return math.log(config.A0)


def _finalize_beta(log_p: np.ndarray, config: SystemConfig,
                   rng: np.random.Generator) -> np.ndarray:
    if config.sigma_dB > 0:
        shadow = rng.standard_normal(log_p.shape)
        shadow *= config.sigma_dB * _LN10_OVER_10
        log_p += shadow
    return np.exp(log_p, out=log_p)


def outer_group_sums(config: SystemConfig, n_groups: int,
                     rng: np.random.Generator):
    """Sample n_groups independent reuse groups; return per-group sums.

    Returns (counts, S1, S2) where S1[j] and S2[j] are the sums of beta and
    beta^2 over group j.  Groups are PPPs on the annulus (R, trunc*R] with
    intensity 1/(pi R^2), i.e. mean count trunc^2 - 1.
    """
    t_sq = config.trunc_factor**2
    counts = rng.poisson(t_sq - 1.0, n_groups)
    total = int(counts.sum())
    # r^2/R^2 is uniform on (1, t_sq]; work on that ratio throughout
    u = rng.random(total)
    u *= t_sq - 1.0
    u += 1.0
    np.log(u, out=u)
    u *= -0.5 * config.gamma
    u += _log_close_in_gain(config) + config.gamma * math.log(
        config.d0 / config.R)
    beta = _finalize_beta(u, config, rng)
    beta_sq = beta * beta
    offsets = np.zeros(n_groups, dtype=np.intp)
    np.cumsum(counts[:-1], out=offsets[1:])
    s1 = np.add.reduceat(beta, offsets) if total else np.zeros(n_groups)
    s2 = np.add.reduceat(beta_sq, offsets) if total else np.zeros(n_groups)
    empty = counts == 0
    if empty.any():
        s1[empty] = 0.0
        s2[empty] = 0.0
    return counts, s1, s2


def intra_beta_samples(config: SystemConfig, shape,
                       rng: np.random.Generator) -> np.ndarray:
    """Large-scale gains of UEs uniform on the cell disk.

    The close-in branch saturates the path gain at A0 for r < d0.
    """
    u = rng.random(shape)  # r^2/R^2
    np.log(u, out=u)
    u *= -0.5 * config.gamma
    u += _log_close_in_gain(config) + config.gamma * math.log(
        config.d0 / config.R)
    np.minimum(u, _log_close_in_gain(config), out=u)
    return _finalize_beta(u, config, rng)
