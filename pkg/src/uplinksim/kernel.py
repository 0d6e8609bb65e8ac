"""Fading-averaged interference components for MRC and ZF reception.

These are the per-realization quantities obtained by averaging the
receiver output powers over the small-scale fading, given the large-scale
state.  The reuse-group term that persists for any number of antennas is
reported as the contamination component; the residual reuse-group
estimation-error power is folded into the inter-cell component.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import ConfigError, SystemConfig
from .propagation import LargeScaleState

MRC = "mrc"
ZF = "zf"
RECEIVERS = (MRC, ZF)
COMPONENTS = ("intra", "inter", "cont")


@dataclass(frozen=True)
class InterferenceSample:
    """Fading-averaged powers seen by the uplink probed on pilot ``k``."""

    receiver: str
    k: int
    signal: float
    intra: float
    inter: float
    cont: float

    @property
    def sir(self) -> float:
        return self.signal / (self.intra + self.inter + self.cont)


@dataclass(frozen=True)
class OrderingCheck:
    """The ZF/MRC component ordering on one realization.

    ``holds`` is the non-strict chain
    zf_intra <= zf_inter <= M/(M-K) * mrc_inter; ``strict`` additionally
    requires strict inequalities, which can be claimed only when some reuse
    group has two or more members (first link) and the out-of-cell set is
    non-empty (second link).
    """

    zf_intra: float
    zf_inter: float
    mrc_inter_bound: float
    holds: bool
    strict: bool
    strict_eligible: bool


def _probe_index(state: LargeScaleState, k: int) -> int:
    if not 1 <= k <= state.n_pilots:
        raise ValueError(f"pilot index {k} outside [1, {state.n_pilots}]")
    return k - 1


# Array cores.  All inputs broadcast; the trailing axis of the per-pilot
# arrays indexes pilots, and the probe quantities are scalars or leading
# batch axes.  The runner evaluates whole trial batches through these.

def mrc_component_arrays(alpha_k, beta_k, intra_beta_total, outer_beta_total,
                         reuse_beta_sq, M):
    signal = beta_k * beta_k
    c_k = beta_k / alpha_k
    intra = alpha_k / M * (intra_beta_total - c_k * beta_k)
    inter = alpha_k / M * outer_beta_total
    cont = (M - 1) / M * reuse_beta_sq
    return signal, intra, inter, cont


def zf_component_arrays(alpha_k, beta_k, intra_residual, outer_residual,
                        reuse_beta_sq, M, K):
    signal = beta_k * beta_k
    intra = alpha_k / (M - K) * intra_residual
    inter = alpha_k / (M - K) * outer_residual
    cont = reuse_beta_sq
    return signal, intra, inter, cont


def intra_residual_total(intra_beta, alpha):
    """Sum of (1 - C_y) beta_y over the intra-cell UEs."""
    return np.sum(intra_beta * (1.0 - intra_beta / alpha), axis=-1)


def outer_residual_total(outer_sum, outer_sq_sum, alpha):
    """Sum of (1 - C_y) beta_y over all out-of-cell UEs."""
    return np.sum(outer_sum - outer_sq_sum / alpha, axis=-1)


def mrc_components(state: LargeScaleState, k: int,
                   config: SystemConfig) -> InterferenceSample:
    """Fading-averaged MRC components for the uplink on pilot ``k``."""
    i = _probe_index(state, k)
    signal, intra, inter, cont = mrc_component_arrays(
        state.alpha[i], state.intra_beta[i],
        state.intra_beta.sum(), state.outer_beta_sum.sum(),
        state.outer_beta_sq_sum[i], config.M)
    return InterferenceSample(MRC, k, float(signal), float(intra),
                              float(inter), float(cont))


def zf_components(state: LargeScaleState, k: int,
                  config: SystemConfig) -> InterferenceSample:
    """Fading-averaged ZF components for the uplink on pilot ``k``.

    Refuses configurations with M <= K, where the ZF pseudo-inverse does
    not exist.
    """
    if config.M <= config.K:
        raise ConfigError("M", f"ZF needs M > K (M={config.M}, K={config.K})")
    i = _probe_index(state, k)
    signal, intra, inter, cont = zf_component_arrays(
        state.alpha[i], state.intra_beta[i],
        intra_residual_total(state.intra_beta, state.alpha),
        outer_residual_total(state.outer_beta_sum, state.outer_beta_sq_sum,
                             state.alpha),
        state.outer_beta_sq_sum[i], config.M, config.K)
    return InterferenceSample(ZF, k, float(signal), float(intra),
                              float(inter), float(cont))


def ordering_check(state: LargeScaleState, k: int,
                   config: SystemConfig) -> OrderingCheck:
    """Evaluate the ZF/MRC ordering chain on one realization.

    A violation is reported through the flags, never raised; campaigns
    assert on the aggregated counts.
    """
    zf = zf_components(state, k, config)
    mrc = mrc_components(state, k, config)
    bound = config.M / (config.M - config.K) * mrc.inter
    counts = [len(g) for g in state.outer_beta]
    eligible = any(c >= 2 for c in counts) and sum(counts) > 0
    holds = zf.intra <= zf.inter <= bound
    strict = zf.intra < zf.inter < bound
    return OrderingCheck(zf.intra, zf.inter, bound, bool(holds),
                         bool(strict), bool(eligible))
