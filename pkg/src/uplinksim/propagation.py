"""Large-scale channel state: path loss, shadowing and training factors.

For every UE the large-scale gain is beta = p * eta, where p is the
bounded close-in path loss and eta the log-normal shadowing coefficient.
Per pilot group k, alpha_k collects the large-scale gains of all UEs that
share pilot k (plus the training noise term when noise is enabled), and
each UE's MMSE training factor is C_y = beta_y / alpha_k.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import SystemConfig, validate
from .spatial import PointLayout

_LN10_OVER_10 = np.log(10.0) / 10.0


def path_loss(distance, config: SystemConfig):
    """Bounded close-in path loss.

    Returns A0 inside the close-in distance d0 and A0*(distance/d0)^-gamma
    beyond it; continuous at d0.  Accepts scalars or arrays.
    """
    d = np.asarray(distance, dtype=float)
    if np.any(d < 0):
        raise ValueError("distance cannot be negative")
    with np.errstate(divide="ignore"):
        far = config.A0 * (d / config.d0) ** (-config.gamma)
    out = np.where(d < config.d0, config.A0, far)
    if np.isscalar(distance):
        return float(out)
    return out


def sample_shadowing(sigma_dB: float, rng: np.random.Generator, size=None):
    """Draw linear log-normal shadowing coefficients.

    eta = 10^(g/10) with g ~ Normal(0, sigma_dB^2); sigma_dB = 0 degenerates
    to eta = 1 exactly.
    """
    if sigma_dB < 0:
        raise ValueError("sigma_dB cannot be negative")
    if sigma_dB == 0:
        return 1.0 if size is None else np.ones(size)
    g = rng.standard_normal(size)
    return np.exp(g * (sigma_dB * _LN10_OVER_10))


@dataclass(frozen=True)
class LargeScaleState:
    """Per-UE large-scale quantities for one spatial realization.

    Intra-cell arrays have shape (K,), indexed by pilot; ``outer_*[k]``
    holds the reuse group of pilot k+1.  ``noise_term`` is 1/rho_p when
    training noise is enabled and 0 in the interference-limited regime.
    """

    intra_path_loss: np.ndarray
    intra_shadowing: np.ndarray
    intra_beta: np.ndarray
    outer_path_loss: list[np.ndarray]
    outer_shadowing: list[np.ndarray]
    outer_beta: list[np.ndarray]
    alpha: np.ndarray
    noise_term: float
    # per-group aggregates, precomputed because every receiver formula
    # consumes them
    outer_beta_sum: np.ndarray = field(repr=False, default=None)
    outer_beta_sq_sum: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        if self.outer_beta_sum is None:
            object.__setattr__(
                self, "outer_beta_sum",
                np.array([g.sum() for g in self.outer_beta]))
        if self.outer_beta_sq_sum is None:
            object.__setattr__(
                self, "outer_beta_sq_sum",
                np.array([np.sum(g * g) for g in self.outer_beta]))

    @property
    def n_pilots(self) -> int:
        return len(self.intra_beta)

    @property
    def intra_c(self) -> np.ndarray:
        """Training factor of each intra-cell UE, beta_xk / alpha_k."""
        return self.intra_beta / self.alpha

    def outer_c(self, k: int) -> np.ndarray:
        """Training factors of the reuse group of pilot k (1-based)."""
        return self.outer_beta[k - 1] / self.alpha[k - 1]

    @classmethod
    def from_betas(cls, intra_beta, outer_beta,
                   noise_term: float = 0.0) -> "LargeScaleState":
        """Assemble a state from explicit gains (unit shadowing).

        Convenience for tests and hand-built oracle instances.
        """
        intra_beta = np.asarray(intra_beta, dtype=float)
        outer_beta = [np.asarray(g, dtype=float) for g in outer_beta]
        alpha = intra_beta + np.array([g.sum() for g in outer_beta])
        alpha = alpha + noise_term
        return cls(
            intra_path_loss=intra_beta.copy(),
            intra_shadowing=np.ones_like(intra_beta),
            intra_beta=intra_beta,
            outer_path_loss=[g.copy() for g in outer_beta],
            outer_shadowing=[np.ones_like(g) for g in outer_beta],
            outer_beta=outer_beta,
            alpha=alpha,
            noise_term=noise_term,
        )


def build_large_scale(layout: PointLayout, config: SystemConfig,
                      rng: np.random.Generator) -> LargeScaleState:
    """Attach path loss and shadowing to a layout and derive alpha and C.

    Shadowing is i.i.d. across UEs and independent of position.  It is
    drawn in a canonical order (intra-cell UEs first, then the reuse groups
    by pilot index) so a fixed stream reproduces the same state.
    """
    validate(config)
    noise_term = 0.0 if config.interference_limited else 1.0 / config.rho_p

    intra_dist = np.hypot(layout.intra[:, 0], layout.intra[:, 1])
    intra_p = path_loss(intra_dist, config)
    intra_eta = np.asarray(sample_shadowing(config.sigma_dB, rng,
                                            size=len(intra_p)))
    intra_beta = intra_p * intra_eta

    outer_p, outer_eta, outer_beta = [], [], []
    for group in layout.outer:
        dist = np.hypot(group[:, 0], group[:, 1])
        p = path_loss(dist, config)
        eta = np.asarray(sample_shadowing(config.sigma_dB, rng, size=len(p)))
        outer_p.append(p)
        outer_eta.append(eta)
        outer_beta.append(p * eta)

    alpha = intra_beta + np.array([g.sum() for g in outer_beta]) + noise_term
    return LargeScaleState(
        intra_path_loss=intra_p,
        intra_shadowing=intra_eta,
        intra_beta=intra_beta,
        outer_path_loss=outer_p,
        outer_shadowing=outer_eta,
        outer_beta=outer_beta,
        alpha=alpha,
        noise_term=noise_term,
    )
