"""Explicit small-scale fading Monte Carlo.

Ground truth for the fading-averaged component formulas: draws complex
Gaussian channels, runs MMSE training, builds MRC/ZF receive vectors and
measures the interference powers directly from receive-vector inner
products.  Meant for small instances; the averaged formulas are exact in
expectation, so validating them on a small instance validates them
everywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import SystemConfig
from .kernel import MRC, ZF
from .propagation import LargeScaleState

_SINGULARITY_COND = 1e12


@dataclass(frozen=True)
class FlatScope:
    """Flattened UE table of a state: intra-cell UEs first, then the reuse
    groups in pilot order."""

    beta: np.ndarray        # (N,)
    c: np.ndarray           # (N,) training factors
    group: np.ndarray       # (N,) 0-based pilot group of each UE
    estimate_scale: np.ndarray  # (N,) beta_y / beta of the group's intra UE
    n_pilots: int

    @property
    def n_ues(self) -> int:
        return len(self.beta)

    @classmethod
    def from_state(cls, state: LargeScaleState) -> "FlatScope":
        K = state.n_pilots
        beta = np.concatenate([state.intra_beta] + list(state.outer_beta))
        group = np.concatenate(
            [np.arange(K)]
            + [np.full(len(g), k) for k, g in enumerate(state.outer_beta)]
        ).astype(np.intp)
        c = beta / state.alpha[group]
        scale = beta / state.intra_beta[group]
        return cls(beta=beta, c=c, group=group, estimate_scale=scale,
                   n_pilots=K)


def draw_channels(scope: FlatScope, n_draws: int, M: int,
                  rng: np.random.Generator) -> np.ndarray:
    """i.i.d. Rayleigh-faded channel vectors for every UE in scope.

    Returns g with shape (n_draws, M, N); column y is sqrt(beta_y) h_y
    with h_y standard complex Gaussian.
    """
    h = rng.standard_normal((n_draws, M, scope.n_ues, 2))
    g = (h[..., 0] + 1j * h[..., 1]) * math.sqrt(0.5)
    g *= np.sqrt(scope.beta)
    return g


def estimate_channels(state: LargeScaleState, g: np.ndarray,
                      config: SystemConfig,
                      rng: np.random.Generator | None = None):
    """MMSE training on drawn channels.

    ``g`` has shape (..., M, N) with UE columns ordered as in
    :class:`FlatScope`.  Returns (g_hat0, g_err): the estimated intra-cell
    channel matrix (..., M, K) and the per-UE estimation errors
    g_err = g - g_hat (..., M, N).  Training noise is added iff the config
    is not interference-limited; ``rng`` is required in that case.
    """
    scope = FlatScope.from_state(state)
    K = scope.n_pilots
    M = g.shape[-2]
    obs = np.empty(g.shape[:-1] + (K,), dtype=g.dtype)
    for k in range(K):
        cols = np.flatnonzero(scope.group == k)
        obs[..., k] = g[..., cols].sum(axis=-1)
    if not config.interference_limited:
        if rng is None:
            raise ValueError("rng required when training noise is enabled")
        z = rng.standard_normal(obs.shape + (2,))
        z = (z[..., 0] + 1j * z[..., 1]) * math.sqrt(0.5)
        obs += z / math.sqrt(config.rho_p)
    g_hat0 = obs * scope.c[:K]
    g_hat_all = g_hat0[..., scope.group] * scope.estimate_scale
    g_err = g - g_hat_all
    return g_hat0, g_err


def mrc_receiver(g_hat0: np.ndarray, state: LargeScaleState,
                 k: int) -> np.ndarray:
    """Matched filter on the estimated channel of pilot ``k`` (1-based),
    scaled to squared norm alpha_k / M."""
    col = g_hat0[..., k - 1]
    norm = np.linalg.norm(col, axis=-1, keepdims=True)
    if np.any(norm == 0):
        raise ValueError("degenerate zero channel estimate")
    M = g_hat0.shape[-2]
    return col / norm * math.sqrt(state.alpha[k - 1] / M)


@dataclass(frozen=True)
class ZfReception:
    """ZF receive vectors for pilot ``k`` plus inversion diagnostics.

    ``gram_inv_kk`` is the k-th diagonal entry of (G_hat0^H G_hat0)^{-1},
    which equals the squared norm of the receive vector.  ``valid`` flags
    draws whose Gram matrix passed the conditioning check; invalid draws
    are discarded and counted by callers.
    """

    w: np.ndarray
    gram_inv_kk: np.ndarray
    valid: np.ndarray


def zf_receiver(g_hat0: np.ndarray, k: int) -> ZfReception:
    """Zero-forcing receive vector for pilot ``k`` (1-based).

    Computed through the thin QR factorization of the estimated channel
    matrix rather than an explicit Gram inverse, for conditioning when K
    approaches M.
    """
    q, r = np.linalg.qr(g_hat0)
    diag = np.abs(np.diagonal(r, axis1=-2, axis2=-1))
    dmin = diag.min(axis=-1)
    dmax = diag.max(axis=-1)
    valid = (dmin > 0) & (dmax <= _SINGULARITY_COND * dmin)
    safe_r = np.where(valid[..., None, None], r,
                      np.eye(r.shape[-1], dtype=r.dtype))
    r_inv = np.linalg.inv(safe_r)
    # w_k = Q R^{-H} e_k; row k of R^{-1} gives both the vector and its norm
    row = r_inv[..., k - 1, :]
    w = np.einsum("...mk,...k->...m", q, row.conj())
    gram_inv_kk = np.einsum("...k,...k->...", row, row.conj()).real
    return ZfReception(w=w, gram_inv_kk=gram_inv_kk, valid=valid)


def error_power_budget(state: LargeScaleState, config: SystemConfig) -> float:
    """Aggregate estimation-error-plus-noise power multiplying ||w||^2 in
    the post-processing SINR."""
    scope = FlatScope.from_state(state)
    p_eps = float(np.sum((1.0 - scope.c) * scope.beta))
    if not config.interference_limited:
        p_eps += 1.0 / config.rho_r
    return p_eps


@dataclass
class OracleMeasurement:
    """Fading-averaged measurement of one receiver on one state.

    ``signal``/``intra``/``inter``/``cont`` are directly comparable with
    the closed-form component values.  ``origins`` keeps the raw per-origin
    averages (estimate directions split by source, and estimation-error
    power split intra/outer).  For ZF, ``sinr_identity_max_rel`` is the
    worst per-draw relative deviation between the inner-product SINR and
    its reduced large-scale form, and ``gram_identity`` the Monte Carlo
    mean of [Gram^{-1}]_kk normalized by its expected value.
    """

    receiver: str
    k: int
    draws: int
    discarded: int
    signal: float
    intra: float
    inter: float
    cont: float
    origins: dict
    mean_sinr: float
    sinr_identity_max_rel: float | None = None
    gram_identity: float | None = None


_ORIGIN_KEYS = ("est_signal", "est_intra", "est_reuse", "est_nonreuse",
                "err_intra", "err_outer")


def measure_components(draws: int, state: LargeScaleState, k: int,
                       receiver: str, config: SystemConfig,
                       rng: np.random.Generator | None = None,
                       batch_size: int = 1024) -> OracleMeasurement:
    """Average the per-origin receiver output powers over fading draws.

    Estimation-error contributions are measured from fresh error vectors
    drawn with their exact per-UE variance (1 - C_y) beta_y, not by
    differencing, to avoid cancellation.  Draws are consumed in fixed-size
    batches; accumulation uses compensated summation so the result does not
    depend on batch scheduling.
    """
    if draws < 1:
        raise ValueError("need at least one draw")
    if receiver not in (MRC, ZF):
        raise ValueError(f"unknown receiver {receiver!r}")
    if rng is None:
        rng = np.random.default_rng(config.seed)
    scope = FlatScope.from_state(state)
    K = scope.n_pilots
    M = config.M
    i = k - 1
    beta_k = state.intra_beta[i]
    alpha_k = state.alpha[i]
    reuse_cols = np.flatnonzero((scope.group == i)
                                & (np.arange(scope.n_ues) >= K))
    nonreuse_cols = np.flatnonzero((scope.group != i)
                                   & (np.arange(scope.n_ues) >= K))
    reuse_beta_sq = float(np.sum(scope.beta[reuse_cols] ** 2))
    p_eps = error_power_budget(state, config)
    err_std = np.sqrt((1.0 - scope.c) * scope.beta)

    sums = {key: [] for key in _ORIGIN_KEYS}
    sinr_sum = []
    gram_sum = []
    max_rel = 0.0
    kept = 0
    discarded = 0
    for start in range(0, draws, batch_size):
        nb = min(batch_size, draws - start)
        g = draw_channels(scope, nb, M, rng)
        g_hat0, _ = estimate_channels(state, g, config, rng)
        e2 = rng.standard_normal((nb, M, scope.n_ues, 2))
        g_err = (e2[..., 0] + 1j * e2[..., 1]) * math.sqrt(0.5)
        g_err *= err_std

        if receiver == MRC:
            w = mrc_receiver(g_hat0, state, k)
            w_sq = np.full(nb, alpha_k / M)
            valid = np.ones(nb, dtype=bool)
            gram_inv = None
        else:
            rec = zf_receiver(g_hat0, k)
            w, valid, gram_inv = rec.w, rec.valid, rec.gram_inv_kk
            w_sq = np.einsum("bm,bm->b", w.conj(), w).real
        est = np.abs(np.einsum("bm,bmk->bk", w.conj(), g_hat0)) ** 2
        per_ue = scope.estimate_scale**2 * est[:, scope.group]
        err = np.abs(np.einsum("bm,bmn->bn", w.conj(), g_err)) ** 2

        est_signal = est[:, i]
        est_intra = est[:, :K].sum(axis=1) - est_signal
        est_reuse = per_ue[:, reuse_cols].sum(axis=1)
        est_nonreuse = per_ue[:, nonreuse_cols].sum(axis=1)
        err_intra = err[:, :K].sum(axis=1)
        err_outer = err[:, K:].sum(axis=1)

        interference = est_intra + est_reuse + est_nonreuse
        sinr = est_signal / (interference + p_eps * w_sq)
        if receiver == ZF:
            reduced = beta_k**2 / (reuse_beta_sq
                                   + beta_k**2 * p_eps * gram_inv)
            rel = np.abs(sinr / reduced - 1.0)[valid]
            if rel.size:
                max_rel = max(max_rel, float(rel.max()))
            gram_sum.append(float(gram_inv[valid].sum()))
        for key, arr in zip(_ORIGIN_KEYS, (est_signal, est_intra, est_reuse,
                                           est_nonreuse, err_intra,
                                           err_outer)):
            sums[key].append(float(arr[valid].sum()))
        sinr_sum.append(float(sinr[valid].sum()))
        kept += int(valid.sum())
        discarded += int(nb - valid.sum())

    origins = {key: math.fsum(vals) / kept for key, vals in sums.items()}
    if receiver == MRC:
        # the persistent reuse term excludes the 1/M share that belongs to
        # the estimation-error residue, which is folded into inter
        shift = reuse_beta_sq / M
        signal = origins["est_signal"]
        intra = origins["est_intra"] + origins["err_intra"]
        inter = origins["est_nonreuse"] + origins["err_outer"] + shift
        cont = origins["est_reuse"] - shift
        gram_identity = None
    else:
        scale = beta_k**2
        signal = scale * origins["est_signal"]
        intra = scale * (origins["est_intra"] + origins["err_intra"])
        inter = scale * (origins["est_nonreuse"] + origins["err_outer"])
        cont = scale * origins["est_reuse"]
        expected_gram = alpha_k / ((M - K) * beta_k**2)
        gram_identity = math.fsum(gram_sum) / kept / expected_gram
    return OracleMeasurement(
        receiver=receiver, k=k, draws=kept, discarded=discarded,
        signal=signal, intra=intra, inter=inter, cont=cont,
        origins=origins, mean_sinr=math.fsum(sinr_sum) / kept,
        sinr_identity_max_rel=max_rel if receiver == ZF else None,
        gram_identity=gram_identity,
    )
