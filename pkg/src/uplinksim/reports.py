"""Delimited and JSON output writers.

Every file starts with a header line carrying the config hash and seed so
downstream tools can refuse to mix results from different runs.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os

import numpy as np

from . import analytics
from .config import SystemConfig, config_hash
from .kernel import COMPONENTS, MRC, ZF
from .propagation import build_large_scale
from .runner import CampaignResult, ComponentTrials, PROBE_PILOT
from .spatial import sample_layout

_FMT = "{:.12e}"


def header_line(config: SystemConfig) -> str:
    return f"# config_hash={config_hash(config)} seed={config.seed}"


def _fmt(value: float) -> str:
    return _FMT.format(value)


def _db(value: float) -> str:
    if value <= 0:
        return "-inf"
    return _FMT.format(10.0 * math.log10(value))


def write_cdf_csv(path: str, samples: np.ndarray,
                  config: SystemConfig) -> None:
    """CDF of one component: sorted values with their empirical CDF."""
    n = len(samples)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header_line(config) + "\n")
        fh.write("value_linear,value_dB,cdf\n")
        for i, value in enumerate(samples):
            fh.write(f"{_fmt(value)},{_db(value)},{(i + 1) / n:.10f}\n")


def write_cdf_bundle(out_dir: str, result: CampaignResult) -> list[str]:
    """The six per-component CDF files of one campaign."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for receiver in (MRC, ZF):
        for comp in COMPONENTS:
            path = os.path.join(out_dir, f"cdf_{receiver}_{comp}.csv")
            dist = result.distribution(receiver, comp)
            write_cdf_csv(path, dist.samples, result.config)
            paths.append(path)
    return paths


def write_component_samples_csv(path: str, trials: ComponentTrials,
                                config: SystemConfig,
                                k: int = PROBE_PILOT) -> None:
    """Raw per-trial component stream, linear and dB columns."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header_line(config) + "\n")
        fh.write("trial,receiver,k,S,I_intra,I_inter,I_cont,sir,"
                 "S_dB,I_intra_dB,I_inter_dB,I_cont_dB,sir_dB\n")
        for receiver, comps in ((MRC, trials.mrc), (ZF, trials.zf)):
            for t in range(trials.n):
                s = trials.signal[t]
                ii, io, ic = (comps["intra"][t], comps["inter"][t],
                              comps["cont"][t])
                sir = s / (ii + io + ic)
                linear = ",".join(_fmt(v) for v in (s, ii, io, ic, sir))
                db = ",".join(_db(v) for v in (s, ii, io, ic, sir))
                fh.write(f"{t},{receiver},{k},{linear},{db}\n")


def write_layout_csv(path: str, config: SystemConfig, trials: int,
                     include_beta: bool = True) -> None:
    """Dump sampled layouts: one row per UE, with large-scale gain."""
    rng = np.random.default_rng(np.random.SeedSequence(config.seed))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header_line(config) + "\n")
        columns = "trial,tier,pilot_index,x_m,y_m"
        fh.write(columns + (",beta\n" if include_beta else "\n"))
        for trial in range(trials):
            layout = sample_layout(config, rng)
            betas = None
            if include_beta:
                state = build_large_scale(layout, config, rng)
                betas = np.concatenate(
                    [state.intra_beta] + list(state.outer_beta))
            for i, point in enumerate(layout.iter_points()):
                x, y = point.position
                row = (f"{trial},{point.tier},{point.pilot_index},"
                       f"{_fmt(x)},{_fmt(y)}")
                if include_beta:
                    row += f",{_fmt(betas[i])}"
                fh.write(row + "\n")


def _json_default(value):
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"not JSON serializable: {type(value)}")


def write_json(path: str, payload: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True,
                  default=_json_default)
        fh.write("\n")


def analytic_report(config: SystemConfig,
                    include_load_factor: bool = True) -> dict:
    """Every closed-form quantity for one config, JSON-ready."""
    moments = analytics.analytic_moments(config)
    tails = analytics.window_tail_fractions(config)
    quad = analytics.geometry_integrals(config, method="quadrature")
    report = {
        "config_hash": config_hash(config),
        "seed": config.seed,
        "config": dataclasses.asdict(config),
        "mean_mrc": dataclasses.asdict(moments.mean_mrc),
        "var_mrc": dataclasses.asdict(moments.var_mrc),
        "normalized_var_mrc": {
            "inter": moments.var_mrc.inter / moments.mean_mrc.inter**2,
            "cont": moments.var_mrc.cont / moments.mean_mrc.cont**2,
        },
        "zf": {
            "intra_lower": moments.zf_intra_lower,
            "intra_upper": moments.zf_intra_upper,
            "cont": moments.zf_cont,
        },
        "integrals": dataclasses.asdict(moments.integrals),
        "integrals_quadrature": dataclasses.asdict(quad),
        "dominance_threshold_m_over_k":
            analytics.contamination_dominance_threshold(config),
        "shadowing_crossover_db": analytics.shadowing_crossover(config),
        "window_tail_fractions": dataclasses.asdict(tails),
    }
    if include_load_factor:
        constants = analytics.load_factor_constants(config)
        report["load_factor_constants"] = dataclasses.asdict(constants)
    return report


def _sigma_grid(steps_per_db: int = 4, hi: float = 8.0) -> np.ndarray:
    return np.linspace(0.0, hi, int(hi * steps_per_db) + 1)


def write_mean_sweep_csv(path: str, config: SystemConfig) -> None:
    """Closed-form MRC component means over a shadowing sweep."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header_line(config) + "\n")
        fh.write("sigma_db,mean_intra,mean_inter,mean_cont\n")
        for sigma in _sigma_grid():
            cfg = dataclasses.replace(config, sigma_dB=float(sigma))
            means = analytics.mrc_mean_interference(cfg)
            fh.write(f"{sigma:.4f},{_fmt(means.intra)},"
                     f"{_fmt(means.inter)},{_fmt(means.cont)}\n")


def write_empirical_sweep_csv(path: str, config: SystemConfig,
                              trials: int, workers: int = 1) -> None:
    """Empirical MRC component means (with stderr) over a sigma sweep."""
    from .runner import EmpiricalDistribution, run_component_trials
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header_line(config) + "\n")
        fh.write("sigma_db,mean_intra,stderr_intra,mean_inter,stderr_inter,"
                 "mean_cont,stderr_cont\n")
        for sigma in np.arange(0.0, 8.5, 1.0):
            cfg = dataclasses.replace(config, sigma_dB=float(sigma),
                                      n_spatial_trials=trials)
            result = run_component_trials(cfg, workers=workers)
            cells = [f"{sigma:.4f}"]
            for comp in COMPONENTS:
                dist = EmpiricalDistribution.from_samples(result.mrc[comp])
                cells += [_fmt(dist.mean), _fmt(dist.stderr)]
            fh.write(",".join(cells) + "\n")


def write_normalized_variance_csv(path: str, config: SystemConfig) -> None:
    """Closed-form normalized variances var[I]/E[I]^2 over a sigma sweep."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header_line(config) + "\n")
        fh.write("sigma_db,nvar_inter,nvar_cont\n")
        for sigma in _sigma_grid():
            cfg = dataclasses.replace(config, sigma_dB=float(sigma))
            means = analytics.mrc_mean_interference(cfg)
            variances = analytics.mrc_interference_variance(cfg)
            fh.write(f"{sigma:.4f},{_fmt(variances.inter / means.inter**2)},"
                     f"{_fmt(variances.cont / means.cont**2)}\n")


def write_kappa_scan_csv(path: str, scan) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header_line(scan.config) + "\n")
        fh.write("M,K,mean_zf_intra,mean_zf_inter,mean_mrc_intra,"
                 "mean_mrc_inter,norm_zf_intra,norm_zf_inter,"
                 "norm_mrc_intra,norm_mrc_inter\n")
        for row in scan.rows:
            cells = [str(row.m), str(row.k)]
            cells += [_fmt(row.mean[(ZF, "intra")]),
                      _fmt(row.mean[(ZF, "inter")]),
                      _fmt(row.mean[(MRC, "intra")]),
                      _fmt(row.mean[(MRC, "inter")])]
            cells += [_fmt(row.normalized[c]) for c in
                      ("zf_intra", "zf_inter", "mrc_intra", "mrc_inter")]
            fh.write(",".join(cells) + "\n")
