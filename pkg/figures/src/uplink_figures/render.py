"""Figure rendering from simulator CSV bundles.

Four figures: the interference-component CDFs without and with strong
shadowing (1, 2), the component means against the shadowing level with
the analytic curves overlaid on empirical points (3), and the normalized
variances against the shadowing level (4).

Rendering is a pure function of the CSV contents: the returned series are
identical across repeated renders of the same inputs (image file metadata
may differ).
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .reader import BundleError, CsvTable, check_same_config, read_table

FIGURE_IDS = (1, 2, 3, 4)
_RECEIVERS = ("mrc", "zf")
_COMPONENTS = ("intra", "inter", "cont")

_COMPONENT_LABEL = {
    "intra": "intra-cell",
    "inter": "inter-cell",
    "cont": "contamination",
}
_COMPONENT_COLOR = {"intra": "tab:blue", "inter": "tab:green",
                    "cont": "tab:red"}
_RECEIVER_STYLE = {"mrc": "-", "zf": "--"}

plt.rcParams.update({
    "figure.figsize": (6.4, 4.4),
    "axes.grid": True,
    "grid.linestyle": ":",
    "grid.linewidth": 0.6,
    "legend.fontsize": 8,
    "axes.labelsize": 10,
})


@dataclass(frozen=True)
class FigureSpec:
    """One figure: its id, input CSVs, output path and format."""

    figure_id: int
    csv_paths: dict          # role -> path
    out_path: str
    image_format: str = "png"


_BUNDLE_FILES = {
    1: {f"{rx}_{c}": f"cdf_{rx}_{c}.csv"
        for rx in _RECEIVERS for c in _COMPONENTS},
    2: {f"{rx}_{c}": f"cdf_{rx}_{c}.csv"
        for rx in _RECEIVERS for c in _COMPONENTS},
    3: {"analytic": "mean_vs_sigma_analytic.csv",
        "empirical": "mean_vs_sigma_empirical.csv"},
    4: {"variance": "normalized_variance_vs_sigma.csv"},
}


def bundle_spec(bundle_dir: str, figure_id: int, out_dir: str,
                image_format: str = "png") -> FigureSpec:
    """Locate the expected CSVs of one figure under ``bundle_dir``."""
    if figure_id not in FIGURE_IDS:
        raise ValueError(f"unknown figure id {figure_id}")
    fig_dir = os.path.join(bundle_dir, f"fig{figure_id}")
    paths = {role: os.path.join(fig_dir, name)
             for role, name in _BUNDLE_FILES[figure_id].items()}
    missing = [p for p in paths.values() if not os.path.exists(p)]
    if missing:
        raise BundleError(
            "missing input files for figure "
            f"{figure_id}: {', '.join(sorted(missing))}")
    out_path = os.path.join(out_dir, f"fig{figure_id}.{image_format}")
    return FigureSpec(figure_id=figure_id, csv_paths=paths,
                      out_path=out_path, image_format=image_format)


def _finite_series(table: CsvTable, x_col: str, y_col: str):
    x = table[x_col]
    y = table[y_col]
    keep = np.isfinite(x) & np.isfinite(y)
    return x[keep], y[keep]


def _render_cdfs(tables: dict, ax) -> dict:
    series = {}
    for rx in _RECEIVERS:
        for comp in _COMPONENTS:
            table = tables[f"{rx}_{comp}"]
            x, y = _finite_series(table, "value_dB", "cdf")
            if len(x) == 0:
                raise BundleError(f"{table.path}: no plottable samples")
            label = f"{rx.upper()} {_COMPONENT_LABEL[comp]}"
            ax.plot(x, y, _RECEIVER_STYLE[rx],
                    color=_COMPONENT_COLOR[comp], label=label, lw=1.2)
            series[label] = (x, y)
    ax.set_xlabel("interference power [dB]")
    ax.set_ylabel("CDF")
    ax.set_ylim(0.0, 1.0)
    ax.legend(loc="upper left")
    return series


def _render_mean_sweep(tables: dict, ax) -> dict:
    series = {}
    analytic = tables["analytic"]
    empirical = tables["empirical"]
    for comp in _COMPONENTS:
        x, y = _finite_series(analytic, "sigma_db", f"mean_{comp}")
        label = f"MRC {_COMPONENT_LABEL[comp]} (analytic)"
        ax.semilogy(x, y, "-", color=_COMPONENT_COLOR[comp], label=label,
                    lw=1.2)
        series[label] = (x, y)
        xe, ye = _finite_series(empirical, "sigma_db", f"mean_{comp}")
        err = empirical[f"stderr_{comp}"]
        label_e = f"MRC {_COMPONENT_LABEL[comp]} (simulated)"
        ax.errorbar(xe, ye, yerr=3 * err, fmt="o", ms=3.5, capsize=2,
                    color=_COMPONENT_COLOR[comp], label=label_e, lw=0.8,
                    linestyle="none")
        series[label_e] = (xe, ye)
    ax.set_xlabel("shadowing standard deviation [dB]")
    ax.set_ylabel("mean interference power")
    ax.legend(loc="upper left")
    return series


def _render_normalized_variance(tables: dict, ax) -> dict:
    series = {}
    table = tables["variance"]
    for comp, column in (("inter", "nvar_inter"), ("cont", "nvar_cont")):
        x, y = _finite_series(table, "sigma_db", column)
        label = f"MRC {_COMPONENT_LABEL[comp]}"
        ax.semilogy(x, y, "-", color=_COMPONENT_COLOR[comp], label=label,
                    lw=1.2)
        series[label] = (x, y)
    ax.set_xlabel("shadowing standard deviation [dB]")
    ax.set_ylabel("normalized variance var[I] / E[I]$^2$")
    ax.legend(loc="upper left")
    return series


_TITLES = {
    1: "Interference CDFs, no shadowing",
    2: "Interference CDFs, strong shadowing",
    3: "Mean MRC interference vs shadowing",
    4: "Normalized MRC interference variance vs shadowing",
}


def render(spec: FigureSpec) -> dict:
    """Render one figure; returns the plotted series keyed by label."""
    tables = {role: read_table(path)
              for role, path in spec.csv_paths.items()}
    check_same_config(list(tables.values()))
    fig, ax = plt.subplots()
    try:
        if spec.figure_id in (1, 2):
            series = _render_cdfs(tables, ax)
        elif spec.figure_id == 3:
            series = _render_mean_sweep(tables, ax)
        else:
            series = _render_normalized_variance(tables, ax)
        ax.set_title(_TITLES[spec.figure_id], fontsize=10)
        os.makedirs(os.path.dirname(spec.out_path) or ".", exist_ok=True)
        fig.savefig(spec.out_path, dpi=150, bbox_inches="tight")
    finally:
        plt.close(fig)
    return series


def render_bundle(bundle_dir: str, which, out_dir: str,
                  image_format: str = "png") -> dict:
    """Render the requested figures; returns {figure_id: series dict}."""
    rendered = {}
    for figure_id in which:
        spec = bundle_spec(bundle_dir, figure_id, out_dir, image_format)
        rendered[figure_id] = render(spec)
    return rendered
