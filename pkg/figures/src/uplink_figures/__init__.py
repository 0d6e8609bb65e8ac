"""Figure rendering for uplinksim CSV bundles."""

from .reader import BundleError, CsvTable, check_same_config, read_table
from .render import FIGURE_IDS, FigureSpec, bundle_spec, render, \
    render_bundle

__version__ = "0.1.0"
