"""Uplink interference statistics for multi-cell massive MIMO.

Monte Carlo simulation of the interference seen by a typical uplink under
MRC and ZF reception, with UEs placed by a stochastic-geometry model, and
the matching closed-form means, variances, bounds and asymptotics.
"""

from .config import (ConfigError, DerivedConstants, SystemConfig,
                     config_hash, default_config, load_config, validate)
from .spatial import PointLayout, UePoint, sample_intra, sample_layout, \
    sample_ppp_annulus
from .propagation import (LargeScaleState, build_large_scale, path_loss,
                          sample_shadowing)
from .kernel import (COMPONENTS, MRC, ZF, InterferenceSample, OrderingCheck,
                     mrc_components, ordering_check, zf_components)
from .fading import (FlatScope, OracleMeasurement, ZfReception,
                     draw_channels, estimate_channels, measure_components,
                     mrc_receiver, zf_receiver)
from .analytics import (AnalyticMoments, GeometryIntegrals,
                        LoadFactorConstants, MrcMeans, MrcVariances,
                        UnsupportedRegimeError, WindowTailFractions,
                        ZfIntraBounds, analytic_moments,
                        contamination_dominance_threshold,
                        geometry_integrals, load_factor_constants,
                        mrc_interference_variance, mrc_mean_interference,
                        mrc_mean_interference_general, shadowing_crossover,
                        window_tail_fractions, zf_cont_mean,
                        zf_intra_mean_bounds, zf_intra_mean_upper)
from .runner import (CampaignResult, EmpiricalDistribution,
                     FadingValidationReport, KappaScanResult,
                     MomentValidationReport, OrderingSummary, PROBE_PILOT,
                     run_cdf_campaign, run_component_trials,
                     run_fading_validation, run_kappa_scan,
                     run_moment_validation, sample_validation_state)

__version__ = "0.1.0"
