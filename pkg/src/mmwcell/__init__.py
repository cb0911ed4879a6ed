"""Coverage, load, and rate analysis for self-backhauled mmWave cellular
networks: a closed-form stochastic-geometry engine and a Monte Carlo
simulator that estimate the same distributions independently."""

from .coverage import (FpcParams, InterfererGainDist, LinkKind, RadioConfig,
                       inr_bound_ccdf, inr_uniform_closed_form, sinr_coverage,
                       snr_coverage, total_power_transform,
                       uplink_fpc_coverage)
from .errors import ConfigError, ConvergenceError, UnreachableTargetError
from .load import (SIZE_BIAS, VORONOI_SHAPE, DiscreteDist, LoadModel,
                   load_pmfs, tagged_mean, tagged_pmf, typical_mean,
                   typical_pmf)
from .numerics import (InversionConfig, LognormalParams, invert_laplace_ccdf,
                       q_function, truncated_lognormal_moment, truncated_sum)
from .propagation import (BlockageParams, LinkClassParams, PropagationModel,
                          intensity_density, intensity_measure, path_loss_ccdf,
                          path_loss_pdf, path_loss_quantile, quadrature_hints)
from .rate import (CcdfCurve, ContourResult, HybridConfig, RateConfig,
                   RateLoadDists, hybrid_rate_coverage, instantaneous_rate,
                   make_uhf_coverage, median_rate_contour, percentile_rate,
                   rate_coverage, rate_coverage_meanload, saturation_density,
                   snr_threshold)

__version__ = "0.1.0"
