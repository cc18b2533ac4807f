"""Randomised dimension reduction for least squares regression.

Principal components regression, compressed least squares with Gaussian,
Rademacher or column-subsampling sketches, projector averaging, excess-risk
bounds and a probe-based estimator of the sketch residual energy.
"""
__version__ = "0.1.0"

from .datagen import (SpectrumSpec, SyntheticInstance, draw_truth, gen_response,
                      make_instance, synth_design)
from .ensemble import (averaged_bias_and_variance, canonical_angle_variance,
                       estimate_projector_mean)
from .errors import ArgumentError, NumericalFailure, ParseError, ScalingError
from .linalg import (DesignMatrix, SvdFactors, compute_svd, least_squares_min_norm,
                     partition, tail_energy, truncate)
from .regressors import fit_averaged, fit_cls, fit_pcr, predict
from .risk import (GroundTruth, evaluate_bounds, excess_decomposition, halko_bound,
                   kaban_bound, monte_carlo_excess, pcr_excess_exact, thanei_bound)
from .sketch import SketchKind, SketchSpec, apply_sketch, draw_sketch, recommended_k
from .tail import estimate_delta_sq, exact_delta_sq, required_probe_count
