"""Model-free conditional prediction with deep generators.

A network H(x, z) is trained so that, for a reference draw Z, H(x, Z) reproduces
the conditional law of Y given X = x.  Point predictions are Monte Carlo means
(or medians) of H(x, Z), and prediction intervals come either from quantiles of
those draws or from a fixed-design bootstrap that also accounts for the
estimation error in H.
"""

from .ckde import CKDEModel, UndefinedPoint, ckde_fit, ckde_mean, kernel_cond_cdf, kolmogorov_distance
from .data import CoverageReport, Dataset, ExperimentConfig, validate_dataset
from .evaluation import (
    aggregate_coverage,
    estimate_cv3,
    point_error,
    run_coverage_experiment,
    run_coverage_methods,
    run_point_experiment,
)
from .generators import AdversarialDivergence, AdversarialSpec, train_dg
from .intervals import Interval, early_stop_check, empirical_quantile, interval_from_samples
from .io import emit_config, load_csv, parse_config, write_csv
from .nn import EarlyStop, Network, TrainSpec, mlp_init, theory_architecture
from .ppi import PPIConfig, bootstrap_root, pertinent_pi, pertinent_pi_many
from .realdata import run_wine_pipeline, split_real_data, standardize_fit_apply
from .reference import ReferenceDist, RngStream, sample_reference
from .simgen import generate_model_data, sample_conditional, true_conditional_mean
from .transform import (
    TrainedTransform,
    point_predict_l1,
    point_predict_l2,
    predict_samples,
    quantile_pi,
    train_transform,
)

__version__ = "0.1.0"

__all__ = [
    "AdversarialDivergence",
    "AdversarialSpec",
    "aggregate_coverage",
    "bootstrap_root",
    "ckde_fit",
    "ckde_mean",
    "CKDEModel",
    "CoverageReport",
    "Dataset",
    "early_stop_check",
    "EarlyStop",
    "emit_config",
    "empirical_quantile",
    "estimate_cv3",
    "ExperimentConfig",
    "generate_model_data",
    "Interval",
    "interval_from_samples",
    "kernel_cond_cdf",
    "kolmogorov_distance",
    "load_csv",
    "mlp_init",
    "Network",
    "parse_config",
    "pertinent_pi",
    "pertinent_pi_many",
    "point_error",
    "point_predict_l1",
    "point_predict_l2",
    "PPIConfig",
    "predict_samples",
    "quantile_pi",
    "ReferenceDist",
    "RngStream",
    "run_coverage_experiment",
    "run_coverage_methods",
    "run_point_experiment",
    "run_wine_pipeline",
    "sample_conditional",
    "sample_reference",
    "split_real_data",
    "standardize_fit_apply",
    "theory_architecture",
    "train_dg",
    "train_transform",
    "TrainedTransform",
    "TrainSpec",
    "true_conditional_mean",
    "UndefinedPoint",
    "validate_dataset",
    "write_csv",
]
