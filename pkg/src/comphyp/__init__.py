"""Nonparametric composite multi-hypothesis testing with MMD and KS distances."""

__version__ = "0.1.0"

from .bounds import (  # noqa: E402
    BoundsReport, SeparationPair, bounds_report, chernoff_information, cluster_separations,
    error_bound, fano_ceiling, fano_ceiling_empirical, kl_gaussian, kl_partition, rate_ks,
    rate_mmd, rate_parametric,
)
from .classify import TrainingSet, Verdict, classify_ks, classify_likelihood, classify_mmd  # noqa: E402
from .distances import (  # noqa: E402
    Constant, EmpiricalCdf, GaussianRBF, kernel_eval, ks_distance, ks_population,
    mmd2_population, mmd2_unbiased,
)
from .models import Gaussian  # noqa: E402
from .simulate import (  # noqa: E402
    ConfigError, ErrorCurve, ExperimentConfig, TrainLengths, fit_exponent, generate_trial,
    run_experiment,
)
