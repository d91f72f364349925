"""Laser speckle texture classification with information-theoretic Bayesian networks."""

__version__ = "0.1.0"

from .dataset import DataSet
from .errors import DataError, ParameterError
from .speckle import (
    Mode,
    SpeckleImage,
    SpeckleParams,
    blur_image,
    contrast,
    generate_speckle,
    mean_grain_area,
)
from .texture import TextureVector, featurize_batch, select_roi, texture_features, uniformity_check
from .bayesnet import (
    BayesNet,
    apply_discretization,
    classify,
    cmi,
    discover_links,
    fit_cpts,
    fit_discretization,
    learn_classifier_structure,
    train,
)
from .evaluation import EvalReport, ExperimentConfig, SplitSpec, evaluate, run_experiment, split
