"""Superclustering with BIC-optimal Gaussian mixtures and statistically
separable groups of mixture components."""

from .exceptions import (
    DegenerateMatrixError,
    EmptyClusterError,
    GmsdbError,
    ModelFormatError,
    SingularMatrixError,
    VersionMismatchError,
)
from .gmm import MixtureModel, fit_gmm, select_by_bic
from .metrics import pwtn, pwtp, rand_index
from .pipeline import (
    GmsdbConfig,
    GmsdbModel,
    fit,
    load_model,
    predict_hard,
    predict_soft,
    save_model,
)

__version__ = "0.1.0"
