"""Weighted naive Bayes with sparse, cost-aware variable weighting."""

from .criterion import ConfigurationError, RegularizerSpec, criterion, neg_log_likelihood, nll_gradient
from .data import DataError, PrepConfig, PreparedDataset, RawDataset, load_csv, prepare
from .evaluate import benchmark, stratified_kfold
from .kernels import BACKEND_NAME
from .model import Model
from .optim import OptimizerConfig, prox_1d, solve
from .pipeline import TrainParams, fit
from .search import SearchConfig, fnb_train, snb_train

__version__ = "0.1.0"

__all__ = [
    "BACKEND_NAME",
    "ConfigurationError",
    "DataError",
    "Model",
    "OptimizerConfig",
    "PrepConfig",
    "PreparedDataset",
    "RawDataset",
    "RegularizerSpec",
    "SearchConfig",
    "TrainParams",
    "benchmark",
    "criterion",
    "fit",
    "fnb_train",
    "load_csv",
    "neg_log_likelihood",
    "nll_gradient",
    "prepare",
    "prox_1d",
    "snb_train",
    "solve",
    "stratified_kfold",
]
