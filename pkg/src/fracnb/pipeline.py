"""Training entry point shared by the CLI and the benchmark harness."""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .criterion import BOOLEAN, CONTINUOUS, FRACTIONAL, RegularizerSpec, criterion
from .data import PrepConfig, RawDataset, prepare
from .model import Model
from .optim import METHODS, OptimizerConfig, OptimizerRun, solve
from .search import SearchConfig, SearchResult, fnb_train, init_for_gradient, snb_train

BASELINES = ("null", "nb")
SEARCH_METHODS = ("snb", "fnb")
CHAINED = ("fnb+sg.cf",)
ALL_METHODS = BASELINES + SEARCH_METHODS + tuple(m.lower() for m in METHODS) + ("sg",) + CHAINED
INIT_POLICIES = ("uniform", "snb", "fnb")


def canonical_method(method: str) -> str:
    m = method.strip().lower()
    if m == "sg1":
        m = "sg"
    if m not in ALL_METHODS:
        raise ValueError(f"unknown method {method!r}")
    return m


@dataclass
class TrainParams:
    method: str = "fnb"
    lam: float = 0.25
    p: float = 0.95
    delta: float = 1e-6
    epsilon: float = 0.01
    max_iters: int = 1000
    init: Optional[str] = None  # default: fnb for sg.cf, uniform for other gradient methods
    seed: int = 0
    costs: Optional[str] = None
    prep: PrepConfig = field(default_factory=PrepConfig)

    def __post_init__(self):
        self.method = canonical_method(self.method)
        if self.init is not None and self.init not in INIT_POLICIES:
            raise ValueError(f"unknown init policy {self.init!r}")

    def resolved_init(self) -> str:
        if self.init is not None:
            return self.init
        return "fnb" if self.method == "sg.cf" else "uniform"

    def label(self) -> dict:
        d = asdict(self)
        d.pop("prep")
        d["init"] = self.resolved_init() if self.method not in BASELINES + SEARCH_METHODS else None
        return d


@dataclass
class FitResult:
    model: Model
    criterion: float
    train_seconds: float
    run: Optional[OptimizerRun] = None
    search: Optional[SearchResult] = None
    init_search: Optional[SearchResult] = None


def _spec(data, params, variant):
    return RegularizerSpec.for_data(data, lam=params.lam, p=params.p, delta=params.delta, variant=variant)


def fit(raw: RawDataset, params: TrainParams) -> FitResult:
    """Prepare ``raw`` and train the requested predictor on it."""
    t0 = time.perf_counter()
    data, preps = prepare(raw, params.prep, params.costs)
    scfg = SearchConfig(seed=params.seed)
    method = params.method
    run = search = init_search = None
    if method == "null":
        w = np.zeros(data.K)
        crit = criterion(data, w, _spec(data, params, FRACTIONAL)).total
    elif method == "nb":
        w = np.ones(data.K)
        crit = criterion(data, w, _spec(data, params, BOOLEAN)).total
    elif method == "snb":
        search = snb_train(data, _spec(data, params, BOOLEAN), scfg)
        w, crit = search.final_w, search.criterion
    elif method == "fnb":
        search = fnb_train(data, _spec(data, params, FRACTIONAL), scfg)
        w, crit = search.final_w, search.criterion
    else:
        if method == "fnb+sg.cf":
            opt_method, init = "SG.CF", "fnb"
        else:
            opt_method, init = method.upper(), params.resolved_init()
        if init == "uniform":
            w0 = init_for_gradient(K=data.K, policy="uniform")
        elif init == "snb":
            init_search = snb_train(data, _spec(data, params, BOOLEAN), scfg)
            w0 = init_for_gradient(init_search)
        else:
            init_search = fnb_train(data, _spec(data, params, FRACTIONAL), scfg)
            w0 = init_for_gradient(init_search)
        spec = _spec(data, params, CONTINUOUS)
        config = OptimizerConfig(method=opt_method, epsilon=params.epsilon, max_iters=params.max_iters)
        run = solve(data, spec, config, w0)
        w, crit = run.final_w.weights, run.criterion
    elapsed = time.perf_counter() - t0
    metadata = {"method": method, "params": params.label(), "train_criterion": float(crit),
                "n_train": raw.N, "target": raw.target_name}
    model = Model(preps, data.log_prior, list(raw.classes), np.asarray(w, dtype=np.float64), metadata)
    return FitResult(model, float(crit), elapsed, run, search, init_search)
