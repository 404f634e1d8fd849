"""Forward-backward weight search driven by the incremental evaluator.

``snb_train`` is the multi-start fast forward-backward selection over 0/1
weights whose final predictor averages every subset met on the way.
``fnb_train`` runs a single start over fractional weights, moving one weight
at a time by dyadic increments ``1/2, 1/4, ...`` while the increment stays
above ``1/N``. It keeps the best weight vector rather than an average.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .criterion import BOOLEAN, FRACTIONAL, IncrementalEvaluator, RegularizerSpec
from .data import PreparedDataset


@dataclass
class SearchConfig:
    seed: int = 0
    n_starts: Optional[int] = None  # default ceil(log(K N))
    max_repeats: int = 2
    fnb_repeats: Optional[int] = None  # default 1 + ceil(log K / log N)
    averaging: str = "uniform"  # or "compression"

    def starts(self, K: int, N: int) -> int:
        if self.n_starts is not None:
            return max(1, self.n_starts)
        return max(1, math.ceil(math.log(max(K * N, 2))))

    def fnb_passes(self, K: int, N: int) -> int:
        if self.fnb_repeats is not None:
            return max(1, self.fnb_repeats)
        if K <= 1 or N <= 1:
            return 1
        return 1 + math.ceil(math.log(K) / math.log(N))


@dataclass
class SearchResult:
    """``final_w`` is the predictor's weight vector: the subset average for
    SNB, the best fractional vector for FNB. ``criterion`` is evaluated at
    ``best_w`` (equal to ``final_w`` for FNB)."""

    final_w: np.ndarray
    best_w: np.ndarray
    criterion: float
    null_criterion: float
    evaluations: int
    accepted_subsets: list = field(default_factory=list)
    subset_criteria: list = field(default_factory=list)
    method: str = ""

    @property
    def selected_count(self) -> int:
        return int(np.count_nonzero(self.final_w > 0.0))


def increment_schedule(N: int) -> list[float]:
    """``1/2^i`` for ``i = 1, 2, ...`` while ``1/2^i > 1/N``."""
    incs = []
    i = 1
    while 0.5**i > 1.0 / N:
        incs.append(0.5**i)
        i += 1
    return incs


def _shuffle(K, seed, start, pass_index):
    return np.random.default_rng([seed, start, pass_index]).permutation(K)


def _require(spec: RegularizerSpec, variant: str):
    if spec.variant != variant:
        raise ValueError(f"this search needs the {variant} prior, got {spec.variant}")


def ffwbw_boolean(data: PreparedDataset, spec: RegularizerSpec, config: Optional[SearchConfig] = None,
                  seed: Optional[int] = None, start: int = 0) -> SearchResult:
    """One start of fast forward-backward selection from the empty subset."""
    _require(spec, BOOLEAN)
    config = config or SearchConfig()
    seed = config.seed if seed is None else seed
    K = data.K
    ev = IncrementalEvaluator(data, np.zeros(K), spec)
    null = ev.total
    best_total, best_w = null, ev.w.copy()
    subsets, crits = [], []
    for rep in range(config.max_repeats):
        moves = 0
        for k in _shuffle(K, seed, start, 2 * rep):
            if ev.w[k] == 1.0:
                continue
            if ev.trial(k, 1.0).total < ev.total:
                ev.update_weight(k, 1.0)
                subsets.append(ev.w.copy())
                crits.append(ev.total)
                moves += 1
        ev.resync()
        for k in _shuffle(K, seed, start, 2 * rep + 1):
            if ev.w[k] == 0.0:
                continue
            if ev.trial(k, 0.0).total < ev.total:
                ev.update_weight(k, 0.0)
                subsets.append(ev.w.copy())
                crits.append(ev.total)
                moves += 1
        ev.resync()
        if ev.total < best_total:
            best_total, best_w = ev.total, ev.w.copy()
        if moves == 0:
            break
    return SearchResult(best_w.copy(), best_w, best_total, null, ev.updates, subsets, crits, "ffwbw")


def snb_train(data: PreparedDataset, spec: RegularizerSpec, config: Optional[SearchConfig] = None) -> SearchResult:
    """Multi-start selection; returns the best subset and the subset average."""
    _require(spec, BOOLEAN)
    config = config or SearchConfig()
    runs = [ffwbw_boolean(data, spec, config, config.seed, s) for s in range(config.starts(data.K, data.N))]
    best = min(runs, key=lambda r: r.criterion)
    subsets = [s for r in runs for s in r.accepted_subsets]
    crits = [c for r in runs for c in r.subset_criteria]
    null = runs[0].null_criterion
    if not subsets:
        avg = np.zeros(data.K)
    elif config.averaging == "uniform":
        avg = np.mean(subsets, axis=0)
    elif config.averaging == "compression":
        rates = np.maximum(0.0, 1.0 - np.asarray(crits) / null)
        avg = np.average(subsets, axis=0, weights=rates) if rates.sum() > 0 else np.mean(subsets, axis=0)
    else:
        raise ValueError(f"unknown averaging mode {config.averaging!r}")
    return SearchResult(
        final_w=avg,
        best_w=best.best_w,
        criterion=best.criterion,
        null_criterion=null,
        evaluations=sum(r.evaluations for r in runs),
        accepted_subsets=subsets,
        subset_criteria=crits,
        method="snb",
    )


def fnb_train(data: PreparedDataset, spec: RegularizerSpec, config: Optional[SearchConfig] = None) -> SearchResult:
    """Single-start forward-backward search over dyadic fractional weights."""
    _require(spec, FRACTIONAL)
    config = config or SearchConfig()
    K, N = data.K, data.N
    ev = IncrementalEvaluator(data, np.zeros(K), spec)
    null = ev.total
    best_total, best_w = null, ev.w.copy()
    repeats = config.fnb_passes(K, N)
    pass_index = 0
    pass_criteria = []
    for inc in increment_schedule(N):
        for _ in range(repeats):
            for k in _shuffle(K, config.seed, 0, pass_index):
                if ev.w[k] >= 1.0:
                    continue
                new = min(1.0, ev.w[k] + inc)
                if ev.trial(k, new).total < ev.total:
                    ev.update_weight(k, new)
            ev.resync()
            for k in _shuffle(K, config.seed, 0, pass_index + 1):
                if ev.w[k] <= 0.0:
                    continue
                new = max(0.0, ev.w[k] - inc)
                if ev.trial(k, new).total < ev.total:
                    ev.update_weight(k, new)
            ev.resync()
            pass_index += 2
            pass_criteria.append(ev.total)
            if ev.total < best_total:
                best_total, best_w = ev.total, ev.w.copy()
    return SearchResult(best_w.copy(), best_w, best_total, null, ev.updates,
                        subset_criteria=pass_criteria, method="fnb")


def init_for_gradient(result: Optional[SearchResult] = None, K: Optional[int] = None,
                      policy: str = "result") -> np.ndarray:
    """Starting point for the gradient methods.

    ``policy="uniform"`` gives 0.5 for every variable; otherwise the search
    result's predictor weights pass through unchanged.
    """
    if policy == "uniform":
        if K is None:
            K = len(result.final_w)
        return np.full(K, 0.5)
    if result is None:
        raise ValueError("a search result is needed unless policy='uniform'")
    return np.asarray(result.final_w, dtype=np.float64).copy()
