"""Metrics, stratified cross-validation and the method comparison harness."""

from __future__ import annotations

import csv
import json
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace
from typing import Optional, Sequence

import numpy as np
from scipy.stats import rankdata

from . import kernels
from .data import PreparedDataset, RawDataset
from .model import Model
from .pipeline import TrainParams, canonical_method, fit

REPORT_COLUMNS = ("dataset", "method", "fold", "acc", "auc", "compression", "selected_vars", "train_seconds")
SWEEPS = {
    "lambda": ("lam", (0.0, 0.1, 0.25, 0.5, 0.75, 1.0)),
    "p": ("p", (0.95, 0.85, 0.75, 0.65)),
    "epsilon": ("epsilon", (0.002, 0.01, 0.05)),
}


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("FRACNB_THREADS", "1")))
    except ValueError:
        return 1


def _prepared(model: Model, dataset) -> PreparedDataset:
    if isinstance(dataset, PreparedDataset):
        return dataset
    return model.prepare(dataset)


def predict_proba(model: Model, instance) -> np.ndarray:
    """Posterior over classes for one instance (sequence of raw cell values)."""
    return model.predict_instance(instance)


# ------------------------------------------------------------------ metrics


def accuracy_score(proba: np.ndarray, y: np.ndarray) -> float:
    if len(y) == 0:
        raise ValueError("accuracy of an empty dataset")
    return float(np.mean(np.argmax(proba, axis=1) == y))


def binary_auc(scores: np.ndarray, positive: np.ndarray) -> float:
    """Mann-Whitney estimate; tied pairs count one half."""
    positive = np.asarray(positive, dtype=bool)
    n_pos = int(positive.sum())
    n_neg = len(positive) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs both positive and negative instances")
    ranks = rankdata(scores)
    return float((ranks[positive].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def auc_score(proba: np.ndarray, y: np.ndarray) -> float:
    """Binary AUC on the second class, else macro one-vs-rest over the
    classes present in ``y``."""
    J = proba.shape[1]
    if J == 2:
        return binary_auc(proba[:, 1], y == 1)
    present = [j for j in range(J) if 0 < np.sum(y == j) < len(y)]
    if not present:
        raise ValueError("AUC undefined: a single class is present")
    return float(np.mean([binary_auc(proba[:, j], y == j) for j in present]))


def accuracy(model: Model, dataset) -> float:
    data = _prepared(model, dataset)
    return accuracy_score(model.predict_proba(data), data.y)


def auc(model: Model, dataset) -> float:
    data = _prepared(model, dataset)
    return auc_score(model.predict_proba(data), data.y)


def compression_rate(model: Model, dataset) -> float:
    data = _prepared(model, dataset)
    scores = model.scores(data)
    null_scores = kernels.compute_scores(data.cond, model.log_prior, np.zeros(data.K))
    if data.N == 0:
        raise ValueError("compression of an empty dataset")
    nll_null = kernels.nll_from_scores(null_scores, data.y)
    return float(1.0 - kernels.nll_from_scores(scores, data.y) / nll_null)


# --------------------------------------------------------------------- folds


def stratified_kfold(y, folds: int, seed: int = 0) -> list[tuple[np.ndarray, np.ndarray]]:
    """Seeded per-class shuffle then round-robin assignment to folds."""
    y = np.asarray(y.y if isinstance(y, RawDataset) else y)
    N = len(y)
    if folds < 2:
        raise ValueError("at least two folds are needed")
    if folds > N:
        raise ValueError(f"{folds} folds for {N} instances")
    rng = np.random.default_rng(seed)
    assign = np.empty(N, dtype=np.int64)
    offset = 0
    for c in np.unique(y):
        members = np.flatnonzero(y == c)
        if len(members) < folds:
            warnings.warn(f"class {c} has {len(members)} instances for {folds} folds", stacklevel=2)
        members = rng.permutation(members)
        assign[members] = (offset + np.arange(len(members))) % folds
        offset = (offset + len(members)) % folds
    out = []
    for f in range(folds):
        test = np.flatnonzero(assign == f)
        train = np.flatnonzero(assign != f)
        out.append((train, test))
    return out


# ----------------------------------------------------------------- benchmark


@dataclass
class EvaluationReport:
    dataset: str
    method: str
    fold: int
    acc: float
    auc: float
    compression: float
    selected_vars: int
    train_seconds: float
    train_criterion: float = float("nan")


def evaluate_model(model: Model, test: RawDataset) -> tuple[float, float, float]:
    data = model.prepare(test)
    proba = model.predict_proba(data)
    try:
        a = auc_score(proba, data.y)
    except ValueError:
        a = float("nan")
    return accuracy_score(proba, data.y), a, compression_rate(model, data)


def _run_job(raw, name, label, params, fold, train_idx, test_idx, record_timing):
    result = fit(raw.subset(train_idx), params)
    acc, a, comp = evaluate_model(result.model, raw.subset(test_idx))
    seconds = result.train_seconds if record_timing else float("nan")
    return EvaluationReport(name, label, fold, acc, a, comp, result.model.selected_count, seconds,
                            result.criterion)


def benchmark(raw: RawDataset, methods: Sequence, params: Optional[TrainParams] = None, folds: int = 5,
              seed: int = 0, dataset_name: str = "data", threads: Optional[int] = None,
              record_timing: bool = True) -> list[EvaluationReport]:
    """Cross-validated comparison on shared folds.

    ``methods`` holds method names or ``(label, TrainParams)`` pairs. A
    ``null`` row is always included. Preparation sees training rows only.
    Jobs may run on a thread pool; results are ordered by (method, fold).
    """
    params = params or TrainParams(seed=seed)
    jobs = []
    seen = set()
    entries = [("null", replace(params, method="null"))]
    for m in methods:
        if isinstance(m, tuple):
            entries.append(m)
        else:
            entries.append((canonical_method(m), replace(params, method=m)))
    unique = []
    for label, p in entries:
        if label not in seen:
            seen.add(label)
            unique.append((label, p))
    splits = stratified_kfold(raw.y, folds, seed)
    for mi, (label, p) in enumerate(unique):
        for f, (tr, te) in enumerate(splits):
            jobs.append(((mi, f), (raw, dataset_name, label, p, f, tr, te, record_timing)))
    threads = thread_count() if threads is None else threads
    if threads <= 1:
        results = {key: _run_job(*args) for key, args in jobs}
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = {key: pool.submit(_run_job, *args) for key, args in jobs}
            results = {key: fut.result() for key, fut in futures.items()}
    return [results[key] for key in sorted(results)]


def sweep_entries(kind: str, params: TrainParams) -> list[tuple[str, TrainParams]]:
    if kind not in SWEEPS:
        raise ValueError(f"unknown sweep {kind!r}; expected one of {', '.join(SWEEPS)}")
    attr, values = SWEEPS[kind]
    return [(f"{params.method}[{kind}={v:g}]", replace(params, **{attr: v})) for v in values]


def _fmt(v) -> str:
    if isinstance(v, float):
        return "" if np.isnan(v) else repr(v)
    return str(v)


def write_report_csv(reports: Sequence[EvaluationReport], path):
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(REPORT_COLUMNS)
        for r in reports:
            out.writerow([_fmt(getattr(r, c)) for c in REPORT_COLUMNS])


def summarize(reports: Sequence[EvaluationReport]) -> dict:
    """Mean and standard deviation of each metric per method."""
    by_method: dict[str, list[EvaluationReport]] = {}
    for r in reports:
        by_method.setdefault(r.method, []).append(r)
    summary = {}
    for method, rows in by_method.items():
        entry = {"folds": len(rows)}
        for col in ("acc", "auc", "compression", "selected_vars", "train_seconds"):
            vals = np.array([getattr(r, col) for r in rows], dtype=float)
            if np.all(np.isnan(vals)):
                entry[col] = {"mean": None, "std": None}
            else:
                entry[col] = {"mean": float(np.nanmean(vals)), "std": float(np.nanstd(vals))}
        summary[method] = entry
    return summary


def write_report_json(reports: Sequence[EvaluationReport], path):
    doc = {"summary": summarize(reports),
           "folds": [{k: (None if isinstance(v, float) and np.isnan(v) else v) for k, v in asdict(r).items()}
                     for r in reports]}
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
