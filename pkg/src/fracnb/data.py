"""Tabular ingestion and univariate preparation.

Each input variable is partitioned (equal-frequency bins for numbers, frequent
values plus a pooled group for categories, a dedicated part for missing
cells) and its class-conditional probabilities are Laplace-smoothed. The
result is cached as a dense ``(K, N, J)`` array of conditional
log-probabilities, the only thing the criteria and optimizers ever read.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

NUMERICAL = "numerical"
CATEGORICAL = "categorical"
DEFAULT_MISSING = ("", "?")


class DataError(ValueError):
    """Raised for malformed input files or degenerate datasets."""


@dataclass
class RawDataset:
    """Column-oriented raw table.

    Numerical columns are float arrays with NaN for missing cells; categorical
    columns are object arrays holding strings or ``None``.
    """

    names: list[str]
    kinds: list[str]
    columns: list[np.ndarray]
    target: Optional[np.ndarray] = None
    classes: list[str] = field(default_factory=list)
    target_name: Optional[str] = None

    @property
    def N(self) -> int:
        if self.target is not None:
            return len(self.target)
        return len(self.columns[0]) if self.columns else 0

    @property
    def K(self) -> int:
        return len(self.names)

    @property
    def J(self) -> int:
        return len(self.classes)

    @property
    def y(self) -> np.ndarray:
        index = {c: j for j, c in enumerate(self.classes)}
        return np.array([index[v] for v in self.target], dtype=np.int64)

    def missing(self, k: int) -> np.ndarray:
        col = self.columns[k]
        if self.kinds[k] == NUMERICAL:
            return np.isnan(col)
        return np.array([v is None for v in col], dtype=bool)

    def subset(self, indices) -> "RawDataset":
        """Row subset; the class list is kept so label codes stay stable."""
        indices = np.asarray(indices, dtype=np.int64)
        return RawDataset(
            names=list(self.names),
            kinds=list(self.kinds),
            columns=[c[indices] for c in self.columns],
            target=None if self.target is None else self.target[indices],
            classes=list(self.classes),
            target_name=self.target_name,
        )


def _parse_float(text: str) -> Optional[float]:
    try:
        return float(text)
    except ValueError:
        return None


def read_table(path, delimiter: str = ",") -> tuple[list[str], list[list[str]]]:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh, delimiter=delimiter))
    except (csv.Error, UnicodeDecodeError) as exc:
        raise DataError(f"cannot parse {path}: {exc}") from exc
    rows = [r for r in rows if r]
    if not rows:
        raise DataError(f"{path}: missing header row")
    header = [h.strip() for h in rows[0]]
    body = rows[1:]
    for i, r in enumerate(body, start=2):
        if len(r) != len(header):
            raise DataError(f"{path}: line {i} has {len(r)} fields, expected {len(header)}")
    return header, body


def parse_column(cells: Sequence[str], kind: Optional[str] = None, missing=DEFAULT_MISSING):
    """Parse raw strings into a typed column; infer the kind when not given."""
    stripped = [c.strip() for c in cells]
    is_missing = [c in missing for c in stripped]
    if kind is None:
        kind = NUMERICAL
        for c, m in zip(stripped, is_missing):
            if not m and _parse_float(c) is None:
                kind = CATEGORICAL
                break
    if kind == NUMERICAL:
        values = np.array(
            [math.nan if m else (_parse_float(c) if _parse_float(c) is not None else math.nan)
             for c, m in zip(stripped, is_missing)],
            dtype=np.float64,
        )
        return kind, values
    col = np.empty(len(stripped), dtype=object)
    for i, (c, m) in enumerate(zip(stripped, is_missing)):
        col[i] = None if m else c
    return kind, col


def load_csv(path, target_name: str, delimiter: str = ",", missing=DEFAULT_MISSING) -> RawDataset:
    """Load a headed CSV file with a categorical target column.

    A column is numerical iff every non-missing cell parses as a float.
    """
    header, body = read_table(path, delimiter)
    if target_name not in header:
        raise DataError(f"missing target column {target_name!r} in {path}")
    if not body:
        raise DataError(f"{path}: zero data rows")
    t = header.index(target_name)
    target = np.array([r[t].strip() for r in body], dtype=object)
    if any(v in missing for v in target):
        raise DataError(f"target column {target_name!r} has missing labels")
    classes = sorted(set(target.tolist()))
    if len(classes) < 2:
        raise DataError(f"degenerate target: column {target_name!r} has a single class")
    names, kinds, columns = [], [], []
    for i, name in enumerate(header):
        if i == t:
            continue
        kind, col = parse_column([r[i] for r in body], missing=missing)
        names.append(name)
        kinds.append(kind)
        columns.append(col)
    return RawDataset(names, kinds, columns, target, classes, target_name)


def dataset_from_arrays(X, y, names=None, kinds=None, classes=None) -> RawDataset:
    """Build a :class:`RawDataset` from in-memory arrays (used by generators and tests)."""
    X = np.asarray(X)
    N, K = X.shape
    names = list(names) if names is not None else [f"x{k}" for k in range(K)]
    if kinds is None:
        kinds = [NUMERICAL if np.issubdtype(X.dtype, np.number) else CATEGORICAL] * K
    columns = []
    for k in range(K):
        if kinds[k] == NUMERICAL:
            columns.append(X[:, k].astype(np.float64))
        else:
            col = np.empty(N, dtype=object)
            col[:] = [None if v is None else str(v) for v in X[:, k]]
            columns.append(col)
    target = np.array([str(v) for v in y], dtype=object)
    if classes is None:
        classes = sorted(set(target.tolist()))
    return RawDataset(names, list(kinds), columns, target, list(classes), "class")


@dataclass
class PrepConfig:
    max_parts: Optional[int] = None  # default min(10, floor(sqrt(N)))
    min_group_count: Optional[float] = None  # default max(2, N / 100)
    pseudo_count: float = 1.0

    def resolved(self, n: int) -> tuple[int, float]:
        max_parts = self.max_parts if self.max_parts is not None else min(10, int(math.isqrt(max(n, 1))))
        threshold = self.min_group_count if self.min_group_count is not None else max(2.0, n / 100.0)
        return max(1, max_parts), threshold


@dataclass
class VariablePreparation:
    """Partition of one variable plus its smoothed class-conditional table.

    Part layout: value parts (bins or groups), then the pooled ``other``
    group when present, then the missing-value part when present.
    """

    name: str
    kind: str
    cutpoints: Optional[np.ndarray] = None
    groups: Optional[list[str]] = None
    has_other: bool = False
    has_missing: bool = False
    counts: Optional[np.ndarray] = None
    cond_log_prob: Optional[np.ndarray] = None
    cost: float = 0.0

    @property
    def n_parts(self) -> int:
        return self.cond_log_prob.shape[0]

    @property
    def n_value_parts(self) -> int:
        if self.kind == NUMERICAL:
            return len(self.cutpoints) + 1
        return len(self.groups) + int(self.has_other)

    def encode(self, column: np.ndarray) -> np.ndarray:
        """Map raw cells to part indices; ``-1`` marks cells with no part.

        Out-of-range numbers land in the boundary bins and unseen categories
        in the pooled group. A missing cell has no part when training saw no
        missing values, and neither does an unseen category without a pooled
        group; such cells contribute nothing to the posterior.
        """
        n = len(column)
        out = np.empty(n, dtype=np.int64)
        missing_part = self.n_value_parts if self.has_missing else -1
        if self.kind == NUMERICAL:
            col = np.asarray(column, dtype=np.float64)
            miss = np.isnan(col)
            out[:] = np.searchsorted(self.cutpoints, np.where(miss, 0.0, col), side="right")
            out[miss] = missing_part
            return out
        index = {g: i for i, g in enumerate(self.groups)}
        other = len(self.groups) if self.has_other else -1
        for i, v in enumerate(column):
            if v is None:
                out[i] = missing_part
            else:
                out[i] = index.get(v, other)
        return out

    def partition_dict(self) -> dict:
        if self.kind == NUMERICAL:
            d = {"cutpoints": [float(c) for c in self.cutpoints]}
        else:
            d = {"groups": list(self.groups), "has_other": self.has_other}
        d["has_missing"] = self.has_missing
        return d

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "kind": self.kind,
            "partition": self.partition_dict(),
            "counts": self.counts.tolist(),
            "cond_log_prob": self.cond_log_prob.tolist(),
            "cost": float(self.cost),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "VariablePreparation":
        part = d["partition"]
        prep = cls(
            name=d["name"],
            kind=d["kind"],
            has_missing=bool(part.get("has_missing", False)),
            cond_log_prob=np.array(d["cond_log_prob"], dtype=np.float64),
            cost=float(d["cost"]),
        )
        if prep.kind == NUMERICAL:
            prep.cutpoints = np.array(part["cutpoints"], dtype=np.float64)
        else:
            prep.groups = list(part["groups"])
            prep.has_other = bool(part["has_other"])
        if "counts" in d:
            prep.counts = np.array(d["counts"], dtype=np.int64)
        return prep


def equal_frequency_cutpoints(values: np.ndarray, max_parts: int) -> np.ndarray:
    """Midpoint cuts between distinct values, each placed at the value
    boundary closest to an equal-frequency rank. Ties may merge bins."""
    x = values[~np.isnan(values)]
    uniq, counts = np.unique(x, return_counts=True)
    if len(uniq) < 2:
        return np.empty(0, dtype=np.float64)
    m = len(x)
    parts = min(max_parts, m)
    boundary_rank = np.cumsum(counts)[:-1]
    cuts = []
    for i in range(1, parts):
        t = int(np.argmin(np.abs(boundary_rank - i * m / parts)))
        cuts.append(0.5 * (uniq[t] + uniq[t + 1]))
    return np.unique(np.array(cuts, dtype=np.float64))


def prepare_variable(raw: RawDataset, k: int, config: Optional[PrepConfig] = None) -> VariablePreparation:
    config = config or PrepConfig()
    if not 0 <= k < raw.K:
        raise IndexError(f"variable index {k} out of range for K={raw.K}")
    max_parts, threshold = config.resolved(raw.N)
    column = raw.columns[k]
    missing = raw.missing(k)
    prep = VariablePreparation(name=raw.names[k], kind=raw.kinds[k], has_missing=bool(missing.any()))
    if prep.kind == NUMERICAL:
        prep.cutpoints = equal_frequency_cutpoints(column, max_parts)
    else:
        values, counts = np.unique(np.array([v for v in column if v is not None], dtype=object).astype(str),
                                   return_counts=True)
        prep.groups = [str(v) for v, c in zip(values, counts) if c >= threshold]
        prep.has_other = bool(np.any(counts < threshold))
    parts = prep.encode(column)
    n_parts = prep.n_value_parts + int(prep.has_missing)
    y = raw.y
    counts = np.zeros((n_parts, raw.J), dtype=np.int64)
    np.add.at(counts, (parts, y), 1)
    prep.counts = counts
    a = config.pseudo_count
    prep.cond_log_prob = np.log(counts + a) - np.log(counts.sum(axis=0) + a * n_parts)[None, :]
    return prep


def preparation_cost(prep: VariablePreparation) -> float:
    """Stand-in preparation cost: log2(#parts) bits, expressed in nats."""
    return math.log2(prep.n_parts) * math.log(2.0)


def read_cost_file(path) -> dict[str, float]:
    header, body = read_table(path)
    rows = [header] + body
    if len(header) >= 2 and _parse_float(header[1]) is None:
        rows = body
    costs = {}
    for r in rows:
        if len(r) < 2:
            raise DataError(f"{path}: cost rows need two fields")
        value = _parse_float(r[1])
        if value is None:
            raise DataError(f"{path}: cost for {r[0]!r} is not a number")
        costs[r[0].strip()] = value
    return costs


def assign_costs(raw: RawDataset, preps: Sequence[VariablePreparation], cost_file=None) -> np.ndarray:
    """Per-variable prior cost in nats: ``log K`` (equiprobable selection)
    plus the preparation cost, overridden per variable by ``cost_file``."""
    K = raw.K
    selection = math.log(K) if K > 0 else 0.0
    costs = np.array([selection + preparation_cost(p) for p in preps], dtype=np.float64)
    if cost_file is not None:
        overrides = read_cost_file(cost_file) if not isinstance(cost_file, dict) else dict(cost_file)
        index = {n: i for i, n in enumerate(raw.names)}
        for name, value in overrides.items():
            if name not in index:
                raise DataError(f"cost file names unknown variable {name!r}")
            if not value >= 0.0:
                raise DataError(f"negative cost {value} for variable {name!r}")
            costs[index[name]] = value
    for prep, c in zip(preps, costs):
        prep.cost = float(c)
    return costs


@dataclass(frozen=True)
class PreparedDataset:
    """Cached log-probabilities consumed by every criterion.

    ``cond[k, n, j] = log p(x_k^n | C_j)``; ``log_prior[j] = log P(C_j)``.
    The negated true-class entries ``-cond[:, n, y[n]]`` are the per-instance
    linear coefficients of the negative log-likelihood.
    """

    cond: np.ndarray
    log_prior: np.ndarray
    y: np.ndarray
    costs: np.ndarray
    names: tuple = ()
    classes: tuple = ()

    @property
    def N(self) -> int:
        return self.cond.shape[1]

    @property
    def K(self) -> int:
        return self.cond.shape[0]

    @property
    def J(self) -> int:
        return self.cond.shape[2]

    def true_class_log_prob(self) -> np.ndarray:
        """``(N, K)`` array of ``log p(x_k^n | y^n)``."""
        return self.cond[:, np.arange(self.N), self.y].T

    def with_costs(self, costs) -> "PreparedDataset":
        return PreparedDataset(self.cond, self.log_prior, self.y, np.asarray(costs, dtype=np.float64),
                               self.names, self.classes)


def class_log_prior(y: np.ndarray, J: int, pseudo_count: float = 1.0) -> np.ndarray:
    counts = np.bincount(y, minlength=J).astype(np.float64)
    return np.log(counts + pseudo_count) - math.log(counts.sum() + pseudo_count * J)


def encode_all(raw: RawDataset, preps: Sequence[VariablePreparation]) -> np.ndarray:
    if len(preps) != raw.K:
        raise DataError(f"{len(preps)} preparations for {raw.K} variables")
    parts = np.empty((raw.N, raw.K), dtype=np.int64)
    for k, prep in enumerate(preps):
        parts[:, k] = prep.encode(raw.columns[k])
    return parts


def build_prepared(raw: RawDataset, preps: Sequence[VariablePreparation], costs=None,
                   log_prior: Optional[np.ndarray] = None, strict: bool = True) -> PreparedDataset:
    """Fill the ``(K, N, J)`` cache.

    With ``strict`` every cell must fall in a part (the training case). Held-out
    data passes ``strict=False`` together with the training ``log_prior``;
    cells without a part then get a zero row, i.e. no evidence. Unlabelled
    data gets ``y = -1`` and is only fit for prediction.
    """
    parts = encode_all(raw, preps)
    if strict and np.any(parts < 0):
        k = int(np.nonzero((parts < 0).any(axis=0))[0][0])
        raise DataError(f"variable {raw.names[k]!r}: cell outside every part")
    if log_prior is None:
        log_prior = class_log_prior(raw.y, raw.J)
    cond = np.zeros((raw.K, raw.N, raw.J), dtype=np.float64)
    for k, prep in enumerate(preps):
        ok = parts[:, k] >= 0
        cond[k, ok, :] = prep.cond_log_prob[parts[ok, k], :]
    if costs is None:
        costs = np.array([p.cost for p in preps], dtype=np.float64)
    return PreparedDataset(
        cond=np.ascontiguousarray(cond),
        log_prior=np.asarray(log_prior, dtype=np.float64),
        y=raw.y if raw.target is not None else np.full(raw.N, -1, dtype=np.int64),
        costs=np.asarray(costs, dtype=np.float64),
        names=tuple(raw.names),
        classes=tuple(raw.classes),
    )


def prepare(raw: RawDataset, config: Optional[PrepConfig] = None, cost_file=None):
    """Prepare every variable, assign costs and build the cache.

    Returns ``(prepared, preps)``.
    """
    preps = [prepare_variable(raw, k, config) for k in range(raw.K)]
    costs = assign_costs(raw, preps, cost_file)
    return build_prepared(raw, preps, costs), preps


def preparation_summary(preps: Sequence[VariablePreparation]) -> str:
    return json.dumps([p.to_dict() for p in preps], indent=2)
