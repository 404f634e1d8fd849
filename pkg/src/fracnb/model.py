"""Weighted naive Bayes predictor and its JSON persistence."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import kernels
from .data import (
    NUMERICAL,
    DataError,
    PreparedDataset,
    RawDataset,
    VariablePreparation,
    build_prepared,
    parse_column,
    read_table,
)

FORMAT = "fracnb-model/1"


@dataclass
class Model:
    preps: list[VariablePreparation]
    log_prior: np.ndarray
    classes: list[str]
    weights: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.log_prior = np.asarray(self.log_prior, dtype=np.float64)
        if len(self.weights) != len(self.preps):
            raise ValueError(f"{len(self.weights)} weights for {len(self.preps)} variables")

    @property
    def names(self) -> list[str]:
        return [p.name for p in self.preps]

    @property
    def selected_count(self) -> int:
        return int(np.count_nonzero(self.weights > 0.0))

    def prepare(self, raw: RawDataset) -> PreparedDataset:
        """Encode held-out data with the training partitions and priors."""
        if raw.names != self.names:
            raw = self.align(raw)
        return build_prepared(raw, self.preps, log_prior=self.log_prior, strict=False)

    def align(self, raw: RawDataset) -> RawDataset:
        index = {n: i for i, n in enumerate(raw.names)}
        missing = [n for n in self.names if n not in index]
        if missing:
            raise DataError(f"data lacks model variable(s): {', '.join(missing)}")
        order = [index[n] for n in self.names]
        return RawDataset([raw.names[i] for i in order], [raw.kinds[i] for i in order],
                          [raw.columns[i] for i in order], raw.target, raw.classes, raw.target_name)

    def scores(self, data: PreparedDataset) -> np.ndarray:
        return kernels.compute_scores(data.cond, self.log_prior, np.ascontiguousarray(self.weights))

    def predict_proba(self, data) -> np.ndarray:
        """Posterior class probabilities, shape ``(N, J)``.

        ``data`` is a :class:`RawDataset` or a dataset already prepared with
        this model's partitions.
        """
        if isinstance(data, RawDataset):
            data = self.prepare(data)
        return np.asarray(kernels.softmax_rows(self.scores(data)))

    def predict_instance(self, values: Sequence) -> np.ndarray:
        """Posterior for one instance given its raw cell values in variable order."""
        columns = []
        for prep, v in zip(self.preps, values):
            if prep.kind == NUMERICAL:
                columns.append(np.array([np.nan if v is None else float(v)]))
            else:
                columns.append(np.array([None if v is None else str(v)], dtype=object))
        if len(columns) != len(self.preps):
            raise ValueError(f"{len(values)} values for {len(self.preps)} variables")
        raw = RawDataset(self.names, [p.kind for p in self.preps], columns, classes=list(self.classes))
        return self.predict_proba(raw)[0]

    def predict(self, data) -> np.ndarray:
        # argmax picks the lowest class index on ties
        return np.argmax(self.predict_proba(data), axis=1)

    # ---------------------------------------------------------- persistence

    def to_dict(self) -> dict:
        variables = []
        for prep, w in zip(self.preps, self.weights):
            d = prep.to_dict()
            d["weight"] = float(w)
            variables.append(d)
        return {
            "format": FORMAT,
            "metadata": self.metadata,
            "class_priors": {"labels": list(self.classes), "log_prob": [float(v) for v in self.log_prior]},
            "variables": variables,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Model":
        if d.get("format") != FORMAT:
            raise DataError(f"unsupported model format {d.get('format')!r}")
        preps = [VariablePreparation.from_dict(v) for v in d["variables"]]
        weights = [v["weight"] for v in d["variables"]]
        priors = d["class_priors"]
        return cls(preps, np.array(priors["log_prob"]), list(priors["labels"]), np.array(weights),
                   dict(d.get("metadata", {})))

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))

    @classmethod
    def load(cls, path) -> "Model":
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except (OSError, json.JSONDecodeError, KeyError) as exc:
            raise DataError(f"cannot load model {path}: {exc}") from exc


def read_for_model(model: Model, path, delimiter: str = ",") -> RawDataset:
    """Parse a CSV using the model's variable kinds; extra columns are ignored."""
    try:
        header, body = read_table(path, delimiter)
    except DataError:
        if Path(path).is_file() and Path(path).stat().st_size == 0:
            header, body = list(model.names), []
        else:
            raise
    index = {h: i for i, h in enumerate(header)}
    missing = [n for n in model.names if n not in index]
    if missing:
        raise DataError(f"data lacks model variable(s): {', '.join(missing)}")
    columns = []
    for prep in model.preps:
        _, col = parse_column([r[index[prep.name]] for r in body], kind=prep.kind)
        columns.append(col)
    return RawDataset(model.names, [p.kind for p in model.preps], columns, classes=list(model.classes))
