"""Regularised weighted naive Bayes criteria.

All criteria are quantities to minimise::

    total = nll(w) + lam * prior(w)

``nll`` is the negative conditional log-likelihood of the training labels
under the weighted naive Bayes posterior; it is convex in ``w``. The prior
comes in four flavours:

* ``boolean``: subset prior for 0/1 weights (universal code for the subset
  size, multinomial subset term, per-variable costs);
* ``fractional``: the same prior with the subset size replaced by the ceiling
  of the weight sum and costs scaled by ``w_k ** p``;
* ``continuous``: ``sum_k (1 - log(W + 1) + B_k) xi(w_k)`` with
  ``W = sum(w)``, or a fixed ``W_ref`` when one is given (separable form);
* ``convex_relaxed``: the same coefficients with ``xi(w) = w`` and ``W_ref``
  fixed, a linear (hence convex) penalty.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .data import PreparedDataset

RISSANEN_C0 = 2.865064
LN2 = math.log(2.0)

BOOLEAN = "boolean"
CONTINUOUS = "continuous"
FRACTIONAL = "fractional"
CONVEX_RELAXED = "convex_relaxed"
VARIANTS = (BOOLEAN, CONTINUOUS, FRACTIONAL, CONVEX_RELAXED)


class ConfigurationError(ValueError):
    pass


@dataclass
class WeightVector:
    """Weights in ``[0, 1]^K`` with a mask of components frozen at zero."""

    weights: np.ndarray
    zero_fixed: Optional[np.ndarray] = None

    def __post_init__(self):
        self.weights = np.array(self.weights, dtype=np.float64)
        if self.zero_fixed is None:
            self.zero_fixed = np.zeros(self.weights.shape, dtype=bool)
        else:
            self.zero_fixed = np.array(self.zero_fixed, dtype=bool)
        if self.zero_fixed.shape != self.weights.shape:
            raise ValueError("mask and weights differ in length")
        if np.any(self.weights < 0.0) or np.any(self.weights > 1.0):
            raise ValueError("weights must lie in [0, 1]")
        if np.any(self.weights[self.zero_fixed] != 0.0):
            raise ValueError("zero-fixed components must be 0")

    def __array__(self, dtype=None, copy=None):
        return self.weights if dtype is None else self.weights.astype(dtype)

    def __len__(self):
        return len(self.weights)

    @property
    def selected_count(self) -> int:
        return int(np.count_nonzero(self.weights > 0.0))


@dataclass
class RegularizerSpec:
    costs: np.ndarray
    lam: float = 0.25
    p: float = 0.95
    delta: float = 1e-6
    variant: str = CONTINUOUS
    W_ref: Optional[float] = None

    def __post_init__(self):
        self.costs = np.asarray(self.costs, dtype=np.float64)
        if self.variant not in VARIANTS:
            raise ConfigurationError(f"unknown prior variant {self.variant!r}")
        if not self.lam >= 0.0:
            raise ConfigurationError("lambda must be non-negative")
        if not 0.0 < self.p <= 1.0:
            raise ConfigurationError("p must lie in (0, 1]")
        if not 0.0 < self.delta < 1.0:
            raise ConfigurationError("delta must lie in (0, 1)")
        if np.any(self.costs < 0.0):
            raise ConfigurationError("variable costs must be non-negative")
        if self.variant == CONVEX_RELAXED and self.W_ref is None:
            raise ConfigurationError("convex_relaxed prior needs W_ref")
        if self.variant in (CONTINUOUS, CONVEX_RELAXED) and len(self.costs):
            # worst case is the largest feasible W
            W = len(self.costs) if self.W_ref is None else self.W_ref
            worst = 1.0 - math.log(W + 1.0) + float(self.costs.min())
            if not worst > 0.0:
                raise ConfigurationError(
                    f"penalty coefficient 1 - log(W+1) + B_k = {worst:.4g} is not positive; "
                    "variable costs are too small for this number of variables"
                )

    @property
    def K(self) -> int:
        return len(self.costs)

    @classmethod
    def for_data(cls, data: PreparedDataset, **kwargs) -> "RegularizerSpec":
        return cls(costs=data.costs, **kwargs)

    def replace(self, **changes) -> "RegularizerSpec":
        fields = dict(costs=self.costs, lam=self.lam, p=self.p, delta=self.delta,
                      variant=self.variant, W_ref=self.W_ref)
        fields.update(changes)
        return RegularizerSpec(**fields)

    def coefficients(self, W: float) -> np.ndarray:
        return 1.0 - math.log(W + 1.0) + self.costs


@dataclass(frozen=True)
class CriterionValue:
    total: float
    nll_part: float
    prior_part: float
    selected_count: int


def _as_weights(w) -> np.ndarray:
    return np.ascontiguousarray(np.asarray(w, dtype=np.float64))


def _check_dims(data: PreparedDataset, w: np.ndarray):
    if w.ndim != 1 or w.shape[0] != data.K:
        raise ValueError(f"weight vector of length {w.shape} for K={data.K}")


# ---------------------------------------------------------------- likelihood


def neg_log_likelihood(data: PreparedDataset, w) -> float:
    w = _as_weights(w)
    _check_dims(data, w)
    scores = kernels.compute_scores(data.cond, data.log_prior, w)
    return float(kernels.nll_from_scores(scores, data.y))


def nll_gradient(data: PreparedDataset, w) -> np.ndarray:
    w = _as_weights(w)
    _check_dims(data, w)
    scores = kernels.compute_scores(data.cond, data.log_prior, w)
    return np.asarray(kernels.nll_gradient(data.cond, scores, data.y))


def nll_and_gradient(data: PreparedDataset, w) -> tuple[float, np.ndarray]:
    w = _as_weights(w)
    _check_dims(data, w)
    scores = kernels.compute_scores(data.cond, data.log_prior, w)
    g = np.asarray(kernels.nll_gradient(data.cond, scores, data.y))
    if not np.all(np.isfinite(g)):
        raise FloatingPointError("non-finite likelihood gradient")
    return float(kernels.nll_from_scores(scores, data.y)), g


# ------------------------------------------------------------ penalty shapes


def _xi_constants(p: float, delta: float):
    c0 = delta**p * (1.0 - p)
    norm = 1.0 - c0
    return c0, norm, p * delta ** (p - 1.0) / norm


def xi_delta(t, p: float = 0.95, delta: float = 1e-6):
    """Increasing concave ``t**p``, linearised on ``[0, delta]`` and rescaled
    so that 0 maps to 0 and 1 maps to 1."""
    t_arr = np.asarray(t, dtype=np.float64)
    if np.any(t_arr < 0.0) or np.any(t_arr > 1.0):
        raise ValueError("xi_delta is defined on [0, 1]")
    c0, norm, slope0 = _xi_constants(p, delta)
    out = np.where(t_arr < delta, slope0 * t_arr, (t_arr**p - c0) / norm)
    return float(out) if np.ndim(t) == 0 else out


def xi_delta_prime(t, p: float = 0.95, delta: float = 1e-6):
    t_arr = np.asarray(t, dtype=np.float64)
    if np.any(t_arr < 0.0) or np.any(t_arr > 1.0):
        raise ValueError("xi_delta is defined on [0, 1]")
    _, norm, slope0 = _xi_constants(p, delta)
    safe = np.maximum(t_arr, delta)
    out = np.where(t_arr < delta, slope0, p * safe ** (p - 1.0) / norm)
    return float(out) if np.ndim(t) == 0 else out


# ---------------------------------------------------------- universal prior


def rissanen_code_length(n: int) -> float:
    """Universal code length of a positive integer, in nats.

    ``log2(c0) + log2(n) + log2(log2(n)) + ...`` over the positive terms.
    ``n = 0`` is priced like ``n = 1`` so the empty model stays finite.
    """
    if n < 0:
        raise ValueError("code length is defined for non-negative integers")
    bits = math.log2(RISSANEN_C0)
    x = float(max(n, 1))
    while True:
        x = math.log2(x)
        if x <= 0.0:
            break
        bits += x
    return bits * LN2


_LOG_FACT = np.zeros(1)


def log_factorial(n: int) -> float:
    """Exact ``log(n!)`` by summing logs (cumulative table grown on demand)."""
    global _LOG_FACT
    if n < 0:
        raise ValueError("factorial of a negative number")
    if n >= len(_LOG_FACT):
        size = max(n + 1, 2 * len(_LOG_FACT))
        table = np.zeros(size)
        table[1:] = np.cumsum(np.log(np.arange(1, size, dtype=np.float64)))
        _LOG_FACT = table
    return float(_LOG_FACT[n])


# ------------------------------------------------------------------- priors


def prior_boolean(w, spec: RegularizerSpec) -> float:
    w = _as_weights(w)
    if np.any((w != 0.0) & (w != 1.0)):
        raise ValueError("boolean prior needs 0/1 weights")
    selected = w == 1.0
    ks = int(np.count_nonzero(selected))
    return rissanen_code_length(ks) - log_factorial(ks) + float(np.sum(spec.costs[selected]))


def prior_fractional(w, spec: RegularizerSpec) -> float:
    w = _as_weights(w)
    pos = w > 0.0
    ks = math.ceil(float(np.sum(w)))
    return (
        rissanen_code_length(ks)
        - log_factorial(ks)
        + float(np.sum(spec.costs[pos] * w[pos] ** spec.p))
    )


def prior_continuous(w, spec: RegularizerSpec) -> float:
    """``sum_k (1 - log(W + 1) + B_k) xi(w_k)``; ``W = sum(w)`` unless ``W_ref`` is set."""
    w = _as_weights(w)
    W = float(np.sum(w)) if spec.W_ref is None else spec.W_ref
    coef = spec.coefficients(W)
    if np.any(coef <= 0.0):
        raise ConfigurationError("penalty coefficient is not positive")
    return float(np.sum(coef * xi_delta(w, spec.p, spec.delta)))


def prior_convex_relaxed(w, spec: RegularizerSpec) -> float:
    w = _as_weights(w)
    return float(np.sum(spec.coefficients(spec.W_ref) * w))


_PRIORS = {
    BOOLEAN: prior_boolean,
    FRACTIONAL: prior_fractional,
    CONTINUOUS: prior_continuous,
    CONVEX_RELAXED: prior_convex_relaxed,
}


def prior(w, spec: RegularizerSpec) -> float:
    return _PRIORS[spec.variant](w, spec)


def prior_gradient(w, spec: RegularizerSpec) -> np.ndarray:
    """Gradient of the differentiable priors (continuous and convex_relaxed)."""
    w = _as_weights(w)
    if spec.variant == CONVEX_RELAXED:
        return spec.coefficients(spec.W_ref).copy()
    if spec.variant != CONTINUOUS:
        raise ValueError(f"{spec.variant} prior is not differentiable")
    xi_p = xi_delta_prime(w, spec.p, spec.delta)
    if spec.W_ref is not None:
        return spec.coefficients(spec.W_ref) * xi_p
    W = float(np.sum(w))
    coupling = -float(np.sum(xi_delta(w, spec.p, spec.delta))) / (W + 1.0)
    return coupling + spec.coefficients(W) * xi_p


def criterion(data: PreparedDataset, w, spec: RegularizerSpec) -> CriterionValue:
    w = _as_weights(w)
    nll = neg_log_likelihood(data, w)
    pr = prior(w, spec)
    return CriterionValue(nll + spec.lam * pr, nll, pr, int(np.count_nonzero(w > 0.0)))


def criterion_gradient(data: PreparedDataset, w, spec: RegularizerSpec) -> tuple[float, np.ndarray]:
    nll, g = nll_and_gradient(data, w)
    return nll + spec.lam * prior(w, spec), g + spec.lam * prior_gradient(w, spec)


# --------------------------------------------------------------- incremental


class IncrementalEvaluator:
    """Criterion state supporting O(NJ) single-weight moves.

    Keeps the ``(N, J)`` score matrix. Moving ``w_k`` by ``d`` shifts every
    score by ``d * log p(x_k | C_j)``; the prior is recomputed exactly.
    """

    def __init__(self, data: PreparedDataset, w, spec: RegularizerSpec):
        self.data = data
        self.spec = spec
        self.w = _as_weights(w).copy()
        _check_dims(data, self.w)
        self.updates = 0
        self.resync()

    def resync(self) -> CriterionValue:
        self.scores = np.ascontiguousarray(kernels.compute_scores(self.data.cond, self.data.log_prior, self.w))
        self.nll = float(kernels.nll_from_scores(self.scores, self.data.y))
        self.prior = prior(self.w, self.spec)
        return self.value()

    def value(self) -> CriterionValue:
        return CriterionValue(self.nll + self.spec.lam * self.prior, self.nll, self.prior,
                              int(np.count_nonzero(self.w > 0.0)))

    @property
    def total(self) -> float:
        return self.nll + self.spec.lam * self.prior

    def _check_index(self, k: int):
        if not 0 <= k < self.data.K:
            raise IndexError(f"variable index {k} out of range for K={self.data.K}")

    def _prior_with(self, k: int, new_wk: float) -> float:
        old = self.w[k]
        self.w[k] = new_wk
        try:
            return prior(self.w, self.spec)
        finally:
            self.w[k] = old

    def trial(self, k: int, new_wk: float) -> CriterionValue:
        """Criterion after setting ``w_k = new_wk``; state is left untouched."""
        self._check_index(k)
        self.updates += 1
        d = new_wk - self.w[k]
        nll = float(kernels.trial_nll(self.scores, self.data.cond[k], d, self.data.y))
        pr = self._prior_with(k, new_wk)
        count = int(np.count_nonzero(self.w > 0.0)) - int(self.w[k] > 0.0) + int(new_wk > 0.0)
        return CriterionValue(nll + self.spec.lam * pr, nll, pr, count)

    def update_weight(self, k: int, new_wk: float) -> CriterionValue:
        self._check_index(k)
        self.updates += 1
        d = new_wk - self.w[k]
        if d != 0.0:
            kernels.add_scaled(self.scores, self.data.cond[k], d)
            self.w[k] = new_wk
            self.nll = float(kernels.nll_from_scores(self.scores, self.data.y))
            self.prior = prior(self.w, self.spec)
        return self.value()


def incremental_evaluator(data: PreparedDataset, w, spec: RegularizerSpec) -> IncrementalEvaluator:
    return IncrementalEvaluator(data, w, spec)


def update_weight(state: IncrementalEvaluator, k: int, new_wk: float) -> CriterionValue:
    return state.update_weight(k, new_wk)
