"""Box-constrained minimisation of the regularised criterion.

Eight methods are available. ``SG1`` (projected gradient on the full
non-convex criterion) and ``AM`` (alternating minimisation) work in one
stage. The two-stage methods ``{SG,UG,CG}.{CF,UE}`` first solve a convex
relaxation, where the penalty is linear with the weight sum frozen at an a
priori estimate. They then refine with the weight sum frozen at the
first-stage result and the concave penalty restored.

All gradient-type loops share one backtracking rule: on rejection the scale
``L`` doubles; on acceptance it halves for the next iteration, floored at
``L_init / 1024``. Steps are accepted only when the stage objective does
not increase, so every trace segment is monotone.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from . import kernels
from .criterion import (
    CONTINUOUS,
    CONVEX_RELAXED,
    RegularizerSpec,
    WeightVector,
    criterion,
    criterion_gradient,
    nll_and_gradient,
    neg_log_likelihood,
    prior_continuous,
    xi_delta,
    xi_delta_prime,
)
from .data import PreparedDataset

METHODS = ("SG1", "AM", "SG.CF", "SG.UE", "UG.CF", "UG.UE", "CG.CF", "CG.UE")


def normalize_method(method: str) -> str:
    m = method.strip().upper()
    if m == "SG":
        m = "SG1"
    if m not in METHODS:
        raise ValueError(f"unknown optimization method {method!r}; expected one of {', '.join(METHODS)}")
    return m


@dataclass
class OptimizerConfig:
    method: str = "SG.CF"
    epsilon: float = 0.01
    max_iters: int = 1000
    L_init: float = 1.0
    W0_policy: Union[str, float] = "init_sum"
    max_outer: int = 50
    max_doublings: int = 60
    keep_iterates: bool = False

    def __post_init__(self):
        self.method = normalize_method(self.method)
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if not self.L_init > 0:
            raise ValueError("L_init must be positive")


@dataclass
class TraceRow:
    iteration: int
    stage: str
    objective: float
    L: float
    displacement: float
    criterion: float


@dataclass
class OptimizerRun:
    method: str
    final_w: WeightVector
    trace: list[TraceRow]
    iterations: int
    wall_time: float
    objective: float
    criterion: float
    W_tilde: Optional[float] = None
    iterates: list = field(default_factory=list)

    def write_trace(self, path):
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh)
            out.writerow(["iteration", "stage", "objective", "L", "displacement", "criterion"])
            for r in self.trace:
                out.writerow([r.iteration, r.stage, repr(r.objective), repr(r.L),
                              repr(r.displacement), repr(r.criterion)])


def project_box(v, zero_fixed=None) -> np.ndarray:
    out = np.clip(np.asarray(v, dtype=np.float64), 0.0, 1.0)
    if zero_fixed is not None:
        out[np.asarray(zero_fixed, dtype=bool)] = 0.0
    return out


def prox_1d(v: float, coeff: float, L: float, spec: Optional[RegularizerSpec] = None,
            p: float = 0.95, delta: float = 1e-6) -> float:
    """``argmin_{t in [0,1]} L/2 (t - v)^2 + coeff * xi(t)``, ties toward 0."""
    if spec is not None:
        p, delta = spec.p, spec.delta
    return float(kernels.prox_penalty(np.array([v]), np.array([coeff]), L, p, delta)[0])


# ------------------------------------------------------------------ problems


class _Problem:
    """Smooth part plus an optional separable penalty ``sum coef_k xi(w_k)``.

    ``evaluate`` returns ``(total, smooth, nll)``.
    """

    penalty_coef: Optional[np.ndarray] = None

    def __init__(self, data: PreparedDataset, spec: RegularizerSpec):
        self.data = data
        self.spec = spec

    def smooth(self, w, nll):
        return nll

    def smooth_grad(self, w, g):
        return g

    def penalty(self, w):
        if self.penalty_coef is None:
            return 0.0
        return float(np.sum(self.penalty_coef * xi_delta(w, self.spec.p, self.spec.delta)))

    def penalty_grad(self, w):
        if self.penalty_coef is None:
            return 0.0
        return self.penalty_coef * xi_delta_prime(w, self.spec.p, self.spec.delta)

    def evaluate(self, w):
        nll = neg_log_likelihood(self.data, w)
        s = self.smooth(w, nll)
        return s + self.penalty(w), s, nll

    def evaluate_grad(self, w):
        nll, g = nll_and_gradient(self.data, w)
        s = self.smooth(w, nll)
        return s + self.penalty(w), s, nll, self.smooth_grad(w, g)


class _CoupledProblem(_Problem):
    """Full criterion with the weight sum inside the log (treated as smooth)."""

    def smooth(self, w, nll):
        return nll + self.spec.lam * prior_continuous(w, self.spec)

    def smooth_grad(self, w, g):
        W = float(np.sum(w))
        xi = xi_delta(w, self.spec.p, self.spec.delta)
        xi_p = xi_delta_prime(w, self.spec.p, self.spec.delta)
        grad_prior = -float(np.sum(xi)) / (W + 1.0) + self.spec.coefficients(W) * xi_p
        return g + self.spec.lam * grad_prior


class _RelaxedProblem(_Problem):
    def __init__(self, data, spec, W0):
        super().__init__(data, spec)
        self.linear = spec.lam * spec.coefficients(W0)

    def smooth(self, w, nll):
        return nll + float(np.dot(self.linear, w))

    def smooth_grad(self, w, g):
        return g + self.linear


class _SeparableProblem(_Problem):
    def __init__(self, data, spec, W_ref):
        super().__init__(data, spec)
        coef = spec.coefficients(W_ref)
        if np.any(coef <= 0.0):
            raise ValueError("penalty coefficient is not positive for this weight sum")
        self.penalty_coef = spec.lam * coef


# -------------------------------------------------------------------- steps


def _quad_ok(s_new, s_old, g, d, L):
    bound = s_old + float(np.dot(g, d)) + 0.5 * L * float(np.dot(d, d))
    return s_new <= bound + 1e-12 * max(1.0, abs(s_old))


@dataclass
class StepResult:
    w_plus: np.ndarray
    accepted: bool
    value: float
    smooth: float = math.nan
    nll: float = math.nan


def gradient_mapping_step(objective, w, L, zero_fixed=None, slack=0.0, f=None, g=None) -> StepResult:
    """Projected gradient candidate ``clip(w - grad/L)`` with the
    quadratic-upper-bound acceptance test.

    ``objective`` needs ``value(w)`` and ``value_and_grad(w)``. ``slack`` is
    the extra allowance of the universal gradient method.
    """
    if not L > 0:
        raise ValueError("L must be positive")
    w = np.asarray(w, dtype=np.float64)
    if f is None or g is None:
        f, g = objective.value_and_grad(w)
    g = np.asarray(g, dtype=np.float64)
    if not np.all(np.isfinite(g)):
        raise FloatingPointError("non-finite gradient")
    u = project_box(w - g / L, zero_fixed)
    d = u - w
    fu = float(objective.value(u))
    ok = _quad_ok(fu, f, g, d, L)
    if not ok and slack > 0:
        ok = fu <= f + float(np.dot(g, d)) + 0.5 * L * float(np.dot(d, d)) + slack
    return StepResult(u, bool(ok and fu <= f), fu)


def _propose(kind, problem, w, L, g_s, total, smooth, mask, slack):
    """One candidate for the given step kind; returns (u, accepted, total_u, smooth_u, nll_u)."""
    if kind == "composite":
        u = kernels.prox_penalty(w - g_s / L, problem.penalty_coef, L, problem.spec.p, problem.spec.delta)
        u = project_box(u, mask)
        G = g_s
    else:
        G = g_s + problem.penalty_grad(w)
        u = project_box(w - G / L, mask)
    d = u - w
    total_u, smooth_u, nll_u = problem.evaluate(u)
    if kind == "projected":
        ok = _quad_ok(total_u, total, G, d, L)
        if not ok and slack > 0:
            ok = total_u <= total + float(np.dot(G, d)) + 0.5 * L * float(np.dot(d, d)) + slack
    else:
        # composite / upper estimator: bound on the smooth part only; the
        # penalty side is exact (prox) or majorised by its tangent (concavity)
        ok = _quad_ok(smooth_u, smooth, g_s, d, L)
    return u, bool(ok and total_u <= total), total_u, smooth_u, nll_u


class _Tracer:
    def __init__(self, spec_full: RegularizerSpec, keep_iterates: bool):
        self.spec_full = spec_full
        self.rows: list[TraceRow] = []
        self.keep = keep_iterates
        self.iterates: list = []

    def full_criterion(self, w, nll):
        return nll + self.spec_full.lam * prior_continuous(w, self.spec_full)

    def record(self, stage, objective, L, disp, w, nll, mask=None):
        self.rows.append(TraceRow(len(self.rows), stage, float(objective), float(L), float(disp),
                                  float(self.full_criterion(w, nll))))
        if self.keep:
            self.iterates.append((stage, w.copy(), None if mask is None else mask.copy()))


def _descend(problem, kind, w, mask, config, tracer, stage, *, zero_fixing, slack=0.0):
    """Generic backtracking loop. Returns ``(w, mask, accepted_steps, total)``."""
    K = len(w)
    tol = config.epsilon / max(K, 1)
    L = config.L_init
    L_min = config.L_init * 2.0**-10
    w = project_box(w, mask)
    total, smooth, nll, g_s = problem.evaluate_grad(w)
    tracer.record(stage, total, L, math.nan, w, nll, mask)
    accepted = 0
    for _ in range(config.max_iters):
        for _ in range(config.max_doublings):
            u, ok, total_u, smooth_u, nll_u = _propose(kind, problem, w, L, g_s, total, smooth, mask, slack)
            if ok:
                break
            L *= 2.0
        else:
            break
        disp = float(np.max(np.abs(u - w))) if K else 0.0
        if disp == 0.0:
            break
        w, total, smooth = u, total_u, smooth_u
        if zero_fixing:
            mask = mask | (w == 0.0)
        accepted += 1
        tracer.record(stage, total, L, disp, w, nll_u, mask)
        L = max(L / 2.0, L_min)
        if disp < tol:
            break
        total, smooth, nll, g_s = problem.evaluate_grad(w)
    return w, mask, accepted, total


def _frank_wolfe(problem, w, config, tracer, stage):
    """Conditional gradient over the box with the 2/(t+2) schedule, halved
    until the objective does not increase."""
    w = project_box(w)
    total, smooth, nll, G = problem.evaluate_grad(w)
    tracer.record(stage, total, math.nan, math.nan, w, nll)
    accepted = 0
    for t in range(config.max_iters):
        s = np.where(G > 0.0, 0.0, 1.0)
        gap = float(np.dot(G, w - s))
        if gap <= config.epsilon * abs(total):
            break
        gamma = 2.0 / (t + 2.0)
        for _ in range(config.max_doublings):
            u = project_box(w + gamma * (s - w))
            total_u, _, nll_u = problem.evaluate(u)
            if total_u <= total:
                break
            gamma /= 2.0
        else:
            break
        disp = float(np.max(np.abs(u - w)))
        if disp == 0.0:
            break
        w, total = u, total_u
        accepted += 1
        tracer.record(stage, total, 1.0 / gamma, disp, w, nll_u)
        total, smooth, nll, G = problem.evaluate_grad(w)
    return w, accepted, total


def linear_minimization_oracle(grad) -> np.ndarray:
    """Box vertex minimising ``<grad, s>``: 0 where the gradient is positive, else 1."""
    return np.where(np.asarray(grad) > 0.0, 0.0, 1.0)


# ------------------------------------------------------------------- solvers


def _check_spec(spec: RegularizerSpec):
    if spec.variant != CONTINUOUS:
        raise ValueError("gradient methods optimise the continuous prior")


def _start(w_init, K):
    w = np.asarray(w_init, dtype=np.float64).copy()
    if w.shape != (K,):
        raise ValueError(f"initial point of shape {w.shape} for K={K}")
    return project_box(w)


def _make_run(method, data, spec_full, w, mask, tracer, t0, iterations, objective, W_tilde=None):
    crit = neg_log_likelihood(data, w) + spec_full.lam * prior_continuous(w, spec_full)
    return OptimizerRun(
        method=method,
        final_w=WeightVector(w, mask),
        trace=tracer.rows,
        iterations=sum(1 for r in tracer.rows if not math.isnan(r.displacement)),
        wall_time=time.perf_counter() - t0,
        objective=float(objective),
        criterion=float(crit),
        W_tilde=W_tilde,
        iterates=tracer.iterates,
    )


def solve_one_stage_sg(data, spec, config, w_init) -> OptimizerRun:
    _check_spec(spec)
    t0 = time.perf_counter()
    spec = spec.replace(W_ref=None)
    tracer = _Tracer(spec, config.keep_iterates)
    w = _start(w_init, data.K)
    mask = w == 0.0
    w, mask, n, total = _descend(_CoupledProblem(data, spec), "projected", w, mask, config, tracer, "sg1",
                                 zero_fixing=True)
    return _make_run("SG1", data, spec, w, mask, tracer, t0, n, total)


def solve_one_stage_am(data, spec, config, w_init) -> OptimizerRun:
    """Alternate between freezing the weight sum in the log coefficient and a
    composite descent on the resulting separable surrogate."""
    _check_spec(spec)
    t0 = time.perf_counter()
    spec = spec.replace(W_ref=None)
    tracer = _Tracer(spec, config.keep_iterates)
    w = _start(w_init, data.K)
    mask = w == 0.0
    steps = 0
    total = math.nan
    for outer in range(config.max_outer):
        W_bar = float(np.sum(w))
        problem = _SeparableProblem(data, spec, W_bar)
        w, mask, n, total = _descend(problem, "composite", w, mask, config, tracer, f"am{outer}",
                                     zero_fixing=True)
        steps += n
        if abs(float(np.sum(w)) - W_bar) < config.epsilon:
            break
    return _make_run("AM", data, spec, w, mask, tracer, t0, steps, total)


def resolve_W0(policy, w_init) -> float:
    if isinstance(policy, str):
        if policy != "init_sum":
            raise ValueError(f"unknown W0 policy {policy!r}")
        return float(np.sum(w_init))
    return float(policy)


def solve_first_stage(data, spec, config, w_init, method: str = "SG", tracer=None):
    """Approximate minimiser of the convex relaxation.

    Returns ``(w_tilde, W_tilde)``; the trace goes to ``tracer`` when given.
    """
    _check_spec(spec)
    method = method.upper()
    w = _start(w_init, data.K)
    W0 = resolve_W0(config.W0_policy, w)
    relaxed = spec.replace(variant=CONVEX_RELAXED, W_ref=W0)
    problem = _RelaxedProblem(data, relaxed, W0)
    tracer = tracer or _Tracer(spec.replace(W_ref=None), config.keep_iterates)
    no_mask = np.zeros(data.K, dtype=bool)
    stage = f"first:{method}"
    if method == "SG":
        w, _, _, _ = _descend(problem, "projected", w, no_mask, config, tracer, stage, zero_fixing=False)
    elif method == "UG":
        w, _, _, _ = _descend(problem, "projected", w, no_mask, config, tracer, stage, zero_fixing=False,
                              slack=0.5 * config.epsilon)
    elif method == "CG":
        w, _, _ = _frank_wolfe(problem, w, config, tracer, stage)
    else:
        raise ValueError(f"unknown first-stage method {method!r}")
    return w, float(np.sum(w))


def solve_second_stage(data, spec, config, w_tilde, method: str = "CF", tracer=None, t0=None,
                       label: Optional[str] = None) -> OptimizerRun:
    """Local descent on the non-convex objective with the weight sum frozen
    at ``spec.W_ref`` (defaults to the sum of ``w_tilde``)."""
    t0 = time.perf_counter() if t0 is None else t0
    method = method.upper()
    w = _start(w_tilde, data.K)
    W_ref = float(np.sum(w)) if spec.W_ref is None else spec.W_ref
    spec_full = spec.replace(W_ref=None)
    tracer = tracer or _Tracer(spec_full, config.keep_iterates)
    problem = _SeparableProblem(data, spec.replace(W_ref=W_ref), W_ref)
    kind = {"CF": "composite", "UE": "upper"}.get(method)
    if kind is None:
        raise ValueError(f"unknown second-stage method {method!r}")
    mask = w == 0.0
    w, mask, n, total = _descend(problem, kind, w, mask, config, tracer, f"second:{method}", zero_fixing=True)
    return _make_run(label or method, data, spec_full, w, mask, tracer, t0, n, total, W_tilde=W_ref)


def solve(data: PreparedDataset, spec: RegularizerSpec, config: OptimizerConfig, w_init=None) -> OptimizerRun:
    """Dispatch on ``config.method``; ``w_init`` defaults to 0.5 everywhere."""
    if w_init is None:
        w_init = np.full(data.K, 0.5)
    method = normalize_method(config.method)
    if method == "SG1":
        return solve_one_stage_sg(data, spec, config, w_init)
    if method == "AM":
        return solve_one_stage_am(data, spec, config, w_init)
    first, second = method.split(".")
    t0 = time.perf_counter()
    tracer = _Tracer(spec.replace(W_ref=None), config.keep_iterates)
    w_tilde, W_tilde = solve_first_stage(data, spec, config, w_init, first, tracer=tracer)
    return solve_second_stage(data, spec.replace(W_ref=W_tilde), config, w_tilde, second,
                              tracer=tracer, t0=t0, label=method)


class CriterionObjective:
    """Adapter exposing a criterion through ``value`` / ``value_and_grad``."""

    def __init__(self, data: PreparedDataset, spec: RegularizerSpec):
        self._value = lambda w: criterion(data, w, spec).total
        self._value_and_grad = lambda w: criterion_gradient(data, w, spec)

    def value(self, w):
        return self._value(w)

    def value_and_grad(self, w):
        return self._value_and_grad(w)
