"""Pure-numpy kernels. Reference path and fallback when numba is disabled."""

import numpy as np


def compute_scores(cond, log_prior, w):
    """Per-instance class scores ``log P(C_j) + sum_k w_k log p(x_k|C_j)``."""
    return log_prior[None, :] + np.tensordot(w, cond, axes=1)


def _row_logsumexp(scores):
    m = scores.max(axis=1)
    return m + np.log(np.exp(scores - m[:, None]).sum(axis=1))


def nll_from_scores(scores, y):
    n = np.arange(scores.shape[0])
    return float(np.sum(_row_logsumexp(scores) - scores[n, y]))


def softmax_rows(scores):
    z = scores - scores.max(axis=1)[:, None]
    e = np.exp(z)
    return e / e.sum(axis=1)[:, None]


def nll_gradient(cond, scores, y):
    pi = softmax_rows(scores)
    n = np.arange(scores.shape[0])
    expected = np.einsum("knj,nj->k", cond, pi)
    observed = cond[:, n, y].sum(axis=1)
    return expected - observed


def trial_nll(scores, cond_k, delta, y):
    return nll_from_scores(scores + delta * cond_k, y)


def add_scaled(scores, cond_k, delta):
    scores += delta * cond_k


def prox_penalty(v, coeff, L, p, delta):
    """Vectorised argmin over [0, 1] of ``L/2 (t - v)^2 + coeff * xi(t)``.

    ``xi`` is the smoothed, renormalised ``t**p`` penalty. Candidates are
    compared explicitly; exact ties go to the smaller ``t``.
    """
    v = np.asarray(v, dtype=float)
    coeff = np.broadcast_to(np.asarray(coeff, dtype=float), v.shape)
    c0 = delta**p * (1.0 - p)
    norm = 1.0 - c0
    slope0 = p * delta ** (p - 1.0) / norm

    def xi(t):
        return np.where(t < delta, slope0 * t, (t**p - c0) / norm)

    def h(t):
        return 0.5 * L * (t - v) ** 2 + coeff * xi(t)

    a = coeff * p / norm
    if p < 1.0:
        t_c = (a * (1.0 - p) / L) ** (1.0 / (2.0 - p))
        lo = np.maximum(delta, t_c)
    else:
        lo = np.full(v.shape, delta)
    lo = np.minimum(lo, 1.0)

    def dh(t):
        return L * (t - v) + a * t ** (p - 1.0)

    d_lo = dh(lo)
    d_hi = dh(np.ones_like(v))
    left = lo.copy()
    right = np.ones_like(v)
    active = (d_lo < 0.0) & (d_hi > 0.0)
    for _ in range(100):
        if not active.any() or np.max(right - left) <= 1e-12:
            break
        mid = 0.5 * (left + right)
        neg = dh(mid) < 0.0
        left = np.where(neg, mid, left)
        right = np.where(neg, right, mid)
    root = np.where(active, 0.5 * (left + right), np.where(d_lo >= 0.0, lo, 1.0))

    cands = np.stack(
        [
            np.zeros_like(v),
            np.clip(v - coeff * slope0 / L, 0.0, delta),
            np.full(v.shape, delta),
            root,
            np.ones_like(v),
        ]
    )
    # ascending order so argmin's first-hit rule breaks ties toward 0
    order = np.argsort(cands, axis=0, kind="stable")
    cands = np.take_along_axis(cands, order, axis=0)
    vals = h(cands)
    best = np.argmin(vals, axis=0)
    out = np.take_along_axis(cands, best[None, :], axis=0)[0]
    return np.where(coeff == 0.0, np.clip(v, 0.0, 1.0), out)
