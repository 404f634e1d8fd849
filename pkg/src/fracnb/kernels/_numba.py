"""numba-compiled kernels, same signatures as :mod:`fracnb.kernels._numpy`."""

import math

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def compute_scores(cond, log_prior, w):
    K, N, J = cond.shape
    s = np.empty((N, J))
    for n in range(N):
        for j in range(J):
            s[n, j] = log_prior[j]
    flat = s.reshape(N * J)
    for k in range(K):
        wk = w[k]
        if wk == 0.0:
            continue
        ck = cond[k].reshape(N * J)  # flat views vectorize; needs C-contiguous cond
        for i in range(N * J):
            flat[i] += wk * ck[i]
    return s


@njit(cache=True, nogil=True)
def nll_from_scores(scores, y):
    N, J = scores.shape
    total = 0.0
    for n in range(N):
        m = scores[n, 0]
        for j in range(1, J):
            if scores[n, j] > m:
                m = scores[n, j]
        acc = 0.0
        for j in range(J):
            acc += math.exp(scores[n, j] - m)
        total += m + math.log(acc) - scores[n, y[n]]
    return total


@njit(cache=True, nogil=True)
def softmax_rows(scores):
    N, J = scores.shape
    out = np.empty((N, J))
    for n in range(N):
        m = scores[n, 0]
        for j in range(1, J):
            if scores[n, j] > m:
                m = scores[n, j]
        acc = 0.0
        for j in range(J):
            e = math.exp(scores[n, j] - m)
            out[n, j] = e
            acc += e
        for j in range(J):
            out[n, j] /= acc
    return out


@njit(cache=True, nogil=True)
def nll_gradient(cond, scores, y):
    K, N, J = cond.shape
    pi = softmax_rows(scores)
    g = np.zeros(K)
    for k in range(K):
        acc = 0.0
        for n in range(N):
            row = 0.0
            for j in range(J):
                row += pi[n, j] * cond[k, n, j]
            acc += row - cond[k, n, y[n]]
        g[k] = acc
    return g


@njit(cache=True, nogil=True)
def trial_nll(scores, cond_k, delta, y):
    N, J = scores.shape
    total = 0.0
    for n in range(N):
        m = -np.inf
        for j in range(J):
            s = scores[n, j] + delta * cond_k[n, j]
            if s > m:
                m = s
        acc = 0.0
        for j in range(J):
            acc += math.exp(scores[n, j] + delta * cond_k[n, j] - m)
        total += m + math.log(acc) - (scores[n, y[n]] + delta * cond_k[n, y[n]])
    return total


@njit(cache=True, nogil=True)
def add_scaled(scores, cond_k, delta):
    N, J = scores.shape
    for n in range(N):
        for j in range(J):
            scores[n, j] += delta * cond_k[n, j]


@njit(cache=True, nogil=True)
def _xi(t, p, delta, c0, norm, slope0):
    if t < delta:
        return slope0 * t
    return (t**p - c0) / norm


@njit(cache=True, nogil=True)
def _prox_scalar(v, c, L, p, delta):
    if c == 0.0:
        return min(max(v, 0.0), 1.0)
    c0 = delta**p * (1.0 - p)
    norm = 1.0 - c0
    slope0 = p * delta ** (p - 1.0) / norm
    a = c * p / norm
    if p < 1.0:
        lo = max(delta, (a * (1.0 - p) / L) ** (1.0 / (2.0 - p)))
    else:
        lo = delta
    lo = min(lo, 1.0)
    d_lo = L * (lo - v) + a * lo ** (p - 1.0)
    d_hi = L * (1.0 - v) + a
    if d_lo >= 0.0:
        root = lo
    elif d_hi <= 0.0:
        root = 1.0
    else:
        left = lo
        right = 1.0
        for _ in range(100):
            if right - left <= 1e-12:
                break
            mid = 0.5 * (left + right)
            if L * (mid - v) + a * mid ** (p - 1.0) < 0.0:
                left = mid
            else:
                right = mid
        root = 0.5 * (left + right)

    cands = np.empty(5)
    cands[0] = 0.0
    cands[1] = min(max(v - c * slope0 / L, 0.0), delta)
    cands[2] = delta
    cands[3] = root
    cands[4] = 1.0
    cands.sort()
    best_t = cands[0]
    best_h = 0.5 * L * (best_t - v) ** 2 + c * _xi(best_t, p, delta, c0, norm, slope0)
    for i in range(1, 5):
        t = cands[i]
        h = 0.5 * L * (t - v) ** 2 + c * _xi(t, p, delta, c0, norm, slope0)
        if h < best_h:
            best_h = h
            best_t = t
    return best_t


@njit(cache=True, nogil=True)
def prox_penalty(v, coeff, L, p, delta):
    out = np.empty(v.shape[0])
    for i in range(v.shape[0]):
        out[i] = _prox_scalar(v[i], coeff[i], L, p, delta)
    return out
