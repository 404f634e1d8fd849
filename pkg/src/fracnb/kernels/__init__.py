"""Hot numeric kernels with a numba path and a pure-numpy fallback.

The backend is chosen once at import time. Set ``FRACNB_NUMBA=0`` to force
the numpy path; it is also used automatically when numba cannot be imported.
Both modules expose the same functions:

``compute_scores(cond, log_prior, w)``
    class scores of shape ``(N, J)``
``nll_from_scores(scores, y)``
    negative log-likelihood, max-shifted log-sum-exp
``nll_gradient(cond, scores, y)``
    gradient of the negative log-likelihood w.r.t. the weights
``trial_nll(scores, cond_k, delta, y)``
    likelihood after moving one weight by ``delta``, without committing
``add_scaled(scores, cond_k, delta)``
    commit such a move in place
``prox_penalty(v, coeff, L, p, delta)``
    coordinate-wise proximal step for the smoothed power penalty
"""

import os

import numpy as np

from . import _numpy as numpy_backend

_NAMES = (
    "compute_scores",
    "nll_from_scores",
    "nll_gradient",
    "trial_nll",
    "add_scaled",
    "prox_penalty",
    "softmax_rows",
)


def _numba_requested():
    return os.environ.get("FRACNB_NUMBA", "1").strip().lower() not in ("0", "false", "no", "off")


numba_backend = None
if _numba_requested():
    try:
        from . import _numba as numba_backend
    except ImportError:  # pragma: no cover - numba is an optional accelerator
        numba_backend = None

backend = numba_backend if numba_backend is not None else numpy_backend
BACKEND_NAME = "numba" if backend is numba_backend else "numpy"

nll_from_scores = backend.nll_from_scores
nll_gradient = backend.nll_gradient
trial_nll = backend.trial_nll
add_scaled = backend.add_scaled
softmax_rows = backend.softmax_rows


def compute_scores(cond, log_prior, w):
    return backend.compute_scores(np.ascontiguousarray(cond, dtype=np.float64),
                                  np.asarray(log_prior, dtype=np.float64),
                                  np.asarray(w, dtype=np.float64))


def prox_penalty(v, coeff, L, p, delta):
    v = np.ascontiguousarray(v, dtype=np.float64)
    coeff = np.ascontiguousarray(np.broadcast_to(np.asarray(coeff, dtype=np.float64), v.shape))
    return backend.prox_penalty(v, coeff, float(L), float(p), float(delta))


__all__ = ["BACKEND_NAME", "backend", "numba_backend", "numpy_backend", *_NAMES]
