"""Backend selection for the hot loops.

The compiled extension is used when it imports; set ``EEGPNN_PURE_PYTHON=1``
to force the numpy fallback. Both expose the same three functions:

higuchi_lengths(x, k_max)
    Mean Higuchi curve length ``L(k)`` for ``k = 1..k_max``, one row per
    input row of ``x`` (shape ``(n, N)``).
sign_changes(x)
    Number of sign flips of the first difference, per row.
log_class_scores(probes, exemplars, weights, labels, n_classes, gamma, exclude)
    ``log(sum_j exp(-gamma * sum_r w_pr (e_jr - p_r)**2))`` over exemplars of
    each class, skipping exemplar ``exclude[p]`` for probe ``p``.
"""
import os

import numpy as np

from . import _kernels_py as fallback

if os.environ.get("EEGPNN_PURE_PYTHON"):
    _impl = fallback
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        _impl = fallback

BACKEND = _impl.BACKEND


def _rows(x):
    return np.ascontiguousarray(np.atleast_2d(x), dtype=np.float64)


def higuchi_lengths(x, k_max, impl=None):
    return (impl or _impl).higuchi_lengths(_rows(x), int(k_max))


def sign_changes(x, impl=None):
    return (impl or _impl).sign_changes(_rows(x))


def log_class_scores(probes, exemplars, weights, labels, n_classes, gamma,
                     exclude=None, impl=None):
    probes = _rows(probes)
    if exclude is None:
        exclude = np.full(probes.shape[0], -1, dtype=np.int64)
    return (impl or _impl).log_class_scores(
        probes, _rows(exemplars), _rows(weights),
        np.ascontiguousarray(labels, dtype=np.int64), int(n_classes),
        float(gamma), np.ascontiguousarray(exclude, dtype=np.int64),
    )


def compiled():
    """The compiled module, or None when it is not built."""
    try:
        from . import _kernels
    except ImportError:
        return None
    return _kernels
