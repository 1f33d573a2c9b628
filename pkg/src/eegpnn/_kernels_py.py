"""Numpy implementations of the compiled kernels (import-time fallback)."""
import numpy as np
from scipy.special import logsumexp

BACKEND = "numpy"

# Upper bound on elements of the (block, Q, R) difference tensor.
_BLOCK_ELEMENTS = 1 << 22


def higuchi_lengths(x, k_max):
    x = np.ascontiguousarray(x, dtype=np.float64)
    n = x.shape[1]
    out = np.empty((x.shape[0], k_max))
    for k in range(1, k_max + 1):
        total = np.zeros(x.shape[0])
        for m in range(1, k + 1):
            sub = x[:, m - 1::k]
            n_m = sub.shape[1] - 1
            acc = np.abs(np.diff(sub, axis=1)).sum(axis=1)
            total += acc * ((n - 1) / (n_m * k)) / k
        out[:, k - 1] = total / k
    return out


def sign_changes(x):
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.shape[1] < 3:
        return np.zeros(x.shape[0], dtype=np.int64)
    d = np.diff(x, axis=1)
    return np.count_nonzero(d[:, :-1] * d[:, 1:] < 0, axis=1).astype(np.int64)


def log_class_scores(probes, exemplars, weights, labels, n_classes, gamma, exclude):
    probes = np.asarray(probes, dtype=np.float64)
    exemplars = np.asarray(exemplars, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    labels = np.asarray(labels)
    exclude = np.asarray(exclude)
    n_probes, r_dim = probes.shape
    q = exemplars.shape[0]
    out = np.full((n_probes, n_classes), -np.inf)
    members = [np.flatnonzero(labels == c) for c in range(n_classes)]
    block = max(1, _BLOCK_ELEMENTS // max(1, q * r_dim))
    for lo in range(0, n_probes, block):
        hi = min(n_probes, lo + block)
        diff = exemplars[np.newaxis, :, :] - probes[lo:hi, np.newaxis, :]
        d2 = np.einsum("bqr,br->bq", diff * diff, weights[lo:hi])
        v = -gamma * d2
        rows = np.flatnonzero(exclude[lo:hi] >= 0)
        v[rows, exclude[lo:hi][rows]] = -np.inf
        for c, idx in enumerate(members):
            if idx.size == 0:
                continue
            with np.errstate(divide="ignore"):
                out[lo:hi, c] = logsumexp(v[:, idx], axis=1)
    return out
