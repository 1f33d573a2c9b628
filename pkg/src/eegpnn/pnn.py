"""Probabilistic Neural Network: radial basis layer plus competitive layer.

Training is a single pass: every (normalized) training vector becomes one
row of the weight matrix ``W`` and one one-hot column of the class matrix
``M``. For a probe ``p`` the radial basis layer produces::

    a_i = exp(-(b * ||W_i - p||)**2),    b = sqrt(ln 2) / spread

so each basis function is 0.5 at distance ``spread``. The competitive layer
picks the class with the largest ``d = M @ a``.

Class scores are summed in the log domain for the decision. With a small
spread every ``a_i`` of a distant probe underflows to 0 in floating point,
while the log-domain sums still rank the classes exactly as the real-valued
sums would. In the ``spread -> 0`` limit this becomes the nearest-neighbour rule.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels
from .errors import InputError
from .features import FeatureVector, Normalizer, as_matrix

DEFAULT_SPREAD = 0.1


def bias_for_spread(spread: float) -> float:
    """Radial basis bias that puts the 0.5 crossing at distance ``spread``."""
    return math.sqrt(math.log(2.0)) / spread


def _identity_normalizer(dim: int) -> Normalizer:
    return Normalizer(np.zeros(dim), np.ones(dim))


def _fit_stats(mat: np.ndarray) -> Normalizer:
    mean = mat.mean(axis=0)
    std = mat.std(axis=0)
    std[np.ptp(mat, axis=0) == 0] = 0.0
    return Normalizer(mean, std)


@dataclass(frozen=True)
class Classification:
    label: str
    class_index: int
    activations: np.ndarray
    class_scores: np.ndarray
    log_scores: np.ndarray


@dataclass(frozen=True, eq=False)
class PnnModel:
    """Trained network. Treat as immutable; updates return new models.

    Attributes
    ----------
    W : ndarray, shape (Q, R)
        Normalized training vectors, one per row.
    exemplars : ndarray, shape (Q, R)
        The same vectors before normalization (needed to refit on update).
    targets : ndarray of int, shape (Q,)
        Class index of each row of ``W``.
    class_names : tuple of str
        Sorted class labels; index order is the tie-break order.
    spread : float
    normalizer : Normalizer
    normalize : bool
        Whether ``normalizer`` was fitted (False means identity).
    config_id : str
        Fingerprint of the extraction configuration that produced the vectors.
    """

    W: np.ndarray
    exemplars: np.ndarray
    targets: np.ndarray
    class_names: tuple
    spread: float
    normalizer: Normalizer
    normalize: bool = True
    config_id: str = ""

    def __post_init__(self):
        for name in ("W", "exemplars", "targets"):
            arr = np.array(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_exemplars(self) -> int:
        return self.W.shape[0]

    @property
    def dim(self) -> int:
        return self.W.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    @property
    def bias(self) -> np.ndarray:
        return np.full(self.n_exemplars, bias_for_spread(self.spread))

    @property
    def M(self) -> np.ndarray:
        m = np.zeros((self.n_classes, self.n_exemplars))
        m[self.targets, np.arange(self.n_exemplars)] = 1.0
        return m

    def labels(self) -> list:
        return [self.class_names[t] for t in self.targets]

    def __eq__(self, other):
        if not isinstance(other, PnnModel):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    __hash__ = None

    # -- persistence -----------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "kind": "pnn",
            "format_version": 1,
            "spread": float(self.spread),
            "class_names": list(self.class_names),
            "targets": [int(t) for t in self.targets],
            "W": self.W.tolist(),
            "exemplars": self.exemplars.tolist(),
            "normalize": bool(self.normalize),
            "normalizer": {"mean": self.normalizer.mean.tolist(),
                           "std": self.normalizer.std.tolist()},
            "config_id": self.config_id,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PnnModel":
        if d.get("kind") != "pnn":
            raise InputError("document is not a serialized PNN model")
        dim = len(d["normalizer"]["mean"])
        return cls(
            W=np.array(d["W"], dtype=np.float64).reshape(-1, dim),
            exemplars=np.array(d["exemplars"], dtype=np.float64).reshape(-1, dim),
            targets=np.array(d["targets"], dtype=np.int64),
            class_names=tuple(d["class_names"]),
            spread=float(d["spread"]),
            normalizer=Normalizer(d["normalizer"]["mean"], d["normalizer"]["std"]),
            normalize=bool(d["normalize"]),
            config_id=d.get("config_id", ""),
        )


def _label_str(label) -> str:
    return str(label.value) if hasattr(label, "value") else str(label)


def train(vectors, labels, spread: float = DEFAULT_SPREAD, *, class_names=None,
          normalize: bool = True, config_id: str | None = None) -> PnnModel:
    """Build a PNN from training vectors in one pass.

    Parameters
    ----------
    vectors : sequence of FeatureVector or array, shape (Q, R)
    labels : sequence of class labels, length Q
    spread : float
        Width of the radial basis functions.
    class_names : iterable, optional
        Full class set. Defaults to the labels present. Always sorted.
    normalize : bool
        Fit a z-score normalizer on ``vectors`` (otherwise identity).
    """
    if not spread > 0 or not math.isfinite(spread):
        raise InputError(f"spread must be positive, got {spread}")
    mat = as_matrix(vectors)
    labels = [_label_str(lab) for lab in labels]
    if mat.shape[0] == 0:
        raise InputError("training set is empty")
    if mat.shape[0] != len(labels):
        raise InputError(f"{mat.shape[0]} vectors but {len(labels)} labels")
    if mat.shape[1] < 1:
        raise InputError("feature vectors must have at least one dimension")
    if not np.all(np.isfinite(mat)):
        raise InputError("training vectors contain non-finite values")
    names = set(labels) if class_names is None else {_label_str(c) for c in class_names}
    missing = set(labels) - names
    if missing:
        raise InputError(f"labels {sorted(missing)} are not among class_names")
    names = tuple(sorted(names))
    if len(names) < 2:
        raise InputError("a PNN needs at least two classes")
    if config_id is None:
        ids = {v.config_id for v in vectors if isinstance(v, FeatureVector)}
        config_id = ids.pop() if len(ids) == 1 else ""
    normalizer = _fit_stats(mat) if normalize else _identity_normalizer(mat.shape[1])
    index = {name: i for i, name in enumerate(names)}
    return PnnModel(
        W=normalizer.transform(mat),
        exemplars=mat.copy(),
        targets=np.array([index[lab] for lab in labels], dtype=np.int64),
        class_names=names,
        spread=float(spread),
        normalizer=normalizer,
        normalize=normalize,
        config_id=config_id,
    )


def _probe_matrix(model: PnnModel, vectors) -> np.ndarray:
    mat = as_matrix(vectors)
    if mat.shape[1] != model.dim:
        raise InputError(f"vector dimension {mat.shape[1]} != model dimension {model.dim}")
    return model.normalizer.transform(mat)


def log_class_scores(model: PnnModel, vectors) -> np.ndarray:
    """``log(M @ a)`` per probe row, computed without underflow."""
    probes = _probe_matrix(model, vectors)
    gamma = bias_for_spread(model.spread) ** 2
    return kernels.log_class_scores(probes, model.W, np.ones_like(probes),
                                    model.targets, model.n_classes, gamma)


def decide(log_scores: np.ndarray) -> np.ndarray:
    """Competitive layer: index of the largest score, lowest index on ties."""
    return np.argmax(np.atleast_2d(log_scores), axis=1)


def classify(model: PnnModel, vector) -> Classification:
    """Classify one feature vector."""
    p = _probe_matrix(model, np.atleast_2d(np.asarray(vector, dtype=np.float64)))
    if p.shape[0] != 1:
        raise InputError("classify expects a single vector; use classify_many")
    dist = np.sqrt(np.sum((model.W - p[0]) ** 2, axis=1))
    n = dist * model.bias
    a = np.exp(-n * n)
    d = model.M @ a
    logs = kernels.log_class_scores(p, model.W, np.ones_like(p), model.targets,
                                    model.n_classes, bias_for_spread(model.spread) ** 2)[0]
    idx = int(decide(logs)[0])
    return Classification(model.class_names[idx], idx, a, d, logs)


def classify_many(model: PnnModel, vectors) -> list:
    """Labels for each row of ``vectors``."""
    idx = decide(log_class_scores(model, vectors))
    return [model.class_names[i] for i in idx]


def add_exemplar(model: PnnModel, vector, label) -> PnnModel:
    """Return a model with one more exemplar; ``model`` is left unchanged.

    The normalizer is refitted on the extended exemplar set, so the result is
    identical to training from scratch on the extended data.
    """
    v = np.asarray(vector, dtype=np.float64).reshape(-1)
    if v.shape[0] != model.dim:
        raise InputError(f"vector dimension {v.shape[0]} != model dimension {model.dim}")
    label = _label_str(label)
    names = set(model.class_names) | {label}
    return train(np.vstack([model.exemplars, v]), model.labels() + [label],
                 model.spread, class_names=names, normalize=model.normalize,
                 config_id=model.config_id)


def save_model(model: PnnModel, path) -> None:
    Path(path).write_text(json.dumps(model.to_dict(), sort_keys=True) + "\n")


def load_model(path) -> PnnModel:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read model {path}: {exc}") from exc
    return PnnModel.from_dict(doc)
