"""Leave-one-out evaluation of per-channel PNNs and the voted ensemble.

The fast LOOCV path never rebuilds a network. A PNN's training is just
"stack the normalized vectors", and the z-score of fold ``i`` only changes
the per-dimension scale, since the mean cancels in ``W_j - p``. So every fold
is evaluated against the full exemplar matrix with exemplar ``i`` masked out
and a per-fold diagonal metric ``1 / var_i``. The result matches naive
per-fold retraining (``method="naive"``), which is kept as the reference.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .ensemble import TiePolicy, decide_tally
from .errors import EvaluationError, InputError, EegPnnError
from .features import ExtractionConfig, as_matrix, extract_matrix
from .pnn import DEFAULT_SPREAD, bias_for_spread, classify_many, train
from .signal import Label, frame_matrix, low_pass_filter

POSITIVE = Label.EPILEPTIC.value


# --------------------------------------------------------------------------
# Feature selections
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class FeatureSelection:
    include_rir: bool = True
    include_fds: bool = True
    include_hjorth: bool = True

    def __post_init__(self):
        if not (self.include_rir or self.include_fds or self.include_hjorth):
            raise InputError("a feature selection needs at least one feature family")

    @property
    def name(self) -> str:
        parts = [n for n, on in (("rir", self.include_rir), ("fd", self.include_fds),
                                 ("hjorth", self.include_hjorth)) if on]
        return "all" if len(parts) == 3 else "+".join(parts)

    @property
    def title(self) -> str:
        parts = [n for n, on in (("RIRs", self.include_rir), ("FDs", self.include_fds),
                                 ("Hjorth's", self.include_hjorth)) if on]
        return " & ".join(parts)

    def columns(self, n_rir: int) -> np.ndarray:
        """Indices of the selected entries of a ``K + 4`` feature vector."""
        cols = []
        if self.include_rir:
            cols.extend(range(n_rir))
        if self.include_fds:
            cols.extend([n_rir, n_rir + 1])
        if self.include_hjorth:
            cols.extend([n_rir + 2, n_rir + 3])
        return np.array(cols, dtype=np.int64)

    def dim(self, n_rir: int) -> int:
        return len(self.columns(n_rir))

    @classmethod
    def parse(cls, text: str) -> "FeatureSelection":
        """``all`` or a ``+``/``,``-joined subset of ``rir``, ``fd``, ``hjorth``."""
        text = str(text).strip().lower()
        if text == "all":
            return cls()
        aliases = {"rir": "rir", "rirs": "rir", "fd": "fd", "fds": "fd",
                   "hjorth": "hjorth"}
        picked = set()
        for token in text.replace(",", "+").split("+"):
            if token.strip() not in aliases:
                raise InputError(f"unknown feature family {token!r}")
            picked.add(aliases[token.strip()])
        return cls("rir" in picked, "fd" in picked, "hjorth" in picked)


ALL_FEATURES = FeatureSelection()

# Column order of the single-channel accuracy table.
STUDY_SELECTIONS = (
    FeatureSelection(True, True, True),
    FeatureSelection(False, True, True),
    FeatureSelection(False, True, False),
    FeatureSelection(True, False, False),
    FeatureSelection(False, False, True),
    FeatureSelection(True, True, False),
    FeatureSelection(True, False, True),
)


# --------------------------------------------------------------------------
# Confusion counts
# --------------------------------------------------------------------------

def _ratio(num: int, den: int) -> float:
    return num / den if den else math.nan


@dataclass(frozen=True)
class Confusion:
    tp: int = 0
    fn: int = 0
    tn: int = 0
    fp: int = 0

    @classmethod
    def from_predictions(cls, truth, predicted, positive_class) -> "Confusion":
        positive = str(positive_class)
        tp = fn = tn = fp = 0
        for t, p in zip(truth, predicted):
            if t == positive:
                if p == positive:
                    tp += 1
                else:
                    fn += 1
            elif p == positive:
                fp += 1
            else:
                tn += 1
        return cls(tp, fn, tn, fp)

    @property
    def total(self) -> int:
        return self.tp + self.fn + self.tn + self.fp

    @property
    def accuracy(self) -> float:
        return _ratio(self.tp + self.tn, self.total)

    @property
    def sensitivity(self) -> float:
        return _ratio(self.tp, self.tp + self.fn)

    @property
    def specificity(self) -> float:
        return _ratio(self.tn, self.tn + self.fp)

    true_positive_rate = sensitivity

    @property
    def false_positive_rate(self) -> float:
        return _ratio(self.fp, self.fp + self.tn)

    def to_dict(self) -> dict:
        return {"tp": self.tp, "fn": self.fn, "tn": self.tn, "fp": self.fp}


# --------------------------------------------------------------------------
# Single-channel LOOCV
# --------------------------------------------------------------------------

def _encode(labels):
    labels = [str(getattr(lab, "value", lab)) for lab in labels]
    names = tuple(sorted(set(labels)))
    index = {n: i for i, n in enumerate(names)}
    return labels, names, np.array([index[lab] for lab in labels], dtype=np.int64)


def fold_inverse_variances(x: np.ndarray) -> np.ndarray:
    """``1 / var`` of every column over all rows but ``i``, for each ``i``.

    Columns that are constant once row ``i`` is dropped get weight 0, which
    matches :class:`~eegpnn.features.Normalizer` mapping them to 0.
    """
    q, r = x.shape
    centered = x - x.mean(axis=0)
    ss = np.sum(centered * centered, axis=0)
    mu = -centered / (q - 1)
    var = (ss - centered * centered) / (q - 1) - mu * mu

    constant = np.zeros((q, r), dtype=bool)
    for col in range(r):
        values, inverse, counts = np.unique(x[:, col], return_inverse=True, return_counts=True)
        if len(values) == 1:
            constant[:, col] = True
        elif len(values) == 2 and counts.min() == 1:
            constant[:, col] = counts[inverse.reshape(-1)] == 1

    # Downdating loses precision when one row carries most of the spread;
    # recompute those entries directly.
    scale = np.where(ss > 0, ss / q, 1.0)
    risky = (~constant) & (var < 1e-6 * scale)
    for i, col in zip(*np.nonzero(risky)):
        var[i, col] = np.delete(x[:, col], i).var()

    with np.errstate(divide="ignore"):
        inv = np.where(constant, 0.0, 1.0 / np.where(constant, 1.0, var))
    return inv


def loo_log_scores(x: np.ndarray, targets: np.ndarray, n_classes: int,
                   spread: float, normalize: bool = True) -> np.ndarray:
    """Per-fold class log-scores, one row per held-out sample."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    weights = fold_inverse_variances(x) if normalize else np.ones_like(x)
    gamma = bias_for_spread(spread) ** 2
    return kernels.log_class_scores(x, x, weights, targets, n_classes, gamma,
                                    np.arange(x.shape[0]))


def fold_model(vectors, labels, held_out: int, spread: float = DEFAULT_SPREAD, *,
               normalize: bool = True):
    """The PNN that fold ``held_out`` trains: every sample except that one."""
    x = as_matrix(vectors)
    labels, names, _ = _encode(labels)
    keep = np.arange(x.shape[0]) != held_out
    return train(x[keep], [labels[j] for j in np.flatnonzero(keep)], spread,
                 class_names=names, normalize=normalize)


def loo_predictions(vectors, labels, spread: float = DEFAULT_SPREAD, *,
                    method: str = "masked", normalize: bool = True) -> list:
    """Predicted label of every sample when it is held out."""
    x = as_matrix(vectors)
    labels, names, targets = _encode(labels)
    if x.shape[0] != len(labels):
        raise InputError(f"{x.shape[0]} vectors but {len(labels)} labels")
    if x.shape[0] < 2:
        raise EvaluationError("LOOCV needs at least 2 samples")
    if len(names) < 2:
        raise EvaluationError("LOOCV needs at least two classes; accuracy is undefined")
    if method == "masked":
        scores = loo_log_scores(x, targets, len(names), spread, normalize)
        return [names[i] for i in np.argmax(scores, axis=1)]
    if method == "naive":
        return [classify_many(fold_model(x, labels, i, spread, normalize=normalize),
                              x[i:i + 1])[0]
                for i in range(x.shape[0])]
    raise InputError(f"unknown LOOCV method {method!r}")


@dataclass(frozen=True)
class ChannelResult:
    accuracy: float
    confusion: Confusion
    predictions: list
    labels: list


def loocv_channel(vectors, labels, spread: float = DEFAULT_SPREAD, *,
                  positive_class=POSITIVE, method: str = "masked",
                  normalize: bool = True) -> ChannelResult:
    """Leave-one-out accuracy of a single-channel PNN."""
    labels = [str(getattr(lab, "value", lab)) for lab in labels]
    predicted = loo_predictions(vectors, labels, spread, method=method, normalize=normalize)
    correct = sum(p == t for p, t in zip(predicted, labels))
    return ChannelResult(correct / len(labels),
                         Confusion.from_predictions(labels, predicted, positive_class),
                         predicted, labels)


# --------------------------------------------------------------------------
# Voted LOOCV
# --------------------------------------------------------------------------

def _nan_to_none(v):
    return None if isinstance(v, float) and math.isnan(v) else v


@dataclass
class EvalReport:
    """Outcome of one voted LOOCV run."""

    channels: list
    per_channel_accuracy: dict
    per_channel_confusion: dict
    confusion: Confusion
    class_counts: dict
    spread: float
    tie_policy: str
    positive_class: str = POSITIVE
    selection: str = "all"
    feature_dim: int = 0
    config: dict | None = None
    config_fingerprint: str | None = None
    predictions: list = field(default_factory=list)

    @property
    def n_frames(self) -> int:
        return self.confusion.total

    @property
    def voted_accuracy(self) -> float:
        return self.confusion.accuracy

    @property
    def sensitivity(self) -> float:
        return self.confusion.sensitivity

    @property
    def specificity(self) -> float:
        return self.confusion.specificity

    @property
    def true_positive_rate(self) -> float:
        return self.confusion.true_positive_rate

    @property
    def false_positive_rate(self) -> float:
        return self.confusion.false_positive_rate

    @property
    def mean_channel_accuracy(self) -> float:
        return float(np.mean([self.per_channel_accuracy[c] for c in self.channels]))

    @property
    def max_channel_accuracy(self) -> float:
        return max(self.per_channel_accuracy[c] for c in self.channels)

    def to_dict(self) -> dict:
        return {
            "kind": "eval_report",
            "format_version": 1,
            "config": self.config,
            "config_fingerprint": self.config_fingerprint,
            "selection": self.selection,
            "feature_dim": self.feature_dim,
            "spread": self.spread,
            "tie_policy": self.tie_policy,
            "positive_class": self.positive_class,
            "class_counts": dict(self.class_counts),
            "n_frames": self.n_frames,
            "channels": list(self.channels),
            "per_channel_accuracy": {c: self.per_channel_accuracy[c] for c in self.channels},
            "per_channel_confusion": {c: self.per_channel_confusion[c].to_dict()
                                      for c in self.channels},
            "confusion": self.confusion.to_dict(),
            "voted_accuracy": _nan_to_none(self.voted_accuracy),
            "sensitivity": _nan_to_none(self.sensitivity),
            "specificity": _nan_to_none(self.specificity),
            "true_positive_rate": _nan_to_none(self.true_positive_rate),
            "false_positive_rate": _nan_to_none(self.false_positive_rate),
            "predictions": list(self.predictions),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        return cls(
            channels=list(d["channels"]),
            per_channel_accuracy=dict(d["per_channel_accuracy"]),
            per_channel_confusion={c: Confusion(**v) for c, v in d["per_channel_confusion"].items()},
            confusion=Confusion(**d["confusion"]),
            class_counts=dict(d["class_counts"]),
            spread=d["spread"],
            tie_policy=d["tie_policy"],
            positive_class=d.get("positive_class", POSITIVE),
            selection=d.get("selection", "all"),
            feature_dim=d.get("feature_dim", 0),
            config=d.get("config"),
            config_fingerprint=d.get("config_fingerprint"),
            predictions=list(d.get("predictions", [])),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def render(self) -> str:
        """Human-readable summary: header, per-channel table, voted metrics."""
        lines = []
        if self.config is not None:
            cfg = ExtractionConfig.from_dict(self.config)
            lines.append(f"configuration: {cfg.describe()} (fingerprint {cfg.fingerprint})")
        lines.append(f"features: {self.selection} (dimension {self.feature_dim})  "
                     f"spread: {self.spread:g}  tie policy: {self.tie_policy}")
        counts = ", ".join(f"{k}={v}" for k, v in sorted(self.class_counts.items()))
        lines.append(f"frames: {self.n_frames} ({counts})")
        lines.append("")
        lines.append(f"{'channel':<8} {'accuracy %':>10}")
        for ch in self.channels:
            lines.append(f"{ch:<8} {100 * self.per_channel_accuracy[ch]:>10.2f}")
        lines.append("")
        c = self.confusion
        lines.append(f"voted accuracy      {_pct(self.voted_accuracy)}")
        lines.append(f"sensitivity (TPR)   {_pct(self.sensitivity)}")
        lines.append(f"specificity         {_pct(self.specificity)}")
        lines.append(f"false positive rate {_pct(self.false_positive_rate)}")
        lines.append(f"confusion           TP={c.tp} FN={c.fn} TN={c.tn} FP={c.fp}")
        return "\n".join(lines) + "\n"


def _pct(v: float) -> str:
    return "    n/a" if math.isnan(v) else f"{100 * v:7.2f}%"


def _map(fn, items, jobs: int):
    if jobs and jobs > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


def loocv_voted_arrays(channel_data: dict, labels, spread: float = DEFAULT_SPREAD,
                       tie_policy=TiePolicy.FAVOR_POSITIVE, *,
                       positive_class=POSITIVE, channels=None, jobs: int = 1,
                       method: str = "masked") -> EvalReport:
    """Voted LOOCV on per-channel feature matrices.

    ``channel_data`` maps channel name to an array of shape (n_frames, R);
    row ``f`` of every channel belongs to frame ``f`` with label ``labels[f]``.
    """
    labels, names, _ = _encode(labels)
    channels = list(channel_data) if channels is None else list(channels)
    if not channels:
        raise InputError("no channels to evaluate")
    mats = {ch: as_matrix(channel_data[ch]) for ch in channels}
    for ch, mat in mats.items():
        if mat.shape[0] != len(labels):
            raise InputError(f"channel {ch!r} has {mat.shape[0]} frames, expected {len(labels)}")
    if len(labels) < 2:
        raise EvaluationError("voted LOOCV needs at least 2 frames")
    if len(names) < 2:
        raise EvaluationError("voted LOOCV needs both classes present")
    tie_policy = TiePolicy(tie_policy)
    positive = str(getattr(positive_class, "value", positive_class))

    results = dict(zip(channels, _map(
        lambda ch: loocv_channel(mats[ch], labels, spread, positive_class=positive,
                                 method=method),
        channels, jobs)))
    decisions = []
    for f in range(len(labels)):
        tally = {n: 0 for n in names}
        for ch in channels:
            tally[results[ch].predictions[f]] += 1
        decisions.append(decide_tally(tally, names, positive, tie_policy))
    class_counts = {n: labels.count(n) for n in names}
    return EvalReport(
        channels=channels,
        per_channel_accuracy={ch: results[ch].accuracy for ch in channels},
        per_channel_confusion={ch: results[ch].confusion for ch in channels},
        confusion=Confusion.from_predictions(labels, decisions, positive),
        class_counts=class_counts,
        spread=float(spread),
        tie_policy=tie_policy.value,
        positive_class=positive,
        feature_dim=int(next(iter(mats.values())).shape[1]),
        predictions=decisions,
    )


def loocv_voted(frames, spread: float = DEFAULT_SPREAD, tie_policy=TiePolicy.FAVOR_POSITIVE,
                **kwargs) -> EvalReport:
    """Voted LOOCV over frames given as ``(dict channel -> vector, label)`` pairs."""
    frames = list(frames)
    if not frames:
        raise EvaluationError("voted LOOCV needs at least 2 frames")
    channels = list(frames[0][0])
    for i, (frame, _) in enumerate(frames):
        if set(frame) != set(channels):
            odd = sorted(set(frame) ^ set(channels))
            raise InputError(f"frame {i} has an inconsistent channel set (channel {odd[0]!r})")
    data = {ch: as_matrix([np.asarray(frame[ch], dtype=np.float64) for frame, _ in frames])
            for ch in channels}
    return loocv_voted_arrays(data, [lab for _, lab in frames], spread, tie_policy,
                              channels=channels, **kwargs)


# --------------------------------------------------------------------------
# Feature-combination study
# --------------------------------------------------------------------------

@dataclass
class FeatureStudy:
    channels: list
    selections: list
    accuracy: np.ndarray  # (n_channels, n_selections)
    dims: list

    @property
    def column_means(self) -> np.ndarray:
        return self.accuracy.mean(axis=0)

    @property
    def best(self) -> FeatureSelection:
        return self.selections[int(np.argmax(self.column_means))]

    def to_dict(self) -> dict:
        return {
            "kind": "feature_study",
            "format_version": 1,
            "selections": [s.name for s in self.selections],
            "dims": list(self.dims),
            "channels": list(self.channels),
            "accuracy": {ch: dict(zip([s.name for s in self.selections], map(float, row)))
                         for ch, row in zip(self.channels, self.accuracy)},
            "column_means": dict(zip([s.name for s in self.selections],
                                     map(float, self.column_means))),
            "best": self.best.name,
        }

    def render(self) -> str:
        width = max(9, *(len(s.title) for s in self.selections))
        head = f"{'channel':<8}" + "".join(f" {s.title:>{width}}" for s in self.selections)
        lines = [head, "-" * len(head)]
        for ch, row in zip(self.channels, self.accuracy):
            lines.append(f"{ch:<8}" + "".join(f" {100 * v:>{width}.0f}" for v in row))
        lines.append("-" * len(head))
        lines.append(f"{'mean':<8}" + "".join(f" {100 * v:>{width}.1f}" for v in self.column_means))
        lines.append(f"best combination: {self.best.title}")
        return "\n".join(lines) + "\n"


def feature_study(channel_data: dict, labels, n_rir: int, spread: float = DEFAULT_SPREAD,
                  selections=STUDY_SELECTIONS, *, jobs: int = 1) -> FeatureStudy:
    """Single-channel LOOCV accuracy for every (channel, feature selection) cell.

    Selections mask feature dimensions before normalization.
    """
    channels = list(channel_data)
    selections = list(selections)
    cells = [(ch, sel) for ch in channels for sel in selections]

    def run(cell):
        ch, sel = cell
        mat = as_matrix(channel_data[ch])[:, sel.columns(n_rir)]
        return loocv_channel(mat, labels, spread).accuracy

    acc = np.array(_map(run, cells, jobs), dtype=np.float64).reshape(len(channels), len(selections))
    return FeatureStudy(channels, selections, acc, [s.dim(n_rir) for s in selections])


# --------------------------------------------------------------------------
# Full pipeline and configuration sweeps
# --------------------------------------------------------------------------

@dataclass
class FeatureSet:
    """Feature matrices of a dataset under one configuration."""

    channels: list
    data: dict  # channel -> (n_frames, K + 4)
    labels: list
    subjects: list
    config: ExtractionConfig

    def select(self, selection: FeatureSelection) -> dict:
        cols = selection.columns(self.config.band.n_bins)
        return {ch: mat[:, cols] for ch, mat in self.data.items()}


def featurize(recordings, config: ExtractionConfig) -> FeatureSet:
    """Filter, segment and extract features from every recording."""
    recordings = list(recordings)
    if not recordings:
        raise InputError("no recordings given")
    channels = list(recordings[0].channels)
    per_channel = {ch: [] for ch in channels}
    labels, subjects = [], []
    for rec in recordings:
        if list(rec.channels) != channels:
            raise InputError(f"recording {rec.subject_id!r} has a different channel list")
        if rec.sample_rate_hz != config.sample_rate_hz:
            raise InputError(
                f"recording {rec.subject_id!r} is sampled at {rec.sample_rate_hz} Hz, "
                f"configuration expects {config.sample_rate_hz} Hz"
            )
        if rec.n_samples < config.segment_length:
            continue
        filtered = low_pass_filter(rec, config.filter)
        frames = frame_matrix(filtered, config.segment_length)
        feats = extract_matrix(frames, config)  # (n_frames, n_channels, R)
        for c, ch in enumerate(channels):
            per_channel[ch].append(feats[:, c, :])
        labels.extend([rec.label.value] * frames.shape[0])
        subjects.extend([rec.subject_id] * frames.shape[0])
    dim = config.n_features
    data = {ch: (np.vstack(per_channel[ch]) if per_channel[ch] else np.empty((0, dim)))
            for ch in channels}
    return FeatureSet(channels, data, labels, subjects, config)


def evaluate_config(recordings, config: ExtractionConfig, spread: float = DEFAULT_SPREAD,
                    tie_policy=TiePolicy.FAVOR_POSITIVE,
                    selection: FeatureSelection = ALL_FEATURES, *, jobs: int = 1) -> EvalReport:
    """Filter, segment, extract and run voted LOOCV for one configuration."""
    fs = featurize(recordings, config)
    report = loocv_voted_arrays(fs.select(selection), fs.labels, spread, tie_policy,
                                channels=fs.channels, jobs=jobs)
    report.selection = selection.name
    report.config = config.to_dict()
    report.config_fingerprint = config.fingerprint
    return report


def reference_grid(sample_rate_hz: float = 200.0, k_max: int = 5) -> list:
    """The voted-accuracy grid: 4096 x {40, 46} Hz and 8192 x {40, 46, 56, 66} Hz, each
    crossed with the three band/bin settings (18 configurations)."""
    from .features import STANDARD_BANDS
    from .signal import FilterSpec

    rows = [(4096, 40.0), (4096, 46.0), (8192, 40.0), (8192, 46.0), (8192, 56.0), (8192, 66.0)]
    return [ExtractionConfig(length, FilterSpec(cutoff), band, k_max, sample_rate_hz)
            for length, cutoff in rows for band in STANDARD_BANDS]


@dataclass
class SweepRow:
    key: str
    config: ExtractionConfig | None
    report: EvalReport | None = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.report is not None


@dataclass
class SweepResult:
    rows: list  # successful rows sorted by voted accuracy (desc), then failures

    @property
    def best(self) -> SweepRow | None:
        ok = [r for r in self.rows if r.ok]
        return ok[0] if ok else None

    @property
    def errors(self) -> list:
        return [r for r in self.rows if not r.ok]

    def to_dict(self) -> dict:
        best = self.best
        return {
            "kind": "config_sweep",
            "format_version": 1,
            "best": None if best is None else best.key,
            "rows": [
                {
                    "key": r.key,
                    "config": None if r.config is None else r.config.to_dict(),
                    "best": best is not None and r is best,
                    "voted_accuracy": None if not r.ok else _nan_to_none(r.report.voted_accuracy),
                    "report": None if not r.ok else r.report.to_dict(),
                    "error": r.error,
                }
                for r in self.rows
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def render(self) -> str:
        """Voted accuracy laid out as length/cutoff rows by band/bin columns."""
        ok = [r for r in self.rows if r.ok]
        bands, rowkeys = [], []
        for r in ok:
            b = r.config.band
            bk = (b.f_low_hz, b.f_up_hz, b.f_step_hz)
            rk = (r.config.segment_length, r.config.filter.cutoff_hz)
            if bk not in bands:
                bands.append(bk)
            if rk not in rowkeys:
                rowkeys.append(rk)
        bands.sort()
        bands.sort(key=lambda b: b[2])
        rowkeys.sort()
        cell = {((r.config.segment_length, r.config.filter.cutoff_hz),
                 (r.config.band.f_low_hz, r.config.band.f_up_hz, r.config.band.f_step_hz)): r
                for r in ok}
        best = self.best
        titles = [f"{_num(lo)}-{_num(up)}, {_num(st)}" for lo, up, st in bands]
        width = max([11] + [len(t) for t in titles])
        head = f"{'Length':>6} | {'cut-off':>7} |" + "".join(f" {t:>{width}}" for t in titles)
        lines = [head, "-" * len(head)]
        prev = None
        for length, cutoff in rowkeys:
            label = str(length) if length != prev else ""
            prev = length
            cells = []
            for bk in bands:
                r = cell.get(((length, cutoff), bk))
                if r is None:
                    cells.append(f" {'-':>{width}}")
                else:
                    mark = "*" if r is best else ""
                    cells.append(f" {_pct(r.report.voted_accuracy).strip() + mark:>{width}}")
            lines.append(f"{label:>6} | {_num(cutoff):>7} |" + "".join(cells))
        if best is not None:
            lines.append("")
            lines.append(f"* best configuration: {best.config.describe()} "
                         f"({_pct(best.report.voted_accuracy).strip()})")
        for r in self.errors:
            lines.append(f"error in {r.key}: {r.error}")
        return "\n".join(lines) + "\n"


def _num(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else f"{v:g}"


def _config_key(config) -> str:
    if isinstance(config, ExtractionConfig):
        return config.describe()
    return str(config)


def config_sweep(recordings, configs, spread: float = DEFAULT_SPREAD,
                 tie_policy=TiePolicy.FAVOR_POSITIVE,
                 selection: FeatureSelection = ALL_FEATURES, *, jobs: int = 1) -> SweepResult:
    """Run the full pipeline for every configuration.

    ``configs`` may contain :class:`ExtractionConfig` objects or zero-argument
    callables that build one (so that invalid configurations are reported as
    row errors instead of aborting the sweep). Failures never stop the sweep.
    """
    recordings = list(recordings)
    configs = list(configs)

    def run(item):
        idx, spec = item
        config = None
        try:
            config = spec() if callable(spec) else spec
            report = evaluate_config(recordings, config, spread, tie_policy, selection)
            return idx, SweepRow(_config_key(config), config, report=report)
        except (EegPnnError, ValueError) as exc:
            if config is not None:
                key = _config_key(config)
            else:
                key = getattr(spec, "label", f"configuration #{idx + 1}")
            return idx, SweepRow(key, config, error=f"{type(exc).__name__}: {exc}")

    results = sorted(_map(run, list(enumerate(configs)), jobs), key=lambda t: t[0])
    ok = [(i, r) for i, r in results if r.ok]
    failed = [r for _, r in results if not r.ok]
    ok.sort(key=lambda t: (-_sort_value(t[1].report.voted_accuracy), t[0]))
    return SweepResult([r for _, r in ok] + failed)


def _sort_value(v: float) -> float:
    return -1.0 if math.isnan(v) else v
