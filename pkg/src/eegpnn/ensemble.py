"""Majority vote over one PNN per channel."""
from __future__ import annotations

import enum
import json
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InputError
from .features import ExtractionConfig, as_matrix
from .pnn import PnnModel, classify_many
from .signal import Label


class TiePolicy(str, enum.Enum):
    FAVOR_POSITIVE = "positive"
    FAVOR_NEGATIVE = "negative"
    LOWEST_INDEX = "lowest"

    def __str__(self) -> str:
        return self.value


def decide_tally(tally: dict, class_names, positive_class, tie_policy) -> str:
    """Class with the most votes; ties settled by ``tie_policy``."""
    tie_policy = TiePolicy(tie_policy)
    top = max(tally.values())
    tied = [c for c in class_names if tally.get(c, 0) == top]
    if len(tied) == 1:
        return tied[0]
    positive = str(positive_class)
    if tie_policy is TiePolicy.FAVOR_POSITIVE and positive in tied:
        return positive
    if tie_policy is TiePolicy.FAVOR_NEGATIVE:
        negatives = [c for c in tied if c != positive]
        if negatives:
            return negatives[0]
    return tied[0]


@dataclass(frozen=True)
class VoteResult:
    decision: str
    tally: dict
    per_channel: dict


@dataclass(frozen=True, eq=False)
class ChannelEnsemble:
    members: dict
    positive_class: str = Label.EPILEPTIC.value
    tie_policy: TiePolicy = TiePolicy.FAVOR_POSITIVE
    config: ExtractionConfig | None = None

    def __post_init__(self):
        if not self.members:
            raise InputError("an ensemble needs at least one member")
        names = {m.class_names for m in self.members.values()}
        if len(names) != 1:
            raise InputError("ensemble members disagree on the class set")
        ids = {m.config_id for m in self.members.values()}
        if len(ids) != 1:
            raise InputError("ensemble members were trained on different extraction configs")
        object.__setattr__(self, "members", dict(self.members))
        object.__setattr__(self, "tie_policy", TiePolicy(self.tie_policy))
        object.__setattr__(self, "positive_class", str(getattr(self.positive_class, "value", self.positive_class)))

    @property
    def channels(self) -> tuple:
        return tuple(self.members)

    @property
    def class_names(self) -> tuple:
        return next(iter(self.members.values())).class_names

    @property
    def config_id(self) -> str:
        return next(iter(self.members.values())).config_id

    def to_dict(self) -> dict:
        return {
            "kind": "channel_ensemble",
            "format_version": 1,
            "positive_class": self.positive_class,
            "tie_policy": self.tie_policy.value,
            "config": None if self.config is None else self.config.to_dict(),
            "config_fingerprint": None if self.config is None else self.config.fingerprint,
            "channels": list(self.members),
            "members": {ch: m.to_dict() for ch, m in self.members.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ChannelEnsemble":
        if d.get("kind") != "channel_ensemble":
            raise InputError("document is not a serialized channel ensemble")
        config = None if d.get("config") is None else ExtractionConfig.from_dict(d["config"])
        if config is not None and d.get("config_fingerprint") not in (None, config.fingerprint):
            raise InputError("stored config fingerprint does not match stored config")
        return cls(
            members={ch: PnnModel.from_dict(d["members"][ch])
                     for ch in d.get("channels", sorted(d["members"]))},
            positive_class=d["positive_class"],
            tie_policy=TiePolicy(d["tie_policy"]),
            config=config,
        )


def _check_channels(ensemble: ChannelEnsemble, channels) -> None:
    missing = [c for c in ensemble.channels if c not in channels]
    extra = [c for c in channels if c not in ensemble.members]
    if missing:
        raise InputError(f"frame is missing channel {missing[0]!r}")
    if extra:
        raise InputError(f"frame has unexpected channel {extra[0]!r}")


def vote(ensemble: ChannelEnsemble, frame: dict) -> VoteResult:
    """Classify each channel's vector with its own member and take the majority."""
    _check_channels(ensemble, frame)
    per_channel = {
        ch: classify_many(ensemble.members[ch], as_matrix([np.asarray(frame[ch], dtype=np.float64)]))[0]
        for ch in ensemble.channels
    }
    return _tally(ensemble, per_channel)


def vote_many(ensemble: ChannelEnsemble, frames: dict) -> list:
    """Vote on many frames at once.

    ``frames`` maps each channel to an array of shape (n_frames, R).
    """
    _check_channels(ensemble, frames)
    lengths = {len(np.asarray(frames[ch])) for ch in ensemble.channels}
    if len(lengths) != 1:
        raise InputError("channels supply different numbers of frames")
    per = {ch: classify_many(ensemble.members[ch], frames[ch]) for ch in ensemble.channels}
    return [_tally(ensemble, {ch: per[ch][i] for ch in ensemble.channels})
            for i in range(lengths.pop())]


def _tally(ensemble: ChannelEnsemble, per_channel: dict) -> VoteResult:
    counts = Counter(per_channel.values())
    tally = {c: counts.get(c, 0) for c in ensemble.class_names}
    decision = decide_tally(tally, ensemble.class_names, ensemble.positive_class,
                            ensemble.tie_policy)
    return VoteResult(decision, tally, per_channel)


def save_ensemble(ensemble: ChannelEnsemble, path) -> None:
    Path(path).write_text(json.dumps(ensemble.to_dict(), sort_keys=True) + "\n")


def load_ensemble(path) -> ChannelEnsemble:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read model {path}: {exc}") from exc
    return ChannelEnsemble.from_dict(doc)
