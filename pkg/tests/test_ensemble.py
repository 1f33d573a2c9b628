import numpy as np
import pytest

from eegpnn.ensemble import (
    ChannelEnsemble, TiePolicy, decide_tally, load_ensemble, save_ensemble, vote, vote_many,
)
from eegpnn.errors import InputError
from eegpnn.features import ExtractionConfig
from eegpnn.pnn import train
from eegpnn.signal import CHANNELS_10_20

EPI, HEA = "Epileptic", "Healthy"


def _member(config_id="cfg"):
    # 1-D model: Epileptic near 0, Healthy near 10.
    return train([[0.0], [0.5], [10.0], [10.5]], [EPI, EPI, HEA, HEA], 0.5,
                 normalize=False, config_id=config_id)


def _frame(n_epileptic, n=22):
    chans = CHANNELS_10_20[:n]
    return {ch: np.array([0.2 if i < n_epileptic else 10.2]) for i, ch in enumerate(chans)}


@pytest.fixture
def ensemble():
    return ChannelEnsemble({ch: _member() for ch in CHANNELS_10_20})


class TestVote:
    def test_strict_majority(self, ensemble):
        r = vote(ensemble, _frame(12))
        assert r.decision == EPI
        assert r.tally == {EPI: 12, HEA: 10}

    def test_tie_policies(self, ensemble):
        frame = _frame(11)
        assert vote(ensemble, frame).decision == EPI
        for policy, expected in [(TiePolicy.FAVOR_POSITIVE, EPI),
                                 (TiePolicy.FAVOR_NEGATIVE, HEA),
                                 (TiePolicy.LOWEST_INDEX, EPI)]:
            ens = ChannelEnsemble(ensemble.members, tie_policy=policy)
            assert vote(ens, frame).decision == expected

    def test_unanimous(self, ensemble):
        r = vote(ensemble, _frame(0))
        assert r.decision == HEA
        assert r.tally == {HEA: 22, EPI: 0}
        for policy in TiePolicy:
            for n in (0, 22):
                ens = ChannelEnsemble(ensemble.members, tie_policy=policy)
                assert vote(ens, _frame(n)).decision == (EPI if n else HEA)

    def test_channel_order_irrelevant(self, ensemble, rng):
        frame = _frame(13)
        base = vote(ensemble, frame)
        for _ in range(5):
            keys = list(frame)
            rng.shuffle(keys)
            r = vote(ensemble, {k: frame[k] for k in keys})
            assert (r.decision, r.tally) == (base.decision, base.tally)
            assert sum(r.tally.values()) == 22

    def test_missing_and_extra_channel(self, ensemble):
        frame = _frame(12)
        del frame["Cz"]
        with pytest.raises(InputError, match="Cz"):
            vote(ensemble, frame)
        frame = _frame(12)
        frame["X1"] = np.array([0.0])
        with pytest.raises(InputError, match="X1"):
            vote(ensemble, frame)

    def test_vote_many_matches_vote(self, ensemble):
        frames = [_frame(k) for k in (0, 11, 12, 22)]
        stacked = {ch: np.vstack([f[ch] for f in frames]) for ch in ensemble.channels}
        many = vote_many(ensemble, stacked)
        assert [r.decision for r in many] == [vote(ensemble, f).decision for f in frames]


class TestTally:
    def test_decide_tally_depends_only_on_counts(self):
        names = (EPI, HEA)
        assert decide_tally({EPI: 3, HEA: 5}, names, EPI, "positive") == HEA
        assert decide_tally({EPI: 4, HEA: 4}, names, EPI, "negative") == HEA
        assert decide_tally({EPI: 4, HEA: 4}, names, HEA, "lowest") == EPI


class TestEnsembleInvariants:
    def test_needs_members(self):
        with pytest.raises(InputError):
            ChannelEnsemble({})

    def test_class_sets_must_match(self):
        other = train([[0.0], [1.0]], ["X", "Y"], 0.1, config_id="cfg")
        with pytest.raises(InputError):
            ChannelEnsemble({"a": _member(), "b": other})

    def test_config_ids_must_match(self):
        with pytest.raises(InputError):
            ChannelEnsemble({"a": _member("one"), "b": _member("two")})

    def test_round_trip(self, tmp_path):
        cfg = ExtractionConfig()
        members = {ch: train([[0.0], [0.5], [10.0]], [EPI, EPI, HEA], 0.1,
                             config_id=cfg.fingerprint) for ch in ("O1", "Fp1", "Cz")}
        ens = ChannelEnsemble(members, tie_policy="negative", config=cfg)
        save_ensemble(ens, tmp_path / "e.json")
        loaded = load_ensemble(tmp_path / "e.json")
        assert loaded.channels == ("O1", "Fp1", "Cz")
        assert loaded.tie_policy is TiePolicy.FAVOR_NEGATIVE
        assert loaded.config == cfg
        assert all(loaded.members[ch] == members[ch] for ch in members)
        save_ensemble(loaded, tmp_path / "e2.json")
        assert (tmp_path / "e.json").read_bytes() == (tmp_path / "e2.json").read_bytes()
