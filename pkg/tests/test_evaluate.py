import dataclasses
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from eegpnn.ensemble import TiePolicy
from eegpnn.errors import EvaluationError, InputError
from eegpnn.evaluate import (
    STUDY_SELECTIONS, Confusion, EvalReport, FeatureSelection, config_sweep, evaluate_config,
    feature_study, featurize, fold_inverse_variances, fold_model, loo_predictions,
    loocv_channel, loocv_voted, loocv_voted_arrays, reference_grid,
)
from eegpnn.features import ExtractionConfig, SpectralBandSpec, fit_normalizer
from eegpnn.ingest import subject_specs, synthesize
from eegpnn.signal import CHANNELS_10_20, FilterSpec

EPI, HEA = "Epileptic", "Healthy"


def _two_class(rng, n_per=30, r=5, shift=1.0):
    x = rng.normal(size=(2 * n_per, r))
    x[:n_per] += shift
    return x, [EPI] * n_per + [HEA] * n_per


class TestFeatureSelection:
    def test_seven_combinations(self):
        assert len(STUDY_SELECTIONS) == 7 == len(set(STUDY_SELECTIONS))
        assert STUDY_SELECTIONS[0].title == "RIRs & FDs & Hjorth's"

    def test_dims(self):
        assert FeatureSelection().dim(30) == 34
        assert FeatureSelection.parse("fd").dim(30) == 2
        assert FeatureSelection.parse("rir+hjorth").dim(13) == 15
        np.testing.assert_array_equal(FeatureSelection.parse("fd").columns(30), [30, 31])

    def test_invalid(self):
        with pytest.raises(InputError):
            FeatureSelection(False, False, False)
        with pytest.raises(InputError):
            FeatureSelection.parse("wavelet")


class TestConfusion:
    def test_rates(self):
        c = Confusion.from_predictions([EPI, EPI, HEA, HEA, HEA], [EPI, HEA, HEA, EPI, HEA], EPI)
        assert (c.tp, c.fn, c.tn, c.fp) == (1, 1, 2, 1)
        assert c.accuracy == (c.tp + c.tn) / c.total
        assert c.sensitivity == c.true_positive_rate == 0.5
        assert c.specificity == pytest.approx(2 / 3)
        assert c.false_positive_rate == pytest.approx(1 / 3)

    def test_undefined_rate_is_nan(self):
        assert math.isnan(Confusion(0, 0, 3, 1).sensitivity)


class TestLoocvChannel:
    def test_tight_clusters(self):
        x = np.array([[0.0, 0.0], [0.01, 0.0], [5.0, 5.0], [5.0, 5.01]])
        r = loocv_channel(x, [EPI, EPI, HEA, HEA], 0.1)
        assert r.accuracy == 1.0

    def test_two_samples(self):
        assert loocv_channel([[0.0], [1.0]], [EPI, HEA]).accuracy == 0.0

    def test_single_class(self):
        with pytest.raises(EvaluationError):
            loocv_channel([[0.0], [1.0]], [EPI, EPI])

    def test_permutation_null(self):
        rng = np.random.default_rng(0)
        x, labels = _two_class(rng, 100, 34, 1.5)
        assert loocv_channel(x, labels).accuracy > 0.95
        accs = [loocv_channel(x, list(np.random.default_rng(1000 + s).permutation(labels))).accuracy
                for s in range(20)]
        assert abs(np.mean(accs) - 0.5) <= 0.1
        assert all(abs(a - 0.5) <= 0.1 for a in accs)

    @pytest.mark.parametrize("seed", range(4))
    def test_masked_equals_naive(self, seed):
        rng = np.random.default_rng(seed)
        x, labels = _two_class(rng, 25, 6, 0.7)
        x[:, 2] = 3.0                     # constant column
        x[:, 3] = 0.0
        x[7, 3] = 1.0                     # constant once row 7 is held out
        x[10] = x[11]                     # duplicate rows
        x[:, 4] *= 1e-8                   # tiny scale
        for spread in (0.05, 0.1, 1.0):
            assert (loo_predictions(x, labels, spread, method="masked")
                    == loo_predictions(x, labels, spread, method="naive"))

    @settings(max_examples=30, deadline=None)
    @given(q=st.integers(3, 60), r=st.integers(1, 6), seed=st.integers(0, 2**16),
           spread=st.sampled_from([0.05, 0.1, 0.5, 2.0]))
    def test_masked_equals_naive_random(self, q, r, seed, spread):
        rng = np.random.default_rng(seed)
        x = np.round(rng.normal(size=(q, r)), 1)  # rounding creates ties and repeats
        labels = [EPI if v else HEA for v in rng.integers(0, 2, q)]
        labels[0], labels[1] = EPI, HEA
        assert (loo_predictions(x, labels, spread, method="masked")
                == loo_predictions(x, labels, spread, method="naive"))

    def test_no_leakage(self):
        rng = np.random.default_rng(5)
        x, labels = _two_class(rng, 10, 4)
        weights = fold_inverse_variances(x)
        for i in range(len(labels)):
            model = fold_model(x, labels, i)
            assert model.n_exemplars == len(labels) - 1
            oracle = fit_normalizer(np.delete(x, i, axis=0))
            assert model.normalizer == oracle
            np.testing.assert_allclose(weights[i], 1 / oracle.std ** 2, rtol=1e-9)


def _informative_channels(seed, n_informative=12, frames_per_class=30):
    rng = np.random.default_rng(seed)
    labels = [EPI] * frames_per_class + [HEA] * frames_per_class
    data = {}
    for i, ch in enumerate(CHANNELS_10_20):
        x = rng.normal(size=(2 * frames_per_class, 5))
        if i < n_informative:
            x[:frames_per_class] += 0.8
        data[ch] = x
    return data, labels


class TestVoted:
    def test_unanimous_set(self):
        rng = np.random.default_rng(1)
        x, labels = _two_class(rng, 10, 3, 50.0)
        data = {ch: x + 0.001 * rng.normal(size=x.shape) for ch in CHANNELS_10_20}
        for policy in TiePolicy:
            r = loocv_voted_arrays(data, labels, 0.1, policy)
            assert all(a == 1.0 for a in r.per_channel_accuracy.values())
            assert r.voted_accuracy == 1.0

    def test_majority_amplifies(self):
        voted, mean_single = [], []
        for seed in range(10):
            data, labels = _informative_channels(seed)
            r = loocv_voted_arrays(data, labels)
            voted.append(r.voted_accuracy)
            mean_single.append(r.mean_channel_accuracy)
            assert r.voted_accuracy > r.mean_channel_accuracy
        assert np.mean(voted) > np.mean(mean_single)

    def test_report_fields(self):
        data, labels = _informative_channels(0)
        r = loocv_voted_arrays(data, labels, tie_policy="negative")
        c = r.confusion
        assert r.voted_accuracy == (c.tp + c.tn) / (c.tp + c.tn + c.fp + c.fn)
        assert r.sensitivity == c.tp / (c.tp + c.fn)
        assert r.specificity == c.tn / (c.tn + c.fp)
        assert r.true_positive_rate == r.sensitivity
        assert r.false_positive_rate == pytest.approx(1 - r.specificity, abs=1e-15)
        assert r.class_counts == {EPI: 30, HEA: 30}
        assert r.tie_policy == "negative"
        for v in (r.voted_accuracy, r.sensitivity, r.specificity, r.false_positive_rate):
            assert 0 <= v <= 1
        again = EvalReport.from_dict(json.loads(r.to_json()))
        assert again.to_json() == r.to_json()
        assert "voted accuracy" in r.render()

    def test_parallelism_does_not_change_report(self):
        data, labels = _informative_channels(3)
        a = loocv_voted_arrays(data, labels, jobs=1).to_json()
        b = loocv_voted_arrays(data, labels, jobs=4).to_json()
        assert a == b

    def test_frames_interface(self):
        data, labels = _informative_channels(2, frames_per_class=8)
        frames = [({ch: data[ch][f] for ch in data}, labels[f]) for f in range(len(labels))]
        assert loocv_voted(frames).to_json() == loocv_voted_arrays(data, labels).to_json()
        frames[3][0].pop("Cz")
        with pytest.raises(InputError, match="Cz"):
            loocv_voted(frames)

    def test_needs_both_classes(self):
        with pytest.raises(EvaluationError):
            loocv_voted_arrays({"a": np.zeros((3, 2))}, [EPI] * 3)


class TestFeatureStudy:
    def test_spectral_signal_favours_rir(self):
        rng = np.random.default_rng(9)
        n_rir, n = 13, 40
        labels = [EPI] * n + [HEA] * n
        data = {}
        for ch in CHANNELS_10_20[:4]:
            x = rng.normal(size=(2 * n, n_rir + 4))
            x[:n, :n_rir] += 1.0  # the class signal lives only in the spectral columns
            data[ch] = x
        study = feature_study(data, labels, n_rir)
        assert study.accuracy.shape == (4, 7)
        means = dict(zip([s.name for s in study.selections], study.column_means))
        for name in ("all", "rir", "rir+fd", "rir+hjorth"):
            assert means[name] > means["hjorth"]
        assert study.dims == [17, 4, 2, 13, 2, 15, 15]
        assert "best combination" in study.render()


class TestPipeline:
    def test_featurize_shapes(self, small_recordings, small_config):
        fs = featurize(small_recordings, small_config)
        n = sum(r.n_samples // 1024 for r in small_recordings)
        assert len(fs.labels) == n
        assert all(fs.data[ch].shape == (n, 34) for ch in fs.channels)
        assert np.allclose(fs.data["Cz"][:, :30].sum(axis=1), 1.0, atol=1e-9)

    def test_evaluate_config_records_config(self, small_recordings, small_config):
        r = evaluate_config(small_recordings, small_config,
                            selection=FeatureSelection.parse("fd"))
        assert r.feature_dim == 2
        assert r.config_fingerprint == small_config.fingerprint
        assert r.selection == "fd"

    def test_reference_grid(self):
        grid = reference_grid()
        assert len(grid) == 18
        pairs = {(c.segment_length, c.filter.cutoff_hz) for c in grid}
        assert pairs == {(4096, 40.0), (4096, 46.0), (8192, 40.0), (8192, 46.0),
                         (8192, 56.0), (8192, 66.0)}
        assert {c.band.n_bins for c in grid} == {30, 16, 13}

    def test_sweep_determinism_and_errors(self, small_recordings, small_config):
        def bad():
            return ExtractionConfig(1024, FilterSpec(30.0), SpectralBandSpec(2, 32, 1))
        bad.label = "1024:30:2:32:1"
        configs = [small_config, small_config, bad]
        a = config_sweep(small_recordings, configs)
        b = config_sweep(small_recordings, configs, jobs=3)
        assert a.to_json() == b.to_json()
        ok = [r for r in a.rows if r.ok]
        assert len(ok) == 2 and len(a.errors) == 1
        assert ok[0].report.to_json() == ok[1].report.to_json()
        assert a.errors[0].key == "1024:30:2:32:1"
        assert "exceeds filter cutoff" in a.errors[0].error
        assert a.best is ok[0]
        text = a.render()
        assert "*" in text and "error in 1024:30:2:32:1" in text

    def test_sweep_rows_sorted_by_accuracy(self, small_recordings):
        configs = [ExtractionConfig(512, FilterSpec(c), SpectralBandSpec(2, 32, 1))
                   for c in (40.0, 46.0, 56.0)]
        res = config_sweep(small_recordings, configs)
        accs = [r.report.voted_accuracy for r in res.rows]
        assert accs == sorted(accs, reverse=True)

    def test_cutoff_insensitive_below_30hz(self):
        # Class signal confined to 15-28 Hz: a 40 Hz and a 66 Hz cutoff should do
        # equally well. One frame per subject keeps accuracy off the ceiling.
        diffs, all_acc = [], []
        for seed in range(10):
            specs = [dataclasses.replace(s, spike_band=(15.0, 28.0))
                     for s in subject_specs(20, seed, 1024 / 200, spike_rate_hz=2.0,
                                            spike_amplitude_uv=30.0)]
            recs = [synthesize(s) for s in specs]
            acc = [evaluate_config(recs, ExtractionConfig(1024, FilterSpec(c),
                                                          SpectralBandSpec(2, 32, 1))).voted_accuracy
                   for c in (40.0, 66.0)]
            all_acc.extend(acc)
            diffs.append(acc[0] - acc[1])
        assert min(all_acc) > 0.6 and np.mean(all_acc) < 0.97
        assert abs(np.mean(diffs)) <= 0.03
