import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from eegpnn.errors import ConfigurationError, InputError
from eegpnn.features import (
    STANDARD_BANDS, ExtractionConfig, FeatureVector, SpectralBandSpec, apply_normalizer,
    extract, extract_matrix, fft_magnitudes, fit_normalizer, higuchi_fd, hjorth_params,
    petrosian_fd, power_spectral_intensity, relative_intensity_ratio,
)
from eegpnn.signal import FilterSpec, Segment

FS = 200.0


# --------------------------------------------------------------------------
# Oracles, written independently of the library code paths.
# --------------------------------------------------------------------------

def naive_dft_magnitudes(x):
    x = np.asarray(x, dtype=float)
    n = len(x)
    out = []
    for k in range(n):
        re = sum(x[j] * math.cos(2 * math.pi * k * j / n) for j in range(n))
        im = -sum(x[j] * math.sin(2 * math.pi * k * j / n) for j in range(n))
        out.append(math.hypot(re, im))
    return np.array(out)


def naive_psi(mags, low, up, step, fs):
    n = len(mags)
    k_bins = int(round((up - low) / step))
    psi = []
    for k in range(1, k_bins + 1):
        f_min = low + (k - 1) * step
        f_max = low + k * step
        lo = int(math.floor(n * f_min / fs + 1e-9))
        hi = int(math.floor(n * f_max / fs + 1e-9))
        psi.append(sum(mags[i] for i in range(lo, hi + 1)))
    return np.array(psi)


def brute_sign_changes(x):
    d = [x[i + 1] - x[i] for i in range(len(x) - 1)]
    return sum(1 for i in range(len(d) - 1) if d[i] * d[i + 1] < 0)


def loop_higuchi(x, k_max):
    x = list(map(float, x))
    n = len(x)
    log_l, log_inv_k = [], []
    for k in range(1, k_max + 1):
        lengths = []
        for m in range(1, k + 1):
            n_max = (n - m) // k
            total = sum(abs(x[m - 1 + i * k] - x[m - 1 + (i - 1) * k]) for i in range(1, n_max + 1))
            lengths.append(total * (n - 1) / (n_max * k) / k)
        log_l.append(math.log(sum(lengths) / k))
        log_inv_k.append(math.log(1.0 / k))
    return float(np.polyfit(log_inv_k, log_l, 1)[0])


def _sine(freq, n, fs=FS, phase=0.3):
    return np.sin(2 * np.pi * freq * np.arange(n) / fs + phase)


# --------------------------------------------------------------------------
# FFT and spectral intensity
# --------------------------------------------------------------------------

class TestFft:
    def test_impulse_is_flat(self):
        x = np.zeros(8)
        x[0] = 1.0
        np.testing.assert_allclose(fft_magnitudes(x), 1.0)

    def test_constant(self):
        m = fft_magnitudes(np.full(16, -2.5))
        assert m[0] == pytest.approx(40.0)
        np.testing.assert_allclose(m[1:], 0.0, atol=1e-12)

    def test_random_64_matches_naive(self, rng):
        x = rng.normal(size=64)
        np.testing.assert_allclose(fft_magnitudes(x), naive_dft_magnitudes(x), rtol=1e-9, atol=1e-9)

    def test_too_short(self):
        with pytest.raises(InputError):
            fft_magnitudes([1.0])


class TestBands:
    @pytest.mark.parametrize("band,k", [(STANDARD_BANDS[0], 30), (STANDARD_BANDS[1], 16), (STANDARD_BANDS[2], 13)])
    def test_standard_bins(self, band, k):
        assert band.n_bins == k

    def test_2hz_edges(self):
        np.testing.assert_allclose(STANDARD_BANDS[1].edges(), np.arange(2, 35, 2))

    @pytest.mark.parametrize("text", ["2:32", "a:b:c", "2:3:0", "5:2:1", "2:33:2"])
    def test_invalid(self, text):
        with pytest.raises(ConfigurationError):
            SpectralBandSpec.parse(text)

    def test_parse_round_trip(self):
        for band in STANDARD_BANDS:
            assert SpectralBandSpec.parse(str(band)) == band

    def test_band_above_nyquist(self):
        with pytest.raises(ConfigurationError):
            power_spectral_intensity(np.ones(64), SpectralBandSpec(2, 34, 2), 50.0)


class TestPsi:
    def test_zero_signal(self):
        psi = power_spectral_intensity(fft_magnitudes(np.zeros(4096)), STANDARD_BANDS[0], FS)
        assert np.all(psi == 0)

    @pytest.mark.parametrize("band", STANDARD_BANDS)
    def test_matches_naive(self, band, rng):
        x = rng.normal(size=256)
        mags = naive_dft_magnitudes(x)
        ours = power_spectral_intensity(fft_magnitudes(x), band, FS)
        np.testing.assert_allclose(ours, naive_psi(mags, band.f_low_hz, band.f_up_hz,
                                                   band.f_step_hz, FS), rtol=1e-9)

    def test_line_centred_sine_concentrates(self):
        # 205 * fs / N Hz lies on a DFT line inside the 10-11 Hz bin.
        n = 4096
        freq = 205 * FS / n
        rir = relative_intensity_ratio(
            power_spectral_intensity(fft_magnitudes(_sine(freq, n, phase=0.0)), STANDARD_BANDS[0], FS))
        assert int(np.argmax(rir)) == 8
        assert rir[8] > 0.95

    def test_10hz_sine_oracle(self):
        # A 10 Hz tone is not periodic in 4096 samples; its line falls between
        # DFT bins 204 and 205, so leakage and the shared 10 Hz edge line split
        # the intensity. The oracle value comes from the naive DFT.
        n = 4096
        x = np.sin(2 * np.pi * 10.0 * np.arange(n) / FS)
        rir = relative_intensity_ratio(power_spectral_intensity(fft_magnitudes(x), STANDARD_BANDS[0], FS))
        assert int(np.argmax(rir)) == 8  # the 10-11 Hz bin
        assert rir[8] == pytest.approx(0.4974213176102497, rel=1e-9)
        assert rir[7] + rir[8] > 0.70

    @pytest.mark.xfail(strict=True, reason="literal 10 Hz tone at N=4096 leaks; see decisions ledger")
    def test_10hz_sine_holds_95_percent(self):
        n = 4096
        x = np.sin(2 * np.pi * 10.0 * np.arange(n) / FS)
        rir = relative_intensity_ratio(power_spectral_intensity(fft_magnitudes(x), STANDARD_BANDS[0], FS))
        assert rir.max() > 0.95


class TestRir:
    def test_direct_ratio(self):
        np.testing.assert_allclose(relative_intensity_ratio([2, 2, 4]), [0.25, 0.25, 0.5])

    def test_all_zero_is_uniform(self):
        np.testing.assert_allclose(relative_intensity_ratio(np.zeros(13)), np.full(13, 1 / 13))

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.floats(0, 1e6), min_size=1, max_size=40).filter(lambda v: sum(v) > 0))
    def test_sums_to_one(self, psi):
        rir = relative_intensity_ratio(psi)
        assert abs(rir.sum() - 1) < 1e-9
        assert np.all((rir >= 0) & (rir <= 1))


# --------------------------------------------------------------------------
# Fractal dimensions
# --------------------------------------------------------------------------

def _pfd_formula(n, n_delta):
    return math.log10(n) / (math.log10(n) + math.log10(n / (n + 0.4 * n_delta)))


class TestPetrosian:
    def test_constant_and_ramp(self):
        assert petrosian_fd(np.full(100, 3.0)) == 1.0
        assert petrosian_fd(np.arange(4096.0)) == 1.0

    def test_alternating_64(self):
        x = np.array([1.0, -1.0] * 32)
        n_delta = brute_sign_changes(x)
        assert n_delta == 62
        assert petrosian_fd(x) == pytest.approx(_pfd_formula(64, n_delta), rel=1e-12)

    @pytest.mark.xfail(strict=True, reason="brute force gives 62 sign changes, not 61; see ledger")
    def test_alternating_64_literal_count(self):
        x = np.array([1.0, -1.0] * 32)
        assert petrosian_fd(x) == pytest.approx(_pfd_formula(64, 61), rel=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=200))
    def test_matches_brute_force_and_bounds(self, values):
        x = np.array(values)
        n = len(x)
        expected = _pfd_formula(n, brute_sign_changes(x))
        assert petrosian_fd(x) == pytest.approx(expected, rel=1e-12)
        assert 1.0 - 1e-12 <= petrosian_fd(x) <= _pfd_formula(n, n - 2) + 1e-12

    def test_too_short(self):
        with pytest.raises(InputError):
            petrosian_fd([1.0, 2.0])


class TestHiguchi:
    def test_ramp(self):
        assert higuchi_fd(0.37 * np.arange(4096.0), 5) == pytest.approx(1.0, abs=1e-3)

    def test_constant_is_one(self):
        assert higuchi_fd(np.full(4096, 2.0), 5) == 1.0

    def test_period_k_pattern_is_degenerate(self):
        # Period-2 signal: the k=2 curve length is exactly zero.
        assert higuchi_fd(np.tile([0.0, 1.0], 50), 5) == 0.0

    def test_matches_loop_oracle(self, rng):
        for n, k_max in [(64, 5), (101, 7), (300, 3)]:
            x = rng.normal(size=n).cumsum()
            assert higuchi_fd(x, k_max) == pytest.approx(loop_higuchi(x, k_max), rel=1e-9)

    def test_white_noise_is_two(self):
        vals = [higuchi_fd(np.random.default_rng(s).normal(size=4096), 5) for s in range(100)]
        assert abs(np.mean(vals) - 2.0) < 0.1

    def test_sine_is_near_one(self):
        for freq in (1.0, 5.0, 10.0):
            assert 1.0 < higuchi_fd(_sine(freq, 4096), 5) < 1.3

    @settings(max_examples=25, deadline=None)
    @given(a=st.floats(-50, 50).filter(lambda v: abs(v) > 1e-3), b=st.floats(-1e3, 1e3),
           seed=st.integers(0, 2**16))
    def test_affine_invariance(self, a, b, seed):
        x = np.random.default_rng(seed).normal(size=256)
        assert higuchi_fd(a * x + b, 5) == pytest.approx(higuchi_fd(x, 5), abs=1e-9)

    def test_preconditions(self):
        with pytest.raises(InputError):
            higuchi_fd(np.arange(9.0), 5)
        with pytest.raises(InputError):
            higuchi_fd(np.arange(100.0), 1)


# --------------------------------------------------------------------------
# Hjorth
# --------------------------------------------------------------------------

class TestHjorth:
    def test_constant(self):
        assert hjorth_params(np.full(50, 4.0)) == (0.0, 0.0)

    @pytest.mark.parametrize("ratio", [0.01, 0.05, 0.1])
    def test_sine_closed_form(self, ratio):
        x = np.sin(2 * np.pi * ratio * np.arange(8192) + 0.4)
        mobility, complexity = hjorth_params(x)
        assert mobility == pytest.approx(2 * math.sin(math.pi * ratio), rel=0.01)
        assert complexity == pytest.approx(1.0, rel=0.02)

    def test_matches_loop_definition(self, rng):
        x = rng.normal(size=300)
        n = len(x)
        d = [x[i + 1] - x[i] for i in range(n - 1)]
        e = [d[i + 1] - d[i] for i in range(n - 2)]
        a0 = sum(v * v for v in x) / n
        a1 = sum(v * v for v in d) / (n - 1)
        a2 = sum(v * v for v in e) / (n - 2)
        mob = math.sqrt(a1 / a0)
        comp = math.sqrt(a2 / a1) / mob
        assert hjorth_params(x) == pytest.approx((mob, comp), rel=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(a=st.floats(-1e3, 1e3).filter(lambda v: abs(v) > 1e-6), seed=st.integers(0, 2**16))
    def test_scale_invariance(self, a, seed):
        x = np.random.default_rng(seed).normal(size=128)
        np.testing.assert_allclose(hjorth_params(a * x), hjorth_params(x), rtol=1e-9)

    def test_too_short(self):
        with pytest.raises(InputError):
            hjorth_params([1.0, 2.0])


# --------------------------------------------------------------------------
# Assembly and normalization
# --------------------------------------------------------------------------

class TestExtract:
    def test_dimensions(self, rng):
        x = rng.normal(size=8192)
        assert len(extract(x, ExtractionConfig())) == 34
        cfg = ExtractionConfig(8192, FilterSpec(56.0), SpectralBandSpec(2, 34.5, 2.5))
        assert len(extract(x, cfg)) == 17

    def test_layout_and_determinism(self, rng):
        cfg = ExtractionConfig(1024, FilterSpec(40.0), SpectralBandSpec(2, 34, 2))
        x = rng.normal(size=1024)
        seg = Segment("Cz", 0, x)
        v1, v2 = extract(seg, cfg), extract(seg, cfg)
        assert v1.values.tobytes() == v2.values.tobytes()
        assert v1.config_id == cfg.fingerprint
        assert v1.pfd == petrosian_fd(x)
        assert v1.hfd == pytest.approx(higuchi_fd(x, 5), rel=1e-12)
        assert (v1.mobility, v1.complexity) == pytest.approx(hjorth_params(x), rel=1e-12)
        assert abs(v1.rir.sum() - 1) < 1e-9

    def test_matrix_matches_single(self, rng):
        cfg = ExtractionConfig(512, FilterSpec(40.0), SpectralBandSpec(2, 32, 1))
        xs = rng.normal(size=(3, 2, 512))
        mat = extract_matrix(xs, cfg)
        assert mat.shape == (3, 2, 34)
        np.testing.assert_array_equal(mat[1, 1], extract(xs[1, 1], cfg).values)

    def test_length_mismatch(self, rng):
        with pytest.raises(InputError):
            extract(rng.normal(size=100), ExtractionConfig())

    def test_config_invariants(self):
        with pytest.raises(ConfigurationError):
            ExtractionConfig(8192, FilterSpec(30.0), SpectralBandSpec(2, 32, 1))
        with pytest.raises(ConfigurationError):
            ExtractionConfig(8, k_max=5)
        with pytest.raises(ConfigurationError):
            ExtractionConfig(8192, FilterSpec(120.0))

    def test_fingerprint_round_trip(self):
        cfg = ExtractionConfig(4096, FilterSpec(46.0), SpectralBandSpec(2, 34.5, 2.5))
        assert ExtractionConfig.from_dict(cfg.to_dict()) == cfg
        assert ExtractionConfig.from_dict(cfg.to_dict()).fingerprint == cfg.fingerprint
        assert cfg.fingerprint != ExtractionConfig().fingerprint


class TestNormalizer:
    def test_mean_and_one_sd(self):
        norm = fit_normalizer([[0.0], [2.0]])
        assert apply_normalizer(norm, np.array([1.0]))[0] == 0.0
        assert apply_normalizer(norm, np.array([2.0]))[0] == 1.0

    def test_constant_dimension(self):
        norm = fit_normalizer([[1.0, 5.0], [3.0, 5.0], [2.0, 5.0]])
        out = apply_normalizer(norm, np.array([[0.0, 7.0], [9.0, -1.0]]))
        np.testing.assert_array_equal(out[:, 1], 0.0)

    def test_feature_vector_in_feature_vector_out(self):
        fv = FeatureVector(np.array([1.0, 2.0, 3.0, 4.0, 5.0]), 1, "abc")
        norm = fit_normalizer([fv, FeatureVector(np.zeros(5), 1, "abc")])
        out = apply_normalizer(norm, fv)
        assert isinstance(out, FeatureVector) and out.config_id == "abc"

    def test_errors(self):
        with pytest.raises(InputError):
            fit_normalizer([[1.0, 2.0]])
        with pytest.raises(InputError):
            fit_normalizer([[1.0, 2.0], [1.0]])
        with pytest.raises(InputError):
            apply_normalizer(fit_normalizer([[0.0], [1.0]]), np.array([1.0, 2.0]))
