"""Spectral, fractal and Hjorth features of single-channel EEG segments.

A feature vector for one segment is laid out as::

    [RIR_1 .. RIR_K, PFD, HFD, mobility, complexity]

where ``K`` is the number of spectral bins of the configured band.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ConfigurationError, InputError
from .signal import FilterSpec, Segment

# Tolerance for deciding that (f_up - f_low) / f_step is an integer and for
# flooring bin edges that land exactly on a DFT line.
_EDGE_EPS = 1e-9


@dataclass(frozen=True)
class SpectralBandSpec:
    f_low_hz: float
    f_up_hz: float
    f_step_hz: float

    def __post_init__(self):
        if not (self.f_low_hz >= 0 and self.f_up_hz > self.f_low_hz and self.f_step_hz > 0):
            raise ConfigurationError(
                f"invalid band {self.f_low_hz}-{self.f_up_hz} Hz step {self.f_step_hz}"
            )
        ratio = (self.f_up_hz - self.f_low_hz) / self.f_step_hz
        if abs(ratio - round(ratio)) > _EDGE_EPS * max(1.0, ratio) or round(ratio) < 1:
            raise ConfigurationError(
                f"band width {self.f_up_hz - self.f_low_hz} Hz is not a whole number "
                f"of {self.f_step_hz} Hz bins"
            )

    @property
    def n_bins(self) -> int:
        return int(round((self.f_up_hz - self.f_low_hz) / self.f_step_hz))

    def edges(self) -> np.ndarray:
        """Bin boundaries ``f_low + j * f_step`` for ``j = 0..K``."""
        return self.f_low_hz + self.f_step_hz * np.arange(self.n_bins + 1)

    @classmethod
    def parse(cls, text: str) -> "SpectralBandSpec":
        """Parse ``low:up:step`` (e.g. ``2:32:1``)."""
        parts = str(text).split(":")
        if len(parts) != 3:
            raise ConfigurationError(f"band must be low:up:step, got {text!r}")
        try:
            low, up, step = (float(p) for p in parts)
        except ValueError:
            raise ConfigurationError(f"band must be numeric low:up:step, got {text!r}") from None
        return cls(low, up, step)

    def __str__(self) -> str:
        return ":".join(_fmt_num(v) for v in (self.f_low_hz, self.f_up_hz, self.f_step_hz))


# The three band/bin settings of the parameter table.
STANDARD_BANDS = (
    SpectralBandSpec(2.0, 32.0, 1.0),
    SpectralBandSpec(2.0, 34.0, 2.0),
    SpectralBandSpec(2.0, 34.5, 2.5),
)


def _fmt_num(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


@dataclass(frozen=True)
class ExtractionConfig:
    """Parameters of one feature-extraction configuration."""

    segment_length: int = 8192
    filter: FilterSpec = FilterSpec(56.0)
    band: SpectralBandSpec = SpectralBandSpec(2.0, 32.0, 1.0)
    k_max: int = 5
    sample_rate_hz: float = 200.0

    def __post_init__(self):
        if int(self.segment_length) != self.segment_length or self.segment_length < 3:
            raise ConfigurationError(f"segment_length must be an integer >= 3, got {self.segment_length}")
        if int(self.k_max) != self.k_max or self.k_max < 2:
            raise ConfigurationError(f"k_max must be an integer >= 2, got {self.k_max}")
        if self.segment_length < 2 * self.k_max:
            raise ConfigurationError("segment_length must be at least 2 * k_max")
        if not self.sample_rate_hz > 0:
            raise ConfigurationError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")
        if self.band.f_up_hz > self.filter.cutoff_hz:
            raise ConfigurationError(
                f"band upper edge {self.band.f_up_hz} Hz exceeds filter cutoff {self.filter.cutoff_hz} Hz"
            )
        self.filter.validate_for(self.sample_rate_hz)

    @property
    def n_features(self) -> int:
        return self.band.n_bins + 4

    def to_dict(self) -> dict:
        return {
            "segment_length": int(self.segment_length),
            "cutoff_hz": float(self.filter.cutoff_hz),
            "filter_order": int(self.filter.order),
            "band": [float(self.band.f_low_hz), float(self.band.f_up_hz), float(self.band.f_step_hz)],
            "k_max": int(self.k_max),
            "sample_rate_hz": float(self.sample_rate_hz),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExtractionConfig":
        return cls(
            segment_length=int(d["segment_length"]),
            filter=FilterSpec(float(d["cutoff_hz"]), int(d.get("filter_order", 4))),
            band=SpectralBandSpec(*(float(v) for v in d["band"])),
            k_max=int(d.get("k_max", 5)),
            sample_rate_hz=float(d.get("sample_rate_hz", 200.0)),
        )

    @property
    def fingerprint(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()[:16]

    def describe(self) -> str:
        return (f"length={self.segment_length} cutoff={_fmt_num(self.filter.cutoff_hz)}Hz "
                f"band={_fmt_num(self.band.f_low_hz)}-{_fmt_num(self.band.f_up_hz)}Hz "
                f"bin={_fmt_num(self.band.f_step_hz)}Hz")


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray
    n_rir: int
    config_id: str = ""

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return len(self.values)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)

    @property
    def rir(self) -> np.ndarray:
        return self.values[:self.n_rir]

    @property
    def pfd(self) -> float:
        return float(self.values[self.n_rir])

    @property
    def hfd(self) -> float:
        return float(self.values[self.n_rir + 1])

    @property
    def mobility(self) -> float:
        return float(self.values[self.n_rir + 2])

    @property
    def complexity(self) -> float:
        return float(self.values[self.n_rir + 3])


# --------------------------------------------------------------------------
# Spectral features
# --------------------------------------------------------------------------

def fft_magnitudes(samples) -> np.ndarray:
    """Magnitudes ``|X_k|`` of the length-N DFT of ``samples``."""
    x = np.asarray(samples, dtype=np.float64)
    if x.shape[-1] < 2:
        raise InputError("fft_magnitudes needs at least 2 samples")
    return np.abs(np.fft.fft(x, axis=-1))


def bin_index_bounds(band: SpectralBandSpec, n: int, sample_rate_hz: float) -> np.ndarray:
    """Inclusive DFT-line ranges ``[floor(N f_min / fs), floor(N f_max / fs)]`` per bin."""
    if band.f_up_hz > sample_rate_hz / 2.0:
        raise ConfigurationError(
            f"band upper edge {band.f_up_hz} Hz exceeds Nyquist ({sample_rate_hz / 2.0} Hz)"
        )
    lines = np.floor(n * band.edges() / sample_rate_hz + _EDGE_EPS).astype(np.int64)
    return np.column_stack([lines[:-1], lines[1:]])


def power_spectral_intensity(magnitudes, band: SpectralBandSpec, sample_rate_hz: float) -> np.ndarray:
    """Sum of spectral magnitudes inside each bin of ``band``.

    Bin ``k`` spans ``f_low + (k-1) f_step`` to ``f_low + k f_step``; both end
    lines are included, so a line on a shared edge counts toward both bins.
    Works on a single spectrum or on rows of a 2-D array.
    """
    mags = np.asarray(magnitudes, dtype=np.float64)
    n = mags.shape[-1]
    bounds = bin_index_bounds(band, n, sample_rate_hz)
    csum = np.concatenate([np.zeros(mags.shape[:-1] + (1,)), np.cumsum(mags, axis=-1)], axis=-1)
    psi = csum[..., bounds[:, 1] + 1] - csum[..., bounds[:, 0]]
    return np.maximum(psi, 0.0)


def relative_intensity_ratio(psi) -> np.ndarray:
    """PSI normalized to unit sum; an all-zero PSI maps to the uniform vector."""
    psi = np.asarray(psi, dtype=np.float64)
    if psi.shape[-1] < 1:
        raise InputError("need at least one spectral bin")
    total = psi.sum(axis=-1, keepdims=True)
    uniform = np.full_like(psi, 1.0 / psi.shape[-1])
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(total > 0, psi / np.where(total > 0, total, 1.0), uniform)


# --------------------------------------------------------------------------
# Fractal dimensions
# --------------------------------------------------------------------------

def petrosian_fd(samples) -> float | np.ndarray:
    """Petrosian fractal dimension from sign changes of the first difference."""
    x = np.asarray(samples, dtype=np.float64)
    n = x.shape[-1]
    if n < 3:
        raise InputError("petrosian_fd needs at least 3 samples")
    n_delta = kernels.sign_changes(x.reshape(-1, n)).astype(np.float64)
    log_n = math.log10(n)
    pfd = log_n / (log_n + np.log10(n / (n + 0.4 * n_delta)))
    return float(pfd[0]) if x.ndim == 1 else pfd.reshape(x.shape[:-1])


def higuchi_fd(samples, k_max: int = 5) -> float | np.ndarray:
    """Higuchi fractal dimension.

    Slope of the ordinary least-squares line through ``(ln(1/k), ln L(k))``
    for ``k = 1..k_max``.

    A constant signal (every curve length zero) returns 1, the value every
    non-flat straight line has. Any other signal with a zero curve length at
    some ``k`` (a pattern that repeats exactly with period ``k``) returns 0.
    """
    x = np.asarray(samples, dtype=np.float64)
    n = x.shape[-1]
    if k_max < 2:
        raise InputError(f"k_max must be >= 2, got {k_max}")
    if n < 2 * k_max:
        raise InputError(f"higuchi_fd needs at least 2*k_max={2 * k_max} samples, got {n}")
    lengths = kernels.higuchi_lengths(x.reshape(-1, n), k_max)
    degenerate = ~np.all(lengths > 0, axis=1)
    with np.errstate(divide="ignore"):
        y = np.log(np.where(degenerate[:, None], 1.0, lengths))
    t = np.log(1.0 / np.arange(1, k_max + 1))
    tc = t - t.mean()
    slope = ((y - y.mean(axis=1, keepdims=True)) @ tc) / (tc @ tc)
    slope[degenerate] = 0.0
    slope[np.all(lengths == 0, axis=1)] = 1.0
    return float(slope[0]) if x.ndim == 1 else slope.reshape(x.shape[:-1])


# --------------------------------------------------------------------------
# Hjorth parameters
# --------------------------------------------------------------------------

def hjorth_params(samples):
    """Hjorth mobility and complexity.

    Uses the mean squares of the signal, its first difference and its second
    difference. Constant input returns ``(0.0, 0.0)``.
    """
    x = np.asarray(samples, dtype=np.float64)
    n = x.shape[-1]
    if n < 3:
        raise InputError("hjorth_params needs at least 3 samples")
    d = np.diff(x, axis=-1)
    e = np.diff(d, axis=-1)
    a0 = np.sum(x * x, axis=-1) / n
    a1 = np.sum(d * d, axis=-1) / (n - 1)
    a2 = np.sum(e * e, axis=-1) / (n - 2)
    flat = np.ptp(x, axis=-1) == 0
    with np.errstate(invalid="ignore", divide="ignore"):
        mobility = np.sqrt(a1 / np.where(flat, 1.0, a0))
        complexity = np.sqrt(a2 / np.where(flat, 1.0, a1)) / np.where(flat, 1.0, mobility)
    mobility = np.where(flat, 0.0, mobility)
    complexity = np.where(flat, 0.0, complexity)
    if x.ndim == 1:
        return float(mobility), float(complexity)
    return mobility, complexity


# --------------------------------------------------------------------------
# Assembly
# --------------------------------------------------------------------------

def extract_matrix(segments, config: ExtractionConfig) -> np.ndarray:
    """Feature rows for a stack of segments, shape ``(n, K + 4)``."""
    x = np.atleast_2d(np.asarray(segments, dtype=np.float64))
    if x.shape[-1] != config.segment_length:
        raise InputError(
            f"segment length {x.shape[-1]} does not match configured {config.segment_length}"
        )
    flat = x.reshape(-1, config.segment_length)
    rir = relative_intensity_ratio(
        power_spectral_intensity(fft_magnitudes(flat), config.band, config.sample_rate_hz)
    )
    pfd = petrosian_fd(flat)
    hfd = higuchi_fd(flat, config.k_max)
    mobility, complexity = hjorth_params(flat)
    out = np.column_stack([rir, pfd, hfd, mobility, complexity])
    return out.reshape(x.shape[:-1] + (config.n_features,))


def extract(segment: Segment | np.ndarray, config: ExtractionConfig) -> FeatureVector:
    """Feature vector of one segment under ``config``."""
    samples = segment.samples if isinstance(segment, Segment) else segment
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 1:
        raise InputError("extract expects a single 1-D segment")
    values = extract_matrix(samples[np.newaxis, :], config)[0]
    return FeatureVector(values, config.band.n_bins, config.fingerprint)


# --------------------------------------------------------------------------
# Normalization
# --------------------------------------------------------------------------

def as_matrix(vectors) -> np.ndarray:
    """Stack FeatureVectors (or array rows) into a 2-D float array."""
    if isinstance(vectors, np.ndarray):
        mat = vectors.astype(np.float64, copy=False)
    else:
        rows = [np.asarray(v, dtype=np.float64) for v in vectors]
        if rows and len({r.shape for r in rows}) != 1:
            raise InputError("feature vectors differ in dimension")
        mat = np.array(rows, dtype=np.float64)
    if mat.ndim == 1:
        mat = mat[:, np.newaxis] if mat.size else mat.reshape(0, 0)
    if mat.ndim != 2:
        raise InputError("feature vectors must form a 2-D array")
    return mat


@dataclass(frozen=True)
class Normalizer:
    """Per-dimension z-score fitted on training data."""

    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        for name in ("mean", "std"):
            arr = np.array(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def dim(self) -> int:
        return len(self.mean)

    def transform(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.dim:
            raise InputError(f"vector dimension {x.shape[-1]} != normalizer dimension {self.dim}")
        scale = np.where(self.std > 0, self.std, 1.0)
        return np.where(self.std > 0, (x - self.mean) / scale, 0.0)

    def __eq__(self, other):
        if not isinstance(other, Normalizer):
            return NotImplemented
        return (np.array_equal(self.mean, other.mean)
                and np.array_equal(self.std, other.std))

    __hash__ = None


def fit_normalizer(vectors) -> Normalizer:
    """Fit mean and population standard deviation per dimension.

    Dimensions that are constant over the training set get ``std = 0`` and
    are mapped to 0 by :func:`apply_normalizer`.
    """
    mat = as_matrix(vectors)
    if mat.shape[0] < 2:
        raise InputError("fit_normalizer needs at least 2 vectors")
    mean = mat.mean(axis=0)
    std = mat.std(axis=0)
    std[np.ptp(mat, axis=0) == 0] = 0.0
    return Normalizer(mean, std)


def apply_normalizer(normalizer: Normalizer, vector):
    """Normalize a FeatureVector (returns a FeatureVector) or array rows."""
    if isinstance(vector, FeatureVector):
        return FeatureVector(normalizer.transform(vector.values), vector.n_rir, vector.config_id)
    return normalizer.transform(vector)
