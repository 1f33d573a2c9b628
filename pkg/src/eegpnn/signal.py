"""Recording containers, zero-phase low-pass filtering and segmentation."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import signal as sps

from .errors import ConfigurationError, InputError


class Label(str, enum.Enum):
    EPILEPTIC = "Epileptic"
    HEALTHY = "Healthy"
    UNKNOWN = "Unknown"

    def __str__(self) -> str:
        return self.value


# 22-channel 10-20 referential montage in a fixed, conventional row order.
CHANNELS_10_20 = (
    "Fp1", "Fp2", "F3", "F4", "C3", "C4", "P3", "P4", "O1", "O2", "F7",
    "F8", "T3", "T4", "T5", "T6", "A1", "A2", "Fz", "Pz", "Cz", "Oz",
)


@dataclass(frozen=True)
class Recording:
    """Multichannel EEG recording.

    Parameters
    ----------
    channels : tuple of str
        Unique channel names, one per row of ``samples``.
    samples : ndarray, shape (n_channels, n_samples)
        Amplitudes in microvolts.
    sample_rate_hz : float
    subject_id : str
    label : Label
    """

    channels: tuple
    samples: np.ndarray
    sample_rate_hz: float
    subject_id: str = ""
    label: Label = Label.UNKNOWN

    def __post_init__(self):
        channels = tuple(str(c) for c in self.channels)
        samples = np.array(self.samples, dtype=np.float64, copy=True)
        if samples.ndim == 1 and len(channels) == 1:
            samples = samples[np.newaxis, :]
        if samples.ndim != 2:
            raise InputError("samples must be a 2-D array (n_channels, n_samples)")
        if samples.shape[0] != len(channels):
            raise InputError(
                f"{len(channels)} channel names for {samples.shape[0]} sample rows"
            )
        if len(set(channels)) != len(channels):
            raise InputError("channel names must be unique")
        rate = float(self.sample_rate_hz)
        if not rate > 0 or not math.isfinite(rate):
            raise ConfigurationError(f"sample_rate_hz must be positive, got {rate}")
        samples.setflags(write=False)
        object.__setattr__(self, "channels", channels)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate_hz", rate)
        object.__setattr__(self, "label", Label(self.label))

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    @property
    def nyquist_hz(self) -> float:
        return self.sample_rate_hz / 2.0

    def channel(self, name: str) -> np.ndarray:
        return self.samples[self.channels.index(name)]

    def with_samples(self, samples: np.ndarray) -> "Recording":
        return Recording(self.channels, samples, self.sample_rate_hz,
                         self.subject_id, self.label)


@dataclass(frozen=True)
class Segment:
    channel: str
    frame_index: int
    samples: np.ndarray
    label: Label = Label.UNKNOWN
    subject_id: str = ""

    def __len__(self) -> int:
        return len(self.samples)


@dataclass(frozen=True)
class FilterSpec:
    cutoff_hz: float
    order: int = 4
    kind: str = "lowpass"

    def __post_init__(self):
        if not self.cutoff_hz > 0:
            raise ConfigurationError(f"cutoff must be positive, got {self.cutoff_hz}")
        if int(self.order) != self.order or self.order < 1:
            raise ConfigurationError(f"filter order must be a positive integer, got {self.order}")
        if self.kind != "lowpass":
            raise ConfigurationError(f"unsupported filter kind {self.kind!r}")

    def validate_for(self, sample_rate_hz: float) -> None:
        if self.cutoff_hz >= sample_rate_hz / 2.0:
            raise ConfigurationError(
                f"cutoff {self.cutoff_hz} Hz is not below Nyquist ({sample_rate_hz / 2.0} Hz)"
            )


def edge_trim(spec: FilterSpec) -> int:
    """Samples at each end excluded from accuracy checks of filtered output."""
    return max(3 * spec.order, 50)


def design_lowpass(spec: FilterSpec, sample_rate_hz: float) -> np.ndarray:
    """Second-order sections of the single-pass Butterworth prototype.

    The prototype edge is shifted so that the *forward-backward* response,
    ``|H(f)|**2``, is exactly -3 dB at ``spec.cutoff_hz``. A plain Butterworth
    at the cutoff would sit at -6 dB once applied twice.
    """
    spec.validate_for(sample_rate_hz)
    warped = math.tan(math.pi * spec.cutoff_hz / sample_rate_hz)
    warped /= (math.sqrt(2.0) - 1.0) ** (1.0 / (2 * spec.order))
    design_edge = 2.0 * math.atan(warped) / math.pi  # fraction of Nyquist
    return sps.butter(spec.order, design_edge, btype="lowpass", output="sos")


def magnitude_response(spec: FilterSpec, sample_rate_hz: float, freqs_hz) -> np.ndarray:
    """Zero-phase (forward-backward) magnitude at the given frequencies."""
    sos = design_lowpass(spec, sample_rate_hz)
    _, h = sps.sosfreqz(sos, worN=np.atleast_1d(np.asarray(freqs_hz, dtype=float)),
                        fs=sample_rate_hz)
    return np.abs(h) ** 2


def low_pass_filter(recording: Recording, spec: FilterSpec) -> Recording:
    """Zero-phase low-pass filter every channel of ``recording``."""
    spec.validate_for(recording.sample_rate_hz)
    if recording.n_samples == 0 or len(recording.channels) == 0:
        raise InputError(f"cannot filter an empty recording ({recording.subject_id!r})")
    sos = design_lowpass(spec, recording.sample_rate_hz)
    # sosfiltfilt pads by reflection; very short inputs need a smaller pad.
    padlen = min(3 * (2 * len(sos) + 1), recording.n_samples - 1)
    filtered = sps.sosfiltfilt(sos, recording.samples, axis=1, padlen=padlen)
    return recording.with_samples(filtered)


def segment(recording: Recording, segment_length: int) -> list[dict[str, Segment]]:
    """Cut every channel into consecutive non-overlapping windows.

    Returns one dict per frame mapping channel name to its :class:`Segment`.
    Trailing samples that do not fill a window are dropped.
    """
    if int(segment_length) != segment_length or segment_length < 2:
        raise InputError(f"segment_length must be an integer >= 2, got {segment_length}")
    segment_length = int(segment_length)
    n_frames = recording.n_samples // segment_length
    frames = []
    for k in range(n_frames):
        window = recording.samples[:, k * segment_length:(k + 1) * segment_length]
        frames.append({
            name: Segment(name, k, window[c], recording.label, recording.subject_id)
            for c, name in enumerate(recording.channels)
        })
    return frames


def frame_matrix(recording: Recording, segment_length: int) -> np.ndarray:
    """Segments as an array of shape (n_frames, n_channels, segment_length)."""
    if int(segment_length) != segment_length or segment_length < 2:
        raise InputError(f"segment_length must be an integer >= 2, got {segment_length}")
    segment_length = int(segment_length)
    n_frames = recording.n_samples // segment_length
    used = recording.samples[:, :n_frames * segment_length]
    return used.reshape(len(recording.channels), n_frames, segment_length).transpose(1, 0, 2)
