"""Recording files, dataset manifests and the synthetic EEG generator.

On disk a recording is a CSV file: a header row of channel names, then one
row per sample with one column per channel, amplitudes in microvolts written
with shortest round-trip float formatting. A JSON manifest lists the files
together with subject id, label and sampling rate.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, InputError
from .signal import CHANNELS_10_20, Label, Recording

MANIFEST_VERSION = 1


# --------------------------------------------------------------------------
# CSV recordings
# --------------------------------------------------------------------------

def write_recording(recording: Recording, path) -> None:
    """Write ``recording`` as CSV (channels as columns)."""
    path = Path(path)
    rows = recording.samples.T.tolist()
    with path.open("w", newline="") as fh:
        fh.write(",".join(recording.channels) + "\n")
        fh.writelines(",".join(map(repr, row)) + "\n" for row in rows)


def load_recording(path, entry: "ManifestEntry | None" = None, *,
                   sample_rate_hz: float | None = None, subject_id: str | None = None,
                   label=Label.UNKNOWN) -> Recording:
    """Read a CSV recording.

    With a manifest ``entry`` the channel names and sampling rate are checked
    against it and its subject id and label are attached.
    """
    path = Path(path)
    try:
        header, samples = _read_csv_fast(path)
    except OSError as exc:
        raise InputError(f"{path}: cannot open ({exc.strerror})") from exc
    except (ValueError, _Malformed):
        try:
            header, samples = _read_csv_checked(path)
        except UnicodeDecodeError as exc:
            raise InputError(f"{path}: not a UTF-8 text file (byte {exc.start})") from None
    n_ch = len(header)

    if entry is not None:
        if list(entry.channel_names) and len(entry.channel_names) != n_ch:
            raise InputError(
                f"{path}: manifest lists {len(entry.channel_names)} channels, file has {n_ch}"
            )
        if list(entry.channel_names) and list(entry.channel_names) != header:
            raise InputError(f"{path}: channel names differ from the manifest entry")
        sample_rate_hz = entry.sample_rate_hz
        subject_id = entry.subject_id
        label = entry.label
    if sample_rate_hz is None:
        raise InputError(f"{path}: sampling rate unknown (no manifest entry or rate given)")
    return Recording(tuple(header), samples, sample_rate_hz,
                     subject_id if subject_id is not None else path.stem, label)


class _Malformed(Exception):
    pass


def _read_csv_fast(path: Path):
    """numpy parse; raises ``_Malformed`` whenever the checked reader should
    produce the diagnostic instead."""
    raw = path.read_bytes()
    text = raw.decode("utf-8", errors="strict")
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise _Malformed
    header = [h.strip() for h in lines[0].split(",")]
    if any(not h for h in header) or len(set(header)) != len(header) or '"' in lines[0]:
        raise _Malformed
    if len(lines) == 1:
        return header, np.empty((len(header), 0))
    data = np.loadtxt(io.StringIO(text), delimiter=",", skiprows=1, ndmin=2,
                      comments=None, dtype=np.float64)
    if data.shape != (len(lines) - 1, len(header)) or not np.all(np.isfinite(data)):
        raise _Malformed
    return header, np.ascontiguousarray(data.T)


def _read_csv_checked(path: Path):
    """Cell-by-cell reader that reports the first defect with its location."""
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InputError(f"{path}: empty file, expected a header row of channel names") from None
        except csv.Error as exc:
            raise InputError(f"{path}: line 1: {exc}") from exc
        header = [h.strip() for h in header]
        if not header or any(not h for h in header):
            raise InputError(f"{path}: line 1: header contains an empty channel name")
        if len(set(header)) != len(header):
            raise InputError(f"{path}: line 1: duplicate channel names in header")
        n_ch = len(header)
        rows = []
        try:
            for row in reader:
                line = reader.line_num
                if not row or (len(row) == 1 and not row[0].strip()):
                    raise InputError(f"{path}: line {line}: blank row")
                if len(row) != n_ch:
                    raise InputError(
                        f"{path}: line {line}: expected {n_ch} columns, found {len(row)}"
                    )
                values = []
                for col, cell in enumerate(row):
                    try:
                        v = float(cell)
                    except ValueError:
                        raise InputError(
                            f"{path}: line {line}, column {col + 1} ({header[col]}): "
                            f"cannot parse {cell!r} as a number"
                        ) from None
                    if not math.isfinite(v):
                        raise InputError(
                            f"{path}: line {line}, column {col + 1} ({header[col]}): "
                            f"non-finite value {cell!r}"
                        )
                    values.append(v)
                rows.append(values)
        except csv.Error as exc:
            raise InputError(f"{path}: line {reader.line_num}: {exc}") from exc
    return header, np.array(rows, dtype=np.float64).reshape(len(rows), n_ch).T


# --------------------------------------------------------------------------
# Manifests
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ManifestEntry:
    data_path: str
    subject_id: str
    label: Label
    sample_rate_hz: float
    channel_names: tuple = ()

    def to_dict(self) -> dict:
        return {
            "path": self.data_path,
            "subject_id": self.subject_id,
            "label": Label(self.label).value,
            "sample_rate_hz": self.sample_rate_hz,
            "channel_names": list(self.channel_names),
        }


@dataclass
class DatasetManifest:
    entries: list
    format_version: int = MANIFEST_VERSION
    root: Path = field(default_factory=Path)

    def __post_init__(self):
        seen = set()
        for e in self.entries:
            if e.data_path in seen:
                raise InputError(f"manifest lists {e.data_path!r} twice")
            seen.add(e.data_path)
            if Label(e.label) not in (Label.EPILEPTIC, Label.HEALTHY):
                raise InputError(f"{e.data_path}: label must be Epileptic or Healthy")
            if not e.sample_rate_hz > 0:
                raise InputError(f"{e.data_path}: sample rate must be positive")

    def resolve(self, entry: ManifestEntry) -> Path:
        p = Path(entry.data_path)
        return p if p.is_absolute() else self.root / p

    def load_all(self) -> list:
        return [load_recording(self.resolve(e), e) for e in self.entries]

    def to_dict(self) -> dict:
        return {"format_version": self.format_version,
                "entries": [e.to_dict() for e in self.entries]}


def write_manifest(manifest: DatasetManifest, path) -> None:
    Path(path).write_text(json.dumps(manifest.to_dict(), indent=2) + "\n")


def read_manifest(path) -> DatasetManifest:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise InputError(f"{path}: cannot read manifest ({exc.strerror})") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(doc, dict) or "format_version" not in doc:
        raise InputError(f"{path}: manifest must be an object with a format_version field")
    if doc["format_version"] != MANIFEST_VERSION:
        raise InputError(f"{path}: unsupported manifest format_version {doc['format_version']!r}")
    entries = []
    for i, raw in enumerate(doc.get("entries", [])):
        try:
            entries.append(ManifestEntry(
                data_path=str(raw["path"]),
                subject_id=str(raw["subject_id"]),
                label=Label(raw["label"]),
                sample_rate_hz=float(raw["sample_rate_hz"]),
                channel_names=tuple(raw.get("channel_names", ())),
            ))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"{path}: entry {i}: invalid or missing field ({exc})") from exc
    return DatasetManifest(entries, doc["format_version"], path.parent)


# --------------------------------------------------------------------------
# Synthetic EEG
# --------------------------------------------------------------------------

DEFAULT_BACKGROUND = ((2.0, 20.0), (6.0, 10.0), (10.0, 15.0), (20.0, 5.0))


@dataclass(frozen=True)
class SynthSpec:
    """Parameters of one synthetic recording.

    Background: a sum of sinusoids ``(freq_hz, amplitude_uv)`` with a random
    phase per channel, plus white Gaussian noise. Epileptic recordings also
    carry Gabor-shaped sharp transients (carrier in ``spike_band``, 100-200 ms
    support) at Poisson times with rate ``spike_rate_hz``, shared across
    channels with a random per-channel gain in [0.5, 1].
    """

    seed: int
    duration_s: float
    label: Label = Label.HEALTHY
    sample_rate_hz: float = 200.0
    n_channels: int = 22
    background_bands: tuple = DEFAULT_BACKGROUND
    noise_sd_uv: float = 5.0
    spike_rate_hz: float = 0.0
    spike_band: tuple = (15.0, 50.0)
    spike_amplitude_uv: float = 40.0
    modulation_depth: float = 0.0
    subject_id: str = ""

    def __post_init__(self):
        label = Label(self.label)
        object.__setattr__(self, "label", label)
        object.__setattr__(self, "background_bands",
                           tuple((float(f), float(a)) for f, a in self.background_bands))
        if not self.duration_s > 0:
            raise ConfigurationError("duration_s must be positive")
        if not self.sample_rate_hz > 0:
            raise ConfigurationError("sample_rate_hz must be positive")
        if int(self.n_channels) != self.n_channels or self.n_channels < 1:
            raise ConfigurationError("n_channels must be a positive integer")
        if self.noise_sd_uv < 0:
            raise ConfigurationError("noise_sd_uv must be non-negative")
        if not 0 <= self.modulation_depth < 1:
            raise ConfigurationError("modulation_depth must be in [0, 1)")
        if self.spike_rate_hz < 0:
            raise ConfigurationError("spike_rate_hz must be non-negative")
        if label is Label.HEALTHY and self.spike_rate_hz != 0:
            raise ConfigurationError("healthy recordings cannot contain spikes")
        lo, hi = self.spike_band
        if not (0 < lo < hi < self.sample_rate_hz / 2):
            raise ConfigurationError(f"spike band {self.spike_band} must lie inside (0, Nyquist)")
        for f, _ in self.background_bands:
            if not 0 < f < self.sample_rate_hz / 2:
                raise ConfigurationError(f"background frequency {f} Hz outside (0, Nyquist)")

    @property
    def n_samples(self) -> int:
        return int(round(self.duration_s * self.sample_rate_hz))

    def channel_names(self) -> tuple:
        if self.n_channels == len(CHANNELS_10_20):
            return CHANNELS_10_20
        return tuple(f"Ch{i + 1}" for i in range(self.n_channels))


def _streams(seed: int):
    phase, noise, spikes = np.random.SeedSequence(int(seed)).spawn(3)
    return (np.random.default_rng(phase), np.random.default_rng(noise),
            np.random.default_rng(spikes))


@dataclass(frozen=True)
class SpikeEvents:
    times_s: np.ndarray
    freqs_hz: np.ndarray
    support_s: np.ndarray
    gains: np.ndarray  # (n_channels, n_events)

    def __len__(self) -> int:
        return len(self.times_s)


def spike_events(spec: SynthSpec) -> SpikeEvents:
    """The transient events :func:`synthesize` injects for ``spec``."""
    _, _, rng = _streams(spec.seed)
    if spec.spike_rate_hz == 0:
        return SpikeEvents(np.empty(0), np.empty(0), np.empty(0), np.empty((spec.n_channels, 0)))
    count = int(rng.poisson(spec.spike_rate_hz * spec.duration_s))
    times = np.sort(rng.uniform(0.0, spec.duration_s, count))
    freqs = rng.uniform(spec.spike_band[0], spec.spike_band[1], count)
    support = rng.uniform(0.1, 0.2, count)
    gains = rng.uniform(0.5, 1.0, (spec.n_channels, count))
    return SpikeEvents(times, freqs, support, gains)


def synthesize(spec: SynthSpec) -> Recording:
    """Generate a recording; the output depends only on ``spec``."""
    phase_rng, noise_rng, _ = _streams(spec.seed)
    n = spec.n_samples
    fs = spec.sample_rate_hz
    t = np.arange(n) / fs
    x = np.zeros((spec.n_channels, n))
    n_bands = len(spec.background_bands)
    phases = phase_rng.uniform(0.0, 2 * np.pi, (spec.n_channels, n_bands))
    mod_freq = phase_rng.uniform(1 / 200, 1 / 60, (spec.n_channels, n_bands))
    mod_phase = phase_rng.uniform(0.0, 2 * np.pi, (spec.n_channels, n_bands))
    for b, (freq, amp) in enumerate(spec.background_bands):
        envelope = amp
        if spec.modulation_depth:
            envelope = amp * (1 + spec.modulation_depth * np.sin(
                2 * np.pi * mod_freq[:, b:b + 1] * t[np.newaxis, :] + mod_phase[:, b:b + 1]))
        x += envelope * np.sin(2 * np.pi * freq * t[np.newaxis, :] + phases[:, b:b + 1])
    x += noise_rng.normal(0.0, spec.noise_sd_uv, (spec.n_channels, n)) if spec.noise_sd_uv else 0.0

    events = spike_events(spec)
    for e in range(len(events)):
        half = events.support_s[e] / 2
        lo = max(0, int(math.floor((events.times_s[e] - half) * fs)))
        hi = min(n, int(math.ceil((events.times_s[e] + half) * fs)) + 1)
        tau = t[lo:hi] - events.times_s[e]
        sigma = events.support_s[e] / 6
        wave = np.exp(-0.5 * (tau / sigma) ** 2) * np.cos(2 * np.pi * events.freqs_hz[e] * tau)
        x[:, lo:hi] += spec.spike_amplitude_uv * events.gains[:, e:e + 1] * wave

    return Recording(spec.channel_names(), x, fs, spec.subject_id or f"synth-{spec.seed}",
                     spec.label)


def subject_specs(n_subjects: int, seed: int, duration_s: float, *, classes=("Epileptic", "Healthy"),
                  spike_rate_hz: float = 1.0, sample_rate_hz: float = 200.0,
                  n_channels: int = 22, noise_sd_uv: float = 8.0,
                  spike_amplitude_uv: float = 30.0, modulation_depth: float = 0.4) -> list:
    """One :class:`SynthSpec` per subject with per-subject background variation.

    Background amplitudes vary by +-20 % and frequencies by +-10 % between
    subjects; each epileptic subject gets its own spike rate in
    ``[0.7, 1.3] * spike_rate_hz``. Rhythm amplitudes drift slowly
    (``modulation_depth``) so frames of one subject are not near-copies.
    """
    if n_subjects < 1:
        raise ConfigurationError("need at least one subject per class")
    specs = []
    for label in classes:
        label = Label(label)
        cls_idx = 0 if label is Label.EPILEPTIC else 1
        for i in range(n_subjects):
            ss = np.random.SeedSequence([int(seed), cls_idx, i])
            sub_seed = int(ss.generate_state(1)[0])
            rng = np.random.default_rng(ss.spawn(1)[0])
            bands = tuple((f * rng.uniform(0.9, 1.1), a * rng.uniform(0.8, 1.2))
                          for f, a in DEFAULT_BACKGROUND)
            rate = spike_rate_hz * rng.uniform(0.7, 1.3) if label is Label.EPILEPTIC else 0.0
            prefix = "epi" if label is Label.EPILEPTIC else "ctl"
            specs.append(SynthSpec(
                seed=sub_seed, duration_s=duration_s, label=label,
                sample_rate_hz=sample_rate_hz, n_channels=n_channels,
                background_bands=bands, noise_sd_uv=noise_sd_uv, spike_rate_hz=rate,
                spike_amplitude_uv=spike_amplitude_uv, modulation_depth=modulation_depth,
                subject_id=f"{prefix}{i + 1:02d}",
            ))
    return specs


def generate_dataset(out_dir, specs) -> DatasetManifest:
    """Synthesize every spec into ``out_dir`` and write ``manifest.json``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for spec in specs:
        rec = synthesize(spec)
        name = f"{rec.subject_id}.csv"
        write_recording(rec, out_dir / name)
        entries.append(ManifestEntry(name, rec.subject_id, rec.label, rec.sample_rate_hz,
                                     rec.channels))
    manifest = DatasetManifest(entries, MANIFEST_VERSION, out_dir)
    write_manifest(manifest, out_dir / "manifest.json")
    return manifest
