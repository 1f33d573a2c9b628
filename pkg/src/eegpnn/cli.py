"""Command-line front end.

Exit codes: 0 success, 1 runtime or evaluation failure, 2 usage or
configuration error.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from collections import Counter
from pathlib import Path

import numpy as np

from . import __version__
from .ensemble import ChannelEnsemble, TiePolicy, decide_tally, load_ensemble, save_ensemble, vote_many
from .errors import ConfigurationError, EegPnnError, InputError
from .evaluate import (
    ALL_FEATURES, FeatureSelection, config_sweep, evaluate_config, feature_study, featurize,
    reference_grid, EvalReport, SweepResult,
)
from .features import ExtractionConfig, SpectralBandSpec
from .ingest import generate_dataset, load_recording, read_manifest, subject_specs
from .pnn import DEFAULT_SPREAD, train
from .signal import FilterSpec, Label

log = logging.getLogger("eegpnn")

OUT_ENV = "EEGPNN_OUT"
DEFAULT_OUT = "eegpnn-out"


class UsageError(Exception):
    pass


class StageError(Exception):
    def __init__(self, stage: str, exc: Exception):
        super().__init__(f"{stage}: {exc}")
        self.stage = stage


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except ConfigurationError:
        raise
    except (EegPnnError, OSError, ValueError) as exc:
        raise StageError(name, exc) from exc


# --------------------------------------------------------------------------
# Argument helpers
# --------------------------------------------------------------------------

def _out_dir(args) -> Path:
    out = args.out or os.environ.get(OUT_ENV) or DEFAULT_OUT
    path = Path(out)
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"cannot create output directory {path}: {exc.strerror}") from None
    if not os.access(path, os.W_OK):
        raise UsageError(f"output directory {path} is not writable")
    return path


def _add_out(p):
    p.add_argument("--out", help=f"output directory (default: ${OUT_ENV} or ./{DEFAULT_OUT})")


def _add_extraction(p, defaults=True):
    d = (lambda v: v) if defaults else (lambda v: None)
    p.add_argument("--segment-length", type=int, default=d(8192),
                   help="samples per segment, typically 4096 or 8192 (default 8192)")
    p.add_argument("--cutoff", type=float, default=d(56.0),
                   help="low-pass cutoff in Hz (default 56)")
    p.add_argument("--band", default=d("2:32:1"),
                   help="spectral band and bin as low:up:step in Hz (default 2:32:1)")
    p.add_argument("--filter-order", type=int, default=d(4))
    p.add_argument("--k-max", type=int, default=d(5), help="Higuchi k_max (default 5)")


def _add_model(p):
    p.add_argument("--spread", type=float, default=DEFAULT_SPREAD,
                   help="PNN spread constant (default 0.1)")
    p.add_argument("--features", default="all",
                   help="feature families: all, rir, fd, hjorth or a + joined subset")
    p.add_argument("--tie", choices=[t.value for t in TiePolicy], default="positive",
                   help="tie policy for the channel vote (default positive)")


def _add_common(p):
    p.add_argument("--seed", type=int, default=0,
                   help="seed for every random choice (default 0)")
    p.add_argument("--jobs", type=int, default=1, help="worker threads (default 1)")
    p.add_argument("-v", "--verbose", action="store_true")


def _extraction_config(args, sample_rate_hz: float) -> ExtractionConfig:
    return ExtractionConfig(
        segment_length=args.segment_length,
        filter=FilterSpec(args.cutoff, args.filter_order),
        band=SpectralBandSpec.parse(args.band),
        k_max=args.k_max,
        sample_rate_hz=sample_rate_hz,
    )


def _model_options(args):
    if not args.spread > 0:
        raise ConfigurationError(f"--spread must be positive, got {args.spread}")
    if args.jobs < 1:
        raise ConfigurationError("--jobs must be at least 1")
    try:
        selection = FeatureSelection.parse(args.features)
    except InputError as exc:
        raise ConfigurationError(str(exc)) from None
    return selection, TiePolicy(args.tie)


def _manifest_rate(manifest) -> float:
    rates = {e.sample_rate_hz for e in manifest.entries}
    if len(rates) != 1:
        raise InputError(f"manifest mixes sampling rates {sorted(rates)}")
    return rates.pop()


def _load_manifest(args):
    manifest = _stage("manifest", read_manifest, args.manifest)
    if not manifest.entries:
        raise StageError("manifest", InputError("manifest has no entries"))
    rate = _stage("manifest", _manifest_rate, manifest)
    return manifest, rate


def _write(path: Path, text: str) -> None:
    path.write_text(text)
    log.info("wrote %s", path)


# --------------------------------------------------------------------------
# Commands
# --------------------------------------------------------------------------

def cmd_gen(args) -> int:
    if args.subjects < 1:
        raise UsageError("--subjects must be at least 1")
    if args.duration <= 0:
        raise UsageError("--duration must be positive")
    classes = {"both": ("Epileptic", "Healthy"), "epileptic": ("Epileptic",),
               "healthy": ("Healthy",)}[args.classes]
    if args.spike_rate < 0 or args.noise_sd < 0 or not 0 <= args.modulation < 1:
        raise UsageError("--spike-rate/--noise-sd must be >= 0 and --modulation in [0, 1)")
    specs = subject_specs(args.subjects, args.seed, args.duration, classes=classes,
                          spike_rate_hz=args.spike_rate, sample_rate_hz=args.rate,
                          n_channels=args.channels, noise_sd_uv=args.noise_sd,
                          spike_amplitude_uv=args.spike_amplitude,
                          modulation_depth=args.modulation)
    out = _out_dir(args)
    manifest = _stage("generate", generate_dataset, out, specs)
    print(f"wrote {len(manifest.entries)} recordings and {out / 'manifest.json'}")
    return 0


def cmd_extract(args) -> int:
    manifest, rate = _load_manifest(args)
    config = _extraction_config(args, rate)
    out = _out_dir(args)
    recordings = _stage("load", manifest.load_all)
    fs = _stage("extract", featurize, recordings, config)
    n_rir = config.band.n_bins
    names = [f"rir{j + 1}" for j in range(n_rir)] + ["pfd", "hfd", "mobility", "complexity"]
    path = out / "features.csv"
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["subject_id", "label", "frame", "channel"] + names)
        frame_no = Counter()
        for f, (subject, label) in enumerate(zip(fs.subjects, fs.labels)):
            k = frame_no[subject]
            frame_no[subject] += 1
            for ch in fs.channels:
                writer.writerow([subject, label, k, ch] + [repr(float(v)) for v in fs.data[ch][f]])
    _write(out / "features.json", json.dumps({
        "config": config.to_dict(), "config_fingerprint": config.fingerprint,
        "columns": names, "n_frames": len(fs.labels), "channels": fs.channels,
    }, indent=2) + "\n")
    print(f"extracted {len(fs.labels)} frames x {len(fs.channels)} channels "
          f"(dimension {config.n_features}) -> {path}")
    return 0


def cmd_loocv(args) -> int:
    selection, tie = _model_options(args)
    manifest, rate = _load_manifest(args)
    config = _extraction_config(args, rate)
    out = _out_dir(args)
    recordings = _stage("load", manifest.load_all)
    report = _stage("evaluate", evaluate_config, recordings, config, args.spread, tie,
                    selection, jobs=args.jobs)
    _write(out / "loocv_report.json", report.to_json())
    _write(out / "loocv_report.txt", report.render())
    sys.stdout.write(report.render())
    if args.study:
        fs = _stage("extract", featurize, recordings, config)
        study = _stage("feature study", feature_study, fs.data, fs.labels,
                       config.band.n_bins, args.spread, jobs=args.jobs)
        _write(out / "feature_study.json", json.dumps(study.to_dict(), indent=2) + "\n")
        _write(out / "feature_study.txt", study.render())
        sys.stdout.write("\n" + study.render())
    return 0


def _parse_config_item(text: str, rate: float, args):
    """``LENGTH:CUTOFF:LOW:UP:STEP`` -> deferred config constructor."""
    parts = text.split(":")
    if len(parts) != 5:
        raise UsageError(f"--config must be LENGTH:CUTOFF:LOW:UP:STEP, got {text!r}")
    try:
        length, cutoff, low, up, step = int(parts[0]), *(float(p) for p in parts[1:])
    except ValueError:
        raise UsageError(f"--config must be numeric, got {text!r}") from None

    def build():
        return ExtractionConfig(length, FilterSpec(cutoff, args.filter_order),
                                SpectralBandSpec(low, up, step), args.k_max, rate)
    build.label = text
    return build


def _grid(args, rate):
    if args.config:
        return [_parse_config_item(c, rate, args) for c in args.config]
    if args.segment_lengths or args.cutoffs or args.bands:
        try:
            lengths = [int(v) for v in (args.segment_lengths or "4096,8192").split(",")]
            cutoffs = [float(v) for v in (args.cutoffs or "40,46,56,66").split(",")]
        except ValueError:
            raise UsageError("--segment-lengths/--cutoffs must be comma-separated numbers") from None
        bands = (args.bands or "2:32:1,2:34:2,2:34.5:2.5").split(",")
        items = []
        for length in lengths:
            for cutoff in cutoffs:
                for band in bands:
                    items.append(_parse_config_item(
                        f"{length}:{cutoff:g}:{band}", rate, args))
        return items
    grid = reference_grid(rate, args.k_max)
    if args.filter_order != 4:
        grid = [ExtractionConfig(c.segment_length, FilterSpec(c.filter.cutoff_hz, args.filter_order),
                                 c.band, c.k_max, c.sample_rate_hz) for c in grid]
    return grid


def cmd_sweep(args) -> int:
    selection, tie = _model_options(args)
    manifest, rate = _load_manifest(args)
    grid = _grid(args, rate)
    out = _out_dir(args)
    recordings = _stage("load", manifest.load_all)
    result = config_sweep(recordings, grid, args.spread, tie, selection, jobs=args.jobs)
    _write(out / "sweep_report.json", result.to_json())
    _write(out / "sweep_report.txt", result.render())
    sys.stdout.write(result.render())
    if result.errors:
        print(f"{len(result.errors)} configuration(s) failed", file=sys.stderr)
        return 1
    return 0


def cmd_train(args) -> int:
    selection, tie = _model_options(args)
    if selection != ALL_FEATURES:
        raise UsageError("train persists full feature vectors; --features must be 'all'")
    manifest, rate = _load_manifest(args)
    config = _extraction_config(args, rate)
    out = _out_dir(args)
    recordings = _stage("load", manifest.load_all)
    fs = _stage("extract", featurize, recordings, config)
    if not fs.labels:
        raise StageError("train", InputError("no complete segments in the dataset"))
    members = {ch: _stage("train", train, fs.data[ch], fs.labels, args.spread,
                          class_names=[Label.EPILEPTIC.value, Label.HEALTHY.value],
                          config_id=config.fingerprint)
               for ch in fs.channels}
    ensemble = ChannelEnsemble(members, Label.EPILEPTIC.value, tie, config)
    path = Path(args.model) if args.model else out / "model.json"
    save_ensemble(ensemble, path)
    print(f"trained {len(members)} channel PNNs on {len(fs.labels)} frames "
          f"({config.describe()}) -> {path}")
    return 0


def _check_fingerprint(args, ensemble: ChannelEnsemble) -> None:
    cfg = ensemble.config
    requested = {
        "segment_length": args.segment_length, "cutoff_hz": args.cutoff,
        "filter_order": args.filter_order, "k_max": args.k_max,
    }
    stored = cfg.to_dict()
    for key, value in requested.items():
        if value is not None and value != stored[key]:
            raise StageError("fingerprint", InputError(
                f"model was trained with {key}={stored[key]}, requested {value} "
                f"(model fingerprint {cfg.fingerprint})"))
    if args.band is not None:
        band = SpectralBandSpec.parse(args.band)
        if [band.f_low_hz, band.f_up_hz, band.f_step_hz] != stored["band"]:
            raise StageError("fingerprint", InputError(
                f"model was trained with band {cfg.band}, requested {band} "
                f"(model fingerprint {cfg.fingerprint})"))
    if cfg.fingerprint != ensemble.config_id:
        raise StageError("fingerprint", InputError(
            "model members were trained under a different configuration than the one stored"))


def cmd_classify(args) -> int:
    ensemble = _stage("model", load_ensemble, args.model)
    if ensemble.config is None:
        raise StageError("model", InputError("model file carries no extraction configuration"))
    _check_fingerprint(args, ensemble)
    config = ensemble.config
    rate = args.rate if args.rate is not None else config.sample_rate_hz
    if rate != config.sample_rate_hz:
        raise StageError("fingerprint", InputError(
            f"recording rate {rate} Hz differs from model rate {config.sample_rate_hz} Hz"))
    rec = _stage("load", load_recording, args.recording, sample_rate_hz=rate)
    missing = [ch for ch in ensemble.channels if ch not in rec.channels]
    if missing:
        raise StageError("load", InputError(f"recording lacks channel {missing[0]!r}"))
    out = _out_dir(args)

    results = []
    if rec.n_samples < config.segment_length:
        log.warning("recording has %d samples, fewer than one %d-sample segment; 0 frames",
                    rec.n_samples, config.segment_length)
    else:
        fs = _stage("extract", featurize, [rec], config)
        frames = {ch: fs.data[ch] for ch in ensemble.channels}
        results = _stage("classify", vote_many, ensemble, frames)

    decisions = [r.decision for r in results]
    summary = None
    if decisions:
        tally = {c: decisions.count(c) for c in ensemble.class_names}
        summary = {
            "decision": decide_tally(tally, ensemble.class_names, ensemble.positive_class,
                                     ensemble.tie_policy),
            "tally": tally,
            "rule": "majority of frame decisions (subject-level extension)",
        }
    doc = {
        "kind": "classification",
        "format_version": 1,
        "recording": Path(args.recording).name,
        "config_fingerprint": config.fingerprint,
        "tie_policy": ensemble.tie_policy.value,
        "frames": [{"frame": i, "decision": r.decision, "tally": r.tally,
                    "per_channel": r.per_channel} for i, r in enumerate(results)],
        "subject_summary": summary,
    }
    _write(out / "classification.json", json.dumps(doc, indent=2) + "\n")
    lines = [f"{'frame':>5}  {'decision':<10} tally"]
    for i, r in enumerate(results):
        tally = " ".join(f"{k}={v}" for k, v in r.tally.items())
        lines.append(f"{i:>5}  {r.decision:<10} {tally}")
    if summary is None:
        lines.append("no complete frames")
    else:
        lines.append(f"subject-level summary (majority of frame decisions): {summary['decision']} "
                     + " ".join(f"{k}={v}" for k, v in summary["tally"].items()))
    text = "\n".join(lines) + "\n"
    _write(out / "classification.txt", text)
    sys.stdout.write(text)
    return 0


def cmd_report(args) -> int:
    try:
        doc = json.loads(Path(args.input).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise StageError("report", InputError(f"cannot read {args.input}: {exc}")) from None
    kind = doc.get("kind")
    if kind == "eval_report":
        sys.stdout.write(EvalReport.from_dict(doc).render())
    elif kind == "config_sweep":
        sys.stdout.write(_sweep_from_dict(doc).render())
    elif kind == "feature_study":
        txt = Path(args.input).with_suffix(".txt")
        sys.stdout.write(txt.read_text() if txt.exists() else json.dumps(doc, indent=2) + "\n")
    else:
        raise StageError("report", InputError(f"unknown report kind {kind!r}"))
    return 0


def _sweep_from_dict(doc) -> SweepResult:
    from .evaluate import SweepRow
    rows = []
    for r in doc["rows"]:
        config = None if r["config"] is None else ExtractionConfig.from_dict(r["config"])
        report = None if r["report"] is None else EvalReport.from_dict(r["report"])
        rows.append(SweepRow(r["key"], config, report, r["error"]))
    return SweepResult(rows)


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eegpnn",
        description="Interictal EEG classification with per-channel PNNs and majority voting.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic labelled dataset")
    p.add_argument("--subjects", type=int, default=6, help="subjects per class (default 6)")
    p.add_argument("--classes", choices=["both", "epileptic", "healthy"], default="both")
    p.add_argument("--duration", type=float, default=164.0,
                   help="seconds per recording (default 164: four 8192-sample frames at 200 Hz)")
    p.add_argument("--rate", type=float, default=200.0, help="sampling rate in Hz")
    p.add_argument("--channels", type=int, default=22)
    p.add_argument("--spike-rate", type=float, default=1.0,
                   help="mean interictal spike rate of epileptic subjects in Hz")
    p.add_argument("--spike-amplitude", type=float, default=30.0,
                   help="peak spike amplitude in uV (default 30)")
    p.add_argument("--modulation", type=float, default=0.4,
                   help="slow amplitude drift of background rhythms, 0..1 (default 0.4)")
    p.add_argument("--noise-sd", type=float, default=8.0, help="background noise SD in uV")
    _add_out(p)
    _add_common(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("extract", help="write feature vectors for every frame")
    p.add_argument("--manifest", required=True)
    _add_extraction(p)
    _add_out(p)
    _add_common(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("loocv", help="voted leave-one-out evaluation of one configuration")
    p.add_argument("--manifest", required=True)
    _add_extraction(p)
    _add_model(p)
    p.add_argument("--study", action="store_true",
                   help="also run single-channel LOOCV for all 7 feature combinations")
    _add_out(p)
    _add_common(p)
    p.set_defaults(func=cmd_loocv)

    p = sub.add_parser("sweep", help="voted LOOCV over a grid of configurations")
    p.add_argument("--manifest", required=True)
    p.add_argument("--segment-lengths", help="comma-separated, e.g. 4096,8192")
    p.add_argument("--cutoffs", help="comma-separated cutoffs in Hz, e.g. 40,46,56,66")
    p.add_argument("--bands", help="comma-separated low:up:step bands")
    p.add_argument("--config", action="append",
                   help="explicit LENGTH:CUTOFF:LOW:UP:STEP configuration (repeatable)")
    p.add_argument("--filter-order", type=int, default=4)
    p.add_argument("--k-max", type=int, default=5)
    _add_model(p)
    _add_out(p)
    _add_common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("train", help="train and save one PNN per channel")
    p.add_argument("--manifest", required=True)
    p.add_argument("--model", help="output model path (default OUT/model.json)")
    _add_extraction(p)
    _add_model(p)
    _add_out(p)
    _add_common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("classify", help="classify the frames of a recording with a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--recording", required=True, help="CSV recording")
    p.add_argument("--rate", type=float, help="sampling rate (default: the model's)")
    _add_extraction(p, defaults=False)
    _add_out(p)
    _add_common(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("report", help="render a saved JSON report as a table")
    p.add_argument("input")
    p.add_argument("-v", "--verbose", action="store_true")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (UsageError, ConfigurationError) as exc:
        print(f"{parser.prog} {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except StageError as exc:
        print(f"{parser.prog} {args.command}: failed at {exc}", file=sys.stderr)
        return 1
    except EegPnnError as exc:
        print(f"{parser.prog} {args.command}: failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
