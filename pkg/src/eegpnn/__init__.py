"""Interictal scalp-EEG classification: spectral, fractal and Hjorth features,
one Probabilistic Neural Network per channel, and a majority vote across
channels, evaluated by leave-one-out cross-validation."""

__version__ = "0.1.0"

from .errors import ConfigurationError, EegPnnError, EvaluationError, InputError
from .signal import (
    CHANNELS_10_20, FilterSpec, Label, Recording, Segment, low_pass_filter, segment,
)
from .features import (
    ExtractionConfig, FeatureVector, Normalizer, SpectralBandSpec, apply_normalizer,
    extract, fft_magnitudes, fit_normalizer, higuchi_fd, hjorth_params, petrosian_fd,
    power_spectral_intensity, relative_intensity_ratio,
)
from .pnn import PnnModel, add_exemplar, classify, load_model, save_model, train
from .ensemble import ChannelEnsemble, TiePolicy, vote
from .evaluate import (
    EvalReport, FeatureSelection, config_sweep, feature_study, loocv_channel, loocv_voted,
)
from .ingest import (
    DatasetManifest, ManifestEntry, SynthSpec, load_recording, read_manifest, synthesize,
    write_recording,
)
from .kernels import BACKEND
