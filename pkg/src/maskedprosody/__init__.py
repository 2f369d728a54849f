"""Self-supervised masked reconstruction of prosodic contours.

Pipeline: extract pitch/energy/voice-activity contours from audio,
quantize them into codebooks, corrupt with aligned span masking, train a
Conformer to reconstruct the corrupted streams, then evaluate frozen
representations with linear and Conformer probes on multi-timescale tasks.
"""

__version__ = "0.1.0"

from .audio import Waveform, load_waveform, save_waveform
from .codec import Codebook, TokenTrack, build_codebook, default_codebooks, dequantize, quantize, tokenize
from .features import FeatureConfig, ProsodyTrack, extract_prosody, normalize_track
from .masking import MaskConfig, MaskPlan, apply_mask, sample_mask_plan
from .model import MaskedProsodyModel, ModelConfig
from .training import TrainConfig, grad_check, mpm_loss, train_mpm
from .checkpoint import MpmCheckpoint
from .representations import aggregate_spans, extract_representations
from .cwt import CwtConfig, cwt_encode
from .synthetic import LabeledUtterance, SynthConfig, generate_synthetic_corpus
from .grid import EvalReport, TaskSpec, run_probe_grid
from .probes import ProbeSpec, ProbeTrainConfig, predict, train_probe

__all__ = [
    "Waveform", "load_waveform", "save_waveform",
    "Codebook", "TokenTrack", "build_codebook", "default_codebooks",
    "quantize", "dequantize", "tokenize",
    "FeatureConfig", "ProsodyTrack", "extract_prosody", "normalize_track",
    "MaskConfig", "MaskPlan", "apply_mask", "sample_mask_plan",
    "MaskedProsodyModel", "ModelConfig",
    "TrainConfig", "grad_check", "mpm_loss", "train_mpm",
    "MpmCheckpoint",
    "aggregate_spans", "extract_representations",
    "CwtConfig", "cwt_encode",
    "LabeledUtterance", "SynthConfig", "generate_synthetic_corpus",
    "EvalReport", "TaskSpec", "run_probe_grid",
    "ProbeSpec", "ProbeTrainConfig", "predict", "train_probe",
]
