"""Per-frame prosodic contours: pitch, mel-RMS energy, voice activity.

All three contours share ``num_frames = floor(num_samples / hop_samples)``
frames, each centered at ``t * hop`` with reflect padding at the edges.
Pitch uses a cumulative-mean-normalized autocorrelation difference
function with parabolic lag refinement; energy is the RMS over an 80-band
mel filterbank applied to Hann-windowed magnitude spectra.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.fft

from .audio import Waveform
from .errors import AlignmentError, DegenerateTrackError, EmptyTrackError

# Frames whose RMS falls below this are never voiced; keeps the difference
# function away from 0/0 on digital silence.
SILENCE_RMS = 1e-5


@dataclass
class FeatureConfig:
    hop_seconds: float = 0.01
    fmin: float = 60.0
    fmax: float = 400.0
    energy_frame_seconds: float = 0.025
    num_mel_bands: int = 80
    vad_energy_floor_ratio: float = 0.1
    voicing_threshold: float = 0.15
    max_utterance_seconds: float = 6.0


@dataclass
class ProsodyTrack:
    """Aligned normalized pitch/energy contours plus binary voice activity."""

    pitch: np.ndarray
    energy: np.ndarray
    vad: np.ndarray
    hop_seconds: float

    def __post_init__(self):
        self.pitch = np.asarray(self.pitch, dtype=np.float64)
        self.energy = np.asarray(self.energy, dtype=np.float64)
        self.vad = np.asarray(self.vad, dtype=np.uint8)
        if not (len(self.pitch) == len(self.energy) == len(self.vad)):
            raise AlignmentError(
                f"contour lengths differ: pitch {len(self.pitch)}, "
                f"energy {len(self.energy)}, vad {len(self.vad)}"
            )
        if self.hop_seconds <= 0:
            raise ValueError("hop_seconds must be positive")
        if not set(np.unique(self.vad)) <= {0, 1}:
            raise ValueError("vad values must be 0 or 1")

    @property
    def num_frames(self) -> int:
        return len(self.pitch)


def _num_frames(num_samples: int, hop: int) -> int:
    return num_samples // hop


def _centered_frames(samples: np.ndarray, hop: int, frame: int, num_frames: int) -> np.ndarray:
    """(num_frames, frame) matrix of frames centered at t*hop, reflect padded."""
    half = frame // 2
    pad_left = half
    pad_right = max(0, (num_frames - 1) * hop + (frame - half) - len(samples))
    if max(pad_left, pad_right) > len(samples) - 1:
        raise EmptyTrackError(
            f"waveform of {len(samples)} samples too short for a {frame}-sample window"
        )
    padded = np.pad(samples, (pad_left, pad_right), mode="reflect")
    starts = np.arange(num_frames) * hop
    idx = starts[:, None] + np.arange(frame)[None, :]
    return padded[idx]


def estimate_pitch(
    w: Waveform,
    hop_seconds: float = 0.01,
    fmin: float = 60.0,
    fmax: float = 400.0,
    voicing_threshold: float = 0.15,
) -> np.ndarray:
    """Per-frame F0 in Hz, NaN on unvoiced frames.

    Classic normalized-difference pitch tracking: for each frame the
    squared difference d(tau) between the frame head and its tau-shifted
    copy is normalized by its cumulative mean, the first dip below the
    voicing threshold is refined by parabolic interpolation, and frames
    with no dip (or near-silence) are marked unvoiced.
    """
    if not fmin < fmax:
        raise ValueError("fmin must be below fmax")
    if fmax >= w.sample_rate / 2:
        raise ValueError("fmax must be below the Nyquist frequency")
    if not 0.005 <= hop_seconds <= 0.02:
        raise ValueError("hop_seconds outside [0.005, 0.02]")

    sr = w.sample_rate
    hop = round(hop_seconds * sr)
    tau_max = int(sr / fmin)
    tau_min = max(2, int(math.floor(sr / fmax)))
    window = tau_max  # difference-function integration window
    frame_len = window + tau_max

    num_frames = _num_frames(len(w.samples), hop)
    if num_frames < 1 or len(w.samples) < frame_len:
        raise EmptyTrackError(
            f"waveform of {len(w.samples)} samples too short for one analysis window"
        )

    # Windows are nominally centered at t*hop but clamped to lie fully inside
    # the signal: padding would break periodicity and corrupt edge estimates.
    starts = np.clip(np.arange(num_frames) * hop - frame_len // 2, 0, len(w.samples) - frame_len)
    frames = w.samples[starts[:, None] + np.arange(frame_len)[None, :]]

    # d(tau) = E_head + E_shift(tau) - 2*C(tau), computed batched via FFT.
    sq = frames**2
    cums = np.concatenate([np.zeros((num_frames, 1)), np.cumsum(sq, axis=1)], axis=1)
    e_head = cums[:, window]
    taus = np.arange(tau_max + 1)
    e_shift = cums[:, taus + window] - cums[:, taus]

    n = scipy.fft.next_fast_len(2 * frame_len)
    spec_head = scipy.fft.rfft(frames[:, :window], n, axis=1)
    spec_full = scipy.fft.rfft(frames, n, axis=1)
    corr = scipy.fft.irfft(np.conj(spec_head) * spec_full, n, axis=1)[:, : tau_max + 1]

    diff = e_head[:, None] + e_shift - 2.0 * corr
    diff = np.maximum(diff, 0.0)

    # cumulative-mean normalization; tau=0 pinned to 1
    cumdiff = np.cumsum(diff[:, 1:], axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        norm = diff[:, 1:] * taus[1:] / cumdiff
    norm = np.where(cumdiff > 0, norm, 1.0)
    norm = np.concatenate([np.ones((num_frames, 1)), norm], axis=1)

    rms = np.sqrt(np.mean(sq, axis=1))
    f0 = np.full(num_frames, np.nan)
    for t in range(num_frames):
        if rms[t] < SILENCE_RMS:
            continue
        d = norm[t]
        below = np.nonzero(d[tau_min : tau_max + 1] < voicing_threshold)[0]
        if below.size == 0:
            continue
        tau = tau_min + below[0]
        # walk down to the bottom of the dip before interpolating
        while tau + 1 <= tau_max and d[tau + 1] < d[tau]:
            tau += 1
        shift = 0.0
        if 0 < tau < tau_max:
            denom = d[tau - 1] - 2.0 * d[tau] + d[tau + 1]
            if denom > 0:
                shift = 0.5 * (d[tau - 1] - d[tau + 1]) / denom
                shift = float(np.clip(shift, -0.5, 0.5))
        estimate = sr / (tau + shift)
        if fmin <= estimate <= fmax:
            f0[t] = estimate
    return f0


def _mel_scale(hz: np.ndarray) -> np.ndarray:
    return 2595.0 * np.log10(1.0 + hz / 700.0)


def _mel_filterbank(num_bands: int, n_fft: int, sr: int) -> np.ndarray:
    """Triangular mel filters over [0, sr/2], shape (num_bands, n_fft//2 + 1)."""
    freqs = np.linspace(0.0, sr / 2.0, n_fft // 2 + 1)
    mel_pts = np.linspace(0.0, _mel_scale(np.array(sr / 2.0)), num_bands + 2)
    hz_pts = 700.0 * (10.0 ** (mel_pts / 2595.0) - 1.0)
    bank = np.zeros((num_bands, len(freqs)))
    for b in range(num_bands):
        left, center, right = hz_pts[b], hz_pts[b + 1], hz_pts[b + 2]
        up = (freqs - left) / max(center - left, 1e-12)
        down = (right - freqs) / max(right - center, 1e-12)
        bank[b] = np.clip(np.minimum(up, down), 0.0, None)
    return bank


def compute_energy(
    w: Waveform,
    hop_seconds: float = 0.01,
    frame_length: float = 0.025,
    num_mel_bands: int = 80,
) -> np.ndarray:
    """Per-frame RMS over mel-filterbank magnitudes (one value per hop)."""
    if frame_length < hop_seconds:
        raise ValueError("frame_length must be at least hop_seconds")
    sr = w.sample_rate
    hop = round(hop_seconds * sr)
    frame = round(frame_length * sr)
    num_frames = _num_frames(len(w.samples), hop)
    if num_frames < 1:
        raise EmptyTrackError("waveform shorter than one hop")

    frames = _centered_frames(w.samples, hop, frame, num_frames)
    window = np.hanning(frame)
    n_fft = 1 << (frame - 1).bit_length()
    spectra = np.abs(np.fft.rfft(frames * window, n_fft, axis=1))
    mel = spectra @ _mel_filterbank(num_mel_bands, n_fft, sr).T
    return np.sqrt(np.mean(mel**2, axis=1))


def detect_voice_activity(
    pitch: np.ndarray, energy: np.ndarray, energy_floor_ratio: float = 0.1
) -> np.ndarray:
    """1 where the pitch tracker voiced the frame and energy clears the floor.

    The floor is ``energy_floor_ratio`` times the utterance median energy,
    so all-silent input (median 0) yields all zeros.
    """
    pitch = np.asarray(pitch, dtype=np.float64)
    energy = np.asarray(energy, dtype=np.float64)
    if pitch.shape != energy.shape:
        raise AlignmentError("pitch and energy tracks must be aligned")
    floor = energy_floor_ratio * np.median(energy)
    return ((~np.isnan(pitch)) & (energy > floor)).astype(np.uint8)


def interpolate_undefined(values: np.ndarray, defined: np.ndarray) -> np.ndarray:
    """Fill undefined positions by linear interpolation, holding edge values."""
    defined = np.asarray(defined, dtype=bool)
    if not defined.any():
        raise DegenerateTrackError("no defined frames to interpolate from")
    idx = np.arange(len(values))
    return np.interp(idx, idx[defined], np.asarray(values, dtype=np.float64)[defined])


def normalize_track(values: np.ndarray, defined_mask: np.ndarray | None = None) -> np.ndarray:
    """Z-score a contour over its defined frames.

    Statistics come from the defined frames only; undefined frames are
    first filled by linear interpolation (edges held) and then carry the
    interpolated z-scored values, keeping the contour continuous. A
    constant contour maps to all zeros.
    """
    values = np.asarray(values, dtype=np.float64)
    if defined_mask is None:
        defined_mask = np.ones(len(values), dtype=bool)
    defined_mask = np.asarray(defined_mask, dtype=bool)
    if not defined_mask.any():
        raise DegenerateTrackError("cannot normalize a track with zero defined frames")

    mean = values[defined_mask].mean()
    std = values[defined_mask].std()
    if std == 0.0:
        return np.zeros_like(values)
    filled = values if defined_mask.all() else interpolate_undefined(values, defined_mask)
    return (filled - mean) / std


def extract_prosody(w: Waveform, cfg: FeatureConfig | None = None) -> ProsodyTrack:
    """Full contour extraction: pitch + energy + VAD, normalized per utterance."""
    cfg = cfg or FeatureConfig()
    sr = w.sample_rate
    max_samples = int(cfg.max_utterance_seconds * sr)
    if len(w.samples) > max_samples:
        w = Waveform(w.samples[:max_samples], sr)

    f0 = estimate_pitch(w, cfg.hop_seconds, cfg.fmin, cfg.fmax, cfg.voicing_threshold)
    energy = compute_energy(w, cfg.hop_seconds, cfg.energy_frame_seconds, cfg.num_mel_bands)
    if len(f0) != len(energy):
        raise AlignmentError(f"pitch/energy length mismatch: {len(f0)} vs {len(energy)}")
    vad = detect_voice_activity(f0, energy, cfg.vad_energy_floor_ratio)

    voiced = ~np.isnan(f0)
    if voiced.any():
        pitch_norm = normalize_track(np.where(voiced, f0, 0.0), voiced)
    else:
        pitch_norm = np.zeros(len(f0))
    energy_norm = normalize_track(energy)
    return ProsodyTrack(pitch_norm, energy_norm, vad, cfg.hop_seconds)
