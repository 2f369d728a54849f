"""Continuous wavelet transform over the prosody contours.

The classical hierarchical baseline: each contour is correlated with
Mexican-hat wavelets at dyadic scales, yielding a frame x (3 features x
num_scales) matrix. Columns are ordered feature-major, scale-minor:
pitch at all scales, then energy, then voice activity.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.signal

from .features import ProsodyTrack

# Half-width of the truncated kernel in units of scale; the Mexican hat
# decays like exp(-t^2/2) so 5 scales of support keeps truncation below 1e-5.
KERNEL_RADIUS_SCALES = 5.0


@dataclass
class CwtConfig:
    scales: tuple[int, ...] = (2, 4, 8, 16, 32, 64)  # frames, dyadic
    kernel_radius_scales: float = KERNEL_RADIUS_SCALES

    def __post_init__(self):
        if len(self.scales) < 2:
            raise ValueError("need at least two scales")
        if any(b <= a for a, b in zip(self.scales, self.scales[1:])):
            raise ValueError("scales must be strictly increasing")


def mexican_hat_kernel(scale: float, radius_scales: float = KERNEL_RADIUS_SCALES) -> np.ndarray:
    """Sampled zero-mean Mexican-hat wavelet psi((u - t)/s)/sqrt(s).

    The discrete sample mean is subtracted so a constant input maps to an
    exactly zero response despite truncation and sampling.
    """
    radius = int(math.ceil(radius_scales * scale))
    t = np.arange(-radius, radius + 1, dtype=np.float64) / scale
    psi = (2.0 / (math.sqrt(3.0) * math.pi**0.25)) * (1.0 - t**2) * np.exp(-(t**2) / 2.0)
    psi /= math.sqrt(scale)
    return psi - psi.mean()


def _reflect_pad(x: np.ndarray, pad: int) -> np.ndarray:
    return np.pad(x, pad, mode="reflect")


def cwt_contour(x: np.ndarray, scales, radius_scales: float = KERNEL_RADIUS_SCALES) -> np.ndarray:
    """(num_frames, num_scales) responses for one contour, FFT-accelerated."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty((len(x), len(scales)))
    for j, scale in enumerate(scales):
        kernel = mexican_hat_kernel(scale, radius_scales)
        radius = len(kernel) // 2
        padded = _reflect_pad(x, radius)
        # the wavelet is even, so correlation equals convolution
        out[:, j] = scipy.signal.fftconvolve(padded, kernel, mode="same")[radius:-radius]
    return out


def cwt_contour_direct(x, scales, radius_scales: float = KERNEL_RADIUS_SCALES) -> np.ndarray:
    """Brute-force time-domain counterpart of cwt_contour (verification oracle)."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty((len(x), len(scales)))
    for j, scale in enumerate(scales):
        kernel = mexican_hat_kernel(scale, radius_scales)
        radius = len(kernel) // 2
        padded = _reflect_pad(x, radius)
        for t in range(len(x)):
            out[t, j] = np.dot(padded[t : t + len(kernel)], kernel[::-1])
    return out


def cwt_encode(track: ProsodyTrack, cfg: CwtConfig | None = None) -> np.ndarray:
    """(num_frames, 3 * num_scales) wavelet features for a prosody track.

    Scales that don't fit the track (scale >= num_frames) are dropped
    with a warning.
    """
    cfg = cfg or CwtConfig()
    usable = tuple(s for s in cfg.scales if s < track.num_frames)
    if len(usable) < len(cfg.scales):
        dropped = sorted(set(cfg.scales) - set(usable))
        warnings.warn(f"track of {track.num_frames} frames: dropping scales {dropped}")
    if len(usable) < 2:
        raise ValueError("track too short for the configured scales")
    columns = [
        cwt_contour(contour, usable, cfg.kernel_radius_scales)
        for contour in (track.pitch, track.energy, track.vad.astype(np.float64))
    ]
    return np.concatenate(columns, axis=1)
