"""Multi-timescale synthetic prosody corpus.

Contours are synthesized directly at the frame level (no audio): energy
is a train of syllable pulses, pitch is a declination line plus a slow
utterance-wide modulation and pulse-locked wiggles, and voice activity
drops to zero in the pauses between "words". Labels at every granularity
fall out of the construction: per-frame pulse flags, per-word prominence
and boundary flags, a per-utterance class, and the true pulse count.

Class identity controls the pitch level offset, the amplitude of the
slow modulation and wiggles (range multiplier), and the frequency of the
utterance-wide modulation (rate multiplier); in ``modulation="phase"``
mode the class instead sets the time-locked phase of one slow cycle
spanning the utterance. Level offsets are erased by per-utterance
normalization and the syllable rate is drawn independently of the class,
so class information lives in pitch structure spanning the whole
utterance rather than in any short window: a phase class leaves frame
value distributions (and hence pooled statistics of the raw contours)
essentially unchanged, while reconstructing a long masked span requires
knowing it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .features import ProsodyTrack, normalize_track


def _default_class_table() -> list[tuple[float, float, float]]:
    # (pitch_offset_hz, pitch_range_multiplier, modulation_rate_multiplier)
    return [
        (0.0, 1.0, 0.5),
        (0.0, 1.0, 0.9),
        (0.0, 1.0, 1.6),
        (0.0, 1.0, 2.8),
    ]


@dataclass
class SynthConfig:
    num_utterances: int = 200
    duration_range: tuple[float, float] = (2.0, 2.56)
    pulse_rate_range: tuple[float, float] = (3.5, 5.0)
    prominence_factor: float = 1.8
    pause_duration_range: tuple[float, float] = (0.15, 0.3)
    class_table: list[tuple[float, float, float]] = field(default_factory=_default_class_table)
    seed: int = 0
    hop_seconds: float = 0.01
    pause_probability: float = 0.35
    prominence_probability: float = 0.3
    syllables_per_word: tuple[int, int] = (2, 4)
    f0_base_hz: float = 200.0
    declination_hz_per_s: float = -8.0
    modulation: str = "sinusoid"  # "sinusoid" | "phase" | "rhythm"
    slow_modulation_hz: float = 0.6
    slow_modulation_amp_hz: float = 9.0
    modulation_cycles: float = 1.0  # cycles per utterance in phase mode
    phase_jitter: float = 0.05  # phase-class jitter, fraction of a cycle
    pause_base_period: float = 0.8  # rhythm mode: seconds between pause starts
    pause_fraction_of_period: float = 0.22  # rhythm mode: pause share of each period
    pulse_wiggle_amp_hz: float = 5.0
    pitch_noise_hz: float = 1.0
    energy_noise: float = 0.01
    rate_jitter: float = 0.06

    def __post_init__(self):
        rows = [tuple(row) for row in self.class_table]
        if len(set(rows)) != len(rows):
            raise ValueError("class table rows must be distinct")
        lo, hi = self.pulse_rate_range
        if not 2.0 <= lo <= hi <= 10.0:
            raise ValueError("pulse rates must lie within [2, 10] Hz")

    @property
    def num_classes(self) -> int:
        return len(self.class_table)


@dataclass
class LabeledUtterance:
    utterance_id: str
    word_spans: list[tuple[int, int]]  # frame spans, sorted, non-overlapping
    frame_labels: np.ndarray  # pulse/vowel flags, one per frame
    prominence: np.ndarray  # one per word
    boundary: np.ndarray  # one per word
    utterance_label: int
    syllable_count: int
    provenance: str = "synthetic"

    def __post_init__(self):
        spans = self.word_spans
        if any(s >= e for s, e in spans):
            raise ValueError("word spans must be non-empty")
        if any(spans[i][1] > spans[i + 1][0] for i in range(len(spans) - 1)):
            raise ValueError("word spans must be sorted and non-overlapping")


@dataclass
class SyntheticCorpus:
    tracks: list[ProsodyTrack]
    labels: list[LabeledUtterance]
    raw_pitch: list[np.ndarray]  # Hz, NaN where unvoiced (oracle material)
    raw_energy: list[np.ndarray]
    config: SynthConfig

    def __len__(self) -> int:
        return len(self.tracks)

    @property
    def ids(self) -> list[str]:
        return [lab.utterance_id for lab in self.labels]


def _scheduled_pauses(cfg: SynthConfig, duration: float, rate_mult: float, rng):
    """Rhythm mode: near-periodic pauses whose period is set by the class.

    Pause duration scales with the period so every class silences the
    same fraction of the utterance; each scheduled pause is realized
    with probability pause_probability.
    """
    period = cfg.pause_base_period / max(rate_mult, 1e-6)
    pause_len = cfg.pause_fraction_of_period * period
    pauses = []
    t = period * (0.5 + 0.3 * rng.random())
    while t + pause_len < duration - 0.15:
        if rng.random() < cfg.pause_probability:
            start = max(0.15, t + 0.08 * period * rng.standard_normal())
            pauses.append((start, start + pause_len))
        t += period
    return pauses


def _pulse_schedule(cfg: SynthConfig, duration: float, rate: float, rng, fixed_pauses=None):
    """Pulse times grouped into words, with pauses between words.

    With fixed_pauses the silent intervals are given and pulses flow
    around them (a pause always starts a new word); otherwise pauses are
    drawn after words with pause_probability. Returns (pulse_times,
    word_index_per_pulse, pauses).
    """
    period = 1.0 / rate
    t = 0.12 + 0.3 * period * rng.random()
    pulses, word_of_pulse = [], []
    word = 0
    if fixed_pauses is not None:
        pauses = sorted(fixed_pauses)
        word_len = int(rng.integers(cfg.syllables_per_word[0], cfg.syllables_per_word[1] + 1))
        in_word = 0
        while t <= duration - 0.12:
            blocking = next(((ps, pe) for ps, pe in pauses if ps - 0.3 * period <= t < pe), None)
            if blocking is not None:
                t = blocking[1] + 0.4 * period
                if in_word:
                    word += 1
                    in_word = 0
                    word_len = int(
                        rng.integers(cfg.syllables_per_word[0], cfg.syllables_per_word[1] + 1)
                    )
                continue
            pulses.append(t)
            word_of_pulse.append(word)
            in_word += 1
            if in_word >= word_len:
                word += 1
                in_word = 0
                word_len = int(
                    rng.integers(cfg.syllables_per_word[0], cfg.syllables_per_word[1] + 1)
                )
            t += period * (1.0 + cfg.rate_jitter * rng.standard_normal())
        return np.array(pulses), np.array(word_of_pulse, dtype=int), pauses

    pauses = []
    while True:
        word_len = int(rng.integers(cfg.syllables_per_word[0], cfg.syllables_per_word[1] + 1))
        for _ in range(word_len):
            if t > duration - 0.12:
                break
            pulses.append(t)
            word_of_pulse.append(word)
            t += period * (1.0 + cfg.rate_jitter * rng.standard_normal())
        if t > duration - 0.12:
            break
        word += 1
        if rng.random() < cfg.pause_probability:
            pause = rng.uniform(*cfg.pause_duration_range)
            pauses.append((t - 0.4 * period, t - 0.4 * period + pause))
            t += pause
    return np.array(pulses), np.array(word_of_pulse, dtype=int), pauses


def generate_synthetic_corpus(cfg: SynthConfig) -> SyntheticCorpus:
    """Deterministic corpus for the given config (seed included)."""
    rng = np.random.default_rng(cfg.seed)
    tracks, labels, raw_pitches, raw_energies = [], [], [], []
    for u in range(cfg.num_utterances):
        cls = int(rng.integers(0, cfg.num_classes))
        offset, range_mult, rate_mult = cfg.class_table[cls]
        duration = rng.uniform(*cfg.duration_range)
        rate = float(rng.uniform(*cfg.pulse_rate_range))
        num_frames = int(duration / cfg.hop_seconds)
        times = (np.arange(num_frames) + 0.5) * cfg.hop_seconds

        if cfg.modulation == "rhythm":
            fixed = _scheduled_pauses(cfg, duration, rate_mult, rng)
            pulses, word_of_pulse, pauses = _pulse_schedule(cfg, duration, rate, rng, fixed)
        else:
            pulses, word_of_pulse, pauses = _pulse_schedule(cfg, duration, rate, rng)
        if pulses.size == 0:  # degenerate draw; one pulse mid-utterance
            pulses = np.array([duration / 2])
            word_of_pulse = np.array([0])

        prominent_pulse = rng.random(len(pulses)) < cfg.prominence_probability
        half_width = 0.45 / rate

        # energy: raised-cosine bump per pulse over a low baseline
        energy = np.full(num_frames, 0.05)
        frame_pulse = np.zeros(num_frames, dtype=np.int8)
        for p, prom in zip(pulses, prominent_pulse):
            arg = (times - p) / half_width
            lobe = np.clip(1.0 - np.abs(arg), 0.0, None)
            bump = 0.5 * (1 - np.cos(np.pi * np.clip(arg + 1, 0, 2)))
            bump = np.where(np.abs(arg) <= 1.0, bump, 0.0)
            energy += (cfg.prominence_factor if prom else 1.0) * bump
            frame_pulse |= (np.abs(times - p) <= 0.55 * half_width).astype(np.int8)

        # voice activity: off inside pauses and outside the pulse extent
        vad = np.ones(num_frames, dtype=np.uint8)
        speech_start = pulses[0] - half_width
        speech_end = pulses[-1] + half_width
        vad[(times < speech_start) | (times > speech_end)] = 0
        for start, end in pauses:
            inside = (times >= start) & (times < end)
            vad[inside] = 0
            energy[inside] = 0.05
            frame_pulse[inside] = 0

        energy += cfg.energy_noise * rng.standard_normal(num_frames)
        energy = np.clip(energy, 0.0, None)

        # pitch: declination + slow modulation + pulse-locked wiggles
        if cfg.modulation == "phase":
            # one time-locked slow cycle; the class sets its phase
            class_phase = 2 * np.pi * (
                cls / cfg.num_classes + cfg.phase_jitter * rng.standard_normal()
            )
            modulation = np.sin(
                2 * np.pi * cfg.modulation_cycles * (times / duration) + class_phase
            )
        elif cfg.modulation == "rhythm":
            # class identity lives in the pause rhythm; pitch texture is free
            phase = rng.uniform(0, 2 * np.pi)
            modulation = np.sin(2 * np.pi * cfg.slow_modulation_hz * times + phase)
        else:
            # the class's rate multiplier scales the modulation frequency
            phase = rng.uniform(0, 2 * np.pi)
            modulation = np.sin(
                2 * np.pi * cfg.slow_modulation_hz * rate_mult * times + phase
            )
        pitch = (
            cfg.f0_base_hz
            + offset
            + cfg.declination_hz_per_s * times
            + range_mult * cfg.slow_modulation_amp_hz * modulation
        )
        for p, prom in zip(pulses, prominent_pulse):
            arg = (times - p) / half_width
            wiggle = np.where(np.abs(arg) <= 1.0, np.sin(np.pi * np.clip(arg + 1, 0, 2)), 0.0)
            amp = range_mult * cfg.pulse_wiggle_amp_hz * (1.6 if prom else 1.0)
            pitch += amp * wiggle
        pitch += cfg.pitch_noise_hz * rng.standard_normal(num_frames)
        raw_pitch = np.where(vad == 1, pitch, np.nan)

        # word spans and labels
        word_ids = np.unique(word_of_pulse)
        spans, prominence, boundary = [], [], []
        pause_starts = np.array([s for s, _ in pauses]) if pauses else np.empty(0)
        for w in word_ids:
            word_pulses = pulses[word_of_pulse == w]
            start = max(0, int((word_pulses[0] - half_width) / cfg.hop_seconds))
            end = min(num_frames, int((word_pulses[-1] + half_width) / cfg.hop_seconds) + 1)
            if spans:
                start = max(start, spans[-1][1])  # jitter can squeeze adjacent words
            if end <= start:
                continue
            spans.append((start, end))
            prominence.append(int(prominent_pulse[word_of_pulse == w].any()))
            after = word_pulses[-1] + half_width
            has_pause = bool(((pause_starts >= word_pulses[-1]) & (pause_starts <= after + 0.3)).any())
            boundary.append(int(has_pause))

        voiced = vad == 1
        track = ProsodyTrack(
            pitch=normalize_track(np.where(voiced, pitch, 0.0), voiced) if voiced.any() else np.zeros(num_frames),
            energy=normalize_track(energy),
            vad=vad,
            hop_seconds=cfg.hop_seconds,
        )
        tracks.append(track)
        labels.append(
            LabeledUtterance(
                utterance_id=f"synth-{u:05d}",
                word_spans=spans,
                frame_labels=frame_pulse.astype(np.int64),
                prominence=np.array(prominence, dtype=np.int64),
                boundary=np.array(boundary, dtype=np.int64),
                utterance_label=cls,
                syllable_count=len(pulses),
            )
        )
        raw_pitches.append(raw_pitch)
        raw_energies.append(energy)
    return SyntheticCorpus(tracks, labels, raw_pitches, raw_energies, cfg)
