"""Annotation parsers for the three corpus styles the probes consume.

File formats:

* Phone alignments: one ``start_sample end_sample phone`` line per
  segment, boundaries in samples, monotone non-overlapping.
* Word prosody annotations: one word per line,
  ``word<TAB>accents<TAB>break_index`` where ``accents`` is a
  comma-separated list of pitch-accent symbols or ``-`` for none.
* Emotion recordings: 7-field hyphenated file names in the
  ``modality-channel-emotion-intensity-statement-repetition-actor.wav``
  convention; the third field encodes the emotion, the last the speaker.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ParseError

# Vowel-bearing phone symbols used as the syllable-nucleus proxy; callers
# may substitute their own inventory.
DEFAULT_VOWELS = frozenset(
    "iy ih eh ey ae aa aw ay ah ao oy ow uh uw ux er ax ix axr ax-h".split()
)

# Pitch-accent symbols that mark a word prominent.
PROMINENT_ACCENTS = frozenset({"H*", "L*", "L*+H", "L+H*", "H+", "!H*"})

# Break indexes counted as word boundaries.
BOUNDARY_BREAKS = frozenset({3, 4})

KNOWN_ACCENTS = PROMINENT_ACCENTS | {"*?", "X*?", "-"}


@dataclass
class PhoneAlignment:
    frame_vowel_flags: np.ndarray
    syllable_count: int
    num_frames: int


def parse_timit_alignment(
    path,
    vowels=DEFAULT_VOWELS,
    sample_rate: int = 16000,
    hop_seconds: float = 0.01,
) -> PhoneAlignment:
    """Frame-level vowel flags and vowel-segment count from a phone file."""
    hop = round(hop_seconds * sample_rate)
    segments = []
    prev_end = 0
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ParseError(f"{path}:{lineno}: expected 'start end phone', got {line!r}")
        try:
            start, end = int(parts[0]), int(parts[1])
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: non-integer boundary") from exc
        if start < prev_end or end <= start:
            raise ParseError(f"{path}:{lineno}: non-monotone boundaries {start}..{end}")
        prev_end = end
        segments.append((start, end, parts[2].lower()))

    num_frames = segments[-1][1] // hop if segments else 0
    flags = np.zeros(num_frames, dtype=np.int64)
    count = 0
    for start, end, phone in segments:
        if phone in vowels:
            count += 1
            lo = start // hop
            hi = min(num_frames, -(-end // hop))
            flags[lo:hi] = 1
    return PhoneAlignment(flags, count, num_frames)


@dataclass
class WordProsodyLabels:
    words: list[str]
    prominence: np.ndarray
    boundary: np.ndarray


def parse_tobi_labels(path) -> WordProsodyLabels:
    """Binary word prominence/boundary labels from accent + break tiers.

    A word is prominent when any of its accents is in the prominent set;
    a boundary word carries break index 3 or 4. Unknown accent symbols
    are warned about and skipped (annotation noise is tolerated); a
    missing or out-of-range break index is a parse error.
    """
    words, prominence, boundary = [], [], []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.rstrip("\n").split("\t")
        if len(parts) != 3:
            raise ParseError(
                f"{path}:{lineno}: expected 'word<TAB>accents<TAB>break', got {line!r}"
            )
        word, accent_field, break_field = parts
        try:
            break_index = int(break_field)
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: non-integer break index {break_field!r}") from exc
        if break_index not in range(0, 5):
            raise ParseError(f"{path}:{lineno}: break index {break_index} outside 0..4")

        accents = [a.strip() for a in accent_field.split(",") if a.strip() and a.strip() != "-"]
        prominent = 0
        for accent in accents:
            if accent in PROMINENT_ACCENTS:
                prominent = 1
            elif accent not in KNOWN_ACCENTS:
                warnings.warn(f"{path}:{lineno}: unknown accent symbol {accent!r}, skipped")
        words.append(word)
        prominence.append(prominent)
        boundary.append(int(break_index in BOUNDARY_BREAKS))
    return WordProsodyLabels(
        words, np.array(prominence, dtype=np.int64), np.array(boundary, dtype=np.int64)
    )


def parse_ravdess_id(filename) -> tuple[int, int]:
    """(emotion class 0..7, speaker id) from a 7-field hyphenated name."""
    stem = Path(filename).stem
    fields = stem.split("-")
    if len(fields) != 7:
        raise ParseError(f"{filename}: expected 7 hyphen-separated fields, got {len(fields)}")
    try:
        emotion_code = int(fields[2])
        speaker = int(fields[6])
    except ValueError as exc:
        raise ParseError(f"{filename}: non-integer emotion or speaker field") from exc
    if not 1 <= emotion_code <= 8:
        raise ParseError(f"{filename}: emotion code {emotion_code} outside 1..8")
    return emotion_code - 1, speaker
