import numpy as np
import pytest

from maskedprosody.datasets import (
    parse_ravdess_id,
    parse_timit_alignment,
    parse_tobi_labels,
)
from maskedprosody.errors import ParseError


class TestPhoneAlignment:
    def test_single_vowel(self, tmp_path):
        p = tmp_path / "a.phn"
        p.write_text("0 1600 sil\n1600 3200 iy\n3200 4800 t\n4800 6400 sil\n")
        out = parse_timit_alignment(p)
        assert out.syllable_count == 1
        assert out.num_frames == 40
        # vowel occupies samples 1600..3200 -> frames 10..20
        assert out.frame_vowel_flags[10:20].all()
        assert out.frame_vowel_flags[:10].sum() == 0
        assert out.frame_vowel_flags[21:].sum() == 0

    def test_empty_transcription(self, tmp_path):
        p = tmp_path / "empty.phn"
        p.write_text("")
        out = parse_timit_alignment(p)
        assert out.syllable_count == 0
        assert out.num_frames == 0

    def test_three_vowel_fixture(self, tmp_path):
        p = tmp_path / "three.phn"
        p.write_text(
            "0 800 h#\n800 2400 ae\n2400 3200 t\n3200 4800 iy\n"
            "4800 5600 k\n5600 7200 ow\n7200 8000 h#\n"
        )
        out = parse_timit_alignment(p)
        assert out.syllable_count == 3
        flags = out.frame_vowel_flags
        assert flags[5:15].all() and flags[20:30].all() and flags[35:45].all()
        assert flags.sum() == 30

    def test_non_monotone_reports_line(self, tmp_path):
        p = tmp_path / "bad.phn"
        p.write_text("0 1600 sil\n1200 3200 iy\n")
        with pytest.raises(ParseError, match=":2"):
            parse_timit_alignment(p)

    def test_malformed_line(self, tmp_path):
        p = tmp_path / "bad2.phn"
        p.write_text("0 1600\n")
        with pytest.raises(ParseError):
            parse_timit_alignment(p)


class TestTobiLabels:
    def test_prominent_accent(self, tmp_path):
        p = tmp_path / "w.tsv"
        p.write_text("hello\tL+H*\t1\n")
        out = parse_tobi_labels(p)
        assert out.prominence[0] == 1 and out.boundary[0] == 0

    def test_break_two_is_not_boundary(self, tmp_path):
        p = tmp_path / "w.tsv"
        p.write_text("word\t-\t2\n")
        out = parse_tobi_labels(p)
        assert out.boundary[0] == 0

    def test_rule_composition(self, tmp_path):
        p = tmp_path / "w.tsv"
        p.write_text("word\t-\t4\n")
        out = parse_tobi_labels(p)
        assert out.prominence[0] == 0 and out.boundary[0] == 1

    def test_every_prominent_accent_symbol(self, tmp_path):
        accents = ["H*", "L*", "L*+H", "L+H*", "H+", "!H*"]
        p = tmp_path / "w.tsv"
        p.write_text("".join(f"w{i}\t{a}\t1\n" for i, a in enumerate(accents)))
        out = parse_tobi_labels(p)
        assert out.prominence.tolist() == [1] * 6

    def test_unknown_accent_warns_and_skips(self, tmp_path):
        p = tmp_path / "w.tsv"
        p.write_text("word\tZZ*,H*\t3\n")
        with pytest.warns(UserWarning, match="ZZ"):
            out = parse_tobi_labels(p)
        assert out.prominence[0] == 1  # the known accent still counts
        assert out.boundary[0] == 1

    def test_break_out_of_range(self, tmp_path):
        p = tmp_path / "w.tsv"
        p.write_text("word\t-\t7\n")
        with pytest.raises(ParseError):
            parse_tobi_labels(p)

    def test_field_count_error(self, tmp_path):
        p = tmp_path / "w.tsv"
        p.write_text("word only\n")
        with pytest.raises(ParseError):
            parse_tobi_labels(p)

    def test_round_trip_identity(self, tmp_path):
        p = tmp_path / "w.tsv"
        content = "alpha\tH*\t1\nbeta\t-\t3\ngamma\tL*,!H*\t4\n"
        p.write_text(content)
        out = parse_tobi_labels(p)
        # serialize parsed labels and re-parse
        p2 = tmp_path / "w2.tsv"
        lines = []
        for word, prom, bound in zip(out.words, out.prominence, out.boundary):
            accent = "H*" if prom else "-"
            brk = 4 if bound else 1
            lines.append(f"{word}\t{accent}\t{brk}")
        p2.write_text("\n".join(lines) + "\n")
        out2 = parse_tobi_labels(p2)
        assert out2.words == out.words
        np.testing.assert_array_equal(out2.prominence, out.prominence)
        np.testing.assert_array_equal(out2.boundary, out.boundary)


class TestRavdessId:
    def test_documented_convention_fixture(self):
        emotion, speaker = parse_ravdess_id("03-01-05-01-02-01-12.wav")
        assert emotion == 4  # fifth emotion code, zero-based
        assert speaker == 12

    def test_lowest_code_is_class_zero(self):
        emotion, _ = parse_ravdess_id("03-01-01-01-01-01-01.wav")
        assert emotion == 0

    def test_malformed(self):
        with pytest.raises(ParseError):
            parse_ravdess_id("a-b.wav")

    def test_out_of_range_emotion(self):
        with pytest.raises(ParseError):
            parse_ravdess_id("03-01-09-01-02-01-12.wav")
