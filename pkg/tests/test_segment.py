import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import brute_force_segment
from thaiseq.errors import ConfigError
from thaiseq.segment import (Lexicon, build_lexicon, load_lexicon, segment_maximal_matching,
                             segment_syllables, tokenize)

TOY = ["ab", "a", "b", "abc", "cd", "dab"]


def _cost(seg, lex):
    unk = sum(len(t) for t, u in zip(seg.tokens, seg.unknown) if u)
    return unk, len(seg.tokens)


class TestLexicon:
    def test_size(self):
        assert len(build_lexicon(["กา", "กาก"])) == 2

    def test_duplicates_merge(self):
        assert len(build_lexicon(["a", "a"])) == 1

    def test_empty_raises(self):
        with pytest.raises(ConfigError):
            build_lexicon(["", "  "])

    def test_file_loading_skips_comments(self, tmp_path):
        p = tmp_path / "lex.txt"
        words = [f"w{k}" for k in range(500)]
        p.write_text("# header\n" + "\n".join(words + words[:10]) + "\n\n", encoding="utf-8")
        lex = load_lexicon(p)
        assert len(lex) == len(set(words))
        assert "# header" not in lex

    def test_longest_prefix(self):
        lex = build_lexicon(["ก", "กา", "กาก"])
        assert lex.longest_prefix("กากบาท") == "กาก"
        assert lex.longest_prefix("ขา") is None
        assert lex.prefix_ends("กาข", 0) == [1, 2]

    @given(st.text(alphabet="abc", max_size=8))
    def test_prefix_query_iff_entry(self, q):
        lex = build_lexicon(TOY)
        ends = lex.prefix_ends(q, 0)
        expected = [j for j in range(1, len(q) + 1) if q[:j] in set(TOY)]
        assert ends == expected


class TestMaximalMatching:
    def test_empty(self):
        assert segment_maximal_matching("", build_lexicon(["a"])).tokens == []

    def test_fewest_tokens(self):
        assert segment_maximal_matching("ab", build_lexicon(["ab", "a", "b"])).tokens == ["ab"]

    def test_aab(self):
        assert segment_maximal_matching("aab", build_lexicon(["aa", "b"])).tokens == ["aa", "b"]

    def test_unknown_run_grouped(self):
        seg = segment_maximal_matching("xyzab", build_lexicon(["ab"]))
        assert seg.tokens == ["xyz", "ab"]
        assert seg.unknown == [True, False]

    def test_spans_cover_input(self):
        seg = segment_maximal_matching("ดีมากxกิน", build_lexicon(["ดี", "มาก", "กิน"]))
        assert seg.spans[0][0] == 0 and seg.spans[-1][1] == len("ดีมากxกิน")
        assert all(a[1] == b[0] for a, b in zip(seg.spans, seg.spans[1:]))

    def test_thai_sentence(self, thai_lexicon):
        assert segment_maximal_matching("ฉันชอบกินข้าว", thai_lexicon).tokens == ["ฉัน", "ชอบ", "กิน", "ข้าว"]

    @pytest.mark.parametrize("text", ["abcd", "dabc", "cdab", "aabb", "xxab", "abxx", "axbxc", "ddabcc"])
    def test_matches_brute_force(self, text):
        lex = build_lexicon(TOY)
        seg = segment_maximal_matching(text, lex)
        cost, tokens = brute_force_segment(text, set(TOY))
        assert _cost(seg, lex) == cost
        assert seg.tokens == tokens

    @settings(max_examples=300, deadline=None)
    @given(st.text(alphabet="abcdx", max_size=12))
    def test_oracle_equivalence(self, text):
        lex = build_lexicon(TOY)
        seg = segment_maximal_matching(text, lex)
        cost, tokens = brute_force_segment(text, set(TOY))
        assert _cost(seg, lex) == cost
        assert seg.tokens == tokens

    @given(st.text(max_size=40))
    def test_lossless(self, text):
        lex = build_lexicon(TOY + ["ดี", "มาก"])
        assert "".join(segment_maximal_matching(text, lex).tokens) == text

    @given(st.text(alphabet="abcdx", min_size=1, max_size=10))
    def test_whole_input_in_lexicon_gives_one_token(self, text):
        lex = build_lexicon(TOY + [text])
        assert segment_maximal_matching(text, lex).tokens == [text]

    def test_deterministic(self):
        lex = build_lexicon(TOY)
        runs = {tuple(segment_maximal_matching("abcdabx", lex).spans) for _ in range(5)}
        assert len(runs) == 1

    def test_long_input_is_fast(self, thai_lexicon):
        import time
        text = "ฉันชอบกินข้าวที่ร้านอาหารวันนี้xyz" * 200
        t0 = time.perf_counter()
        seg = segment_maximal_matching(text, thai_lexicon)
        assert time.perf_counter() - t0 < 5.0
        assert "".join(seg.tokens) == text


class TestSyllables:
    def test_requires_syllable_lexicon(self):
        with pytest.raises(ConfigError):
            segment_syllables("กา", build_lexicon(["กา"]))

    def test_identity_and_split(self):
        lex = build_lexicon(["กา", "แฟ", "โรง", "เรียน"], kind="syllable")
        assert segment_syllables("", lex).tokens == []
        assert segment_syllables("กา", lex).tokens == ["กา"]
        seg = segment_syllables("กาแฟ", lex)
        assert seg.tokens == ["กา", "แฟ"]
        cost, tokens = brute_force_segment("โรงเรียน", {"กา", "แฟ", "โรง", "เรียน"})
        assert segment_syllables("โรงเรียน", lex).tokens == tokens == ["โรง", "เรียน"]


class TestTokenize:
    def test_whitespace_tokens_kept(self, thai_lexicon):
        assert tokenize("ฉัน ชอบ  แมว", thai_lexicon) == ["ฉัน", " ", "ชอบ", "  ", "แมว"]

    def test_markers_atomic(self, thai_lexicon):
        assert tokenize("ดี<_>มาก", thai_lexicon, keep=["<_>"]) == ["ดี", "<_>", "มาก"]
