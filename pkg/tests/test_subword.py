import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import cut_segmentations
from thaiseq.errors import ConfigError, FitError, FormatError
from thaiseq.subword import (SubwordModel, encode_ids, encode_unigram, expected_counts, path_score,
                             probabilities_sum, run_em, train_unigram)

CORPUS = ["ฉันชอบกินข้าว", "ฉันชอบแมว", "แมวชอบกินปลา", "ข้าวมันไก่อร่อย", "กินข้าวกับแมว"] * 3


def brute_force_encode(model, text):
    best, arg = -math.inf, None
    for pieces in cut_segmentations(text):
        if any(len(p) > 1 and p not in model.pieces for p in pieces):
            continue
        s = path_score(model, pieces)
        if s > best:
            best, arg = s, pieces
    return arg, best


@pytest.fixture(scope="module")
def model():
    return train_unigram(CORPUS, target_vocab=30)


class TestEStep:
    def test_hand_enumerated_aaaa(self):
        pieces = {"a": math.log(0.5), "aa": math.log(0.5)}
        counts, ll = expected_counts({"aaaa": 1}, pieces, 8)
        # segmentations: a|a|a|a, three with one "aa", aa|aa
        z = 0.5 ** 4 + 3 * 0.5 ** 3 + 0.5 ** 2
        assert ll == pytest.approx(math.log(z), rel=1e-12)
        assert counts["aa"] == pytest.approx((3 * 0.5 ** 3 + 2 * 0.5 ** 2) / z, rel=1e-12)
        assert counts["a"] == pytest.approx((4 * 0.5 ** 4 + 6 * 0.5 ** 3) / z, rel=1e-12)

    def test_em_favours_long_piece_from_its_basin(self):
        pieces = {"a": math.log(0.3), "aa": math.log(0.7)}
        out, _, lls = run_em({"aaaa": 50}, pieces, 20)
        assert out["aa"] > out["a"]
        assert all(b >= a - 1e-9 for a, b in zip(lls, lls[1:]))

    def test_counts_scale_with_frequency(self):
        pieces = {"a": math.log(0.5), "b": math.log(0.5)}
        counts, _ = expected_counts({"ab": 3}, pieces, 8)
        assert counts == {"a": 3.0, "b": 3.0}


class TestTraining:
    def test_single_character_corpus(self):
        m = train_unigram(["a"], target_vocab=1)
        assert m.pieces == {"a": 0.0}

    def test_probabilities_normalised(self, model):
        assert abs(probabilities_sum(model) - 1.0) < 1e-6

    def test_size_and_coverage(self, model):
        assert len(model) <= 30
        assert {ch for s in CORPUS for ch in s} <= set(model.pieces)

    def test_em_monotone(self, model):
        by_round = {}
        for rnd, _, ll in model.history:
            by_round.setdefault(rnd, []).append(ll)
        for lls in by_round.values():
            assert all(b >= a - 1e-9 * abs(a) for a, b in zip(lls, lls[1:]))

    def test_target_below_alphabet(self):
        with pytest.raises(ConfigError):
            train_unigram(["abc"], target_vocab=2)

    def test_bad_prune_fraction(self):
        with pytest.raises(ConfigError):
            train_unigram(["abc"], target_vocab=5, prune_fraction=1.0)

    def test_empty_corpus(self):
        with pytest.raises(FitError):
            train_unigram([], target_vocab=5)

    def test_space_marker_not_a_piece(self):
        m = train_unigram(["ab<_>ab<_>abc"], target_vocab=5)
        assert "<_>" not in m.pieces
        assert not any("<" in p for p in m.pieces)

    def test_deterministic(self):
        a = train_unigram(CORPUS, target_vocab=25)
        b = train_unigram(CORPUS, target_vocab=25)
        assert a.to_dict() == b.to_dict()


class TestEncode:
    def test_empty(self, model):
        assert encode_unigram(model, "") == []

    def test_top_piece_alone(self, model):
        top = max((p for p in model.pieces if len(p) > 1), key=model.pieces.get)
        assert encode_unigram(model, top) == [top]

    def test_unknown_char_kept_and_mapped(self, model):
        out = encode_unigram(model, "ฉันZ")
        assert "".join(out) == "ฉันZ"
        assert "Z" in out
        ids = encode_ids(model, "Z")
        assert ids == [model.piece_to_id()["<unk>"]]

    def test_space_marker_atomic(self, model):
        assert "<_>" in encode_unigram(model, "แมว<_>แมว")

    def test_toy_model_brute_force(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            lps = np.log(rng.dirichlet(np.ones(4)))
            m = SubwordModel(dict(zip(["a", "b", "ab", "ba"], lps.tolist())), 4)
            text = "".join(rng.choice(["a", "b"], size=8))
            got = encode_unigram(m, text)
            ref, best = brute_force_encode(m, text)
            assert path_score(m, got) == pytest.approx(best, abs=1e-12)
            assert got == ref

    @settings(max_examples=100, deadline=None)
    @given(st.text(alphabet="ฉันชอบกินข้าวแมวZ", max_size=8))
    def test_viterbi_dominates(self, text):
        m = train_unigram(CORPUS, target_vocab=30)
        got = encode_unigram(m, text)
        _, best = brute_force_encode(m, text)
        assert path_score(m, got) >= best - 1e-9

    @given(st.text(max_size=30))
    def test_lossless(self, text):
        m = train_unigram(CORPUS, target_vocab=30)
        assert "".join(encode_unigram(m, text)) == text


class TestSerialisation:
    def test_round_trip_exact(self, model):
        again = SubwordModel.from_dict(model.to_dict())
        assert again.pieces == model.pieces
        assert again.vocab() == model.vocab()

    def test_bad_version(self, model):
        d = model.to_dict()
        d["version"] = 99
        with pytest.raises(FormatError):
            SubwordModel.from_dict(d)

    def test_vocab_specials_first(self, model):
        assert model.vocab()[:4] == ["<pad>", "<unk>", "<mask>", "<_>"]
