"""Property tests for the matching formulas (hypothesis)."""

from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from casesum.lexmatch import (TextUnit, lcs_scores, match_option, ngram_scores,
                              skip_bigram_scores, unigram_skip_scores,
                              wlcs_scores)

words = st.sampled_from(["a", "b", "c", "d", "e"])
sentence = st.lists(words, min_size=1, max_size=8)
unit_strategy = st.lists(sentence, min_size=0, max_size=3).map(
    TextUnit.from_sentences)
nonempty_unit = st.lists(sentence, min_size=1, max_size=3).map(
    TextUnit.from_sentences)
single_sentence_unit = sentence.map(lambda s: TextUnit.from_sentences([s]))

ALL_FORMULAS = [
    lambda q, c: ngram_scores(q, c, 1),
    lambda q, c: ngram_scores(q, c, 2),
    skip_bigram_scores,
    unigram_skip_scores,
    lcs_scores,
    wlcs_scores,
]


@given(unit_strategy, unit_strategy)
@settings(max_examples=60)
def test_all_scores_in_unit_interval(q, c):
    for value in match_option(q, c):
        assert 0.0 <= value <= 1.0 + 1e-12


@given(unit_strategy, unit_strategy)
@settings(max_examples=60)
def test_f_measure_is_harmonic_mean(q, c):
    for formula in ALL_FORMULAS:
        s = formula(q, c)
        if s.recall + s.precision > 0:
            expected = 2 * s.precision * s.recall / (s.precision + s.recall)
            assert s.f_measure == pytest.approx(expected, abs=1e-12)
        else:
            assert s.f_measure == 0.0


@given(unit_strategy, unit_strategy)
@settings(max_examples=60)
def test_duality_multiset_formulas(q, c):
    """recall(q, c) == precision(c, q) for the clipped-count formulas."""
    for formula in ALL_FORMULAS[:4]:
        assert formula(q, c).recall == pytest.approx(formula(c, q).precision,
                                                     abs=1e-12)


@given(single_sentence_unit, single_sentence_unit)
@settings(max_examples=60)
def test_duality_sequence_formulas_single_sentence(q, c):
    # union-LCS is direction-dependent on multi-sentence units (ROUGE-L
    # marking); on single sentences both sequence formulas are symmetric
    assert lcs_scores(q, c).recall == pytest.approx(
        lcs_scores(c, q).precision, abs=1e-12)
    assert wlcs_scores(q, c).recall == pytest.approx(
        wlcs_scores(c, q).precision, abs=1e-12)


@given(nonempty_unit, nonempty_unit)
@settings(max_examples=40)
def test_wlcs_duality_any_shape(q, c):
    assert wlcs_scores(q, c).recall == pytest.approx(
        wlcs_scores(c, q).precision, abs=1e-12)


@given(nonempty_unit, nonempty_unit)
@settings(max_examples=40)
def test_unigram_recall_monotone_in_candidate_repetition(q, c):
    doubled = TextUnit(c.sentences + c.sentences)
    assert ngram_scores(q, doubled, 1).recall >= ngram_scores(q, c, 1).recall


@given(sentence, sentence)
@settings(max_examples=40)
def test_wlcs_exponent_one_equals_lcs_exhaustive(x, y):
    got = wlcs_scores(TextUnit.from_sentences([x]),
                      TextUnit.from_sentences([y]), 1.0)
    length = oracles.lcs_length(x, y)
    assert got.recall == pytest.approx(length / len(x), abs=1e-12)
    assert got.precision == pytest.approx(length / len(y), abs=1e-12)


@given(sentence, sentence,
       st.floats(min_value=1.0, max_value=2.0, allow_nan=False))
@settings(max_examples=40, deadline=None)
def test_wlcs_matches_exhaustive_oracle(x, y, exponent):
    got = wlcs_scores(TextUnit.from_sentences([x]),
                      TextUnit.from_sentences([y]), exponent)
    r, p, f = oracles.wlcs_prf(x, y, exponent)
    assert got.recall == pytest.approx(r, abs=1e-9)
    assert got.precision == pytest.approx(p, abs=1e-9)
    assert got.f_measure == pytest.approx(f, abs=1e-9)


@given(unit_strategy)
@settings(max_examples=40)
def test_self_match_is_perfect(q):
    if q.is_empty():
        return
    for formula in ALL_FORMULAS:
        s = formula(q, q)
        if formula is ALL_FORMULAS[1] and all(len(s_) < 2 for s_ in q.sentences):
            continue  # no bigrams exist at all
        if formula is ALL_FORMULAS[2] and all(len(s_) < 2 for s_ in q.sentences):
            continue
        assert s.recall == pytest.approx(1.0)
        assert s.precision == pytest.approx(1.0)
