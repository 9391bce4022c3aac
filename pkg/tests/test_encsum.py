"""Document vectors, relevance vectors and summary generation."""

from __future__ import annotations

import numpy as np
import pytest

from casesum import encsum, phrase_scorer as ps
from casesum.encsum import (EmptyDocument, GeneratedSummary, LengthMismatch,
                            compose_doc_vector, generate_summary,
                            relevance_vector)

from conftest import make_doc, make_sentence, random_sentences, tiny_model


def scored_fixture(rng, n_sentences=6):
    model = tiny_model()
    doc = make_doc("d", list(random_sentences(rng, n_sentences,
                                              min_len=4, max_len=7)))
    return model, doc, ps.score_document(doc.body_sentences(), model)


def manual_scored(window_features, scores, window_size, lengths):
    """Assemble a ScoredDocument from explicit pieces."""
    sent_feats = np.stack([w.max(axis=0) for w in window_features])
    return ps.ScoredDocument(
        tuple(window_features), sent_feats, sent_feats.max(axis=0),
        tuple(np.asarray(s, dtype=float) for s in scores),
        tuple(lengths), window_size)


class TestComposeDocVector:
    def test_single_phrase_is_its_context(self, rng):
        model, doc, scored = scored_fixture(rng)
        one = make_doc("one", [make_sentence("w0", "w1")])
        sd = ps.score_document(one.body_sentences(), model)
        assert sd.phrase_count == 1
        got = compose_doc_vector(sd)
        expected = np.concatenate([sd.document_feature,
                                   sd.sentence_features[0],
                                   sd.window_features[0][0]])
        assert np.array_equal(got, expected)

    def test_uniform_scores_give_plain_mean(self):
        w1 = np.array([[1.0, 0.0], [0.0, 2.0]])
        scored = manual_scored([w1], [[0.4, 0.4]], 1, [2])
        got = compose_doc_vector(scored)
        contexts = [np.concatenate([[1.0, 2.0], [1.0, 2.0], row]) for row in w1]
        assert np.allclose(got, np.mean(contexts, axis=0))

    def test_hand_weighted_average(self):
        # scores 0.2 / 0.8 over contexts 1.0 / 2.0 -> 1.8
        w = np.array([[1.0], [2.0]])
        scored = manual_scored([w], [[0.2, 0.8]], 1, [2])
        got = compose_doc_vector(scored)
        assert got[2] == pytest.approx(1.8)

    def test_convex_combination_bound(self, rng):
        _, _, scored = scored_fixture(rng)
        vec = compose_doc_vector(scored)
        contexts = []
        for idx, acts in enumerate(scored.window_features):
            for row in acts:
                contexts.append(np.concatenate([
                    scored.document_feature, scored.sentence_features[idx], row]))
        stacked = np.stack(contexts)
        assert (vec >= stacked.min(axis=0) - 1e-12).all()
        assert (vec <= stacked.max(axis=0) + 1e-12).all()

    def test_multiplicative_score_invariance(self, rng):
        _, _, scored = scored_fixture(rng)
        base = compose_doc_vector(scored)
        scaled = ps.ScoredDocument(
            scored.window_features, scored.sentence_features,
            scored.document_feature, tuple(0.1 * s for s in scored.scores),
            scored.sentence_lengths, scored.window_size)
        assert np.allclose(compose_doc_vector(scaled), base, atol=1e-12)

    def test_empty_rejected(self):
        scored = ps.ScoredDocument(
            (np.zeros((0, 2)),), np.zeros((1, 2)), np.zeros(2),
            (np.zeros(0),), (0,), 1)
        with pytest.raises(EmptyDocument):
            compose_doc_vector(scored)


class TestRelevanceVector:
    def test_zero_annihilates(self):
        assert not relevance_vector(np.zeros(3), np.array([1.0, 2.0, 3.0])).any()

    def test_ones_identity(self):
        vec = np.array([1.5, -2.0, 0.25])
        assert np.array_equal(relevance_vector(np.ones(3), vec), vec)

    def test_hand_product(self):
        got = relevance_vector(np.array([2.0, 3.0]), np.array([4.0, -1.0]))
        assert np.array_equal(got, [8.0, -3.0])

    def test_commutative_and_self_nonnegative(self, rng):
        a, b = rng.standard_normal(6), rng.standard_normal(6)
        assert np.array_equal(relevance_vector(a, b), relevance_vector(b, a))
        assert (relevance_vector(a, a) >= 0).all()

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            relevance_vector(np.zeros(3), np.zeros(4))


class TestGenerateSummary:
    def test_full_budget_takes_whole_single_sentence(self, rng):
        model = tiny_model()
        doc = make_doc("d", [make_sentence("w0", "w1", "w2", "w3")])
        scored = ps.score_document(doc.body_sentences(), model)
        summary = generate_summary(scored, doc, 1.0)
        assert summary.phrases == (("w0", "w1", "w2", "w3"),)
        assert summary.total_tokens == 4

    def test_token_budget_bounds(self, rng):
        model, doc, scored = scored_fixture(rng, n_sentences=10)
        total = doc.body_token_count()
        longest = max(len(s) for s in doc.body_sentences())
        summary = generate_summary(scored, doc, 0.2)
        assert 0.2 * total < summary.total_tokens <= 0.2 * total + longest

    def test_hand_simulated_selection(self):
        # two sentences of 6 tokens, window 3; scores force the order:
        # best window (s1, start 1), then (s0, start 3), then (s0, start 0)
        surfaces0 = ["a0", "a1", "a2", "a3", "a4", "a5"]
        surfaces1 = ["b0", "b1", "b2", "b3", "b4", "b5"]
        doc = make_doc("d", [make_sentence(*surfaces0),
                             make_sentence(*surfaces1)])
        w = np.zeros((4, 1))
        scores0 = [0.5, 0.1, 0.1, 0.6]
        scores1 = [0.2, 0.9, 0.3, 0.4]
        scored = manual_scored([w, w], [scores0, scores1], 3, [6, 6])
        # budget: t = 0.5 -> 6 tokens; picks (s1,1)->3 new, (s0,3)->3 new,
        # total 6 == budget not exceeded, next (s0,0) -> 3 new, total 9 > 6
        summary = generate_summary(scored, doc, 0.5)
        assert summary.total_tokens == 9
        assert summary.phrases == (("a0", "a1", "a2", "a3", "a4", "a5"),
                                   ("b1", "b2", "b3"))
        assert summary.positions == ((0, 0), (1, 1))

    def test_adjacent_windows_merge(self):
        doc = make_doc("d", [make_sentence("x0", "x1", "x2", "x3")])
        w = np.zeros((3, 1))
        # windows (0..2) and (1..3) overlap; both selected -> one phrase
        scored = manual_scored([w], [[0.9, 0.8, 0.1]], 2, [4])
        summary = generate_summary(scored, doc, 0.7)
        assert summary.phrases == (("x0", "x1", "x2"),)

    def test_ties_break_by_earlier_position(self):
        doc = make_doc("d", [make_sentence("x0", "x1", "x2", "x3", "x4")])
        w = np.zeros((3, 1))
        scored = manual_scored([w], [[0.5, 0.5, 0.5]], 3, [5])
        summary = generate_summary(scored, doc, 0.4)  # budget 2 -> first window
        assert summary.positions == ((0, 0),)
        assert summary.phrases == (("x0", "x1", "x2"),)

    def test_every_token_traceable(self, rng):
        model, doc, scored = scored_fixture(rng, n_sentences=8)
        summary = generate_summary(scored, doc, 0.3)
        sentences = doc.body_sentences()
        for phrase, (sent_idx, start) in zip(summary.phrases, summary.positions):
            assert sentences[sent_idx].surfaces()[start:start + len(phrase)] \
                == phrase

    def test_shortest_phrase_has_window_length(self, rng):
        model, doc, scored = scored_fixture(rng, n_sentences=8)
        summary = generate_summary(scored, doc, 0.3)
        assert min(len(p) for p in summary.phrases) >= scored.window_size

    def test_bad_threshold(self, rng):
        model, doc, scored = scored_fixture(rng)
        for bad in (0.0, -0.1, 1.5):
            with pytest.raises(ValueError):
                generate_summary(scored, doc, bad)

    def test_document_mismatch(self, rng):
        model, doc, scored = scored_fixture(rng, n_sentences=4)
        other = make_doc("other", [make_sentence("w0", "w1", "w2")])
        with pytest.raises(LengthMismatch):
            generate_summary(scored, other, 0.5)
