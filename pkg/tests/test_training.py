"""Phrase-scorer training: determinism, objective, degenerate cases."""

from __future__ import annotations

import numpy as np
import pytest

from casesum import phrase_scorer as ps
from casesum import synthetic
from casesum.corpus import CaseDocument
from casesum.phrase_scorer import Hyperparams, NoSummarizedDocuments

from conftest import make_doc, make_sentence


def small_corpus(n_docs=12):
    vocab = synthetic.make_vocab(n_content=120, n_filler=80)
    docs = synthetic.build_training_documents(
        vocab, n_docs=n_docs, sentences_per_doc=12, seed=9)
    table = synthetic.make_embedding_table(vocab, dim=16, seed=9)
    return docs, table


HYPER = Hyperparams(embedding_dim=16, conv_filters=8, window_size=3,
                    hidden_size=8, learning_rate=0.01, epochs=14, seed=5)


@pytest.fixture(scope="module")
def trained():
    docs, table = small_corpus()
    model, history = ps.train(docs, HYPER, table)
    return docs, table, model, history


class TestTraining:
    def test_loss_strictly_decreases_early(self, trained):
        # deterministic run; the recorded curve for this config decreases
        # strictly through epoch 10
        _, _, _, history = trained
        losses = [h.mean_loss for h in history[:10]]
        assert all(b < a for a, b in zip(losses, losses[1:]))

    def test_loss_moving_window_non_increasing(self, trained):
        _, _, _, history = trained
        losses = [h.mean_loss for h in history]
        window = [sum(losses[i:i + 5]) / 5 for i in range(len(losses) - 4)]
        assert all(b <= a + 1e-12 for a, b in zip(window, window[1:]))

    def test_summary_scores_beat_document_scores(self, trained):
        docs, _, model, _ = trained
        wins = 0
        for doc in docs:
            scored = ps.score_document(doc.body_sentences(), model)
            summary_scores = np.concatenate(ps.score_against_document(
                doc.summary, scored.document_feature, model))
            wins += summary_scores.mean() > scored.flat_scores().mean()
        assert wins >= 0.9 * len(docs)

    def test_fixed_seed_bit_identical(self, tmp_path, trained):
        docs, table, model, _ = trained
        again, _ = ps.train(docs, HYPER, table)
        assert ps.models_equal(model, again)
        a, b = tmp_path / "a.espm", tmp_path / "b.espm"
        ps.save_model(model, a)
        ps.save_model(again, b)
        assert a.read_bytes() == b.read_bytes()

    def test_trained_model_round_trips_exactly(self, tmp_path, trained):
        _, _, model, _ = trained
        path = tmp_path / "m.espm"
        ps.save_model(model, path)
        assert ps.models_equal(model, ps.load_model(path))


class TestDegenerateCases:
    def test_single_document_trains_without_negatives(self):
        docs, table = small_corpus(n_docs=1)
        hyper = Hyperparams(embedding_dim=16, conv_filters=8, window_size=3,
                            hidden_size=8, epochs=2, seed=1)
        model, history = ps.train(docs, hyper, table)
        assert len(history) == 2
        assert model.conv_kernel.shape == (8, 48)

    def test_unsummarized_documents_are_skipped(self):
        docs, table = small_corpus(n_docs=3)
        plain = make_doc("plain", [make_sentence("w0", "w1", "w2")])
        hyper = Hyperparams(embedding_dim=16, conv_filters=8, window_size=3,
                            hidden_size=8, epochs=1, seed=1)
        model, _ = ps.train(docs + [plain], hyper, table)
        assert model is not None

    def test_no_summarized_documents_rejected(self):
        _, table = small_corpus(n_docs=1)
        plain = make_doc("plain", [make_sentence("w0", "w1")])
        with pytest.raises(NoSummarizedDocuments):
            ps.train([plain], HYPER, table)


class TestEpochLog:
    def test_history_shape(self, trained):
        _, _, _, history = trained
        assert [h.epoch for h in history] == list(range(1, HYPER.epochs + 1))
        assert all(h.mean_loss >= 0.0 for h in history)
        assert all(h.wall_ms >= 0.0 for h in history)
