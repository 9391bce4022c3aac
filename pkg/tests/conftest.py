from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from casesum.corpus import CaseDocument, Paragraph, Sentence, Token
from casesum.phrase_scorer import EmbeddingTable, Hyperparams, init_model


def make_sentence(*words: str) -> Sentence:
    return Sentence(tuple(Token.from_surface(w) for w in words))


def make_doc(doc_id: str, body: list[Sentence],
             summary: list[Sentence] | None = None,
             per_paragraph: int = 3) -> CaseDocument:
    paragraphs = tuple(Paragraph(tuple(body[i:i + per_paragraph]))
                       for i in range(0, len(body), per_paragraph))
    return CaseDocument(doc_id, tuple(summary) if summary else None, paragraphs)


TINY_VOCAB = tuple(f"w{i}" for i in range(16))


def tiny_table(dim: int, seed: int = 11) -> EmbeddingTable:
    rng = np.random.default_rng(seed)
    return EmbeddingTable(dim, {t: rng.standard_normal(dim) for t in TINY_VOCAB})


def tiny_model(seed: int = 11, **overrides):
    hyper = Hyperparams(**{
        "embedding_dim": 8, "conv_filters": 4, "window_size": 2,
        "hidden_size": 4, "negatives_per_doc": 1, "epochs": 2,
        **overrides})
    rng = np.random.default_rng(seed)
    return init_model(hyper, tiny_table(hyper.embedding_dim, seed), rng)


def random_sentences(rng: np.random.Generator, count: int,
                     min_len: int = 3, max_len: int = 6) -> tuple[Sentence, ...]:
    return tuple(
        make_sentence(*rng.choice(TINY_VOCAB, size=rng.integers(min_len, max_len + 1)))
        for _ in range(count))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(2024)
