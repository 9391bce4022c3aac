"""Document vectors and extractive summaries from phrase scores.

The latent document vector is the score-weighted average, over all
windows, of the concatenated [document; sentence; window] features, so
a document is represented by what its own scorer considers summary-like
content.  Query/candidate relevance is the coordinate-wise product of
the two document vectors.

The text summary greedily takes windows by descending score (earlier
document position wins ties), merges overlapping or touching windows of
one sentence into a single phrase, and stops right after the running
token total first exceeds ``threshold * document tokens`` -- so the
final phrase that crosses the budget is kept.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import CaseDocument
from .phrase_scorer import ScoredDocument


class EmptyDocument(ValueError):
    """Document vector composition needs at least one scored window."""


class LengthMismatch(ValueError):
    """Relevance vector inputs must have equal lengths."""


def compose_doc_vector(scored: ScoredDocument) -> np.ndarray:
    """Score-weighted average of [f_doc; f_sentence; f_window] per window."""
    if scored.phrase_count == 0:
        raise EmptyDocument("no scored windows")
    dim = scored.document_feature.shape[0]
    weighted = np.zeros(3 * dim)
    total = 0.0
    for sent_idx, (acts, scores) in enumerate(
            zip(scored.window_features, scored.scores)):
        sent_feat = scored.sentence_features[sent_idx]
        weighted[:dim] += scored.document_feature * scores.sum()
        weighted[dim:2 * dim] += sent_feat * scores.sum()
        weighted[2 * dim:] += scores @ acts
        total += float(scores.sum())
    return weighted / total


def relevance_vector(query_vec: np.ndarray, cand_vec: np.ndarray) -> np.ndarray:
    """Coordinate-wise product of two document vectors."""
    if query_vec.shape != cand_vec.shape:
        raise LengthMismatch(
            f"shapes {query_vec.shape} and {cand_vec.shape} differ")
    return query_vec * cand_vec


@dataclass(frozen=True)
class GeneratedSummary:
    """Extracted phrases in document order, with their source positions."""

    phrases: tuple[tuple[str, ...], ...]
    positions: tuple[tuple[int, int], ...]  # (sentence index, token start)
    total_tokens: int

    def token_sequences(self) -> list[list[str]]:
        return [list(p) for p in self.phrases]


def generate_summary(scored: ScoredDocument, doc: CaseDocument,
                     threshold_fraction: float) -> GeneratedSummary:
    """Select top-scoring windows until the token budget is exceeded."""
    if not 0.0 < threshold_fraction <= 1.0:
        raise ValueError(f"threshold must be in (0, 1], got {threshold_fraction}")
    sentences = doc.body_sentences()
    if len(sentences) != len(scored.sentence_lengths):
        raise LengthMismatch("scored document does not match this document")

    window = scored.window_size
    ranked = []
    for sent_idx, scores in enumerate(scored.scores):
        length = scored.sentence_lengths[sent_idx]
        for start, score in enumerate(scores):
            ranked.append((-float(score), sent_idx, start,
                           min(start + window, length)))
    ranked.sort()

    budget = threshold_fraction * sum(scored.sentence_lengths)
    covered = [np.zeros(n, dtype=bool) for n in scored.sentence_lengths]
    total = 0
    for _, sent_idx, start, end in ranked:
        span = covered[sent_idx][start:end]
        total += int((~span).sum())
        span[:] = True
        if total > budget:
            break

    phrases, positions = [], []
    for sent_idx, mask in enumerate(covered):
        surfaces = sentences[sent_idx].surfaces()
        start = None
        for pos in range(len(mask) + 1):
            inside = pos < len(mask) and mask[pos]
            if inside and start is None:
                start = pos
            elif not inside and start is not None:
                phrases.append(tuple(surfaces[start:pos]))
                positions.append((sent_idx, start))
                start = None

    return GeneratedSummary(tuple(phrases), tuple(positions), total)
