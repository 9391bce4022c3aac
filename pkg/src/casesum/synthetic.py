"""Synthetic corpora with planted relevance structure.

Real case collections cannot ship with the repo, so tests and the demo
pipeline run on generated ones.  The construction mirrors the retrieval
problem:

* a *content* vocabulary supplies topical sentences and a *filler*
  vocabulary supplies background; summaries only ever sample topical
  sentences, which is the register the phrase scorer can learn;
* every content word has a *synonym* twin with the identical embedding
  vector but a different surface form.  Noticed candidates write part
  of their topical sentences in synonym forms, so lexical overlap with
  the query is degraded while the latent-vector overlap is not -- the
  signal that rewards combining both feature families;
* decoy candidates sprinkle a few literal query-topic words into
  filler sentences (lexical bait with no topical density).

Words are 5-letter consonant-vowel codes so tokenization and Porter
stemming leave them intact and collision-free.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import CaseDocument, Paragraph, QueryInstance, Sentence, Token
from .phrase_scorer import EmbeddingTable
from .porter import stem

_CONSONANTS = "bdfgklmnprtvz"
_VOWELS = "aeiou"


def _code_word(idx: int) -> str:
    c, v = _CONSONANTS, _VOWELS
    return "".join([
        c[idx % 13], v[(idx // 13) % 5], c[(idx // 65) % 13],
        v[(idx // 845) % 5], c[(idx // 4225) % 13],
    ])


@dataclass(frozen=True)
class SyntheticVocab:
    content: tuple[str, ...]
    synonyms: dict[str, str]  # canonical content word -> same-embedding twin
    filler: tuple[str, ...]

    def all_words(self) -> list[str]:
        return list(self.content) + list(self.synonyms.values()) + list(self.filler)


def make_vocab(n_content: int = 600, n_filler: int = 300) -> SyntheticVocab:
    content = tuple(_code_word(i) for i in range(n_content))
    synonyms = {w: _code_word(10_000 + i) for i, w in enumerate(content)}
    filler = tuple(_code_word(30_000 + i) for i in range(n_filler))
    words = list(content) + list(synonyms.values()) + list(filler)
    stems = {stem(w) for w in words}
    if len(stems) != len(words):
        raise AssertionError("generated words collide after stemming")
    return SyntheticVocab(content, synonyms, filler)


def make_embedding_table(vocab: SyntheticVocab, dim: int,
                         seed: int) -> EmbeddingTable:
    """Random unit-scale vectors; synonym twins share their base vector."""
    rng = np.random.default_rng(seed)
    vectors: dict[str, np.ndarray] = {}
    for word in vocab.content:
        vec = rng.standard_normal(dim) / np.sqrt(dim)
        vectors[word] = vec
        vectors[vocab.synonyms[word]] = vec.copy()
    for word in vocab.filler:
        vectors[word] = rng.standard_normal(dim) / np.sqrt(dim)
    return EmbeddingTable(dim, vectors)


def _sentence(words: Sequence[str]) -> Sentence:
    return Sentence(tuple(Token.from_surface(w) for w in words))


def _paragraphs(sentences: list[Sentence], per_paragraph: int = 3) -> tuple:
    return tuple(Paragraph(tuple(sentences[i:i + per_paragraph]))
                 for i in range(0, len(sentences), per_paragraph))


def _draw_sentence(rng: np.random.Generator, pool: Sequence[str],
                   length: int) -> Sentence:
    return _sentence(list(rng.choice(pool, size=length)))


def build_training_documents(vocab: SyntheticVocab, n_docs: int = 60,
                             sentences_per_doc: int = 20,
                             summary_sentences: int = 3,
                             sentence_length: int = 9,
                             seed: int = 0) -> list[CaseDocument]:
    """Summarized documents: summaries sample topical sentences + noise."""
    rng = np.random.default_rng(seed)
    docs = []
    n_topical = max(summary_sentences + 2, sentences_per_doc // 3)
    for i in range(n_docs):
        topic = rng.choice(vocab.content, size=12, replace=False)
        topical = [_draw_sentence(rng, topic, sentence_length)
                   for _ in range(n_topical)]
        filler = [_draw_sentence(rng, vocab.filler, sentence_length)
                  for _ in range(sentences_per_doc - n_topical)]
        body = topical + filler
        rng.shuffle(body)

        summary = []
        for j in rng.choice(n_topical, size=summary_sentences, replace=False):
            words = list(topical[j].surfaces())
            for pos in range(len(words)):  # paraphrase noise
                if rng.random() < 0.2:
                    words[pos] = str(rng.choice(topic))
            summary.append(_sentence(words))

        docs.append(CaseDocument(f"train{i:03d}", tuple(summary),
                                 _paragraphs(body)))
    return docs


@dataclass(frozen=True)
class RetrievalSpec:
    n_queries: int = 40
    n_candidates: int = 50
    n_noticed: int = 5
    topic_size: int = 12
    sentence_length: int = 9
    query_body_sentences: int = 12
    candidate_sentences: int = 15
    topical_per_candidate: int = 5
    synonym_swap: float = 0.55   # fraction of noticed topic words swapped
    n_decoys: int = 8            # lexical-bait candidates per query
    decoy_words: int = 2         # query-topic words per decoy sentence


def _swap_synonyms(words: list[str], vocab: SyntheticVocab,
                   fraction: float, rng: np.random.Generator) -> list[str]:
    return [vocab.synonyms.get(w, w) if rng.random() < fraction else w
            for w in words]


def build_retrieval_instances(vocab: SyntheticVocab,
                              spec: RetrievalSpec = RetrievalSpec(),
                              seed: int = 0) -> list[QueryInstance]:
    """Planted corpus: noticed candidates share the query's topic."""
    rng = np.random.default_rng(seed)
    total_topic_words = spec.n_queries * spec.topic_size
    if total_topic_words > len(vocab.content):
        raise ValueError("content vocabulary too small for disjoint topics")
    shuffled = list(rng.permutation(vocab.content))
    topics = [shuffled[i * spec.topic_size:(i + 1) * spec.topic_size]
              for i in range(spec.n_queries)]

    instances = []
    for qi in range(spec.n_queries):
        topic = topics[qi]
        qid = f"q{qi:03d}"

        summary = [_draw_sentence(rng, topic, spec.sentence_length)
                   for _ in range(3)]
        n_topical = spec.query_body_sentences // 2
        body = [_draw_sentence(rng, topic, spec.sentence_length)
                for _ in range(n_topical)]
        body += [_draw_sentence(rng, vocab.filler, spec.sentence_length)
                 for _ in range(spec.query_body_sentences - n_topical)]
        rng.shuffle(body)
        query = CaseDocument(qid, tuple(summary), _paragraphs(body))

        candidates = []
        noticed_ids = set()
        for ci in range(spec.n_candidates):
            cid = f"{qid}c{ci:03d}"
            if ci < spec.n_noticed:
                noticed_ids.add(cid)
                topical = []
                for _ in range(spec.topical_per_candidate):
                    words = list(rng.choice(topic, size=spec.sentence_length))
                    topical.append(_sentence(
                        _swap_synonyms(words, vocab, spec.synonym_swap, rng)))
            elif ci < spec.n_noticed + spec.n_decoys:
                # filler sentences salted with a few literal topic words
                topical = []
                for _ in range(spec.topical_per_candidate):
                    words = list(rng.choice(vocab.filler,
                                            size=spec.sentence_length))
                    for pos in rng.choice(spec.sentence_length,
                                          size=spec.decoy_words, replace=False):
                        words[pos] = str(rng.choice(topic))
                    topical.append(_sentence(words))
            else:
                foreign = topics[int(rng.integers(spec.n_queries))]
                swap = float(rng.random()) * spec.synonym_swap
                topical = []
                for _ in range(spec.topical_per_candidate):
                    words = list(rng.choice(foreign, size=spec.sentence_length))
                    topical.append(_sentence(
                        _swap_synonyms(words, vocab, swap, rng)))
            filler = [_draw_sentence(rng, vocab.filler, spec.sentence_length)
                      for _ in range(spec.candidate_sentences
                                     - spec.topical_per_candidate)]
            sentences = topical + filler
            rng.shuffle(sentences)
            candidates.append(CaseDocument(cid, None, _paragraphs(sentences),
                                           no_summary_marker_present=True))

        instances.append(QueryInstance(query, tuple(candidates),
                                       frozenset(noticed_ids)))
    return instances


# ---------------------------------------------------------------------------
# rendering back to raw text files

UNEDITED_LINE = "This case is unedited, therefore contains no summary"


def _render_sentences(sentences: Sequence[Sentence]) -> str:
    return " ".join(" ".join(s.surfaces()) + "." for s in sentences)


def render_document(doc: CaseDocument) -> str:
    """Raw-text form that parse_case turns back into this document."""
    blocks = []
    if doc.summary is not None:
        blocks.append("Summary:\n" + _render_sentences(doc.summary)
                      + "\nPresent: Synthetic J.")
    elif doc.no_summary_marker_present:
        blocks.append(UNEDITED_LINE)
    for para in doc.paragraphs:
        blocks.append(_render_sentences(para.sentences))
    return "\n\n".join(blocks) + "\n"


def write_corpus_tree(instances: Sequence[QueryInstance],
                      root: Path | str) -> None:
    root = Path(root)
    for inst in instances:
        query_dir = root / inst.query.id
        cand_dir = query_dir / "candidates"
        cand_dir.mkdir(parents=True, exist_ok=True)
        (query_dir / "query.txt").write_text(render_document(inst.query),
                                             encoding="utf-8")
        for cand in inst.candidates:
            (cand_dir / f"{cand.id}.txt").write_text(render_document(cand),
                                                     encoding="utf-8")
        labels = {inst.query.id: sorted(inst.noticed_ids)}
        (query_dir / "noticed.json").write_text(
            json.dumps(labels, indent=2, sort_keys=True) + "\n",
            encoding="utf-8")


def write_document_tree(docs: Sequence[CaseDocument], root: Path | str) -> None:
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    for doc in docs:
        (root / f"{doc.id}.txt").write_text(render_document(doc),
                                            encoding="utf-8")


def write_embeddings_file(table: EmbeddingTable, path: Path | str) -> None:
    lines = []
    for token, vec in table.vectors.items():
        values = " ".join(f"{np.float32(x):.8g}" for x in vec)
        lines.append(f"{token} {values}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
