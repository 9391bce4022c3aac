"""Case file parsing, tokenization and corpus loading.

Raw case files are plain UTF-8 text.  An expert summary, when present,
is introduced by a line starting with ``Summary:`` and runs until a
line starting with ``Present:`` (a metadata line, excluded from the
body) or the first blank line, whichever comes first.  Files carrying
the literal marker ``This case is unedited, therefore contains no
summary`` have no summary by definition.  Body paragraphs are separated
by blank lines.

Tokenization is rule-based and versioned here rather than delegated to
an external toolkit, so that every feature downstream is reproducible:

* sentence boundaries are runs of ``.!?`` followed by whitespace or end
  of text, except that a lone ``.`` does not split after a known
  abbreviation or a single-letter initial (``U.S.``, ``v.``, ``J.``);
* words match ``\\w+([.'-]\\w+)*`` -- internal periods, apostrophes and
  hyphens stay inside the token, surrounding punctuation is dropped.

On disk a corpus is one directory per query::

    <root>/<query_id>/query.txt
    <root>/<query_id>/candidates/<candidate_id>.txt
    <root>/<query_id>/noticed.json        # optional gold labels

``noticed.json`` maps the query id to an array of candidate ids (a bare
array is accepted too); a single root-level ``noticed.json`` holding
the full map works as well.  Alternative file names can be supplied via
``CorpusLayout``.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from .porter import stem as porter_stem
from .stopwords import STOPWORDS


class EmptyBody(ValueError):
    """No paragraph content remained after parsing a case file."""


class MissingLabel(ValueError):
    """A noticed id does not appear in the candidate pool."""


class DuplicateCandidateId(ValueError):
    """Two candidates within one query share an id."""


class UnreadableFile(ValueError):
    """A corpus file could not be read as UTF-8 text."""


UNEDITED_MARKER = "This case is unedited, therefore contains no summary"
SUMMARY_INDICATOR = "Summary:"
PRESENT_INDICATOR = "Present:"

# Tokenizer rule table, version 1.
ABBREVIATIONS = frozenset(
    """
    mr mrs ms dr prof hon rev jr sr st no nos v vs i.e e.g etc cf al
    inc ltd co corp dept div art para paras s ss c cc p pp pt pts vol
    u.s r.s.c f.c s.c.r d.l.r q.b
    """.split()
)

_TERMINAL_RE = re.compile(r"[.!?]+(?=\s|$)")
_WORD_RE = re.compile(r"\w+(?:[.'’\-]\w+)*")
_TRAILING_WORD_RE = re.compile(r"[\w.'’\-]+$")


@dataclass(frozen=True)
class Token:
    surface: str
    normalized: str
    is_stopword: bool

    @classmethod
    def from_surface(cls, surface: str) -> "Token":
        lowered = surface.lower()
        return cls(surface, lowered, lowered in STOPWORDS)


@dataclass(frozen=True)
class Sentence:
    tokens: tuple[Token, ...]

    def surfaces(self) -> tuple[str, ...]:
        return tuple(t.surface for t in self.tokens)

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class Paragraph:
    sentences: tuple[Sentence, ...]

    @property
    def lead(self) -> Sentence:
        return self.sentences[0]


@dataclass(frozen=True)
class CaseDocument:
    id: str
    summary: Optional[tuple[Sentence, ...]]
    paragraphs: tuple[Paragraph, ...]
    no_summary_marker_present: bool = False
    present_without_summary: bool = False

    def body_sentences(self) -> tuple[Sentence, ...]:
        return tuple(s for p in self.paragraphs for s in p.sentences)

    def body_token_count(self) -> int:
        return sum(len(s) for s in self.body_sentences())


@dataclass(frozen=True)
class QueryInstance:
    query: CaseDocument
    candidates: tuple[CaseDocument, ...]
    noticed_ids: frozenset[str]

    def candidate_ids(self) -> tuple[str, ...]:
        return tuple(c.id for c in self.candidates)


def _sentence_boundaries(text: str) -> list[int]:
    ends = []
    for match in _TERMINAL_RE.finditer(text):
        punct = match.group()
        if punct == ".":
            tail = _TRAILING_WORD_RE.search(text, 0, match.start())
            if tail:
                word = tail.group().rstrip(".").lstrip(".'’-")
                is_initial = len(word) == 1 and word.isalpha() and word.isupper()
                if word.lower() in ABBREVIATIONS or is_initial:
                    continue
        ends.append(match.end())
    return ends


def tokenize(text: str) -> list[Sentence]:
    """Split text into sentences of tokens; empty input gives []."""
    sentences = []
    start = 0
    for end in _sentence_boundaries(text) + [len(text)]:
        chunk = text[start:end]
        start = end
        words = _WORD_RE.findall(chunk)
        if words:
            sentences.append(Sentence(tuple(Token.from_surface(w) for w in words)))
    return sentences


def normalize(tokens: Iterable[Token], stem: bool = True,
              drop_stopwords: bool = True) -> list[Token]:
    """Lowercase, optionally Porter-stem and drop stopwords; keeps order."""
    out = []
    for tok in tokens:
        if drop_stopwords and tok.is_stopword:
            continue
        lowered = tok.surface.lower()
        normalized = porter_stem(lowered) if stem else lowered
        out.append(Token(tok.surface, normalized, tok.is_stopword))
    return out


def normalized_sentences(sentences: Iterable[Sentence], stem: bool = True,
                         drop_stopwords: bool = True) -> list[list[str]]:
    """Normalized token strings per sentence; empty sentences are dropped."""
    units = []
    for sent in sentences:
        toks = [t.normalized for t in normalize(sent.tokens, stem, drop_stopwords)]
        if toks:
            units.append(toks)
    return units


def parse_case(raw_text: str, id: str) -> CaseDocument:
    """Parse one raw case file into summary sentences and paragraphs."""
    marker_present = UNEDITED_MARKER in raw_text
    lines = raw_text.splitlines()

    summary_lines: list[str] = []
    body_lines: list[str] = []
    in_summary = False
    saw_summary_indicator = False
    present_without_summary = False
    for line in lines:
        if UNEDITED_MARKER in line:
            in_summary = False
            continue
        stripped = line.strip()
        if stripped.startswith(SUMMARY_INDICATOR):
            saw_summary_indicator = True
            in_summary = True
            summary_lines.append(stripped[len(SUMMARY_INDICATOR):])
            continue
        if stripped.startswith(PRESENT_INDICATOR):
            if not saw_summary_indicator:
                present_without_summary = True
            in_summary = False
            continue  # metadata line, not body text
        if in_summary and not stripped:
            in_summary = False  # blank line ends the summary block
            body_lines.append(line)
            continue
        (summary_lines if in_summary else body_lines).append(line)

    summary: Optional[tuple[Sentence, ...]] = None
    if saw_summary_indicator and not marker_present:
        parsed = tokenize("\n".join(summary_lines))
        if parsed:
            summary = tuple(parsed)

    paragraphs = []
    for block in re.split(r"\n\s*\n", "\n".join(body_lines)):
        sentences = tokenize(block)
        if sentences:
            paragraphs.append(Paragraph(tuple(sentences)))
    if not paragraphs:
        raise EmptyBody(f"case {id!r} has no paragraph content")

    return CaseDocument(
        id=id,
        summary=summary,
        paragraphs=tuple(paragraphs),
        no_summary_marker_present=marker_present,
        present_without_summary=present_without_summary,
    )


def lead_sentences(doc: CaseDocument) -> list[Sentence]:
    """First sentence of each paragraph, in paragraph order."""
    return [p.lead for p in doc.paragraphs]


@dataclass(frozen=True)
class CorpusLayout:
    query_file: str = "query.txt"
    candidates_dir: str = "candidates"
    labels_file: str = "noticed.json"


def _read_text(path: Path) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise UnreadableFile(f"cannot read {path}: {exc}") from exc


def _read_labels(path: Path, query_id: str) -> Optional[set[str]]:
    if not path.is_file():
        return None
    try:
        data = json.loads(_read_text(path))
    except json.JSONDecodeError as exc:
        raise UnreadableFile(f"cannot parse {path}: {exc}") from exc
    if isinstance(data, dict):
        if query_id not in data:
            return None
        data = data[query_id]
    return {str(x) for x in data}


def load_corpus(root_path: Path | str,
                layout: CorpusLayout = CorpusLayout()) -> list[QueryInstance]:
    """Load every query instance under root_path, ordered by query id."""
    root = Path(root_path)
    root_labels = root / layout.labels_file
    instances = []
    for query_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        query_id = query_dir.name
        query_doc = parse_case(_read_text(query_dir / layout.query_file), query_id)

        candidates = []
        seen: set[str] = set()
        cand_dir = query_dir / layout.candidates_dir
        for cand_path in sorted(cand_dir.glob("*.txt")):
            cand_id = cand_path.stem
            if cand_id in seen:
                raise DuplicateCandidateId(
                    f"candidate {cand_id!r} duplicated in {cand_dir}")
            seen.add(cand_id)
            candidates.append(parse_case(_read_text(cand_path), cand_id))

        noticed = _read_labels(query_dir / layout.labels_file, query_id)
        if noticed is None:
            noticed = _read_labels(root_labels, query_id) or set()
        unknown = noticed - seen
        if unknown:
            raise MissingLabel(
                f"noticed ids {sorted(unknown)} for query {query_id!r} are not "
                f"in {cand_dir}")

        instances.append(QueryInstance(query_doc, tuple(candidates),
                                       frozenset(noticed)))
    return instances


def load_documents(dir_path: Path | str) -> list[CaseDocument]:
    """Parse every ``*.txt`` under a flat directory, ordered by id."""
    docs = []
    for path in sorted(Path(dir_path).glob("*.txt")):
        docs.append(parse_case(_read_text(path), path.stem))
    return docs


@dataclass(frozen=True)
class PropertyStats:
    max: int
    avg: float


@dataclass(frozen=True)
class StatsReport:
    documents: int
    words_per_doc: PropertyStats
    paragraphs_per_doc: PropertyStats
    summary_words_per_doc: Optional[PropertyStats]
    documents_with_summary: int

    def to_json(self) -> dict:
        def block(p: Optional[PropertyStats]):
            return None if p is None else {"max": p.max, "avg": p.avg}

        return {
            "documents": self.documents,
            "words_per_doc": block(self.words_per_doc),
            "paragraphs_per_doc": block(self.paragraphs_per_doc),
            "summary_words_per_doc": block(self.summary_words_per_doc),
            "documents_with_summary": self.documents_with_summary,
        }


def _prop(values: list[int]) -> PropertyStats:
    return PropertyStats(max(values), sum(values) / len(values))


def corpus_stats(instances: Iterable[QueryInstance]) -> StatsReport:
    """Word/paragraph/summary-size statistics over all distinct documents."""
    docs: dict[str, CaseDocument] = {}
    for inst in instances:
        docs.setdefault(inst.query.id, inst.query)
        for cand in inst.candidates:
            docs.setdefault(cand.id, cand)
    if not docs:
        return StatsReport(0, PropertyStats(0, 0.0), PropertyStats(0, 0.0),
                           None, 0)

    words = [d.body_token_count() for d in docs.values()]
    paras = [len(d.paragraphs) for d in docs.values()]
    summary_words = [sum(len(s) for s in d.summary)
                     for d in docs.values() if d.summary is not None]
    return StatsReport(
        documents=len(docs),
        words_per_doc=_prop(words),
        paragraphs_per_doc=_prop(paras),
        summary_words_per_doc=_prop(summary_words) if summary_words else None,
        documents_with_summary=len(summary_words),
    )
