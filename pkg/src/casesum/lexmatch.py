"""Lexical overlap features between query and candidate document parts.

A query contributes two parts (expert summary ``s``, paragraphs ``p``),
a candidate three (generated summary ``e``, lead sentences ``l``,
paragraphs ``p``), giving six matching options.  Each option is scored
by six formulas -- unigram, bigram, skip-bigram, unigram+skip-bigram,
LCS and weighted LCS -- and each formula by recall (normalized by the
query side), precision (by the candidate side) and their harmonic mean,
for 6 x 6 x 3 = 108 dimensions with the frozen index

    option * 18 + formula * 3 + factor

options ordered (s,e) (s,l) (s,p) (p,e) (p,l) (p,p), formulas as listed
above, factors (recall, precision, f).

Matching semantics follow the reference ROUGE implementation: n-grams
and skip-bigrams are counted per sentence with clipped multiset
intersection; skip-bigrams are in-order pairs with unlimited gap inside
a sentence; unigram+skip adds the two overlap counts and the two
denominators; LCS is the summary-level union variant (per query
sentence, union of match positions over candidate sentences, clipped by
token multiplicities).  Weighted LCS runs one dynamic program over the
flattened token streams with run weight f(k) = k**exponent and
normalizes through f^-1, which keeps it symmetric and equal to the
exhaustive best-scoring common subsequence.

All matching happens on normalized tokens (lowercased, Porter-stemmed,
stopwords removed).
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Optional, Sequence

import numpy as np

from .corpus import CaseDocument, Sentence, lead_sentences, normalized_sentences


class InvalidExponent(ValueError):
    """Weighted-LCS exponent must be >= 1."""


class MissingQuerySummary(ValueError):
    """Subset requires the query summary but the query has none."""


class InvalidFeatureCode(ValueError):
    """Feature subset code does not match the q-c grammar."""


DEFAULT_WLCS_EXPONENT = 1.2

QUERY_PARTS = "sp"           # expert summary, paragraphs
CANDIDATE_PARTS = "elp"      # generated summary, lead sentences, paragraphs
_CODE_ORDER = "ple"          # candidate-part order used in printed codes
OPTIONS: tuple[tuple[str, str], ...] = (
    ("s", "e"), ("s", "l"), ("s", "p"), ("p", "e"), ("p", "l"), ("p", "p"),
)
FORMULAS = ("unigram", "bigram", "skip_bigram", "unigram_skip", "lcs", "wlcs")
FACTORS = ("recall", "precision", "f_measure")
NUM_FEATURES = len(OPTIONS) * len(FORMULAS) * len(FACTORS)  # 108


@dataclass(frozen=True)
class TextUnit:
    """One document part as normalized token sequences."""

    sentences: tuple[tuple[str, ...], ...]

    @classmethod
    def from_sentences(cls, sentences: Iterable[Sequence[str]]) -> "TextUnit":
        return cls(tuple(tuple(s) for s in sentences if len(s) > 0))

    @property
    def token_count(self) -> int:
        return sum(len(s) for s in self.sentences)

    def is_empty(self) -> bool:
        return self.token_count == 0


@dataclass(frozen=True)
class MatchScores:
    recall: float
    precision: float
    f_measure: float

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.recall, self.precision, self.f_measure)


def _scores(overlap: float, q_size: float, c_size: float) -> MatchScores:
    recall = overlap / q_size if q_size > 0 else 0.0
    precision = overlap / c_size if c_size > 0 else 0.0
    if recall + precision == 0:
        return MatchScores(recall, precision, 0.0)
    return MatchScores(recall, precision,
                       2 * precision * recall / (precision + recall))


def _ngram_counts(unit: TextUnit, n: int) -> Counter:
    counts: Counter = Counter()
    for sent in unit.sentences:
        for i in range(len(sent) - n + 1):
            counts[sent[i:i + n]] += 1
    return counts


def _skip_counts(unit: TextUnit) -> Counter:
    counts: Counter = Counter()
    for sent in unit.sentences:
        for pair in combinations(sent, 2):
            counts[pair] += 1
    return counts


def _clipped_overlap(a: Counter, b: Counter) -> int:
    return sum((a & b).values())


def ngram_scores(q: TextUnit, c: TextUnit, n: int) -> MatchScores:
    """Clipped n-gram overlap; n in {1, 2}."""
    if n not in (1, 2):
        raise ValueError(f"n must be 1 or 2, got {n}")
    qc, cc = _ngram_counts(q, n), _ngram_counts(c, n)
    return _scores(_clipped_overlap(qc, cc), sum(qc.values()), sum(cc.values()))


def skip_bigram_scores(q: TextUnit, c: TextUnit) -> MatchScores:
    """In-order word pairs within a sentence, any gap."""
    qc, cc = _skip_counts(q), _skip_counts(c)
    return _scores(_clipped_overlap(qc, cc), sum(qc.values()), sum(cc.values()))


def unigram_skip_scores(q: TextUnit, c: TextUnit) -> MatchScores:
    """Unigram and skip-bigram matching pooled: overlaps and denominators add."""
    q1, c1 = _ngram_counts(q, 1), _ngram_counts(c, 1)
    q2, c2 = _skip_counts(q), _skip_counts(c)
    overlap = _clipped_overlap(q1, c1) + _clipped_overlap(q2, c2)
    q_size = sum(q1.values()) + sum(q2.values())
    c_size = sum(c1.values()) + sum(c2.values())
    return _scores(overlap, q_size, c_size)


def _lcs_hits(reference: Sequence[str], other: Sequence[str]) -> set[int]:
    """Positions of `reference` on one LCS against `other` (DP backtrace)."""
    m, n = len(reference), len(other)
    table = [[0] * (n + 1) for _ in range(m + 1)]
    for i in range(1, m + 1):
        ri = reference[i - 1]
        row, prev = table[i], table[i - 1]
        for j in range(1, n + 1):
            if ri == other[j - 1]:
                row[j] = prev[j - 1] + 1
            else:
                up, left = prev[j], row[j - 1]
                row[j] = up if up >= left else left
    hits: set[int] = set()
    i, j = m, n
    while i > 0 and j > 0:
        if reference[i - 1] == other[j - 1] and table[i][j] == table[i - 1][j - 1] + 1:
            hits.add(i - 1)
            i -= 1
            j -= 1
        elif table[i - 1][j] >= table[i][j - 1]:
            i -= 1
        else:
            j -= 1
    return hits


def lcs_scores(q: TextUnit, c: TextUnit) -> MatchScores:
    """Summary-level union LCS with clipped token counting."""
    q_budget = _ngram_counts(q, 1)
    c_budget = _ngram_counts(c, 1)
    overlap = 0
    for q_sent in q.sentences:
        mask: set[int] = set()
        for c_sent in c.sentences:
            mask |= _lcs_hits(q_sent, c_sent)
        for pos in sorted(mask):
            token = (q_sent[pos],)
            if q_budget[token] > 0 and c_budget[token] > 0:
                q_budget[token] -= 1
                c_budget[token] -= 1
                overlap += 1
    return _scores(overlap, q.token_count, c.token_count)


def _wlcs_value(x: Sequence[str], y: Sequence[str], exponent: float) -> float:
    """Best sum of run_length**exponent over common subsequences of x, y.

    A run is a block of matches consecutive in both sequences.  The
    classic single-value-per-cell recurrence is greedy on matches and
    can miss the optimum for exponent > 1, so matched cells carry a
    Pareto set {run length -> best score including f(run)}: a longer
    current run never hurts a continuation (f is convex), which keeps
    the sets small.
    """
    m, n = len(x), len(y)
    if m == 0 or n == 0:
        return 0.0
    f = [float(k) ** exponent for k in range(min(m, n) + 2)]

    zeros = [0.0] * (n + 1)
    prefix2, prefix1 = list(zeros), list(zeros)  # rows i-2 and i-1 of the
    prev_cells: list[dict[int, float] | None] = [None] * (n + 1)
    # prefix max of cell bests over (i' <= i, j' <= j)
    for i in range(1, m + 1):
        current = [0.0] * (n + 1)
        cells: list[dict[int, float] | None] = [None] * (n + 1)
        xi = x[i - 1]
        for j in range(1, n + 1):
            cell_best = 0.0
            if xi == y[j - 1]:
                runs: dict[int, float] = {}
                diag = prev_cells[j - 1]
                if diag:
                    for k, value in diag.items():
                        runs[k + 1] = value - f[k] + f[k + 1]
                # fresh run: any earlier match except the diagonal neighbour
                base = max(prefix2[j - 1],
                           prefix1[j - 2] if j >= 2 else 0.0)
                runs[1] = max(runs.get(1, 0.0), f[1] + base)
                if len(runs) > 1:  # drop run lengths dominated by longer ones
                    pruned, seen = {}, -1.0
                    for k in sorted(runs, reverse=True):
                        if runs[k] > seen:
                            pruned[k] = seen = runs[k]
                    runs = pruned
                cells[j] = runs
                cell_best = max(runs.values())
            current[j] = max(current[j - 1], prefix1[j], cell_best)
        prefix2, prefix1, prev_cells = prefix1, current, cells
    return prefix1[n]


def wlcs_scores(q: TextUnit, c: TextUnit,
                weight_exponent: float = DEFAULT_WLCS_EXPONENT) -> MatchScores:
    """Weighted LCS over the flattened token streams, f(k) = k**exponent."""
    if weight_exponent < 1:
        raise InvalidExponent(f"weight_exponent must be >= 1, got {weight_exponent}")
    q_flat = [t for s in q.sentences for t in s]
    c_flat = [t for s in c.sentences for t in s]
    if not q_flat or not c_flat:
        return MatchScores(0.0, 0.0, 0.0)
    raw = _wlcs_value(q_flat, c_flat, weight_exponent)
    inv = 1.0 / weight_exponent
    recall = (raw / len(q_flat) ** weight_exponent) ** inv
    precision = (raw / len(c_flat) ** weight_exponent) ** inv
    if recall + precision == 0:
        return MatchScores(recall, precision, 0.0)
    return MatchScores(recall, precision,
                       2 * precision * recall / (precision + recall))


def match_option(q_part: TextUnit, c_part: TextUnit,
                 wlcs_exponent: float = DEFAULT_WLCS_EXPONENT) -> list[float]:
    """The 18 values (6 formulas x 3 factors) for one part pairing."""
    results = (
        ngram_scores(q_part, c_part, 1),
        ngram_scores(q_part, c_part, 2),
        skip_bigram_scores(q_part, c_part),
        unigram_skip_scores(q_part, c_part),
        lcs_scores(q_part, c_part),
        wlcs_scores(q_part, c_part, wlcs_exponent),
    )
    return [v for r in results for v in r.as_tuple()]


@dataclass(frozen=True)
class FeatureSubset:
    """Parsed form of a feature code such as ``ES+sp-ple`` or ``s-p``."""

    use_relevance: bool
    query_parts: frozenset[str]
    candidate_parts: frozenset[str]

    def active_options(self) -> list[int]:
        return [i for i, (qp, cp) in enumerate(OPTIONS)
                if qp in self.query_parts and cp in self.candidate_parts]

    @property
    def has_lexical(self) -> bool:
        return bool(self.query_parts and self.candidate_parts)


def parse_feature_code(code: str) -> FeatureSubset:
    """Parse ``[ES+]q-c`` / ``ES`` codes; q over {s,p}, c over {p,l,e}."""
    text = code.strip()
    use_relevance = False
    if text == "ES":
        return FeatureSubset(True, frozenset(), frozenset())
    if text.startswith("ES+"):
        use_relevance = True
        text = text[3:]
    parts = text.split("-")
    if len(parts) != 2 or not parts[0] or not parts[1]:
        raise InvalidFeatureCode(f"bad feature code {code!r}")
    q_set, c_set = set(parts[0]), set(parts[1])
    if not q_set <= set(QUERY_PARTS) or not c_set <= set(CANDIDATE_PARTS):
        raise InvalidFeatureCode(f"bad feature code {code!r}")
    return FeatureSubset(use_relevance, frozenset(q_set), frozenset(c_set))


def format_feature_code(subset: FeatureSubset) -> str:
    if not subset.has_lexical:
        return "ES" if subset.use_relevance else ""
    q = "".join(p for p in QUERY_PARTS if p in subset.query_parts)
    c = "".join(p for p in _CODE_ORDER if p in subset.candidate_parts)
    lex = f"{q}-{c}"
    return f"ES+{lex}" if subset.use_relevance else lex


def normalized_unit(sentences: Iterable[Sentence]) -> TextUnit:
    """Build a TextUnit from Sentence objects via the normalize contract."""
    return TextUnit.from_sentences(normalized_sentences(sentences))


def unit_from_token_sequences(sequences: Iterable[Sequence[str]]) -> TextUnit:
    """Normalize raw surface-token sequences (e.g. a generated summary)."""
    from .corpus import Token, normalize

    units = []
    for seq in sequences:
        toks = normalize([Token.from_surface(s) for s in seq])
        units.append([t.normalized for t in toks])
    return TextUnit.from_sentences(units)


def extract_lexical_features(
    query: CaseDocument,
    candidate: CaseDocument,
    candidate_generated_summary: Optional[TextUnit],
    subset: FeatureSubset,
    wlcs_exponent: float = DEFAULT_WLCS_EXPONENT,
) -> np.ndarray:
    """108-dim lexical vector; options outside the subset stay zero.

    The candidate's summary part is always the generated summary, never
    an expert one.  Raises MissingQuerySummary when the subset uses the
    query summary but the document has none.
    """
    active = subset.active_options()
    values = np.zeros(NUM_FEATURES)
    if not active:
        return values

    if "s" in subset.query_parts and query.summary is None:
        raise MissingQuerySummary(f"query {query.id!r} has no summary")

    empty = TextUnit(())
    q_units = {
        "s": normalized_unit(query.summary) if query.summary else empty,
        "p": normalized_unit(query.body_sentences()),
    }
    c_units = {
        "e": candidate_generated_summary or empty,
        "l": normalized_unit(lead_sentences(candidate)),
        "p": normalized_unit(candidate.body_sentences()),
    }
    for opt_idx in active:
        qp, cp = OPTIONS[opt_idx]
        block = match_option(q_units[qp], c_units[cp], wlcs_exponent)
        values[opt_idx * 18:(opt_idx + 1) * 18] = block
    return values
