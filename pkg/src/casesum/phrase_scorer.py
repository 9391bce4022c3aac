"""Summary-supervised phrase scoring network.

Every l-token window of a sentence gets a feature vector from a
convolution over its concatenated word embeddings (ReLU, no bias);
sentence and document features are coordinate-wise max pools of the
window features; a two-layer MLP (tanh hidden, sigmoid output) scores
each window from [window; sentence; document] context.

Training pushes summary-phrase scores above body-phrase scores of the
owning document and below body scores of foreign documents, through a
hinge on four weighted mean/stddev constraints; optimization is Adam
with global-norm gradient clipping, embeddings frozen.  Backpropagation
is implemented by hand (numpy only) and checked against central finite
differences in the test suite.

Arithmetic is float64 throughout; serialized weights are little-endian
float32, and models produced by ``init_model``/``train``/``load_model``
keep their parameters on the float32 grid so that save/load round-trips
are bit-exact.

Model file: magic ``ESPM``, format version, all dimensions and
hyperparameters, vocabulary, then embedding/conv/MLP matrices.
Embedding text files carry one token plus its vector per line.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from . import _binio
from ._binio import BadMagic, ShapeMismatch, VersionMismatch  # re-exported
from .corpus import CaseDocument, Sentence

__all__ = [
    "Hyperparams", "EmbeddingTable", "PhraseScoringModel", "ScoredDocument",
    "LossTerms", "Gradients", "TrainingItem", "EpochStats",
    "EmptyInput", "EmptyScores", "NoSummarizedDocuments", "MalformedLine",
    "BadMagic", "VersionMismatch", "ShapeMismatch",
    "phrase_features", "sentence_feature", "document_feature",
    "score_document", "score_against_document", "loss_terms", "loss",
    "gradients", "batch_loss", "train", "init_model", "save_model",
    "load_model", "models_equal", "load_embeddings",
]


class EmptyInput(ValueError):
    """An operation that needs at least one sentence/vector got none."""


class EmptyScores(ValueError):
    """Loss statistics need non-empty score lists."""


class NoSummarizedDocuments(ValueError):
    """Training corpus contains no document with a summary."""


class MalformedLine(ValueError):
    """An embedding file line does not have token + dim fields."""


@dataclass(frozen=True)
class Hyperparams:
    embedding_dim: int = 300
    conv_filters: int = 300
    window_size: int = 5
    hidden_size: int = 300
    learning_rate: float = 0.0001
    grad_clip_norm: float = 5.0
    # weights of the four ranking constraints in the hinge
    coef_mean: float = 1.0
    coef_negative: float = 1.7
    coef_upper: float = 0.3
    coef_lower: float = 0.7
    margin: float = 0.5
    negatives_per_doc: int = 2
    epochs: int = 20
    batch_docs: int = 1
    seed: int = 13

    def __post_init__(self):
        for name in ("embedding_dim", "conv_filters", "window_size",
                     "hidden_size", "learning_rate", "grad_clip_norm",
                     "margin", "epochs", "batch_docs"):
            if getattr(self, name) <= 0:
                raise ValueError(f"hyperparameter {name} must be positive")
        if self.negatives_per_doc < 0 or self.seed < 0:
            raise ValueError("negatives_per_doc and seed must be >= 0")


class EmbeddingTable:
    """Frozen token -> vector map; unknown tokens map to the zero vector.

    Vectors are kept on the float32 grid (in float64 storage) so that
    model serialization round-trips bit-exactly.
    """

    def __init__(self, dim: int, vectors: dict[str, np.ndarray]):
        self.dim = dim
        self.vectors = {}
        for token, vec in vectors.items():
            arr = np.asarray(vec, dtype=np.float64)
            if arr.shape != (dim,):
                raise ShapeMismatch(
                    f"vector for {token!r} has shape {arr.shape}, want ({dim},)")
            self.vectors[token] = arr.astype(np.float32).astype(np.float64)
        self._zero = np.zeros(dim)

    def lookup(self, token: str) -> np.ndarray:
        return self.vectors.get(token, self._zero)

    def __len__(self) -> int:
        return len(self.vectors)


def load_embeddings(path: Path | str, dim: int) -> EmbeddingTable:
    """Read a text-format embedding file (token then dim floats per line)."""
    vectors: dict[str, np.ndarray] = {}
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, 1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != dim + 1:
                raise MalformedLine(
                    f"{path}:{lineno}: expected {dim + 1} fields, got {len(parts)}")
            try:
                vectors[parts[0]] = np.array([float(x) for x in parts[1:]])
            except ValueError as exc:
                raise MalformedLine(f"{path}:{lineno}: {exc}") from exc
    return EmbeddingTable(dim, vectors)


@dataclass
class PhraseScoringModel:
    embeddings: EmbeddingTable
    conv_kernel: np.ndarray    # (c, d*l)
    hidden_weights: np.ndarray  # (h, 3c)
    hidden_bias: np.ndarray    # (h,)
    out_weights: np.ndarray    # (h,)
    out_bias: float
    hyper: Hyperparams

    def __post_init__(self):
        hp = self.hyper
        expect = {
            "conv_kernel": (hp.conv_filters, hp.embedding_dim * hp.window_size),
            "hidden_weights": (hp.hidden_size, 3 * hp.conv_filters),
            "hidden_bias": (hp.hidden_size,),
            "out_weights": (hp.hidden_size,),
        }
        for name, shape in expect.items():
            if getattr(self, name).shape != shape:
                raise ShapeMismatch(
                    f"{name} has shape {getattr(self, name).shape}, want {shape}")
        if self.embeddings.dim != hp.embedding_dim:
            raise ShapeMismatch("embedding table dimension mismatch")


def _snap(array: np.ndarray) -> np.ndarray:
    """Round to float32-representable values, kept in float64."""
    return array.astype(np.float32).astype(np.float64)


def init_model(hyper: Hyperparams, embeddings: EmbeddingTable,
               rng: np.random.Generator | None = None) -> PhraseScoringModel:
    rng = rng or np.random.default_rng(hyper.seed)
    d, c, l, h = (hyper.embedding_dim, hyper.conv_filters,
                  hyper.window_size, hyper.hidden_size)
    return PhraseScoringModel(
        embeddings=embeddings,
        conv_kernel=_snap(rng.standard_normal((c, d * l)) / np.sqrt(d * l)),
        hidden_weights=_snap(rng.standard_normal((h, 3 * c)) / np.sqrt(3 * c)),
        hidden_bias=np.zeros(h),
        out_weights=_snap(rng.standard_normal(h) / np.sqrt(h)),
        out_bias=0.0,
        hyper=hyper,
    )


# ---------------------------------------------------------------------------
# forward pass


def _window_matrix(tokens: Sequence[str], table: EmbeddingTable,
                   window: int) -> np.ndarray:
    """(n_windows, dim*window) matrix; short sentences get one padded row."""
    dim = table.dim
    mat = np.stack([table.lookup(t) for t in tokens]) if tokens else np.zeros((0, dim))
    n = len(tokens)
    if n >= window:
        return np.stack([mat[j:j + window].ravel() for j in range(n - window + 1)])
    row = np.zeros(dim * window)
    row[: n * dim] = mat.ravel()
    return row[None, :]


@dataclass
class _SentenceState:
    windows: np.ndarray      # (n_w, d*l)
    activations: np.ndarray  # (n_w, c)
    argmax: np.ndarray       # (c,) winning window per filter
    feature: np.ndarray      # (c,)


@dataclass
class _UnitState:
    sentences: list[_SentenceState]
    feature: np.ndarray  # (c,)
    argmax: np.ndarray   # (c,) winning sentence per filter


def _encode_sentence(windows: np.ndarray, model: PhraseScoringModel) -> _SentenceState:
    act = np.maximum(windows @ model.conv_kernel.T, 0.0)
    return _SentenceState(windows, act, act.argmax(axis=0), act.max(axis=0))


def _encode_unit(window_mats: Sequence[np.ndarray],
                 model: PhraseScoringModel) -> _UnitState:
    states = [_encode_sentence(w, model) for w in window_mats]
    stacked = np.stack([s.feature for s in states])
    return _UnitState(states, stacked.max(axis=0), stacked.argmax(axis=0))


@dataclass
class _GroupState:
    """MLP caches for the windows of one unit scored against one f_d."""

    contexts: list[np.ndarray]  # per sentence (n_w, 3c)
    hidden: list[np.ndarray]    # per sentence (n_w, h), tanh output
    scores: list[np.ndarray]    # per sentence (n_w,)

    def flat_scores(self) -> np.ndarray:
        return np.concatenate(self.scores) if self.scores else np.zeros(0)


def _score_group(unit: _UnitState, doc_feature: np.ndarray,
                 model: PhraseScoringModel) -> _GroupState:
    contexts, hidden, scores = [], [], []
    for sent in unit.sentences:
        n_w = sent.activations.shape[0]
        ctx = np.concatenate(
            [sent.activations,
             np.tile(sent.feature, (n_w, 1)),
             np.tile(doc_feature, (n_w, 1))], axis=1)
        t = np.tanh(ctx @ model.hidden_weights.T + model.hidden_bias)
        z = t @ model.out_weights + model.out_bias
        contexts.append(ctx)
        hidden.append(t)
        scores.append(1.0 / (1.0 + np.exp(-z)))
    return _GroupState(contexts, hidden, scores)


# ---------------------------------------------------------------------------
# public scoring API


@dataclass(frozen=True)
class ScoredDocument:
    """Window/sentence/document features plus per-window scores."""

    window_features: tuple[np.ndarray, ...]   # per sentence (n_w, c)
    sentence_features: np.ndarray             # (n_sent, c)
    document_feature: np.ndarray              # (c,)
    scores: tuple[np.ndarray, ...]            # per sentence (n_w,)
    sentence_lengths: tuple[int, ...]
    window_size: int

    def flat_scores(self) -> np.ndarray:
        return np.concatenate(self.scores)

    @property
    def phrase_count(self) -> int:
        return sum(len(s) for s in self.scores)


def phrase_features(sentence: Sentence, model: PhraseScoringModel) -> list[np.ndarray]:
    """Convolution features, one vector per window of the sentence."""
    if len(sentence) == 0:
        raise EmptyInput("sentence has no tokens")
    windows = _window_matrix(sentence.surfaces(), model.embeddings,
                             model.hyper.window_size)
    state = _encode_sentence(windows, model)
    return [state.activations[j] for j in range(state.activations.shape[0])]


def sentence_feature(window_features: Sequence[np.ndarray]) -> np.ndarray:
    """Coordinate-wise max over a sentence's window features."""
    if len(window_features) == 0:
        raise EmptyInput("no window features")
    return np.max(np.stack(window_features), axis=0)


def document_feature(sentence_features: Sequence[np.ndarray]) -> np.ndarray:
    """Coordinate-wise max over sentence features."""
    if len(sentence_features) == 0:
        raise EmptyInput("no sentence features")
    return np.max(np.stack(sentence_features), axis=0)


def _unit_windows(sentences: Sequence[Sentence],
                  model: PhraseScoringModel) -> list[np.ndarray]:
    return [_window_matrix(s.surfaces(), model.embeddings,
                           model.hyper.window_size) for s in sentences]


def score_document(sentences: Sequence[Sentence],
                   model: PhraseScoringModel) -> ScoredDocument:
    """Score every window of a document part against its own pooled feature."""
    if len(sentences) == 0:
        raise EmptyInput("no sentences to score")
    unit = _encode_unit(_unit_windows(sentences, model), model)
    group = _score_group(unit, unit.feature, model)
    return ScoredDocument(
        window_features=tuple(s.activations for s in unit.sentences),
        sentence_features=np.stack([s.feature for s in unit.sentences]),
        document_feature=unit.feature,
        scores=tuple(group.scores),
        sentence_lengths=tuple(len(s) for s in sentences),
        window_size=model.hyper.window_size,
    )


def score_against_document(sentences: Sequence[Sentence],
                           doc_feature: np.ndarray,
                           model: PhraseScoringModel) -> list[np.ndarray]:
    """Score a unit's windows with a foreign document feature (negatives)."""
    if len(sentences) == 0:
        raise EmptyInput("no sentences to score")
    unit = _encode_unit(_unit_windows(sentences, model), model)
    return list(_score_group(unit, doc_feature, model).scores)


# ---------------------------------------------------------------------------
# loss


@dataclass(frozen=True)
class LossTerms:
    summary_mean: float
    summary_std: float
    doc_mean: float
    doc_std: float
    summary_on_negative_means: tuple[float, ...]  # one per negative document
    negative_doc_means: tuple[float, ...]         # paired with the above

    def __post_init__(self):
        if len(self.summary_on_negative_means) != len(self.negative_doc_means):
            raise ValueError("negative term lists must pair up")


def _mean_std(values: np.ndarray) -> tuple[float, float]:
    # population standard deviation
    return float(values.mean()), float(values.std())


def loss_terms(summary_scores: np.ndarray, doc_scores: np.ndarray,
               summary_on_negatives: Sequence[np.ndarray] = (),
               negative_doc_scores: Sequence[np.ndarray] = ()) -> LossTerms:
    """Mean/stddev statistics feeding the hinge loss."""
    summary_scores = np.asarray(summary_scores, dtype=np.float64)
    doc_scores = np.asarray(doc_scores, dtype=np.float64)
    if summary_scores.size == 0 or doc_scores.size == 0:
        raise EmptyScores("summary and document score lists must be non-empty")
    if len(summary_on_negatives) != len(negative_doc_scores):
        raise EmptyScores("each negative needs both score lists")
    e_c, std_c = _mean_std(summary_scores)
    e_s, std_s = _mean_std(doc_scores)
    return LossTerms(
        summary_mean=e_c, summary_std=std_c, doc_mean=e_s, doc_std=std_s,
        summary_on_negative_means=tuple(
            float(np.asarray(x).mean()) for x in summary_on_negatives),
        negative_doc_means=tuple(
            float(np.asarray(x).mean()) for x in negative_doc_scores),
    )


def _constraint_combination(terms: LossTerms, hyper: Hyperparams) -> float:
    combo = hyper.coef_mean * (terms.summary_mean - terms.doc_mean)
    if terms.summary_on_negative_means:
        gaps = [s_prime - c_on_neg for s_prime, c_on_neg in
                zip(terms.negative_doc_means, terms.summary_on_negative_means)]
        combo += hyper.coef_negative * (sum(gaps) / len(gaps))
    combo += hyper.coef_upper * ((terms.summary_mean + terms.summary_std)
                                 - (terms.doc_mean + terms.doc_std))
    combo += hyper.coef_lower * ((terms.summary_mean - terms.summary_std)
                                 - terms.doc_mean)
    return combo


def loss(terms: LossTerms, hyper: Hyperparams) -> float:
    """Hinge on the weighted constraint combination; 0 iff margin met."""
    return max(0.0, hyper.margin - _constraint_combination(terms, hyper))


# ---------------------------------------------------------------------------
# gradients


@dataclass
class Gradients:
    conv_kernel: np.ndarray
    hidden_weights: np.ndarray
    hidden_bias: np.ndarray
    out_weights: np.ndarray
    out_bias: float
    loss: float = 0.0

    @classmethod
    def zeros_like(cls, model: PhraseScoringModel) -> "Gradients":
        return cls(np.zeros_like(model.conv_kernel),
                   np.zeros_like(model.hidden_weights),
                   np.zeros_like(model.hidden_bias),
                   np.zeros_like(model.out_weights), 0.0)

    def arrays(self) -> list[np.ndarray]:
        return [self.conv_kernel, self.hidden_weights, self.hidden_bias,
                self.out_weights]

    def global_norm(self) -> float:
        total = sum(float((a * a).sum()) for a in self.arrays())
        return float(np.sqrt(total + self.out_bias ** 2))

    def scale(self, factor: float) -> None:
        for a in self.arrays():
            a *= factor
        self.out_bias *= factor


@dataclass(frozen=True)
class TrainingItem:
    """One training instance: body, its summary, sampled negative bodies."""

    body: tuple[Sentence, ...]
    summary: tuple[Sentence, ...]
    negatives: tuple[tuple[Sentence, ...], ...] = ()

    @classmethod
    def from_documents(cls, doc: CaseDocument,
                       negatives: Iterable[CaseDocument] = ()) -> "TrainingItem":
        if doc.summary is None:
            raise EmptyInput(f"document {doc.id!r} has no summary")
        return cls(doc.body_sentences(), doc.summary,
                   tuple(n.body_sentences() for n in negatives))


@dataclass
class _CachedItem:
    body: list[np.ndarray]
    summary: list[np.ndarray]
    negatives: list[list[np.ndarray]]


def _cache_item(item: TrainingItem, model: PhraseScoringModel) -> _CachedItem:
    if not item.body or not item.summary:
        raise EmptyInput("training item needs body and summary sentences")
    return _CachedItem(
        _unit_windows(item.body, model),
        _unit_windows(item.summary, model),
        [_unit_windows(neg, model) for neg in item.negatives],
    )


class _UnitAccumulator:
    """Backward buffers for one encoded unit."""

    def __init__(self, unit: _UnitState, filters: int):
        self.unit = unit
        self.d_act = [np.zeros_like(s.activations) for s in unit.sentences]
        self.d_feat = np.zeros((len(unit.sentences), filters))
        self.d_unit_feat = np.zeros(filters)

    def finalize(self, grads: Gradients) -> None:
        cols = np.arange(self.d_unit_feat.shape[0])
        np.add.at(self.d_feat, (self.unit.argmax, cols), self.d_unit_feat)
        for idx, sent in enumerate(self.unit.sentences):
            d_act = self.d_act[idx]
            np.add.at(d_act, (sent.argmax, cols), self.d_feat[idx])
            masked = d_act * (sent.activations > 0)
            grads.conv_kernel += masked.T @ sent.windows


def _backprop_group(group: _GroupState, d_scores: list[np.ndarray],
                    unit_acc: _UnitAccumulator, doc_acc: _UnitAccumulator,
                    model: PhraseScoringModel, grads: Gradients) -> None:
    c = model.hyper.conv_filters
    for idx, (ctx, t, p) in enumerate(
            zip(group.contexts, group.hidden, group.scores)):
        dz2 = d_scores[idx] * p * (1.0 - p)
        grads.out_weights += t.T @ dz2
        grads.out_bias += float(dz2.sum())
        dz1 = np.outer(dz2, model.out_weights) * (1.0 - t * t)
        grads.hidden_weights += dz1.T @ ctx
        grads.hidden_bias += dz1.sum(axis=0)
        d_ctx = dz1 @ model.hidden_weights
        unit_acc.d_act[idx] += d_ctx[:, :c]
        unit_acc.d_feat[idx] += d_ctx[:, c:2 * c].sum(axis=0)
        doc_acc.d_unit_feat += d_ctx[:, 2 * c:].sum(axis=0)


def _stat_backward(scores: np.ndarray, d_mean: float, d_std: float) -> np.ndarray:
    n = scores.size
    grad = np.full(n, d_mean / n)
    std = scores.std()
    if d_std != 0.0 and std > 0.0:
        grad += d_std * (scores - scores.mean()) / (n * std)
    return grad


def _split(flat: np.ndarray, pieces: Sequence[np.ndarray]) -> list[np.ndarray]:
    out, pos = [], 0
    for p in pieces:
        out.append(flat[pos:pos + p.size])
        pos += p.size
    return out


def _item_loss_and_grads(cached: _CachedItem, model: PhraseScoringModel,
                         grads: Optional[Gradients]) -> float:
    hp = model.hyper
    body = _encode_unit(cached.body, model)
    summary = _encode_unit(cached.summary, model)
    neg_units = [_encode_unit(w, model) for w in cached.negatives]

    body_group = _score_group(body, body.feature, model)
    summary_group = _score_group(summary, body.feature, model)
    neg_self_groups = [_score_group(u, u.feature, model) for u in neg_units]
    summary_on_neg = [_score_group(summary, u.feature, model) for u in neg_units]

    terms = loss_terms(
        summary_group.flat_scores(), body_group.flat_scores(),
        [g.flat_scores() for g in summary_on_neg],
        [g.flat_scores() for g in neg_self_groups],
    )
    value = loss(terms, hp)
    if grads is None or value == 0.0:
        return value

    # d(loss)/d(combination) = -1 inside the hinge
    d_mean_c = -(hp.coef_mean + hp.coef_upper + hp.coef_lower)
    d_std_c = -(hp.coef_upper - hp.coef_lower)
    d_mean_s = hp.coef_mean + hp.coef_upper + hp.coef_lower
    d_std_s = hp.coef_upper
    k = len(neg_units)

    body_acc = _UnitAccumulator(body, hp.conv_filters)
    summary_acc = _UnitAccumulator(summary, hp.conv_filters)
    neg_accs = [_UnitAccumulator(u, hp.conv_filters) for u in neg_units]

    sum_scores = summary_group.flat_scores()
    _backprop_group(
        summary_group,
        _split(_stat_backward(sum_scores, d_mean_c, d_std_c),
               summary_group.scores),
        summary_acc, body_acc, model, grads)

    body_scores = body_group.flat_scores()
    _backprop_group(
        body_group,
        _split(_stat_backward(body_scores, d_mean_s, d_std_s),
               body_group.scores),
        body_acc, body_acc, model, grads)

    for neg_acc, self_group, cross_group in zip(neg_accs, neg_self_groups,
                                                summary_on_neg):
        # E_{s'} enters with -a2/k, E_{c,d'} with +a2/k (hinge sign folded in)
        d_self = -hp.coef_negative / k / self_group.flat_scores().size
        _backprop_group(
            self_group,
            [np.full(s.size, d_self) for s in self_group.scores],
            neg_acc, neg_acc, model, grads)
        d_cross = hp.coef_negative / k / cross_group.flat_scores().size
        _backprop_group(
            cross_group,
            [np.full(s.size, d_cross) for s in cross_group.scores],
            summary_acc, neg_acc, model, grads)

    summary_acc.finalize(grads)
    body_acc.finalize(grads)
    for acc in neg_accs:
        acc.finalize(grads)
    return value


def gradients(model: PhraseScoringModel,
              batch: Sequence[TrainingItem]) -> Gradients:
    """Analytic gradients of the summed hinge loss over a batch."""
    if len(batch) == 0:
        raise EmptyInput("empty batch")
    grads = Gradients.zeros_like(model)
    total = 0.0
    for item in batch:
        total += _item_loss_and_grads(_cache_item(item, model), model, grads)
    grads.loss = total
    return grads


def batch_loss(model: PhraseScoringModel, batch: Sequence[TrainingItem]) -> float:
    """Summed hinge loss without gradient work (finite-difference oracle)."""
    return sum(_item_loss_and_grads(_cache_item(item, model), model, None)
               for item in batch)


# ---------------------------------------------------------------------------
# training


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    mean_loss: float
    wall_ms: float


@dataclass
class _AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    m_bias: float = 0.0
    v_bias: float = 0.0
    step: int = 0


_ADAM_BETA1, _ADAM_BETA2, _ADAM_EPS = 0.9, 0.999, 1e-8


def _adam_update(model: PhraseScoringModel, grads: Gradients,
                 state: _AdamState, lr: float) -> None:
    state.step += 1
    t = state.step
    params = [model.conv_kernel, model.hidden_weights, model.hidden_bias,
              model.out_weights]
    for p, g, m, v in zip(params, grads.arrays(), state.m, state.v):
        m *= _ADAM_BETA1
        m += (1 - _ADAM_BETA1) * g
        v *= _ADAM_BETA2
        v += (1 - _ADAM_BETA2) * g * g
        m_hat = m / (1 - _ADAM_BETA1 ** t)
        v_hat = v / (1 - _ADAM_BETA2 ** t)
        p -= lr * m_hat / (np.sqrt(v_hat) + _ADAM_EPS)
    state.m_bias = _ADAM_BETA1 * state.m_bias + (1 - _ADAM_BETA1) * grads.out_bias
    state.v_bias = _ADAM_BETA2 * state.v_bias + (1 - _ADAM_BETA2) * grads.out_bias ** 2
    m_hat = state.m_bias / (1 - _ADAM_BETA1 ** t)
    v_hat = state.v_bias / (1 - _ADAM_BETA2 ** t)
    model.out_bias -= lr * m_hat / (np.sqrt(v_hat) + _ADAM_EPS)


def train(documents: Sequence[CaseDocument], hyper: Hyperparams,
          embeddings: EmbeddingTable,
          ) -> tuple[PhraseScoringModel, list[EpochStats]]:
    """Train a phrase scoring model on summarized documents.

    Documents without a summary are skipped.  Each epoch draws
    ``negatives_per_doc`` foreign documents per training document
    (uniform, without replacement, never the document itself); a fixed
    seed makes the run bit-reproducible.
    """
    docs = [d for d in documents if d.summary]
    if not docs:
        raise NoSummarizedDocuments("no training document has a summary")
    rng = np.random.default_rng(hyper.seed)
    model = init_model(hyper, embeddings, rng)

    cached = [_cache_item(TrainingItem.from_documents(d), model) for d in docs]
    bodies = [c.body for c in cached]
    n = len(cached)
    n_neg = min(hyper.negatives_per_doc, n - 1)

    adam = _AdamState(
        m=[np.zeros_like(a) for a in Gradients.zeros_like(model).arrays()],
        v=[np.zeros_like(a) for a in Gradients.zeros_like(model).arrays()],
    )
    history: list[EpochStats] = []
    for epoch in range(1, hyper.epochs + 1):
        started = time.perf_counter()
        epoch_loss = 0.0
        batch: list[_CachedItem] = []

        def flush(batch: list[_CachedItem]) -> float:
            grads = Gradients.zeros_like(model)
            total = 0.0
            for item in batch:
                total += _item_loss_and_grads(item, model, grads)
            norm = grads.global_norm()
            if norm > hyper.grad_clip_norm:
                grads.scale(hyper.grad_clip_norm / norm)
            _adam_update(model, grads, adam, hyper.learning_rate)
            return total

        for i, item in enumerate(cached):
            if n_neg > 0:
                pool = np.delete(np.arange(n), i)
                picks = rng.choice(pool, size=n_neg, replace=False)
                item = _CachedItem(item.body, item.summary,
                                   [bodies[j] for j in picks])
            else:
                item = _CachedItem(item.body, item.summary, [])
            batch.append(item)
            if len(batch) >= hyper.batch_docs:
                epoch_loss += flush(batch)
                batch = []
        if batch:
            epoch_loss += flush(batch)
        history.append(EpochStats(
            epoch, epoch_loss / n, (time.perf_counter() - started) * 1000.0))

    model.conv_kernel = _snap(model.conv_kernel)
    model.hidden_weights = _snap(model.hidden_weights)
    model.hidden_bias = _snap(model.hidden_bias)
    model.out_weights = _snap(model.out_weights)
    model.out_bias = float(np.float32(model.out_bias))
    return model, history


# ---------------------------------------------------------------------------
# serialization

_MAGIC = b"ESPM"
_VERSION = 1


def save_model(model: PhraseScoringModel, path: Path | str) -> None:
    hp = model.hyper
    w = _binio.Writer(_MAGIC, _VERSION)
    for value in (hp.embedding_dim, hp.conv_filters, hp.window_size,
                  hp.hidden_size, hp.negatives_per_doc, hp.epochs,
                  hp.batch_docs):
        w.u32(value)
    w.u64(hp.seed)
    for value in (hp.learning_rate, hp.grad_clip_norm, hp.coef_mean,
                  hp.coef_negative, hp.coef_upper, hp.coef_lower, hp.margin):
        w.f64(value)
    w.u32(len(model.embeddings))
    tokens = list(model.embeddings.vectors)
    for token in tokens:
        w.text(token)
    if tokens:
        w.matrix_f32(np.stack([model.embeddings.vectors[t] for t in tokens]))
    w.matrix_f32(model.conv_kernel)
    w.matrix_f32(model.hidden_weights)
    w.matrix_f32(model.hidden_bias)
    w.matrix_f32(model.out_weights)
    w.matrix_f32(np.array([model.out_bias]))
    Path(path).write_bytes(w.getvalue())


def load_model(path: Path | str) -> PhraseScoringModel:
    r = _binio.Reader(Path(path).read_bytes(), _MAGIC, _VERSION)
    dims = [r.u32() for _ in range(7)]
    seed = r.u64()
    floats = [r.f64() for _ in range(7)]
    hyper = Hyperparams(
        embedding_dim=dims[0], conv_filters=dims[1], window_size=dims[2],
        hidden_size=dims[3], negatives_per_doc=dims[4], epochs=dims[5],
        batch_docs=dims[6], seed=seed,
        learning_rate=floats[0], grad_clip_norm=floats[1], coef_mean=floats[2],
        coef_negative=floats[3], coef_upper=floats[4], coef_lower=floats[5],
        margin=floats[6])
    vocab_size = r.u32()
    tokens = [r.text() for _ in range(vocab_size)]
    if vocab_size:
        vecs = r.matrix_f32((vocab_size, hyper.embedding_dim))
        table = EmbeddingTable(hyper.embedding_dim,
                               {t: vecs[i] for i, t in enumerate(tokens)})
    else:
        table = EmbeddingTable(hyper.embedding_dim, {})
    d, c, l, h = (hyper.embedding_dim, hyper.conv_filters, hyper.window_size,
                  hyper.hidden_size)
    model = PhraseScoringModel(
        embeddings=table,
        conv_kernel=r.matrix_f32((c, d * l)),
        hidden_weights=r.matrix_f32((h, 3 * c)),
        hidden_bias=r.matrix_f32((h,)),
        out_weights=r.matrix_f32((h,)),
        out_bias=float(r.matrix_f32((1,))[0]),
        hyper=hyper,
    )
    r.expect_end()
    return model


def models_equal(a: PhraseScoringModel, b: PhraseScoringModel) -> bool:
    if a.hyper != b.hyper or a.out_bias != b.out_bias:
        return False
    if list(a.embeddings.vectors) != list(b.embeddings.vectors):
        return False
    for token, vec in a.embeddings.vectors.items():
        if not np.array_equal(vec, b.embeddings.vectors[token]):
            return False
    return all(np.array_equal(getattr(a, name), getattr(b, name))
               for name in ("conv_kernel", "hidden_weights", "hidden_bias",
                            "out_weights"))
