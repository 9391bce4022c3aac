"""Pairwise linear-SVM ranking over combined feature vectors.

Feature vectors are the 108 lexical dimensions followed by the 3c
relevance dimensions (1008 total at the default c = 300); blocks or
options excluded by the feature-subset code are zero so that every
ablation shares one model shape.

Training reduces ranking to difference vectors z = x_pos - x_neg and
minimizes

    J(w) = 0.5 * ||w||^2 + C * mean_i max(0, 1 - w . z_i)

by deterministic projected-free subgradient descent with step 1/t on
the equivalent scaled objective (Pegasos-style); the bias cancels in
pairwise differences and stays 0.  The hinge term is a mean, not a sum,
so duplicating the pair set leaves the trajectory unchanged.  Features
are z-scored per dimension by default (scale-sensitive margins); the
scaler is fitted on the training pairs and stored in the model.

Model file: magic ``ESRK``, same envelope as the phrase scorer.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import _binio
from ._binio import BadMagic, ShapeMismatch, VersionMismatch  # re-exported
from .corpus import QueryInstance
from .lexmatch import NUM_FEATURES

__all__ = [
    "RankModel", "RankedList", "PairSet", "DegenerateQuery", "NoPairs",
    "LengthMismatch", "BadMagic", "VersionMismatch", "ShapeMismatch",
    "combined_width", "combine_features", "build_pairs", "train_rank_svm",
    "score", "rank_candidates", "select_top_k", "save_rank_model",
    "load_rank_model", "rank_models_equal",
]


class DegenerateQuery(ValueError):
    """A query with no positive or no negative candidates."""


class NoPairs(ValueError):
    """Training needs at least one (positive, negative) pair."""


class LengthMismatch(ValueError):
    """Feature vector length does not match the model."""


def combined_width(conv_filters: int) -> int:
    """Lexical block plus 3c relevance block (1008 at c = 300)."""
    return NUM_FEATURES + 3 * conv_filters


def combine_features(lexical: np.ndarray, relevance: np.ndarray | None,
                     conv_filters: int) -> np.ndarray:
    """Fixed-width combined vector; an absent relevance block stays zero."""
    out = np.zeros(combined_width(conv_filters))
    out[:NUM_FEATURES] = lexical
    if relevance is not None:
        if relevance.shape != (3 * conv_filters,):
            raise LengthMismatch(
                f"relevance block has shape {relevance.shape}, "
                f"want ({3 * conv_filters},)")
        out[NUM_FEATURES:] = relevance
    return out


@dataclass(frozen=True)
class PairSet:
    """Training pairs (positive, negative) plus a skipped-query count."""

    positives: np.ndarray  # (n, dim)
    negatives: np.ndarray  # (n, dim)
    skipped_queries: int

    def __len__(self) -> int:
        return self.positives.shape[0]


FeatureLookup = Callable[[str, str], np.ndarray]


def build_pairs(instances: Sequence[QueryInstance], features: FeatureLookup,
                per_query_cap: int | None = None, seed: int = 0) -> PairSet:
    """All (noticed, non-noticed) pairs per query, optionally capped.

    Queries without both a positive and a negative candidate are
    skipped and counted, not fatal.  With a cap, a seeded uniform
    sample of the cross product is taken per query.
    """
    rng = np.random.default_rng(seed)
    pos_rows, neg_rows = [], []
    skipped = 0
    for inst in instances:
        qid = inst.query.id
        noticed = [c.id for c in inst.candidates if c.id in inst.noticed_ids]
        others = [c.id for c in inst.candidates if c.id not in inst.noticed_ids]
        if not noticed or not others:
            skipped += 1
            continue
        pairs = [(p, n) for p in noticed for n in others]
        if per_query_cap is not None and len(pairs) > per_query_cap:
            picks = rng.choice(len(pairs), size=per_query_cap, replace=False)
            pairs = [pairs[i] for i in sorted(picks)]
        for pos_id, neg_id in pairs:
            pos_rows.append(features(qid, pos_id))
            neg_rows.append(features(qid, neg_id))
    dim = pos_rows[0].shape[0] if pos_rows else 0
    return PairSet(
        np.array(pos_rows).reshape(len(pos_rows), dim),
        np.array(neg_rows).reshape(len(neg_rows), dim),
        skipped,
    )


@dataclass
class RankModel:
    weights: np.ndarray
    bias: float
    regularization: float
    epochs: int
    seed: int
    feature_mean: np.ndarray
    feature_scale: np.ndarray
    standardized: bool

    @property
    def dim(self) -> int:
        return self.weights.shape[0]


def _fit_scaler(rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = rows.mean(axis=0)
    std = rows.std(axis=0)
    std[std == 0.0] = 1.0
    return mean, std


def train_rank_svm(pairs: PairSet, regularization: float = 1.0,
                   epochs: int = 100, seed: int = 0,
                   standardize: bool = True,
                   batch_size: int = 0) -> RankModel:
    """Subgradient descent on the pairwise hinge objective.

    ``batch_size`` 0 means full-batch (the default, and exactly
    duplication-invariant); positive values give seeded minibatches.
    With regularization 0 the data term vanishes and the weights stay
    at the zero initialization.
    """
    if len(pairs) == 0:
        raise NoPairs("no training pairs")
    if regularization < 0:
        raise ValueError("regularization must be >= 0")
    dim = pairs.positives.shape[1]
    if standardize:
        mean, scale = _fit_scaler(np.vstack([pairs.positives, pairs.negatives]))
    else:
        mean, scale = np.zeros(dim), np.ones(dim)
    diffs = (pairs.positives - pairs.negatives) / scale

    rng = np.random.default_rng(seed)
    w = np.zeros(dim)
    c = regularization
    step = 0
    n = diffs.shape[0]
    size = n if batch_size <= 0 else min(batch_size, n)
    for _ in range(epochs):
        order = np.arange(n) if size == n else rng.permutation(n)
        for lo in range(0, n, size):
            rows = diffs[order[lo:lo + size]]
            step += 1
            # step 1/t on the 1-strongly-convex objective
            eta = 1.0 / step
            violated = rows @ w < 1.0
            w *= 1.0 - eta
            if violated.any():
                w += eta * c * rows[violated].sum(axis=0) / rows.shape[0]
    w = w.astype(np.float32).astype(np.float64)
    return RankModel(w, 0.0, regularization, epochs, seed,
                     mean.astype(np.float32).astype(np.float64),
                     scale.astype(np.float32).astype(np.float64), standardize)


def score(model: RankModel, features: np.ndarray) -> float:
    """Linear score of one candidate's feature vector."""
    if features.shape != model.weights.shape:
        raise LengthMismatch(
            f"feature vector has shape {features.shape}, want {model.weights.shape}")
    if model.standardized:
        features = (features - model.feature_mean) / model.feature_scale
    return float(model.weights @ features + model.bias)


@dataclass(frozen=True)
class RankedList:
    """(candidate id, score) pairs, score descending, id breaking ties."""

    entries: tuple[tuple[str, float], ...]

    def ids(self) -> list[str]:
        return [cid for cid, _ in self.entries]

    def __len__(self) -> int:
        return len(self.entries)


def rank_candidates(model: RankModel, instance: QueryInstance,
                    features: FeatureLookup) -> RankedList:
    scored = [(cand.id, score(model, features(instance.query.id, cand.id)))
              for cand in instance.candidates]
    scored.sort(key=lambda item: (-item[1], item[0]))
    return RankedList(tuple(scored))


def select_top_k(ranked: RankedList, k: int) -> set[str]:
    """Ids of the first min(k, len) entries."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    return set(ranked.ids()[:k])


# ---------------------------------------------------------------------------
# serialization

_MAGIC = b"ESRK"
_VERSION = 1


def save_rank_model(model: RankModel, path: Path | str) -> None:
    w = _binio.Writer(_MAGIC, _VERSION)
    w.u32(model.dim)
    w.u32(model.epochs)
    w.u64(model.seed)
    w.f64(model.regularization)
    w.u32(1 if model.standardized else 0)
    w.matrix_f32(model.weights)
    w.matrix_f32(np.array([model.bias]))
    w.matrix_f32(model.feature_mean)
    w.matrix_f32(model.feature_scale)
    Path(path).write_bytes(w.getvalue())


def load_rank_model(path: Path | str) -> RankModel:
    r = _binio.Reader(Path(path).read_bytes(), _MAGIC, _VERSION)
    dim = r.u32()
    epochs = r.u32()
    seed = r.u64()
    regularization = r.f64()
    standardized = bool(r.u32())
    model = RankModel(
        weights=r.matrix_f32((dim,)),
        bias=float(r.matrix_f32((1,))[0]),
        regularization=regularization,
        epochs=epochs,
        seed=seed,
        feature_mean=r.matrix_f32((dim,)),
        feature_scale=r.matrix_f32((dim,)),
        standardized=standardized,
    )
    r.expect_end()
    return model


def rank_models_equal(a: RankModel, b: RankModel) -> bool:
    return (
        np.array_equal(a.weights, b.weights)
        and a.bias == b.bias
        and a.regularization == b.regularization
        and a.epochs == b.epochs
        and a.seed == b.seed
        and np.array_equal(a.feature_mean, b.feature_mean)
        and np.array_equal(a.feature_scale, b.feature_scale)
        and a.standardized == b.standardized
    )
