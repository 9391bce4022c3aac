"""Command-line pipeline driver.

    casesum <command> --config config.json [--set key=value ...] [--out DIR]

Commands, in pipeline order:

    make-demo     write a synthetic demo corpus + config
    ingest        parse the corpus, write corpus statistics
    train-scorer  train the phrase scoring model
    summarize     generate extractive summaries for all candidates
    encode        latent document vectors for queries and candidates
    features      combined lexical + relevance feature table
    train-ranker  fit the pairwise SVM on the feature table
    rank          score and rank candidates, select top-k
    evaluate      metrics for the rank output
    loo           leave-one-out validation over the feature table

Every command writes only inside the configured output directory and is
deterministic for a fixed config and seed (epoch wall-times go to
stdout, not artifacts).  Artifacts: stats.json, scorer.espm,
loss_curve.tsv, summaries/<query>/<candidate>.txt, vectors.esdv,
features.tsv, ranker.esrk, predictions.tsv, report.{json,txt},
loo_report.{json,txt}.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import _binio, config as config_mod, encsum, evaluation, lexmatch
from . import phrase_scorer as scorer_mod
from . import ranker as ranker_mod
from . import synthetic
from .config import PipelineConfig
from .corpus import (CaseDocument, QueryInstance, corpus_stats, load_corpus,
                     load_documents)


class MissingArtifact(ValueError):
    """A required upstream artifact has not been produced yet."""


def _out(cfg: PipelineConfig) -> Path:
    path = Path(cfg.out_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _require(path: Path, producer: str) -> Path:
    if not path.exists():
        raise MissingArtifact(f"{path} is missing; run `casesum {producer}` first")
    return path


def _instances(cfg: PipelineConfig) -> list[QueryInstance]:
    return load_corpus(cfg.corpus_dir)


def _corpus_vocab(cfg: PipelineConfig) -> list[str]:
    tokens: set[str] = set()

    def add(doc: CaseDocument) -> None:
        for sent in doc.body_sentences():
            tokens.update(sent.surfaces())
        for sent in doc.summary or ():
            tokens.update(sent.surfaces())

    for inst in _instances(cfg):
        add(inst.query)
        for cand in inst.candidates:
            add(cand)
    train_dir = Path(cfg.resolved_train_corpus_dir())
    if train_dir != Path(cfg.corpus_dir) and train_dir.is_dir():
        for doc in load_documents(train_dir):
            add(doc)
    return sorted(tokens)


def _embeddings(cfg: PipelineConfig) -> scorer_mod.EmbeddingTable:
    dim = cfg.scorer.embedding_dim
    if cfg.embeddings_path:
        return scorer_mod.load_embeddings(cfg.embeddings_path, dim)
    # no pre-trained table: deterministic random vectors over the vocabulary
    rng = np.random.default_rng(cfg.seed)
    return scorer_mod.EmbeddingTable(
        dim, {t: rng.standard_normal(dim) / np.sqrt(dim)
              for t in _corpus_vocab(cfg)})


def _training_documents(cfg: PipelineConfig) -> list[CaseDocument]:
    train_dir = Path(cfg.resolved_train_corpus_dir())
    docs = load_documents(train_dir) if any(train_dir.glob("*.txt")) else []
    if not docs:
        seen: dict[str, CaseDocument] = {}
        for inst in load_corpus(train_dir):
            for doc in (inst.query, *inst.candidates):
                if doc.summary is not None:
                    seen.setdefault(doc.id, doc)
        docs = [seen[k] for k in sorted(seen)]
    return docs


# ---------------------------------------------------------------------------
# commands


def cmd_ingest(cfg: PipelineConfig) -> None:
    report = corpus_stats(_instances(cfg))
    path = _out(cfg) / "stats.json"
    path.write_text(json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")
    print(f"wrote {path}")


def cmd_train_scorer(cfg: PipelineConfig) -> None:
    docs = _training_documents(cfg)
    model, history = scorer_mod.train(docs, cfg.scorer, _embeddings(cfg))
    out = _out(cfg)
    scorer_mod.save_model(model, out / "scorer.espm")
    curve = "".join(f"{h.epoch}\t{h.mean_loss!r}\n" for h in history)
    (out / "loss_curve.tsv").write_text(curve, encoding="utf-8")
    for h in history:
        print(f"epoch {h.epoch}\t{h.mean_loss:.6f}\t{h.wall_ms:.0f}ms")
    print(f"wrote {out / 'scorer.espm'}")


def _load_scorer(cfg: PipelineConfig) -> scorer_mod.PhraseScoringModel:
    return scorer_mod.load_model(_require(_out(cfg) / "scorer.espm",
                                          "train-scorer"))


def cmd_summarize(cfg: PipelineConfig) -> None:
    model = _load_scorer(cfg)
    out_dir = _out(cfg) / "summaries"
    count = 0
    for inst in _instances(cfg):
        query_dir = out_dir / inst.query.id
        query_dir.mkdir(parents=True, exist_ok=True)
        for cand in inst.candidates:
            scored = scorer_mod.score_document(cand.body_sentences(), model)
            summary = encsum.generate_summary(scored, cand,
                                              cfg.summary_threshold)
            lines = [f"{sent_idx}\t{' '.join(phrase)}"
                     for phrase, (sent_idx, _) in
                     zip(summary.phrases, summary.positions)]
            (query_dir / f"{cand.id}.txt").write_text(
                "\n".join(lines) + "\n", encoding="utf-8")
            count += 1
    print(f"wrote {count} summaries under {out_dir}")


def _read_summary_unit(path: Path) -> lexmatch.TextUnit:
    sequences = []
    for line in path.read_text(encoding="utf-8").splitlines():
        if line.strip():
            _, _, phrase = line.partition("\t")
            sequences.append(phrase.split())
    return lexmatch.unit_from_token_sequences(sequences)


_VECTORS_MAGIC = b"ESDV"


def cmd_encode(cfg: PipelineConfig) -> None:
    model = _load_scorer(cfg)
    entries: list[tuple[str, np.ndarray]] = []
    for inst in _instances(cfg):
        docs = [(inst.query.id, inst.query)] + [
            (f"{inst.query.id}/{c.id}", c) for c in inst.candidates]
        for key, doc in docs:
            scored = scorer_mod.score_document(doc.body_sentences(), model)
            entries.append((key, encsum.compose_doc_vector(scored)))
    writer = _binio.Writer(_VECTORS_MAGIC, 1)
    writer.u32(len(entries))
    writer.u32(3 * model.hyper.conv_filters)
    for key, vec in entries:
        writer.text(key)
        writer.matrix_f32(vec)
    path = _out(cfg) / "vectors.esdv"
    path.write_bytes(writer.getvalue())
    print(f"wrote {len(entries)} vectors to {path}")


def _read_vectors(path: Path) -> dict[str, np.ndarray]:
    reader = _binio.Reader(path.read_bytes(), _VECTORS_MAGIC, 1)
    count, dim = reader.u32(), reader.u32()
    vectors = {}
    for _ in range(count):
        key = reader.text()
        vectors[key] = reader.matrix_f32((dim,))
    reader.expect_end()
    return vectors


def cmd_features(cfg: PipelineConfig) -> None:
    subset = lexmatch.parse_feature_code(cfg.feature_code)
    out = _out(cfg)
    summaries_dir = out / "summaries"
    if "e" in subset.candidate_parts:
        _require(summaries_dir, "summarize")
    vectors = None
    conv_filters = cfg.scorer.conv_filters
    if subset.use_relevance:
        vectors = _read_vectors(_require(out / "vectors.esdv", "encode"))
        conv_filters = next(iter(vectors.values())).shape[0] // 3 \
            if vectors else conv_filters

    rows = []
    for inst in _instances(cfg):
        qid = inst.query.id
        for cand in inst.candidates:
            unit = None
            if "e" in subset.candidate_parts:
                unit = _read_summary_unit(
                    _require(summaries_dir / qid / f"{cand.id}.txt",
                             "summarize"))
            lexical = lexmatch.extract_lexical_features(
                inst.query, cand, unit, subset, cfg.wlcs_exponent)
            relevance = None
            if vectors is not None:
                relevance = encsum.relevance_vector(
                    vectors[qid], vectors[f"{qid}/{cand.id}"])
            combined = ranker_mod.combine_features(lexical, relevance,
                                                   conv_filters)
            label = 1 if cand.id in inst.noticed_ids else 0
            values = "\t".join(repr(float(x)) for x in combined)
            rows.append(f"{qid}\t{cand.id}\t{label}\t{values}\n")
    path = out / "features.tsv"
    path.write_text("".join(rows), encoding="utf-8")
    print(f"wrote {len(rows)} feature rows to {path}")


def _read_features(path: Path) -> tuple[dict[tuple[str, str], np.ndarray],
                                        dict[str, set[str]],
                                        dict[str, list[str]]]:
    table: dict[tuple[str, str], np.ndarray] = {}
    noticed: dict[str, set[str]] = {}
    order: dict[str, list[str]] = {}
    for line in path.read_text(encoding="utf-8").splitlines():
        qid, cid, label, *values = line.split("\t")
        table[(qid, cid)] = np.array([float(v) for v in values])
        order.setdefault(qid, []).append(cid)
        if label == "1":
            noticed.setdefault(qid, set()).add(cid)
    return table, noticed, order


def _feature_instances(cfg: PipelineConfig) -> tuple[
        list[QueryInstance], dict[tuple[str, str], np.ndarray]]:
    table, _, _ = _read_features(_require(_out(cfg) / "features.tsv",
                                          "features"))
    return _instances(cfg), table


def cmd_train_ranker(cfg: PipelineConfig) -> None:
    instances, table = _feature_instances(cfg)
    pairs = ranker_mod.build_pairs(instances, lambda q, c: table[(q, c)],
                                   cfg.pair_cap, cfg.seed)
    if pairs.skipped_queries:
        print(f"warning: skipped {pairs.skipped_queries} degenerate queries",
              file=sys.stderr)
    model = ranker_mod.train_rank_svm(
        pairs, cfg.ranker_regularization, cfg.ranker_epochs, cfg.seed,
        cfg.standardize_features)
    path = _out(cfg) / "ranker.esrk"
    ranker_mod.save_rank_model(model, path)
    print(f"trained on {len(pairs)} pairs, wrote {path}")


def cmd_rank(cfg: PipelineConfig) -> None:
    instances, table = _feature_instances(cfg)
    model = ranker_mod.load_rank_model(_require(_out(cfg) / "ranker.esrk",
                                                "train-ranker"))
    rows = []
    for inst in instances:
        ranked = ranker_mod.rank_candidates(model, inst,
                                            lambda q, c: table[(q, c)])
        top = ranker_mod.select_top_k(ranked, cfg.top_k)
        for position, (cid, value) in enumerate(ranked.entries, start=1):
            flag = 1 if cid in top else 0
            rows.append(f"{inst.query.id}\t{cid}\t{position}\t{value!r}\t{flag}\n")
    path = _out(cfg) / "predictions.tsv"
    path.write_text("".join(rows), encoding="utf-8")
    print(f"wrote {path}")


def _write_report(cfg: PipelineConfig, report: evaluation.EvalReport,
                  stem: str) -> None:
    out = _out(cfg)
    json_path = out / f"{stem}.json"
    json_path.write_text(
        json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n",
        encoding="utf-8")
    text = evaluation.format_results_table([(cfg.feature_code, report)])
    (out / f"{stem}.txt").write_text(text, encoding="utf-8")
    print(text, end="")
    print(f"wrote {json_path}")


def cmd_evaluate(cfg: PipelineConfig) -> None:
    instances = _instances(cfg)
    path = _require(_out(cfg) / "predictions.tsv", "rank")
    ranked_entries: dict[str, list[tuple[str, float]]] = {}
    predicted: dict[str, set[str]] = {}
    for line in path.read_text(encoding="utf-8").splitlines():
        qid, cid, _, value, flag = line.split("\t")
        ranked_entries.setdefault(qid, []).append((cid, float(value)))
        if flag == "1":
            predicted.setdefault(qid, set()).add(cid)
    results = []
    for inst in instances:
        entries = ranked_entries.get(inst.query.id)
        if not entries:
            raise MissingArtifact(
                f"no predictions for query {inst.query.id!r}; rerun `casesum rank`")
        results.append(evaluation.QueryResult(
            inst.query.id, ranker_mod.RankedList(tuple(entries)),
            frozenset(inst.noticed_ids),
            frozenset(predicted.get(inst.query.id, set()))))
    _write_report(cfg, evaluation.evaluate(results), "report")


def cmd_loo(cfg: PipelineConfig) -> None:
    instances, table = _feature_instances(cfg)
    report = evaluation.leave_one_out(
        instances, lambda q, c: table[(q, c)], cfg.top_k,
        cfg.ranker_regularization, cfg.ranker_epochs, cfg.seed,
        cfg.pair_cap, cfg.standardize_features)
    _write_report(cfg, report, "loo_report")


def cmd_make_demo(cfg: PipelineConfig, scale: float = 1.0) -> None:
    """Generate a small synthetic corpus tree plus a ready-to-run config."""
    out = _out(cfg)
    vocab = synthetic.make_vocab()
    spec = synthetic.RetrievalSpec(
        n_queries=max(4, int(12 * scale)),
        n_candidates=max(6, int(12 * scale)),
        n_noticed=3)
    instances = synthetic.build_retrieval_instances(vocab, spec, cfg.seed)
    train_docs = synthetic.build_training_documents(
        vocab, n_docs=max(8, int(20 * scale)), sentences_per_doc=12,
        seed=cfg.seed + 1)
    hyper = scorer_mod.Hyperparams(
        embedding_dim=16, conv_filters=16, window_size=3, hidden_size=16,
        learning_rate=0.003, epochs=10, seed=cfg.seed)
    table = synthetic.make_embedding_table(vocab, hyper.embedding_dim,
                                           cfg.seed)
    synthetic.write_corpus_tree(instances, out / "corpus")
    synthetic.write_document_tree(train_docs, out / "train_docs")
    synthetic.write_embeddings_file(table, out / "embeddings.txt")
    demo = config_mod.PipelineConfig(
        corpus_dir=str(out / "corpus"),
        train_corpus_dir=str(out / "train_docs"),
        embeddings_path=str(out / "embeddings.txt"),
        out_dir=str(out / "run"),
        seed=cfg.seed,
        top_k=3,
        scorer=hyper)
    config_mod.save_config(demo, out / "config.json")
    print(f"wrote demo corpus and {out / 'config.json'}")


_COMMANDS = {
    "make-demo": cmd_make_demo,
    "ingest": cmd_ingest,
    "train-scorer": cmd_train_scorer,
    "summarize": cmd_summarize,
    "encode": cmd_encode,
    "features": cmd_features,
    "train-ranker": cmd_train_ranker,
    "rank": cmd_rank,
    "evaluate": cmd_evaluate,
    "loo": cmd_loo,
}


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="casesum",
        description="summary-guided legal case retrieval pipeline")
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("--config", help="pipeline config JSON")
    parser.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="KEY=VALUE", help="override a config key")
    parser.add_argument("--out", help="override the output directory")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = (config_mod.load_config(args.config) if args.config
               else PipelineConfig())
        if args.overrides:
            cfg = config_mod.apply_overrides(cfg, list(args.overrides))
        if args.out:
            cfg = config_mod.apply_overrides(cfg, [f"out_dir={args.out}"])
        _COMMANDS[args.command](cfg)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
