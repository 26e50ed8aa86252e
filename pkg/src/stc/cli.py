"""Command-line lifecycle: ingest, clean, index, train-*, pool, eval, serve, chat."""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .benchmark import (FEATURE_SETS, PipelineConfig, comparison_grid,
                        crossval_feature_sets, run_pipeline)
from .corpus import (CleaningConfig, CorpusError, build_vocabulary,
                     clean_pairs, parse_corpus, parse_short_text, tfidf_vector,
                     write_corpus)
from .deepmatch import (DeepMatchTrainConfig, PreferenceTriple, init_deepmatch,
                        learn_topics, train_deepmatch)
from .engine import (CORPUS_FILE, INDEX_FILE, VOCAB_FILE, ModelLoadError,
                     load_models, respond, save_vocab, update_manifest)
from .engine import save_latent as _save_latent
from .engine import save_deepmatch as _save_deepmatch
from .evaluation import QueryJudgments, pool_candidates
from .features import FULL_SCHEMA, assemble_features
from .index import build_index, save_index
from .latent import LatentTrainConfig, train_latent
from .ranker import (LabeledCandidate, RankSVMConfig, build_preference_pairs,
                     save_ranker, train_ranksvm)
from .synth import SynthConfig, generate, write_corpus_file, write_queries_file, write_word_labels_file
from .topicword import (TopicWordTrainConfig, extract_word_features,
                        save_topicword, train_topicword)
from .translm import save_translation_table, train_ibm1


class CliError(Exception):
    pass


def read_queries(path) -> dict:
    queries = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            try:
                qid, text = line.split("\t", 1)
                queries[int(qid)] = parse_short_text(text)
            except ValueError as exc:
                raise CliError(f"queries file line {line_no}: {exc}")
    return queries


def read_judgments(path) -> dict:
    labels = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise CliError(f"judgments file line {line_no}: need "
                               "query_id<TAB>pair_id<TAB>label")
            qid, pid, label = parts
            if label not in ("suitable", "unsuitable", "1", "0"):
                raise CliError(f"judgments file line {line_no}: bad label {label!r}")
            labels.setdefault(int(qid), {})[int(pid)] = label in ("suitable", "1")
    return {qid: QueryJudgments(query_id=qid, labels=lbls)
            for qid, lbls in sorted(labels.items())}


def read_word_labels(path):
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 3 or parts[2] not in ("topic", "nontopic"):
                raise CliError(f"word-labels file line {line_no}: need "
                               "text_id<TAB>word<TAB>topic|nontopic")
            rows.append(tuple(parts))
    return rows


def _load(model_dir, require_ranker=False):
    try:
        return load_models(model_dir, require_ranker=require_ranker)
    except (ModelLoadError, FileNotFoundError) as exc:
        raise CliError(f"cannot load model directory {model_dir}: {exc}")


def cmd_ingest(args):
    with open(args.corpus, encoding="utf-8") as fh:
        result = parse_corpus(fh)
    for rej in result.rejections:
        print(f"rejected line {rej.line_no}: {rej.reason}", file=sys.stderr)
    with open(args.out, "w", encoding="utf-8") as fh:
        write_corpus(result.repository, fh)
    print(f"parsed {len(result.repository)} pairs "
          f"({len(result.rejections)} rejected) -> {args.out}")


def cmd_clean(args):
    with open(args.corpus, encoding="utf-8") as fh:
        repo = parse_corpus(fh).repository
    rules = CleaningConfig(min_post_chars=args.min_post_chars,
                           min_comment_chars=args.min_comment_chars,
                           max_comments_per_post=args.max_comments_per_post,
                           ad_min_chars=args.ad_min_chars,
                           ad_min_repeats=args.ad_min_repeats)
    cleaned, report = clean_pairs(repo, rules)
    with open(args.out, "w", encoding="utf-8") as fh:
        write_corpus(cleaned, fh)
    print(f"kept {len(cleaned)} of {len(repo)} pairs -> {args.out}")
    print(f"dropped: short_post={report.dropped_short_post} "
          f"short_comment={report.dropped_short_comment} "
          f"comment_rank={report.dropped_comment_rank} ad={report.dropped_ad}")


def cmd_index(args):
    with open(args.corpus, encoding="utf-8") as fh:
        repo = parse_corpus(fh).repository
    if len(repo) == 0:
        raise CliError("empty corpus")
    vocab = build_vocabulary(repo)
    index = build_index(repo, vocab)
    os.makedirs(args.model_dir, exist_ok=True)
    with open(os.path.join(args.model_dir, CORPUS_FILE), "w", encoding="utf-8") as fh:
        write_corpus(repo, fh)
    save_vocab(vocab, os.path.join(args.model_dir, VOCAB_FILE))
    save_index(index, os.path.join(args.model_dir, INDEX_FILE))
    update_manifest(args.model_dir, {"corpus_tag": vocab.tag})
    print(f"indexed {len(repo)} pairs, vocabulary {len(vocab)} words -> "
          f"{args.model_dir}")


def cmd_train_latent(args):
    reg = _load(args.model_dir)
    pairs = [(reg.index.doc_vector("post", pid),
              reg.index.doc_vector("comment", pid))
             for pid in reg.repo.pair_ids]
    cfg = LatentTrainConfig(d=args.d, mu1=args.mu1, mu2=args.mu2,
                            learning_rate=args.lr, epochs=args.epochs,
                            negative_sampling=args.negative_sampling,
                            seed=args.seed)
    model = train_latent(pairs, cfg, n_words=len(reg.vocab),
                         vocab_tag=reg.vocab.tag)
    _save_latent(model, os.path.join(args.model_dir, "latent.bin"))
    update_manifest(args.model_dir)
    print(f"latent model trained (d={args.d}) -> {args.model_dir}/latent.bin")


def cmd_train_translm(args):
    if args.em_iters < 1:
        raise CliError("--em-iters must be >= 1")
    reg = _load(args.model_dir)
    tbl = train_ibm1(reg.repo, em_iters=args.em_iters, min_freq=args.min_freq,
                     vocab_tag=reg.vocab.tag)
    save_translation_table(tbl, os.path.join(args.model_dir, "trans.tsv"))
    update_manifest(args.model_dir, {
        "translm_alpha": repr(args.alpha),
        "translm_beta": repr(args.beta),
        "translm_gamma": repr(args.gamma)})
    print(f"translation table trained ({len(tbl.rows)} source words, "
          f"{args.em_iters} EM iterations) -> {args.model_dir}/trans.tsv")


def cmd_train_deepmatch(args):
    reg = _load(args.model_dir)
    queries = read_queries(args.queries)
    judgments = read_judgments(args.judgments)
    patches = learn_topics(reg.repo, reg.vocab, k=args.k,
                           words_per_side=args.words_per_side, seed=args.seed,
                           iters=args.gibbs_iters, max_docs=args.gibbs_max_docs)
    model = init_deepmatch(patches, d_k=args.d_k, hidden=args.hidden,
                           seed=args.seed, vocab_tag=reg.vocab.tag)
    triples = []
    for qid, judg in judgments.items():
        if qid not in queries:
            raise CliError(f"judgments reference unknown query {qid}")
        qv = tfidf_vector(queries[qid], reg.vocab)
        pos = sorted(p for p, ok in judg.labels.items() if ok and p in reg.repo)
        neg = sorted(p for p, ok in judg.labels.items() if not ok and p in reg.repo)
        for p in pos:
            for n in neg:
                triples.append(PreferenceTriple(
                    x=qv, y_plus=reg.index.doc_vector("comment", p),
                    y_minus=reg.index.doc_vector("comment", n)))
    if not triples:
        raise CliError("no preference triples derivable from the judgments")
    cfg = DeepMatchTrainConfig(margin=args.margin, learning_rate=args.lr,
                               epochs=args.epochs, l2=args.l2, seed=args.seed)
    train_deepmatch(model, triples, cfg)
    _save_deepmatch(model, os.path.join(args.model_dir, "deepmatch.bin"))
    update_manifest(args.model_dir)
    print(f"deep matching model trained ({len(triples)} triples, K={args.k}) "
          f"-> {args.model_dir}/deepmatch.bin")


def cmd_train_topicword(args):
    reg = _load(args.model_dir)
    rows = read_word_labels(args.labels)
    data = []
    for text_id, word, label in rows:
        try:
            side, pid = text_id.split(":")
            pair = reg.repo[int(pid)]
        except (ValueError, KeyError):
            raise CliError(f"word label references unknown text {text_id!r}")
        text = pair.post if side == "post" else pair.comment
        try:
            f = extract_word_features(text, word, reg.vocab)
        except ValueError as exc:
            raise CliError(f"word label {text_id}/{word}: {exc}")
        data.append((f, label == "topic"))
    cfg = TopicWordTrainConfig(l2=args.l2, epochs=args.epochs,
                               learning_rate=args.lr, seed=args.seed)
    model = train_topicword(data, cfg, vocab_tag=reg.vocab.tag)
    save_topicword(model, os.path.join(args.model_dir, "topicword.txt"))
    update_manifest(args.model_dir)
    print(f"topic-word model trained on {len(data)} labeled words -> "
          f"{args.model_dir}/topicword.txt")


def _assemble_judged(reg, queries, judgments, schema):
    cache = {}
    for qid in sorted(judgments):
        if qid not in queries:
            raise CliError(f"judgments reference unknown query {qid}")
        qv = tfidf_vector(queries[qid], reg.vocab)
        for pid in sorted(judgments[qid].labels):
            if pid not in reg.repo:
                raise CliError(f"judgments reference unknown pair {pid}")
            cache[(qid, pid)] = assemble_features(queries[qid], reg.repo[pid],
                                                  reg, schema, q_vec=qv)
    return cache


def _resolve_feature_set(spec: str):
    if spec in FEATURE_SETS:
        return FEATURE_SETS[spec]
    names = tuple(s.strip() for s in spec.split(",") if s.strip())
    unknown = [n for n in names if n not in FULL_SCHEMA.names]
    if unknown:
        raise CliError(f"unknown features {unknown}; known sets: "
                       f"{', '.join(FEATURE_SETS)}")
    return names


def cmd_train_ranker(args):
    reg = _load(args.model_dir)
    queries = read_queries(args.queries)
    judgments = read_judgments(args.judgments)
    feat_names = _resolve_feature_set(args.features)
    schema = FULL_SCHEMA.subset(feat_names)
    cands = []
    cache = _assemble_judged(reg, queries, judgments, schema)
    for (qid, pid), fv in cache.items():
        cands.append(LabeledCandidate(qid, pid, judgments[qid].labels[pid], fv))
    if args.random_negatives:
        rng = np.random.default_rng(args.seed)
        all_pids = reg.repo.pair_ids
        for qid in sorted(judgments):
            qv = tfidf_vector(queries[qid], reg.vocab)
            judged = set(judgments[qid].labels)
            picks = rng.choice(len(all_pids), size=args.random_negatives,
                               replace=False)
            for i in sorted(int(x) for x in picks):
                pid = all_pids[i]
                if pid in judged:
                    continue
                fv = assemble_features(queries[qid], reg.repo[pid], reg,
                                       schema, q_vec=qv)
                cands.append(LabeledCandidate(qid, pid, False, fv))
    triples = build_preference_pairs(cands)
    if not triples:
        raise CliError("no preference pairs derivable from the judgments")
    model = train_ranksvm(triples, penalty=args.penalty,
                          cfg=RankSVMConfig(epochs=args.epochs, seed=args.seed))
    save_ranker(model, os.path.join(args.model_dir, "ranker.txt"))
    update_manifest(args.model_dir)
    print(f"ranking model trained on {len(triples)} preference pairs "
          f"({len(schema)} features, C={args.penalty}) -> "
          f"{args.model_dir}/ranker.txt")


def cmd_pool(args):
    reg = _load(args.model_dir)
    queries = read_queries(args.queries)
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        for qid in sorted(queries):
            cands = pool_candidates(reg.index, reg.latent, queries[qid],
                                    k=args.k, query_id=qid)
            for pid in cands.merged_ids:
                pair = reg.repo[pid]
                out.write(f"{qid}\t{pid}\t{pair.comment.display()}\t"
                          f"{pair.post.display()}\n")
    finally:
        if out is not sys.stdout:
            out.close()
    print(f"pooled candidates (k={args.k}) for {len(queries)} queries"
          + (f" -> {args.out}" if args.out else ""), file=sys.stderr)


def cmd_eval(args):
    reg = _load(args.model_dir)
    queries = read_queries(args.queries)
    judgments = read_judgments(args.judgments)
    feature_sets = {}
    for spec in args.feature_sets.split(";"):
        spec = spec.strip()
        if spec:
            feature_sets[spec] = _resolve_feature_set(spec)
    cache = _assemble_judged(reg, queries, judgments, FULL_SCHEMA)
    reports, ttests = crossval_feature_sets(
        cache, judgments, feature_sets, folds=args.folds, fold_seed=args.seed,
        penalty=args.penalty,
        ranker_cfg=RankSVMConfig(epochs=args.epochs, seed=args.seed))
    baseline = "baseline" if "baseline" in reports else next(iter(reports))
    print(comparison_grid(reports, baseline=baseline))
    for name, result in sorted(ttests.items()):
        if result:
            print(f"paired t-test {name}: t={result[0]:.4f} p={result[1]:.6f}")
    if args.report:
        import json
        doc = {name: {"map": rep.map_score, "p_at_1": rep.p_at_1,
                      "skipped": rep.skipped_queries,
                      "per_query_ap": {str(k): v for k, v in
                                       sorted(rep.per_query_ap.items())}}
               for name, rep in reports.items()}
        doc["ttests"] = {k: ({"t": v[0], "p": v[1]} if v else None)
                         for k, v in ttests.items()}
        with open(args.report, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
        print(f"report -> {args.report}")


def cmd_serve(args):
    import uvicorn

    from .service import create_app

    model_dir = args.model_dir or os.environ.get("STC_MODEL_DIR")
    if not model_dir:
        raise CliError("need --model-dir or STC_MODEL_DIR")
    reg = _load(model_dir, require_ranker=True)
    if args.ui and not os.path.isdir(args.ui):
        raise CliError(f"--ui directory {args.ui} does not exist")
    app = create_app(reg, model_dir=model_dir, static_dir=args.ui)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")


def cmd_chat(args):
    reg = _load(args.model_dir, require_ranker=True)
    print("stc chat -- empty line quits")
    while True:
        try:
            line = input("you> ").strip()
        except EOFError:
            break
        if not line:
            break
        from .corpus import ShortText, Token
        tokens = tuple(Token(surface) for surface in line.split())
        q = ShortText(sentences=(tokens,),
                      raw_char_len=sum(len(t.surface) for t in tokens))
        result = respond(reg, q, top_k=args.top_k)
        if not result.responses:
            print("engine> (no candidates)")
            continue
        best = result.responses[0]
        print(f"engine> {best.response}")
        if args.verbose:
            print(f"  post: {best.post}")
            print(f"  score: {best.score:.4f}")
            for name, value in best.features_raw.items():
                print(f"    {name}: {value:.4f}")


def cmd_synth(args):
    cfg = SynthConfig(seed=args.seed, n_posts=args.n_posts,
                      comments_per_post=args.comments_per_post,
                      n_queries=args.n_queries)
    data = generate(cfg)
    os.makedirs(args.out_dir, exist_ok=True)
    write_corpus_file(data, os.path.join(args.out_dir, "corpus_raw.tsv"))
    write_queries_file(data.queries, os.path.join(args.out_dir, "queries.tsv"))
    write_word_labels_file(data.word_labels,
                           os.path.join(args.out_dir, "word_labels.tsv"))
    print(f"synthetic corpus ({len(data.corpus_lines)} pairs, "
          f"{len(data.queries)} queries) -> {args.out_dir}")


def cmd_benchmark(args):
    result = run_pipeline(args.workdir, PipelineConfig(seed=args.seed))
    print(comparison_grid(result.reports))
    for name, tt in sorted(result.ttests.items()):
        if tt:
            print(f"paired t-test {name}: t={tt[0]:.4f} p={tt[1]:.6f}")
    print(f"models -> {result.model_dir}")
    print(f"report -> {result.report_path}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stc", description="retrieval-based short text conversation engine")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse a raw corpus TSV")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_ingest)

    p = sub.add_parser("clean", help="apply the cleaning rules")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--min-post-chars", type=int, default=10)
    p.add_argument("--min-comment-chars", type=int, default=5)
    p.add_argument("--max-comments-per-post", type=int, default=100)
    p.add_argument("--ad-min-chars", type=int, default=30)
    p.add_argument("--ad-min-repeats", type=int, default=3)
    p.set_defaults(fn=cmd_clean)

    p = sub.add_parser("index", help="build vocabulary and inverted index")
    p.add_argument("--corpus", required=True)
    p.add_argument("--model-dir", required=True)
    p.set_defaults(fn=cmd_index)

    p = sub.add_parser("train-latent", help="train the latent matching model")
    p.add_argument("--model-dir", required=True)
    p.add_argument("--d", type=int, default=100)
    p.add_argument("--mu1", type=float, default=5.0)
    p.add_argument("--mu2", type=float, default=1.0)
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--epochs", type=int, default=3)
    p.add_argument("--negative-sampling", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_train_latent)

    p = sub.add_parser("train-translm", help="train IBM Model 1 translation table")
    p.add_argument("--model-dir", required=True)
    p.add_argument("--em-iters", type=int, default=5)
    p.add_argument("--min-freq", type=int, default=10)
    p.add_argument("--alpha", type=float, default=0.8)
    p.add_argument("--beta", type=float, default=0.9)
    p.add_argument("--gamma", type=float, default=0.5)
    p.set_defaults(fn=cmd_train_translm)

    p = sub.add_parser("train-deepmatch", help="train the deep matching model")
    p.add_argument("--model-dir", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--judgments", required=True)
    p.add_argument("--k", type=int, default=50)
    p.add_argument("--words-per-side", type=int, default=50)
    p.add_argument("--d-k", type=int, default=5)
    p.add_argument("--hidden", type=int, default=32)
    p.add_argument("--gibbs-iters", type=int, default=50)
    p.add_argument("--gibbs-max-docs", type=int, default=None)
    p.add_argument("--margin", type=float, default=2.0)
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--l2", type=float, default=1e-4)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_train_deepmatch)

    p = sub.add_parser("train-topicword", help="train the topic-word classifier")
    p.add_argument("--model-dir", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--l2", type=float, default=1e-3)
    p.add_argument("--epochs", type=int, default=800)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_train_topicword)

    p = sub.add_parser("train-ranker", help="train the RankingSVM fusion model")
    p.add_argument("--model-dir", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--judgments", required=True)
    p.add_argument("--features", default="full",
                   help="named set or comma-separated feature names")
    p.add_argument("--penalty", type=float, default=50.0)
    p.add_argument("--epochs", type=int, default=60)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--random-negatives", type=int, default=0,
                   help="extra random unsuitable candidates per query")
    p.set_defaults(fn=cmd_train_ranker)

    p = sub.add_parser("pool", help="pool top-k candidates for labeling")
    p.add_argument("--model-dir", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_pool)

    p = sub.add_parser("eval", help="k-fold cross-validated MAP/P@1 grid")
    p.add_argument("--model-dir", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--judgments", required=True)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--feature-sets", default="baseline;full",
                   help="semicolon-separated named sets or feature lists")
    p.add_argument("--penalty", type=float, default=50.0)
    p.add_argument("--epochs", type=int, default=40)
    p.add_argument("--report", default=None)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--model-dir", default=None)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--ui", default=None,
                   help="static directory to mount at / (the web chat UI)")
    p.set_defaults(fn=cmd_serve)

    p = sub.add_parser("chat", help="interactive terminal chat")
    p.add_argument("--model-dir", required=True)
    p.add_argument("--top-k", type=int, default=10)
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(fn=cmd_chat)

    p = sub.add_parser("synth", help="generate a synthetic benchmark corpus")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-posts", type=int, default=625)
    p.add_argument("--comments-per-post", type=int, default=8)
    p.add_argument("--n-queries", type=int, default=50)
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("benchmark", help="full synthetic train->index->eval run")
    p.add_argument("--workdir", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_benchmark)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.fn(args)
    except (CliError, CorpusError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
