"""End-to-end pipeline on a corpus: train every model, pool, judge, CV-eval.

Matching models are trained once; the ranking model is retrained inside each
cross-validation fold. Everything is driven by one master seed, so two runs
with the same seed write byte-identical artifacts and reports.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from .corpus import (CleaningConfig, Repository, build_vocabulary,
                     clean_pairs, parse_corpus, parse_short_text, tfidf_vector)
from .deepmatch import (DeepMatchTrainConfig, PreferenceTriple, init_deepmatch,
                        learn_topics, train_deepmatch)
from .engine import ModelRegistry, save_models
from .evaluation import (QueryJudgments, aggregate, average_precision,
                         kfold_split, p_at_1, paired_ttest, pool_candidates)
from .features import (BASELINE_FEATURES, FULL_FEATURES, FULL_SCHEMA,
                       assemble_features)
from .index import build_index
from .latent import LatentTrainConfig, train_latent
from .ranker import (LabeledCandidate, RankSVMConfig, build_preference_pairs,
                     rank_score, train_ranksvm)
from .synth import SynthConfig, generate, write_corpus_file, write_queries_file, write_word_labels_file
from .topicword import (TopicWordTrainConfig, extract_word_features,
                        train_topicword)
from .translm import TransLMConfig, train_ibm1

FEATURE_SETS = {
    "q2r": ("sim_q2r", "lcs_q2r", "cooccur_size_q2r", "cooccur_rate_q2r",
            "cooccur_sum_idf_q2r", "cooccur_avg_idf_q2r"),
    "q2r+q2p": ("sim_q2r", "sim_q2p", "lcs_q2r",
                "cooccur_size_q2r", "cooccur_rate_q2r",
                "cooccur_sum_idf_q2r", "cooccur_avg_idf_q2r",
                "cooccur_size_q2p", "cooccur_rate_q2p",
                "cooccur_sum_idf_q2p", "cooccur_avg_idf_q2p"),
    "baseline": BASELINE_FEATURES,
    "baseline+translm": BASELINE_FEATURES + ("translm_logprob",),
    "baseline+deepmatch": BASELINE_FEATURES + ("deepmatch_score",),
    "baseline+topicword": BASELINE_FEATURES + ("topicword_q2r", "topicword_q2p"),
    "full": FULL_FEATURES,
}


@dataclass(frozen=True)
class PipelineConfig:
    seed: int = 0
    synth: SynthConfig | None = None      # filled from seed when None
    pool_k: int = 10
    folds: int = 5
    penalty: float = 50.0
    latent_d: int = 30
    latent_epochs: int = 2
    latent_lr: float = 0.02
    em_iters: int = 5
    min_freq: int = 10
    gibbs_iters: int = 25
    gibbs_max_docs: int = 1500
    deepmatch_d_k: int = 4
    deepmatch_hidden: int = 8
    deepmatch_epochs: int = 3
    deepmatch_lr: float = 0.2
    deepmatch_max_triples: int = 1200
    ranker_epochs: int = 40
    feature_sets: tuple = ("baseline", "full")


@dataclass
class PipelineResult:
    registry: ModelRegistry
    queries: dict            # query_id -> ShortText
    judgments: dict          # query_id -> QueryJudgments
    reports: dict            # feature set name -> EvalReport
    ttests: dict             # "a_vs_b" -> (t, p)
    model_dir: str
    report_path: str


def _seeds(master: int, n: int):
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(master).spawn(n)]


def run_pipeline(workdir, cfg: PipelineConfig = PipelineConfig()) -> PipelineResult:
    os.makedirs(workdir, exist_ok=True)
    (synth_seed, latent_seed, gibbs_seed, deep_seed, ranker_seed,
     fold_seed) = _seeds(cfg.seed, 6)

    synth_cfg = cfg.synth or SynthConfig(seed=synth_seed)
    data = generate(synth_cfg)
    corpus_path = os.path.join(workdir, "corpus_raw.tsv")
    write_corpus_file(data, corpus_path)
    write_queries_file(data.queries, os.path.join(workdir, "queries.tsv"))
    write_word_labels_file(data.word_labels,
                           os.path.join(workdir, "word_labels.tsv"))

    with open(corpus_path, encoding="utf-8") as fh:
        parsed = parse_corpus(fh)
    repo, clean_report = clean_pairs(parsed.repository, CleaningConfig())
    vocab = build_vocabulary(repo)
    index = build_index(repo, vocab)

    trans = train_ibm1(repo, em_iters=cfg.em_iters, min_freq=cfg.min_freq,
                       vocab_tag=vocab.tag)
    translm_cfg = TransLMConfig()

    latent_pairs = [(index.doc_vector("post", pid), index.doc_vector("comment", pid))
                    for pid in repo.pair_ids]
    latent = train_latent(latent_pairs,
                          LatentTrainConfig(d=cfg.latent_d,
                                            epochs=cfg.latent_epochs,
                                            learning_rate=cfg.latent_lr,
                                            seed=latent_seed),
                          n_words=len(vocab), vocab_tag=vocab.tag)

    patches = learn_topics(repo, vocab, k=synth_cfg.n_topics,
                           words_per_side=synth_cfg.post_vocab_per_topic,
                           seed=gibbs_seed, iters=cfg.gibbs_iters,
                           max_docs=cfg.gibbs_max_docs)

    topicword_data = _word_label_training_data(data.word_labels, repo, vocab)
    topicword = train_topicword(topicword_data, TopicWordTrainConfig(),
                                vocab_tag=vocab.tag)

    queries = {qid: parse_short_text(t) for qid, t in data.queries.items()}
    judgments = _pool_and_judge(index, latent, queries, data, cfg.pool_k)

    deep = init_deepmatch(patches, d_k=cfg.deepmatch_d_k,
                          hidden=cfg.deepmatch_hidden, seed=deep_seed,
                          vocab_tag=vocab.tag)
    triples = _deepmatch_triples(index, queries, judgments, deep_seed,
                                 cfg.deepmatch_max_triples)
    if triples:
        train_deepmatch(deep, triples,
                        DeepMatchTrainConfig(learning_rate=cfg.deepmatch_lr,
                                             epochs=cfg.deepmatch_epochs,
                                             seed=deep_seed))

    registry = ModelRegistry(repo=repo, vocab=vocab, index=index,
                             ranker=None, schema=FULL_SCHEMA, latent=latent,
                             translation=trans, translm_cfg=translm_cfg,
                             deepmatch=deep, topicword=topicword)

    # Feature matrix over every judged candidate, assembled once.
    feature_cache = {}
    for qid in sorted(judgments):
        q = queries[qid]
        qv = tfidf_vector(q, vocab)
        for pid in sorted(judgments[qid].labels):
            feature_cache[(qid, pid)] = assemble_features(
                q, repo[pid], registry, FULL_SCHEMA, q_vec=qv)

    reports, ttests = crossval_feature_sets(
        feature_cache, judgments,
        {name: FEATURE_SETS[name] for name in cfg.feature_sets},
        folds=cfg.folds, fold_seed=fold_seed, penalty=cfg.penalty,
        ranker_cfg=RankSVMConfig(epochs=cfg.ranker_epochs, seed=ranker_seed))

    # Final engine artifact: full-feature ranker trained on all judgments.
    all_cands = [LabeledCandidate(qid, pid, judgments[qid].labels[pid],
                                  feature_cache[(qid, pid)])
                 for qid in sorted(judgments)
                 for pid in sorted(judgments[qid].labels)]
    final_ranker = train_ranksvm(build_preference_pairs(all_cands),
                                 penalty=cfg.penalty,
                                 cfg=RankSVMConfig(epochs=cfg.ranker_epochs,
                                                   seed=ranker_seed))
    registry.ranker = final_ranker

    model_dir = os.path.join(workdir, "models")
    save_models(registry, model_dir)
    report_path = os.path.join(workdir, "report.json")
    _write_report(report_path, cfg, synth_cfg, clean_report, reports, ttests,
                  judgments)
    return PipelineResult(registry=registry, queries=queries,
                          judgments=judgments, reports=reports, ttests=ttests,
                          model_dir=model_dir, report_path=report_path)


def _word_label_training_data(word_labels, repo: Repository, vocab):
    data = []
    for text_id, word, label in word_labels:
        side, pid = text_id.split(":")
        pid = int(pid)
        if pid not in repo:
            continue  # the labeled pair may have been cleaned away
        pair = repo[pid]
        text = pair.post if side == "post" else pair.comment
        try:
            f = extract_word_features(text, word, vocab)
        except ValueError:
            continue
        data.append((f, label == "topic"))
    return data


def _pool_and_judge(index, latent, queries, data, pool_k):
    judgments = {}
    for qid in sorted(queries):
        cands = pool_candidates(index, latent, queries[qid], k=pool_k,
                                query_id=qid)
        labels = {pid: data.comment_topic[pid] == data.query_topic[qid]
                  for pid in cands.merged_ids}
        if labels:
            judgments[qid] = QueryJudgments(query_id=qid, labels=labels)
    return judgments


def _deepmatch_triples(index, queries, judgments, seed, max_triples):
    triples = []
    for qid in sorted(judgments):
        qv = tfidf_vector(queries[qid], index.vocab)
        labels = judgments[qid].labels
        pos = sorted(pid for pid, ok in labels.items() if ok)
        neg = sorted(pid for pid, ok in labels.items() if not ok)
        for p in pos:
            for n in neg:
                triples.append(PreferenceTriple(
                    x=qv, y_plus=index.doc_vector("comment", p),
                    y_minus=index.doc_vector("comment", n)))
    if len(triples) > max_triples:
        rng = np.random.default_rng(seed)
        chosen = rng.choice(len(triples), size=max_triples, replace=False)
        triples = [triples[i] for i in sorted(chosen)]
    return triples


def crossval_feature_sets(feature_cache, judgments, feature_sets: dict,
                          folds: int, fold_seed: int, penalty: float,
                          ranker_cfg: RankSVMConfig):
    """Per-fold ranker training and judged-pool evaluation per feature set."""
    qids = sorted(judgments)
    fold_lists = kfold_split(qids, k=min(folds, len(qids)), seed=fold_seed)
    fold_of = {qid: i for i, fold in enumerate(fold_lists) for qid in fold}

    reports = {}
    for name, feat_names in feature_sets.items():
        schema = FULL_SCHEMA.subset(feat_names)
        per_ap, per_p1 = {}, {}
        skipped = 0
        for fold_idx, test_qids in enumerate(fold_lists):
            train_cands = []
            for qid in qids:
                if fold_of[qid] == fold_idx:
                    continue
                for pid in sorted(judgments[qid].labels):
                    train_cands.append(LabeledCandidate(
                        qid, pid, judgments[qid].labels[pid],
                        feature_cache[(qid, pid)].project(schema)))
            triples = build_preference_pairs(train_cands)
            model = train_ranksvm(triples, penalty=penalty, cfg=ranker_cfg)
            for qid in sorted(test_qids):
                scored = []
                for pid in sorted(judgments[qid].labels):
                    fv = feature_cache[(qid, pid)].project(schema)
                    scored.append((-rank_score(model, fv), pid))
                scored.sort()
                ranking = [pid for _, pid in scored]
                ap = average_precision(ranking, judgments[qid])
                if ap is None:
                    skipped += 1
                    continue
                per_ap[qid] = ap
                per_p1[qid] = p_at_1(ranking, judgments[qid])
        reports[name] = aggregate(per_ap, per_p1, skipped, fold_of)

    ttests = {}
    names = list(feature_sets)
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            shared = sorted(set(reports[a].per_query_ap) & set(reports[b].per_query_ap))
            if len(shared) >= 2:
                try:
                    t, p = paired_ttest([reports[a].per_query_ap[q] for q in shared],
                                        [reports[b].per_query_ap[q] for q in shared])
                    ttests[f"{a}_vs_{b}"] = (t, p)
                except ValueError:
                    ttests[f"{a}_vs_{b}"] = None
    return reports, ttests


def _write_report(path, cfg: PipelineConfig, synth_cfg, clean_report, reports,
                  ttests, judgments):
    doc = {
        "pipeline": {
            "seed": cfg.seed,
            "pool_k": cfg.pool_k,
            "folds": cfg.folds,
            "ranksvm_penalty": cfg.penalty,
            "em_iters": cfg.em_iters,
            "min_freq": cfg.min_freq,
        },
        "synthetic": {
            "seed": synth_cfg.seed,
            "n_topics": synth_cfg.n_topics,
            "n_pairs": synth_cfg.n_posts * synth_cfg.comments_per_post,
            "n_queries": synth_cfg.n_queries,
        },
        "cleaning": {
            "dropped_short_post": clean_report.dropped_short_post,
            "dropped_short_comment": clean_report.dropped_short_comment,
            "dropped_comment_rank": clean_report.dropped_comment_rank,
            "dropped_ad": clean_report.dropped_ad,
        },
        "judged_queries": len(judgments),
        "feature_sets": {
            name: {
                "map": rep.map_score,
                "p_at_1": rep.p_at_1,
                "evaluated_queries": len(rep.per_query_ap),
                "skipped_queries": rep.skipped_queries,
                "per_query_ap": {str(q): v for q, v in sorted(rep.per_query_ap.items())},
            }
            for name, rep in reports.items()
        },
        "ttests": {k: ({"t": v[0], "p": v[1]} if v else None)
                   for k, v in ttests.items()},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def comparison_grid(reports: dict, baseline: str = "baseline") -> str:
    """Text grid of MAP / P@1 with percent improvement over the baseline."""
    lines = [f"{'model':<24}{'MAP':>8}{'P@1':>8}{'%impr MAP':>12}{'%impr P@1':>12}"]
    base = reports.get(baseline)
    for name, rep in reports.items():
        if base and base.map_score > 0 and name != baseline:
            impr_map = 100.0 * (rep.map_score - base.map_score) / base.map_score
            impr_p1 = (100.0 * (rep.p_at_1 - base.p_at_1) / base.p_at_1
                       if base.p_at_1 > 0 else float("nan"))
            imp = f"{impr_map:>12.1f}{impr_p1:>12.1f}"
        else:
            imp = f"{'---':>12}{'---':>12}"
        lines.append(f"{name:<24}{rep.map_score:>8.3f}{rep.p_at_1:>8.3f}{imp}")
    return "\n".join(lines)
