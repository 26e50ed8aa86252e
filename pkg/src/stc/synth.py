"""Seeded synthetic conversation corpus with planted topics.

Every post belongs to one of n_topics themes and draws from that theme's
post-side vocabulary; its comments draw from a disjoint response-side
vocabulary of the same theme (so query-response word overlap is thin and the
translation/latent/topic models have real signal to add over plain TF-IDF).
Shared filler words and repeated high-TF noise words blur the lexical
baseline. Ground-truth topic assignments are kept so pooled candidates can
be labeled automatically and topic-word training labels can be emitted.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SynthConfig:
    n_topics: int = 8
    n_posts: int = 625
    comments_per_post: int = 8
    n_queries: int = 50
    post_vocab_per_topic: int = 25
    resp_vocab_per_topic: int = 25
    shared_vocab: int = 50
    noise_vocab: int = 30
    off_topic_comment_rate: float = 0.12
    noise_repeat_rate: float = 0.5
    confusion_rate: float = 0.25   # post/query words drawn from a neighbor topic
    label_texts: int = 150
    dirty_fraction: float = 0.01
    seed: int = 0


@dataclass
class SyntheticData:
    corpus_lines: list
    queries: dict          # query_id -> text in corpus syntax
    word_labels: list      # (text_id, word, label) rows
    comment_topic: dict    # pair_id -> topic of the comment
    post_topic: dict       # pair_id -> topic of the post
    query_topic: dict      # query_id -> topic
    topical_words: set     # ground-truth topic vocabulary (both sides)


def _annot(word: str, pos: str, ne: bool = False) -> str:
    return f"{word}|{pos}|{1 if ne else 0}"


class _Vocab:
    def __init__(self, cfg: SynthConfig):
        self.post = [[f"pt{t}w{i}" for i in range(cfg.post_vocab_per_topic)]
                     for t in range(cfg.n_topics)]
        self.resp = [[f"rt{t}w{i}" for i in range(cfg.resp_vocab_per_topic)]
                     for t in range(cfg.n_topics)]
        self.shared = [f"cm{i}" for i in range(cfg.shared_vocab)]
        self.noise = [f"nz{i}" for i in range(cfg.noise_vocab)]
        self.topical = {w for side in (self.post, self.resp)
                        for words in side for w in words}


def _topic_word(rng, pools, topic: int, cfg: SynthConfig) -> str:
    """Mostly the topic's own vocabulary, sometimes a neighbor's."""
    if rng.random() < cfg.confusion_rate:
        topic = (topic + 1) % cfg.n_topics
    return str(rng.choice(pools[topic]))


def _post_sentences(rng, voc: _Vocab, topic: int, cfg: SynthConfig):
    n_topic_words = int(rng.integers(4, 8))
    first = []
    for _ in range(n_topic_words):
        w = _topic_word(rng, voc.post, topic, cfg)
        ne = w.endswith("0") and rng.random() < 0.5
        first.append(_annot(w, "NOUN", ne))
    second = [_annot(str(w), "OTHER")
              for w in rng.choice(voc.shared, size=int(rng.integers(2, 5)))]
    if rng.random() < cfg.noise_repeat_rate:
        noise = str(rng.choice(voc.noise))
        second += [_annot(noise, "OTHER")] * int(rng.integers(2, 4))
    return f"{' '.join(first)} || {' '.join(second)}"


def _comment_text(rng, voc: _Vocab, topic: int, cfg: SynthConfig):
    n_topic_words = int(rng.integers(3, 7))
    words = [_annot(str(w), "VERB")
             for w in rng.choice(voc.resp[topic], size=n_topic_words)]
    words += [_annot(str(w), "OTHER")
              for w in rng.choice(voc.shared, size=int(rng.integers(1, 4)))]
    if rng.random() < cfg.noise_repeat_rate * 0.6:
        noise = str(rng.choice(voc.noise))
        words += [_annot(noise, "OTHER")] * int(rng.integers(2, 4))
    return " ".join(words)


def _query_text(rng, voc: _Vocab, topic: int, cfg: SynthConfig):
    n_topic_words = int(rng.integers(3, 7))
    first = [_annot(_topic_word(rng, voc.post, topic, cfg), "NOUN")
             for _ in range(n_topic_words)]
    second = [_annot(str(w), "OTHER")
              for w in rng.choice(voc.shared, size=int(rng.integers(1, 4)))]
    if rng.random() < 0.6:
        noise = str(rng.choice(voc.noise))
        second += [_annot(noise, "OTHER")] * int(rng.integers(2, 5))
    return f"{' '.join(first)} || {' '.join(second)}"


def generate(cfg: SynthConfig = SynthConfig()) -> SyntheticData:
    rng = np.random.default_rng(cfg.seed)
    voc = _Vocab(cfg)
    lines = []
    comment_topic, post_topic = {}, {}
    pair_id = 0
    for post_idx in range(cfg.n_posts):
        topic = int(rng.integers(cfg.n_topics))
        post = _post_sentences(rng, voc, topic, cfg)
        for _ in range(cfg.comments_per_post):
            pair_id += 1
            c_topic = topic
            if rng.random() < cfg.off_topic_comment_rate:
                c_topic = int(rng.integers(cfg.n_topics))
            comment = _comment_text(rng, voc, c_topic, cfg)
            if rng.random() < cfg.dirty_fraction:
                comment = _annot("ok", "OTHER")  # too short; cleaned away
            lines.append(f"{pair_id}\t{post_idx}\t{post}\t{comment}\n")
            comment_topic[pair_id] = c_topic
            post_topic[pair_id] = topic

    queries, query_topic = {}, {}
    for qid in range(1, cfg.n_queries + 1):
        topic = int(rng.integers(cfg.n_topics))
        queries[qid] = _query_text(rng, voc, topic, cfg)
        query_topic[qid] = topic

    # Word-level topic labels over sampled repository texts.
    word_labels = []
    n_pairs = pair_id
    chosen = rng.choice(n_pairs, size=min(cfg.label_texts, n_pairs), replace=False)
    for idx in sorted(int(i) for i in chosen):
        pid = idx + 1
        side = "post" if rng.random() < 0.5 else "comment"
        text_field = lines[idx].rstrip("\n").split("\t")[2 if side == "post" else 3]
        words = {tok.split("|")[0] for tok in text_field.split() if tok != "||"}
        for w in sorted(words):
            label = "topic" if w in voc.topical else "nontopic"
            word_labels.append((f"{side}:{pid}", w, label))

    return SyntheticData(corpus_lines=lines, queries=queries,
                         word_labels=word_labels, comment_topic=comment_topic,
                         post_topic=post_topic, query_topic=query_topic,
                         topical_words=voc.topical)


def write_corpus_file(data: SyntheticData, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.writelines(data.corpus_lines)


def write_queries_file(queries: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for qid in sorted(queries):
            fh.write(f"{qid}\t{queries[qid]}\n")


def write_word_labels_file(word_labels, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for text_id, word, label in word_labels:
            fh.write(f"{text_id}\t{word}\t{label}\n")
