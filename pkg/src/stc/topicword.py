"""Topic-word classifier and topic-word-weighted similarity features.

A logistic regression over nine word-in-text features predicts P(topic|w),
the probability that word w carries the text's main theme; those
probabilities then replace TF-IDF as term weights in query-response and
query-post cosines.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .corpus import (POS_TAGS, PostCommentPair, ShortText, Vocabulary, cosine,
                     weighted_vector)

# Expanded feature layout: 8 scalars + one-hot POS.
FEATURE_NAMES = ("TF", "IDF", "SF", "First", "Last", "NE", "NE_First",
                 "NE_Last") + tuple(f"POS_{t}" for t in POS_TAGS)


@dataclass(frozen=True)
class WordFeatureVector:
    tf: int
    idf: float
    sf: int
    first: int
    last: int
    ne: int
    ne_first: int
    ne_last: int
    pos: str

    def __post_init__(self):
        if self.tf < 1 or self.sf < 1:
            raise ValueError("TF and SF must be >= 1 for an occurring word")
        for name in ("first", "last", "ne", "ne_first", "ne_last"):
            if getattr(self, name) not in (0, 1):
                raise ValueError(f"{name} must be a 0/1 flag")
        if self.pos not in POS_TAGS:
            raise ValueError(f"unknown pos {self.pos!r}")
        if self.ne_first > min(self.ne, self.first):
            raise ValueError("NE_First may not exceed min(NE, First)")
        if self.ne_last > min(self.ne, self.last):
            raise ValueError("NE_Last may not exceed min(NE, Last)")

    def expand(self) -> np.ndarray:
        onehot = [1.0 if self.pos == t else 0.0 for t in POS_TAGS]
        return np.array([self.tf, self.idf, self.sf, self.first, self.last,
                         self.ne, self.ne_first, self.ne_last, *onehot])


def extract_word_features(text: ShortText, word: str,
                          vocab: Vocabulary) -> WordFeatureVector:
    """Features of one word inside one short text; the word must occur."""
    tf = sf = 0
    first = last = ne = ne_first = ne_last = 0
    pos = None
    n_sents = len(text.sentences)
    for si, sent in enumerate(text.sentences):
        in_sent = False
        for tok in sent:
            if tok.surface != word:
                continue
            tf += 1
            in_sent = True
            if pos is None:
                pos = tok.pos
            if tok.is_ne:
                ne = 1
                if si == 0:
                    ne_first = 1
                if si == n_sents - 1:
                    ne_last = 1
        if in_sent:
            sf += 1
            if si == 0:
                first = 1
            if si == n_sents - 1:
                last = 1
    if tf == 0:
        raise ValueError(f"word {word!r} does not occur in the text")
    return WordFeatureVector(tf=tf, idf=vocab.idf(word), sf=sf, first=first,
                             last=last, ne=ne, ne_first=ne_first,
                             ne_last=ne_last, pos=pos)


@dataclass
class TopicWordModel:
    weights: np.ndarray          # aligned to FEATURE_NAMES
    intercept: float = 0.0       # fixed at 0
    vocab_tag: str = ""

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.weights.shape != (len(FEATURE_NAMES),):
            raise ValueError("weight vector does not match the feature layout")
        if not np.all(np.isfinite(self.weights)):
            raise ValueError("non-finite weights")


def _sigmoid_scalar(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    ez = math.exp(z)
    return ez / (1.0 + ez)


def topic_prob(m: TopicWordModel, f: WordFeatureVector) -> float:
    """P(topic|w) = sigmoid(w.x + c), stable for large |w.x|.

    Clamped into the open interval so extreme logits cannot round to an
    exact 0 or 1.
    """
    p = _sigmoid_scalar(float(m.weights @ f.expand()) + m.intercept)
    if p >= 1.0:
        return math.nextafter(1.0, 0.0)
    if p <= 0.0:
        return math.nextafter(0.0, 1.0)
    return p


@dataclass(frozen=True)
class TopicWordTrainConfig:
    l2: float = 1e-3
    epochs: int = 800
    learning_rate: float = 0.1
    seed: int = 0


def logreg_loglik(weights: np.ndarray, x: np.ndarray, y: np.ndarray,
                  l2: float) -> float:
    """L2-penalized Bernoulli log-likelihood with c = 0."""
    z = x @ weights
    # log sigma(z) = -log(1+e^-z), computed stably
    ll = -np.logaddexp(0.0, -z) @ y - np.logaddexp(0.0, z) @ (1.0 - y)
    return float(ll - 0.5 * l2 * weights @ weights)


def logreg_grad(weights: np.ndarray, x: np.ndarray, y: np.ndarray,
                l2: float) -> np.ndarray:
    z = x @ weights
    p = np.where(z >= 0, 1.0 / (1.0 + np.exp(-np.abs(z))),
                 np.exp(-np.abs(z)) / (1.0 + np.exp(-np.abs(z))))
    return x.T @ (y - p) - l2 * weights


def train_topicword(data, cfg: TopicWordTrainConfig = TopicWordTrainConfig(),
                    vocab_tag: str = "") -> TopicWordModel:
    """Gradient ascent on the penalized log-likelihood (intercept fixed at 0).

    data: list of (WordFeatureVector, label) with label True for topic words.
    Full-batch and therefore deterministic; cfg.seed is kept for interface
    symmetry with the other trainers.
    """
    if not data:
        raise ValueError("no training data")
    labels = {bool(lbl) for _, lbl in data}
    if len(labels) < 2:
        raise ValueError("single-class training data")
    x = np.stack([f.expand() for f, _ in data])
    y = np.array([1.0 if lbl else 0.0 for _, lbl in data])
    w = np.zeros(x.shape[1])
    for _ in range(cfg.epochs):
        w += cfg.learning_rate / len(data) * logreg_grad(w, x, y, cfg.l2)
    return TopicWordModel(weights=w, vocab_tag=vocab_tag)


def topic_vector(text: ShortText, m: TopicWordModel, vocab: Vocabulary):
    """Sparse vector of the text's words weighted by P(topic|w) in context."""
    return weighted_vector(
        text, vocab,
        lambda word: topic_prob(m, extract_word_features(text, word, vocab)))


def topicword_sims(q: ShortText, pair: PostCommentPair, m: TopicWordModel,
                   vocab: Vocabulary):
    """(sim_Q2R_TW, sim_Q2P_TW): cosines under topic-probability weights."""
    qv = topic_vector(q, m, vocab)
    rv = topic_vector(pair.comment, m, vocab)
    pv = topic_vector(pair.post, m, vocab)
    return cosine(qv, rv), cosine(qv, pv)


def save_topicword(m: TopicWordModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# stc topicword model v1\n")
        fh.write(f"# vocab_tag\t{m.vocab_tag}\n")
        fh.write(f"# intercept\t{float(m.intercept)!r}\n")
        for name, w in zip(FEATURE_NAMES, m.weights):
            fh.write(f"{name}\t{float(w)!r}\n")


def load_topicword(path) -> TopicWordModel:
    weights = {}
    tag, intercept = "", 0.0
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].strip().split("\t")
                if len(parts) == 2 and parts[0] == "vocab_tag":
                    tag = parts[1]
                elif len(parts) == 2 and parts[0] == "intercept":
                    intercept = float(parts[1])
                continue
            name, value = line.split("\t")
            weights[name] = float(value)
    missing = [n for n in FEATURE_NAMES if n not in weights]
    if missing:
        raise ValueError(f"topicword model missing weights for {missing}")
    return TopicWordModel(weights=np.array([weights[n] for n in FEATURE_NAMES]),
                          intercept=intercept, vocab_tag=tag)
