"""Matching features for a (query, post-comment pair): Stage II.

Basic cosines, the latent match score, longest-common-string, co-occurrence
statistics, the TransLM log-score (length-normalized), the DeepMatch score
and the two topic-word-weighted cosines. Features are emitted raw; the
ranker owns standardization.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .corpus import (PostCommentPair, ShortText, SparseVector, Vocabulary,
                     cosine, tfidf_vector)

if TYPE_CHECKING:
    from .engine import ModelRegistry

SCHEMA_VERSION = "stc-features-v1"

BASELINE_FEATURES = (
    "sim_q2r", "sim_q2p", "latent_match", "lcs_q2r",
    "cooccur_size_q2r", "cooccur_rate_q2r", "cooccur_sum_idf_q2r", "cooccur_avg_idf_q2r",
    "cooccur_size_q2p", "cooccur_rate_q2p", "cooccur_sum_idf_q2p", "cooccur_avg_idf_q2p",
)
FULL_FEATURES = BASELINE_FEATURES + (
    "translm_logprob", "deepmatch_score", "topicword_q2r", "topicword_q2p",
)


class FeatureError(ValueError):
    """A schema feature cannot be resolved against the model registry."""


@dataclass(frozen=True)
class FeatureSchema:
    names: tuple
    version: str = SCHEMA_VERSION

    def __post_init__(self):
        if len(set(self.names)) != len(self.names):
            raise ValueError("duplicate feature names in schema")

    def __len__(self):
        return len(self.names)

    def index(self, name: str) -> int:
        return self.names.index(name)

    def subset(self, names) -> "FeatureSchema":
        missing = [n for n in names if n not in self.names]
        if missing:
            raise ValueError(f"unknown features {missing}")
        return FeatureSchema(tuple(names), self.version)


FULL_SCHEMA = FeatureSchema(FULL_FEATURES)
BASELINE_SCHEMA = FeatureSchema(BASELINE_FEATURES)


@dataclass(frozen=True)
class FeatureVector:
    schema: FeatureSchema
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", values)
        if values.shape != (len(self.schema),):
            raise ValueError("value count does not match the schema")
        if len(values) and not np.all(np.isfinite(values)):
            raise ValueError("non-finite feature value")

    def value(self, name: str) -> float:
        return float(self.values[self.schema.index(name)])

    def project(self, schema: FeatureSchema) -> "FeatureVector":
        idx = [self.schema.index(n) for n in schema.names]
        return FeatureVector(schema, self.values[idx])


def sim_q2r(q: SparseVector, r: SparseVector) -> float:
    """Cosine of the query and response TF-IDF vectors."""
    return cosine(q, r)


def sim_q2p(q: SparseVector, p: SparseVector) -> float:
    """Cosine of the query and post TF-IDF vectors."""
    return cosine(q, p)


def lcs_length(q: ShortText, r: ShortText) -> int:
    """Length in characters of the longest common contiguous substring of
    the surface strings."""
    a, b = q.surface, r.surface
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    best = 0
    for i in range(1, len(a) + 1):
        curr = [0] * (len(b) + 1)
        ai = a[i - 1]
        for j in range(1, len(b) + 1):
            if ai == b[j - 1]:
                curr[j] = prev[j - 1] + 1
                if curr[j] > best:
                    best = curr[j]
        prev = curr
    return best


def cooccur_features(x: ShortText, y: ShortText, vocab: Vocabulary):
    """(size, rate, sumIDF, averageIDF) over common in-vocabulary word types.

    rate divides by the distinct word-type count of y; all four values are 0
    when the common set is empty.
    """
    common = sorted(w for w in x.types() & y.types() if w in vocab)
    y_types = len(y.types())
    if not common or y_types == 0:
        return 0.0, 0.0, 0.0, 0.0
    size = float(len(common))
    sum_idf = sum(vocab.idf(w) for w in common)
    return size, size / y_types, sum_idf, sum_idf / size


def translm_feature(score) -> float:
    """Length-normalized TransLM log-probability: log P / scored-word count."""
    if score.scored_words == 0:
        return 0.0
    return score.logprob / score.scored_words


def assemble_features(q: ShortText, pair: PostCommentPair,
                      models: "ModelRegistry", schema: FeatureSchema,
                      q_vec: SparseVector | None = None) -> FeatureVector:
    """Resolve every schema feature against the registry.

    q_vec may carry the precomputed query TF-IDF vector. Raises FeatureError
    naming the feature when a required model is absent.
    """
    from . import deepmatch as dm
    from . import topicword as tw
    from .latent import latent_score
    from .translm import translm_logscore

    vocab = models.vocab
    if q_vec is None:
        q_vec = tfidf_vector(q, vocab)
    r_vec = tfidf_vector(pair.comment, vocab)
    p_vec = tfidf_vector(pair.post, vocab)

    cache = {}

    def cooccur(side: str):
        key = f"cooccur_{side}"
        if key not in cache:
            other = pair.comment if side == "q2r" else pair.post
            cache[key] = cooccur_features(q, other, vocab)
        return cache[key]

    def topicword(side: str):
        if "topicword" not in cache:
            if models.topicword is None:
                raise FeatureError("topicword missing: schema requires the "
                                   "topic-word model")
            cache["topicword"] = tw.topicword_sims(q, pair, models.topicword, vocab)
        return cache["topicword"][0 if side == "q2r" else 1]

    values = []
    for name in schema.names:
        if name == "sim_q2r":
            v = sim_q2r(q_vec, r_vec)
        elif name == "sim_q2p":
            v = sim_q2p(q_vec, p_vec)
        elif name == "latent_match":
            if models.latent is None:
                raise FeatureError("latent missing: schema requires the "
                                   "latent matching model")
            v = latent_score(models.latent, q_vec, r_vec)
        elif name == "lcs_q2r":
            v = float(lcs_length(q, pair.comment))
        elif name.startswith("cooccur_"):
            stat, side = name[len("cooccur_"):].rsplit("_", 1)
            idx = {"size": 0, "rate": 1, "sum_idf": 2, "avg_idf": 3}[stat]
            v = cooccur(side)[idx]
        elif name == "translm_logprob":
            if models.translation is None or models.collection_lm is None:
                raise FeatureError("translm missing: schema requires the "
                                   "translation table")
            score = translm_logscore(models.translation, models.translm_cfg,
                                     q, pair, models.collection_lm, vocab)
            v = translm_feature(score)
        elif name == "deepmatch_score":
            if models.deepmatch is None:
                raise FeatureError("deepmatch missing: schema requires the "
                                   "deep matching model")
            v = dm.forward(models.deepmatch, q_vec, r_vec)
        elif name == "topicword_q2r":
            v = topicword("q2r")
        elif name == "topicword_q2p":
            v = topicword("q2p")
        else:
            raise FeatureError(f"unknown feature {name!r}")
        values.append(v)
    return FeatureVector(schema, np.array(values))
