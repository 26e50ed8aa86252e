"""Pooling, MAP / P@1, k-fold splits and the paired t-test.

Evaluation runs over the judged candidate pool only; queries with no
suitable judged candidate are skipped (reported, excluded from the means).
The t-distribution CDF is computed in-repo via the continued-fraction
regularized incomplete beta function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .corpus import ShortText
from .index import CandidateSet, InvertedIndex, Stage1Config, stage1_candidates


@dataclass
class QueryJudgments:
    query_id: int
    labels: dict  # pair_id -> bool (suitable)

    def __post_init__(self):
        if not self.labels:
            raise ValueError("judgments need at least one candidate")

    def suitable_ids(self):
        return {pid for pid, ok in self.labels.items() if ok}


def pool_candidates(index: InvertedIndex, latent, q: ShortText, k: int = 10,
                    query_id: int = -1) -> CandidateSet:
    """Labeling pool: union of top-k from Q2R, Q2P and exhaustive latent."""
    cfg = Stage1Config(per_model_k=k, exhaustive_latent=True)
    return stage1_candidates(index, latent, q, cfg, query_id=query_id)


def average_precision(ranking, judg: QueryJudgments):
    """Mean precision at the ranks of suitable items; None when the query has
    no suitable judged candidate (skipped). Unjudged items count as
    unsuitable but still occupy ranks."""
    suitable = judg.suitable_ids()
    if not suitable:
        return None
    hits = 0
    precisions = []
    for rank, pid in enumerate(ranking, start=1):
        if pid in suitable:
            hits += 1
            precisions.append(hits / rank)
    if not precisions:
        return 0.0
    return sum(precisions) / len(precisions)


def p_at_1(ranking, judg: QueryJudgments):
    """1 if the top-ranked item is labeled suitable, else 0; None if the
    query has no suitable judged candidate."""
    if not judg.suitable_ids():
        return None
    if not ranking:
        return 0
    return 1 if judg.labels.get(ranking[0], False) else 0


@dataclass
class EvalReport:
    map_score: float
    p_at_1: float
    per_query_ap: dict            # query_id -> AP (non-skipped only)
    per_query_p1: dict
    skipped_queries: int
    fold_of_query: dict = field(default_factory=dict)


def aggregate(per_query_ap: dict, per_query_p1: dict, skipped: int,
              fold_of_query=None) -> EvalReport:
    n = len(per_query_ap)
    map_score = sum(per_query_ap.values()) / n if n else 0.0
    p1 = sum(per_query_p1.values()) / n if n else 0.0
    return EvalReport(map_score=map_score, p_at_1=p1,
                      per_query_ap=dict(per_query_ap),
                      per_query_p1=dict(per_query_p1),
                      skipped_queries=skipped,
                      fold_of_query=dict(fold_of_query or {}))


def kfold_split(query_ids, k: int = 5, seed: int = 0):
    """k disjoint folds covering the ids; sizes differ by at most one."""
    import numpy as np

    ids = list(query_ids)
    if k < 1 or k > len(ids):
        raise ValueError(f"k={k} out of range for {len(ids)} queries")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(ids))
    shuffled = [ids[i] for i in order]
    base, extra = divmod(len(ids), k)
    folds, start = [], 0
    for i in range(k):
        size = base + (1 if i < extra else 0)
        folds.append(shuffled[start:start + size])
        start += size
    return folds


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta function (Lentz)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 300):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-15:
            break
    return h


def incomplete_beta(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b)."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                + a * math.log(x) + b * math.log(1.0 - x))
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_cdf(t: float, df: int) -> float:
    """CDF of Student's t with df degrees of freedom."""
    if df < 1:
        raise ValueError("df must be >= 1")
    x = df / (df + t * t)
    tail = 0.5 * incomplete_beta(df / 2.0, 0.5, x)
    return 1.0 - tail if t > 0 else tail


def paired_ttest(a, b):
    """Two-sided paired t-test; returns (t statistic, p-value)."""
    if len(a) != len(b) or len(a) < 2:
        raise ValueError("need two equal-length samples of size >= 2")
    n = len(a)
    diffs = [x - y for x, y in zip(a, b)]
    mean = sum(diffs) / n
    var = sum((d - mean) ** 2 for d in diffs) / (n - 1)
    if var == 0.0:
        raise ValueError("degenerate t-test: zero-variance differences")
    t = mean / math.sqrt(var / n)
    p = 2.0 * (1.0 - t_cdf(abs(t), n - 1))
    return t, min(max(p, 0.0), 1.0)
