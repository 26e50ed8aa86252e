"""Translation-based language model: IBM Model 1 training and pair scoring.

The word translation table T(w|t) is trained with EM on the pooled parallel
corpus {(post, comment)} U {(comment, post)}; scoring mixes document language
models with the translation models and a smoothed collection model:

    score(q) = sum_{w in q} log[(1-a) P_mx(w|(p,r)) + a P_C(w)]
    P_mx     = (1-b)[(1-g) P(w|p) + g sum_t T(w|t) P(t|p)]
             +    b [(1-g) P(w|r) + g sum_t T(w|t) P(t|r)]
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

from .corpus import PostCommentPair, Repository, ShortText, Vocabulary


@dataclass
class TranslationTable:
    """t-word -> {w-word: probability}; every row sums to 1."""

    rows: dict
    vocab_tag: str = ""
    min_freq: int = 0
    em_iters: int = 0
    loglik_trace: list = field(default_factory=list)  # not persisted

    def prob(self, w: str, t: str) -> float:
        row = self.rows.get(t)
        return row.get(w, 0.0) if row else 0.0

    def row(self, t: str) -> dict:
        return self.rows.get(t, {})


@dataclass(frozen=True)
class TransLMConfig:
    alpha: float = 0.8   # Jelinek-Mercer pull toward the collection model
    beta: float = 0.9    # post model vs response model interpolation
    gamma: float = 0.5   # unigram LM vs translation model interpolation

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")


DENSE_EM_VOCAB_LIMIT = 2000  # above this a dense table would not fit

NULL_TOKEN = "<NULL>"


def ibm1_em(sentence_pairs, em_iters: int, target_vocab=None,
            use_null: bool = False):
    """Plain IBM Model 1 EM over (source tokens, target tokens) pairs.

    Rows of the returned table are distributions over target words given a
    source word. With use_null a NULL source token joins every sentence so
    target words can align to nothing (off by default). Also returns the
    per-iteration log-likelihood trace (computed before each M-step's
    parameters change, i.e. trace[i] is the data log-likelihood under the
    iteration-i input parameters).
    """
    if em_iters < 1:
        raise ValueError("em_iters must be >= 1")
    if use_null:
        sentence_pairs = [([NULL_TOKEN] + list(src), tgt)
                          for src, tgt in sentence_pairs]
    if target_vocab is None:
        target_vocab = set()
        for _, tgt in sentence_pairs:
            target_vocab.update(tgt)
    if not target_vocab:
        raise ValueError("empty target vocabulary")
    src_vocab = {w for src, _ in sentence_pairs for w in src}
    if max(len(src_vocab), len(target_vocab)) <= DENSE_EM_VOCAB_LIMIT:
        return _ibm1_em_dense(sentence_pairs, em_iters, src_vocab, target_vocab)
    uniform = 1.0 / len(target_vocab)
    table = {}

    def t_prob(w, t):
        row = table.get(t)
        if row is None:
            return uniform
        return row.get(w, 0.0)

    trace = []
    for _ in range(em_iters):
        ll = 0.0
        counts = {}
        totals = Counter()
        for src, tgt in sentence_pairs:
            if not src or not tgt:
                continue
            for w in tgt:
                denom = sum(t_prob(w, t) for t in src)
                ll += math.log(denom / len(src)) if denom > 0 else float("-inf")
                if denom == 0.0:
                    continue
                for t in src:
                    c = t_prob(w, t) / denom
                    counts.setdefault(t, Counter())[w] += c
                    totals[t] += c
        trace.append(ll)
        table = {t: {w: c / totals[t] for w, c in row.items()}
                 for t, row in counts.items()}
    return table, trace


def _ibm1_em_dense(sentence_pairs, em_iters, src_vocab, target_vocab):
    """Integer-encoded EM with a dense table; same math as the dict path."""
    import numpy as np

    src_words = sorted(src_vocab)
    tgt_words = sorted(target_vocab)
    src_id = {w: i for i, w in enumerate(src_words)}
    tgt_id = {w: i for i, w in enumerate(tgt_words)}
    encoded = []
    for src, tgt in sentence_pairs:
        if src and tgt:
            encoded.append((np.array([src_id[w] for w in src]),
                            np.array([tgt_id[w] for w in tgt])))
    t = np.full((len(src_words), len(tgt_words)), 1.0 / len(tgt_words))
    trace = []
    for _ in range(em_iters):
        counts = np.zeros_like(t)
        ll = 0.0
        for src, tgt in encoded:
            sub = t[np.ix_(src, tgt)]
            denom = sub.sum(axis=0)
            ll += float(np.log(denom / len(src)).sum())
            np.add.at(counts, np.ix_(src, tgt), sub / denom)
        trace.append(ll)
        totals = counts.sum(axis=1, keepdims=True)
        t = np.divide(counts, totals, out=np.zeros_like(counts),
                      where=totals > 0)
    table = {}
    for i, w_src in enumerate(src_words):
        row = {tgt_words[j]: float(t[i, j]) for j in np.nonzero(t[i])[0]}
        if row:
            table[w_src] = row
    return table, trace


def corpus_loglik(table: dict, sentence_pairs) -> float:
    """IBM Model 1 log-likelihood of the pairs under a trained table."""
    ll = 0.0
    for src, tgt in sentence_pairs:
        if not src or not tgt:
            continue
        for w in tgt:
            denom = sum(table.get(t, {}).get(w, 0.0) for t in src)
            ll += math.log(denom / len(src)) if denom > 0 else float("-inf")
    return ll


def pooled_pairs(repo: Repository, min_freq: int):
    """The pooled parallel corpus with low-frequency words removed.

    Frequencies are counted over the unpooled per-pair corpus (each pair's
    post and comment tokens once).
    """
    freq = Counter()
    for pair in repo:
        freq.update(t.surface for t in pair.post.tokens())
        freq.update(t.surface for t in pair.comment.tokens())
    keep = {w for w, c in freq.items() if c >= min_freq}

    def filt(text: ShortText):
        return [t.surface for t in text.tokens() if t.surface in keep]

    pooled = []
    for pair in repo:
        p, r = filt(pair.post), filt(pair.comment)
        if p and r:
            pooled.append((p, r))
    for pair in repo:
        p, r = filt(pair.post), filt(pair.comment)
        if p and r:
            pooled.append((r, p))
    return pooled, keep


def train_ibm1(repo: Repository, em_iters: int = 5, min_freq: int = 10,
               vocab_tag: str = "", use_null: bool = False) -> TranslationTable:
    """Train T(w|t) on the pooled corpus after frequency filtering."""
    pairs, keep = pooled_pairs(repo, min_freq)
    if not pairs or not keep:
        raise ValueError("vocabulary emptied by frequency filter")
    table, trace = ibm1_em(pairs, em_iters, target_vocab=keep,
                           use_null=use_null)
    return TranslationTable(rows=table, vocab_tag=vocab_tag, min_freq=min_freq,
                            em_iters=em_iters, loglik_trace=trace)


class CollectionLM:
    """Add-one smoothed unigram model of the whole collection."""

    def __init__(self, counts: Counter, total: int, vocab_size: int):
        self.counts = counts
        self.total = int(total)
        self.vocab_size = int(vocab_size)

    @classmethod
    def from_repo(cls, repo: Repository, vocab: Vocabulary) -> "CollectionLM":
        counts = Counter()
        for doc in repo.documents():
            counts.update(t.surface for t in doc.tokens())
        return cls(counts, sum(counts.values()), len(vocab))

    def prob(self, w: str) -> float:
        return (self.counts.get(w, 0) + 1) / (self.total + self.vocab_size)


def unigram_prob(x, w: str) -> float:
    """Maximum-likelihood P(w|text), or the smoothed collection probability."""
    if isinstance(x, CollectionLM):
        return x.prob(w)
    counts = x.counts()
    n = sum(counts.values())
    return counts.get(w, 0) / n if n else 0.0


def trans_prob(tbl: TranslationTable, text: ShortText, w: str) -> float:
    """sum_{t in text} T(w|t) P_ml(t|text); unknown t contributes 0."""
    counts = text.counts()
    n = sum(counts.values())
    if n == 0:
        return 0.0
    return sum(tbl.prob(w, t) * c / n for t, c in counts.items())


@dataclass
class TransLMScore:
    logprob: float
    scored_words: int
    skipped_words: int  # query words outside the repository vocabulary


def translm_logscore(tbl: TranslationTable, cfg: TransLMConfig, q: ShortText,
                     pair: PostCommentPair, collection: CollectionLM,
                     vocab: Vocabulary) -> TransLMScore:
    """Log TransLM probability of the query given a post-comment pair.

    Out-of-vocabulary query words are skipped and counted; every scored word
    contributes a strictly positive probability as long as alpha > 0 because
    the collection model is add-one smoothed.
    """
    a, b, g = cfg.alpha, cfg.beta, cfg.gamma
    p_counts, r_counts = pair.post.counts(), pair.comment.counts()
    p_len, r_len = sum(p_counts.values()), sum(r_counts.values())

    def side_prob(w, counts, n):
        p_ml = counts.get(w, 0) / n if n else 0.0
        if g == 0.0:
            return p_ml
        p_tr = sum(tbl.prob(w, t) * c / n for t, c in counts.items()) if n else 0.0
        return (1 - g) * p_ml + g * p_tr

    total, scored, skipped = 0.0, 0, 0
    for token in q.tokens():
        w = token.surface
        if w not in vocab:
            skipped += 1
            continue
        p_mx = (1 - b) * side_prob(w, p_counts, p_len) \
            + b * side_prob(w, r_counts, r_len)
        prob = (1 - a) * p_mx + a * collection.prob(w)
        total += math.log(prob) if prob > 0 else float("-inf")
        scored += 1
    return TransLMScore(total, scored, skipped)


def save_translation_table(tbl: TranslationTable, path) -> None:
    """Text lines t<TAB>w<TAB>prob sorted by (t, prob desc, w), after a header."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# stc translation table v1\n")
        fh.write(f"# vocab_tag\t{tbl.vocab_tag}\n")
        fh.write(f"# min_freq\t{tbl.min_freq}\n")
        fh.write(f"# em_iters\t{tbl.em_iters}\n")
        for t in sorted(tbl.rows):
            row = tbl.rows[t]
            for w in sorted(row, key=lambda w: (-row[w], w)):
                fh.write(f"{t}\t{w}\t{row[w]!r}\n")


def load_translation_table(path) -> TranslationTable:
    rows = {}
    meta = {"vocab_tag": "", "min_freq": 0, "em_iters": 0}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].strip().split("\t")
                if len(parts) == 2 and parts[0] in meta:
                    meta[parts[0]] = parts[1]
                continue
            t, w, prob = line.split("\t")
            rows.setdefault(t, {})[w] = float(prob)
    return TranslationTable(rows=rows, vocab_tag=str(meta["vocab_tag"]),
                            min_freq=int(meta["min_freq"]),
                            em_iters=int(meta["em_iters"]))
