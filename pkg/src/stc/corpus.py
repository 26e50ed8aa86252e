"""Post-comment corpus: parsing, cleaning, vocabulary and TF-IDF vectors.

The corpus file is UTF-8, one pair per line, with tab-separated fields
``pair_id  post_id  post_text  comment_text``. Inside a text, tokens are
space-separated; a token is either a bare surface or ``surface|POS|NE``
(POS one of NOUN/VERB/ADJ/OTHER, NE 0 or 1); the literal token ``||``
separates sentences. Tokenization, POS tagging and NER happen upstream.
"""

from __future__ import annotations

import hashlib
import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

POS_TAGS = ("NOUN", "VERB", "ADJ", "OTHER")
SENTENCE_SEP = "||"


class CorpusError(ValueError):
    """Unrecoverable corpus-level problem (e.g. duplicate pair_id)."""


@dataclass(frozen=True)
class Token:
    surface: str
    pos: str = "OTHER"
    is_ne: bool = False

    def __post_init__(self):
        if not self.surface:
            raise ValueError("token surface must be non-empty")
        if self.pos not in POS_TAGS:
            raise ValueError(f"unknown pos tag {self.pos!r}")


@dataclass(frozen=True)
class ShortText:
    """A tokenized short text: ordered sentences of tokens.

    ``raw_char_len`` is the character count of the untokenized surface; when
    built from tokenized input it is the length of the concatenated surfaces.
    """

    sentences: tuple[tuple[Token, ...], ...]
    raw_char_len: int

    def __post_init__(self):
        if not self.sentences or any(not s for s in self.sentences):
            raise ValueError("ShortText needs at least one non-empty sentence")
        if self.raw_char_len < self.num_tokens:
            raise ValueError("raw_char_len smaller than token count")

    @property
    def num_tokens(self) -> int:
        return sum(len(s) for s in self.sentences)

    def tokens(self):
        for sent in self.sentences:
            yield from sent

    @property
    def surface(self) -> str:
        """Concatenated token surfaces (no separators)."""
        return "".join(t.surface for t in self.tokens())

    def display(self) -> str:
        """Human-readable space-joined form."""
        return " ".join(t.surface for t in self.tokens())

    def counts(self) -> Counter:
        """Term frequency over token surfaces."""
        return Counter(t.surface for t in self.tokens())

    def types(self) -> set:
        return {t.surface for t in self.tokens()}


def make_short_text(sentences) -> ShortText:
    """Build a ShortText, deriving raw_char_len from the token surfaces."""
    sents = tuple(tuple(s) for s in sentences if s)
    n_chars = sum(len(t.surface) for sent in sents for t in sent)
    return ShortText(sentences=sents, raw_char_len=n_chars)


def parse_short_text(text: str) -> ShortText:
    """Parse the corpus text syntax (annotated tokens, ``||`` sentence marks).

    Raises ValueError on malformed token annotations or an effectively empty
    text.
    """
    sentences, current = [], []
    for raw in text.split():
        if raw == SENTENCE_SEP:
            if current:
                sentences.append(current)
                current = []
            continue
        parts = raw.split("|")
        if len(parts) == 1:
            current.append(Token(parts[0]))
        elif len(parts) == 3:
            surface, pos, ne = parts
            if pos not in POS_TAGS:
                raise ValueError(f"bad pos tag {pos!r} in token {raw!r}")
            if ne not in ("0", "1"):
                raise ValueError(f"bad NE flag {ne!r} in token {raw!r}")
            current.append(Token(surface, pos, ne == "1"))
        else:
            raise ValueError(f"bad token annotation {raw!r}")
    if current:
        sentences.append(current)
    if not sentences:
        raise ValueError("empty text")
    return make_short_text(sentences)


def format_short_text(text: ShortText) -> str:
    """Inverse of parse_short_text (always writes full annotations)."""
    parts = []
    for i, sent in enumerate(text.sentences):
        if i:
            parts.append(SENTENCE_SEP)
        for t in sent:
            parts.append(f"{t.surface}|{t.pos}|{1 if t.is_ne else 0}")
    return " ".join(parts)


@dataclass(frozen=True)
class PostCommentPair:
    pair_id: int
    post_id: int
    post: ShortText
    comment: ShortText
    comment_rank: int  # 1-based position of this comment under its post

    def __post_init__(self):
        if self.comment_rank < 1:
            raise ValueError("comment_rank must be >= 1")


class Repository:
    """Immutable collection of post-comment pairs."""

    def __init__(self, pairs):
        self._pairs = list(pairs)
        self._by_id = {}
        for p in self._pairs:
            if p.pair_id in self._by_id:
                raise CorpusError(f"duplicate pair_id {p.pair_id}")
            self._by_id[p.pair_id] = p

    def __len__(self):
        return len(self._pairs)

    def __iter__(self):
        return iter(self._pairs)

    def __getitem__(self, pair_id: int) -> PostCommentPair:
        return self._by_id[pair_id]

    def __contains__(self, pair_id: int) -> bool:
        return pair_id in self._by_id

    @property
    def pair_ids(self) -> list:
        return [p.pair_id for p in self._pairs]

    def documents(self):
        """The df/collection document universe: distinct posts, all comments."""
        seen_posts = set()
        for p in self._pairs:
            if p.post_id not in seen_posts:
                seen_posts.add(p.post_id)
                yield p.post
        for p in self._pairs:
            yield p.comment

    def content_tag(self) -> str:
        """Deterministic hash of the corpus content; the shared version tag.

        Covers exactly what the corpus TSV format carries (comment_rank is
        derived at parse time and cleaning can leave gaps the format cannot
        represent, so it stays out of the hash)."""
        h = hashlib.sha256()
        for p in self._pairs:
            line = f"{p.pair_id}\t{p.post_id}\t" \
                   f"{format_short_text(p.post)}\t{format_short_text(p.comment)}\n"
            h.update(line.encode("utf-8"))
        return h.hexdigest()[:16]


@dataclass
class Rejection:
    line_no: int  # 1-based
    reason: str


@dataclass
class ParseResult:
    repository: Repository
    rejections: list


def parse_corpus(lines) -> ParseResult:
    """Parse corpus TSV lines into a Repository, reporting rejected lines.

    comment_rank is assigned by order of appearance within each post_id.
    Duplicate pair_ids are a hard error; everything else malformed becomes a
    Rejection.
    """
    pairs, rejections = [], []
    seen_ids = set()
    rank_counter = Counter()
    for line_no, line in enumerate(lines, start=1):
        line = line.rstrip("\n")
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 4:
            rejections.append(Rejection(line_no, "field count"))
            continue
        try:
            pair_id, post_id = int(fields[0]), int(fields[1])
        except ValueError:
            rejections.append(Rejection(line_no, "bad id field"))
            continue
        if pair_id in seen_ids:
            raise CorpusError(f"duplicate pair_id {pair_id} at line {line_no}")
        try:
            post = parse_short_text(fields[2])
            comment = parse_short_text(fields[3])
        except ValueError as exc:
            rejections.append(Rejection(line_no, str(exc)))
            continue
        seen_ids.add(pair_id)
        rank_counter[post_id] += 1
        pairs.append(PostCommentPair(pair_id, post_id, post, comment,
                                     comment_rank=rank_counter[post_id]))
    return ParseResult(Repository(pairs), rejections)


def write_corpus(repo: Repository, fh) -> None:
    for p in repo:
        fh.write(f"{p.pair_id}\t{p.post_id}\t"
                 f"{format_short_text(p.post)}\t{format_short_text(p.comment)}\n")


@dataclass(frozen=True)
class CleaningConfig:
    min_post_chars: int = 10
    min_comment_chars: int = 5
    max_comments_per_post: int = 100
    ad_min_chars: int = 30
    ad_min_repeats: int = 3  # dropped when seen under >= this many distinct posts


@dataclass
class CleaningReport:
    dropped_short_post: int = 0
    dropped_short_comment: int = 0
    dropped_comment_rank: int = 0
    dropped_ad: int = 0

    @property
    def total_dropped(self) -> int:
        return (self.dropped_short_post + self.dropped_short_comment
                + self.dropped_comment_rank + self.dropped_ad)


def clean_pairs(repo: Repository, rules: CleaningConfig = CleaningConfig()):
    """Apply the four cleaning rules; returns (clean Repository, report).

    Rules, in order: minimum post length, minimum comment length, first-N
    comments per post, and the advertisement rule (a comment of at least
    ad_min_chars characters appearing under ad_min_repeats or more distinct
    posts is dropped everywhere). comment_rank is never recomputed, which
    makes cleaning idempotent.
    """
    report = CleaningReport()
    survivors = []
    for p in repo:
        if p.post.raw_char_len < rules.min_post_chars:
            report.dropped_short_post += 1
        elif p.comment.raw_char_len < rules.min_comment_chars:
            report.dropped_short_comment += 1
        elif p.comment_rank > rules.max_comments_per_post:
            report.dropped_comment_rank += 1
        else:
            survivors.append(p)

    posts_per_comment = {}
    for p in survivors:
        if p.comment.raw_char_len >= rules.ad_min_chars:
            posts_per_comment.setdefault(p.comment.surface, set()).add(p.post_id)
    ads = {s for s, posts in posts_per_comment.items()
           if len(posts) >= rules.ad_min_repeats}
    kept = []
    for p in survivors:
        if p.comment.raw_char_len >= rules.ad_min_chars and p.comment.surface in ads:
            report.dropped_ad += 1
        else:
            kept.append(p)
    return Repository(kept), report


class Vocabulary:
    """Word ids and document frequencies over a repository.

    Ids are dense in [0, len(vocab)) and assigned in sorted word order, so a
    fixed repository always yields the same vocabulary. idf uses the smooth
    formula ln((N+1)/(df+1)) + 1, which is finite and positive even at df=0.
    """

    def __init__(self, words, dfs, n_docs: int, tag: str):
        self._words = list(words)           # id -> word
        self._ids = {w: i for i, w in enumerate(self._words)}
        self._df = np.asarray(dfs, dtype=np.int64)
        self.n_docs = int(n_docs)
        self.tag = tag
        if len(self._df) != len(self._words):
            raise ValueError("words/dfs length mismatch")
        if len(self._words) and not (1 <= self._df.min() and self._df.max() <= self.n_docs):
            raise ValueError("document frequencies out of [1, N_docs]")

    def __len__(self):
        return len(self._words)

    def __contains__(self, word: str) -> bool:
        return word in self._ids

    def id(self, word: str):
        return self._ids.get(word)

    def word(self, word_id: int) -> str:
        return self._words[word_id]

    def df(self, word: str) -> int:
        i = self._ids.get(word)
        return int(self._df[i]) if i is not None else 0

    def idf(self, word: str) -> float:
        return self.idf_by_id(self._ids.get(word))

    def idf_by_id(self, word_id) -> float:
        df = int(self._df[word_id]) if word_id is not None else 0
        return math.log((self.n_docs + 1) / (df + 1)) + 1.0

    @property
    def idf_array(self) -> np.ndarray:
        return np.log((self.n_docs + 1) / (self._df + 1.0)) + 1.0

    def items(self):
        """(word, word_id, df) triples in id order."""
        for i, w in enumerate(self._words):
            yield w, i, int(self._df[i])


def build_vocabulary(repo: Repository) -> Vocabulary:
    """Count document frequencies over distinct posts plus all comments."""
    if len(repo) == 0:
        raise CorpusError("empty repository")
    df = Counter()
    n_docs = 0
    for doc in repo.documents():
        n_docs += 1
        df.update(doc.types())
    words = sorted(df)
    return Vocabulary(words, [df[w] for w in words], n_docs, repo.content_tag())


@dataclass(frozen=True)
class SparseVector:
    """Sorted sparse vector over vocabulary word ids; no zeros stored."""

    ids: np.ndarray       # int64, strictly increasing
    weights: np.ndarray   # float64, finite, nonzero

    def __post_init__(self):
        ids = np.asarray(self.ids, dtype=np.int64)
        weights = np.asarray(self.weights, dtype=np.float64)
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "weights", weights)
        if ids.shape != weights.shape or ids.ndim != 1:
            raise ValueError("ids/weights must be 1-d and aligned")
        if len(ids) > 1 and not np.all(np.diff(ids) > 0):
            raise ValueError("ids must be strictly increasing")
        if len(weights) and (not np.all(np.isfinite(weights)) or np.any(weights == 0.0)):
            raise ValueError("weights must be finite and nonzero")

    def __len__(self):
        return len(self.ids)

    @property
    def norm(self) -> float:
        return float(np.sqrt(np.dot(self.weights, self.weights)))

    def dot(self, other: "SparseVector") -> float:
        ia, ib, total = 0, 0, 0.0
        a_ids, b_ids = self.ids, other.ids
        a_w, b_w = self.weights, other.weights
        while ia < len(a_ids) and ib < len(b_ids):
            if a_ids[ia] == b_ids[ib]:
                total += a_w[ia] * b_w[ib]
                ia += 1
                ib += 1
            elif a_ids[ia] < b_ids[ib]:
                ia += 1
            else:
                ib += 1
        return float(total)

    def to_dict(self) -> dict:
        return {int(i): float(w) for i, w in zip(self.ids, self.weights)}

    @staticmethod
    def from_dict(entries: dict) -> "SparseVector":
        ids = sorted(entries)
        return SparseVector(np.array(ids, dtype=np.int64),
                            np.array([entries[i] for i in ids], dtype=np.float64))


EMPTY_VECTOR = SparseVector(np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float64))


def cosine(a: SparseVector, b: SparseVector) -> float:
    """Cosine similarity; 0.0 when either vector is empty."""
    if len(a) == 0 or len(b) == 0:
        return 0.0
    return a.dot(b) / (a.norm * b.norm)


def tfidf_vector(text: ShortText, vocab: Vocabulary) -> SparseVector:
    """TF-IDF vector of a text; out-of-vocabulary words are omitted."""
    entries = {}
    for word, tf in text.counts().items():
        wid = vocab.id(word)
        if wid is not None:
            entries[wid] = tf * vocab.idf_by_id(wid)
    return SparseVector.from_dict(entries)


def weighted_vector(text: ShortText, vocab: Vocabulary, weight_fn) -> SparseVector:
    """Sparse vector with per-word weights from weight_fn(word); OOV omitted.

    Zero weights are dropped to preserve the no-zero-entries invariant.
    """
    entries = {}
    for word in sorted(text.types()):
        wid = vocab.id(word)
        if wid is None:
            continue
        w = float(weight_fn(word))
        if w != 0.0:
            entries[wid] = w
    return SparseVector.from_dict(entries)
