"""Inverted index over posts and comments; Stage-I candidate retrieval."""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .corpus import Repository, ShortText, SparseVector, Vocabulary, tfidf_vector

INDEX_MAGIC = b"STCIDX01"

POST_SIDE = "post"
COMMENT_SIDE = "comment"

# Candidate sources
Q2R = "Q2R"
Q2P = "Q2P"
LATENT = "LATENT"


class IndexFormatError(ValueError):
    """Raised when a persisted index file is unreadable."""


class InvertedIndex:
    """Postings over both sides of every pair plus per-document TF-IDF norms.

    postings maps word_id -> list of (pair_id, tf), sorted by pair_id; the
    same post is indexed once per pair it appears in, under that pair's id.
    """

    def __init__(self, repo: Repository, vocab: Vocabulary):
        self.repo = repo
        self.vocab = vocab
        self.postings = {POST_SIDE: {}, COMMENT_SIDE: {}}
        self.norms = {POST_SIDE: {}, COMMENT_SIDE: {}}
        self._vectors = {POST_SIDE: {}, COMMENT_SIDE: {}}

    def _index_text(self, side: str, pair_id: int, text: ShortText) -> None:
        vec = tfidf_vector(text, self.vocab)
        self.norms[side][pair_id] = vec.norm
        self._vectors[side][pair_id] = vec
        for wid, tf in _tf_by_id(text, self.vocab).items():
            self.postings[side].setdefault(wid, []).append((pair_id, tf))

    def _sort_postings(self) -> None:
        for side in self.postings:
            for plist in self.postings[side].values():
                plist.sort()

    def doc_vector(self, side: str, pair_id: int) -> SparseVector:
        """Cached TF-IDF vector of one side of a pair."""
        vec = self._vectors[side].get(pair_id)
        if vec is None:
            pair = self.repo[pair_id]
            text = pair.post if side == POST_SIDE else pair.comment
            vec = tfidf_vector(text, self.vocab)
            self._vectors[side][pair_id] = vec
        return vec


def _tf_by_id(text: ShortText, vocab: Vocabulary) -> dict:
    out = {}
    for word, tf in text.counts().items():
        wid = vocab.id(word)
        if wid is not None:
            out[wid] = tf
    return out


def build_index(repo: Repository, vocab: Vocabulary) -> InvertedIndex:
    index = InvertedIndex(repo, vocab)
    for pair in repo:
        index._index_text(POST_SIDE, pair.pair_id, pair.post)
        index._index_text(COMMENT_SIDE, pair.pair_id, pair.comment)
    index._sort_postings()
    return index


def retrieve_cosine(index: InvertedIndex, q: SparseVector, side: str, k: int):
    """Exact top-k by cosine against one side; ties broken by ascending pair_id."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if len(q) == 0:
        return []
    q_norm = q.norm
    acc = {}
    for wid, qw in zip(q.ids, q.weights):
        plist = index.postings[side].get(int(wid))
        if plist is None:
            continue
        idf = index.vocab.idf_by_id(int(wid))
        for pair_id, tf in plist:
            acc[pair_id] = acc.get(pair_id, 0.0) + qw * tf * idf
    norms = index.norms[side]
    scored = [(pid, dot / (q_norm * norms[pid])) for pid, dot in acc.items()
              if dot != 0.0]
    scored.sort(key=lambda item: (-item[1], item[0]))
    return scored[:k]


@dataclass(frozen=True)
class Stage1Config:
    per_model_k: int = 10
    latent_pool: int = 200
    exhaustive_latent: bool = False


@dataclass
class CandidateSet:
    """Stage-I output: per-source scored candidates plus a merged view."""

    query_id: int
    entries: list = field(default_factory=list)  # (pair_id, source, score)
    latent_missing: bool = False

    @property
    def merged_ids(self) -> list:
        """Deduplicated pair ids, ascending."""
        return sorted({pid for pid, _, _ in self.entries})

    def by_source(self, source: str) -> list:
        return [(pid, s) for pid, src, s in self.entries if src == source]


def stage1_candidates(index: InvertedIndex, latent, q: ShortText,
                      cfg: Stage1Config = Stage1Config(),
                      query_id: int = -1) -> CandidateSet:
    """Union of top-k by Q2R cosine, Q2P cosine and latent match.

    Latent scores are computed over a lexical candidate pool of size
    cfg.latent_pool (union of both cosine retrievals) unless
    cfg.exhaustive_latent is set, in which case the whole repository is
    scored. A missing latent model yields a two-source set, flagged.
    """
    from .latent import query_projection, response_score  # avoids an import cycle

    q_vec = tfidf_vector(q, index.vocab)
    result = CandidateSet(query_id=query_id)
    k = cfg.per_model_k
    for pid, score in retrieve_cosine(index, q_vec, COMMENT_SIDE, k):
        result.entries.append((pid, Q2R, score))
    for pid, score in retrieve_cosine(index, q_vec, POST_SIDE, k):
        result.entries.append((pid, Q2P, score))

    if latent is None:
        result.latent_missing = True
        return result
    if len(q_vec) == 0:
        # every latent score would be 0; nothing informative to retrieve
        return result

    if cfg.exhaustive_latent:
        pool = list(index.repo.pair_ids)
    else:
        pool = set()
        for pid, _ in retrieve_cosine(index, q_vec, COMMENT_SIDE, cfg.latent_pool):
            pool.add(pid)
        for pid, _ in retrieve_cosine(index, q_vec, POST_SIDE, cfg.latent_pool):
            pool.add(pid)
        pool = sorted(pool)
    u = query_projection(latent, q_vec)
    scored = [(pid, response_score(latent, u, index.doc_vector(COMMENT_SIDE, pid)))
              for pid in pool]
    scored.sort(key=lambda item: (-item[1], item[0]))
    for pid, score in scored[:k]:
        result.entries.append((pid, LATENT, score))
    return result


def save_index(index: InvertedIndex, path) -> None:
    """Binary index file: magic, version tag, postings (delta pair_ids, u32 tf),
    per-document norms as little-endian float64."""
    pair_ids = sorted(index.repo.pair_ids)
    if pair_ids and (pair_ids[0] < 0 or pair_ids[-1] > 0xFFFFFFFF):
        raise IndexFormatError("pair_ids outside the 32-bit delta-encodable range")
    with open(path, "wb") as fh:
        fh.write(INDEX_MAGIC)
        tag = index.vocab.tag.encode("utf-8")
        fh.write(struct.pack("<I", len(tag)))
        fh.write(tag)
        fh.write(struct.pack("<QQ", len(index.vocab), len(pair_ids)))
        np.asarray(pair_ids, dtype="<i8").tofile(fh)
        for side in (POST_SIDE, COMMENT_SIDE):
            for wid in range(len(index.vocab)):
                plist = index.postings[side].get(wid, [])
                fh.write(struct.pack("<I", len(plist)))
                prev = 0
                for pid, tf in plist:
                    fh.write(struct.pack("<II", pid - prev, tf))
                    prev = pid
            norms = np.array([index.norms[side][pid] for pid in pair_ids],
                             dtype="<f8")
            norms.tofile(fh)


def load_index(path, repo: Repository, vocab: Vocabulary) -> InvertedIndex:
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != INDEX_MAGIC:
            raise IndexFormatError("bad index header")
        (tag_len,) = struct.unpack("<I", fh.read(4))
        tag = fh.read(tag_len).decode("utf-8")
        if tag != vocab.tag:
            raise IndexFormatError(
                f"index tag {tag!r} does not match vocabulary tag {vocab.tag!r}")
        vocab_size, n_pairs = struct.unpack("<QQ", fh.read(16))
        if vocab_size != len(vocab):
            raise IndexFormatError("vocabulary size mismatch")
        pair_ids = np.fromfile(fh, dtype="<i8", count=n_pairs).tolist()
        index = InvertedIndex(repo, vocab)
        for side in (POST_SIDE, COMMENT_SIDE):
            for wid in range(vocab_size):
                (count,) = struct.unpack("<I", fh.read(4))
                if count:
                    plist = []
                    prev = 0
                    for _ in range(count):
                        delta, tf = struct.unpack("<II", fh.read(8))
                        prev += delta
                        plist.append((prev, tf))
                    index.postings[side][wid] = plist
            norms = np.fromfile(fh, dtype="<f8", count=n_pairs)
            index.norms[side] = {pid: float(norms[i]) for i, pid in enumerate(pair_ids)}
    return index
