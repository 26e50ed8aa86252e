"""Three-stage pipeline orchestration, model registry and persistence.

A model directory holds vocab.txt, index.bin, latent.bin, trans.tsv,
deepmatch.bin, topicword.txt, ranker.txt, corpus.tsv and manifest.txt
(versions and sha256 checksums). All artifacts carry the corpus version
tag; loading refuses to mix tags.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .corpus import (Repository, ShortText, Vocabulary, parse_corpus,
                     tfidf_vector, write_corpus)
from .deepmatch import DeepMatchModel, TopicPatch
from .features import FULL_SCHEMA, FeatureSchema, assemble_features
from .index import (InvertedIndex, Stage1Config, load_index, save_index,
                    stage1_candidates)
from .latent import LatentModel
from .ranker import RankingModel, load_ranker, rank_score, save_ranker
from .topicword import TopicWordModel, load_topicword, save_topicword
from .translm import (CollectionLM, TransLMConfig, TranslationTable,
                      load_translation_table, save_translation_table)


class ModelLoadError(ValueError):
    """A model directory is incomplete, corrupt or version-mismatched."""


@dataclass
class ModelRegistry:
    repo: Repository
    vocab: Vocabulary
    index: InvertedIndex
    ranker: RankingModel
    schema: FeatureSchema
    latent: LatentModel | None = None
    translation: TranslationTable | None = None
    translm_cfg: TransLMConfig = field(default_factory=TransLMConfig)
    collection_lm: CollectionLM | None = None
    deepmatch: DeepMatchModel | None = None
    topicword: TopicWordModel | None = None
    stage1: Stage1Config = field(default_factory=Stage1Config)

    def __post_init__(self):
        if self.translation is not None and self.collection_lm is None:
            self.collection_lm = CollectionLM.from_repo(self.repo, self.vocab)
        self._check_tags()
        self._check_schema()

    def _check_tags(self):
        tags = {"vocab": self.vocab.tag}
        for name in ("latent", "translation", "deepmatch", "topicword"):
            model = getattr(self, name)
            if model is not None and getattr(model, "vocab_tag", ""):
                tags[name] = model.vocab_tag
        distinct = set(tags.values())
        if len(distinct) > 1:
            detail = ", ".join(f"{k}={v}" for k, v in sorted(tags.items()))
            raise ModelLoadError(f"version-tag mismatch across artifacts: {detail}")

    def _check_schema(self):
        """Every feature the ranking schema names must be computable here."""
        if self.ranker is None:
            return
        needs = {"latent_match": self.latent, "translm_logprob": self.translation,
                 "deepmatch_score": self.deepmatch,
                 "topicword_q2r": self.topicword, "topicword_q2p": self.topicword}
        missing = sorted(n for n in self.ranker.schema.names
                         if n in needs and needs[n] is None)
        if missing:
            raise ModelLoadError(
                f"ranking schema requires models that are absent: {missing}")


@dataclass
class RankedResponse:
    rank: int
    pair_id: int
    response: str
    post: str
    score: float
    features_raw: dict
    features_std: dict


@dataclass
class RespondResult:
    responses: list
    diagnostics: list = field(default_factory=list)


def respond(reg: ModelRegistry, q: ShortText, top_k: int = 10) -> RespondResult:
    """Stage I retrieval, Stage II features, Stage III ranking."""
    candidates = stage1_candidates(reg.index, reg.latent, q, reg.stage1)
    result = RespondResult(responses=[])
    if candidates.latent_missing:
        result.diagnostics.append("latent model absent: candidates from "
                                  "Q2R/Q2P retrieval only")
    merged = candidates.merged_ids
    if not merged:
        result.diagnostics.append("empty candidate set: query shares no "
                                  "vocabulary with the repository")
        return result
    q_vec = tfidf_vector(q, reg.vocab)
    scored = []
    for pid in merged:
        pair = reg.repo[pid]
        fv = assemble_features(q, pair, reg, reg.schema, q_vec=q_vec)
        scored.append((rank_score(reg.ranker, fv), pid, fv))
    scored.sort(key=lambda item: (-item[0], item[1]))
    for rank, (score, pid, fv) in enumerate(scored[:top_k], start=1):
        pair = reg.repo[pid]
        std = reg.ranker.standardize(fv.values)
        result.responses.append(RankedResponse(
            rank=rank, pair_id=pid,
            response=pair.comment.display(), post=pair.post.display(),
            score=score,
            features_raw={n: float(v) for n, v in zip(fv.schema.names, fv.values)},
            features_std={n: float(v) for n, v in zip(fv.schema.names, std)},
        ))
    return result


# ---------------------------------------------------------------------------
# Persistence

VOCAB_FILE = "vocab.txt"
INDEX_FILE = "index.bin"
LATENT_FILE = "latent.bin"
TRANS_FILE = "trans.tsv"
DEEPMATCH_FILE = "deepmatch.bin"
TOPICWORD_FILE = "topicword.txt"
RANKER_FILE = "ranker.txt"
CORPUS_FILE = "corpus.tsv"
MANIFEST_FILE = "manifest.txt"

REQUIRED_FILES = (VOCAB_FILE, INDEX_FILE, RANKER_FILE, CORPUS_FILE)


def save_vocab(vocab: Vocabulary, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# stc vocabulary v1\n")
        fh.write(f"# tag\t{vocab.tag}\n")
        fh.write(f"# n_docs\t{vocab.n_docs}\n")
        for word, wid, df in vocab.items():
            fh.write(f"{word}\t{wid}\t{df}\n")


def load_vocab(path) -> Vocabulary:
    words, dfs = [], []
    tag, n_docs = "", 0
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].strip().split("\t")
                if len(parts) == 2 and parts[0] == "tag":
                    tag = parts[1]
                elif len(parts) == 2 and parts[0] == "n_docs":
                    n_docs = int(parts[1])
                continue
            word, wid, df = line.split("\t")
            if int(wid) != len(words):
                raise ModelLoadError("vocabulary ids out of order")
            words.append(word)
            dfs.append(int(df))
    return Vocabulary(words, dfs, n_docs, tag)


def save_latent(m: LatentModel, path) -> None:
    header = (f"stc latent model v1\nd\t{m.d}\nmu1\t{m.mu1!r}\nmu2\t{m.mu2!r}\n"
              f"vocab_tag\t{m.vocab_tag}\nrows\t{m.l_q.shape[0]}\nend\n")
    with open(path, "wb") as fh:
        fh.write(header.encode("utf-8"))
        fh.write(np.ascontiguousarray(m.l_q, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(m.l_r, dtype="<f8").tobytes())


def load_latent(path) -> LatentModel:
    with open(path, "rb") as fh:
        meta = {}
        first = fh.readline().decode("utf-8").rstrip("\n")
        if first != "stc latent model v1":
            raise ModelLoadError("bad latent model header")
        while True:
            line = fh.readline().decode("utf-8").rstrip("\n")
            if line == "end":
                break
            if not line:
                raise ModelLoadError("truncated latent model header")
            key, value = line.split("\t")
            meta[key] = value
        d, rows = int(meta["d"]), int(meta["rows"])
        count = rows * d
        l_q = np.frombuffer(fh.read(count * 8), dtype="<f8").reshape(rows, d).copy()
        l_r = np.frombuffer(fh.read(count * 8), dtype="<f8").reshape(rows, d).copy()
    return LatentModel(l_q=l_q, l_r=l_r, d=d, mu1=float(meta["mu1"]),
                       mu2=float(meta["mu2"]), vocab_tag=meta["vocab_tag"])


def save_deepmatch(m: DeepMatchModel, path) -> None:
    lines = ["stc deepmatch model v1",
             f"vocab_tag\t{m.vocab_tag}",
             f"seed\t{m.seed}",
             f"k\t{m.n_patches}",
             f"layers\t{','.join(str(w.shape[0]) for w, _ in m.layers)}"]
    for p in m.patches:
        lines.append(f"patch\t{p.k}\t{' '.join(map(str, p.x_words))}\t"
                     f"{' '.join(map(str, p.y_words))}\t{m.lx[p.k].shape[1]}")
    lines.append("end")
    with open(path, "wb") as fh:
        fh.write(("\n".join(lines) + "\n").encode("utf-8"))
        for k in range(m.n_patches):
            fh.write(np.ascontiguousarray(m.lx[k], dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(m.ly[k], dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(m.bias, dtype="<f8").tobytes())
        for w, b in m.layers:
            fh.write(np.ascontiguousarray(w, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(b, dtype="<f8").tobytes())


def load_deepmatch(path) -> DeepMatchModel:
    with open(path, "rb") as fh:
        first = fh.readline().decode("utf-8").rstrip("\n")
        if first != "stc deepmatch model v1":
            raise ModelLoadError("bad deepmatch model header")
        meta, patches, dks = {}, [], []
        while True:
            line = fh.readline().decode("utf-8").rstrip("\n")
            if line == "end":
                break
            if not line:
                raise ModelLoadError("truncated deepmatch header")
            parts = line.split("\t")
            if parts[0] == "patch":
                _, k, xw, yw, dk = parts
                patches.append(TopicPatch(
                    x_words=tuple(int(v) for v in xw.split()),
                    y_words=tuple(int(v) for v in yw.split()),
                    k=int(k)))
                dks.append(int(dk))
            else:
                meta[parts[0]] = parts[1]
        k_count = int(meta["k"])
        layer_sizes = [int(s) for s in meta["layers"].split(",")]

        def read(shape):
            n = int(np.prod(shape))
            return np.frombuffer(fh.read(n * 8), dtype="<f8").reshape(shape).copy()

        lx, ly = [], []
        for i in range(k_count):
            lx.append(read((len(patches[i].x_words), dks[i])))
            ly.append(read((len(patches[i].y_words), dks[i])))
        bias = read((k_count,))
        layers = []
        in_size = k_count
        for size in layer_sizes:
            w = read((size, in_size))
            b = read((size,))
            layers.append((w, b))
            in_size = size
    return DeepMatchModel(patches, lx, ly, bias, layers,
                          seed=int(meta["seed"]), vocab_tag=meta["vocab_tag"])


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


ALL_FILES = (CORPUS_FILE, VOCAB_FILE, INDEX_FILE, LATENT_FILE, TRANS_FILE,
             DEEPMATCH_FILE, TOPICWORD_FILE, RANKER_FILE)


def update_manifest(directory, meta_updates: dict | None = None) -> None:
    """Rewrite manifest.txt from the artifact files present on disk,
    merging metadata key updates into whatever the manifest already holds."""
    path = os.path.join(directory, MANIFEST_FILE)
    meta = {}
    if os.path.exists(path):
        meta = {k: v for k, v in read_manifest(directory).items() if k != "files"}
    meta.setdefault("engine_version", __version__)
    meta.update(meta_updates or {})
    with open(path, "w", encoding="utf-8") as fh:
        for key in sorted(meta):
            fh.write(f"{key}\t{meta[key]}\n")
        for name in ALL_FILES:
            full = os.path.join(directory, name)
            if os.path.exists(full):
                fh.write(f"file\t{name}\t{_sha256(full)}\n")


def save_models(reg: ModelRegistry, directory) -> None:
    os.makedirs(directory, exist_ok=True)

    def p(name):
        return os.path.join(directory, name)

    with open(p(CORPUS_FILE), "w", encoding="utf-8") as fh:
        write_corpus(reg.repo, fh)
    save_vocab(reg.vocab, p(VOCAB_FILE))
    save_index(reg.index, p(INDEX_FILE))
    save_ranker(reg.ranker, p(RANKER_FILE))
    if reg.latent is not None:
        save_latent(reg.latent, p(LATENT_FILE))
    if reg.translation is not None:
        save_translation_table(reg.translation, p(TRANS_FILE))
    if reg.deepmatch is not None:
        save_deepmatch(reg.deepmatch, p(DEEPMATCH_FILE))
    if reg.topicword is not None:
        save_topicword(reg.topicword, p(TOPICWORD_FILE))

    cfg = reg.translm_cfg
    if os.path.exists(p(MANIFEST_FILE)):
        os.remove(p(MANIFEST_FILE))  # rebuild from scratch, no stale keys
    update_manifest(directory, {
        "engine_version": __version__,
        "corpus_tag": reg.vocab.tag,
        "translm_alpha": repr(cfg.alpha),
        "translm_beta": repr(cfg.beta),
        "translm_gamma": repr(cfg.gamma),
        "stage1_per_model_k": str(reg.stage1.per_model_k),
        "stage1_latent_pool": str(reg.stage1.latent_pool),
    })


def read_manifest(directory) -> dict:
    path = os.path.join(directory, MANIFEST_FILE)
    if not os.path.exists(path):
        raise ModelLoadError(f"missing required file {MANIFEST_FILE}")
    meta, files = {}, {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            parts = line.rstrip("\n").split("\t")
            if parts[0] == "file" and len(parts) == 3:
                files[parts[1]] = parts[2]
            elif len(parts) == 2:
                meta[parts[0]] = parts[1]
    meta["files"] = files
    return meta


def load_models(directory, require_ranker: bool = True) -> ModelRegistry:
    """Load a model directory; with require_ranker=False a staged directory
    (corpus/vocab/index plus any trained matching models) is accepted."""
    manifest = read_manifest(directory)

    def p(name):
        return os.path.join(directory, name)

    required = REQUIRED_FILES if require_ranker else \
        tuple(f for f in REQUIRED_FILES if f != RANKER_FILE)
    for name in required:
        if not os.path.exists(p(name)):
            raise ModelLoadError(f"missing required file {name}")
    for name, digest in manifest["files"].items():
        if not os.path.exists(p(name)):
            raise ModelLoadError(f"missing required file {name}")
        actual = _sha256(p(name))
        if actual != digest:
            raise ModelLoadError(f"checksum mismatch for {name}")

    with open(p(CORPUS_FILE), encoding="utf-8") as fh:
        parsed = parse_corpus(fh)
    if parsed.rejections:
        raise ModelLoadError("corrupt corpus file in model directory")
    repo = parsed.repository
    vocab = load_vocab(p(VOCAB_FILE))
    if vocab.tag != repo.content_tag():
        raise ModelLoadError(
            f"version-tag mismatch: vocabulary tag {vocab.tag!r} vs corpus "
            f"tag {repo.content_tag()!r}")
    index = load_index(p(INDEX_FILE), repo, vocab)
    ranker = load_ranker(p(RANKER_FILE)) if os.path.exists(p(RANKER_FILE)) else None
    if ranker is None and require_ranker:
        raise ModelLoadError(f"missing required file {RANKER_FILE}")

    latent = load_latent(p(LATENT_FILE)) if os.path.exists(p(LATENT_FILE)) else None
    translation = (load_translation_table(p(TRANS_FILE))
                   if os.path.exists(p(TRANS_FILE)) else None)
    deepmatch = (load_deepmatch(p(DEEPMATCH_FILE))
                 if os.path.exists(p(DEEPMATCH_FILE)) else None)
    topicword = (load_topicword(p(TOPICWORD_FILE))
                 if os.path.exists(p(TOPICWORD_FILE)) else None)
    translm_cfg = TransLMConfig(
        alpha=float(manifest.get("translm_alpha", 0.8)),
        beta=float(manifest.get("translm_beta", 0.9)),
        gamma=float(manifest.get("translm_gamma", 0.5)))
    stage1 = Stage1Config(
        per_model_k=int(manifest.get("stage1_per_model_k", 10)),
        latent_pool=int(manifest.get("stage1_latent_pool", 200)))
    return ModelRegistry(repo=repo, vocab=vocab, index=index, ranker=ranker,
                         schema=ranker.schema if ranker else FULL_SCHEMA,
                         latent=latent, translation=translation,
                         translm_cfg=translm_cfg, deepmatch=deepmatch,
                         topicword=topicword, stage1=stage1)
