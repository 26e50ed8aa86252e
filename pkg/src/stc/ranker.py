"""Stage III: linear RankingSVM over matching features.

Training data are (suitable, unsuitable) candidate pairs per query; the
model minimizes 0.5*||w||^2 + C * sum_i max(0, 1 - w.(phi+ - phi-)) over
z-scored features with a deterministic averaged stochastic subgradient
(Pegasos schedule). Standardization statistics are stored with the model.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .features import FeatureSchema, FeatureVector


@dataclass(frozen=True)
class LabeledCandidate:
    query_id: int
    pair_id: int
    suitable: bool
    features: FeatureVector


@dataclass
class RankingModel:
    schema: FeatureSchema
    weights: np.ndarray
    means: np.ndarray
    stds: np.ndarray              # 1.0 placeholder where constant
    constant_mask: np.ndarray     # True where the training feature was constant
    penalty: float = 50.0

    def __post_init__(self):
        n = len(self.schema)
        for name in ("weights", "means", "stds", "constant_mask"):
            arr = np.asarray(getattr(self, name))
            if arr.shape != (n,):
                raise ValueError(f"{name} does not match the schema size")

    def standardize(self, values: np.ndarray) -> np.ndarray:
        z = (np.asarray(values, dtype=np.float64) - self.means) / self.stds
        return np.where(self.constant_mask, 0.0, z)


@dataclass(frozen=True)
class RankSVMConfig:
    epochs: int = 60
    seed: int = 0


def build_preference_pairs(data):
    """Every (suitable, unsuitable) feature pair sharing a query_id.

    Positives are paired against labeled negatives only. Deterministic:
    queries ascending, candidates by pair_id ascending.
    """
    by_query = {}
    for cand in data:
        by_query.setdefault(cand.query_id, []).append(cand)
    triples = []
    for qid in sorted(by_query):
        cands = sorted(by_query[qid], key=lambda c: c.pair_id)
        positives = [c for c in cands if c.suitable]
        negatives = [c for c in cands if not c.suitable]
        for pos in positives:
            for neg in negatives:
                triples.append((qid, pos.features, neg.features))
    return triples


def train_ranksvm(triples, penalty: float = 50.0,
                  cfg: RankSVMConfig = RankSVMConfig()) -> RankingModel:
    """Averaged stochastic subgradient RankingSVM; deterministic under seed."""
    if not triples:
        raise ValueError("no training triples")
    schema = triples[0][1].schema
    plus = np.stack([t[1].values for t in triples])
    minus = np.stack([t[2].values for t in triples])

    rows = np.unique(np.concatenate([plus, minus], axis=0), axis=0)
    means = rows.mean(axis=0)
    stds = rows.std(axis=0)
    constant = stds == 0.0
    stds = np.where(constant, 1.0, stds)

    diffs = (plus - means) / stds - (minus - means) / stds
    diffs[:, constant] = 0.0
    if not np.any(np.abs(plus - minus) > 0):
        raise ValueError("degenerate training data: all difference vectors zero")

    n = len(diffs)
    lam = 1.0 / (penalty * n)
    rng = np.random.default_rng(cfg.seed)
    w = np.zeros(diffs.shape[1])
    w_sum = np.zeros_like(w)
    total = cfg.epochs * n
    tail_start = total // 2  # suffix averaging: discard the warm-up half
    t = 0
    averaged = 0
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        for i in order:
            t += 1
            eta = 1.0 / (lam * t)
            z = diffs[i]
            if 1.0 - float(w @ z) > 0.0:
                w = (1.0 - eta * lam) * w + eta * z
            else:
                w = (1.0 - eta * lam) * w
            if t > tail_start:
                w_sum += w
                averaged += 1
    w_avg = w_sum / averaged
    w_avg[constant] = 0.0
    return RankingModel(schema=schema, weights=w_avg, means=means, stds=stds,
                        constant_mask=constant, penalty=penalty)


def ranksvm_objective(weights: np.ndarray, diffs: np.ndarray,
                      penalty: float) -> float:
    """0.5||w||^2 + C * sum hinge over standardized difference vectors."""
    hinges = np.maximum(0.0, 1.0 - diffs @ weights)
    return 0.5 * float(weights @ weights) + penalty * float(hinges.sum())


def standardized_diffs(m: RankingModel, triples) -> np.ndarray:
    return np.stack([m.standardize(p.values) - m.standardize(q.values)
                     for _, p, q in triples])


def rank_score(m: RankingModel, phi: FeatureVector) -> float:
    """w . standardize(phi); raises on schema mismatch."""
    if phi.schema.names != m.schema.names:
        raise ValueError("feature vector schema does not match the model schema")
    return float(m.weights @ m.standardize(phi.values))


def save_ranker(m: RankingModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# stc ranking model v1\n")
        fh.write(f"# schema_version\t{m.schema.version}\n")
        fh.write(f"# penalty\t{m.penalty!r}\n")
        for i, name in enumerate(m.schema.names):
            std = 0.0 if m.constant_mask[i] else float(m.stds[i])
            fh.write(f"{name}\t{float(m.weights[i])!r}\t"
                     f"{float(m.means[i])!r}\t{std!r}\n")


def load_ranker(path) -> RankingModel:
    names, weights, means, stds = [], [], [], []
    version, penalty = "", 50.0
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].strip().split("\t")
                if len(parts) == 2 and parts[0] == "schema_version":
                    version = parts[1]
                elif len(parts) == 2 and parts[0] == "penalty":
                    penalty = float(parts[1])
                continue
            name, w, mean, std = line.split("\t")
            names.append(name)
            weights.append(float(w))
            means.append(float(mean))
            stds.append(float(std))
    stds = np.array(stds)
    constant = stds == 0.0
    return RankingModel(schema=FeatureSchema(tuple(names), version),
                        weights=np.array(weights), means=np.array(means),
                        stds=np.where(constant, 1.0, stds),
                        constant_mask=constant, penalty=penalty)
