"""Latent-space query-response matching: bilinear model with norm-constrained rows.

The matching score is q^T L_q L_r^T r. Training minimizes a hinge loss over
positive pairs (optionally with one sampled negative per positive) by
stochastic subgradient descent, re-projecting every touched row onto the
feasible set { ||row||_1 <= mu1, ||row||_2 = mu2 } after each update.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import SparseVector


@dataclass
class LatentModel:
    l_q: np.ndarray   # (vocab, d)
    l_r: np.ndarray   # (vocab, d)
    d: int
    mu1: float
    mu2: float
    vocab_tag: str


@dataclass(frozen=True)
class LatentTrainConfig:
    d: int = 100
    mu1: float = 5.0
    mu2: float = 1.0
    learning_rate: float = 0.05
    epochs: int = 3
    negative_sampling: bool = False
    full_batch: bool = False
    seed: int = 0

    def __post_init__(self):
        if not (self.mu1 >= self.mu2 > 0):
            raise ValueError("need mu1 >= mu2 > 0; the row constraints are "
                             "jointly infeasible otherwise")


def project_vector(v: SparseVector, mat: np.ndarray) -> np.ndarray:
    """mat^T v for a sparse v: sum of scaled rows."""
    if len(v) == 0:
        return np.zeros(mat.shape[1])
    return v.weights @ mat[v.ids]


def latent_score(m: LatentModel, q: SparseVector, r: SparseVector) -> float:
    """q^T L_q L_r^T r, computed as dot(L_q^T q, L_r^T r)."""
    if len(q) == 0 or len(r) == 0:
        return 0.0
    return float(np.dot(project_vector(q, m.l_q), project_vector(r, m.l_r)))


def query_projection(m: LatentModel, q: SparseVector) -> np.ndarray:
    """L_q^T q, reusable across many response scorings of one query."""
    return project_vector(q, m.l_q)


def response_score(m: LatentModel, u: np.ndarray, r: SparseVector) -> float:
    """dot(u, L_r^T r) for a precomputed query projection u."""
    if len(r) == 0:
        return 0.0
    return float(np.dot(u, project_vector(r, m.l_r)))


def project_row(v: np.ndarray, mu1: float, mu2: float,
                rng: np.random.Generator | None = None) -> np.ndarray:
    """Project a row onto { ||x||_1 <= mu1, ||x||_2 = mu2 }.

    Solution has the soft-threshold-then-rescale form x = mu2 * s(v, lam) /
    ||s(v, lam)||_2 with the smallest lam >= 0 making the L1 constraint hold
    after rescaling (lam = 0 whenever plain sphere projection is feasible).
    A zero row maps to a basis direction scaled to mu2 (seeded when an rng is
    supplied, index 0 otherwise).
    """
    if not (mu1 >= mu2 > 0):
        raise ValueError("need mu1 >= mu2 > 0")
    v = np.asarray(v, dtype=np.float64)
    norm2 = np.linalg.norm(v)
    if norm2 == 0.0:
        out = np.zeros_like(v)
        idx = int(rng.integers(len(v))) if rng is not None else 0
        out[idx] = mu2
        return out

    ratio_target = mu1 / mu2
    x = v * (mu2 / norm2)
    if np.abs(x).sum() <= mu1:
        return x

    # Bisection on the soft threshold; ||s||_1/||s||_2 decreases in lam.
    absv = np.abs(v)
    lo, hi = 0.0, float(absv.max())
    for _ in range(200):
        lam = 0.5 * (lo + hi)
        s = np.maximum(absv - lam, 0.0)
        n2 = np.linalg.norm(s)
        if n2 == 0.0 or s.sum() > ratio_target * n2:
            lo = lam
        else:
            hi = lam
    s = np.maximum(absv - hi, 0.0)
    n2 = np.linalg.norm(s)
    if n2 == 0.0:
        # Tied maxima plateau: keep as many of the largest entries as the L1
        # budget allows (sqrt(count) <= mu1/mu2 guarantees feasibility).
        keep = min(max(1, int(ratio_target ** 2)), int(np.count_nonzero(absv)))
        order = np.argsort(-absv, kind="stable")[:keep]
        out = np.zeros_like(v)
        out[order] = np.sign(v[order]) * (mu2 / np.sqrt(len(order)))
        return out
    x = np.sign(v) * s * (mu2 / n2)
    # Guard against the bisection landing a hair on the infeasible side.
    if np.abs(x).sum() > mu1:
        s = np.maximum(absv - hi * (1 + 1e-9) - 1e-15, 0.0)
        n2 = np.linalg.norm(s)
        x = np.sign(v) * s * (mu2 / n2)
    return x


def _project_rows(mat: np.ndarray, rows, mu1: float, mu2: float,
                  rng: np.random.Generator) -> None:
    for i in rows:
        mat[i] = project_row(mat[i], mu1, mu2, rng)


def latent_objective(m: LatentModel, pairs) -> float:
    """Sum of hinge losses max(1 - score(q_i, r_i), 0) over positive pairs."""
    return sum(max(1.0 - latent_score(m, q, r), 0.0) for q, r in pairs)


def _init_model(n_words: int, cfg: LatentTrainConfig, vocab_tag: str,
                rng: np.random.Generator) -> LatentModel:
    l_q = rng.uniform(-0.1, 0.1, size=(n_words, cfg.d))
    l_r = rng.uniform(-0.1, 0.1, size=(n_words, cfg.d))
    for mat in (l_q, l_r):
        _project_rows(mat, range(n_words), cfg.mu1, cfg.mu2, rng)
    return LatentModel(l_q, l_r, cfg.d, cfg.mu1, cfg.mu2, vocab_tag)


def _pair_step(m: LatentModel, q: SparseVector, r_pos: SparseVector,
               r_neg, lr: float, cfg: LatentTrainConfig,
               rng: np.random.Generator) -> None:
    if len(q) == 0 or len(r_pos) == 0:
        return
    u = project_vector(q, m.l_q)      # L_q^T q
    v_pos = project_vector(r_pos, m.l_r)
    if r_neg is not None and len(r_neg):
        v_neg = project_vector(r_neg, m.l_r)
        active = 1.0 + float(np.dot(u, v_neg)) - float(np.dot(u, v_pos)) > 0.0
        if not active:
            return
        # d/dL_q rows: q_w (v_neg - v_pos); d/dL_r rows: -r+_w u and +r-_w u
        m.l_q[q.ids] -= lr * np.outer(q.weights, v_neg - v_pos)
        m.l_r[r_pos.ids] -= lr * np.outer(-r_pos.weights, u)
        m.l_r[r_neg.ids] -= lr * np.outer(r_neg.weights, u)
        touched_r = np.union1d(r_pos.ids, r_neg.ids)
    else:
        if 1.0 - float(np.dot(u, v_pos)) <= 0.0:
            return
        m.l_q[q.ids] -= lr * np.outer(-q.weights, v_pos)
        m.l_r[r_pos.ids] -= lr * np.outer(-r_pos.weights, u)
        touched_r = r_pos.ids
    _project_rows(m.l_q, q.ids, cfg.mu1, cfg.mu2, rng)
    _project_rows(m.l_r, touched_r, cfg.mu1, cfg.mu2, rng)


def train_latent(pairs, cfg: LatentTrainConfig, n_words: int,
                 vocab_tag: str = "") -> LatentModel:
    """Train on positive (query-vector, response-vector) pairs.

    pairs: list of (SparseVector, SparseVector) indexed against the same
    vocabulary of size n_words. Deterministic under cfg.seed. In full_batch
    mode every pair's subgradient is accumulated before one update per epoch,
    which gives a monotone objective trace for small learning rates.
    """
    if not pairs:
        raise ValueError("no training pairs")
    rng = np.random.default_rng(cfg.seed)
    m = _init_model(n_words, cfg, vocab_tag, rng)

    for _ in range(cfg.epochs):
        if cfg.full_batch:
            grad_q = np.zeros_like(m.l_q)
            grad_r = np.zeros_like(m.l_r)
            touched_q, touched_r = set(), set()
            for q, r in pairs:
                if len(q) == 0 or len(r) == 0:
                    continue
                u = project_vector(q, m.l_q)
                v = project_vector(r, m.l_r)
                if 1.0 - float(np.dot(u, v)) > 0.0:
                    grad_q[q.ids] += np.outer(-q.weights, v)
                    grad_r[r.ids] += np.outer(-r.weights, u)
                    touched_q.update(q.ids.tolist())
                    touched_r.update(r.ids.tolist())
            m.l_q -= cfg.learning_rate * grad_q
            m.l_r -= cfg.learning_rate * grad_r
            _project_rows(m.l_q, sorted(touched_q), cfg.mu1, cfg.mu2, rng)
            _project_rows(m.l_r, sorted(touched_r), cfg.mu1, cfg.mu2, rng)
        else:
            order = rng.permutation(len(pairs))
            for idx in order:
                q, r_pos = pairs[idx]
                r_neg = None
                if cfg.negative_sampling and len(pairs) > 1:
                    j = int(rng.integers(len(pairs) - 1))
                    if j >= idx:
                        j += 1
                    r_neg = pairs[j][1]
                _pair_step(m, q, r_pos, r_neg, cfg.learning_rate, cfg, rng)
    return m
