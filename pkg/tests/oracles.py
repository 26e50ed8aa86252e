"""Independent straight-line re-implementations used as test oracles.

Everything here is written directly from the defining formulas with plain
dicts/loops (or dense numpy where the formula is a matrix product), on
purpose sharing no code with the package under test.
"""

import math

import numpy as np


def cosine_dicts(a: dict, b: dict) -> float:
    dot = sum(w * b.get(i, 0.0) for i, w in a.items())
    na = math.sqrt(sum(w * w for w in a.values()))
    nb = math.sqrt(sum(w * w for w in b.values()))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return dot / (na * nb)


def lcs_dp(a: str, b: str) -> int:
    """O(n*m) longest common contiguous substring length."""
    best = 0
    table = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
    for i in range(1, len(a) + 1):
        for j in range(1, len(b) + 1):
            if a[i - 1] == b[j - 1]:
                table[i][j] = table[i - 1][j - 1] + 1
                best = max(best, table[i][j])
    return best


def cooccur_naive(x_words, y_words, idf: dict):
    """x_words/y_words: token lists; idf: word -> idf for in-vocab words."""
    common = {w for w in set(x_words) & set(y_words) if w in idf}
    if not common or not set(y_words):
        return (0.0, 0.0, 0.0, 0.0)
    size = float(len(common))
    s = sum(idf[w] for w in common)
    return (size, size / len(set(y_words)), s, s / size)


def latent_dense(l_q: np.ndarray, l_r: np.ndarray, q: dict, r: dict) -> float:
    """q^T (L_q L_r^T) r with an explicitly materialized dense matrix."""
    n = l_q.shape[0]
    qd = np.zeros(n)
    rd = np.zeros(n)
    for i, w in q.items():
        qd[i] = w
    for i, w in r.items():
        rd[i] = w
    m = l_q @ l_r.T
    return float(qd @ m @ rd)


def translm_direct(q_words, p_words, r_words, table: dict, coll_prob,
                   alpha, beta, gamma, in_vocab):
    """Direct transcription of the TransLM scoring formulas.

    table: (w, t) -> probability; coll_prob: word -> collection probability.
    Returns (logprob, scored, skipped).
    """
    def p_ml(w, words):
        return words.count(w) / len(words) if words else 0.0

    def p_tr(w, words):
        if not words:
            return 0.0
        return sum(table.get((w, t), 0.0) * p_ml(t, words) for t in set(words))

    log_total, scored, skipped = 0.0, 0, 0
    for w in q_words:
        if not in_vocab(w):
            skipped += 1
            continue
        post_part = (1 - gamma) * p_ml(w, p_words) + gamma * p_tr(w, p_words)
        resp_part = (1 - gamma) * p_ml(w, r_words) + gamma * p_tr(w, r_words)
        p_mx = (1 - beta) * post_part + beta * resp_part
        prob = (1 - alpha) * p_mx + alpha * coll_prob(w)
        log_total += math.log(prob)
        scored += 1
    return log_total, scored, skipped


def local_score_dense(lx, ly, b, x: dict, y: dict, x_words, y_words) -> float:
    xv = np.array([x.get(w, 0.0) for w in x_words])
    yv = np.array([y.get(w, 0.0) for w in y_words])
    z = float(xv @ np.asarray(lx) @ np.asarray(ly).T @ yv + b)
    return 1.0 / (1.0 + math.exp(-z)) if z >= 0 else math.exp(z) / (1 + math.exp(z))


def mlp_forward_dense(a: np.ndarray, layers) -> float:
    """Sigmoid hidden layers, linear scalar output."""
    h = np.asarray(a, dtype=float)
    for i, (w, b) in enumerate(layers):
        pre = np.asarray(w) @ h + np.asarray(b)
        if i < len(layers) - 1:
            h = 1.0 / (1.0 + np.exp(-pre))
        else:
            h = pre
    return float(h[0])


def logistic(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    return math.exp(z) / (1.0 + math.exp(z))


def rank_score_naive(weights, values, means, stds, constant) -> float:
    total = 0.0
    for i in range(len(weights)):
        z = 0.0 if constant[i] else (values[i] - means[i]) / stds[i]
        total += weights[i] * z
    return total


def average_precision_naive(ranking, suitable: set):
    if not suitable:
        return None
    precisions = []
    for idx, pid in enumerate(ranking):
        if pid in suitable:
            n_suit_in_top = sum(1 for p in ranking[:idx + 1] if p in suitable)
            precisions.append(n_suit_in_top / (idx + 1))
    if not precisions:
        return 0.0
    return sum(precisions) / len(precisions)


def ibm1_counts_by_enumeration(src, tgt, t_prob):
    """Expected alignment counts for one sentence pair by brute-force
    enumeration of every alignment vector (IBM Model 1, no NULL)."""
    from itertools import product

    counts = {}
    total_p = 0.0
    alignments = list(product(range(len(src)), repeat=len(tgt)))
    probs = []
    for a in alignments:
        p = 1.0
        for j, i in enumerate(a):
            p *= t_prob(tgt[j], src[i])
        probs.append(p)
        total_p += p
    for a, p in zip(alignments, probs):
        if total_p == 0.0:
            continue
        wgt = p / total_p
        for j, i in enumerate(a):
            key = (src[i], tgt[j])
            counts[key] = counts.get(key, 0.0) + wgt
    return counts


def ibm1_em_reference(pairs, iters):
    """Reference IBM Model 1 EM using alignment enumeration per pair."""
    tgt_vocab = sorted({w for _, tgt in pairs for w in tgt})
    uniform = 1.0 / len(tgt_vocab)
    table = {}

    def t_prob(w, t):
        if not table:
            return uniform
        return table.get((w, t), 0.0)

    for _ in range(iters):
        counts = {}
        for src, tgt in pairs:
            for (t, w), c in ibm1_counts_by_enumeration(src, tgt, t_prob).items():
                counts[(w, t)] = counts.get((w, t), 0.0) + c
        totals = {}
        for (w, t), c in counts.items():
            totals[t] = totals.get(t, 0.0) + c
        table = {(w, t): c / totals[t] for (w, t), c in counts.items()}
    return table


def t_cdf_quadrature(t: float, df: int) -> float:
    """Student-t CDF by adaptive quadrature of the density."""
    from scipy.integrate import quad

    def pdf(x):
        c = math.exp(math.lgamma((df + 1) / 2) - math.lgamma(df / 2)) \
            / math.sqrt(df * math.pi)
        return c * (1 + x * x / df) ** (-(df + 1) / 2)

    if t >= 0:
        val, _ = quad(pdf, 0, t, limit=200)
        return 0.5 + val
    val, _ = quad(pdf, t, 0, limit=200)
    return 0.5 - val


def finite_diff_grad(f, arr: np.ndarray, eps: float = 1e-6) -> np.ndarray:
    """Central finite differences of scalar f with respect to arr, in place."""
    g = np.zeros_like(arr)
    flat = arr.reshape(-1)
    gflat = g.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        hi = f()
        flat[i] = orig - eps
        lo = f()
        flat[i] = orig
        gflat[i] = (hi - lo) / (2 * eps)
    return g
