"""Deep matching model: K bilinear local matchers feeding an MLP.

Local matcher k owns a word subset per side (a topic patch, found by a
collapsed-Gibbs topic model over side-tagged pseudo-documents) and scores

    a_k = sigmoid(x_k^T Lx_k Ly_k^T y_k + b_k)

The K local scores feed a small perceptron with sigmoid hidden units and a
linear scalar output. Training minimizes the mean large-margin ranking loss
over preference triples plus an L2 penalty on the weight matrices.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .corpus import Repository, SparseVector, Vocabulary


@dataclass(frozen=True)
class TopicPatch:
    x_words: tuple  # sorted word ids, query side
    y_words: tuple  # sorted word ids, response side
    k: int

    def __post_init__(self):
        if not self.x_words or not self.y_words:
            raise ValueError("patch word sets must be non-empty")


@dataclass(frozen=True)
class PreferenceTriple:
    x: SparseVector
    y_plus: SparseVector
    y_minus: SparseVector


class DeepMatchModel:
    """Parameter container; see module docstring for the forward form."""

    def __init__(self, patches, lx, ly, bias, layers, seed=0, vocab_tag=""):
        self.patches = list(patches)
        self.lx = [np.asarray(m, dtype=np.float64) for m in lx]
        self.ly = [np.asarray(m, dtype=np.float64) for m in ly]
        self.bias = np.asarray(bias, dtype=np.float64)
        self.layers = [(np.asarray(w, dtype=np.float64),
                        np.asarray(b, dtype=np.float64)) for w, b in layers]
        self.seed = seed
        self.vocab_tag = vocab_tag
        self._x_pos = [{w: i for i, w in enumerate(p.x_words)} for p in self.patches]
        self._y_pos = [{w: i for i, w in enumerate(p.y_words)} for p in self.patches]
        self._check_dims()

    def _check_dims(self):
        k = len(self.patches)
        if not (len(self.lx) == len(self.ly) == len(self.bias) == k):
            raise ValueError("per-patch parameter count mismatch")
        size = k
        for w, b in self.layers:
            if w.shape[1] != size or w.shape[0] != b.shape[0]:
                raise ValueError("layer dimensions do not chain")
            size = w.shape[0]
        if size != 1:
            raise ValueError("output layer must be scalar")

    @property
    def n_patches(self):
        return len(self.patches)


def _sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _restrict(vec: SparseVector, pos_map: dict, size: int) -> np.ndarray:
    out = np.zeros(size)
    for wid, w in zip(vec.ids, vec.weights):
        i = pos_map.get(int(wid))
        if i is not None:
            out[i] = w
    return out


def local_score(m: DeepMatchModel, k: int, x: SparseVector, y: SparseVector) -> float:
    """sigmoid(x_k^T Lx_k Ly_k^T y_k + b_k), strictly inside (0, 1)."""
    xk = _restrict(x, m._x_pos[k], len(m.patches[k].x_words))
    yk = _restrict(y, m._y_pos[k], len(m.patches[k].y_words))
    z = float(xk @ m.lx[k] @ (m.ly[k].T @ yk) + m.bias[k])
    return float(_sigmoid(z))


def _forward_cache(m: DeepMatchModel, x: SparseVector, y: SparseVector):
    """Forward pass keeping intermediates for backprop."""
    k_count = m.n_patches
    a = np.empty(k_count)
    locals_cache = []
    for k in range(k_count):
        xk = _restrict(x, m._x_pos[k], len(m.patches[k].x_words))
        yk = _restrict(y, m._y_pos[k], len(m.patches[k].y_words))
        u = m.lx[k].T @ xk      # (d_k,)
        v = m.ly[k].T @ yk      # (d_k,)
        z = float(u @ v + m.bias[k])
        a[k] = _sigmoid(z)
        locals_cache.append((xk, yk, u, v))
    acts = [a]
    h = a
    for i, (w, b) in enumerate(m.layers):
        pre = w @ h + b
        h = pre if i == len(m.layers) - 1 else _sigmoid(pre)
        acts.append(h)
    return float(h[0]), a, locals_cache, acts


def forward(m: DeepMatchModel, x: SparseVector, y: SparseVector) -> float:
    """Final matching score s(x, y); linear output, unbounded."""
    score, _, _, _ = _forward_cache(m, x, y)
    return score


def _zero_grads(m: DeepMatchModel):
    return {
        "lx": [np.zeros_like(a) for a in m.lx],
        "ly": [np.zeros_like(a) for a in m.ly],
        "bias": np.zeros_like(m.bias),
        "w": [np.zeros_like(w) for w, _ in m.layers],
        "b": [np.zeros_like(b) for _, b in m.layers],
    }


def _accumulate_score_grad(m: DeepMatchModel, x, y, coeff, grads):
    """Add coeff * d s(x,y)/d theta into grads."""
    _, a, locals_cache, acts = _forward_cache(m, x, y)
    delta = np.array([coeff])
    for i in range(len(m.layers) - 1, -1, -1):
        w, _ = m.layers[i]
        inp = acts[i]
        grads["w"][i] += np.outer(delta, inp)
        grads["b"][i] += delta
        delta = w.T @ delta
        if i > 0:
            delta = delta * acts[i] * (1.0 - acts[i])
    da = delta * a * (1.0 - a)  # through the local sigmoids
    for k in range(m.n_patches):
        xk, yk, u, v = locals_cache[k]
        grads["bias"][k] += da[k]
        grads["lx"][k] += da[k] * np.outer(xk, v)
        grads["ly"][k] += da[k] * np.outer(yk, u)


def hinge_grads(m: DeepMatchModel, triple: PreferenceTriple, margin: float):
    """(loss, grads) of max(0, margin + s(x,y-) - s(x,y+)) for one triple."""
    s_plus = forward(m, triple.x, triple.y_plus)
    s_minus = forward(m, triple.x, triple.y_minus)
    loss = margin + s_minus - s_plus
    grads = _zero_grads(m)
    if loss <= 0.0:
        return 0.0, grads
    _accumulate_score_grad(m, triple.x, triple.y_minus, 1.0, grads)
    _accumulate_score_grad(m, triple.x, triple.y_plus, -1.0, grads)
    return loss, grads


@dataclass(frozen=True)
class DeepMatchTrainConfig:
    margin: float = 2.0
    learning_rate: float = 0.05
    epochs: int = 5
    l2: float = 1e-4
    batch_size: int = 32
    seed: int = 0


def deepmatch_objective(m: DeepMatchModel, triples, cfg: DeepMatchTrainConfig) -> float:
    """Mean hinge loss over triples plus l2 * sum of squared matrix weights."""
    hinge = 0.0
    for t in triples:
        hinge += max(0.0, cfg.margin + forward(m, t.x, t.y_minus)
                     - forward(m, t.x, t.y_plus))
    reg = sum(float(np.sum(a * a)) for a in m.lx)
    reg += sum(float(np.sum(a * a)) for a in m.ly)
    reg += sum(float(np.sum(w * w)) for w, _ in m.layers)
    return hinge / len(triples) + cfg.l2 * reg


def init_deepmatch(patches, d_k: int = 5, hidden: int = 32, seed: int = 0,
                   vocab_tag: str = "") -> DeepMatchModel:
    """Uniform [-0.1, 0.1] patch parameters and a K->hidden->1 upper net."""
    rng = np.random.default_rng(seed)
    k_count = len(patches)
    lx = [rng.uniform(-0.1, 0.1, (len(p.x_words), d_k)) for p in patches]
    ly = [rng.uniform(-0.1, 0.1, (len(p.y_words), d_k)) for p in patches]
    bias = np.zeros(k_count)
    w1 = rng.uniform(-0.5, 0.5, (hidden, k_count))
    b1 = np.zeros(hidden)
    w2 = rng.uniform(-0.5, 0.5, (1, hidden))
    b2 = np.zeros(1)
    return DeepMatchModel(patches, lx, ly, bias, [(w1, b1), (w2, b2)],
                          seed=seed, vocab_tag=vocab_tag)


def train_deepmatch(m: DeepMatchModel, triples, cfg: DeepMatchTrainConfig) -> DeepMatchModel:
    """Mini-batch gradient descent on the margin ranking objective (in place).

    The hinge gradient is averaged per batch; the L2 term decays the weight
    matrices (not biases) on every update. Deterministic under cfg.seed.
    """
    if not triples:
        raise ValueError("no training triples")
    rng = np.random.default_rng(cfg.seed)
    n = len(triples)
    bs = min(cfg.batch_size, n)
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, bs):
            batch = [triples[i] for i in order[start:start + bs]]
            grads = _zero_grads(m)
            for t in batch:
                _, g = hinge_grads(m, t, cfg.margin)
                for k in range(m.n_patches):
                    grads["lx"][k] += g["lx"][k]
                    grads["ly"][k] += g["ly"][k]
                grads["bias"] += g["bias"]
                for i in range(len(m.layers)):
                    grads["w"][i] += g["w"][i]
                    grads["b"][i] += g["b"][i]
            scale = cfg.learning_rate / len(batch)
            for k in range(m.n_patches):
                m.lx[k] -= scale * grads["lx"][k] + cfg.learning_rate * 2 * cfg.l2 * m.lx[k]
                m.ly[k] -= scale * grads["ly"][k] + cfg.learning_rate * 2 * cfg.l2 * m.ly[k]
            m.bias -= scale * grads["bias"]
            new_layers = []
            for i, (w, b) in enumerate(m.layers):
                w = w - scale * grads["w"][i] - cfg.learning_rate * 2 * cfg.l2 * w
                b = b - scale * grads["b"][i]
                new_layers.append((w, b))
            m.layers = new_layers
    return m


def _params(m: DeepMatchModel):
    """Flat views of every parameter array, for the gradient check."""
    out = []
    for k in range(m.n_patches):
        out.append(("lx", k, m.lx[k]))
        out.append(("ly", k, m.ly[k]))
    out.append(("bias", None, m.bias))
    for i in range(len(m.layers)):
        out.append(("w", i, m.layers[i][0]))
        out.append(("b", i, m.layers[i][1]))
    return out


def _hinge_loss(m: DeepMatchModel, triple: PreferenceTriple, margin: float) -> float:
    return max(0.0, margin + forward(m, triple.x, triple.y_minus)
               - forward(m, triple.x, triple.y_plus))


def gradient_check(m: DeepMatchModel, triple: PreferenceTriple,
                   eps: float = 1e-5, margin: float = 2.0) -> float:
    """Max relative error between analytic and central-difference gradients
    of the hinge term, over every parameter."""
    _, grads = hinge_grads(m, triple, margin)
    analytic = {"lx": grads["lx"], "ly": grads["ly"], "bias": grads["bias"],
                "w": grads["w"], "b": grads["b"]}
    worst = 0.0
    for name, idx, arr in _params(m):
        g = analytic[name][idx] if idx is not None else analytic[name]
        flat = arr.reshape(-1)
        gflat = np.asarray(g).reshape(-1)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + eps
            hi = _hinge_loss(m, triple, margin)
            flat[j] = orig - eps
            lo = _hinge_loss(m, triple, margin)
            flat[j] = orig
            numeric = (hi - lo) / (2 * eps)
            denom = max(abs(gflat[j]), abs(numeric), 1e-6)
            worst = max(worst, abs(gflat[j] - numeric) / denom)
    return worst


def learn_topics(repo: Repository, vocab: Vocabulary, k: int,
                 words_per_side: int = 50, seed: int = 0, iters: int = 50,
                 max_docs: int | None = None,
                 doc_smoothing: float | None = None,
                 word_smoothing: float = 0.01):
    """Topic patches from a collapsed-Gibbs topic model over side-tagged docs.

    Each pair becomes one pseudo-document holding its post tokens tagged as
    side x and comment tokens tagged as side y; a patch is the top
    words_per_side words per side of one topic. Deterministic under seed.
    """
    if k < 1:
        raise ValueError("K must be >= 1")
    rng = np.random.default_rng(seed)
    pairs = list(repo)
    if max_docs is not None and len(pairs) > max_docs:
        chosen = rng.choice(len(pairs), size=max_docs, replace=False)
        pairs = [pairs[i] for i in sorted(chosen)]

    # Tagged vocabulary: 2 * |vocab| slots, x side first.
    v = len(vocab)
    docs = []
    for pair in pairs:
        doc = []
        for t in pair.post.tokens():
            wid = vocab.id(t.surface)
            if wid is not None:
                doc.append(wid)
        for t in pair.comment.tokens():
            wid = vocab.id(t.surface)
            if wid is not None:
                doc.append(v + wid)
        if doc:
            docs.append(doc)
    if not docs:
        raise ValueError("no in-vocabulary tokens to model")

    # Small document prior: pseudo-documents are a dozen tokens, so a large
    # alpha would drown the counts and blur the topics.
    alpha = 0.5 if doc_smoothing is None else doc_smoothing
    beta = word_smoothing
    beta_v = beta * 2 * v

    n_kw = [[0] * k for _ in range(2 * v)]
    n_dk = [[0] * k for _ in range(len(docs))]
    n_k = [0] * k
    z = []
    token_doc = []
    token_word = []
    for d, doc in enumerate(docs):
        for wid in doc:
            topic = int(rng.integers(k))
            z.append(topic)
            token_doc.append(d)
            token_word.append(wid)
            n_kw[wid][topic] += 1
            n_dk[d][topic] += 1
            n_k[topic] += 1

    n_tokens = len(z)
    probs = [0.0] * k
    rand = rng.random
    for _ in range(iters):
        for pos in range(n_tokens):
            wid = token_word[pos]
            d = token_doc[pos]
            old = z[pos]
            nkw = n_kw[wid]
            ndk = n_dk[d]
            nkw[old] -= 1
            ndk[old] -= 1
            n_k[old] -= 1
            total = 0.0
            for t in range(k):
                p = (ndk[t] + alpha) * (nkw[t] + beta) / (n_k[t] + beta_v)
                probs[t] = p
                total += p
            r = rand() * total
            t = 0
            acc = probs[0]
            while acc < r and t < k - 1:
                t += 1
                acc += probs[t]
            z[pos] = t
            nkw[t] += 1
            ndk[t] += 1
            n_k[t] += 1

    patches = []
    for topic in range(k):
        x_scored = [(n_kw[wid][topic], -wid) for wid in range(v) if n_kw[wid][topic] > 0]
        y_scored = [(n_kw[v + wid][topic], -wid) for wid in range(v) if n_kw[v + wid][topic] > 0]
        x_words = _top_words(x_scored, words_per_side, v, rng)
        y_words = _top_words(y_scored, words_per_side, v, rng)
        if len(x_words) < words_per_side or len(y_words) < words_per_side:
            warnings.warn(f"patch {topic} truncated: fewer than {words_per_side} "
                          "words carry topic mass", stacklevel=2)
        patches.append(TopicPatch(x_words=x_words, y_words=y_words, k=topic))
    return patches


def _top_words(scored, limit, v, rng):
    """Top word ids by count (ties to the smaller id); pad from a seeded draw
    only if the topic has no mass at all on that side."""
    scored.sort(reverse=True)
    ids = tuple(sorted(-neg for _, neg in scored[:limit]))
    if not ids:
        ids = (int(rng.integers(v)),)
    return ids
