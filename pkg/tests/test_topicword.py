import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stc.corpus import build_vocabulary, cosine, parse_corpus, tfidf_vector
from stc.evaluation import kfold_split
from stc.topicword import (FEATURE_NAMES, TopicWordModel, TopicWordTrainConfig,
                           WordFeatureVector, extract_word_features,
                           load_topicword, logreg_grad, logreg_loglik,
                           save_topicword, topic_prob, topicword_sims,
                           train_topicword)

from conftest import pair_line, text
from oracles import finite_diff_grad, logistic


def wfv(**kw):
    base = dict(tf=1, idf=1.0, sf=1, first=1, last=1, ne=0, ne_first=0,
                ne_last=0, pos="NOUN")
    base.update(kw)
    return WordFeatureVector(**base)


class TestWordFeatures:
    def test_single_sentence_first_and_last(self, small_vocab):
        t = text("alpha beta alpha")
        f = extract_word_features(t, "alpha", small_vocab)
        assert (f.first, f.last) == (1, 1)
        assert f.tf == 2 and f.sf == 1

    def test_multi_sentence_counts(self, small_vocab):
        t = text("w w other || middle only || w ending")
        f = extract_word_features(t, "w", small_vocab)
        assert f.tf == 3
        assert f.sf == 2
        assert (f.first, f.last) == (1, 1)

    def test_non_ne_noun(self, small_vocab):
        t = text("paris|NOUN|0 shines")
        f = extract_word_features(t, "paris", small_vocab)
        assert (f.ne, f.ne_first, f.ne_last) == (0, 0, 0)
        assert f.pos == "NOUN"
        assert f.expand()[8:].tolist() == [1.0, 0.0, 0.0, 0.0]

    def test_ne_flags_follow_sentences(self, small_vocab):
        t = text("paris|NOUN|1 x || y paris|NOUN|0")
        f = extract_word_features(t, "paris", small_vocab)
        assert f.ne == 1
        assert f.ne_first == 1
        assert f.ne_last == 0  # the last-sentence occurrence is not NE

    def test_absent_word_errors(self, small_vocab):
        with pytest.raises(ValueError, match="does not occur"):
            extract_word_features(text("a b"), "z", small_vocab)

    def test_invariant_validation(self):
        with pytest.raises(ValueError):
            wfv(tf=0)
        with pytest.raises(ValueError):
            wfv(ne=0, ne_first=1)
        with pytest.raises(ValueError):
            wfv(first=0, ne=1, ne_first=1)


class TestTopicProb:
    def test_zero_logit_is_half(self):
        m = TopicWordModel(weights=np.zeros(len(FEATURE_NAMES)))
        assert topic_prob(m, wfv()) == 0.5

    def test_saturation_no_overflow(self):
        w = np.zeros(len(FEATURE_NAMES))
        w[0] = 40.0  # TF weight; tf=1 gives logit 40
        m = TopicWordModel(weights=w)
        p = topic_prob(m, wfv())
        assert p >= 1 - 1e-12
        assert p <= 1.0

    def test_log_odds_round_trip(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            w = rng.normal(scale=0.5, size=len(FEATURE_NAMES))
            m = TopicWordModel(weights=w)
            f = wfv(tf=int(rng.integers(1, 4)), idf=float(rng.uniform(0.5, 5)))
            z = float(w @ f.expand())
            if abs(z) > 15:
                continue
            p = topic_prob(m, f)
            assert math.log(p / (1 - p)) == pytest.approx(z, abs=1e-9)

    @given(st.floats(-30, 30))
    @settings(max_examples=80, deadline=None)
    def test_open_interval_and_monotone(self, scale):
        w = np.zeros(len(FEATURE_NAMES))
        w[1] = scale  # idf weight
        m = TopicWordModel(weights=w)
        p1 = topic_prob(m, wfv(idf=1.0))
        p2 = topic_prob(m, wfv(idf=2.0))
        assert 0.0 < p1 < 1.0 and 0.0 < p2 < 1.0
        # strict monotonicity needs a logit change visible at f64 resolution
        if scale > 1e-9:
            assert p2 > p1
        elif scale < -1e-9:
            assert p2 < p1


class TestTraining:
    def test_separable_toy_set_fits(self):
        data = []
        for i in range(20):
            data.append((wfv(pos="NOUN", first=1, sf=2), True))
            data.append((wfv(pos="OTHER", first=0, last=0, sf=1), False))
        m = train_topicword(data, TopicWordTrainConfig(l2=1e-4))
        correct = sum((topic_prob(m, f) > 0.5) == label for f, label in data)
        assert correct == len(data)

    def test_all_zero_features_half(self):
        # c = 0 and zero weights: every prediction is exactly 0.5
        m = TopicWordModel(weights=np.zeros(len(FEATURE_NAMES)))
        for f in (wfv(), wfv(pos="VERB"), wfv(tf=3)):
            blank = np.zeros(len(FEATURE_NAMES))
            assert logistic(float(blank @ f.expand())) == 0.5
            assert topic_prob(TopicWordModel(weights=blank), f) == 0.5

    def test_single_class_rejected(self):
        with pytest.raises(ValueError, match="single-class"):
            train_topicword([(wfv(), True), (wfv(tf=2), True)])

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(1)
        x = rng.normal(size=(5, len(FEATURE_NAMES)))
        y = np.array([1.0, 0.0, 1.0, 0.0, 1.0])
        w = rng.normal(scale=0.3, size=len(FEATURE_NAMES))
        l2 = 0.1
        analytic = logreg_grad(w, x, y, l2)
        numeric = finite_diff_grad(lambda: logreg_loglik(w, x, y, l2), w, eps=1e-6)
        for a, n in zip(analytic, numeric):
            denom = max(abs(a), abs(n), 1e-8)
            assert abs(a - n) / denom < 1e-5

    def test_planted_weights_crossval_accuracy(self):
        rng = np.random.default_rng(2)
        w_star = np.array([0.8, -0.5, 0.6, 1.2, -0.4, 0.9, 0.0, 0.0,
                           1.0, -0.3, -0.8, -1.1])
        data = []
        while len(data) < 200:
            f = WordFeatureVector(
                tf=int(rng.integers(1, 5)), idf=float(rng.uniform(0.5, 4.0)),
                sf=int(rng.integers(1, 3)), first=int(rng.integers(0, 2)),
                last=int(rng.integers(0, 2)), ne=0, ne_first=0, ne_last=0,
                pos=("NOUN", "VERB", "ADJ", "OTHER")[int(rng.integers(4))])
            z = float(w_star @ f.expand())
            if abs(z) < 0.75:
                continue  # margin keeps the planted labels learnable
            data.append((f, z > 0))
        folds = kfold_split(range(len(data)), k=5, seed=3)
        correct = total = 0
        for i in range(5):
            test_ids = set(folds[i])
            train = [data[j] for j in range(len(data)) if j not in test_ids]
            m = train_topicword(train, TopicWordTrainConfig(l2=1e-4))
            for j in sorted(test_ids):
                f, label = data[j]
                correct += (topic_prob(m, f) > 0.5) == label
                total += 1
        assert correct / total >= 0.95


class TestTopicwordSims:
    def build(self):
        lines = [pair_line(1, 1, "svn git tool rookie rookie", "version control tool"),
                 pair_line(2, 2, "rookie rookie question", "i am a rookie too"),
                 pair_line(3, 3, "lunch menu pick", "soup and rice")]
        repo = parse_corpus(lines).repository
        return repo, build_vocabulary(repo)

    def test_identical_texts_sim_one(self, small_vocab):
        m = TopicWordModel(weights=np.zeros(len(FEATURE_NAMES)))
        repo = parse_corpus([pair_line(1, 1, "sun beach wave", "sun beach wave")]).repository
        vocab = build_vocabulary(repo)
        sim_r, _ = topicword_sims(repo[1].post, repo[1], m, vocab)
        assert sim_r == pytest.approx(1.0, abs=1e-12)

    def test_disjoint_vocab_zero(self):
        repo, vocab = self.build()
        m = TopicWordModel(weights=np.zeros(len(FEATURE_NAMES)))
        q = text("totally different words")
        sim_r, sim_p = topicword_sims(q, repo[3], m, vocab)
        assert (sim_r, sim_p) == (0.0, 0.0)

    def test_uniform_weights_equal_plain_cosine_of_types(self):
        repo, vocab = self.build()
        m = TopicWordModel(weights=np.zeros(len(FEATURE_NAMES)))  # every P = 0.5
        q = repo[1].post
        sim_r, sim_p = topicword_sims(q, repo[2], m, vocab)
        from stc.corpus import weighted_vector
        ones_q = weighted_vector(q, vocab, lambda w: 1.0)
        ones_r = weighted_vector(repo[2].comment, vocab, lambda w: 1.0)
        ones_p = weighted_vector(repo[2].post, vocab, lambda w: 1.0)
        assert sim_r == pytest.approx(cosine(ones_q, ones_r), abs=1e-12)
        assert sim_p == pytest.approx(cosine(ones_q, ones_p), abs=1e-12)
        assert 0.0 <= sim_r <= 1.0 and 0.0 <= sim_p <= 1.0

    def test_topic_weighting_fixes_rookie_scenario(self):
        repo, vocab = self.build()
        # Weights that favor NOUNs in the first sentence and punish
        # high-TF repeats: "rookie" repeats get down-weighted.
        w = np.zeros(len(FEATURE_NAMES))
        w[0] = -2.0   # TF
        w[8] = 2.5    # POS_NOUN
        q = text("svn|NOUN|0 git|NOUN|0 tool|NOUN|0 rookie rookie rookie")
        m = TopicWordModel(weights=w)

        q_tfidf = tfidf_vector(q, vocab)
        tfidf_rank = sorted(
            repo.pair_ids,
            key=lambda pid: -cosine(q_tfidf, tfidf_vector(repo[pid].comment, vocab)))
        tw_rank = sorted(
            repo.pair_ids,
            key=lambda pid: -topicword_sims(q, repo[pid], m, vocab)[0])
        # the on-topic response (pair 1: "version control tool") improves
        assert tw_rank.index(1) < tfidf_rank.index(1)


class TestModelIO:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(4)
        m = TopicWordModel(weights=rng.normal(size=len(FEATURE_NAMES)),
                           vocab_tag="tagx")
        path = tmp_path / "topicword.txt"
        save_topicword(m, path)
        loaded = load_topicword(path)
        assert loaded.vocab_tag == "tagx"
        assert loaded.weights.tobytes() == m.weights.tobytes()
