import numpy as np
import pytest

from stc.features import FeatureSchema, FeatureVector
from stc.ranker import (LabeledCandidate, RankingModel, RankSVMConfig,
                        build_preference_pairs, load_ranker, rank_score,
                        ranksvm_objective, save_ranker, standardized_diffs,
                        train_ranksvm)

from oracles import rank_score_naive

SCHEMA2 = FeatureSchema(("f1", "f2"))


def fv(*values, schema=SCHEMA2):
    return FeatureVector(schema, np.array(values, dtype=float))


def cand(qid, pid, suitable, *values):
    return LabeledCandidate(qid, pid, suitable, fv(*values))


class TestPreferencePairs:
    def test_cartesian_count(self):
        data = [cand(1, i, True, i, 0) for i in (1, 2)]
        data += [cand(1, i, False, i, 0) for i in (3, 4, 5)]
        triples = build_preference_pairs(data)
        assert len(triples) == 6

    def test_only_suitable_no_triples(self):
        data = [cand(1, 1, True, 1, 0), cand(1, 2, True, 2, 0)]
        assert build_preference_pairs(data) == []

    def test_matches_nested_loop_oracle(self):
        rng = np.random.default_rng(0)
        data = []
        pid = 0
        for qid in range(4):
            for _ in range(int(rng.integers(2, 6))):
                pid += 1
                data.append(cand(qid, pid, bool(rng.integers(2)),
                                 float(rng.normal()), float(rng.normal())))
        triples = build_preference_pairs(data)
        expected = set()
        for a in data:
            for b in data:
                if a.query_id == b.query_id and a.suitable and not b.suitable:
                    expected.add((a.query_id, a.pair_id, b.pair_id))
        got = set()
        by_qp = {(c.query_id, tuple(c.features.values)): c.pair_id for c in data}
        for qid, plus, minus in triples:
            got.add((qid, by_qp[(qid, tuple(plus.values))],
                     by_qp[(qid, tuple(minus.values))]))
        assert got == expected
        assert len(triples) == len(expected)


class TestTrainRankSVM:
    def test_separable_1d_positive_weight(self):
        schema = FeatureSchema(("f",))
        triples = [(1, FeatureVector(schema, np.array([v + 1.0])),
                    FeatureVector(schema, np.array([v])))
                   for v in (0.0, 0.5, 1.0, -0.5)]
        m = train_ranksvm(triples, penalty=50.0, cfg=RankSVMConfig(epochs=40, seed=0))
        assert m.weights[0] > 0

    def test_degenerate_rejected(self):
        triples = [(1, fv(1.0, 2.0), fv(1.0, 2.0))]
        with pytest.raises(ValueError, match="degenerate"):
            train_ranksvm(triples)

    def test_final_objective_near_full_batch_oracle(self):
        rng = np.random.default_rng(3)
        triples = []
        for qid in range(8):
            base = rng.normal(size=2)
            for _ in range(4):
                plus = base + rng.normal(scale=0.3, size=2) + np.array([0.8, 0.2])
                minus = base + rng.normal(scale=0.3, size=2)
                triples.append((qid, fv(*plus), fv(*minus)))
        m = train_ranksvm(triples, penalty=50.0,
                          cfg=RankSVMConfig(epochs=400, seed=1))
        diffs = standardized_diffs(m, triples)
        ours = ranksvm_objective(m.weights, diffs, 50.0)

        # independent full-batch projected subgradient oracle
        w = np.zeros(2)
        best = np.inf
        lr0 = 0.5
        for t in range(1, 4001):
            hinge_active = (1.0 - diffs @ w) > 0
            grad = w - 50.0 * diffs[hinge_active].sum(axis=0)
            w = w - (lr0 / np.sqrt(t)) * grad / max(1.0, np.linalg.norm(grad))
            best = min(best, ranksvm_objective(w, diffs, 50.0))
        assert ours <= best * 1.01 + 1e-9

    def test_seed_determinism(self):
        rng = np.random.default_rng(4)
        triples = [(0, fv(*rng.normal(size=2)), fv(*rng.normal(size=2)))
                   for _ in range(10)]
        m1 = train_ranksvm(triples, cfg=RankSVMConfig(epochs=10, seed=9))
        m2 = train_ranksvm(triples, cfg=RankSVMConfig(epochs=10, seed=9))
        assert m1.weights.tobytes() == m2.weights.tobytes()

    def test_constant_feature_flagged_zero_weight(self):
        triples = [(0, fv(1.0, 5.0), fv(0.0, 5.0)),
                   (0, fv(2.0, 5.0), fv(1.0, 5.0))]
        m = train_ranksvm(triples, cfg=RankSVMConfig(epochs=20, seed=0))
        assert m.constant_mask.tolist() == [False, True]
        assert m.weights[1] == 0.0

    def test_separable_training_accuracy_100(self):
        rng = np.random.default_rng(5)
        triples = []
        for qid in range(5):
            for _ in range(4):
                minus = rng.normal(size=2)
                plus = minus + np.array([1.0, 0.5])
                triples.append((qid, fv(*plus), fv(*minus)))
        m = train_ranksvm(triples, cfg=RankSVMConfig(epochs=200, seed=2))
        correct = sum(rank_score(m, p) > rank_score(m, q) for _, p, q in triples)
        assert correct == len(triples)


class TestRankScore:
    def model(self, weights, means=None, stds=None):
        n = len(weights)
        return RankingModel(
            schema=FeatureSchema(tuple(f"f{i}" for i in range(n))),
            weights=np.array(weights, dtype=float),
            means=np.array(means if means is not None else [0.0] * n),
            stds=np.array(stds if stds is not None else [1.0] * n),
            constant_mask=np.zeros(n, dtype=bool))

    def test_zero_weights(self):
        m = self.model([0.0, 0.0])
        v = FeatureVector(m.schema, np.array([3.0, -1.0]))
        assert rank_score(m, v) == 0.0

    def test_single_feature_arithmetic(self):
        m = self.model([2.0], means=[0.5], stds=[1.0])
        v = FeatureVector(m.schema, np.array([2.0]))  # standardized 1.5
        assert rank_score(m, v) == pytest.approx(3.0, abs=1e-12)

    def test_matches_naive_recomputation(self):
        rng = np.random.default_rng(6)
        for _ in range(30):
            n = int(rng.integers(1, 6))
            weights = rng.normal(size=n)
            means = rng.normal(size=n)
            stds = rng.uniform(0.5, 2.0, size=n)
            constant = rng.integers(0, 2, size=n).astype(bool)
            m = RankingModel(
                schema=FeatureSchema(tuple(f"f{i}" for i in range(n))),
                weights=weights, means=means, stds=stds, constant_mask=constant)
            values = rng.normal(size=n)
            got = rank_score(m, FeatureVector(m.schema, values))
            assert got == pytest.approx(
                rank_score_naive(weights, values, means, stds, constant),
                abs=1e-12)

    def test_schema_mismatch(self):
        m = self.model([1.0])
        other = FeatureVector(FeatureSchema(("other",)), np.array([1.0]))
        with pytest.raises(ValueError, match="schema"):
            rank_score(m, other)

    def test_argmax_invariant_under_positive_scaling(self):
        rng = np.random.default_rng(7)
        m = self.model(list(rng.normal(size=3)))
        vectors = [FeatureVector(m.schema, rng.normal(size=3)) for _ in range(10)]
        order = sorted(range(10), key=lambda i: -rank_score(m, vectors[i]))
        for alpha in (0.1, 3.0, 42.0):
            m2 = self.model(list(m.weights * alpha))
            order2 = sorted(range(10), key=lambda i: -rank_score(m2, vectors[i]))
            assert order2 == order

    def test_standardize_affine_invertible(self):
        m = self.model([1.0, 1.0], means=[2.0, -1.0], stds=[0.5, 4.0])
        values = np.array([3.0, 7.0])
        z = m.standardize(values)
        back = z * m.stds + m.means
        assert np.allclose(back, values)


class TestRankerIO:
    def test_round_trip_bitwise(self, tmp_path):
        rng = np.random.default_rng(8)
        triples = [(0, fv(*rng.normal(size=2)), fv(*rng.normal(size=2)))
                   for _ in range(8)]
        m = train_ranksvm(triples, cfg=RankSVMConfig(epochs=15, seed=3))
        path = tmp_path / "ranker.txt"
        save_ranker(m, path)
        loaded = load_ranker(path)
        assert loaded.schema == m.schema
        assert loaded.weights.tobytes() == m.weights.tobytes()
        assert loaded.means.tobytes() == m.means.tobytes()
        probe = fv(0.3, -0.7)
        assert rank_score(loaded, probe) == rank_score(m, probe)
