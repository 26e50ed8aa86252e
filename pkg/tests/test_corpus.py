from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stc.corpus import (CleaningConfig, CorpusError, Repository, SparseVector,
                        build_vocabulary, clean_pairs, cosine, parse_corpus,
                        parse_short_text, tfidf_vector)

from conftest import pair_line, sparse, text


class TestParseShortText:
    def test_plain_tokens(self):
        t = text("hello world")
        assert [tok.surface for tok in t.tokens()] == ["hello", "world"]
        assert all(tok.pos == "OTHER" and not tok.is_ne for tok in t.tokens())

    def test_annotated_tokens_and_sentences(self):
        t = text("paris|NOUN|1 is|VERB|0 nice || visit|VERB|0 soon")
        assert len(t.sentences) == 2
        first = t.sentences[0]
        assert first[0].surface == "paris" and first[0].is_ne
        assert first[0].pos == "NOUN"
        assert t.sentences[1][0].surface == "visit"

    def test_surface_and_char_len(self):
        t = text("ab cd || e")
        assert t.surface == "abcde"
        assert t.raw_char_len == 5
        assert t.raw_char_len >= t.num_tokens

    @pytest.mark.parametrize("bad", ["", "||", "w|NOUN", "w|NOUN|2", "w|XX|0"])
    def test_malformed(self, bad):
        with pytest.raises(ValueError):
            parse_short_text(bad)


class TestParseCorpus:
    def test_empty_stream(self):
        result = parse_corpus([])
        assert len(result.repository) == 0
        assert result.rejections == []

    def test_single_line(self):
        result = parse_corpus([pair_line(7, 3, "a b c", "x y")])
        assert len(result.repository) == 1
        pair = result.repository[7]
        assert pair.post_id == 3
        assert pair.comment_rank == 1

    def test_field_count_rejection(self):
        result = parse_corpus(["1\t2\tonly three fields\n"])
        assert len(result.repository) == 0
        assert len(result.rejections) == 1
        assert result.rejections[0].reason == "field count"
        assert result.rejections[0].line_no == 1

    def test_duplicate_pair_id_hard_error(self):
        lines = [pair_line(1, 1, "a b", "x"), pair_line(1, 2, "c d", "y")]
        with pytest.raises(CorpusError, match="duplicate pair_id"):
            parse_corpus(lines)

    def test_comment_rank_by_post_order(self):
        lines = [
            pair_line(1, 5, "a b", "x"),
            pair_line(2, 6, "c d", "y"),
            pair_line(3, 5, "a b", "z"),
        ]
        repo = parse_corpus(lines).repository
        assert repo[1].comment_rank == 1
        assert repo[2].comment_rank == 1
        assert repo[3].comment_rank == 2

    def test_bad_id_and_bad_token_rejections(self):
        lines = ["x\t1\ta b\tc\n", "2\t1\ta|BAD|0 b\tc\n", pair_line(3, 1, "a b", "c")]
        result = parse_corpus(lines)
        assert len(result.repository) == 1
        reasons = [r.reason for r in result.rejections]
        assert reasons[0] == "bad id field"
        assert "bad pos tag" in reasons[1]


class TestCleaning:
    def test_short_post_dropped(self):
        # post surface has 9 chars -> dropped by the 10-char rule
        repo = parse_corpus([pair_line(1, 1, "abcd efghi", "long enough comment")]).repository
        assert repo[1].post.raw_char_len == 9
        cleaned, report = clean_pairs(repo)
        assert len(cleaned) == 0
        assert report.dropped_short_post == 1

    def test_short_comment_dropped(self):
        repo = parse_corpus([pair_line(1, 1, "a long enough post", "abcd")]).repository
        cleaned, report = clean_pairs(repo)
        assert len(cleaned) == 0
        assert report.dropped_short_comment == 1

    def test_comment_rank_101_dropped(self):
        lines = [pair_line(i, 1, "long enough post", f"comment number {i}")
                 for i in range(1, 102)]
        repo = parse_corpus(lines).repository
        assert repo[101].comment_rank == 101
        cleaned, report = clean_pairs(repo)
        assert len(cleaned) == 100
        assert report.dropped_comment_rank == 1
        assert 101 not in cleaned

    def test_ad_rule_drops_all_occurrences(self):
        ad = "visit our website for the best deals today friends"  # >= 30 chars
        lines = [pair_line(i, i, "a perfectly fine post", ad) for i in (1, 2, 3)]
        lines.append(pair_line(4, 4, "another good post here", "a normal comment"))
        repo = parse_corpus(lines).repository
        # brute-force duplicate scan oracle
        surfaces = Counter()
        for p in repo:
            if p.comment.raw_char_len >= 30:
                surfaces[p.comment.surface] += 1
        assert surfaces[repo[1].comment.surface] == 3
        cleaned, report = clean_pairs(repo)
        assert report.dropped_ad == 3
        assert sorted(cleaned.pair_ids) == [4]

    def test_ad_rule_needs_three_distinct_posts(self):
        ad = "visit our website for the best deals today friends"
        lines = [pair_line(1, 1, "a perfectly fine post", ad),
                 pair_line(2, 1, "a perfectly fine post", ad)]
        cleaned, report = clean_pairs(parse_corpus(lines).repository)
        assert report.dropped_ad == 0
        assert len(cleaned) == 2

    def test_idempotent(self, small_repo):
        once, _ = clean_pairs(small_repo)
        twice, report2 = clean_pairs(once)
        assert twice.pair_ids == once.pair_ids
        assert report2.total_dropped == 0

    def test_survivors_satisfy_rules(self, small_repo):
        rules = CleaningConfig(min_post_chars=12, min_comment_chars=8,
                               max_comments_per_post=1)
        cleaned, _ = clean_pairs(small_repo, rules)
        for p in cleaned:
            assert p.post.raw_char_len >= rules.min_post_chars
            assert p.comment.raw_char_len >= rules.min_comment_chars
            assert p.comment_rank <= rules.max_comments_per_post


class TestVocabulary:
    def test_single_pair_df(self):
        repo = parse_corpus([pair_line(1, 1, "apple tree", "apple pie")]).repository
        vocab = build_vocabulary(repo)
        assert vocab.n_docs == 2
        assert vocab.df("apple") == 2
        assert vocab.df("tree") == 1

    def test_absent_word(self, small_vocab):
        assert small_vocab.id("nowhere") is None
        assert small_vocab.df("nowhere") == 0

    def test_idf_frozen_value(self):
        # 3 documents, word in exactly 1: idf = ln(4/2) + 1
        lines = [pair_line(1, 1, "alpha beta", "gamma"),
                 pair_line(2, 1, "alpha beta", "delta")]
        vocab = build_vocabulary(parse_corpus(lines).repository)
        assert vocab.n_docs == 3  # one distinct post + two comments
        assert vocab.idf("gamma") == pytest.approx(1.6931471805599454, abs=1e-12)

    def test_posts_deduplicated_by_post_id(self):
        lines = [pair_line(1, 9, "same post words", "one"),
                 pair_line(2, 9, "same post words", "two")]
        vocab = build_vocabulary(parse_corpus(lines).repository)
        assert vocab.n_docs == 3
        assert vocab.df("same") == 1

    def test_empty_repo_errors(self):
        with pytest.raises(CorpusError, match="empty repository"):
            build_vocabulary(Repository([]))

    def test_ids_are_dense_bijection(self, small_vocab):
        ids = sorted(small_vocab.id(w) for w, _, _ in small_vocab.items())
        assert ids == list(range(len(small_vocab)))


class TestTfidf:
    def test_no_invocab_words(self, small_vocab):
        assert len(tfidf_vector(text("zzz qqq"), small_vocab)) == 0

    def test_repeated_token_weight(self, small_vocab):
        vec = tfidf_vector(text("beach beach"), small_vocab)
        wid = small_vocab.id("beach")
        assert vec.to_dict() == {wid: 2 * small_vocab.idf("beach")}

    def test_matches_naive_recount(self, small_repo, small_vocab):
        t = small_repo[1].post
        vec = tfidf_vector(t, small_vocab)
        naive = {}
        for tok in t.tokens():
            if tok.surface in small_vocab:
                naive[tok.surface] = naive.get(tok.surface, 0) + 1
        expected = {small_vocab.id(w): c * small_vocab.idf(w)
                    for w, c in naive.items()}
        assert vec.to_dict() == pytest.approx(expected)

    def test_weights_positive_finite(self, small_repo, small_vocab):
        for p in small_repo:
            for t in (p.post, p.comment):
                vec = tfidf_vector(t, small_vocab)
                assert np.all(vec.weights > 0)
                assert np.all(np.isfinite(vec.weights))


class TestSparseVector:
    def test_invariants_enforced(self):
        with pytest.raises(ValueError):
            SparseVector(np.array([3, 1]), np.array([1.0, 2.0]))
        with pytest.raises(ValueError):
            SparseVector(np.array([1, 2]), np.array([1.0, 0.0]))

    @given(st.dictionaries(st.integers(0, 50),
                           st.floats(0.1, 10.0, allow_nan=False), max_size=8),
           st.dictionaries(st.integers(0, 50),
                           st.floats(0.1, 10.0, allow_nan=False), max_size=8))
    @settings(max_examples=60, deadline=None)
    def test_dot_matches_dict_oracle(self, a, b):
        va, vb = sparse(a), sparse(b)
        expected = sum(w * b.get(i, 0.0) for i, w in a.items())
        assert va.dot(vb) == pytest.approx(expected, abs=1e-12)

    def test_cosine_of_empty_is_zero(self):
        assert cosine(sparse({}), sparse({1: 2.0})) == 0.0
