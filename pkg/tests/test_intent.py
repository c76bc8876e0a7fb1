import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vascreen.ingest import EmbeddingMatrix
from vascreen.intent import (
    AnchorEntry,
    AnchorSet,
    ZeroNormError,
    assign_commands,
    cosine_similarity,
    features_from_similarity,
    intent_feature_dim,
    intent_features,
    similarity_matrix,
)

from .conftest import random_matrix


def make_anchors(embeddings: np.ndarray) -> AnchorSet:
    n = embeddings.shape[0]
    entries = tuple(
        AnchorEntry(f"anchor {i}", f"intent {i}", "information") for i in range(n)
    )
    return AnchorSet(entries=entries, embeddings=EmbeddingMatrix(embeddings.astype(np.float32)))


def brute_force_features(sim: np.ndarray):
    """Independent loop implementation of the count/quality formulas."""
    m, n = sim.shape
    qty = [0] * n
    sums = [0.0] * n
    for j in range(m):
        best = 0
        for i in range(1, n):
            if sim[j, i] > sim[j, best]:
                best = i
        qty[best] += 1
        sums[best] += sim[j, best]
    qlt = [sums[i] / qty[i] if qty[i] else 0.0 for i in range(n)]
    return qty, qlt


class TestCosineSimilarity:
    def test_self_similarity(self):
        assert cosine_similarity([1.0, 0.0], [1.0, 0.0]) == 1.0

    def test_orthogonal(self):
        assert cosine_similarity([1.0, 0.0], [0.0, 1.0]) == 0.0

    def test_hand_arithmetic(self):
        # dot = 8, norms are 3 and 3
        assert cosine_similarity([1, 2, 2], [2, 1, 2]) == pytest.approx(8 / 9, abs=1e-15)

    def test_zero_norm_error(self):
        with pytest.raises(ZeroNormError):
            cosine_similarity([0.0, 0.0], [1.0, 0.0])

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="length"):
            cosine_similarity([1.0], [1.0, 2.0])

    def test_clamped_to_unit_interval(self, rng):
        for _ in range(200):
            a = rng.standard_normal(4)
            b = a * rng.uniform(0.1, 10)
            assert -1.0 <= cosine_similarity(a, b) <= 1.0


class TestSimilarityMatrix:
    def test_self_match_diagonal(self, rng):
        emb = rng.standard_normal((4, 6)).astype(np.float32)
        anchors = make_anchors(emb)
        sim = similarity_matrix(anchors, EmbeddingMatrix(emb))
        assert np.allclose(np.diag(sim), 1.0)

    def test_empty_commands(self, rng):
        anchors = make_anchors(rng.standard_normal((3, 4)))
        sim = similarity_matrix(anchors, EmbeddingMatrix(np.zeros((0, 4), np.float32)))
        assert sim.shape == (0, 3)

    def test_elementwise_oracle(self, rng):
        anchors_emb = rng.standard_normal((2, 3))
        commands = rng.standard_normal((2, 3))
        sim = similarity_matrix(
            make_anchors(anchors_emb),
            EmbeddingMatrix(commands.astype(np.float32)),
        )
        cmd32 = commands.astype(np.float32)
        anc32 = anchors_emb.astype(np.float32)
        for j in range(2):
            for i in range(2):
                assert sim[j, i] == pytest.approx(
                    cosine_similarity(cmd32[j], anc32[i]), abs=1e-12
                )

    def test_dimension_mismatch(self, rng):
        anchors = make_anchors(rng.standard_normal((2, 3)))
        with pytest.raises(ValueError, match="mismatch"):
            similarity_matrix(anchors, random_matrix(rng, 2, 4))

    def test_zero_norm_row_reported(self, rng):
        anchors = make_anchors(rng.standard_normal((2, 3)))
        bad = np.ones((3, 3), dtype=np.float32)
        bad[1] = 0.0
        with pytest.raises(ZeroNormError, match="row 1"):
            similarity_matrix(anchors, EmbeddingMatrix(bad))


class TestAssignment:
    def test_unique_max(self):
        assert assign_commands(np.array([[0.9, 0.2]])).tolist() == [0]

    def test_tie_breaks_low_index(self):
        assert assign_commands(np.array([[0.5, 0.5]])).tolist() == [0]

    def test_three_rows(self):
        sim = np.array([[0.9, 0.2], [0.1, 0.8], [0.7, 0.6]])
        assert assign_commands(sim).tolist() == [0, 1, 0]

    @settings(max_examples=60, deadline=None)
    @given(seed=st.integers(0, 2**16), log_alpha=st.integers(-6, 6))
    def test_scale_invariance(self, seed, log_alpha):
        # power-of-two scaling is exact in float32, so similarities and the
        # resulting assignment must be bit-identical
        alpha = 2.0**log_alpha
        r = np.random.default_rng(seed)
        anchors = make_anchors(r.standard_normal((4, 3)))
        cmd = r.standard_normal((5, 3)).astype(np.float32)
        base = assign_commands(similarity_matrix(anchors, EmbeddingMatrix(cmd)))
        scaled = assign_commands(
            similarity_matrix(anchors, EmbeddingMatrix(cmd * np.float32(alpha)))
        )
        assert base.tolist() == scaled.tolist()


class TestIntentFeatures:
    def test_known_similarity_matrix(self):
        sim = np.array([[0.9, 0.2], [0.1, 0.8], [0.7, 0.6]])
        feats = features_from_similarity(sim)
        assert feats.qty.tolist() == [2, 1]
        assert feats.qlt == pytest.approx([0.8, 0.8], abs=1e-15)

    def test_empty_session(self, rng):
        anchors = make_anchors(rng.standard_normal((3, 4)))
        feats = intent_features(anchors, EmbeddingMatrix(np.zeros((0, 4), np.float32)))
        assert feats.qty.tolist() == [0, 0, 0]
        assert feats.qlt.tolist() == [0.0, 0.0, 0.0]

    def test_perfect_self_match(self, rng):
        emb = rng.standard_normal((5, 4)).astype(np.float32)
        anchors = make_anchors(emb)
        feats = intent_features(anchors, EmbeddingMatrix(emb))
        assert feats.qty.tolist() == [1] * 5
        assert feats.qlt == pytest.approx([1.0] * 5, abs=1e-12)

    def test_dim(self, rng):
        assert intent_feature_dim(make_anchors(rng.standard_normal((34, 4)))) == 68
        assert intent_feature_dim(make_anchors(rng.standard_normal((1, 4)))) == 2
        assert intent_feature_dim(make_anchors(rng.standard_normal((2, 4)))) == 4

    def test_concatenation_layout(self):
        sim = np.array([[0.9, 0.2], [0.1, 0.8], [0.7, 0.6]])
        vec = features_from_similarity(sim).concatenated()
        assert vec == pytest.approx([2.0, 1.0, 0.8, 0.8], abs=1e-15)

    def test_brute_force_oracle(self):
        r = np.random.default_rng(777)
        for _ in range(200):
            m = int(r.integers(0, 9))
            n = int(r.integers(1, 6))
            d = int(r.integers(1, 5))
            anchors = make_anchors(r.standard_normal((n, d)))
            commands = EmbeddingMatrix(r.standard_normal((m, d)).astype(np.float32))
            sim = similarity_matrix(anchors, commands)
            feats = intent_features(anchors, commands)
            qty, qlt = brute_force_features(sim)
            assert feats.qty.tolist() == qty
            assert np.max(np.abs(feats.qlt - np.array(qlt)), initial=0.0) <= 1e-12

    @settings(max_examples=80, deadline=None)
    @given(seed=st.integers(0, 2**20), duplicate=st.booleans())
    def test_partition_invariant(self, seed, duplicate):
        r = np.random.default_rng(seed)
        m = int(r.integers(0, 12))
        n = int(r.integers(1, 7))
        d = int(r.integers(1, 5))
        anchors_emb = r.standard_normal((n, d))
        if duplicate and n >= 2:
            anchors_emb[1] = anchors_emb[0]  # exact ties across anchors
        commands = r.standard_normal((m, d))
        if duplicate and m >= 2:
            commands[1] = commands[0]
        feats = intent_features(
            make_anchors(anchors_emb), EmbeddingMatrix(commands.astype(np.float32))
        )
        assert int(feats.qty.sum()) == m

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2**20))
    def test_permutation_invariance(self, seed):
        r = np.random.default_rng(seed)
        anchors = make_anchors(r.standard_normal((4, 3)))
        commands = r.standard_normal((6, 3)).astype(np.float32)
        perm = r.permutation(6)
        a = intent_features(anchors, EmbeddingMatrix(commands))
        b = intent_features(anchors, EmbeddingMatrix(commands[perm]))
        assert a.qty.tolist() == b.qty.tolist()
        assert a.qlt == pytest.approx(b.qlt.tolist(), abs=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2**20))
    def test_qlt_bounded_by_assigned_similarities(self, seed):
        r = np.random.default_rng(seed)
        anchors = make_anchors(r.standard_normal((3, 4)))
        commands = EmbeddingMatrix(r.standard_normal((7, 4)).astype(np.float32))
        sim = similarity_matrix(anchors, commands)
        assignment = assign_commands(sim)
        feats = intent_features(anchors, commands)
        for i in range(3):
            assigned = sim[assignment == i, i]
            if assigned.size == 0:
                assert feats.qlt[i] == 0.0
            else:
                assert assigned.min() - 1e-12 <= feats.qlt[i] <= assigned.max() + 1e-12


class TestAnchorSet:
    def test_zero_norm_anchor_rejected(self):
        emb = np.ones((2, 3), dtype=np.float32)
        emb[1] = 0.0
        with pytest.raises(ZeroNormError):
            make_anchors(emb)

    def test_needs_entries(self, rng):
        with pytest.raises(ValueError):
            AnchorSet(entries=(), embeddings=random_matrix(rng, 0, 4))

    def test_row_count_must_match(self, rng):
        entries = (AnchorEntry("a", "b", "c"),)
        with pytest.raises(ValueError, match="embedding rows"):
            AnchorSet(entries=entries, embeddings=random_matrix(rng, 2, 4))
