import numpy as np
import pytest

from vascreen.fusion import (
    FeatureMode,
    MissingComponentError,
    build_feature_vector,
    component_slices,
    expected_dim,
    mean_embedding,
    mode_components,
    session_feature_vector,
)
from vascreen.ingest import EmbeddingMatrix
from vascreen.intent import IntentFeatureVector

from .conftest import make_session, ok_command, random_matrix
from .test_intent import make_anchors

PAPER_DIMS = {
    FeatureMode.INTENT: 68,
    FeatureMode.AUDIO: 1024,
    FeatureMode.TEXTUAL: 768,
    FeatureMode.FF1: 1092,
    FeatureMode.FF2: 836,
    FeatureMode.FF3: 1792,
    FeatureMode.FF4: 1860,
}


class TestMeanEmbedding:
    def test_single_row_identity(self):
        m = EmbeddingMatrix(np.array([[3.0, 5.0]], dtype=np.float32))
        assert mean_embedding(m).tolist() == [3.0, 5.0]

    def test_hand_arithmetic(self):
        m = EmbeddingMatrix(np.array([[1, 3], [3, 5]], dtype=np.float32))
        assert mean_embedding(m).tolist() == [2.0, 4.0]

    def test_constant_matrix(self, rng):
        v = rng.standard_normal(5).astype(np.float32)
        m = EmbeddingMatrix(np.tile(v, (7, 1)))
        assert mean_embedding(m) == pytest.approx(v.astype(np.float64), abs=1e-12)

    def test_empty_error(self):
        with pytest.raises(ValueError, match="empty"):
            mean_embedding(EmbeddingMatrix(np.zeros((0, 4), np.float32)))

    def test_permutation_commutes(self, rng):
        m = random_matrix(rng, 6, 4)
        perm = rng.permutation(6)
        a = mean_embedding(m)
        b = mean_embedding(EmbeddingMatrix(m.data[perm]))
        assert a == pytest.approx(b.tolist(), abs=1e-12)


class TestBuildFeatureVector:
    def intent_vec(self):
        return IntentFeatureVector(qty=np.array([2, 1]), qlt=np.array([0.8, 0.8]))

    def test_intent_layout(self):
        fv = build_feature_vector(FeatureMode.INTENT, intent=self.intent_vec())
        assert fv.values.tolist() == [2.0, 1.0, 0.8, 0.8]
        assert fv.dim == 4

    def test_ff4_dim_34_anchors(self, rng):
        intent = IntentFeatureVector(
            qty=np.zeros(34, dtype=np.int64), qlt=np.zeros(34)
        )
        fv = build_feature_vector(
            FeatureMode.FF4,
            intent=intent,
            audio_mean=rng.standard_normal(1024),
            textual_mean=rng.standard_normal(768),
        )
        assert fv.dim == 1860

    def test_ff1_without_textual(self, rng):
        fv = build_feature_vector(
            FeatureMode.FF1,
            intent=self.intent_vec(),
            audio_mean=rng.standard_normal(6),
        )
        assert fv.dim == 10

    def test_ff3_missing_audio(self, rng):
        with pytest.raises(MissingComponentError, match="audio"):
            build_feature_vector(
                FeatureMode.FF3, textual_mean=rng.standard_normal(6)
            )

    def test_concatenation_order(self, rng):
        audio = rng.standard_normal(3)
        textual = rng.standard_normal(2)
        fv = build_feature_vector(
            FeatureMode.FF4,
            intent=self.intent_vec(),
            audio_mean=audio,
            textual_mean=textual,
        )
        assert fv.values[:4].tolist() == [2.0, 1.0, 0.8, 0.8]
        assert fv.values[4:7] == pytest.approx(audio.tolist())
        assert fv.values[7:] == pytest.approx(textual.tolist())


class TestDims:
    @pytest.mark.parametrize("mode", list(FeatureMode))
    def test_paper_widths(self, mode):
        assert expected_dim(mode, 34, 1024, 768) == PAPER_DIMS[mode]

    @pytest.mark.parametrize("mode", list(FeatureMode))
    @pytest.mark.parametrize("n,da,dt", [(1, 8, 8), (5, 16, 12), (34, 1024, 768)])
    def test_additivity(self, mode, n, da, dt):
        widths = {"intent": 2 * n, "audio": da, "textual": dt}
        assert expected_dim(mode, n, da, dt) == sum(
            widths[c] for c in mode_components(mode)
        )

    def test_component_recoverability(self, rng):
        n, da, dt = 3, 5, 4
        intent = IntentFeatureVector(
            qty=rng.integers(0, 4, n), qlt=np.zeros(n)
        )
        audio = rng.standard_normal(da)
        textual = rng.standard_normal(dt)
        fv = build_feature_vector(
            FeatureMode.FF4, intent=intent, audio_mean=audio, textual_mean=textual
        )
        slices = component_slices(FeatureMode.FF4, n, da, dt)
        assert fv.values[slices["intent"]] == pytest.approx(
            intent.concatenated().tolist()
        )
        assert fv.values[slices["audio"]] == pytest.approx(audio.tolist())
        assert fv.values[slices["textual"]] == pytest.approx(textual.tolist())


class TestSessionFeatures:
    def test_full_session(self, rng):
        anchors = make_anchors(rng.standard_normal((3, 4)))
        session = make_session(
            [ok_command(i) for i in range(5)],
            audio=random_matrix(rng, 5, 6),
            textual=random_matrix(rng, 5, 4),
        )
        fv = session_feature_vector(session, anchors, FeatureMode.FF4)
        assert fv.dim == 6 + 6 + 4

    def test_missing_audio_named(self, rng):
        anchors = make_anchors(rng.standard_normal((3, 4)))
        session = make_session(
            [ok_command(0)], textual=random_matrix(rng, 1, 4)
        )
        with pytest.raises(MissingComponentError, match="audio"):
            session_feature_vector(session, anchors, FeatureMode.FF1)
