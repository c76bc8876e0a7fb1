"""Cognitive screening from voice-assistant command sessions.

Batch pipeline: ingest session manifests and embedding files, compute
intent/audio/textual/fusion features, train classical learners under
nested cross-validation, and report classification metrics and
assessment-subdomain regression errors. A seeded cohort simulator makes
the whole pipeline testable without clinical data.
"""

from vascreen.core import (
    Cohort,
    Command,
    DiagnosisLabel,
    MocaAssessment,
    Session,
    Task,
    label_from_moca,
    participant_command_count,
)
from vascreen.ingest import (
    EmbeddingMatrix,
    parse_manifest,
    preprocess,
    read_embedding_file,
    write_embedding_file,
)
from vascreen.intent import AnchorSet, IntentFeatureVector, cosine_similarity, intent_features
from vascreen.fusion import FeatureMode, FeatureVector, build_feature_vector, mean_embedding

__version__ = "0.1.0"

__all__ = [
    "AnchorSet",
    "Cohort",
    "Command",
    "DiagnosisLabel",
    "EmbeddingMatrix",
    "FeatureMode",
    "FeatureVector",
    "IntentFeatureVector",
    "MocaAssessment",
    "Session",
    "Task",
    "build_feature_vector",
    "cosine_similarity",
    "intent_features",
    "label_from_moca",
    "mean_embedding",
    "parse_manifest",
    "participant_command_count",
    "preprocess",
    "read_embedding_file",
    "write_embedding_file",
]
