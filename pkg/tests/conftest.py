import numpy as np
import pytest

from vascreen.core import (
    Command,
    CommandStatus,
    MocaAssessment,
    Session,
    Speaker,
    Task,
)
from vascreen.ingest import EmbeddingMatrix


def make_moca(total=27, **overrides):
    fields = dict(
        total=total,
        memory=10,
        executive_function=9,
        attention=12,
        language=4,
        visuospatial=5,
        orientation=5,
    )
    fields.update(overrides)
    return MocaAssessment(**fields)


def ok_command(i, row=None, speaker=Speaker.PARTICIPANT):
    return Command(
        command_id=f"c{i:03d}",
        speaker=speaker,
        transcript=f"command number {i}",
        status=CommandStatus.OK,
        embedding_row=i if row is None else row,
    )


def make_session(commands, audio=None, textual=None, task=Task.GENERATION, **kw):
    fields = dict(
        participant_id="p000",
        session_index=1,
        task=task,
        commands=tuple(commands),
        moca=make_moca(),
        audio_embeddings=audio,
        textual_embeddings=textual,
    )
    fields.update(kw)
    return Session(**fields)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_matrix(rng, rows, cols):
    return EmbeddingMatrix(rng.standard_normal((rows, cols)).astype(np.float32))
