"""Shared fixtures: a deterministic synthetic word corpus and default config."""

import pytest

from speechservo.config import Config
from speechservo.pipeline import train_from_files, utterance_features
from speechservo.store import save_vocabulary
from speechservo.synth import WORDS, write_corpus

CORPUS_SEED = 7
PER_LABEL = 4


@pytest.fixture(scope="session")
def corpus_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("corpus")
    write_corpus(d, per_label=PER_LABEL, seed=CORPUS_SEED)
    return d


@pytest.fixture(scope="session")
def corpus_files(corpus_dir):
    return {
        label: [corpus_dir / f"{label}_{k:02d}.wav" for k in range(PER_LABEL)]
        for label in sorted(WORDS)
    }


@pytest.fixture(scope="session")
def session_cfg():
    return Config()


@pytest.fixture()
def cfg():
    return Config()


@pytest.fixture(scope="session")
def trained_vocab(corpus_files, session_cfg, tmp_path_factory):
    """Vocabulary trained once from the session corpus, saved to disk."""
    path = tmp_path_factory.mktemp("vocab") / "trained.avtp"
    templates = {
        label: train_from_files(files, label, session_cfg)
        for label, files in corpus_files.items()
    }
    save_vocabulary(templates, path)
    return path, templates


@pytest.fixture(scope="session")
def corpus_features(corpus_files, session_cfg):
    """Per-file feature sequences for the whole corpus, computed once."""
    return {
        label: [utterance_features(p, session_cfg) for p in files]
        for label, files in corpus_files.items()
    }
