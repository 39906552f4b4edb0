import pytest

from affmt.preprocessing import load_corpus, synth_corpus


@pytest.fixture(scope="session")
def corpus32(tmp_path_factory):
    """Small 32x32 synthetic corpus shared across training tests."""
    root = tmp_path_factory.mktemp("corpus32")
    synth_corpus(root, n_subjects=4, frames_per_subject=64, resolution=32, seed=11)
    return load_corpus(root)


@pytest.fixture(scope="session")
def corpus32_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus32_dir")
    synth_corpus(root, n_subjects=6, frames_per_subject=48, resolution=32, seed=5)
    return root
