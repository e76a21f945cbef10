import numpy as np
import pytest

from speechcoach.audio import AudioClip
from speechcoach.spearcon import SpearconAsset


def make_cue(phrase_id, ms, sr=16000):
    """Constant-amplitude stand-in asset of exactly ``ms`` milliseconds."""
    return SpearconAsset(phrase_id, AudioClip(np.full(int(ms * sr / 1000), 0.1), sr), 0.4)


@pytest.fixture
def cues():
    def build(targets, ms=280):
        return {p.id: make_cue(p.id, ms) for p in targets}

    return build


_acceptance_lines = []


@pytest.fixture
def acceptance_log():
    return _acceptance_lines


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)
