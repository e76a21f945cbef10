"""Seeded synthetic inputs: planted transcripts, test audio, study tables."""
from __future__ import annotations

import csv
import io

import numpy as np
from scipy import signal

from .audio import AudioClip, DEFAULT_SAMPLE_RATE
from .transcript import WordEvent, normalize_token

FILLER = (
    "the a and to of in it was we that is for on with they this have but had "
    "not what all were when there can an your which their said if do will each "
    "about how up out them then she many some so these would other into has more "
    "her two time could see him day did get come made may part over new sound "
    "take only little work place year live me back give most very after thing "
    "our just name good sentence man think say great where help through much "
    "before line right too mean old any same tell boy follow came want show also "
    "around form three small set put end does another well large must big even "
    "such because turn here why ask went men read need land different home us "
    "move try kind hand picture again change off play spell air away animal "
    "house point page letter mother answer found study still learn should "
    "world high every near add food between own below country plant last school "
    "father keep tree never start city earth eye light thought head under story"
).split()


def filler_vocabulary(targets) -> list[str]:
    """Filler words sharing no token with any target phrase."""
    banned = {tok for phrase in targets for tok in (normalize_token(w) for w in phrase.split())}
    return [w for w in FILLER if w not in banned]


def planted_transcript(
    targets,
    n_words: int,
    n_planted: int,
    seed: int = 0,
    word_ms: int = 250,
    gap_ms: int = 150,
    min_spacing: int = 3,
):
    """Filler speech with ``n_planted`` target occurrences at random places.

    Returns ``(words, truth)`` where ``truth`` is a list of
    ``(phrase_id, first_index, last_index)`` in stream order.  Planted
    phrases are separated by at least ``min_spacing`` filler words.
    """
    rng = np.random.default_rng(seed)
    vocab = filler_vocabulary(targets)
    phrases = [[normalize_token(w) for w in t.split()] for t in targets]
    picks = [phrases[i] for i in rng.integers(0, len(phrases), size=n_planted)]
    planted_len = sum(len(p) for p in picks)
    n_filler = n_words - planted_len
    if n_filler < (n_planted + 1) * min_spacing:
        raise ValueError("not enough filler words to space the planted phrases")
    # distribute spare filler among the n_planted + 1 gaps
    spare = n_filler - (n_planted + 1) * min_spacing
    cuts = np.sort(rng.integers(0, spare + 1, size=n_planted))
    gaps = np.diff(np.concatenate(([0], cuts, [spare]))) + min_spacing

    tokens, truth = [], []
    for i in range(n_planted + 1):
        tokens.extend(vocab[j] for j in rng.integers(0, len(vocab), size=gaps[i]))
        if i < n_planted:
            first = len(tokens)
            tokens.extend(picks[i])
            truth.append(("_".join(picks[i]), first, len(tokens) - 1))
    words = []
    t = 0
    for tok in tokens:
        words.append(WordEvent(tok, t, t + word_ms, 0.9))
        t += word_ms + gap_ms
    return words, truth


def tone(freq_hz: float, duration_ms: float, amplitude: float = 0.5, sr: int = DEFAULT_SAMPLE_RATE) -> AudioClip:
    t = np.arange(int(round(duration_ms * sr / 1000.0))) / sr
    return AudioClip(amplitude * np.sin(2 * np.pi * freq_hz * t), sr)


def speech_surrogate(
    duration_ms: float,
    seed: int = 0,
    sr: int = DEFAULT_SAMPLE_RATE,
    formant_hz: float | None = None,
    q: float = 100.0,
) -> AudioClip:
    """Band-limited noise (300-3400 Hz) with a ~4 Hz syllabic envelope.

    With ``formant_hz`` the noise is also passed through a resonator of
    quality ``q`` so the spectrum has a well-defined dominant peak.
    """
    rng = np.random.default_rng(seed)
    n = int(round(duration_ms * sr / 1000.0))
    sos = signal.butter(4, [300, 3400], btype="bandpass", fs=sr, output="sos")
    x = signal.sosfilt(sos, rng.standard_normal(n))
    if formant_hz is not None:
        b, a = signal.iirpeak(formant_hz, q, fs=sr)
        x = signal.lfilter(b, a, x)
    t = np.arange(n) / sr
    rate = rng.uniform(3.0, 5.0)
    env = 0.55 + 0.45 * np.sin(2 * np.pi * rate * t + rng.uniform(0, 2 * np.pi))
    x = x * env
    return AudioClip(0.8 * x / np.max(np.abs(x)), sr)


def synthetic_study(
    n_per_group: int = 12,
    slopes=(-0.05, 0.0),
    noise: float = 0.01,
    seed: int = 0,
    groups=("A", "B"),
    sessions: int = 8,
    with_ratio: bool = True,
):
    """Rows of a ``participant,system,S1..S8[,SP1..SP8]`` table.

    Each participant's raw frequency follows ``base * (1 + slope * (n - 1))``
    plus Gaussian noise of relative size ``noise``; S1 is taken as exact.
    """
    rng = np.random.default_rng(seed)
    rows = []
    for g, slope in zip(groups, slopes):
        for k in range(n_per_group):
            base = rng.uniform(1.0, 4.0)
            n = np.arange(1, sessions + 1)
            s = 1.0 + slope * (n - 1) + rng.normal(0.0, noise, size=sessions)
            s[0] = 1.0
            row = {"participant": f"{g}{k + 1:02d}", "system": g}
            row.update({f"S{i}": base * s[i - 1] for i in n})
            if with_ratio:
                sp = 1.0 + slope * (n - 1) + rng.normal(0.0, noise, size=sessions)
                sp[0] = 1.0
                row.update({f"SP{i}": 0.02 * sp[i - 1] for i in n})
            rows.append(row)
    return rows


def study_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(float(v)) if isinstance(v, (float, np.floating)) else v) for k, v in r.items()})
    return buf.getvalue()
