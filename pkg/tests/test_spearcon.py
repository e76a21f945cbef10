import json
import wave

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from speechcoach.audio import AudioClip, read_wav, resample_linear, write_wav
from speechcoach.corpus import speech_surrogate, tone
from speechcoach.errors import ClipTooShort, InvalidFactor, MissingAsset, SilentClip, WavFormatError
from speechcoach.spearcon import (
    SpearconCache,
    build_spearcon,
    dominant_frequency,
    peak_normalize,
    time_compress,
)

SR = 16000


def dft_peak(x, sr, lo=50.0, hi=4000.0):
    """Oracle: brute-force DTFT magnitude scan, coarse 1 Hz grid then 0.01 Hz."""
    n = np.arange(x.size)

    def mag(freqs):
        return np.abs(np.exp(-2j * np.pi * np.outer(freqs, n) / sr) @ x)

    coarse = np.arange(lo, hi, 1.0)
    f0 = coarse[np.argmax(mag(coarse))]
    fine = np.arange(f0 - 1.0, f0 + 1.0, 0.01)
    return float(fine[np.argmax(mag(fine))])


# -- time_compress ------------------------------------------------------------

def test_compress_to_forty_percent():
    out = time_compress(speech_surrogate(1000, seed=1), 0.4)
    assert abs(out.duration_ms - 400) <= 20


def test_near_identity():
    src = speech_surrogate(800, seed=2)
    out = time_compress(src, 0.999)
    assert abs(out.duration_ms / src.duration_ms - 1) < 0.002
    m = len(out)
    assert np.corrcoef(out.samples, src.samples[:m])[0, 1] > 0.99


def test_pitch_preserved_sine_against_dft_oracle():
    out = time_compress(tone(440, 1000), 0.4)
    assert abs(dft_peak(out.samples, SR) - 440) <= 0.02 * 440


@pytest.mark.parametrize("factor", [0.0, 1.0, 1.2, -0.3])
def test_invalid_factor(factor):
    with pytest.raises(InvalidFactor):
        time_compress(tone(440, 500), factor)


def test_clip_too_short():
    with pytest.raises(ClipTooShort):
        time_compress(tone(440, 50), 0.5)
    # input long enough but output would be under two frames
    with pytest.raises(ClipTooShort):
        time_compress(tone(440, 100), 0.4)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.3, 0.9), st.integers(300, 3000), st.integers(0, 10_000))
def test_duration_contract(factor, dur_ms, seed):
    src = speech_surrogate(dur_ms, seed=seed)
    out = time_compress(src, factor)
    assert abs(out.duration_ms / (factor * src.duration_ms) - 1) <= 0.05
    assert out.rms > 0


@settings(max_examples=40, deadline=None)
@given(st.floats(200, 1000), st.floats(0.3, 0.9))
def test_pitch_contract(freq, factor):
    out = time_compress(tone(freq, 1000), factor)
    assert abs(dominant_frequency(out) / freq - 1) <= 0.02


# -- peak_normalize -------------------------------------------------------------

def test_peak_normalize_arithmetic():
    x = np.sin(np.linspace(0, 20, 4000))
    clip = AudioClip(0.5 * x / np.max(np.abs(x)))
    assert clip.peak == 0.5
    out = peak_normalize(clip, -3.0)
    assert out.peak == pytest.approx(10 ** (-3 / 20), rel=1e-12)
    assert out.peak == pytest.approx(0.70795, abs=1e-5)


def test_peak_normalize_idempotent():
    once = peak_normalize(speech_surrogate(500, seed=4))
    twice = peak_normalize(once)
    assert abs(20 * np.log10(twice.peak / once.peak)) <= 0.5
    assert np.allclose(once.samples, twice.samples)


def test_peak_normalize_silent():
    with pytest.raises(SilentClip):
        peak_normalize(AudioClip(np.zeros(100)))


# -- build_spearcon -------------------------------------------------------------

def test_build_default_factor():
    asset = build_spearcon("like", speech_surrogate(1000, seed=5))
    assert asset.duration_ms == pytest.approx(400, abs=20)
    assert asset.compression_factor == 0.4
    assert 20 * np.log10(asset.clip.peak) == pytest.approx(-3.0, abs=0.5)


def test_build_cap_recompresses():
    asset = build_spearcon("so", speech_surrogate(3000, seed=6))
    assert asset.duration_ms <= 1000
    assert asset.duration_ms == pytest.approx(1000, rel=0.05)
    assert asset.compression_factor == pytest.approx(1 / 3)


def test_build_too_short():
    with pytest.raises(ClipTooShort):
        build_spearcon("um", speech_surrogate(100, seed=7))


@settings(max_examples=25, deadline=None)
@given(st.integers(300, 6000), st.floats(0.3, 0.9))
def test_every_asset_respects_cap(dur_ms, factor):
    asset = build_spearcon("x", speech_surrogate(dur_ms, seed=dur_ms), factor=factor)
    assert asset.duration_ms <= 1000


# -- dominant_frequency ---------------------------------------------------------

def test_dominant_frequency_examples():
    assert dominant_frequency(tone(440, 1000)) == pytest.approx(440, abs=2)
    # silence followed by a 1 kHz tone
    x = np.concatenate([np.zeros(4000), tone(1000, 500).samples])
    assert dominant_frequency(AudioClip(x)) == pytest.approx(1000, abs=5)


def test_dominant_frequency_errors():
    with pytest.raises(ClipTooShort):
        dominant_frequency(tone(440, 50))
    with pytest.raises(SilentClip):
        dominant_frequency(AudioClip(np.zeros(4000)))


@pytest.mark.parametrize("freq", [203.7, 317.0, 555.5, 880.0, 999.0])
def test_dominant_frequency_matches_dft_oracle(freq):
    clip = tone(freq, 400)
    assert dominant_frequency(clip) == pytest.approx(dft_peak(clip.samples, SR), abs=0.5)


# -- WAV I/O and cache ------------------------------------------------------------

def test_wav_round_trip(tmp_path):
    clip = speech_surrogate(300, seed=8)
    write_wav(tmp_path / "a.wav", clip)
    back = read_wav(tmp_path / "a.wav")
    assert back.sample_rate_hz == SR and len(back) == len(clip)
    assert np.max(np.abs(back.samples - clip.samples)) < 1 / 32768 + 1e-12


def _write_raw(path, data, rate, channels=1, width=2):
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(channels)
        wf.setsampwidth(width)
        wf.setframerate(rate)
        wf.writeframes(data)


def test_wav_resamples_other_rates(tmp_path):
    t = np.arange(8000) / 8000
    pcm = (0.5 * np.sin(2 * np.pi * 300 * t) * 32767).astype("<i2")
    _write_raw(tmp_path / "8k.wav", pcm.tobytes(), 8000)
    clip = read_wav(tmp_path / "8k.wav")
    assert clip.sample_rate_hz == SR and len(clip) == 16000
    assert dominant_frequency(clip) == pytest.approx(300, abs=3)


def test_wav_rejects_stereo_and_8bit(tmp_path):
    _write_raw(tmp_path / "s.wav", b"\x00\x00" * 200, SR, channels=2)
    with pytest.raises(WavFormatError):
        read_wav(tmp_path / "s.wav")
    _write_raw(tmp_path / "b.wav", b"\x80" * 200, SR, width=1)
    with pytest.raises(WavFormatError):
        read_wav(tmp_path / "b.wav")
    (tmp_path / "junk.wav").write_bytes(b"not a wav")
    with pytest.raises(WavFormatError):
        read_wav(tmp_path / "junk.wav")


def test_resample_linear_identity_and_length():
    x = np.arange(10.0)
    assert np.array_equal(resample_linear(x, SR, SR), x)
    assert resample_linear(x, 8000, 16000).size == 20


def test_audio_clip_invariants():
    with pytest.raises(ValueError):
        AudioClip(np.zeros((2, 10)))
    with pytest.raises(ValueError):
        AudioClip(np.array([0.1, np.nan]))
    with pytest.raises(ValueError):
        AudioClip(np.array([]))
    with pytest.raises(ValueError):
        AudioClip(np.array([1.5]))


def test_cache_layout_and_reload(tmp_path):
    cache = SpearconCache(tmp_path / "cache")
    build_spearcon("you_know", speech_surrogate(900, seed=9), cache=cache, source_name="you_know.wav")
    manifest = json.loads((tmp_path / "cache" / "manifest.json").read_text())
    assert set(manifest) == {"you_know"}
    assert manifest["you_know"]["source"] == "you_know.wav"
    assert manifest["you_know"]["factor"] == 0.4
    assert (tmp_path / "cache" / "you_know.wav").is_file()

    fresh = SpearconCache(tmp_path / "cache")
    asset = fresh.get("you_know")
    assert asset.duration_ms == pytest.approx(manifest["you_know"]["duration_ms"], abs=0.1)
    with pytest.raises(MissingAsset):
        fresh.get("like")
