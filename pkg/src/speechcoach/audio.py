"""Mono audio clips and 16-bit PCM WAV I/O."""
from __future__ import annotations

import wave
from dataclasses import dataclass

import numpy as np

from .errors import WavFormatError

DEFAULT_SAMPLE_RATE = 16000
_PCM16_SCALE = 32768.0


@dataclass(frozen=True, eq=False)
class AudioClip:
    samples: np.ndarray
    sample_rate_hz: int = DEFAULT_SAMPLE_RATE

    def __post_init__(self):
        x = np.asarray(self.samples, dtype=np.float64)
        if x.ndim != 1:
            raise ValueError("AudioClip is mono: samples must be 1-D")
        if x.size < 1:
            raise ValueError("AudioClip needs at least one sample")
        if not np.all(np.isfinite(x)):
            raise ValueError("AudioClip samples must be finite")
        if np.max(np.abs(x)) > 1.0 + 1e-9:
            raise ValueError("AudioClip samples must lie in [-1, 1]")
        if self.sample_rate_hz <= 0:
            raise ValueError("sample rate must be positive")
        x.setflags(write=False)
        object.__setattr__(self, "samples", x)

    channels = 1

    def __len__(self):
        return self.samples.size

    @property
    def duration_ms(self) -> float:
        return 1000.0 * self.samples.size / self.sample_rate_hz

    @property
    def peak(self) -> float:
        return float(np.max(np.abs(self.samples)))

    @property
    def rms(self) -> float:
        return float(np.sqrt(np.mean(self.samples**2)))


def resample_linear(x: np.ndarray, src_rate: int, dst_rate: int) -> np.ndarray:
    if src_rate == dst_rate:
        return np.asarray(x, dtype=np.float64)
    n_out = max(1, int(round(len(x) * dst_rate / src_rate)))
    t_out = np.arange(n_out) * (src_rate / dst_rate)
    return np.interp(t_out, np.arange(len(x)), x)


def read_wav(path, target_rate: int = DEFAULT_SAMPLE_RATE) -> AudioClip:
    """Read a mono PCM16 WAV, resampling to ``target_rate`` if needed."""
    try:
        with wave.open(str(path), "rb") as wf:
            channels = wf.getnchannels()
            width = wf.getsampwidth()
            rate = wf.getframerate()
            raw = wf.readframes(wf.getnframes())
    except (wave.Error, EOFError) as exc:
        raise WavFormatError(f"{path}: {exc}") from None
    if channels != 1:
        raise WavFormatError(f"{path}: expected mono, got {channels} channels")
    if width != 2:
        raise WavFormatError(f"{path}: expected 16-bit PCM, got {8 * width}-bit")
    data = np.frombuffer(raw, dtype="<i2").astype(np.float64) / _PCM16_SCALE
    if data.size == 0:
        raise WavFormatError(f"{path}: no samples")
    data = resample_linear(data, rate, target_rate)
    return AudioClip(np.clip(data, -1.0, 1.0), target_rate)


def write_wav(path, clip: AudioClip) -> None:
    """Write ``clip`` as mono PCM16 at 16 kHz."""
    x = clip.samples
    if clip.sample_rate_hz != DEFAULT_SAMPLE_RATE:
        x = resample_linear(x, clip.sample_rate_hz, DEFAULT_SAMPLE_RATE)
    pcm = np.clip(np.round(x * _PCM16_SCALE), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(DEFAULT_SAMPLE_RATE)
        wf.writeframes(pcm.tobytes())
