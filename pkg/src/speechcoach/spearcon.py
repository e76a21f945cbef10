"""Spearcon synthesis: pitch-preserving time compression of spoken phrases.

Time compression is a waveform-similarity overlap-add.  Output frames are
laid down every ``hop`` samples; each is cut from the input near its
nominal (time-scaled) position, shifted within a small search window to the
offset whose normalized cross-correlation with the natural continuation of
the previous frame is highest.  Frames are Hann-windowed and the sum is
divided by the accumulated window weight.
"""
from __future__ import annotations

import json
import math
import threading
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .audio import AudioClip, read_wav, write_wav
from .errors import ClipTooShort, InvalidFactor, MissingAsset, SilentClip

FRAME_MS = 30.0
SEARCH_MS = 7.5
DEFAULT_FACTOR = 0.4
DEFAULT_MAX_DURATION_MS = 1000
DEFAULT_TARGET_DBFS = -3.0
MIN_ANALYSIS_MS = 100.0


@dataclass(frozen=True, eq=False)
class SpearconAsset:
    phrase_id: str
    clip: AudioClip
    compression_factor: float

    def __post_init__(self):
        if not 0.0 < self.compression_factor <= 1.0:
            raise InvalidFactor(f"compression factor {self.compression_factor} outside (0, 1]")

    @property
    def duration_ms(self) -> float:
        return self.clip.duration_ms


def _frame_params(sample_rate):
    frame = int(round(FRAME_MS * sample_rate / 1000.0))
    search = int(round(SEARCH_MS * sample_rate / 1000.0))
    return frame, frame // 2, search


def time_compress(clip: AudioClip, factor: float) -> AudioClip:
    """Shorten ``clip`` to ``factor`` of its duration without changing pitch.

    Raises ClipTooShort if either the input or the output would span fewer
    than two analysis frames (60 ms at the default frame size).
    """
    if not (isinstance(factor, (int, float)) and 0.0 < factor < 1.0):
        raise InvalidFactor(f"factor must be in (0, 1), got {factor!r}")
    sr = clip.sample_rate_hz
    frame, hop, search = _frame_params(sr)
    x = clip.samples
    n_in = x.size
    n_out = int(round(factor * n_in))
    if n_in < 2 * frame:
        raise ClipTooShort(f"input {clip.duration_ms:.1f} ms shorter than {2 * FRAME_MS:.0f} ms")
    if n_out < 2 * frame:
        raise ClipTooShort(
            f"output {1000.0 * n_out / sr:.1f} ms at factor {factor} shorter than {2 * FRAME_MS:.0f} ms"
        )

    win = np.hanning(frame + 1)[:-1]
    out_positions = list(range(0, n_out - frame, hop)) + [n_out - frame]
    scale = (n_in - frame) / (n_out - frame)

    acc = np.zeros(n_out)
    wsum = np.zeros(n_out)
    prev_in = prev_out = None
    for out_pos in out_positions:
        nominal = min(n_in - frame, int(round(out_pos * scale)))
        if prev_in is None:
            pos = nominal
        else:
            natural = min(prev_in + (out_pos - prev_out), n_in - frame)
            target = x[natural : natural + frame]
            lo = max(0, nominal - search)
            hi = min(n_in - frame, nominal + search)
            pos = lo + _best_offset(x[lo : hi + frame], target)
        acc[out_pos : out_pos + frame] += x[pos : pos + frame] * win
        wsum[out_pos : out_pos + frame] += win
        prev_in, prev_out = pos, out_pos

    y = np.divide(acc, wsum, out=np.zeros_like(acc), where=wsum > 1e-12)
    return AudioClip(np.clip(y, -1.0, 1.0), sr)


def _best_offset(region, target):
    corr = np.correlate(region, target, mode="valid")
    sq = np.concatenate(([0.0], np.cumsum(region * region)))
    n = target.size
    energy = np.sqrt(np.maximum(sq[n:] - sq[:-n], 0.0))
    score = corr / (energy + 1e-12)
    return int(np.argmax(score))


def peak_normalize(clip: AudioClip, target_dbfs: float = DEFAULT_TARGET_DBFS) -> AudioClip:
    if target_dbfs > 0:
        raise ValueError("target_dbfs must be <= 0")
    peak = clip.peak
    if peak == 0.0:
        raise SilentClip("cannot normalize an all-zero clip")
    gain = 10.0 ** (target_dbfs / 20.0) / peak
    return AudioClip(np.clip(clip.samples * gain, -1.0, 1.0), clip.sample_rate_hz)


def build_spearcon(
    phrase_id: str,
    source: AudioClip,
    factor: float = DEFAULT_FACTOR,
    max_duration_ms: float = DEFAULT_MAX_DURATION_MS,
    target_dbfs: float = DEFAULT_TARGET_DBFS,
    cache: "SpearconCache | None" = None,
    source_name: str | None = None,
) -> SpearconAsset:
    """Compress, cap and normalize one spoken phrase into a spearcon.

    If the compressed clip would still exceed ``max_duration_ms``, the
    original is recompressed to exactly the cap rather than truncated.
    """
    compressed = time_compress(source, factor)
    used = factor
    if compressed.duration_ms > max_duration_ms:
        used = max_duration_ms / source.duration_ms
        compressed = time_compress(source, used)
    asset = SpearconAsset(phrase_id, peak_normalize(compressed, target_dbfs), used)
    if cache is not None:
        cache.put(asset, source_name or f"{phrase_id}.wav")
    return asset


def dominant_frequency(clip: AudioClip) -> float:
    """Frequency (Hz) of the strongest spectral peak, excluding DC.

    Hann window over the whole clip, zero-padded transform, parabolic
    interpolation of log magnitude around the peak bin.
    """
    if clip.duration_ms < MIN_ANALYSIS_MS:
        raise ClipTooShort(f"need >= {MIN_ANALYSIS_MS:.0f} ms, got {clip.duration_ms:.1f} ms")
    if clip.peak == 0.0:
        raise SilentClip("dominant frequency of silence is undefined")
    x = clip.samples * np.hanning(clip.samples.size)
    nfft = 1 << int(math.ceil(math.log2(4 * x.size)))
    mag = np.abs(np.fft.rfft(x, nfft))
    k = int(np.argmax(mag[1:])) + 1
    delta = 0.0
    if 1 <= k < mag.size - 1:
        a, b, c = np.log(mag[k - 1 : k + 2] + 1e-300)
        denom = a - 2 * b + c
        if denom != 0:
            delta = 0.5 * (a - c) / denom
    return (k + delta) * clip.sample_rate_hz / nfft


class SpearconCache:
    """Directory of built assets: ``<phrase_id>.wav`` plus ``manifest.json``.

    Reads are lock-free; insertion takes an exclusive lock.
    """

    MANIFEST = "manifest.json"

    def __init__(self, root):
        self.root = Path(root)
        self._lock = threading.Lock()
        self._assets: dict[str, SpearconAsset] = {}
        path = self.root / self.MANIFEST
        self.manifest: dict[str, dict] = json.loads(path.read_text()) if path.exists() else {}

    def __contains__(self, phrase_id):
        return phrase_id in self.manifest

    def ids(self):
        return sorted(self.manifest)

    def put(self, asset: SpearconAsset, source_name: str) -> None:
        with self._lock:
            self.root.mkdir(parents=True, exist_ok=True)
            write_wav(self.root / f"{asset.phrase_id}.wav", asset.clip)
            self._assets[asset.phrase_id] = asset
            self.manifest[asset.phrase_id] = {
                "source": source_name,
                "factor": round(asset.compression_factor, 6),
                "duration_ms": round(asset.duration_ms, 3),
            }
            (self.root / self.MANIFEST).write_text(json.dumps(self.manifest, indent=2, sort_keys=True) + "\n")

    def get(self, phrase_id: str) -> SpearconAsset:
        asset = self._assets.get(phrase_id)
        if asset is not None:
            return asset
        if phrase_id not in self.manifest:
            raise MissingAsset(f"no spearcon asset for phrase {phrase_id!r}")
        clip = read_wav(self.root / f"{phrase_id}.wav")
        asset = SpearconAsset(phrase_id, clip, self.manifest[phrase_id]["factor"])
        self._assets[phrase_id] = asset
        return asset
