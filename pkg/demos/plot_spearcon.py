"""
Building a spearcon
===================

Compress a spoken phrase to 40% of its length without moving its pitch.
"""

import tempfile

from speechcoach import build_spearcon, dominant_frequency, time_compress
from speechcoach.corpus import speech_surrogate, tone
from speechcoach.spearcon import SpearconCache

# a pure tone shows the pitch is kept
src = tone(440, 1000)
out = time_compress(src, 0.4)
print(f"tone: {src.duration_ms:.0f} ms -> {out.duration_ms:.0f} ms, "
      f"{dominant_frequency(src):.1f} Hz -> {dominant_frequency(out):.1f} Hz")

# a long phrase is held to the 1 s cap by compressing harder
phrase = speech_surrogate(3000, seed=1, formant_hz=900)
asset = build_spearcon("you_know", phrase)
print(f"phrase: {phrase.duration_ms:.0f} ms -> {asset.duration_ms:.0f} ms "
      f"(factor used {asset.compression_factor:.3f}), peak {asset.clip.peak:.3f}")

# assets can live in an on-disk cache with a manifest
with tempfile.TemporaryDirectory() as root:
    cache = SpearconCache(root)
    build_spearcon("um", speech_surrogate(700, seed=2), cache=cache)
    print("cached:", cache.ids(), cache.get("um").duration_ms, "ms")
