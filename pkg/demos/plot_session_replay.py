"""
Replaying a coaching session in virtual time
============================================

Planted fillers, a fixed recognizer delay and a 280 ms output link.
"""

import warnings

from speechcoach import FeedbackPolicy, compile_targets, run_session
from speechcoach.corpus import planted_transcript, speech_surrogate
from speechcoach.scheduler import Fixed, LatencyBandWarning, RecordingSink, UniformRange
from speechcoach.spearcon import build_spearcon

phrases = ["um", "you know"]
targets = compile_targets(phrases)
words, truth = planted_transcript(phrases, n_words=300, n_planted=15, seed=5)
assets = {p.id: build_spearcon(p.id, speech_surrogate(600, seed=i)) for i, p in enumerate(targets)}

# 280 ms sits outside the usual output band, which only warns
with warnings.catch_warnings():
    warnings.simplefilter("ignore", LatencyBandWarning)
    policy = FeedbackPolicy(output_latency_ms=280)

rec = run_session(words, targets, policy, assets, latency_model=Fixed(810))
print("planted", len(truth), "| tally", rec.tally())
print("mean cue latency", rec.mean_feedback_latency_ms(), "ms")

# a slow, jittery recognizer pushes some cues past the 2 s budget
sink = RecordingSink()
rec = run_session(words, targets, FeedbackPolicy(), assets, sink=sink,
                  latency_model=UniformRange(380, 1950, seed=1))
print("jittery tally", rec.tally())
for pid, start, end in sink.played[:5]:
    print(f"  {pid:<9} {start:>6}-{end} ms")
print(f"speaking time {rec.speaking_time_ms / 1000:.1f} s, {rec.total_word_count} words")
