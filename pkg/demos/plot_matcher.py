"""
Spotting unwanted words in a word stream
=========================================

Feed timestamped words one at a time and watch detections appear.
"""

from speechcoach import WordEvent, compile_targets
from speechcoach.transcript import StreamState, flush_stream, ingest_segment, match_stream

targets = compile_targets(["um", "you know", "know", "kind of"])

# a short utterance; "you know" and the bare "know" overlap on purpose
text = "so um you know I kind of know it"
words = [WordEvent(w, 400 * i, 400 * i + 300) for i, w in enumerate(text.split())]

state = StreamState()
for word in words:
    for accepted in ingest_segment(state, [word], finalized=True):
        for det in match_stream(state, accepted, targets, now_ms=accepted.end_ms):
            print(f"{accepted.end_ms:>5} ms  {det.phrase_id:<10} tokens {det.matched_token_span}")

# anything still waiting for a longer match is resolved here
for det in flush_stream(state, targets, now_ms=words[-1].end_ms):
    print(f"  end     {det.phrase_id:<10} tokens {det.matched_token_span}")
