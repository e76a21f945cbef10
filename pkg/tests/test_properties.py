"""Invariant suite; every property runs at least 1000 generated cases."""
from hypothesis import given, settings, strategies as st

from speechcoach.analytics import normalize_series
from speechcoach.stats import cohens_kappa, mann_whitney_u
from speechcoach.transcript import WordEvent, compile_targets, detect_all, speaking_time

N_CASES = 1000
many = settings(max_examples=N_CASES, deadline=None)

positive = st.floats(1e-3, 1e3, allow_nan=False)


@many
@given(st.lists(positive, min_size=1, max_size=8))
def test_first_session_is_one(f):
    assert normalize_series(f).values[0] == 1.0


@many
@given(st.lists(positive, min_size=1, max_size=8), st.floats(1e-3, 1e3))
def test_normalized_series_scale_invariant(f, c):
    a = normalize_series(f).values
    b = normalize_series([c * v for v in f]).values
    assert all(abs(x - y) <= 1e-12 * max(1.0, abs(x)) for x, y in zip(a, b))


samples = st.lists(st.integers(0, 9), min_size=1, max_size=12)


@many
@given(samples, samples)
def test_u_complement(a, b):
    ua, ub = mann_whitney_u(a, b).U, mann_whitney_u(b, a).U
    assert ua + ub == len(a) * len(b)


@many
@given(st.data())
def test_kappa_bounds(data):
    a = data.draw(st.lists(st.sampled_from("abcd"), min_size=1, max_size=40))
    b = data.draw(st.lists(st.sampled_from("abcd"), min_size=len(a), max_size=len(a)))
    r = cohens_kappa(a, b)
    assert -1 - 1e-12 <= r.kappa <= 1 + 1e-12
    if a == b:
        assert r.kappa == 1.0


@st.composite
def timelines(draw):
    words, t = [], 0
    for _ in range(draw(st.integers(1, 25))):
        t += draw(st.integers(0, 3000))
        dur = draw(st.integers(1, 800))
        words.append(WordEvent("w", t, t + dur))
        t += dur
    return words


@many
@given(timelines(), st.integers(0, 4000), st.integers(0, 4000))
def test_speaking_time_monotone_and_bounded(words, th1, th2):
    lo, hi = sorted((th1, th2))
    a, b = speaking_time(words, lo), speaking_time(words, hi)
    assert 0 <= a <= b <= words[-1].end_ms - words[0].start_ms


TARGETS = compile_targets(["you know", "know", "um", "i mean", "kind of", "like"])
VOCAB = ["you", "know", "um", "i", "mean", "kind", "of", "like", "so", "the"]


@many
@given(st.lists(st.sampled_from(VOCAB), max_size=40))
def test_matcher_spans_disjoint(tokens):
    words = [WordEvent(tok, 400 * i, 400 * i + 300) for i, tok in enumerate(tokens)]
    spans = [d.matched_token_span for d in detect_all(words, TARGETS)]
    for (s0, e0), (s1, e1) in zip(spans, spans[1:]):
        assert s0 <= e0 < s1 <= e1
    for s, e in spans:
        assert TARGETS.lookup(tokens[s:e + 1]) is not None
