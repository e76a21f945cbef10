"""Session runner: word stream -> detections -> scheduled spearcon playback.

All times are integer milliseconds on the session clock.  In virtual mode
the session is a discrete-event simulation: a word becomes available at its
``end_ms``, a detection is handled at its ``detected_at_ms``, and the clock
only moves when an event is processed, so a run is a pure function of its
inputs.
"""
from __future__ import annotations

import enum
import heapq
import itertools
import json
import time
import warnings
from collections import Counter
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Protocol

import numpy as np

from .errors import InvalidPolicy, InvalidRange, MissingAsset, SourceFormatError
from .transcript import (
    DEFAULT_PAUSE_THRESHOLD_MS,
    DetectionEvent,
    StreamState,
    TargetSet,
    WordEvent,
    flush_stream,
    ingest_segment,
    match_stream,
    speaking_time,
)

OUTPUT_LATENCY_BAND_MS = (150, 250)


class LatencyBandWarning(UserWarning):
    pass


@dataclass(frozen=True)
class FeedbackPolicy:
    delay_budget_ms: int = 2000
    max_cue_duration_ms: int = 1000
    refractory_ms: int = 0
    output_latency_ms: int = 200

    def __post_init__(self):
        for name, value in asdict(self).items():
            if value < 0:
                raise InvalidPolicy(f"{name} must be >= 0, got {value}")
        lo, hi = OUTPUT_LATENCY_BAND_MS
        if not lo <= self.output_latency_ms <= hi:
            warnings.warn(
                f"output_latency_ms={self.output_latency_ms} outside the typical "
                f"{lo}-{hi} ms Bluetooth link band",
                LatencyBandWarning,
                stacklevel=3,
            )
        if self.delay_budget_ms <= self.output_latency_ms:
            warnings.warn(
                "delay_budget_ms <= output_latency_ms: every cue will be dropped",
                LatencyBandWarning,
                stacklevel=3,
            )


class FeedbackStatus(str, enum.Enum):
    PLAYED = "played"
    DROPPED_LATE = "dropped_late"
    DROPPED_REFRACTORY = "dropped_refractory"


@dataclass(frozen=True)
class Decision:
    status: FeedbackStatus
    start_ms: int | None = None

    @property
    def play(self) -> bool:
        return self.status is FeedbackStatus.PLAYED


@dataclass(frozen=True)
class FeedbackEvent:
    detection: DetectionEvent
    status: FeedbackStatus
    playback_start_ms: int | None = None
    playback_end_ms: int | None = None

    @property
    def latency_ms(self) -> int | None:
        if self.playback_start_ms is None:
            return None
        return self.playback_start_ms - self.detection.utterance_end_ms


def schedule(
    detection: DetectionEvent,
    now_ms: int,
    policy: FeedbackPolicy,
    busy_until_ms: int | None = None,
    last_play_end_ms: int | None = None,
) -> Decision:
    """Decide whether and when to play the cue for ``detection``.

    ``busy_until_ms`` is when the sink frees up (None when idle);
    ``last_play_end_ms`` defaults to it and anchors the refractory gap.
    """
    if now_ms < detection.detected_at_ms:
        raise ValueError("cannot schedule a detection before it was emitted")
    if last_play_end_ms is None:
        last_play_end_ms = busy_until_ms
    ready = now_ms if busy_until_ms is None else max(now_ms, busy_until_ms)
    start = ready
    if last_play_end_ms is not None and policy.refractory_ms:
        start = max(start, last_play_end_ms + policy.refractory_ms)
    start += policy.output_latency_ms
    end = detection.utterance_end_ms
    if start - end <= policy.delay_budget_ms:
        return Decision(FeedbackStatus.PLAYED, start)
    if ready + policy.output_latency_ms - end <= policy.delay_budget_ms:
        return Decision(FeedbackStatus.DROPPED_REFRACTORY)
    return Decision(FeedbackStatus.DROPPED_LATE)


# -- detection latency models -------------------------------------------

@dataclass(frozen=True)
class Fixed:
    ms: int

    def __post_init__(self):
        if self.ms < 0:
            raise InvalidRange(f"latency must be >= 0, got {self.ms}")

    def draws(self) -> Iterator[int]:
        return itertools.repeat(self.ms)

    def sample(self, n: int) -> list[int]:
        return [self.ms] * n


@dataclass(frozen=True)
class UniformRange:
    lo_ms: int
    hi_ms: int
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.lo_ms <= self.hi_ms:
            raise InvalidRange(f"need 0 <= lo <= hi, got ({self.lo_ms}, {self.hi_ms})")

    def draws(self) -> Iterator[int]:
        rng = np.random.default_rng(self.seed)
        while True:
            yield int(rng.integers(self.lo_ms, self.hi_ms, endpoint=True))

    def sample(self, n: int) -> list[int]:
        return list(itertools.islice(self.draws(), n))


def parse_latency_model(text: str, seed: int = 0):
    """``"fixed:810"`` or ``"uniform:380:1950"`` (seeded with ``seed``)."""
    parts = [p.strip() for p in str(text).split(":")]
    try:
        if parts[0] == "fixed" and len(parts) == 2:
            return Fixed(int(parts[1]))
        if parts[0] == "uniform" and len(parts) == 3:
            return UniformRange(int(parts[1]), int(parts[2]), seed)
    except ValueError:
        pass
    raise InvalidRange(f"bad latency model {text!r}; expected fixed:MS or uniform:LO:HI")


def inject_detection_latency(events: Iterable[DetectionEvent], model) -> list[DetectionEvent]:
    events = list(events)
    lat = model.sample(len(events))
    return [replace(e, detected_at_ms=e.utterance_end_ms + int(d)) for e, d in zip(events, lat)]


# -- clocks and sinks ---------------------------------------------------

class VirtualClock:
    mode = "virtual"

    def __init__(self, start_ms: int = 0):
        self._now = int(start_ms)

    def now(self) -> int:
        return self._now

    def advance_to(self, t_ms: int) -> int:
        if t_ms > self._now:
            self._now = int(t_ms)
        return self._now

    def step(self, dt_ms: int) -> int:
        if dt_ms < 0:
            raise ValueError("virtual clock only moves forward")
        self._now += int(dt_ms)
        return self._now


class WallClock:
    mode = "wall"

    def __init__(self):
        self._t0 = time.monotonic()

    def now(self) -> int:
        return int((time.monotonic() - self._t0) * 1000)

    def advance_to(self, t_ms: int) -> int:
        return self.now()


class Sink(Protocol):
    def play(self, phrase_id: str, asset, start_ms: int, end_ms: int) -> None: ...


class RecordingSink:
    """Sink that only logs what it was asked to play."""

    def __init__(self):
        self.played: list[tuple[str, int, int]] = []

    def play(self, phrase_id, asset, start_ms, end_ms):
        self.played.append((phrase_id, start_ms, end_ms))


# -- session record -----------------------------------------------------

@dataclass
class SessionRecord:
    session_index: int
    participant_id: str
    words: list[WordEvent] = field(default_factory=list)
    detections: list[DetectionEvent] = field(default_factory=list)
    feedback: list[FeedbackEvent] = field(default_factory=list)
    speaking_time_ms: int = 0
    total_word_count: int = 0
    phrase_counts: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if self.session_index < 1:
            raise ValueError(f"session index must be >= 1, got {self.session_index}")

    def tally(self) -> dict[str, int]:
        c = Counter(f.status.value for f in self.feedback)
        return {s.value: c.get(s.value, 0) for s in FeedbackStatus}

    def mean_feedback_latency_ms(self) -> float | None:
        lat = [f.latency_ms for f in self.feedback if f.status is FeedbackStatus.PLAYED]
        return sum(lat) / len(lat) if lat else None

    def to_dict(self) -> dict:
        return {
            "session_index": self.session_index,
            "participant_id": self.participant_id,
            "speaking_time_ms": self.speaking_time_ms,
            "total_word_count": self.total_word_count,
            "phrase_counts": dict(sorted(self.phrase_counts.items())),
            "words": [_word_dict(w) for w in self.words],
            "detections": [_detection_dict(d) for d in self.detections],
            "feedback": [_feedback_dict(f) for f in self.feedback],
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "SessionRecord":
        return cls(
            session_index=d["session_index"],
            participant_id=d["participant_id"],
            words=[WordEvent(w["text"], w["start_ms"], w["end_ms"], w["conf"]) for w in d["words"]],
            detections=[_detection_from(x) for x in d["detections"]],
            feedback=[
                FeedbackEvent(
                    _detection_from(f["detection"]),
                    FeedbackStatus(f["status"]),
                    f["playback_start_ms"],
                    f["playback_end_ms"],
                )
                for f in d["feedback"]
            ],
            speaking_time_ms=d["speaking_time_ms"],
            total_word_count=d["total_word_count"],
            phrase_counts=dict(d["phrase_counts"]),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"


def _word_dict(w):
    return {"text": w.text, "start_ms": w.start_ms, "end_ms": w.end_ms, "conf": w.confidence}


def _detection_dict(d):
    return {
        "phrase_id": d.phrase_id,
        "utterance_end_ms": d.utterance_end_ms,
        "detected_at_ms": d.detected_at_ms,
        "matched_token_span": list(d.matched_token_span),
    }


def _detection_from(x):
    return DetectionEvent(
        x["phrase_id"], x["utterance_end_ms"], x["detected_at_ms"], tuple(x["matched_token_span"])
    )


def _feedback_dict(f):
    return {
        "detection": _detection_dict(f.detection),
        "status": f.status.value,
        "playback_start_ms": f.playback_start_ms,
        "playback_end_ms": f.playback_end_ms,
    }


def save_session(record: SessionRecord, out_root) -> Path:
    """Write ``<out>/<participant>/<n>.session.json`` and ``<n>.events.jsonl``."""
    folder = Path(out_root) / record.participant_id
    folder.mkdir(parents=True, exist_ok=True)
    path = folder / f"{record.session_index}.session.json"
    path.write_text(record.to_json())
    lines = [json.dumps({"stream": "word", **_word_dict(w)}, sort_keys=True) for w in record.words]
    lines += [json.dumps({"stream": "detection", **_detection_dict(d)}, sort_keys=True) for d in record.detections]
    lines += [json.dumps({"stream": "feedback", **_feedback_dict(f)}, sort_keys=True) for f in record.feedback]
    (folder / f"{record.session_index}.events.jsonl").write_text("".join(ln + "\n" for ln in lines))
    return path


def load_session(path) -> SessionRecord:
    return SessionRecord.from_dict(json.loads(Path(path).read_text()))


# -- running a session --------------------------------------------------

def _asset_lookup(assets, targets: TargetSet):
    table = {}
    for phrase in targets:
        try:
            table[phrase.id] = assets[phrase.spearcon_ref] if isinstance(assets, Mapping) else assets.get(phrase.spearcon_ref)
        except KeyError:
            raise MissingAsset(f"no spearcon asset for phrase {phrase.id!r}") from None
    return table


class Session:
    """Incremental session driver; :func:`run_session` wraps it.

    ``feed`` one word at a time (live bridge) and ``finish`` at the end.
    """

    def __init__(
        self,
        targets: TargetSet,
        policy: FeedbackPolicy,
        assets,
        clock=None,
        sink=None,
        latency_model=None,
        participant_id: str = "p01",
        session_index: int = 1,
        pause_threshold_ms: int = DEFAULT_PAUSE_THRESHOLD_MS,
    ):
        self.targets = targets
        self.policy = policy
        self.assets = _asset_lookup(assets, targets)
        self.cue_ms = {}
        for pid, asset in self.assets.items():
            cue = int(round(asset.duration_ms))
            if cue > policy.max_cue_duration_ms:
                raise InvalidPolicy(
                    f"asset {pid!r} lasts {cue} ms, over max_cue_duration_ms={policy.max_cue_duration_ms}"
                )
            self.cue_ms[pid] = cue
        self.clock = clock if clock is not None else VirtualClock()
        self.sink = sink if sink is not None else RecordingSink()
        self.latency_model = latency_model
        self.record = SessionRecord(session_index, participant_id)
        self.pause_threshold_ms = pause_threshold_ms
        self._state = StreamState()
        self._pending: list[tuple[int, int, DetectionEvent]] = []
        self._seq = 0
        self._latencies = latency_model.draws() if latency_model is not None else None
        self._busy_until = None
        self._virtual = self.clock.mode == "virtual"

    def feed(self, word: WordEvent) -> None:
        if self._virtual:
            # detections due before this word arrives are handled first
            self._drain(until=word.end_ms)
            now = self.clock.advance_to(word.end_ms)
        else:
            now = self.clock.now()
        for accepted in ingest_segment(self._state, [word], finalized=True):
            self.record.words.append(accepted)
            self._enqueue(match_stream(self._state, accepted, self.targets, now))
        self._drain(until=now)

    def finish(self) -> SessionRecord:
        self._enqueue(flush_stream(self._state, self.targets, self.clock.now()))
        self._drain(until=None)
        rec = self.record
        rec.total_word_count = len(rec.words)
        rec.speaking_time_ms = speaking_time(rec.words, self.pause_threshold_ms)
        counts = Counter(d.phrase_id for d in rec.detections)
        rec.phrase_counts = {pid: counts.get(pid, 0) for pid in sorted(self.targets.ids)}
        return rec

    def _enqueue(self, detections):
        for det in detections:
            if self._virtual and self.latency_model is not None:
                # one draw per detection, in emission order
                lat = next(self._latencies)
                det = replace(det, detected_at_ms=max(det.detected_at_ms, det.utterance_end_ms + lat))
            heapq.heappush(self._pending, (det.detected_at_ms, self._seq, det))
            self._seq += 1

    def _drain(self, until):
        while self._pending and (until is None or self._pending[0][0] <= until):
            _, _, det = heapq.heappop(self._pending)
            now = self.clock.advance_to(det.detected_at_ms) if self._virtual else self.clock.now()
            self.record.detections.append(det)
            decision = schedule(det, max(now, det.detected_at_ms), self.policy, self._busy_until)
            if decision.play:
                start = decision.start_ms
                end = start + self.cue_ms[det.phrase_id]
                self.sink.play(det.phrase_id, self.assets[det.phrase_id], start, end)
                self._busy_until = end
                fb = FeedbackEvent(det, decision.status, start, end)
            else:
                fb = FeedbackEvent(det, decision.status)
            self.record.feedback.append(fb)


def run_session(
    source: Iterable[WordEvent],
    targets: TargetSet,
    policy: FeedbackPolicy,
    assets,
    clock=None,
    sink=None,
    latency_model=None,
    participant_id: str = "p01",
    session_index: int = 1,
    pause_threshold_ms: int = DEFAULT_PAUSE_THRESHOLD_MS,
) -> SessionRecord:
    session = Session(
        targets,
        policy,
        assets,
        clock=clock,
        sink=sink,
        latency_model=latency_model,
        participant_id=participant_id,
        session_index=session_index,
        pause_threshold_ms=pause_threshold_ms,
    )
    last_start = None
    for word in source:
        if last_start is not None and word.start_ms < last_start:
            raise SourceFormatError(f"source not ordered: {word.text!r}@{word.start_ms} after {last_start}")
        last_start = word.start_ms
        session.feed(word)
    return session.finish()
