"""Word-stream ingestion and streaming target-phrase detection.

Words arrive from a streaming recognizer as finalized segments.  They are
normalized, deduplicated against re-emissions, and fed one at a time to a
token trie.  Overlapping matches are resolved greedily, leftmost-longest:
at any start token the longest complete phrase wins and consumes its tokens.
"""
from __future__ import annotations

import json
import unicodedata
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .errors import (
    DuplicatePhrase,
    EmptyPhrase,
    OutOfOrder,
    SourceFormatError,
    TooLong,
)

DEDUP_WINDOW_MS = 150
DEFAULT_MAX_PHRASE_LEN = 5
DEFAULT_PAUSE_THRESHOLD_MS = 1000

_APOSTROPHES = {"’": "'", "‘": "'", "ʼ": "'"}


@dataclass(frozen=True)
class WordEvent:
    text: str
    start_ms: int
    end_ms: int
    confidence: float = 1.0

    def __post_init__(self):
        if self.start_ms > self.end_ms:
            raise ValueError(f"start_ms {self.start_ms} > end_ms {self.end_ms}")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")

    @property
    def token(self) -> str:
        return normalize_token(self.text)


@dataclass(frozen=True)
class TargetPhrase:
    tokens: tuple[str, ...]
    id: str
    spearcon_ref: str

    @property
    def text(self) -> str:
        return " ".join(self.tokens)


@dataclass(frozen=True)
class DetectionEvent:
    phrase_id: str
    utterance_end_ms: int
    detected_at_ms: int
    matched_token_span: tuple[int, int]

    def __post_init__(self):
        if self.detected_at_ms < self.utterance_end_ms:
            raise ValueError("detection emitted before the utterance ended")


class _Node:
    __slots__ = ("children", "phrase")

    def __init__(self):
        self.children: dict[str, _Node] = {}
        self.phrase: TargetPhrase | None = None


class TargetSet:
    """Compiled token trie over all target phrases.  Read-only after build."""

    def __init__(self, phrases: Iterable[TargetPhrase]):
        self._root = _Node()
        self.phrases: tuple[TargetPhrase, ...] = tuple(phrases)
        self.max_phrase_len = 0
        for phrase in self.phrases:
            node = self._root
            for tok in phrase.tokens:
                node = node.children.setdefault(tok, _Node())
            if node.phrase is not None:
                raise DuplicatePhrase(f"duplicate target phrase {phrase.text!r}")
            node.phrase = phrase
            self.max_phrase_len = max(self.max_phrase_len, len(phrase.tokens))

    def __len__(self):
        return len(self.phrases)

    def __iter__(self):
        return iter(self.phrases)

    @property
    def ids(self) -> list[str]:
        return [p.id for p in self.phrases]

    def lookup(self, tokens) -> TargetPhrase | None:
        """Return the phrase spelled exactly by ``tokens``, if any."""
        node = self._root
        for tok in tokens:
            node = node.children.get(tok)
            if node is None:
                return None
        return node.phrase

    @property
    def root(self) -> _Node:
        return self._root


def normalize_token(text: str) -> str:
    """Lowercase and strip leading/trailing punctuation; keep inner apostrophes.

    Returns ``""`` when nothing but punctuation (or whitespace) remains.

    >>> normalize_token("Like,")
    'like'
    >>> normalize_token("Y’know")
    "y'know"
    """
    for fancy, plain in _APOSTROPHES.items():
        text = text.replace(fancy, plain)
    text = text.strip().lower()
    start, end = 0, len(text)
    while start < end and _is_strippable(text[start]):
        start += 1
    while end > start and _is_strippable(text[end - 1]):
        end -= 1
    return text[start:end]


def _is_strippable(ch: str) -> bool:
    cat = unicodedata.category(ch)
    return cat[0] in "PSZ" or ch.isspace()


def phrase_id(tokens) -> str:
    return "_".join(tokens)


def compile_targets(phrases: Iterable[str], max_phrase_len: int = DEFAULT_MAX_PHRASE_LEN) -> TargetSet:
    phrases = list(phrases)
    if not phrases:
        raise EmptyPhrase("target list is empty")
    compiled = []
    seen = set()
    for raw in phrases:
        tokens = tuple(t for t in (normalize_token(w) for w in raw.split()) if t)
        if not tokens:
            raise EmptyPhrase(f"phrase {raw!r} normalizes to nothing")
        if len(tokens) > max_phrase_len:
            raise TooLong(f"phrase {raw!r} has {len(tokens)} tokens (max {max_phrase_len})")
        if tokens in seen:
            raise DuplicatePhrase(f"duplicate target phrase {raw!r}")
        seen.add(tokens)
        pid = phrase_id(tokens)
        compiled.append(TargetPhrase(tokens=tokens, id=pid, spearcon_ref=pid))
    return TargetSet(compiled)


@dataclass
class StreamState:
    """Single-owner matcher state.

    ``accepted`` is every word let through by :func:`ingest_segment`;
    ``pending`` is the rolling tail of (index, token, end_ms) that may still
    begin a phrase.
    """

    accepted: list[WordEvent] = field(default_factory=list)
    pending: list[tuple[int, str, int]] = field(default_factory=list)
    matched: int = 0
    gated: bool = False


def ingest_segment(state: StreamState, segment: Iterable[WordEvent], finalized: bool) -> list[WordEvent]:
    """Accept a recognizer segment.

    Partial segments are ignored, as is everything while ``state.gated`` is
    set (the hook for suspending detection when the user is not speaking).
    Punctuation-only words are dropped.
    """
    if not finalized or state.gated:
        return []
    segment = list(segment)
    for prev, cur in zip(segment, segment[1:]):
        if cur.start_ms < prev.start_ms:
            raise OutOfOrder(f"segment not ordered by start_ms at {cur.text!r}@{cur.start_ms}")
    out = []
    for word in segment:
        tok = word.token
        if not tok or _is_duplicate(state.accepted, word, tok):
            continue
        if state.accepted:
            last = state.accepted[-1]
            if word.start_ms < last.start_ms or word.start_ms < last.end_ms - DEDUP_WINDOW_MS:
                raise OutOfOrder(
                    f"{word.text!r}@{word.start_ms} overlaps accepted {last.text!r}"
                    f"@{last.start_ms}-{last.end_ms}"
                )
        state.accepted.append(word)
        out.append(word)
    return out


def _is_duplicate(accepted: list[WordEvent], word: WordEvent, tok: str) -> bool:
    for prev in reversed(accepted):
        if prev.start_ms < word.start_ms - DEDUP_WINDOW_MS:
            return False
        if abs(prev.start_ms - word.start_ms) <= DEDUP_WINDOW_MS and prev.token == tok:
            return True
    return False


def match_stream(state: StreamState, word: WordEvent, targets: TargetSet, now_ms: int) -> list[DetectionEvent]:
    """Feed one accepted word; return detections completed by it.

    A match is only emitted once no longer phrase starting at the same token
    can still complete, so a prefix target (``like`` under ``like totally``)
    waits for the following word.  Call :func:`flush_stream` at end of input.
    """
    state.pending.append((state.matched, word.token, word.end_ms))
    state.matched += 1
    return _resolve(state, targets, now_ms, final=False)


def flush_stream(state: StreamState, targets: TargetSet, now_ms: int) -> list[DetectionEvent]:
    return _resolve(state, targets, now_ms, final=True)


def _resolve(state, targets, now_ms, final):
    out = []
    pending = state.pending
    while pending:
        node = targets.root
        best = None
        exhausted = True
        for j, (_, tok, _) in enumerate(pending):
            node = node.children.get(tok)
            if node is None:
                exhausted = False
                break
            if node.phrase is not None:
                best = (j, node.phrase)
        if exhausted and node.children and not final:
            break
        if best is None:
            pending.pop(0)
            continue
        j, phrase = best
        first, last = pending[0][0], pending[j][0]
        end_ms = pending[j][2]
        out.append(
            DetectionEvent(
                phrase_id=phrase.id,
                utterance_end_ms=end_ms,
                detected_at_ms=max(now_ms, end_ms),
                matched_token_span=(first, last),
            )
        )
        del pending[: j + 1]
    return out


def detect_all(words: Iterable[WordEvent], targets: TargetSet) -> list[DetectionEvent]:
    """Batch convenience: ingest ``words`` as one finalized stream and match.

    Each detection is stamped with the end time of the word that resolved it.
    """
    state = StreamState()
    out = []
    now = 0
    for word in ingest_segment(state, words, finalized=True):
        now = max(now, word.end_ms)
        out.extend(match_stream(state, word, targets, now))
    out.extend(flush_stream(state, targets, now))
    return out


def speaking_time(words: Iterable[WordEvent], pause_threshold_ms: int = DEFAULT_PAUSE_THRESHOLD_MS) -> int:
    total = 0
    cur_start = cur_end = None
    for w in words:
        if cur_end is None:
            cur_start, cur_end = w.start_ms, w.end_ms
        elif w.start_ms - cur_end <= pause_threshold_ms:
            cur_end = max(cur_end, w.end_ms)
        else:
            total += cur_end - cur_start
            cur_start, cur_end = w.start_ms, w.end_ms
    if cur_end is not None:
        total += cur_end - cur_start
    return total


# -- wire format ----------------------------------------------------------

def parse_word_line(line: str, lineno: int | None = None) -> WordEvent:
    try:
        rec = json.loads(line)
    except json.JSONDecodeError as exc:
        raise SourceFormatError(f"malformed JSON ({exc.msg})", lineno) from None
    if not isinstance(rec, dict):
        raise SourceFormatError("record is not a JSON object", lineno)
    try:
        text = rec["text"]
        start, end = rec["start_ms"], rec["end_ms"]
        conf = rec.get("conf", 1.0)
    except KeyError as exc:
        raise SourceFormatError(f"missing field {exc.args[0]!r}", lineno) from None
    if not isinstance(text, str):
        raise SourceFormatError("'text' must be a string", lineno)
    if not all(isinstance(v, int) and not isinstance(v, bool) for v in (start, end)):
        raise SourceFormatError("'start_ms'/'end_ms' must be integers", lineno)
    if not isinstance(conf, (int, float)) or isinstance(conf, bool):
        raise SourceFormatError("'conf' must be a number", lineno)
    try:
        return WordEvent(text, start, end, float(conf))
    except ValueError as exc:
        raise SourceFormatError(str(exc), lineno) from None


def read_word_events(lines: Iterable[str]) -> Iterator[WordEvent]:
    """Parse line-delimited word records, enforcing non-decreasing start_ms."""
    last_start = None
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        word = parse_word_line(line, lineno)
        if last_start is not None and word.start_ms < last_start:
            raise SourceFormatError(
                f"start_ms {word.start_ms} decreases (previous {last_start})", lineno
            )
        last_start = word.start_ms
        yield word


def format_word_event(word: WordEvent) -> str:
    return json.dumps(
        {"text": word.text, "start_ms": word.start_ms, "end_ms": word.end_ms, "conf": word.confidence}
    )


def read_targets_file(path) -> list[str]:
    """One phrase per line; blank lines and ``#`` comments ignored."""
    with open(path, encoding="utf-8") as fh:
        lines = [ln.split("#", 1)[0].strip() for ln in fh]
    return [ln for ln in lines if ln]
