"""Per-session measurements and the multi-session study analysis.

Per session: frequency F (unwanted words per minute of speaking time) and
ratio R (unwanted words per spoken word).  Per participant both are
normalized by session 1, giving S_n = F_n / F_1 and S'_n = R_n / R_1.

The study analysis, run separately on S and S':

* RQ1  per-participant OLS slope of S_n on n = 1..7; group mean slope
       tested against 0
* RQ2  group mean S_8 tested against 1
* RQ3  between-group difference of mean slopes
* RQ4  between-group difference of mean S_8
* S7   between-group difference of mean S_7
"""
from __future__ import annotations

import csv
import io
import json
import math
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from .errors import (
    CsvSchemaError,
    MissingSessions,
    ZeroBaseline,
    ZeroSpeakingTime,
    ZeroVariance,
    ZeroWordCount,
)
from .scheduler import SessionRecord, load_session
from .stats import TTestResult, ols_slope, one_sample_t, two_sample_t

TRAINING_SESSIONS = 7
FOLLOW_UP_SESSION = 8
KIND_FREQUENCY = "S"
KIND_RATIO = "S'"
KINDS = (KIND_FREQUENCY, KIND_RATIO)


@dataclass(frozen=True)
class SessionSummary:
    n: int
    count: int
    speaking_time_min: float
    total_words: int
    frequency_wpm: float
    ratio: float


@dataclass(frozen=True)
class NormalizedSeries:
    participant_id: str
    kind: str
    values: tuple[float, ...]


@dataclass
class ParticipantSeries:
    """Raw per-session values for one participant, index 0 = session 1.

    ``None`` marks a session that was not recorded.  ``ratio`` may be None
    altogether when word totals are unavailable.
    """

    participant_id: str
    group: str
    frequency: list[float | None]
    ratio: list[float | None] | None = None


def summarize_session(record: SessionRecord) -> SessionSummary:
    if record.speaking_time_ms <= 0:
        raise ZeroSpeakingTime(f"session {record.session_index} has no speaking time")
    if record.total_word_count <= 0:
        raise ZeroWordCount(f"session {record.session_index} has no words")
    count = len(record.detections)
    minutes = record.speaking_time_ms / 60000.0
    return SessionSummary(
        n=record.session_index,
        count=count,
        speaking_time_min=minutes,
        total_words=record.total_word_count,
        frequency_wpm=count / minutes,
        ratio=count / record.total_word_count,
    )


def normalize_series(values: Sequence[float | None], participant_id: str = "", kind: str = KIND_FREQUENCY) -> NormalizedSeries:
    """Divide every session by session 1; missing sessions stay None."""
    if not values or values[0] is None:
        raise MissingSessions(f"{participant_id or 'series'}: session 1 missing")
    base = values[0]
    if base <= 0:
        raise ZeroBaseline(f"{participant_id or 'series'}: session-1 value is {base}")
    out = [None if v is None else (1.0 if i == 0 else v / base) for i, v in enumerate(values)]
    return NormalizedSeries(participant_id, kind, tuple(out))


# -- report -------------------------------------------------------------

def _finite(x):
    return x if x is None or math.isfinite(x) else None


def _test_dict(res: TTestResult | None, **extra):
    if res is None:
        return None
    d = {k: _finite(v) for k, v in asdict(res).items()}
    d.update(extra)
    return d


def _degenerate_t(values, mu0):
    """t-test that survives zero variance: t = 0 at the null, +-inf otherwise."""
    try:
        return one_sample_t(values, mu0)
    except ZeroVariance:
        mean = float(sum(values) / len(values))
        diff = mean - mu0
        t = 0.0 if abs(diff) <= 1e-12 * max(1.0, abs(mu0)) else math.copysign(math.inf, diff)
        return TTestResult(t, len(values) - 1, 1.0 if t == 0 else 0.0, mean, mean, mean)


def _degenerate_t2(a, b):
    try:
        return two_sample_t(a, b)
    except ZeroVariance:
        diff = sum(a) / len(a) - sum(b) / len(b)
        t = 0.0 if abs(diff) <= 1e-12 else math.copysign(math.inf, diff)
        return TTestResult(t, len(a) + len(b) - 2, 1.0 if t == 0 else 0.0, diff, diff, diff)


@dataclass
class StatReport:
    groups: list[str]
    kinds: dict[str, dict | None] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    def to_dict(self):
        return {"groups": self.groups, "kinds": self.kinds, "notes": self.notes}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=False) + "\n"

    def rows(self) -> list[dict]:
        """Flat rows: analysis, groups, estimate, ci_lo, ci_hi, statistic, df, p."""
        out = []

        def add(name, groups, est, lo=None, hi=None, stat=None, df=None, p=None):
            out.append(
                {"analysis": name, "groups": groups, "estimate": est, "ci_lo": lo,
                 "ci_hi": hi, "statistic": stat, "df": df, "p": p}
            )

        def add_test(name, groups, t):
            if t is None:
                add(name, groups, None)
            else:
                add(name, groups, t["mean"], t["ci95_lo"], t["ci95_hi"], t["t"], t["df"], t["p"])

        for kind in KINDS:
            block = self.kinds.get(kind)
            if block is None:
                add(f"{kind}/absent", "", None)
                continue
            for g, res in block["RQ1"].items():
                for pid, slope in res["slopes"].items():
                    add(f"{kind}/RQ1/slope", f"{g}:{pid}", slope)
                add_test(f"{kind}/RQ1/mean_slope_vs_0", g, res["test"])
            for g, res in block["RQ2"].items():
                add_test(f"{kind}/RQ2/S8_vs_1", g, res)
            for key, name in (("RQ3", "slope_difference"), ("RQ4", "S8_difference"), ("S7", "S7_difference")):
                res = block[key]
                if res is None:
                    add(f"{kind}/{key}/{name}", "", None)
                else:
                    add_test(f"{kind}/{key}/{name}", res["groups"], res)
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        cols = ["analysis", "groups", "estimate", "ci_lo", "ci_hi", "statistic", "df", "p"]
        w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
        w.writeheader()
        for row in self.rows():
            w.writerow({k: ("" if v is None else (repr(v) if isinstance(v, float) else v)) for k, v in row.items()})
        return buf.getvalue()

    def write(self, out_dir) -> tuple[Path, Path]:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        pj, pc = out_dir / "report.json", out_dir / "report.csv"
        pj.write_text(self.to_json())
        pc.write_text(self.to_csv())
        return pj, pc


def _check_sessions(series: ParticipantSeries, values, kind):
    if values is None:
        return
    missing = [i + 1 for i in range(TRAINING_SESSIONS) if i >= len(values) or values[i] is None]
    if missing:
        raise MissingSessions(
            f"participant {series.participant_id!r} ({kind}) missing session(s) {missing}"
        )


def _analyze_kind(groups, kind, report):
    per_group = {}
    for g, members in groups.items():
        rows = []
        for p in members:
            raw = p.frequency if kind == KIND_FREQUENCY else p.ratio
            rows.append((p.participant_id, normalize_series(raw, p.participant_id, kind).values))
        per_group[g] = rows

    block = {"RQ1": {}, "RQ2": {}, "RQ3": None, "RQ4": None, "S7": None}
    slopes, s8, s7 = {}, {}, {}
    for g, rows in per_group.items():
        slopes[g] = {pid: ols_slope(v[:TRAINING_SESSIONS]).slope for pid, v in rows}
        s7[g] = [v[TRAINING_SESSIONS - 1] for _, v in rows]
        if len(rows) >= 2:
            test = _test_dict(_degenerate_t(list(slopes[g].values()), 0.0), n=len(rows))
        else:
            test = None
            report.notes.append(f"{kind}: group {g!r} has one participant; RQ1 test skipped")
        block["RQ1"][g] = {"slopes": slopes[g], "test": test}
        follow = [v[FOLLOW_UP_SESSION - 1] if len(v) >= FOLLOW_UP_SESSION else None for _, v in rows]
        if all(x is not None for x in follow) and len(follow) >= 2:
            s8[g] = follow
            block["RQ2"][g] = _test_dict(_degenerate_t(follow, 1.0), n=len(follow))
        else:
            block["RQ2"][g] = None
            report.notes.append(f"{kind}: group {g!r} lacks session {FOLLOW_UP_SESSION}; RQ2 absent")

    names = list(per_group)
    if len(names) == 2:
        a, b = names
        label = f"{a}-{b}"

        def between(da, db):
            if len(da) < 2 or len(db) < 2:
                return None
            return _test_dict(_degenerate_t2(da, db), groups=label, n_a=len(da), n_b=len(db))

        block["RQ3"] = between(list(slopes[a].values()), list(slopes[b].values()))
        block["S7"] = between(s7[a], s7[b])
        if a in s8 and b in s8:
            block["RQ4"] = between(s8[a], s8[b])
        else:
            report.notes.append(f"{kind}: session {FOLLOW_UP_SESSION} incomplete; RQ4 absent")
    return block


def analyze_study(groups: Mapping[str, Sequence[ParticipantSeries]]) -> StatReport:
    """Run the full analysis on one or two groups.

    Between-group estimates are mean(first group) - mean(second group), in
    the mapping's iteration order.
    """
    groups = {g: list(m) for g, m in groups.items() if m}
    if not groups:
        raise MissingSessions("no participants")
    if len(groups) > 2:
        raise ValueError(f"analysis compares at most two groups, got {sorted(groups)}")
    report = StatReport(groups=list(groups))
    for members in groups.values():
        for p in members:
            _check_sessions(p, p.frequency, KIND_FREQUENCY)
            _check_sessions(p, p.ratio, KIND_RATIO)
    for kind in KINDS:
        if kind == KIND_RATIO and any(p.ratio is None for m in groups.values() for p in m):
            report.kinds[kind] = None
            report.notes.append(f"{kind}: ratio data unavailable; block absent")
            continue
        report.kinds[kind] = _analyze_kind(groups, kind, report)
    return report


# -- input loaders ------------------------------------------------------

_S_COL = re.compile(r"^S(\d+)$")
_SP_COL = re.compile(r"^(?:SP|S')(\d+)$")


def _parse_cell(text, where):
    text = (text or "").strip()
    if text == "":
        return None
    try:
        value = float(text)
    except ValueError:
        raise CsvSchemaError(f"{where}: not a number: {text!r}") from None
    if not math.isfinite(value) or value < 0:
        raise CsvSchemaError(f"{where}: value must be finite and >= 0, got {text!r}")
    return value


def read_frequency_csv(source, group_by: str = "system") -> dict[str, list[ParticipantSeries]]:
    """Load a ``participant,system,S1..S8`` table (optionally ``SP1..SP8``).

    Values may be raw frequencies or already normalized; both normalize to
    the same series.  A missing S8 column simply leaves session 8 empty.
    """
    if hasattr(source, "read"):
        text = source.read()
    else:
        text = Path(source).read_text(encoding="utf-8")
    reader = csv.DictReader(io.StringIO(text))
    header = [h.strip() for h in (reader.fieldnames or [])]
    reader.fieldnames = header
    for col in ("participant", group_by):
        if col not in header:
            raise CsvSchemaError(f"missing column {col!r}")
    s_cols = {int(m.group(1)): h for h in header if (m := _S_COL.match(h))}
    sp_cols = {int(m.group(1)): h for h in header if (m := _SP_COL.match(h))}
    need = set(range(1, TRAINING_SESSIONS + 1))
    if not need <= set(s_cols):
        raise CsvSchemaError(f"missing session columns {sorted(f'S{i}' for i in need - set(s_cols))}")
    if sp_cols and not need <= set(sp_cols):
        raise CsvSchemaError("partial SP columns: SP1..SP7 are all required when any is present")
    n_max = max(s_cols)

    groups: dict[str, list[ParticipantSeries]] = {}
    seen = set()
    for lineno, row in enumerate(reader, 2):
        pid = (row.get("participant") or "").strip()
        if not pid:
            raise CsvSchemaError(f"line {lineno}: empty participant id")
        if pid in seen:
            raise CsvSchemaError(f"line {lineno}: duplicate participant {pid!r}")
        seen.add(pid)
        group = (row.get(group_by) or "").strip()
        freq = [_parse_cell(row.get(s_cols[i]), f"line {lineno} S{i}") if i in s_cols else None
                for i in range(1, n_max + 1)]
        ratio = None
        if sp_cols:
            ratio = [_parse_cell(row.get(sp_cols[i]), f"line {lineno} SP{i}") if i in sp_cols else None
                     for i in range(1, max(sp_cols) + 1)]
        groups.setdefault(group, []).append(ParticipantSeries(pid, group, freq, ratio))
    if not groups:
        raise CsvSchemaError("no participant rows")
    return groups


def read_sessions_root(root, group_by: str = "system") -> dict[str, list[ParticipantSeries]]:
    """Build series from ``<root>/<participant>/<n>.session.json`` files.

    Group membership comes from an optional ``<root>/participants.csv``
    (columns ``participant`` and ``group_by``); without it everyone is in
    group ``"all"``.
    """
    root = Path(root)
    membership = {}
    table = root / "participants.csv"
    if table.exists():
        with open(table, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                try:
                    membership[row["participant"].strip()] = row[group_by].strip()
                except KeyError as exc:
                    raise CsvSchemaError(f"participants.csv missing column {exc.args[0]!r}") from None
    groups: dict[str, list[ParticipantSeries]] = {}
    for folder in sorted(p for p in root.iterdir() if p.is_dir()):
        files = sorted(folder.glob("*.session.json"), key=lambda p: int(p.name.split(".")[0]))
        if not files:
            continue
        summaries = {}
        for f in files:
            s = summarize_session(load_session(f))
            summaries[s.n] = s
        n_max = max(summaries)
        freq = [summaries[i].frequency_wpm if i in summaries else None for i in range(1, n_max + 1)]
        ratio = [summaries[i].ratio if i in summaries else None for i in range(1, n_max + 1)]
        group = membership.get(folder.name, "all")
        groups.setdefault(group, []).append(ParticipantSeries(folder.name, group, freq, ratio))
    if not groups:
        raise MissingSessions(f"no session files under {root}")
    return groups
