"""``speechcoach`` command line.

    speechcoach [--config FILE] spearcon build --sources DIR
    speechcoach [--config FILE] run (--replay FILE | --bridge) --participant ID --session N
    speechcoach [--config FILE] analyze (--sessions DIR | --csv FILE) [--group-by COL] [--out DIR]

Errors go to stderr as ``E_CODE: message`` and exit with status 1.
"""
from __future__ import annotations

import argparse
import sys
import warnings
from pathlib import Path

from .analytics import analyze_study, read_frequency_csv, read_sessions_root
from .audio import read_wav
from .config import load_config
from .errors import MissingSource, SpeechCoachError
from .scheduler import FeedbackStatus, RecordingSink, VirtualClock, WallClock, run_session, save_session
from .spearcon import SpearconCache, build_spearcon
from .transcript import compile_targets, read_word_events


class UsageError(SpeechCoachError):
    code = "E_VALIDATION"


def cmd_spearcon_build(config, sources, out=None) -> dict:
    out = out or sys.stdout
    targets = compile_targets(config.target_phrases())
    sources = Path(sources)
    cache = SpearconCache(config.asset_cache)
    for phrase in targets:
        if not (sources / f"{phrase.id}.wav").is_file():
            raise MissingSource(f"no source WAV for phrase {phrase.id!r} in {sources}")
    print(f"{'phrase':<24}{'source ms':>10}{'spearcon ms':>13}{'factor':>9}", file=out)
    for phrase in targets:
        src = sources / f"{phrase.id}.wav"
        clip = read_wav(src)
        asset = build_spearcon(
            phrase.id,
            clip,
            factor=config.spearcon_factor,
            max_duration_ms=config.max_cue_duration_ms,
            cache=cache,
            source_name=src.name,
        )
        print(
            f"{phrase.id:<24}{clip.duration_ms:>10.1f}{asset.duration_ms:>13.1f}"
            f"{asset.compression_factor:>9.3f}",
            file=out,
        )
    return dict(cache.manifest)


def cmd_run(config, replay=None, bridge=False, participant="p01", session=1, out=None):
    out = out or sys.stdout
    if session < 1:
        raise UsageError(f"--session must be >= 1, got {session}")
    if not participant or "/" in participant or participant in (".", ".."):
        raise UsageError(f"invalid participant id {participant!r}")
    targets = compile_targets(config.target_phrases())
    cache = SpearconCache(config.asset_cache)
    policy = config.policy()
    if bridge:
        source = read_word_events(sys.stdin)
        clock, latency = WallClock(), None
    else:
        if not Path(replay).is_file():
            raise UsageError(f"replay file not found: {replay}")
        source = read_word_events(Path(replay).read_text(encoding="utf-8").splitlines())
        clock = VirtualClock() if config.clock == "virtual" else WallClock()
        latency = config.latency()
    record = run_session(
        source,
        targets,
        policy,
        cache,
        clock=clock,
        sink=RecordingSink(),
        latency_model=latency,
        participant_id=participant,
        session_index=session,
        pause_threshold_ms=config.pause_threshold_ms,
    )
    path = save_session(record, config.sessions_root)
    tally = record.tally()
    mean_lat = record.mean_feedback_latency_ms()
    print(f"session {participant}/{session}: {record.total_word_count} words, "
          f"{record.speaking_time_ms / 60000:.2f} min speaking", file=out)
    print(f"detections: {len(record.detections)}", file=out)
    for pid, count in record.phrase_counts.items():
        print(f"  {pid:<22}{count:>5}", file=out)
    print(f"played: {tally[FeedbackStatus.PLAYED.value]}  "
          f"dropped_late: {tally[FeedbackStatus.DROPPED_LATE.value]}  "
          f"dropped_refractory: {tally[FeedbackStatus.DROPPED_REFRACTORY.value]}", file=out)
    print("mean feedback latency: " + ("n/a" if mean_lat is None else f"{mean_lat:.1f} ms"), file=out)
    print(f"wrote {path}", file=out)
    return record


def cmd_analyze(config, sessions=None, csv_path=None, group_by="system", out_dir="reports", out=None):
    out = out or sys.stdout
    if csv_path is not None:
        groups = read_frequency_csv(csv_path, group_by=group_by)
    else:
        groups = read_sessions_root(sessions or config.sessions_root, group_by=group_by)
    report = analyze_study(groups)
    pj, pc = report.write(out_dir)
    for kind, block in report.kinds.items():
        if block is None:
            print(f"[{kind}] absent", file=out)
            continue
        for g, res in block["RQ1"].items():
            t = res["test"]
            if t is not None:
                print(f"[{kind}] RQ1 {g}: mean slope {t['mean']:.4f} "
                      f"[{t['ci95_lo']:.4f}, {t['ci95_hi']:.4f}] p={t['p']:.4g}", file=out)
    for note in report.notes:
        print(f"note: {note}", file=out)
    print(f"wrote {pj} and {pc}", file=out)
    return report


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help="config file (else $SPEECHCOACH_CONFIG)")

    parser = argparse.ArgumentParser(prog="speechcoach", parents=[common], description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("spearcon", help="spearcon asset commands")
    sp_sub = sp.add_subparsers(dest="spearcon_command", required=True)
    build = sp_sub.add_parser("build", parents=[common], help="build and cache spearcons")
    build.add_argument("--sources", required=True, help="directory with <phrase_id>.wav files")

    run = sub.add_parser("run", parents=[common], help="run one session")
    src = run.add_mutually_exclusive_group(required=True)
    src.add_argument("--replay", help="line-delimited JSON word events")
    src.add_argument("--bridge", action="store_true", help="read live word events from stdin")
    run.add_argument("--participant", required=True)
    run.add_argument("--session", type=int, required=True)

    an = sub.add_parser("analyze", parents=[common], help="run the study analysis")
    inp = an.add_mutually_exclusive_group()
    inp.add_argument("--sessions", help="sessions root (default: config sessions_root)")
    inp.add_argument("--csv", dest="csv_path", help="participant,system,S1..S8 table")
    an.add_argument("--group-by", default="system")
    an.add_argument("--out", default="reports", help="directory for report.json/report.csv")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            config = load_config(getattr(args, "config", None))
            if args.command == "spearcon":
                cmd_spearcon_build(config, args.sources)
            elif args.command == "run":
                cmd_run(config, args.replay, args.bridge, args.participant, args.session)
            else:
                cmd_analyze(config, args.sessions, args.csv_path, args.group_by, args.out)
    except SpeechCoachError as exc:
        print(f"{exc.code}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"E_IO: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
