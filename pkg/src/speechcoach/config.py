"""Session configuration file.

Plain ``key = value`` lines (an optional ``[speechcoach]`` header is
allowed).  Relative paths resolve against the file's directory.

==================== ============================================ =========
key                  meaning                                      default
==================== ============================================ =========
targets              file with one target phrase per line         (none)
phrases              inline comma-separated phrases               (none)
asset_cache          spearcon cache directory                     assets
sessions_root        where session files are written              sessions
delay_budget_ms      max utterance-end to cue-onset gap           2000
max_cue_duration_ms  longest cue allowed                          1000
refractory_ms        min gap between consecutive cues             0
output_latency_ms    modeled audio-link latency                   200
clock                ``virtual`` or ``wall``                      virtual
seed                 seed for random latency models               0
latency_model        ``fixed:MS`` or ``uniform:LO:HI``            fixed:0
pause_threshold_ms   pause still counted as speaking              1000
spearcon_factor      time-compression factor                      0.4
language             recognizer language tag (informational)      en
==================== ============================================ =========
"""
from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError, InvalidPolicy, InvalidRange
from .scheduler import FeedbackPolicy, parse_latency_model
from .transcript import read_targets_file

ENV_VAR = "SPEECHCOACH_CONFIG"
SECTION = "speechcoach"

_INT_KEYS = (
    "delay_budget_ms",
    "max_cue_duration_ms",
    "refractory_ms",
    "output_latency_ms",
    "seed",
    "pause_threshold_ms",
)
_KNOWN = set(_INT_KEYS) | {
    "targets", "phrases", "asset_cache", "sessions_root", "clock",
    "latency_model", "spearcon_factor", "language",
}


@dataclass
class AppConfig:
    targets: Path | None = None
    phrases: list[str] = field(default_factory=list)
    asset_cache: Path = Path("assets")
    sessions_root: Path = Path("sessions")
    delay_budget_ms: int = 2000
    max_cue_duration_ms: int = 1000
    refractory_ms: int = 0
    output_latency_ms: int = 200
    clock: str = "virtual"
    seed: int = 0
    latency_model: str = "fixed:0"
    pause_threshold_ms: int = 1000
    spearcon_factor: float = 0.4
    language: str = "en"

    def policy(self) -> FeedbackPolicy:
        return FeedbackPolicy(
            delay_budget_ms=self.delay_budget_ms,
            max_cue_duration_ms=self.max_cue_duration_ms,
            refractory_ms=self.refractory_ms,
            output_latency_ms=self.output_latency_ms,
        )

    def latency(self):
        return parse_latency_model(self.latency_model, self.seed)

    def target_phrases(self) -> list[str]:
        phrases = list(self.phrases)
        if self.targets is not None:
            if not self.targets.is_file():
                raise ConfigError(f"targets file not found: {self.targets}")
            phrases += read_targets_file(self.targets)
        if not phrases:
            raise ConfigError("no target phrases configured (set 'targets' or 'phrases')")
        return phrases

    def validate(self) -> None:
        if self.clock not in ("virtual", "wall"):
            raise ConfigError(f"clock must be 'virtual' or 'wall', got {self.clock!r}")
        if not 0 < self.spearcon_factor < 1:
            raise ConfigError(f"spearcon_factor must be in (0, 1), got {self.spearcon_factor}")
        try:
            self.policy()
            self.latency()
        except (InvalidPolicy, InvalidRange) as exc:
            raise ConfigError(str(exc)) from None


def load_config(path=None) -> AppConfig:
    """Read ``path``, else ``$SPEECHCOACH_CONFIG``, else return defaults."""
    if path is None:
        path = os.environ.get(ENV_VAR) or None
    cfg = AppConfig()
    if path is None:
        cfg.validate()
        return cfg
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    if not text.lstrip().startswith("["):
        text = f"[{SECTION}]\n" + text
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if not parser.has_section(SECTION):
        raise ConfigError(f"{path}: missing [{SECTION}] section")
    values = dict(parser.items(SECTION))
    unknown = set(values) - _KNOWN
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
    base = path.parent
    for key, raw in values.items():
        if key in _INT_KEYS:
            try:
                setattr(cfg, key, int(raw))
            except ValueError:
                raise ConfigError(f"{path}: {key} must be an integer, got {raw!r}") from None
        elif key == "spearcon_factor":
            try:
                cfg.spearcon_factor = float(raw)
            except ValueError:
                raise ConfigError(f"{path}: spearcon_factor must be a number") from None
        elif key in ("targets", "asset_cache", "sessions_root"):
            setattr(cfg, key, base / raw)
        elif key == "phrases":
            cfg.phrases = [p.strip() for p in raw.split(",") if p.strip()]
        else:
            setattr(cfg, key, raw.strip())
    cfg.validate()
    return cfg
