"""Exception hierarchy.

Every error carries a stable ``code`` used as the machine-parsable prefix
the command line prints on standard error (``E_MISSING_ASSET: ...``).
"""


class SpeechCoachError(Exception):
    code = "E_ERROR"


# transcript
class TranscriptError(SpeechCoachError):
    code = "E_TRANSCRIPT"


class EmptyPhrase(TranscriptError, ValueError):
    code = "E_EMPTY_PHRASE"


class DuplicatePhrase(TranscriptError, ValueError):
    code = "E_DUPLICATE_PHRASE"


class TooLong(TranscriptError, ValueError):
    code = "E_PHRASE_TOO_LONG"


class OutOfOrder(TranscriptError, ValueError):
    code = "E_OUT_OF_ORDER"


class SourceFormatError(TranscriptError, ValueError):
    """A word-event line could not be parsed; ``line`` is 1-based."""

    code = "E_SOURCE_FORMAT"

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


# audio / spearcon
class AudioError(SpeechCoachError):
    code = "E_AUDIO"


class ClipTooShort(AudioError, ValueError):
    code = "E_CLIP_TOO_SHORT"


class InvalidFactor(AudioError, ValueError):
    code = "E_INVALID_FACTOR"


class SilentClip(AudioError, ValueError):
    code = "E_SILENT_CLIP"


class WavFormatError(AudioError, ValueError):
    code = "E_WAV_FORMAT"


class MissingSource(AudioError, FileNotFoundError):
    code = "E_MISSING_SOURCE"


# scheduler
class SchedulerError(SpeechCoachError):
    code = "E_SCHEDULER"


class MissingAsset(SchedulerError, KeyError):
    code = "E_MISSING_ASSET"

    def __str__(self):
        # KeyError.__str__ repr()s its argument
        return str(self.args[0]) if self.args else ""


class InvalidPolicy(SchedulerError, ValueError):
    code = "E_INVALID_POLICY"


class InvalidRange(SchedulerError, ValueError):
    code = "E_INVALID_RANGE"


# analytics
class AnalyticsError(SpeechCoachError):
    code = "E_ANALYTICS"


class ZeroSpeakingTime(AnalyticsError, ValueError):
    code = "E_ZERO_SPEAKING_TIME"


class ZeroWordCount(AnalyticsError, ValueError):
    code = "E_ZERO_WORD_COUNT"


class ZeroBaseline(AnalyticsError, ValueError):
    code = "E_ZERO_BASELINE"


class DegenerateX(AnalyticsError, ValueError):
    code = "E_DEGENERATE_X"


class ZeroVariance(AnalyticsError, ValueError):
    code = "E_ZERO_VARIANCE"


class LengthMismatch(AnalyticsError, ValueError):
    code = "E_LENGTH_MISMATCH"


class DegenerateMarginals(AnalyticsError, ValueError):
    code = "E_DEGENERATE_MARGINALS"


class MissingSessions(AnalyticsError, ValueError):
    code = "E_MISSING_SESSIONS"


class CsvSchemaError(AnalyticsError, ValueError):
    code = "E_CSV_SCHEMA"


# cli
class ConfigError(SpeechCoachError, ValueError):
    code = "E_CONFIG"
