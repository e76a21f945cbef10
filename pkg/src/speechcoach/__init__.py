"""Real-time unwanted-word detection with spearcon feedback, plus study analytics."""

from .analytics import (
    NormalizedSeries,
    ParticipantSeries,
    SessionSummary,
    StatReport,
    analyze_study,
    normalize_series,
    read_frequency_csv,
    read_sessions_root,
    summarize_session,
)
from .audio import AudioClip, read_wav, write_wav
from .scheduler import (
    FeedbackEvent,
    FeedbackPolicy,
    FeedbackStatus,
    Fixed,
    RecordingSink,
    Session,
    SessionRecord,
    UniformRange,
    VirtualClock,
    WallClock,
    inject_detection_latency,
    run_session,
    schedule,
)
from .spearcon import (
    SpearconAsset,
    SpearconCache,
    build_spearcon,
    dominant_frequency,
    peak_normalize,
    time_compress,
)
from .stats import (
    cohens_kappa,
    describe,
    mann_whitney_exact_p,
    mann_whitney_u,
    ols_slope,
    one_sample_t,
    two_sample_t,
)
from .transcript import (
    DetectionEvent,
    StreamState,
    TargetPhrase,
    TargetSet,
    WordEvent,
    compile_targets,
    detect_all,
    flush_stream,
    ingest_segment,
    match_stream,
    normalize_token,
    speaking_time,
)

__version__ = "0.1.0"
