"""Protocol geometry, keyed basis function, round machines and sequential runs."""

from .config import ConfigError, Geometry, ProtocolConfig, Timetable, schedule_round
from .export import CSV_COLUMNS, transcripts_to_csv, write_transcripts_csv
from .prf import InputLengthError, eval_f, eval_f_many, sample_input
from .rounds import (
    ABORT_VERDICTS,
    AbstractAnswer,
    CausalityError,
    History,
    PartyContext,
    ProtocolOrderError,
    QuantumPort,
    RoundRecord,
    StrategyBundle,
    Verdict,
    run_round,
    run_round_commit,
    run_round_plain,
)
from .sequential import (
    BOTTOM,
    STATUS_ABORTED,
    STATUS_COMPLETE,
    STATUS_INCONCLUSIVE,
    StopRule,
    Transcript,
    TranscriptSummary,
    classify_batch,
    run_sequential,
    run_sequential_fast,
)
