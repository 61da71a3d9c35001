"""Interactive-reconciliation simulator for noisy shared bit frames.

Two parties hold almost-identical bit frames.  Over an authenticated
classical channel they exchange block parities, chase individual
differences with dichotomic searches, and cascade each correction back
through earlier rounds — while an accountant tallies every parity bit an
eavesdropper could have seen.  The package provides the protocol engine,
the channel and wire format, persistent colored parity-knowledge trees,
and a seeded experiment harness with a CLI front end.
"""

from .bitframe import (
    BitFrame,
    Bsc,
    FixedErrors,
    Permutation,
    apply_noise,
    apply_permutation,
    gen_lcg_permutation,
    gen_shuffle_permutation,
    hamming_distance,
    invert_permutation,
)
from .binary_search import (
    BinarySearchState,
    disclosed_count,
    pending_query,
    start,
    step,
)
from .channel import (
    Channel,
    Direction,
    EveTap,
    LeakageReport,
    SessionStatus,
    TranscriptEntry,
    decode_message,
    encode_message,
    leakage_report,
    read_transcript,
    write_transcript,
)
from .engine import (
    CorrectionEvent,
    PairResult,
    Role,
    SessionConfig,
    SessionSummary,
    frame_fingerprint,
    initiator_session,
    responder_session,
    run_session_pair,
)
from .errors import (
    ConfigurationError,
    DecodeError,
    ProtocolError,
    TransportError,
    TreeStructureError,
)
from .harness import (
    LengthSweep,
    PairedOutcome,
    QberSweep,
    SessionTemplate,
    TrialRecord,
    compare_aggregation,
    export_records,
    load_records,
    run_paired_trial,
    run_trial,
    run_trial_detailed,
    sweep_length,
    sweep_qber,
)
from .paritytree import (
    ColoredTree,
    NodeColor,
    ParityNode,
    build_tree,
    find_unvisited_sibling,
    mark_compromised,
    mark_error_leaf,
    merge_trees,
    multi_error_frontier,
    set_syndrome,
    split_point,
)
from .rng import SeededRng
from .schedule import (
    DynamicSchedule,
    FixedRoundsBreak,
    QuietRoundsBreak,
    RoundPlan,
    StaticSchedule,
    ThresholdBreak,
    block_size_for_round,
    initial_block_size,
    partition_into_blocks,
    plan_round,
    should_terminate,
)

__version__ = "0.1.0"

__all__ = [
    "BinarySearchState",
    "BitFrame",
    "Bsc",
    "Channel",
    "ColoredTree",
    "ConfigurationError",
    "CorrectionEvent",
    "DecodeError",
    "Direction",
    "DynamicSchedule",
    "EveTap",
    "FixedErrors",
    "FixedRoundsBreak",
    "LeakageReport",
    "LengthSweep",
    "NodeColor",
    "PairResult",
    "PairedOutcome",
    "ParityNode",
    "Permutation",
    "ProtocolError",
    "QberSweep",
    "QuietRoundsBreak",
    "Role",
    "RoundPlan",
    "SeededRng",
    "SessionConfig",
    "SessionStatus",
    "SessionSummary",
    "SessionTemplate",
    "StaticSchedule",
    "ThresholdBreak",
    "TranscriptEntry",
    "TransportError",
    "TreeStructureError",
    "TrialRecord",
    "apply_noise",
    "apply_permutation",
    "block_size_for_round",
    "build_tree",
    "compare_aggregation",
    "decode_message",
    "disclosed_count",
    "encode_message",
    "export_records",
    "find_unvisited_sibling",
    "frame_fingerprint",
    "gen_lcg_permutation",
    "gen_shuffle_permutation",
    "hamming_distance",
    "initial_block_size",
    "initiator_session",
    "invert_permutation",
    "leakage_report",
    "load_records",
    "mark_compromised",
    "mark_error_leaf",
    "merge_trees",
    "multi_error_frontier",
    "partition_into_blocks",
    "pending_query",
    "plan_round",
    "read_transcript",
    "responder_session",
    "run_paired_trial",
    "run_session_pair",
    "run_trial",
    "run_trial_detailed",
    "set_syndrome",
    "should_terminate",
    "split_point",
    "start",
    "step",
    "sweep_length",
    "sweep_qber",
    "write_transcript",
]
