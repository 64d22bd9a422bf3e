"""Fountain coding with decoder feedback.

Baseline LT codes plus three feedback-driven variants (full distance
reports, one-bit quantized reports, and delete-and-conquer
acknowledgments), with an erasure-channel simulator, closed-form and
Markov-chain expectations for tiny blocks, and union bounds on
maximum-likelihood decoding failure.
"""

from .analysis import (
    CostModel,
    DegreeProbs3,
    K2Expected,
    MarkovModel,
    OptimizeResult,
    build_markov_k3,
    expected_steps,
    fundamental_matrix,
    k2_expected,
    k3_fdel,
    k3_ndel,
    k3_nlt,
    optimize_costs,
    visit_probabilities,
)
from .bounds import (
    FeedbackSchedule,
    WeightProfile,
    interval_zero_prob,
    ml_failure_bound_feedback,
    ml_failure_bound_nofeedback,
    row_zero_prob,
    schedule_from_trace,
    weight_profiles,
)
from .codec import (
    DecoderState,
    EncodingSymbol,
    GeneratorMatrix,
    InputBlock,
    MLResult,
    distance,
    ml_decode,
    peel,
    random_block,
    xor_combine,
)
from .degree import (
    DegreeDistribution,
    RobustSolitonParams,
    ideal_soliton,
    rescale,
    robust_soliton,
    sample_degree,
    truncate,
)
from .encoders import (
    DncState,
    LabelState,
    SentLog,
    all_distance_next,
    dnc_ack,
    dnc_next,
    lt_next,
    partition,
    quantized_apply,
    selection_weights,
    update_labels,
)
from .errors import (
    CapacityError,
    CapExceededError,
    DataCorruptionError,
    FountainError,
    InvalidParameterError,
    MalformedMessageError,
    ProtocolError,
    SingularModelError,
    WireEncodeError,
)
from .feedback import (
    DeleteAck,
    DistanceReport,
    FeedbackMessage,
    FeedbackPolicy,
    QuantizedReport,
    Terminate,
    decode_wire,
    encode_wire,
    feedback_bit_cost,
    on_receive,
)
from .simulator import (
    SessionConfig,
    SessionTrace,
    TraceRow,
    average_input_degree,
    export_csv,
    fast_mc_small_k,
    intermediate_curve,
    mae,
    run_many,
    run_session,
)

__version__ = "0.1.0"

__all__ = [
    "CapExceededError",
    "CapacityError",
    "CostModel",
    "DataCorruptionError",
    "DecoderState",
    "DegreeDistribution",
    "DegreeProbs3",
    "DeleteAck",
    "DistanceReport",
    "DncState",
    "EncodingSymbol",
    "FeedbackMessage",
    "FeedbackPolicy",
    "FeedbackSchedule",
    "FountainError",
    "GeneratorMatrix",
    "InputBlock",
    "InvalidParameterError",
    "K2Expected",
    "LabelState",
    "MLResult",
    "MalformedMessageError",
    "MarkovModel",
    "OptimizeResult",
    "ProtocolError",
    "QuantizedReport",
    "RobustSolitonParams",
    "SentLog",
    "SessionConfig",
    "SessionTrace",
    "SingularModelError",
    "Terminate",
    "TraceRow",
    "WeightProfile",
    "WireEncodeError",
    "all_distance_next",
    "average_input_degree",
    "build_markov_k3",
    "decode_wire",
    "distance",
    "dnc_ack",
    "dnc_next",
    "encode_wire",
    "expected_steps",
    "export_csv",
    "fast_mc_small_k",
    "feedback_bit_cost",
    "fundamental_matrix",
    "ideal_soliton",
    "intermediate_curve",
    "interval_zero_prob",
    "k2_expected",
    "k3_fdel",
    "k3_ndel",
    "k3_nlt",
    "lt_next",
    "mae",
    "ml_decode",
    "ml_failure_bound_feedback",
    "ml_failure_bound_nofeedback",
    "on_receive",
    "optimize_costs",
    "partition",
    "peel",
    "quantized_apply",
    "random_block",
    "rescale",
    "robust_soliton",
    "row_zero_prob",
    "run_many",
    "run_session",
    "sample_degree",
    "schedule_from_trace",
    "selection_weights",
    "truncate",
    "update_labels",
    "visit_probabilities",
    "weight_profiles",
    "xor_combine",
]
