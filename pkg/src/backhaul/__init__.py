"""Achievable rates for layered multihop backhaul under group successive
relaying: quantize-and-bin forwarding with optimized levels, practical
receiver front ends, and relay selection on clustered deployments."""

from .asymptotic import (
    DenseParams,
    SparseParams,
    dense_ladder,
    iid_mimo_rate,
    sparse_ladder,
    wyner_band_rate,
)
from .errors import (
    BackhaulError,
    ConfigError,
    InfeasibleRoutingError,
    NumericalError,
    ParameterError,
    SingularStageError,
    WarmUpError,
)
from .network import (
    ClusterModel,
    DenseIIDModel,
    LayeredNetwork,
    NetworkParams,
    PowerRule,
    WynerModel,
    build_network,
)
from .rate_core import (
    NOISE_LEVEL,
    OPTIMAL,
    STAGE_DEPTH,
    WYNER_ZIV,
    QuantizationPolicy,
    RateLadder,
    marc_symmetric_rate,
    mr_rate_dense,
    mr_rate_sparse,
    policy_from_name,
    run_recursion,
)
from .receivers import (
    Equalizer,
    QuantizedStage,
    ReceiverKind,
    combination_rates,
    equalizer_matrix,
    receiver_from_name,
    receiver_ladder,
    stream_rate,
    wyner_ziv_level,
)
from .routing import (
    ClusterGrid,
    RoutingMetric,
    RoutingState,
    establish_paths,
    evaluate_routed_network,
    metric_from_name,
    mimo_capacity_metric,
    received_power_metric,
    route_dump,
    stage_matrices,
)
from .schedule import (
    ScheduleLog,
    build_schedule,
    dump_schedule,
    known_interference_set,
    validate_half_duplex,
)

__version__ = "0.1.0"

__all__ = [
    "BackhaulError",
    "ConfigError",
    "InfeasibleRoutingError",
    "NumericalError",
    "ParameterError",
    "SingularStageError",
    "WarmUpError",
    "NetworkParams",
    "WynerModel",
    "DenseIIDModel",
    "ClusterModel",
    "PowerRule",
    "LayeredNetwork",
    "build_network",
    "QuantizationPolicy",
    "RateLadder",
    "NOISE_LEVEL",
    "STAGE_DEPTH",
    "WYNER_ZIV",
    "OPTIMAL",
    "policy_from_name",
    "marc_symmetric_rate",
    "run_recursion",
    "mr_rate_sparse",
    "mr_rate_dense",
    "SparseParams",
    "DenseParams",
    "sparse_ladder",
    "dense_ladder",
    "wyner_band_rate",
    "iid_mimo_rate",
    "ReceiverKind",
    "QuantizedStage",
    "Equalizer",
    "receiver_from_name",
    "wyner_ziv_level",
    "equalizer_matrix",
    "stream_rate",
    "combination_rates",
    "receiver_ladder",
    "ClusterGrid",
    "RoutingMetric",
    "RoutingState",
    "metric_from_name",
    "mimo_capacity_metric",
    "received_power_metric",
    "establish_paths",
    "stage_matrices",
    "evaluate_routed_network",
    "route_dump",
    "ScheduleLog",
    "build_schedule",
    "dump_schedule",
    "known_interference_set",
    "validate_half_duplex",
]
