"""Neural key exchange over tree parity machines, with a key distribution
centre service, a passive-listener simulator and a CSV experiment harness."""

from .errors import (
    BoundExceeded,
    ConfigInvalid,
    ConnectionLost,
    DimensionMismatch,
    InvalidState,
    MalformedPayload,
    NetError,
    NeurokdcError,
    Oversize,
    ProtocolViolation,
    Timeout,
    Truncated,
    UnknownType,
    WireError,
)
from .keymat import KeyMaterial, derive_key, deserialize_weights, fnv1a64, serialize_weights
from .rng import SplitMix64, gen_input, gen_weights
from .session import (
    AttackReport,
    EavesdropperState,
    PartnerState,
    SessionConfig,
    SyncReport,
    run_attack_session,
    run_local_session,
)
from .tpm import (
    ANTI_HEBBIAN,
    HEBBIAN,
    InputVector,
    RANDOM_WALK,
    RULES,
    RoundTrace,
    TpmParams,
    WeightMatrix,
    clamp,
    compute_output,
    overlap,
    update_weights,
)

__version__ = "0.1.0"

__all__ = [
    "AttackReport",
    "ANTI_HEBBIAN",
    "BoundExceeded",
    "ConfigInvalid",
    "ConnectionLost",
    "DimensionMismatch",
    "EavesdropperState",
    "HEBBIAN",
    "InputVector",
    "InvalidState",
    "KeyMaterial",
    "MalformedPayload",
    "NetError",
    "NeurokdcError",
    "Oversize",
    "PartnerState",
    "ProtocolViolation",
    "RANDOM_WALK",
    "RULES",
    "RoundTrace",
    "SessionConfig",
    "SplitMix64",
    "SyncReport",
    "Timeout",
    "TpmParams",
    "Truncated",
    "UnknownType",
    "WeightMatrix",
    "WireError",
    "clamp",
    "compute_output",
    "derive_key",
    "deserialize_weights",
    "fnv1a64",
    "gen_input",
    "gen_weights",
    "overlap",
    "run_attack_session",
    "run_local_session",
    "serialize_weights",
    "update_weights",
]
