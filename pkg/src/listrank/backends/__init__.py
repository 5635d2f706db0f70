from .base import (
    Backend,
    BackendError,
    BackendTimeout,
    RankRequest,
    RankResponse,
    RateLimitError,
    ReplayMiss,
    TransportError,
)
from .live import LiveBackend, LiveConfig
from .noisy import FaultSpec, NoisyBackend, corrupt
from .oracle import LatencyModel, OracleBackend
from .replay import ReplayBackend, TranscriptStore

__all__ = [
    "Backend",
    "BackendError",
    "BackendTimeout",
    "FaultSpec",
    "LatencyModel",
    "LiveBackend",
    "LiveConfig",
    "NoisyBackend",
    "OracleBackend",
    "RankRequest",
    "RankResponse",
    "RateLimitError",
    "ReplayBackend",
    "ReplayMiss",
    "TranscriptStore",
    "TransportError",
    "corrupt",
]
