"""Packet-level discrete-event simulation."""

from .core import (
    ACK_WIRE_BYTES,
    HEADER_BYTES,
    HOP_LIMIT,
    MAX_WIRE_BYTES,
    MSS,
    PacketSimulator,
    TcpConn,
)
from .env import PacketEnv
from .state import (
    N_EDGE_FEATURES,
    N_GLOBAL_FEATURES,
    NetworkState,
    StepMetrics,
)

__all__ = [
    "ACK_WIRE_BYTES",
    "HEADER_BYTES",
    "HOP_LIMIT",
    "MAX_WIRE_BYTES",
    "MSS",
    "N_EDGE_FEATURES",
    "N_GLOBAL_FEATURES",
    "NetworkState",
    "PacketEnv",
    "PacketSimulator",
    "StepMetrics",
    "TcpConn",
]
