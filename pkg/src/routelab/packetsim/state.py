"""Monitoring snapshot types shared by the simulator and the policies."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

N_GLOBAL_FEATURES = 9
N_EDGE_FEATURES = 10

# Column layout of the per-directed-edge feature matrix.
EDGE_LU = 0
EDGE_TXQ_MAX = 1
EDGE_TXQ_LAST = 2
EDGE_CAPACITY = 3
EDGE_DATARATE = 4
EDGE_DELAY = 5
EDGE_SENT = 6
EDGE_RECEIVED = 7
EDGE_DROPPED_BYTES = 8
EDGE_DROPPED_PKTS = 9

# Index layout of the global feature vector.
GLOB_MAX_LU = 0
GLOB_AVG_LU = 1
GLOB_AVG_DELAY = 2
GLOB_MAX_DELAY = 3
GLOB_AVG_JITTER = 4
GLOB_SENT = 5
GLOB_RECEIVED = 6
GLOB_DROPPED = 7
GLOB_RETRANSMITTED = 8


@dataclass
class NetworkState:
    """Attributed snapshot of the network at a step boundary.

    Edge rows cover the surviving directed edges in sorted order. Global
    byte counters are application payload bytes; per-edge byte counters
    are wire bytes (payload plus headers).
    """

    n_nodes: int
    edges: list[tuple[int, int]]
    edge_features: np.ndarray       # (|E|, 10)
    global_features: np.ndarray     # (9,)
    topology_changed: bool = False  # links failed in the step producing this state

    def edge_index(self) -> dict[tuple[int, int], int]:
        return {e: i for i, e in enumerate(self.edges)}


@dataclass
class StepMetrics:
    """Aggregated performance of one simulated step.

    Byte counters are payload bytes; goodput is received payload in SI
    megabytes. Drop ratio is dropped / (dropped + received) bytes, zero
    when nothing was dropped or received.
    """

    goodput_mb: float = 0.0
    avg_delay_ms: float = 0.0
    max_delay_ms: float = 0.0
    avg_jitter_ms: float = 0.0
    drop_ratio: float = 0.0
    max_lu: float = 0.0
    sent_bytes: int = 0
    received_bytes: int = 0
    dropped_bytes: int = 0
    retransmitted_bytes: int = 0
    injected_packets: int = 0
    delivered_packets: int = 0
    dropped_packets: int = 0
    sent_matrix: np.ndarray | None = field(default=None, repr=False)
