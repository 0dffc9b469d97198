"""Non-learned routing approaches used for comparison and warm starts.

Protocol baselines hold a fixed shortest-path table, recomputed only at
episode start and when links fail. The random baselines draw a fresh
action every step.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigurationError
from .routing import (
    protocol_weights,
    random_link_weights,
    random_next_hop_action,
    weights_to_action,
)

BASELINE_KINDS = ("eigrp", "ospf", "random-nh", "random-lw")


class ProtocolBaseline:
    """Static shortest-path routing under OSPF or EIGRP weights."""

    def __init__(self, protocol: str):
        if protocol not in ("eigrp", "ospf"):
            raise ConfigurationError(f"unknown protocol: {protocol}")
        self.protocol = protocol
        self._topology = None
        self._table = None
        self.recompute_count = 0

    def begin_episode(self, topology) -> None:
        self._topology = topology
        self._recompute(frozenset())

    def _recompute(self, failed: frozenset) -> None:
        weights = protocol_weights(self._topology, failed, self.protocol)
        self._table = weights_to_action(self._topology.n_nodes, weights)
        self.recompute_count += 1

    def act(self, edges: list, topology_changed: bool) -> np.ndarray:
        if topology_changed:
            alive = set(edges)
            failed = frozenset((u, v) for (u, v) in self._topology.undirected_pairs()
                               if (u, v) not in alive)
            self._recompute(failed)
        return self._table


class RandomNextHopBaseline:
    """Fresh uniform next-hop table every step."""

    def __init__(self, rng: np.random.Generator):
        self.rng = rng
        self._topology = None

    def begin_episode(self, topology) -> None:
        self._topology = topology

    def act(self, edges: list, topology_changed: bool) -> np.ndarray:
        return random_next_hop_action(self._topology.n_nodes, list(edges), self.rng)


class RandomLinkWeightBaseline:
    """Fresh uniform link weights every step, routed by shortest paths."""

    def __init__(self, rng: np.random.Generator):
        self.rng = rng
        self._topology = None

    def begin_episode(self, topology) -> None:
        self._topology = topology

    def act(self, edges: list, topology_changed: bool) -> np.ndarray:
        weights = random_link_weights(list(edges), self.rng)
        return weights_to_action(self._topology.n_nodes, weights)


def make_baseline(kind: str, rng: np.random.Generator):
    if kind == "eigrp" or kind == "ospf":
        return ProtocolBaseline(kind)
    if kind == "random-nh":
        return RandomNextHopBaseline(rng)
    if kind == "random-lw":
        return RandomLinkWeightBaseline(rng)
    raise ConfigurationError(f"unknown baseline: {kind}")
