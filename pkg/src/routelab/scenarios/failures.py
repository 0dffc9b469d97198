"""Permanent link-failure process.

Each control step, every surviving link fails independently with a small
probability derived from a Weibull lifetime model. Failures that would
disconnect the network are suppressed at draw time, so the surviving
graph stays connected after every step.
"""

from __future__ import annotations

import networkx as nx
import numpy as np

WEIBULL_SHAPE = 0.8
WEIBULL_SCALE = 0.001
# Virtual exposure time per step fed into the lifetime CDF. Calibrated so
# the mid-size preset averages about 2.38 failures per 100-step episode.
DEFAULT_FAILURE_TIME_UNIT_S = 1.32e-7


def failure_probability(
    time_unit_s: float = DEFAULT_FAILURE_TIME_UNIT_S,
    shape: float = WEIBULL_SHAPE,
    scale: float = WEIBULL_SCALE,
) -> float:
    """Weibull CDF at the per-step exposure time."""
    return float(1.0 - np.exp(-((time_unit_s / scale) ** shape)))


class FailureProcess:
    """Draws permanent, connectivity-preserving link failures step by step.

    Draw order is the sorted link list, so a seeded generator reproduces
    the exact failure sequence. A success on a bridge is discarded rather
    than redrawn.
    """

    def __init__(
        self,
        pairs: list[tuple[int, int]],
        n_nodes: int,
        rng: np.random.Generator,
        time_unit_s: float = DEFAULT_FAILURE_TIME_UNIT_S,
    ):
        self.pairs = sorted((min(u, v), max(u, v)) for u, v in pairs)
        self.n_nodes = n_nodes
        self.rng = rng
        self.p = failure_probability(time_unit_s)
        self.failed: set[tuple[int, int]] = set()

    def _surviving_graph(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.n_nodes))
        g.add_edges_from(p for p in self.pairs if p not in self.failed)
        return g

    def draw_step(self) -> list[tuple[int, int]]:
        """Advance one step; returns the links that failed this step."""
        new_failures: list[tuple[int, int]] = []
        bridges: set[tuple[int, int]] | None = None
        for pair in self.pairs:
            if pair in self.failed:
                continue
            if self.rng.random() >= self.p:
                continue
            if bridges is None:
                bridges = {
                    (min(a, b), max(a, b)) for a, b in nx.bridges(self._surviving_graph())
                }
            if pair in bridges:
                continue
            self.failed.add(pair)
            new_failures.append(pair)
            bridges = None  # removal changes the bridge set
        return new_failures
