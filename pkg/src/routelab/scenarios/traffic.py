"""Traffic demand synthesis.

Builds a gravity-style traffic matrix from node potentials, then expands
each origin-destination cell into a demand list: log-logistic interarrival
times (milliseconds), heavy-tailed Pareto sizes (bytes), and a Bernoulli
TCP/UDP protocol mark. All times are milliseconds within the episode.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError

INTERARRIVAL_SHAPE = 1.5
INTERARRIVAL_CAP_MS = 50.0       # trims the top ~0.1% of the gap distribution
SIZE_SCALE_BYTES = 10.0
SIZE_CAP_BYTES = 1e12            # guards the heavy tail
SMALL_UDP_BYTES = 100_000        # below this a UDP demand bursts at full rate
UDP_BURST_RATE_BPS = 1e9
UDP_RATE_LOW_BPS = 1e6
UDP_RATE_HIGH_BPS = 5e6
DEFAULT_FLOW_TRADEOFF = 0.5
DEFAULT_SIZE_SHAPE_BASE = 0.4


@dataclass(frozen=True)
class TrafficDemand:
    """One application demand to inject during an episode."""

    t_ms: float
    src: int
    dst: int
    size_bytes: int
    kind: str                    # "TCP" or "UDP"
    udp_rate_bps: float = 0.0    # 0 for TCP demands

    @property
    def is_tcp(self) -> bool:
        return self.kind == "TCP"


def size_shape(flow_tradeoff: float = DEFAULT_FLOW_TRADEOFF,
               base: float = DEFAULT_SIZE_SHAPE_BASE) -> float:
    """Pareto shape for the demand-size distribution."""
    if flow_tradeoff <= 0:
        raise ConfigurationError(f"flow tradeoff must be positive, got {flow_tradeoff}")
    return base + np.log(1.0 / flow_tradeoff) / 37.0


def interarrival_scale(m_traffic: float, flow_tradeoff: float = DEFAULT_FLOW_TRADEOFF) -> float:
    """Log-logistic scale (= median gap, ms) for demand arrivals."""
    if m_traffic <= 0:
        raise ConfigurationError(f"traffic scale must be positive, got {m_traffic}")
    return (flow_tradeoff + 0.2) / m_traffic


def sample_interarrivals(scale: float, shape: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """Log-logistic draws (ms) via inverse CDF, each capped at 50 ms."""
    u = rng.random(n)
    gaps = scale * (u / (1.0 - u)) ** (1.0 / shape)
    return np.minimum(gaps, INTERARRIVAL_CAP_MS)


def sample_demand_sizes(shape: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """Pareto draws (bytes) via inverse CDF, capped to keep the tail finite."""
    u = rng.random(n)
    sizes = SIZE_SCALE_BYTES / (1.0 - u) ** (1.0 / shape)
    return np.minimum(sizes, SIZE_CAP_BYTES)


def gravity_traffic_matrix(
    potentials: np.ndarray, rng: np.random.Generator, perturbation: float = 0.1
) -> np.ndarray:
    """Outer-product demand intensity with multiplicative noise, zero diagonal."""
    c = np.asarray(potentials, dtype=float)
    base = np.outer(c, c)
    noise = 1.0 + rng.uniform(-perturbation, perturbation, base.shape)
    tm = base * noise
    np.fill_diagonal(tm, 0.0)
    return tm


def generate_traffic(
    potentials: np.ndarray,
    rng: np.random.Generator,
    m_traffic: float,
    p_tcp: float,
    horizon_steps: int = 100,
    step_ms: float = 5.0,
    flow_tradeoff: float = DEFAULT_FLOW_TRADEOFF,
    interarrival_shape: float = INTERARRIVAL_SHAPE,
    size_shape_base: float = DEFAULT_SIZE_SHAPE_BASE,
    perturbation: float = 0.1,
) -> list[TrafficDemand]:
    """Expand node potentials into a time-sorted demand list.

    Per ordered pair (i, j) with intensity b: arrival gaps accumulate on a
    virtual clock until it passes b * horizon; dividing the accumulated
    times by b then spreads the arrivals over the episode, so hotter pairs
    get proportionally more demands.
    """
    if not 0.0 <= p_tcp <= 1.0:
        raise ConfigurationError(f"TCP fraction must lie in [0, 1], got {p_tcp}")
    tm = gravity_traffic_matrix(potentials, rng, perturbation)
    horizon_ms = horizon_steps * step_ms
    scale = interarrival_scale(m_traffic, flow_tradeoff)
    shape_size = size_shape(flow_tradeoff, size_shape_base)
    n = tm.shape[0]
    demands: list[TrafficDemand] = []
    for i in range(n):
        for j in range(n):
            b = tm[i, j]
            if b <= 0.0 or i == j:
                continue
            budget = b * horizon_ms
            clock = 0.0
            arrivals: list[float] = []
            while clock < budget:
                gaps = sample_interarrivals(scale, interarrival_shape, 64, rng)
                for g in gaps:
                    clock += g
                    if clock >= budget:
                        break
                    arrivals.append(clock / b)
            if not arrivals:
                continue
            starts = np.array(arrivals)
            starts = starts[starts < horizon_ms]
            m = len(starts)
            if m == 0:
                continue
            sizes = sample_demand_sizes(shape_size, m, rng)
            is_tcp = rng.random(m) < p_tcp
            udp_rates = rng.uniform(UDP_RATE_LOW_BPS, UDP_RATE_HIGH_BPS, m)
            for k in range(m):
                size = int(round(sizes[k]))
                if is_tcp[k]:
                    kind, rate = "TCP", 0.0
                elif size < SMALL_UDP_BYTES:
                    kind, rate = "UDP", UDP_BURST_RATE_BPS
                else:
                    kind, rate = "UDP", float(udp_rates[k])
                demands.append(
                    TrafficDemand(
                        t_ms=float(starts[k]),
                        src=i,
                        dst=j,
                        size_bytes=size,
                        kind=kind,
                        udp_rate_bps=rate,
                    )
                )
    demands.sort(key=lambda d: (d.t_ms, d.src, d.dst))
    return demands
