"""Random network topology synthesis.

Generates connected random graphs (Barabasi-Albert, Erdos-Renyi or
Watts-Strogatz flavour), derives per-node traffic potentials from a
force-directed layout, and attaches datarate / delay / buffer attributes
to the links. Everything is driven by a single numpy Generator so that a
scenario is reproducible from one seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from ..errors import ConfigurationError

# Node-count ranges of the size presets.
PRESETS: dict[str, tuple[int, int]] = {
    "nx-XS": (6, 10),
    "nx-S": (11, 25),
    "nx-M": (26, 50),
    "nx-L": (51, 100),
    "nx-XL": (101, 250),
}

MODELS = ("BA", "ER", "WS")

BA_ATTACH = 2          # edges attached per new node
BA_MAX_NODES = 50      # degree kurtosis explodes above this
ER_AVG_DEGREE = 3.0
WS_ATTACH = 4          # ring-lattice neighbours (2 per side)
WS_REWIRE_P = 0.3
LAYOUT_SEED = 9001
LAYOUT_ITERATIONS = 50
ER_MAX_ATTEMPTS = 10_000

DEFAULT_DELAY_MEAN_MS = 5.0
DEFAULT_DATARATE_MIN = 50e6
DEFAULT_DATARATE_MAX = 200e6
DEFAULT_PERTURBATION = 0.1
DEFAULT_WEIGHT_TRADEOFF = 0.6
DEFAULT_WEIGHT_MAX = 10.0
MIN_DELAY_MS = 1.0


@dataclass(frozen=True)
class Link:
    """One undirected physical link; both directions share these attributes."""

    u: int
    v: int
    datarate_bps: float
    delay_ms: float
    buffer_bytes: int


@dataclass
class Topology:
    """Connected graph of routing nodes with attributed full-duplex links."""

    n_nodes: int
    links: list[Link]
    potentials: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def nodes(self) -> list[int]:
        return list(range(self.n_nodes))

    def undirected_pairs(self) -> list[tuple[int, int]]:
        return [(l.u, l.v) for l in self.links]

    def directed_edges(
        self, failed: frozenset[tuple[int, int]] | set[tuple[int, int]] = frozenset()
    ) -> list[tuple[int, int]]:
        """All directed edges (two per surviving link), sorted lexicographically."""
        edges = []
        for l in self.links:
            if (l.u, l.v) in failed or (l.v, l.u) in failed:
                continue
            edges.append((l.u, l.v))
            edges.append((l.v, l.u))
        edges.sort()
        return edges

    def link_between(self, u: int, v: int) -> Link:
        key = (u, v) if u < v else (v, u)
        return self._link_index()[key]

    def _link_index(self) -> dict[tuple[int, int], Link]:
        idx = getattr(self, "_links_by_pair", None)
        if idx is None:
            idx = {(min(l.u, l.v), max(l.u, l.v)): l for l in self.links}
            object.__setattr__(self, "_links_by_pair", idx)
        return idx

    def to_nx(self, failed=frozenset()) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.n_nodes))
        for l in self.links:
            if (l.u, l.v) not in failed and (l.v, l.u) not in failed:
                g.add_edge(l.u, l.v)
        return g


def _barabasi_albert(n: int, rng: np.random.Generator) -> nx.Graph:
    # Seed graph: two nodes joined by one edge; each newcomer attaches
    # BA_ATTACH distinct targets with probability proportional to degree.
    g = nx.Graph()
    g.add_edge(0, 1)
    degrees = np.zeros(n, dtype=float)
    degrees[0] = degrees[1] = 1.0
    for new in range(2, n):
        candidates = np.arange(new)
        targets: list[int] = []
        weights = degrees[:new].copy()
        for _ in range(min(BA_ATTACH, new)):
            p = weights / weights.sum()
            pick = int(rng.choice(candidates, p=p))
            targets.append(pick)
            weights[pick] = 0.0
        for t in targets:
            g.add_edge(new, t)
            degrees[t] += 1.0
            degrees[new] += 1.0
    return g


def _erdos_renyi(n: int, rng: np.random.Generator) -> nx.Graph:
    p = ER_AVG_DEGREE / (n - 1)
    for _ in range(ER_MAX_ATTEMPTS):
        g = nx.Graph()
        g.add_nodes_from(range(n))
        for i in range(n):
            for j in range(i + 1, n):
                if rng.random() < p:
                    g.add_edge(i, j)
        if nx.is_connected(g):
            return g
    raise ConfigurationError(
        f"no connected ER graph with n={n}, p={p:.4f} after {ER_MAX_ATTEMPTS} attempts"
    )


def _watts_strogatz(n: int, rng: np.random.Generator) -> nx.Graph:
    half = WS_ATTACH // 2
    for _ in range(ER_MAX_ATTEMPTS):
        g = nx.Graph()
        g.add_nodes_from(range(n))
        for i in range(n):
            for k in range(1, half + 1):
                g.add_edge(i, (i + k) % n)
        # Rewire each lattice edge away from its clockwise endpoint.
        for i in range(n):
            for k in range(1, half + 1):
                j = (i + k) % n
                if rng.random() < WS_REWIRE_P:
                    choices = [
                        w for w in range(n) if w != i and not g.has_edge(i, w)
                    ]
                    if not choices:
                        continue
                    w = choices[int(rng.integers(len(choices)))]
                    if g.has_edge(i, j):
                        g.remove_edge(i, j)
                        g.add_edge(i, w)
        if nx.is_connected(g):
            return g
    raise ConfigurationError(f"no connected WS graph with n={n} after {ER_MAX_ATTEMPTS} attempts")


def generate_topology(preset: str, model: str, rng: np.random.Generator) -> nx.Graph:
    """Draw a connected random graph for the given size preset.

    The node count is uniform over the preset's range. Disconnected draws
    are rejected and resampled with fresh randomness.
    """
    if preset not in PRESETS:
        raise ConfigurationError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
    if model not in MODELS:
        raise ConfigurationError(f"unknown topology model {model!r}; choose from {MODELS}")
    lo, hi = PRESETS[preset]
    n = int(rng.integers(lo, hi + 1))
    if model == "BA":
        if hi > BA_MAX_NODES:
            raise ConfigurationError(
                f"BA model is limited to {BA_MAX_NODES} nodes; preset {preset} allows up to {hi}"
            )
        return _barabasi_albert(n, rng)
    if model == "ER":
        return _erdos_renyi(n, rng)
    return _watts_strogatz(n, rng)


def pick_model(preset: str, rng: np.random.Generator) -> str:
    """Uniformly pick a topology model allowed for the preset."""
    allowed = [m for m in MODELS if not (m == "BA" and PRESETS[preset][1] > BA_MAX_NODES)]
    return allowed[int(rng.integers(len(allowed)))]


def layout_positions(graph: nx.Graph) -> np.ndarray:
    """Deterministic 2-D force-directed embedding, centered on the origin."""
    pos = nx.spring_layout(
        graph, iterations=LAYOUT_ITERATIONS, seed=LAYOUT_SEED, center=(0.0, 0.0)
    )
    return np.array([pos[i] for i in sorted(graph.nodes)])


def _rescale_unit_interval(values: np.ndarray, lo: float, hi: float) -> np.ndarray:
    vmin, vmax = float(values.min()), float(values.max())
    if vmax - vmin <= 1e-12:
        return np.full_like(values, lo)
    return lo + (hi - lo) * (values - vmin) / (vmax - vmin)


def compute_node_potentials(
    graph: nx.Graph,
    positions: np.ndarray,
    tradeoff: float = DEFAULT_WEIGHT_TRADEOFF,
    weight_max: float = DEFAULT_WEIGHT_MAX,
) -> np.ndarray:
    """Normalized traffic potential per node, max exactly 1.

    Blends degree weights with inverse-origin-distance location weights,
    both rescaled to [1, weight_max]. All-equal inputs rescale to 1
    (degenerate but valid).
    """
    n = graph.number_of_nodes()
    degrees = np.array([graph.degree(i) for i in range(n)], dtype=float)
    dist = np.linalg.norm(positions, axis=1)
    inv_dist = 1.0 / np.maximum(dist, 1e-9)
    w_degree = _rescale_unit_interval(degrees, 1.0, weight_max)
    w_location = _rescale_unit_interval(inv_dist, 1.0, weight_max)
    raw = tradeoff * w_degree + (1.0 - tradeoff) * w_location
    return raw / raw.max()


def blend_weights(w_degree: np.ndarray, w_location: np.ndarray, tradeoff: float) -> np.ndarray:
    """Potential blend on already-rescaled weights (exposed for direct checks)."""
    raw = tradeoff * np.asarray(w_degree, float) + (1.0 - tradeoff) * np.asarray(w_location, float)
    return raw / raw.max()


def assign_link_attributes(
    graph: nx.Graph,
    positions: np.ndarray,
    potentials: np.ndarray,
    rng: np.random.Generator,
    delay_mean_ms: float = DEFAULT_DELAY_MEAN_MS,
    datarate_min: float = DEFAULT_DATARATE_MIN,
    datarate_max: float = DEFAULT_DATARATE_MAX,
    perturbation: float = DEFAULT_PERTURBATION,
) -> Topology:
    """Attach delay, datarate and buffer capacity to every link.

    Delays come from perturbed euclidean node distances rescaled to the
    target mean (clamped at 1 ms). Datarates take the greater endpoint
    potential, perturbed, then affinely rescaled into [datarate_min,
    datarate_max]. Buffers hold one datarate * round-trip-delay product.
    """
    pairs = sorted((min(u, v), max(u, v)) for u, v in graph.edges)
    dists = np.array([np.linalg.norm(positions[u] - positions[v]) for u, v in pairs])
    delays = dists * (1.0 + rng.uniform(-perturbation, perturbation, len(pairs)))
    mean = delays.mean()
    if mean <= 1e-12:
        delays = np.full(len(pairs), delay_mean_ms)
    else:
        delays = delays * (delay_mean_ms / mean)
    delays = np.maximum(delays, MIN_DELAY_MS)

    raw_rate = np.array([max(potentials[u], potentials[v]) for u, v in pairs])
    raw_rate = raw_rate * (1.0 + rng.uniform(-perturbation, perturbation, len(pairs)))
    lo, hi = float(raw_rate.min()), float(raw_rate.max())
    if hi - lo <= 1e-12:
        rates = np.full(len(pairs), datarate_max)
    else:
        rates = datarate_min + (datarate_max - datarate_min) * (raw_rate - lo) / (hi - lo)

    links = []
    for (u, v), rate, delay in zip(pairs, rates, delays):
        rtt_s = 2.0 * delay / 1000.0
        buffer_bytes = int(round(rate * rtt_s / 8.0))
        links.append(Link(u, v, float(rate), float(delay), buffer_bytes))
    return Topology(n_nodes=graph.number_of_nodes(), links=links, potentials=potentials)


def build_topology(
    preset: str,
    model: str,
    rng: np.random.Generator,
    delay_mean_ms: float = DEFAULT_DELAY_MEAN_MS,
    datarate_min: float = DEFAULT_DATARATE_MIN,
    datarate_max: float = DEFAULT_DATARATE_MAX,
    perturbation: float = DEFAULT_PERTURBATION,
) -> Topology:
    """Full topology pipeline: random graph, layout, potentials, link attributes."""
    graph = generate_topology(preset, model, rng)
    positions = layout_positions(graph)
    potentials = compute_node_potentials(graph, positions)
    return assign_link_attributes(
        graph,
        positions,
        potentials,
        rng,
        delay_mean_ms=delay_mean_ms,
        datarate_min=datarate_min,
        datarate_max=datarate_max,
        perturbation=perturbation,
    )
