"""Scenario assembly and canonical serialization.

A scenario bundles one attributed topology with the episode's traffic
demands and link-failure schedule, all derived from a single seed. The
JSON form is canonical: sorted keys, compact separators, floats quantized
to 9 significant digits at generation time, so equal scenarios serialize
to identical bytes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigurationError
from .failures import DEFAULT_FAILURE_TIME_UNIT_S, FailureProcess
from .topology import PRESETS, Link, Topology, build_topology, pick_model
from .traffic import TrafficDemand, generate_traffic

DEFAULT_HORIZON_STEPS = 100
DEFAULT_STEP_MS = 5.0


@dataclass(frozen=True)
class LinkFailureEvent:
    """Permanent failure of one undirected link at the start of a step."""

    step: int
    u: int
    v: int


@dataclass
class NetworkScenario:
    """Everything one episode needs: topology, demands, failure schedule."""

    seed: int
    preset: str
    topology: Topology
    demands: list[TrafficDemand]
    failures: list[LinkFailureEvent] = field(default_factory=list)

    def failures_at(self, step: int) -> list[tuple[int, int]]:
        return [(f.u, f.v) for f in self.failures if f.step == step]


def canonical_float(x: float) -> float:
    """Quantize to 9 significant digits (stable under repeated application)."""
    return float(format(float(x), ".9g"))


def _canonical_topology(top: Topology) -> Topology:
    links = [
        Link(
            l.u,
            l.v,
            canonical_float(l.datarate_bps),
            canonical_float(l.delay_ms),
            int(l.buffer_bytes),
        )
        for l in top.links
    ]
    potentials = np.array([canonical_float(p) for p in top.potentials])
    return Topology(n_nodes=top.n_nodes, links=links, potentials=potentials)


def _canonical_demands(demands: list[TrafficDemand]) -> list[TrafficDemand]:
    return [
        TrafficDemand(
            t_ms=canonical_float(d.t_ms),
            src=d.src,
            dst=d.dst,
            size_bytes=int(d.size_bytes),
            kind=d.kind,
            udp_rate_bps=canonical_float(d.udp_rate_bps),
        )
        for d in demands
    ]


def generate_scenario(
    preset: str,
    seed: int,
    m_traffic: float,
    p_tcp: float,
    model: str = "auto",
    link_failures: bool = False,
    horizon_steps: int = DEFAULT_HORIZON_STEPS,
    step_ms: float = DEFAULT_STEP_MS,
    failure_time_unit_s: float = DEFAULT_FAILURE_TIME_UNIT_S,
) -> NetworkScenario:
    """Generate one fully reproducible scenario from a single seed.

    The generator stream is consumed in a fixed order (model pick,
    topology, traffic, failures), so identical inputs give byte-identical
    serialized scenarios.
    """
    if preset not in PRESETS:
        raise ConfigurationError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
    rng = np.random.default_rng(seed)
    chosen_model = pick_model(preset, rng) if model == "auto" else model
    topology = build_topology(preset, chosen_model, rng)
    demands = generate_traffic(
        topology.potentials,
        rng,
        m_traffic=m_traffic,
        p_tcp=p_tcp,
        horizon_steps=horizon_steps,
        step_ms=step_ms,
    )
    failures: list[LinkFailureEvent] = []
    if link_failures:
        process = FailureProcess(
            topology.undirected_pairs(),
            topology.n_nodes,
            rng,
            time_unit_s=failure_time_unit_s,
        )
        for step in range(horizon_steps):
            for u, v in process.draw_step():
                failures.append(LinkFailureEvent(step=step, u=u, v=v))
    return NetworkScenario(
        seed=seed,
        preset=preset,
        topology=_canonical_topology(topology),
        demands=_canonical_demands(demands),
        failures=failures,
    )


def scenario_to_dict(scenario: NetworkScenario) -> dict:
    top = scenario.topology
    return {
        "seed": scenario.seed,
        "preset": scenario.preset,
        "topology": {
            "nodes": top.nodes,
            "links": [
                {
                    "u": l.u,
                    "v": l.v,
                    "datarate_bps": l.datarate_bps,
                    "delay_ms": l.delay_ms,
                    "buffer_bytes": l.buffer_bytes,
                }
                for l in top.links
            ],
            "potentials": [float(p) for p in top.potentials],
        },
        "demands": [
            {
                "t_ms": d.t_ms,
                "src": d.src,
                "dst": d.dst,
                "bytes": d.size_bytes,
                "kind": d.kind,
                "udp_rate_bps": d.udp_rate_bps,
            }
            for d in scenario.demands
        ],
        "failures": [{"step": f.step, "u": f.u, "v": f.v} for f in scenario.failures],
    }


def scenario_to_json(scenario: NetworkScenario) -> str:
    return json.dumps(scenario_to_dict(scenario), sort_keys=True, separators=(",", ":"))


def scenario_from_dict(data: dict) -> NetworkScenario:
    top = data["topology"]
    links = [
        Link(l["u"], l["v"], l["datarate_bps"], l["delay_ms"], l["buffer_bytes"])
        for l in top["links"]
    ]
    topology = Topology(
        n_nodes=len(top["nodes"]),
        links=links,
        potentials=np.array(top["potentials"], dtype=float),
    )
    demands = [
        TrafficDemand(
            t_ms=d["t_ms"],
            src=d["src"],
            dst=d["dst"],
            size_bytes=d["bytes"],
            kind=d["kind"],
            udp_rate_bps=d["udp_rate_bps"],
        )
        for d in data["demands"]
    ]
    failures = [LinkFailureEvent(f["step"], f["u"], f["v"]) for f in data["failures"]]
    return NetworkScenario(
        seed=data["seed"],
        preset=data["preset"],
        topology=topology,
        demands=demands,
        failures=failures,
    )


def save_scenario(scenario: NetworkScenario, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(scenario_to_json(scenario))


def load_scenario(path: str) -> NetworkScenario:
    with open(path, "r", encoding="utf-8") as fh:
        return scenario_from_dict(json.load(fh))
