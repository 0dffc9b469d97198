"""Random network scenario generation: topology, traffic, failures."""

from .failures import DEFAULT_FAILURE_TIME_UNIT_S, FailureProcess, failure_probability
from .scenario import (
    DEFAULT_HORIZON_STEPS,
    DEFAULT_STEP_MS,
    LinkFailureEvent,
    NetworkScenario,
    canonical_float,
    generate_scenario,
    load_scenario,
    save_scenario,
    scenario_from_dict,
    scenario_to_dict,
    scenario_to_json,
)
from .topology import (
    PRESETS,
    Link,
    Topology,
    build_topology,
    compute_node_potentials,
    generate_topology,
    layout_positions,
)
from .traffic import (
    TrafficDemand,
    generate_traffic,
    gravity_traffic_matrix,
    interarrival_scale,
    sample_demand_sizes,
    sample_interarrivals,
    size_shape,
)

__all__ = [
    "DEFAULT_FAILURE_TIME_UNIT_S",
    "DEFAULT_HORIZON_STEPS",
    "DEFAULT_STEP_MS",
    "FailureProcess",
    "LinkFailureEvent",
    "Link",
    "NetworkScenario",
    "PRESETS",
    "Topology",
    "TrafficDemand",
    "build_topology",
    "canonical_float",
    "compute_node_potentials",
    "failure_probability",
    "generate_scenario",
    "generate_topology",
    "generate_traffic",
    "gravity_traffic_matrix",
    "interarrival_scale",
    "layout_positions",
    "load_scenario",
    "sample_demand_sizes",
    "sample_interarrivals",
    "save_scenario",
    "scenario_from_dict",
    "scenario_to_dict",
    "scenario_to_json",
    "size_shape",
]
