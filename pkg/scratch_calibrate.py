import time

import numpy as np

from routelab.scenarios.topology import build_topology, pick_model
from routelab.scenarios.failures import FailureProcess, failure_probability
from routelab.packetsim import PacketEnv
from routelab.scenarios import generate_scenario
from routelab.routing import protocol_weights, weights_to_action

# UDP episode timing at the heavy setting
sc = generate_scenario("nx-XS", seed=11, m_traffic=3.0, p_tcp=0.0, model="auto")
action = weights_to_action(sc.topology.n_nodes, protocol_weights(sc.topology))
env = PacketEnv(sc)
env.reset()
t0 = time.time()
g = 0.0
for t in range(100):
    _, m = env.step(action)
    g += m.goodput_mb
print(f"UDP episode: {time.time()-t0:.2f}s goodput={g:.1f}MB demands={len(sc.demands)}")

# Failure-rate calibration on nx-S topologies: mean failures per
# 100-step episode as a function of the exposure-time constant.
t0 = time.time()
topos = []
rng = np.random.default_rng(123)
for i in range(200):
    model = pick_model("nx-S", rng)
    topos.append(build_topology("nx-S", model, rng))
print(f"200 nx-S topologies in {time.time()-t0:.1f}s")

def mean_failures(time_unit, episodes_per_topo=5):
    rng = np.random.default_rng(999)
    total = 0
    n_ep = 0
    for top in topos:
        for _ in range(episodes_per_topo):
            proc = FailureProcess(top.undirected_pairs(), top.n_nodes, rng, time_unit)
            c = 0
            for _ in range(100):
                c += len(proc.draw_step())
            total += c
            n_ep += 1
    return total / n_ep

for tu in [1.5e-7, 1.8e-7, 2.0e-7]:
    t0 = time.time()
    m = mean_failures(tu)
    print(f"time_unit={tu:.2e} p={failure_probability(tu):.3e} mean_failures={m:.3f} ({time.time()-t0:.0f}s)")
