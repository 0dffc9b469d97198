import time

import numpy as np

from routelab.scenarios import generate_scenario, scenario_to_json
from routelab.routing import protocol_weights, weights_to_action, is_loop_free
from routelab.packetsim import PacketEnv

t0 = time.time()
sc = generate_scenario("nx-XS", seed=7, m_traffic=3.0, p_tcp=1.0, model="auto")
t1 = time.time()
print(f"scenario: n={sc.topology.n_nodes} links={len(sc.topology.links)} "
      f"demands={len(sc.demands)} gen_time={t1-t0:.2f}s")
sizes = [d.size_bytes for d in sc.demands]
print(f"demand sizes: median={np.median(sizes):.0f} max={max(sizes):.2e} "
      f"tcp_frac={np.mean([d.is_tcp for d in sc.demands]):.2f}")

js = scenario_to_json(sc)
sc2 = generate_scenario("nx-XS", seed=7, m_traffic=3.0, p_tcp=1.0, model="auto")
print("determinism:", scenario_to_json(sc2) == js, f"json_bytes={len(js)}")

w = protocol_weights(sc.topology)
action = weights_to_action(sc.topology.n_nodes, w)
print("eigrp action loop-free:", is_loop_free(action, sc.topology.n_nodes))

env = PacketEnv(sc)
env.reset()
t0 = time.time()
goodput = drops = 0.0
for t in range(100):
    state, m = env.step(action)
    goodput += m.goodput_mb
    drops += m.dropped_bytes
t1 = time.time()
inj, deliv, drop, resid = env.conservation()
print(f"episode: {t1-t0:.2f}s goodput={goodput:.3f}MB dropped={drops/1e6:.3f}MB")
print(f"conservation: injected={inj} delivered={deliv} dropped={drop} residual={resid} "
      f"ok={inj == deliv + drop + resid}")
print(f"avg delay last step={m.avg_delay_ms:.2f}ms maxLU={m.max_lu:.3f}")
