"""Event-driven packet simulator: fixtures with known answers."""

import numpy as np
import pytest

from routelab.packetsim import PacketEnv
from routelab.packetsim.core import HEADER_BYTES, MSS, PacketSimulator
from routelab.routing import protocol_weights, weights_to_action
from routelab.scenarios import generate_scenario
from routelab.scenarios.scenario import LinkFailureEvent, NetworkScenario
from routelab.scenarios.topology import Link, Topology
from routelab.scenarios.traffic import TrafficDemand

WIRE = MSS + HEADER_BYTES  # 1500


def one_link_scenario(demands, rate_bps=10e6, delay_ms=1.0, buffer_bytes=50_000):
    top = Topology(
        n_nodes=2,
        links=[Link(0, 1, rate_bps, delay_ms, buffer_bytes)],
        potentials=np.ones(2),
    )
    return NetworkScenario(seed=0, preset="nx-XS", topology=top, demands=demands)


def direct_table():
    return np.array([[0, 1], [0, 1]], dtype=np.int64)


def run_episode(scn, table, steps=100):
    env = PacketEnv(scn, horizon_steps=steps)
    env.reset()
    rows = []
    for _ in range(steps):
        _, metrics = env.step(table)
        rows.append(metrics)
    return env, rows


def test_udp_rate_limited_goodput():
    # offered 4 Mbit/s through a 10 Mbit/s link: per-step payload equals
    # the offered rate, within one packet of quantization
    d = TrafficDemand(t_ms=0.0, src=0, dst=1, size_bytes=10_000_000,
                      kind="UDP", udp_rate_bps=4e6)
    env, rows = run_episode(one_link_scenario([d]), direct_table())
    per_step = [m.received_bytes for m in rows[10:90]]
    expect = 4e6 / 8 * 0.005 * (MSS / WIRE)
    assert abs(np.mean(per_step) - expect) < WIRE
    assert sum(m.dropped_packets for m in rows) == 0


def test_udp_bottleneck_limited_goodput():
    # offered 40 Mbit/s through a 10 Mbit/s link: delivery pins at the
    # link's payload capacity and the excess is dropped
    d = TrafficDemand(t_ms=0.0, src=0, dst=1, size_bytes=20_000_000,
                      kind="UDP", udp_rate_bps=40e6)
    env, rows = run_episode(one_link_scenario([d]), direct_table())
    per_step = [m.received_bytes for m in rows[10:90]]
    expect = 10e6 / 8 * 0.005 * (MSS / WIRE)
    assert abs(np.mean(per_step) - expect) < WIRE
    assert sum(m.dropped_packets for m in rows) > 0


def test_droptail_matches_queue_recursion():
    # 16 Mbit/s offered into an 8 Mbit/s link with a 4-packet queue; an
    # explicit D/D/1 admit recursion predicts exactly which packets drop
    n_pkts = 100
    size = MSS * n_pkts
    rate_in, rate_out, cap = 16e6, 8e6, 4 * WIRE
    d = TrafficDemand(t_ms=0.0, src=0, dst=1, size_bytes=size,
                      kind="UDP", udp_rate_bps=rate_in)
    scn = one_link_scenario([d], rate_bps=rate_out, buffer_bytes=int(cap))
    env, rows = run_episode(scn, direct_table())

    # sends arrive every gap, services take 2*gap, and a service ending
    # exactly when a packet arrives frees its slot first; the queue never
    # empties, so completed services by arrival i number floor(i/2)
    slots = int(cap) // WIRE
    admitted = dropped = 0
    for i in range(n_pkts):
        queued = admitted - 1 - i // 2 if i else -1
        if queued < slots:
            admitted += 1
        else:
            dropped += 1

    injected, delivered, dropped_sim, residual = env.conservation()
    assert injected == n_pkts
    assert dropped_sim == dropped
    assert delivered == admitted
    assert residual == 0


def test_tcp_single_flow_fills_pipe():
    d = TrafficDemand(t_ms=0.0, src=0, dst=1, size_bytes=5_000_000,
                      kind="TCP", udp_rate_bps=0.0)
    scn = one_link_scenario([d], rate_bps=10e6, delay_ms=5.0,
                            buffer_bytes=50_000)
    env, rows = run_episode(scn, direct_table())
    tail = rows[50:]
    payload_capacity = 10e6 / 8 * 0.005 * (MSS / WIRE)
    util = np.mean([m.received_bytes for m in tail]) / payload_capacity
    assert util >= 0.8


def test_episode_conservation_random_scenarios():
    for seed in range(6):
        scn = generate_scenario("nx-XS", seed, m_traffic=1.5, p_tcp=0.5,
                                link_failures=(seed % 2 == 0))
        env = PacketEnv(scn)
        state = env.reset()
        table = weights_to_action(scn.topology.n_nodes,
                                  protocol_weights(scn.topology))
        failed = set()
        while not env.done:
            state, _ = env.step(table)
            if state.topology_changed:
                failed = {(u, v) for u, v in scn.topology.undirected_pairs()
                          if (u, v) not in env.surviving_edges()}
                table = weights_to_action(
                    scn.topology.n_nodes,
                    protocol_weights(scn.topology, frozenset(failed)))
        injected, delivered, dropped, residual = env.conservation()
        assert injected == delivered + dropped + residual


def test_routing_loop_drops_by_hop_limit():
    # 3-node path with a deliberate 0<->1 loop for destination 2
    top = Topology(
        n_nodes=3,
        links=[Link(0, 1, 10e6, 1.0, 50_000), Link(1, 2, 10e6, 1.0, 50_000)],
        potentials=np.ones(3),
    )
    d = TrafficDemand(t_ms=0.0, src=0, dst=2, size_bytes=1000,
                      kind="UDP", udp_rate_bps=5e6)
    scn = NetworkScenario(seed=0, preset="nx-XS", topology=top, demands=[d])
    loop_table = np.array([
        [0, 1, 1],
        [0, 1, 0],   # 1 sends traffic for 2 back to 0
        [2, 2, 2],
    ])
    env, rows = run_episode(scn, loop_table, steps=60)
    injected, delivered, dropped, residual = env.conservation()
    assert delivered == 0
    assert dropped > 0
    assert injected == delivered + dropped + residual


def test_link_failure_reroutes():
    # square 0-1-3 / 0-2-3; fail (0, 1) mid-episode, traffic survives via 2
    links = [Link(0, 1, 50e6, 1.0, 50_000), Link(1, 3, 50e6, 1.0, 50_000),
             Link(0, 2, 50e6, 1.0, 50_000), Link(2, 3, 50e6, 1.0, 50_000)]
    top = Topology(n_nodes=4, links=links, potentials=np.ones(4))
    demands = [TrafficDemand(t_ms=0.0, src=0, dst=3, size_bytes=10_000_000,
                             kind="UDP", udp_rate_bps=8e6)]
    scn = NetworkScenario(seed=0, preset="nx-XS", topology=top,
                          demands=demands,
                          failures=[LinkFailureEvent(step=30, u=0, v=1)])
    env = PacketEnv(scn)
    env.reset()
    received = []
    table = weights_to_action(4, protocol_weights(top))
    for t in range(100):
        state, metrics = env.step(table)
        received.append(metrics.received_bytes)
        if state.topology_changed:
            table = weights_to_action(
                4, protocol_weights(top, frozenset({(0, 1)})))
    # traffic flows both before and well after the failure
    assert np.mean(received[10:28]) > 0
    assert np.mean(received[40:]) > 0
    assert (0, 1) not in env.surviving_edges()


def test_failed_next_hop_entry_drops_packets():
    # keep routing through the dead link: the forwarding entry is rejected
    # and arriving packets are counted as drops
    links = [Link(0, 1, 50e6, 1.0, 50_000), Link(1, 3, 50e6, 1.0, 50_000),
             Link(0, 2, 50e6, 1.0, 50_000), Link(2, 3, 50e6, 1.0, 50_000)]
    top = Topology(n_nodes=4, links=links, potentials=np.ones(4))
    demands = [TrafficDemand(t_ms=0.0, src=0, dst=3, size_bytes=10_000_000,
                             kind="UDP", udp_rate_bps=8e6)]
    scn = NetworkScenario(seed=0, preset="nx-XS", topology=top,
                          demands=demands,
                          failures=[LinkFailureEvent(step=10, u=0, v=1)])
    stale = weights_to_action(4, protocol_weights(top))
    assert stale[0, 3] == 1  # the doomed route
    env, rows = run_episode(scn, stale)
    assert sum(m.dropped_packets for m in rows[12:]) > 0


def test_metrics_delay_and_lu_ranges():
    d = TrafficDemand(t_ms=0.0, src=0, dst=1, size_bytes=10_000_000,
                      kind="UDP", udp_rate_bps=8e6)
    env, rows = run_episode(one_link_scenario([d], delay_ms=2.0),
                            direct_table())
    mid = rows[20:80]
    for m in mid:
        assert 0.0 <= m.max_lu <= 1.0
        assert m.avg_delay_ms >= 2.0      # at least the propagation delay
        assert m.avg_jitter_ms >= 0.0
    # 8 Mbit/s offered over 10 Mbit/s capacity: utilization near 0.8
    assert np.mean([m.max_lu for m in mid]) == pytest.approx(0.8, abs=0.05)


def test_trace_hash_deterministic():
    scn = generate_scenario("nx-XS", 11, m_traffic=1.5, p_tcp=0.5)
    hashes = []
    for _ in range(2):
        env = PacketEnv(scn, hash_trace=True)
        env.reset()
        table = weights_to_action(scn.topology.n_nodes,
                                  protocol_weights(scn.topology))
        while not env.done:
            env.step(table)
        hashes.append(env.sim.trace_hash())
    assert hashes[0] == hashes[1]


def test_goodput_counts_payload_not_headers():
    d = TrafficDemand(t_ms=0.0, src=0, dst=1, size_bytes=MSS * 40,
                      kind="UDP", udp_rate_bps=40e6)
    env, rows = run_episode(
        one_link_scenario([d], rate_bps=100e6, buffer_bytes=100_000),
        direct_table(), steps=20)
    total_payload = sum(m.received_bytes for m in rows)
    assert total_payload == MSS * 40
    assert sum(m.goodput_mb for m in rows) == pytest.approx(MSS * 40 / 1e6)
