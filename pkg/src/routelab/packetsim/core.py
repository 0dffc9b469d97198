"""Discrete-event packet simulator.

Single-threaded event loop over integer-nanosecond virtual time. Every
physical link is two independent directed transmitters, each with a
drop-tail byte-bounded queue: a packet of w wire bytes occupies the
transmitter for 8w/datarate seconds, then propagates for the link delay
and is forwarded (or delivered) at the head node. TCP traffic runs a
NewReno-style congestion controller (slow start, AIMD, fast retransmit,
RTO backoff, cumulative acks, no SACK); UDP traffic is rate-paced, with
small demands bursted back-to-back onto the first link.

Determinism: event ordering is (time, insertion sequence); the simulator
itself draws no randomness.
"""

from __future__ import annotations

import hashlib
import heapq
from collections import deque

import numpy as np

MSS = 1472                     # payload bytes per full segment
HEADER_BYTES = 28
MAX_WIRE_BYTES = 1500
ACK_WIRE_BYTES = HEADER_BYTES  # acks carry no payload

INIT_CWND = float(MSS)
INIT_SSTHRESH = 64_000.0
INIT_RTO_NS = 100_000_000      # 100 ms
MIN_RTO_NS = 10_000_000        # 10 ms
MAX_RTO_NS = 2_000_000_000
HOP_LIMIT = 64                 # drops looping packets, mirrors an IP TTL

SMALL_UDP_BYTES = 100_000
UDP_BURST_RATE_BPS = 1e9

KIND_UDP = 0
KIND_TCP_DATA = 1
KIND_TCP_ACK = 2

EV_TX_DONE = 0
EV_ARRIVE = 1
EV_UDP_SEND = 2
EV_RTO = 3
EV_DEMAND = 4

_INF = float("inf")


class Packet:
    __slots__ = ("flow", "kind", "src", "dst", "payload", "wire", "seq", "end", "send_ns", "hops", "retx")

    def __init__(self, flow, kind, src, dst, payload, seq, end, send_ns, retx=False):
        self.flow = flow
        self.kind = kind
        self.src = src
        self.dst = dst
        self.payload = payload
        self.wire = payload + HEADER_BYTES
        self.seq = seq            # TCP: segment start byte; ack: cumulative ack number
        self.end = end            # TCP: segment end byte
        self.send_ns = send_ns
        self.hops = 0
        self.retx = retx


class DirLink:
    """One direction of a physical link: transmitter, queue, counters."""

    __slots__ = (
        "u", "v", "rate_bps", "delay_ns", "capacity", "ns_per_byte", "step_cap_bytes",
        "alive", "queue", "queued_bytes", "in_service",
        "ser_bytes", "recv_bytes", "drop_bytes", "drop_pkts", "max_fill",
    )

    def __init__(self, u, v, rate_bps, delay_ms, capacity_bytes, tau_s):
        self.u = u
        self.v = v
        self.rate_bps = rate_bps
        self.delay_ns = int(round(delay_ms * 1e6))
        self.capacity = capacity_bytes
        self.ns_per_byte = 8e9 / rate_bps
        self.step_cap_bytes = rate_bps * tau_s / 8.0
        self.alive = True
        self.queue = deque()
        self.queued_bytes = 0
        self.in_service = None
        self.ser_bytes = 0
        self.recv_bytes = 0
        self.drop_bytes = 0
        self.drop_pkts = 0
        self.max_fill = 0

    def reset_step(self):
        self.ser_bytes = 0
        self.recv_bytes = 0
        self.drop_bytes = 0
        self.drop_pkts = 0
        self.max_fill = self.queued_bytes


class UdpFlow:
    __slots__ = ("src", "dst", "size", "sent", "rate_bps", "last_delay")

    def __init__(self, src, dst, size, rate_bps):
        self.src = src
        self.dst = dst
        self.size = size
        self.sent = 0
        self.rate_bps = rate_bps
        self.last_delay = None


class TcpConn:
    __slots__ = (
        "src", "dst", "size", "snd_una", "snd_nxt", "cwnd", "ssthresh", "dup",
        "srtt", "rttvar", "rto_ns", "backoff", "recovery_until",
        "seg_meta", "rto_deadline", "timer_live", "timer_epoch",
        "rcv_nxt", "ooo", "received_segs", "last_delay", "done",
    )

    def __init__(self, src, dst, size):
        self.src = src
        self.dst = dst
        self.size = size
        self.snd_una = 0
        self.snd_nxt = 0
        self.cwnd = INIT_CWND
        self.ssthresh = INIT_SSTHRESH
        self.dup = 0
        self.srtt = 0.0
        self.rttvar = 0.0
        self.rto_ns = INIT_RTO_NS
        self.backoff = 1
        self.recovery_until = -1
        self.seg_meta = {}        # segment start -> [first send ns, transmissions]
        self.rto_deadline = _INF
        self.timer_live = False
        self.timer_epoch = 0
        self.rcv_nxt = 0
        self.ooo = {}             # out-of-order segment start -> end
        self.received_segs = set()
        self.last_delay = None
        self.done = False


class PacketSimulator:
    """Event-driven network simulator for one episode."""

    def __init__(self, topology, tau_ms: float = 5.0, hash_trace: bool = False):
        self.topology = topology
        self.n = topology.n_nodes
        self.tau_ns = int(round(tau_ms * 1e6))
        tau_s = tau_ms / 1000.0
        self.now = 0
        self.heap: list = []
        self.seq = 0
        self.links: dict[tuple[int, int], DirLink] = {}
        self.out_links: list[dict[int, DirLink]] = [dict() for _ in range(self.n)]
        for l in topology.links:
            for a, b in ((l.u, l.v), (l.v, l.u)):
                dl = DirLink(a, b, l.datarate_bps, l.delay_ms, l.buffer_bytes, tau_s)
                self.links[(a, b)] = dl
                self.out_links[a][b] = dl
        self.adj = np.zeros((self.n, self.n), dtype=bool)
        for (a, b) in self.links:
            self.adj[a, b] = True
        self.table: list[list[int]] = [[-1] * self.n for _ in range(self.n)]
        # Episode-scope packet conservation counters.
        self.injected = 0
        self.delivered = 0
        self.dropped = 0
        # Step-scope accumulators.
        self.sent_payload = 0
        self.recv_payload = 0
        self.drop_payload = 0
        self.retx_payload = 0
        self.delay_sum = 0.0
        self.delay_max = 0.0
        self.delay_n = 0
        self.jitter_sum = 0.0
        self.jitter_n = 0
        self.step_injected = 0
        self.step_delivered = 0
        self.step_dropped = 0
        self.routing_drops = [0] * self.n
        self.sent_pairs: dict[tuple[int, int], int] = {}
        self.track_sent_pairs = False
        self._hash = hashlib.md5() if hash_trace else None

    # -- scheduling ---------------------------------------------------------

    def _push(self, t, kind, a, b):
        self.seq += 1
        heapq.heappush(self.heap, (t, self.seq, kind, a, b))

    def schedule_demand(self, demand):
        self._push(int(round(demand.t_ms * 1e6)), EV_DEMAND, demand, None)

    # -- step control -------------------------------------------------------

    def reset_step_counters(self):
        self.sent_payload = 0
        self.recv_payload = 0
        self.drop_payload = 0
        self.retx_payload = 0
        self.delay_sum = 0.0
        self.delay_max = 0.0
        self.delay_n = 0
        self.jitter_sum = 0.0
        self.jitter_n = 0
        self.step_injected = 0
        self.step_delivered = 0
        self.step_dropped = 0
        self.sent_pairs = {}
        for dl in self.links.values():
            dl.reset_step()

    def fail_link(self, u, v):
        """Tear down both directions; queued and serializing packets drop."""
        for a, b in ((u, v), (v, u)):
            dl = self.links.get((a, b))
            if dl is None or not dl.alive:
                continue
            dl.alive = False
            self.adj[a, b] = False
            if dl.in_service is not None:
                self._count_drop(dl.in_service, dl)
                dl.in_service = None
            while dl.queue:
                pkt = dl.queue.popleft()
                dl.queued_bytes -= pkt.wire
                self._count_drop(pkt, dl)

    def install_action(self, table: np.ndarray):
        """Validate a next-hop table against surviving links and install it.

        Entries pointing to non-neighbors (e.g. across a failed link) are
        disabled; packets routed through them are dropped and counted.
        """
        n = self.n
        idx = np.clip(table, 0, n - 1)
        rows = np.arange(n)[:, None]
        valid = self.adj[rows, idx] & (table >= 0)
        installed = np.where(valid, table, -1)
        np.fill_diagonal(installed, np.arange(n))
        self.table = installed.tolist()

    def run_until(self, t_end_ns: int):
        heap = self.heap
        pop = heapq.heappop
        while heap and heap[0][0] < t_end_ns:
            ev = pop(heap)
            t = ev[0]
            self.now = t
            kind = ev[2]
            if self._hash is not None:
                self._hash.update(b"%d,%d" % (t, kind))
            if kind == EV_TX_DONE:
                link = ev[3]
                if not link.alive:
                    continue
                pkt = link.in_service
                link.in_service = None
                link.ser_bytes += pkt.wire
                self._push(t + link.delay_ns, EV_ARRIVE, link, pkt)
                q = link.queue
                if q:
                    nxt = q.popleft()
                    link.queued_bytes -= nxt.wire
                    link.in_service = nxt
                    self._push(t + int(nxt.wire * link.ns_per_byte), EV_TX_DONE, link, None)
            elif kind == EV_ARRIVE:
                link = ev[3]
                pkt = ev[4]
                link.recv_bytes += pkt.wire
                self._receive(link.v, pkt)
            elif kind == EV_UDP_SEND:
                self._udp_send(ev[3])
            elif kind == EV_RTO:
                self._rto_fire(ev[3], ev[4])
            else:  # EV_DEMAND
                self._start_demand(ev[3])
        self.now = t_end_ns

    # -- packet path --------------------------------------------------------

    def _count_drop(self, pkt, link=None):
        self.dropped += 1
        self.step_dropped += 1
        self.drop_payload += pkt.payload
        if link is not None:
            link.drop_bytes += pkt.wire
            link.drop_pkts += 1

    def _enqueue(self, link, pkt):
        if not link.alive:
            self._count_drop(pkt, link)
            return
        if link.in_service is None:
            link.in_service = pkt
            self._push(self.now + int(pkt.wire * link.ns_per_byte), EV_TX_DONE, link, None)
            return
        nb = link.queued_bytes + pkt.wire
        if nb > link.capacity:
            self._count_drop(pkt, link)
            return
        link.queue.append(pkt)
        link.queued_bytes = nb
        if nb > link.max_fill:
            link.max_fill = nb

    def _inject(self, pkt):
        """A source application hands a new packet to the routing plane."""
        self.injected += 1
        self.step_injected += 1
        self.sent_payload += pkt.payload
        if self.track_sent_pairs and pkt.payload:
            key = (pkt.src, pkt.dst)
            self.sent_pairs[key] = self.sent_pairs.get(key, 0) + pkt.payload
        nh = self.table[pkt.src][pkt.dst]
        if nh < 0:
            self.routing_drops[pkt.src] += 1
            self._count_drop(pkt)
            return
        self._enqueue(self.out_links[pkt.src][nh], pkt)

    def _receive(self, node, pkt):
        if node == pkt.dst:
            self.delivered += 1
            self.step_delivered += 1
            kind = pkt.kind
            if kind == KIND_TCP_ACK:
                self._tcp_on_ack(pkt.flow, pkt.seq)
            elif kind == KIND_TCP_DATA:
                self._record_delay(pkt)
                self._tcp_on_data(pkt)
            else:
                self._record_delay(pkt)
                self.recv_payload += pkt.payload
            return
        pkt.hops += 1
        if pkt.hops > HOP_LIMIT:
            self._count_drop(pkt)
            return
        nh = self.table[node][pkt.dst]
        if nh < 0:
            self.routing_drops[node] += 1
            self._count_drop(pkt)
            return
        self._enqueue(self.out_links[node][nh], pkt)

    def _record_delay(self, pkt):
        d = (self.now - pkt.send_ns) * 1e-6  # ms
        self.delay_sum += d
        self.delay_n += 1
        if d > self.delay_max:
            self.delay_max = d
        flow = pkt.flow
        last = flow.last_delay
        if last is not None:
            self.jitter_sum += abs(d - last)
            self.jitter_n += 1
        flow.last_delay = d

    # -- sources ------------------------------------------------------------

    def _start_demand(self, demand):
        if demand.kind == "TCP":
            conn = TcpConn(demand.src, demand.dst, demand.size_bytes)
            self._tcp_try_send(conn)
        else:
            flow = UdpFlow(demand.src, demand.dst, demand.size_bytes, demand.udp_rate_bps)
            if demand.size_bytes < SMALL_UDP_BYTES:
                while flow.sent < flow.size:
                    payload = min(MSS, flow.size - flow.sent)
                    flow.sent += payload
                    self._inject(Packet(flow, KIND_UDP, flow.src, flow.dst, payload, 0, 0, self.now))
            else:
                self._udp_send(flow)

    def _udp_send(self, flow):
        payload = min(MSS, flow.size - flow.sent)
        if payload <= 0:
            return
        flow.sent += payload
        pkt = Packet(flow, KIND_UDP, flow.src, flow.dst, payload, 0, 0, self.now)
        self._inject(pkt)
        if flow.sent < flow.size:
            self._push(self.now + int(pkt.wire * 8e9 / flow.rate_bps), EV_UDP_SEND, flow, None)

    # -- TCP ----------------------------------------------------------------

    def _tcp_send_segment(self, conn, start, retx):
        payload = min(MSS, conn.size - start)
        meta = conn.seg_meta.get(start)
        if meta is None:
            conn.seg_meta[start] = [self.now, 1]
        else:
            meta[1] += 1
        if retx:
            self.retx_payload += payload
        self._inject(Packet(conn, KIND_TCP_DATA, conn.src, conn.dst, payload, start, start + payload, self.now, retx))

    def _tcp_try_send(self, conn):
        while conn.snd_nxt < conn.size:
            payload = min(MSS, conn.size - conn.snd_nxt)
            if conn.snd_nxt - conn.snd_una + payload > conn.cwnd:
                break
            self._tcp_send_segment(conn, conn.snd_nxt, False)
            conn.snd_nxt += payload
        if conn.snd_una < conn.snd_nxt:
            self._arm_rto(conn)

    def _arm_rto(self, conn):
        rto = min(conn.rto_ns * conn.backoff, MAX_RTO_NS)
        conn.rto_deadline = self.now + rto
        if not conn.timer_live:
            conn.timer_live = True
            conn.timer_epoch += 1
            self._push(conn.rto_deadline, EV_RTO, conn, conn.timer_epoch)

    def _rto_fire(self, conn, epoch):
        if epoch != conn.timer_epoch:
            return
        conn.timer_live = False
        if conn.done or conn.snd_una >= conn.snd_nxt:
            return
        if self.now < conn.rto_deadline:
            # Deadline moved forward since this event was scheduled.
            conn.timer_live = True
            conn.timer_epoch += 1
            self._push(conn.rto_deadline, EV_RTO, conn, conn.timer_epoch)
            return
        conn.ssthresh = max(conn.cwnd / 2.0, 2.0 * MSS)
        conn.cwnd = float(MSS)
        conn.dup = 0
        conn.recovery_until = -1
        conn.backoff = min(conn.backoff * 2, 64)
        self._tcp_send_segment(conn, conn.snd_una, True)
        self._arm_rto(conn)

    def _tcp_on_data(self, pkt):
        conn = pkt.flow
        start = pkt.seq
        if start >= conn.rcv_nxt and start not in conn.received_segs:
            conn.received_segs.add(start)
            self.recv_payload += pkt.payload
            conn.ooo[start] = pkt.end
            while conn.rcv_nxt in conn.ooo:
                conn.rcv_nxt = conn.ooo.pop(conn.rcv_nxt)
        ack = Packet(conn, KIND_TCP_ACK, conn.dst, conn.src, 0, conn.rcv_nxt, 0, self.now)
        self._inject(ack)

    def _tcp_on_ack(self, conn, ack_no):
        if conn.done:
            return
        if ack_no > conn.snd_una:
            # RTT sample from the newest acked segment, skipped if it was
            # ever retransmitted (Karn's rule).
            meta = conn.seg_meta.get(self._seg_start(conn, ack_no))
            if meta is not None and meta[1] == 1:
                self._rtt_sample(conn, self.now - meta[0])
            conn.snd_una = ack_no
            drop_keys = [s for s in conn.seg_meta if s < ack_no]
            for s in drop_keys:
                del conn.seg_meta[s]
            conn.backoff = 1
            if conn.recovery_until >= 0:
                if ack_no >= conn.recovery_until:
                    conn.recovery_until = -1
                    conn.dup = 0
                else:
                    # Partial ack: the next hole was lost too.
                    self._tcp_send_segment(conn, ack_no, True)
            else:
                conn.dup = 0
                if conn.cwnd < conn.ssthresh:
                    conn.cwnd += MSS
                else:
                    conn.cwnd += MSS * MSS / conn.cwnd
            if conn.snd_una >= conn.size:
                conn.done = True
                conn.rto_deadline = _INF
                conn.timer_epoch += 1
                conn.timer_live = False
                return
            self._arm_rto(conn)
            self._tcp_try_send(conn)
        elif conn.snd_una < conn.snd_nxt:
            conn.dup += 1
            if conn.dup == 3 and conn.recovery_until < 0:
                conn.ssthresh = max(conn.cwnd / 2.0, 2.0 * MSS)
                conn.cwnd = conn.ssthresh
                conn.recovery_until = conn.snd_nxt
                self._tcp_send_segment(conn, conn.snd_una, True)
                self._arm_rto(conn)

    @staticmethod
    def _seg_start(conn, ack_no):
        rem = (ack_no - 0) % MSS
        if rem == 0:
            return ack_no - MSS
        return ack_no - rem

    def _rtt_sample(self, conn, sample_ns):
        if conn.srtt == 0.0:
            conn.srtt = float(sample_ns)
            conn.rttvar = sample_ns / 2.0
        else:
            err = abs(conn.srtt - sample_ns)
            conn.rttvar = 0.75 * conn.rttvar + 0.25 * err
            conn.srtt = 0.875 * conn.srtt + 0.125 * sample_ns
        conn.rto_ns = max(int(conn.srtt + 4.0 * conn.rttvar), MIN_RTO_NS)

    # -- accounting ---------------------------------------------------------

    def residual_packets(self) -> int:
        """Packets alive in buffers, transmitters, or propagation."""
        count = 0
        for dl in self.links.values():
            count += len(dl.queue)
            if dl.in_service is not None:
                count += 1
        for ev in self.heap:
            if ev[2] == EV_ARRIVE:
                count += 1
        return count

    def trace_hash(self) -> str:
        if self._hash is None:
            return ""
        return self._hash.hexdigest()
