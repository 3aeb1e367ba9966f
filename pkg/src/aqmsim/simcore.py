"""Discrete-event engine, links and the dumbbell topology."""

from __future__ import annotations

import heapq
import logging
import random
from collections import deque
from dataclasses import dataclass
from typing import Any, Callable, Optional

from .errors import ConfigError

log = logging.getLogger(__name__)

MASK64 = (1 << 64) - 1

DATA_BYTES = 1000
ACK_BYTES = 40

# event kinds
ARRIVAL = "arrival"
TX_COMPLETE = "tx_complete"
TIMER = "timer"
WAKEUP = "wakeup"


def mix64(x: int) -> int:
    """splitmix64 finalizer; a bijection on 64-bit integers."""
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def derive_seed(base: int, index: int) -> int:
    return mix64((base & MASK64) ^ mix64(index))


class SchedulingError(RuntimeError):
    pass


class SimEvent:
    __slots__ = ("time", "kind", "payload", "tiebreak", "callback", "cancelled")

    def __init__(self, time, kind, payload, tiebreak, callback):
        self.time = time
        self.kind = kind
        self.payload = payload
        self.tiebreak = tiebreak
        self.callback = callback
        self.cancelled = False

    def cancel(self) -> None:
        self.cancelled = True

    def __repr__(self):
        return f"SimEvent(t={self.time:.6f}, kind={self.kind}, #{self.tiebreak})"


class Simulator:
    """Single-threaded event loop.

    Events fire in (time, tiebreak) order; tiebreak is the insertion
    sequence, so simultaneous events run FIFO.
    """

    def __init__(self, seed: int = 0, trace: bool = False):
        self.now = 0.0
        self.rng = random.Random(seed)
        self._heap: list = []
        self._seq = 0
        self.processed = 0
        self.trace: Optional[list] = [] if trace else None

    def schedule(self, time: float, kind: str, callback: Callable[[Any], None],
                 payload: Any = None) -> SimEvent:
        if time < self.now:
            raise SchedulingError(
                f"cannot schedule {kind} at t={time!r}, clock is {self.now!r}")
        self._seq += 1
        ev = SimEvent(time, kind, payload, self._seq, callback)
        heapq.heappush(self._heap, (time, self._seq, ev))
        return ev

    def run_until(self, t_end: float) -> int:
        if t_end < self.now:
            raise SchedulingError(f"run_until({t_end!r}) is before clock {self.now!r}")
        heap = self._heap
        pop = heapq.heappop
        trace = self.trace
        n = 0
        while heap and heap[0][0] <= t_end:
            t, _, ev = pop(heap)
            if ev.cancelled:
                continue
            self.now = t
            if trace is not None:
                trace.append((t, ev.tiebreak, ev.kind))
            ev.callback(ev.payload)
            n += 1
        self.now = t_end
        self.processed += n
        return n

    def pending(self):
        """Live pending events, in no particular order."""
        return [ev for _, _, ev in self._heap if not ev.cancelled]


class Packet:
    __slots__ = ("flow_id", "size_bytes", "seq", "is_ack", "enqueue_time", "ts")

    def __init__(self, flow_id: int, seq: int, size_bytes: int = DATA_BYTES,
                 is_ack: bool = False, ts: float = 0.0):
        if size_bytes <= 0:
            raise ValueError("packet size must be positive")
        self.flow_id = flow_id
        self.size_bytes = size_bytes
        self.seq = seq
        self.is_ack = is_ack
        self.enqueue_time = None
        # send timestamp of a data packet, echoed back in its ACK
        self.ts = ts

    def __repr__(self):
        kind = "ack" if self.is_ack else "data"
        return f"Packet(flow={self.flow_id}, seq={self.seq}, {kind})"


class Deliver:
    """Hands packets to `fn` through an arrival event at the given time."""

    __slots__ = ("sim", "fn")

    def __init__(self, sim: Simulator, fn: Callable[[Packet], None]):
        self.sim = sim
        self.fn = fn

    def send_at(self, pkt: Packet, t: float) -> None:
        self.sim.schedule(t, ARRIVAL, self.fn, pkt)


class Demux:
    """Routes packets to per-flow next hops."""

    def __init__(self, routes: dict):
        self.routes = routes

    def send_at(self, pkt: Packet, t: float) -> None:
        self.routes[pkt.flow_id].send_at(pkt, t)


class Pipe:
    """Uncontrolled Drop Tail link computed in closed form.

    Used for access links and the reverse path. Serialization and queueing
    are FIFO, but no per-hop transmission events are needed because each
    packet's departure follows from the previous one. Packets must be
    offered in non-decreasing time order.
    """

    def __init__(self, bandwidth_bps: float, prop_delay_s: float, out,
                 buffer_pkts: int = 1000, on_drop: Optional[Callable] = None):
        self.bandwidth_bps = bandwidth_bps
        self.prop_delay_s = prop_delay_s
        self.out = out
        self.buffer_pkts = buffer_pkts
        self.on_drop = on_drop
        self._finish: deque = deque()
        self._last_offer = 0.0
        self.free_at = 0.0

    def send_at(self, pkt: Packet, t: float) -> None:
        if t < self._last_offer:
            raise SchedulingError("pipe offers must be time-ordered")
        self._last_offer = t
        finish = self._finish
        while finish and finish[0] <= t:
            finish.popleft()
        # packets in system beyond the one in service are the queue
        if len(finish) > self.buffer_pkts:
            if self.on_drop is not None:
                self.on_drop(pkt)
            return
        start = t if t > self.free_at else self.free_at
        self.free_at = start + pkt.size_bytes * 8.0 / self.bandwidth_bps
        finish.append(self.free_at)
        self.out.send_at(pkt, self.free_at + self.prop_delay_s)


class Link:
    """Unidirectional link whose input queue is an AQM discipline."""

    def __init__(self, sim: Simulator, bandwidth_bps: float, prop_delay_s: float,
                 discipline, out, observer=None):
        self.sim = sim
        self.bandwidth_bps = bandwidth_bps
        self.prop_delay_s = prop_delay_s
        self.discipline = discipline
        self.out = out
        self.observer = observer
        self.busy = False
        self.tx_log: Optional[list] = None
        discipline.attach(bandwidth_bps, sim.rng)
        discipline.on_victim = self._victim

    def service_time(self, pkt: Packet) -> float:
        return pkt.size_bytes * 8.0 / self.bandwidth_bps

    def receive(self, pkt: Packet) -> None:
        now = self.sim.now
        d = self.discipline
        if not self.busy and not d.fifo:
            d.on_idle(now)
        cause = d.enqueue(pkt, now)
        obs = self.observer
        if cause is None:
            pkt.enqueue_time = now
            if obs is not None:
                obs.on_accept(pkt, now)
        elif obs is not None:
            obs.on_drop(pkt, cause, now)
        if not self.busy:
            nxt = d.dequeue(now)
            if nxt is not None:
                if obs is not None:
                    obs.on_dequeue(nxt, now)
                self.transmit(nxt)

    def transmit(self, pkt: Packet) -> None:
        if self.busy:
            raise SchedulingError("link is already transmitting")
        self.busy = True
        now = self.sim.now
        done = now + pkt.size_bytes * 8.0 / self.bandwidth_bps
        if self.tx_log is not None:
            self.tx_log.append((now, done))
        self.sim.schedule(done, TX_COMPLETE, self._tx_complete, pkt)

    def _tx_complete(self, pkt: Packet) -> None:
        self.busy = False
        now = self.sim.now
        self.out.send_at(pkt, now + self.prop_delay_s)
        d = self.discipline
        nxt = d.dequeue(now)
        if nxt is None:
            d.on_idle(now)
            return
        if self.observer is not None:
            self.observer.on_dequeue(nxt, now)
        self.transmit(nxt)

    def _victim(self, pkt: Packet, cause) -> None:
        if self.observer is not None:
            self.observer.on_victim(pkt, cause, self.sim.now)


@dataclass
class DumbbellTopology:
    n_tcp: int = 10
    n_udp: int = 1
    bottleneck_bw_bps: float = 1e6
    bottleneck_delay_s: float = 0.01
    access_bw_bps: float = 10e6
    access_delay_s: float = 0.001
    buffer_pkts: int = 150

    def validate(self) -> None:
        if self.n_tcp < 0 or self.n_udp < 0:
            raise ConfigError("topology.n_tcp", "flow counts must be non-negative")
        if self.n_tcp + self.n_udp == 0:
            raise ConfigError("topology.n_tcp", "dumbbell needs at least one flow")
        if self.bottleneck_bw_bps <= 0:
            raise ConfigError("topology.bottleneck_bw_bps", "must be positive")
        if self.access_bw_bps < self.bottleneck_bw_bps:
            raise ConfigError("topology.access_bw_bps", "must be >= bottleneck_bw_bps")
        if self.bottleneck_delay_s < 0:
            raise ConfigError("topology.bottleneck_delay_s", "must be >= 0")
        if self.access_delay_s < 0:
            raise ConfigError("topology.access_delay_s", "must be >= 0")
        if self.buffer_pkts <= 0:
            raise ConfigError("topology.buffer_pkts", "must be positive")

    @property
    def n_flows(self) -> int:
        return self.n_tcp + self.n_udp


@dataclass
class Dumbbell:
    """Wired dumbbell: per-flow entry points and the shared bottleneck.

    Flow ids 0..n_tcp-1 are TCP, the rest UDP. `ingress[f]` accepts packets
    from source f, `ack_ingress[f]` accepts ACKs from sink f. Hooks
    `deliver_data` / `deliver_ack` are set by whoever attaches endpoints.
    """

    topology: DumbbellTopology
    bottleneck: Link
    ingress: list
    ack_ingress: list
    sinks: dict
    sources: dict

    def flow_class(self, flow_id: int) -> str:
        return "tcp" if flow_id < self.topology.n_tcp else "udp"


def build_dumbbell(sim: Simulator, topo: DumbbellTopology, discipline,
                   observer=None, on_pipe_drop: Optional[Callable] = None,
                   reverse_buffer_pkts: int = 10_000) -> Dumbbell:
    """Wire sources -> G1 -> bottleneck -> G2 -> sinks and the ACK path back.

    Endpoints are attached afterwards by registering callables in
    `net.sinks[f]` (data arrival at the receiver) and `net.sources[f]`
    (ACK arrival at the sender).
    """
    topo.validate()
    n = topo.n_flows
    sinks: dict = {}
    sources: dict = {}

    def to_sink(pkt):
        sinks[pkt.flow_id](pkt)

    def to_source(pkt):
        sources[pkt.flow_id](pkt)

    egress = {f: Pipe(topo.access_bw_bps, topo.access_delay_s, Deliver(sim, to_sink),
                      buffer_pkts=reverse_buffer_pkts, on_drop=on_pipe_drop)
              for f in range(n)}
    bottleneck = Link(sim, topo.bottleneck_bw_bps, topo.bottleneck_delay_s,
                      discipline, Demux(egress), observer=observer)
    ingress = [Pipe(topo.access_bw_bps, topo.access_delay_s,
                    Deliver(sim, bottleneck.receive), on_drop=on_pipe_drop)
               for _ in range(n)]

    # reverse path: uncongested Drop Tail all the way
    ack_egress = {f: Pipe(topo.access_bw_bps, topo.access_delay_s, Deliver(sim, to_source),
                          buffer_pkts=reverse_buffer_pkts, on_drop=on_pipe_drop)
                  for f in range(topo.n_tcp)}
    rev_bottleneck = Pipe(topo.bottleneck_bw_bps, topo.bottleneck_delay_s,
                          Demux(ack_egress), buffer_pkts=reverse_buffer_pkts,
                          on_drop=on_pipe_drop)

    def rev_gateway(pkt):
        rev_bottleneck.send_at(pkt, sim.now)

    ack_ingress = [Pipe(topo.access_bw_bps, topo.access_delay_s, Deliver(sim, rev_gateway),
                        buffer_pkts=reverse_buffer_pkts, on_drop=on_pipe_drop)
                   for _ in range(topo.n_tcp)]
    log.debug("dumbbell: %d tcp, %d udp, bottleneck %.3g bps / %s",
              topo.n_tcp, topo.n_udp, topo.bottleneck_bw_bps, type(discipline).__name__)
    return Dumbbell(topo, bottleneck, ingress, ack_ingress, sinks, sources)
