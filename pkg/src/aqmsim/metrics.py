"""Throughput, fairness and queue-occupancy measurement."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

QUEUE_WEIGHT = 0.002


def ewma_step(prev: float, sample: float, w: float) -> float:
    if not 0 < w <= 1:
        raise ValueError(f"EWMA weight must lie in (0, 1], got {w!r}")
    return (1.0 - w) * prev + w * sample


def jain_index(throughputs) -> float:
    xs = [float(x) for x in throughputs]
    if not xs:
        raise ValueError("jain_index of an empty list")
    total = sum(xs)
    squares = sum(x * x for x in xs)
    if squares == 0:
        raise ValueError("jain_index undefined when every throughput is zero")
    return total * total / (len(xs) * squares)


def utilization(delivered_bits: float, duration_s: float, bottleneck_bps: float) -> float:
    if duration_s <= 0:
        raise ValueError("duration must be positive")
    return delivered_bits / (bottleneck_bps * duration_s)


@dataclass
class FlowStats:
    flow_id: int
    cls: str
    sent_pkts: int = 0
    delivered_pkts: int = 0
    delivered_bytes: int = 0
    dropped_pkts: int = 0
    # bytes that reached the sink inside the measurement window
    window_bytes: int = 0
    throughput_bps: float = 0.0

    @property
    def in_flight(self) -> int:
        return self.sent_pkts - self.delivered_pkts - self.dropped_pkts


class FlowLedger:
    """Per-flow data-packet accounting, fed by sources, sinks and links."""

    def __init__(self, classes: list, warmup_s: float):
        self.flows = [FlowStats(f, c) for f, c in enumerate(classes)]
        self.warmup_s = warmup_s
        self.drops_by_cause: Counter = Counter()

    def on_sent(self, pkt, now):
        self.flows[pkt.flow_id].sent_pkts += 1

    def on_delivered(self, pkt, now):
        st = self.flows[pkt.flow_id]
        st.delivered_pkts += 1
        st.delivered_bytes += pkt.size_bytes
        if now >= self.warmup_s:
            st.window_bytes += pkt.size_bytes

    def on_drop(self, pkt, cause: str):
        if pkt.is_ack:
            self.drops_by_cause["ack_" + cause] += 1
            return
        self.flows[pkt.flow_id].dropped_pkts += 1
        self.drops_by_cause[cause] += 1

    def finalize(self, window_s: float) -> None:
        for st in self.flows:
            st.throughput_bps = st.window_bytes * 8.0 / window_s


@dataclass
class QueueSeries:
    """EWMA queue length rows at a fixed sampling grid."""

    weight: float = QUEUE_WEIGHT
    interval: float = 0.1
    t: list = field(default_factory=list)
    total: list = field(default_factory=list)
    tcp: list = field(default_factory=list)
    udp: list = field(default_factory=list)
    per_flow: list = field(default_factory=list)

    def mean(self, cls: str, since: float = 0.0) -> float:
        vals = [v for t, v in zip(self.t, getattr(self, cls)) if t >= since]
        return sum(vals) / len(vals) if vals else 0.0

    def flow_mean(self, flow_id: int, since: float = 0.0) -> float:
        vals = [row[flow_id] for t, row in zip(self.t, self.per_flow) if t >= since]
        return sum(vals) / len(vals) if vals else 0.0

    def flow_max(self, flow_id: int, since: float = 0.0) -> float:
        vals = [row[flow_id] for t, row in zip(self.t, self.per_flow) if t >= since]
        return max(vals) if vals else 0.0


class QueueMonitor:
    """Link observer: raw per-flow/per-class occupancy and its EWMA.

    Every accept, dequeue and victim removal steps all averages once.
    Rows hold the averages in force at each grid instant.
    """

    def __init__(self, classes: list, ledger: FlowLedger | None = None,
                 weight: float = QUEUE_WEIGHT, interval: float = 0.1):
        self.classes = classes
        self.is_udp = np.array([c == "udp" for c in classes])
        self.ledger = ledger
        self.w = weight
        self.raw = np.zeros(len(classes))
        self.raw_total = 0
        self.raw_udp = 0
        self.ew = np.zeros(len(classes))
        self.ew_total = 0.0
        self.ew_tcp = 0.0
        self.ew_udp = 0.0
        self.series = QueueSeries(weight=weight, interval=interval)
        self._next_row = 0.0
        self.partition_violations = 0
        self.max_raw_total = 0

    def _emit_rows(self, now: float) -> None:
        s = self.series
        while self._next_row <= now:
            s.t.append(round(self._next_row, 9))
            s.total.append(self.ew_total)
            s.tcp.append(self.ew_tcp)
            s.udp.append(self.ew_udp)
            s.per_flow.append(self.ew.tolist())
            self._next_row = len(s.t) * s.interval

    def _change(self, flow_id: int, delta: int, now: float) -> None:
        if now >= self._next_row:
            self._emit_rows(now)
        self.raw[flow_id] += delta
        self.raw_total += delta
        if self.classes[flow_id] == "udp":
            self.raw_udp += delta
        if self.raw_total > self.max_raw_total:
            self.max_raw_total = self.raw_total
        w = self.w
        keep = 1.0 - w
        self.ew *= keep
        self.ew += w * self.raw
        self.ew_total = keep * self.ew_total + w * self.raw_total
        self.ew_udp = keep * self.ew_udp + w * self.raw_udp
        self.ew_tcp = keep * self.ew_tcp + w * (self.raw_total - self.raw_udp)

    def check_partition(self) -> bool:
        tcp_raw = int(self.raw[~self.is_udp].sum())
        udp_raw = int(self.raw[self.is_udp].sum())
        ok = tcp_raw + udp_raw == self.raw_total and udp_raw == self.raw_udp
        if not ok:
            self.partition_violations += 1
        return ok

    def finish(self, t_end: float) -> None:
        self._emit_rows(t_end)

    # Link observer protocol
    def on_accept(self, pkt, now):
        self._change(pkt.flow_id, 1, now)

    def on_dequeue(self, pkt, now):
        self._change(pkt.flow_id, -1, now)

    def on_victim(self, pkt, cause, now):
        self._change(pkt.flow_id, -1, now)
        if self.ledger is not None:
            self.ledger.on_drop(pkt, cause.value)

    def on_drop(self, pkt, cause, now):
        if self.ledger is not None:
            self.ledger.on_drop(pkt, cause.value)
