"""Traffic sources: simplified Reno TCP and constant-bit-rate UDP."""

from __future__ import annotations

import math
from typing import Optional

from .simcore import ACK_BYTES, DATA_BYTES, TIMER, WAKEUP, Packet, Simulator

MAX_RTO = 60.0


class TcpConn:
    """Sender-side Reno window state, independent of the event loop.

    Sequence numbers count packets. `highest_acked` is the cumulative ACK
    (next packet the receiver expects), so outstanding packets are
    ``next_seq - highest_acked``.
    """

    def __init__(self, max_window: int = 50, ssthresh: Optional[float] = None,
                 initial_rto: float = 1.0, min_rto: float = 0.2):
        self.cwnd = 1.0
        self.max_window = max_window
        self.ssthresh = float(max_window if ssthresh is None else ssthresh)
        self.next_seq = 0
        self.highest_acked = 0
        self.dup_ack_count = 0
        self.in_recovery = False
        self.rto_s = initial_rto
        self.min_rto = min_rto
        self.srtt: Optional[float] = None
        self.rttvar: Optional[float] = None

    @property
    def outstanding(self) -> int:
        return self.next_seq - self.highest_acked

    @property
    def window(self) -> int:
        return int(math.floor(min(self.cwnd, self.max_window)))

    def _fill_window(self) -> list:
        out = []
        while self.next_seq - self.highest_acked < self.window:
            out.append(self.next_seq)
            self.next_seq += 1
        return out

    def start(self) -> list:
        return self._fill_window()

    def on_ack(self, ack_seq: int) -> list:
        """Process a cumulative ACK; return sequence numbers to transmit."""
        if ack_seq < self.highest_acked:
            return []
        if ack_seq == self.highest_acked:
            if self.outstanding == 0:
                return []
            self.dup_ack_count += 1
            if self.dup_ack_count == 3 and not self.in_recovery:
                self.ssthresh = max(self.cwnd / 2.0, 2.0)
                self.cwnd = min(self.ssthresh, float(self.max_window))
                self.in_recovery = True
                return [self.highest_acked] + self._fill_window()
            return []

        self.highest_acked = ack_seq
        self.dup_ack_count = 0
        if self.in_recovery:
            self.in_recovery = False
        elif self.cwnd < self.ssthresh:
            self.cwnd += 1.0
        else:
            self.cwnd += 1.0 / self.cwnd
        if self.cwnd > self.max_window:
            self.cwnd = float(self.max_window)
        # after a go-back-N timeout the receiver may already hold later data
        if self.next_seq < self.highest_acked:
            self.next_seq = self.highest_acked
        return self._fill_window()

    def on_timeout(self) -> list:
        self.ssthresh = max(self.cwnd / 2.0, 2.0)
        self.cwnd = 1.0
        self.rto_s = min(self.rto_s * 2.0, MAX_RTO)
        self.dup_ack_count = 0
        self.in_recovery = False
        self.next_seq = self.highest_acked
        return self._fill_window()

    def on_rtt_sample(self, rtt: float) -> None:
        if self.srtt is None:
            self.srtt = rtt
            self.rttvar = rtt / 2.0
        else:
            self.rttvar = 0.75 * self.rttvar + 0.25 * abs(self.srtt - rtt)
            self.srtt = 0.875 * self.srtt + 0.125 * rtt
        self.rto_s = min(max(self.min_rto, self.srtt + 4.0 * self.rttvar), MAX_RTO)


class TcpSource:
    """FTP-style infinite-backlog sender driving a TcpConn."""

    def __init__(self, sim: Simulator, flow_id: int, out, stats=None,
                 max_window: int = 50, pkt_size: int = DATA_BYTES,
                 min_rto: float = 0.2):
        self.sim = sim
        self.flow_id = flow_id
        self.out = out
        self.stats = stats
        self.pkt_size = pkt_size
        self.conn = TcpConn(max_window=max_window, min_rto=min_rto)
        self._deadline: Optional[float] = None
        self._timer = None
        # time-weighted cwnd average, for responsiveness checks
        self.cwnd_area = 0.0
        self._t0 = 0.0
        self._cwnd_since: Optional[float] = None

    def start(self, at: float = 0.0) -> None:
        self.sim.schedule(at, WAKEUP, self._begin)

    def mean_cwnd(self, until: float) -> float:
        if self._cwnd_since is None or until <= self._t0:
            return self.conn.cwnd
        area = self.cwnd_area + self.conn.cwnd * (until - self._cwnd_since)
        return area / (until - self._t0)

    def _track_cwnd(self, before: float) -> None:
        now = self.sim.now
        self.cwnd_area += before * (now - self._cwnd_since)
        self._cwnd_since = now

    def _begin(self, _):
        self._t0 = self._cwnd_since = self.sim.now
        self._send(self.conn.start())
        self._arm()

    def _send(self, seqs: list) -> None:
        now = self.sim.now
        for seq in seqs:
            pkt = Packet(self.flow_id, seq, self.pkt_size, ts=now)
            if self.stats is not None:
                self.stats.on_sent(pkt, now)
            self.out.send_at(pkt, now)

    def _arm(self) -> None:
        if self.conn.outstanding == 0:
            self._deadline = None
            return
        self._deadline = self.sim.now + self.conn.rto_s
        if self._timer is None:
            self._timer = self.sim.schedule(self._deadline, TIMER, self._expire)

    def _expire(self, _):
        self._timer = None
        if self._deadline is None:
            return
        if self.sim.now < self._deadline:
            self._timer = self.sim.schedule(self._deadline, TIMER, self._expire)
            return
        self._track_cwnd(self.conn.cwnd)
        self._send(self.conn.on_timeout())
        self._arm()

    def on_ack_packet(self, ack: Packet) -> None:
        conn = self.conn
        before = conn.highest_acked
        self._track_cwnd(conn.cwnd)
        seqs = conn.on_ack(ack.seq)
        if conn.highest_acked > before:
            conn.on_rtt_sample(self.sim.now - ack.ts)
            self._send(seqs)
            self._arm()
        elif seqs:
            self._send(seqs)


class TcpSink:
    """Cumulative-ACK receiver; one ACK per data packet, no delayed ACKs."""

    def __init__(self, sim: Simulator, flow_id: int, out, stats=None):
        self.sim = sim
        self.flow_id = flow_id
        self.out = out
        self.stats = stats
        self.expected = 0
        self._held: set = set()

    def receive(self, pkt: Packet) -> None:
        if self.stats is not None:
            self.stats.on_delivered(pkt, self.sim.now)
        seq = pkt.seq
        if seq == self.expected:
            self.expected += 1
            held = self._held
            while self.expected in held:
                held.remove(self.expected)
                self.expected += 1
        elif seq > self.expected:
            self._held.add(seq)
        ack = Packet(self.flow_id, self.expected, ACK_BYTES, is_ack=True, ts=pkt.ts)
        self.out.send_at(ack, self.sim.now)


class UdpSource:
    """Constant-bit-rate source that ignores loss entirely."""

    def __init__(self, sim: Simulator, flow_id: int, out, rate_bps: float,
                 stats=None, pkt_size_bytes: int = DATA_BYTES):
        self.sim = sim
        self.flow_id = flow_id
        self.out = out
        self.rate_bps = rate_bps
        self.stats = stats
        self.pkt_size_bytes = pkt_size_bytes
        self.next_tx_time: Optional[float] = None
        self._phase = 0.0
        self._k = 0
        self.send_times: Optional[list] = None

    @property
    def interval(self) -> float:
        return self.pkt_size_bytes * 8.0 / self.rate_bps

    def start(self, phase: float = 0.0) -> None:
        if self.rate_bps <= 0:
            return
        self._phase = phase
        self._k = 0
        self.next_tx_time = phase
        self.sim.schedule(phase, WAKEUP, self._fire)

    def next_departure(self, clock: float) -> float:
        """Departure time of the first packet strictly after `clock`."""
        if self.rate_bps <= 0:
            return math.inf
        k = math.floor((clock - self._phase) / self.interval) + 1
        return self._phase + max(k, 0) * self.interval

    def _fire(self, _):
        now = self.sim.now
        pkt = Packet(self.flow_id, self._k, self.pkt_size_bytes, ts=now)
        if self.stats is not None:
            self.stats.on_sent(pkt, now)
        if self.send_times is not None:
            self.send_times.append(now)
        self.out.send_at(pkt, now)
        self._k += 1
        self.next_tx_time = self._phase + self._k * self.interval
        self.sim.schedule(self.next_tx_time, WAKEUP, self._fire)


class UdpSink:
    def __init__(self, sim: Simulator, stats=None):
        self.sim = sim
        self.stats = stats

    def receive(self, pkt: Packet) -> None:
        if self.stats is not None:
            self.stats.on_delivered(pkt, self.sim.now)

