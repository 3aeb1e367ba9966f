"""Flow Random Early Drop: RED with per-active-flow accounting."""

from __future__ import annotations

from ..errors import ConfigError
from .base import DropCause, QueueDiscipline
from .red import RedState, red_avg_update, red_drop_prob, thresholds


class FlowEntry:
    __slots__ = ("qlen", "strike")

    def __init__(self):
        self.qlen = 0
        self.strike = 0

    def __repr__(self):
        return f"FlowEntry(qlen={self.qlen}, strike={self.strike})"


class FredState:
    """Shared RED average plus a table of flows that have packets queued."""

    def __init__(self, red: RedState, min_q: int = 2):
        if min_q < 0:
            raise ConfigError("min_q", f"must be >= 0, got {min_q!r}")
        self.red = red
        self.min_q = min_q
        self.max_q = red.min_th
        self.avgcq = 0.0
        self.flows: dict = {}

    @property
    def n_active(self) -> int:
        return len(self.flows)


class Fred(QueueDiscipline):
    name = "fred"
    params = ("w_q", "min_th", "max_th", "max_p", "min_q")

    def __init__(self, buffer_pkts=150, w_q=0.002, min_th=None, max_th=None,
                 max_p=0.02, min_q=2):
        super().__init__(buffer_pkts)
        min_th, max_th = thresholds(self.buffer_pkts, min_th, max_th)
        red = RedState(w_q=w_q, min_th=min_th, max_th=max_th, max_p=max_p)
        red.check_buffer(self.buffer_pkts)
        self.state = FredState(red, min_q=min_q)

    def attach(self, bandwidth_bps, rng):
        super().attach(bandwidth_bps, rng)
        self.state.red.pkt_time = self.pkt_time

    def enqueue(self, pkt, now):
        st = self.state
        red = st.red
        avg = red_avg_update(red, len(self.fifo), now)
        flow = st.flows.get(pkt.flow_id)
        qlen = flow.qlen if flow is not None else 0
        strike = flow.strike if flow is not None else 0

        st.max_q = red.min_th
        if avg >= red.max_th:
            st.max_q = 2
        if (qlen >= st.max_q
                or (avg >= red.max_th and qlen > 2 * st.avgcq)
                or (qlen >= st.avgcq and strike > 1)):
            # a flow without queued packets keeps no state, strike included
            if flow is not None:
                flow.strike += 1
            return DropCause.PROBABILISTIC

        if red.min_th <= avg < red.max_th:
            if qlen >= max(st.min_q, st.avgcq):
                p = red_drop_prob(red)
                if p > 0 and self.rng.random() < p:
                    red.count = 0
                    return DropCause.PROBABILISTIC
            red.count += 1
        elif avg < red.min_th:
            red.count = 0
        else:
            red.count = 0
            return DropCause.PROBABILISTIC

        if len(self.fifo) >= self.buffer_pkts:
            return DropCause.OVERFLOW
        if flow is None:
            flow = st.flows[pkt.flow_id] = FlowEntry()
        flow.qlen += 1
        self.fifo.append(pkt)
        return None

    def on_depart(self, pkt, now):
        st = self.state
        avg = red_avg_update(st.red, len(self.fifo), now)
        flow = st.flows.get(pkt.flow_id)
        if flow is None:
            raise RuntimeError(f"departing packet from untracked flow {pkt.flow_id}")
        flow.qlen -= 1
        if flow.qlen == 0:
            del st.flows[pkt.flow_id]
        n = len(st.flows)
        st.avgcq = avg / n if n else avg

    def on_idle(self, now):
        if self.state.red.idle_since is None:
            self.state.red.idle_since = now
