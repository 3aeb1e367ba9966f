"""CHOKe and its multi-drop / adaptive variants."""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..errors import ConfigError
from .base import DropCause, QueueDiscipline
from .red import RedState, red_avg_update, red_decide, thresholds

VARIANTS = ("basic", "multi", "adaptive")


@dataclass
class ChokeState:
    red: RedState
    variant: str = "adaptive"
    cand_num: int = 1
    interval_num: int = 5

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError("variant", f"must be one of {VARIANTS}, got {self.variant!r}")
        if int(self.cand_num) != self.cand_num or self.cand_num < 1:
            raise ConfigError("cand_num", f"must be an integer >= 1, got {self.cand_num!r}")
        if int(self.interval_num) != self.interval_num or self.interval_num < 1:
            raise ConfigError("interval_num", f"must be an integer >= 1, got {self.interval_num!r}")
        self.cand_num = int(self.cand_num)
        self.interval_num = int(self.interval_num)


def choke_candidates(state: ChokeState) -> int:
    if state.variant == "basic":
        return 1
    if state.variant == "multi":
        return state.cand_num
    red = state.red
    k = state.interval_num
    frac = (red.avg - red.min_th) / (red.max_th - red.min_th)
    region = min(k, 1 + math.floor(k * frac))
    return 2 * max(region, 1)


class Choke(QueueDiscipline):
    name = "choke"
    params = ("w_q", "min_th", "max_th", "max_p", "variant", "cand_num", "interval_num")

    def __init__(self, buffer_pkts=150, w_q=0.002, min_th=None, max_th=None, max_p=0.02,
                 variant="adaptive", cand_num=1, interval_num=5):
        super().__init__(buffer_pkts)
        min_th, max_th = thresholds(self.buffer_pkts, min_th, max_th)
        red = RedState(w_q=w_q, min_th=min_th, max_th=max_th, max_p=max_p)
        red.check_buffer(self.buffer_pkts)
        self.state = ChokeState(red, variant=variant, cand_num=cand_num,
                                interval_num=interval_num)

    def attach(self, bandwidth_bps, rng):
        super().attach(bandwidth_bps, rng)
        self.state.red.pkt_time = self.pkt_time

    def enqueue(self, pkt, now):
        st = self.state
        red = st.red
        fifo = self.fifo
        avg = red_avg_update(red, len(fifo), now)
        if avg >= red.min_th and fifo:
            m = min(choke_candidates(st), len(fifo))
            fid = pkt.flow_id
            hits = [i for i in self.rng.sample(range(len(fifo)), m) if fifo[i].flow_id == fid]
            if hits:
                for i in sorted(hits, reverse=True):
                    self._remove_victim(i, DropCause.MATCHED)
                return DropCause.MATCHED
        if red_decide(red, self.rng):
            return DropCause.PROBABILISTIC
        if len(fifo) >= self.buffer_pkts:
            return DropCause.OVERFLOW
        fifo.append(pkt)
        return None

    def on_idle(self, now):
        if self.state.red.idle_since is None:
            self.state.red.idle_since = now
