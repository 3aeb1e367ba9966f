"""Random Early Detection."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from ..errors import ConfigError
from .base import DropCause, QueueDiscipline, check_probability


@dataclass
class RedState:
    w_q: float = 0.002
    min_th: float = 50
    max_th: float = 100
    max_p: float = 0.02
    avg: float = 0.0
    count: int = 0
    idle_since: Optional[float] = None
    pkt_time: float = 0.008

    def __post_init__(self):
        if not 0 < self.w_q <= 1:
            raise ConfigError("w_q", f"must lie in (0, 1], got {self.w_q!r}")
        check_probability("max_p", self.max_p, allow_zero=False)
        if self.min_th < 0:
            raise ConfigError("min_th", f"must be >= 0, got {self.min_th!r}")
        if self.max_th <= self.min_th:
            raise ConfigError("max_th", f"must exceed min_th ({self.min_th}), got {self.max_th!r}")

    def check_buffer(self, buffer_pkts: int) -> None:
        if self.max_th > buffer_pkts:
            raise ConfigError("max_th", f"{self.max_th} exceeds buffer of {buffer_pkts} packets")


def red_avg_update(state: RedState, q_len: int, now: float) -> float:
    """Fold one queue-length sample into the EWMA.

    After an idle spell the average first decays as if one empty-queue
    sample had arrived per packet transmission time.
    """
    w = state.w_q
    if state.idle_since is not None:
        idle = now - state.idle_since
        if idle > 0:
            state.avg *= (1.0 - w) ** (idle / state.pkt_time)
        state.idle_since = None
    state.avg = (1.0 - w) * state.avg + w * q_len
    return state.avg


def red_drop_prob(state: RedState) -> float:
    avg = state.avg
    if avg <= state.min_th:
        return 0.0
    if avg >= state.max_th:
        return 1.0
    p_b = state.max_p * (avg - state.min_th) / (state.max_th - state.min_th)
    denom = 1.0 - state.count * p_b
    if denom <= p_b:
        return 1.0
    return p_b / denom


def red_decide(state: RedState, rng) -> bool:
    """Early-drop verdict for the current average; maintains `count`."""
    avg = state.avg
    if avg < state.min_th:
        state.count = 0
        return False
    if avg >= state.max_th:
        state.count = 0
        return True
    p = red_drop_prob(state)
    if p > 0 and rng.random() < p:
        state.count = 0
        return True
    state.count += 1
    return False


def thresholds(buffer_pkts: int, min_th, max_th) -> tuple:
    """Defaults of one third and two thirds of the buffer (50/100 of 150)."""
    if min_th is None:
        min_th = round(buffer_pkts / 3)
    if max_th is None:
        max_th = round(2 * buffer_pkts / 3)
    return min_th, max_th


class Red(QueueDiscipline):
    name = "red"
    params = ("w_q", "min_th", "max_th", "max_p")

    def __init__(self, buffer_pkts=150, w_q=0.002, min_th=None, max_th=None, max_p=0.02):
        super().__init__(buffer_pkts)
        min_th, max_th = thresholds(self.buffer_pkts, min_th, max_th)
        self.state = RedState(w_q=w_q, min_th=min_th, max_th=max_th, max_p=max_p)
        self.state.check_buffer(self.buffer_pkts)

    def attach(self, bandwidth_bps, rng):
        super().attach(bandwidth_bps, rng)
        self.state.pkt_time = self.pkt_time

    def enqueue(self, pkt, now):
        st = self.state
        red_avg_update(st, len(self.fifo), now)
        if red_decide(st, self.rng):
            return DropCause.PROBABILISTIC
        if len(self.fifo) >= self.buffer_pkts:
            return DropCause.OVERFLOW
        self.fifo.append(pkt)
        return None

    def on_idle(self, now):
        if self.state.idle_since is None:
            self.state.idle_since = now
