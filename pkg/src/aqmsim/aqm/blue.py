"""BLUE: a single drop probability driven by loss and idle events."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .base import DropCause, QueueDiscipline, check_nonneg, check_probability


@dataclass
class BlueState:
    pm: float = 0.0
    d1: float = 0.02
    d2: float = 0.002
    freeze_time: float = 0.01
    last_update: float = -math.inf

    def __post_init__(self):
        check_probability("pm", self.pm)
        check_probability("d1", self.d1)
        check_probability("d2", self.d2)
        check_nonneg("freeze_time", self.freeze_time)


def blue_on_loss(state: BlueState, now: float) -> float:
    if now - state.last_update > state.freeze_time:
        state.pm = min(1.0, state.pm + state.d1)
        state.last_update = now
    return state.pm


def blue_on_idle(state: BlueState, now: float) -> float:
    if now - state.last_update > state.freeze_time:
        state.pm = max(0.0, state.pm - state.d2)
        state.last_update = now
    return state.pm


class Blue(QueueDiscipline):
    name = "blue"
    params = ("d1", "d2", "freeze_time")

    def __init__(self, buffer_pkts=150, d1=0.02, d2=0.002, freeze_time=0.01):
        super().__init__(buffer_pkts)
        self.state = BlueState(d1=d1, d2=d2, freeze_time=freeze_time)

    def enqueue(self, pkt, now):
        st = self.state
        if len(self.fifo) >= self.buffer_pkts:
            blue_on_loss(st, now)
            return DropCause.OVERFLOW
        if st.pm > 0 and self.rng.random() < st.pm:
            return DropCause.PROBABILISTIC
        self.fifo.append(pkt)
        return None

    def on_idle(self, now):
        blue_on_idle(self.state, now)
