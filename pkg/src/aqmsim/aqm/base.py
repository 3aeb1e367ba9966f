"""Common FIFO machinery shared by every queue discipline."""

from __future__ import annotations

import enum
import random
from collections import deque
from typing import Callable, Optional

from ..errors import ConfigError
from ..simcore import DATA_BYTES, Packet


class DropCause(str, enum.Enum):
    OVERFLOW = "overflow"
    PROBABILISTIC = "probabilistic"
    MATCHED = "matched"
    RATE_LIMITED = "rate_limited"


class QueueDiscipline:
    """FIFO packet store plus an admission policy.

    ``enqueue`` returns None when the packet is stored, otherwise the
    DropCause. Packets removed from the middle of the queue (CHOKe victims)
    are reported through ``on_victim``.
    """

    name = "abstract"
    params: tuple = ()

    def __init__(self, buffer_pkts: int = 150):
        if int(buffer_pkts) != buffer_pkts or buffer_pkts <= 0:
            raise ConfigError("buffer_pkts", f"must be a positive integer, got {buffer_pkts!r}")
        self.buffer_pkts = int(buffer_pkts)
        self.fifo: deque = deque()
        self.rng = random.Random(0)
        self.on_victim: Optional[Callable[[Packet, DropCause], None]] = None
        # transmission time of a full-size packet, for idle-time bookkeeping
        self.pkt_time = DATA_BYTES * 8 / 1e6

    def attach(self, bandwidth_bps: float, rng: random.Random) -> None:
        self.pkt_time = DATA_BYTES * 8.0 / bandwidth_bps
        self.rng = rng

    def __len__(self) -> int:
        return len(self.fifo)

    @property
    def full(self) -> bool:
        return len(self.fifo) >= self.buffer_pkts

    def enqueue(self, pkt: Packet, now: float) -> Optional[DropCause]:
        raise NotImplementedError

    def dequeue(self, now: float) -> Optional[Packet]:
        if not self.fifo:
            return None
        pkt = self.fifo.popleft()
        self.on_depart(pkt, now)
        return pkt

    def on_depart(self, pkt: Packet, now: float) -> None:
        pass

    def on_idle(self, now: float) -> None:
        pass

    def _store(self, pkt: Packet) -> None:
        self.fifo.append(pkt)

    def _remove_victim(self, index: int, cause: DropCause) -> Packet:
        pkt = self.fifo[index]
        del self.fifo[index]
        if self.on_victim is not None:
            self.on_victim(pkt, cause)
        return pkt


class DropTail(QueueDiscipline):
    name = "droptail"

    def enqueue(self, pkt, now):
        if len(self.fifo) >= self.buffer_pkts:
            return DropCause.OVERFLOW
        self.fifo.append(pkt)
        return None


def check_probability(key: str, value: float, allow_zero: bool = True) -> float:
    value = float(value)
    low_ok = value >= 0 if allow_zero else value > 0
    if not (low_ok and value <= 1):
        raise ConfigError(key, f"must be a probability, got {value!r}")
    return value


def check_nonneg(key: str, value: float) -> float:
    value = float(value)
    if value < 0:
        raise ConfigError(key, f"must be >= 0, got {value!r}")
    return value
