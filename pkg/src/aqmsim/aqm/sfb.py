"""Stochastic Fair Blue with double-buffered moving hashes."""

from __future__ import annotations

import math

from ..errors import ConfigError
from ..simcore import MASK64, mix64
from .base import DropCause, QueueDiscipline, check_nonneg, check_probability


def sfb_hash(flow_id: int, level: int, seed: int, n_bins: int) -> int:
    return mix64((seed ^ mix64((flow_id & MASK64) ^ (level << 56))) & MASK64) % n_bins


class BinGeneration:
    """One L x N matrix of accounting bins under one set of hash seeds."""

    def __init__(self, index: int, seeds: list, n_bins: int):
        levels = len(seeds)
        self.index = index
        self.seeds = seeds
        self.n_bins = n_bins
        self.qlen = [[0] * n_bins for _ in range(levels)]
        self.pm = [[0.0] * n_bins for _ in range(levels)]
        self.last_update = [[-math.inf] * n_bins for _ in range(levels)]
        self._bins: dict = {}

    def bins(self, flow_id: int) -> tuple:
        b = self._bins.get(flow_id)
        if b is None:
            b = self._bins[flow_id] = tuple(
                sfb_hash(flow_id, lvl, seed, self.n_bins) for lvl, seed in enumerate(self.seeds))
        return b

    def pmin(self, flow_id: int) -> float:
        return min(self.pm[lvl][b] for lvl, b in enumerate(self.bins(flow_id)))

    def recount(self, packets) -> None:
        for row in self.qlen:
            row[:] = [0] * self.n_bins
        for pkt in packets:
            for lvl, b in enumerate(self.bins(pkt.flow_id)):
                self.qlen[lvl][b] += 1


class Sfb(QueueDiscipline):
    name = "sfb"
    params = ("d1", "d2", "freeze_time", "N", "L", "bin_size", "boxtime",
              "boxtime_jitter", "hinterval")

    def __init__(self, buffer_pkts=150, d1=0.005, d2=0.001, freeze_time=0.001,
                 N=23, L=2, bin_size=None, boxtime=0.05, boxtime_jitter=0.0,
                 hinterval=5.0):
        super().__init__(buffer_pkts)
        if int(N) != N or N < 1:
            raise ConfigError("N", f"must be a positive integer, got {N!r}")
        if int(L) != L or L < 1:
            raise ConfigError("L", f"must be a positive integer, got {L!r}")
        self.d1 = check_probability("d1", d1)
        self.d2 = check_probability("d2", d2)
        self.freeze_time = check_nonneg("freeze_time", freeze_time)
        self.N = int(N)
        self.L = int(L)
        self.bin_size = (1.5 / self.N) * self.buffer_pkts if bin_size is None else bin_size
        check_nonneg("bin_size", self.bin_size)
        self.boxtime = check_nonneg("boxtime", boxtime)
        self.boxtime_jitter = check_probability("boxtime_jitter", boxtime_jitter)
        if hinterval is not None and hinterval <= 0:
            raise ConfigError("hinterval", f"must be positive, got {hinterval!r}")
        self.hinterval = hinterval
        self.last_nonresponsive_enqueue = -math.inf
        self.rehash_times: list = []
        self.ratelimit_admits = 0
        self._seed_base = 0
        self._reset_generations()

    def attach(self, bandwidth_bps, rng):
        super().attach(bandwidth_bps, rng)
        self._seed_base = rng.getrandbits(64)
        self._reset_generations()

    def _seeds(self, generation: int) -> list:
        # mix64 is a bijection, so distinct (generation, level) pairs never share a seed
        return [mix64((self._seed_base + generation * self.L + lvl) & MASK64)
                for lvl in range(self.L)]

    def _reset_generations(self) -> None:
        self.generation = 0
        self.gens = [BinGeneration(0, self._seeds(0), self.N),
                     BinGeneration(1, self._seeds(1), self.N)]
        self.next_rehash = self.hinterval if self.hinterval else math.inf

    @property
    def current(self) -> BinGeneration:
        return self.gens[0]

    @property
    def warmup(self) -> BinGeneration:
        return self.gens[1]

    def _bump(self, gen: BinGeneration, lvl: int, b: int, delta: float, now: float) -> None:
        if now - gen.last_update[lvl][b] <= self.freeze_time:
            return
        pm = gen.pm[lvl][b] + delta
        gen.pm[lvl][b] = 1.0 if pm > 1.0 else (0.0 if pm < 0.0 else pm)
        gen.last_update[lvl][b] = now

    def _roll(self, now: float) -> None:
        while now >= self.next_rehash:
            self.rehash(self.next_rehash)
            self.next_rehash += self.hinterval

    def rehash(self, now: float) -> None:
        """Promote the warm-up bins and start a fresh warm-up set."""
        self.generation += 1
        fresh = BinGeneration(self.generation + 1, self._seeds(self.generation + 1), self.N)
        self.gens = [self.gens[1], fresh]
        for gen in self.gens:
            gen.recount(self.fifo)
        self.rehash_times.append(now)

    def enqueue(self, pkt, now):
        self._roll(now)
        cur = self.gens[0]
        fid = pkt.flow_id
        hb = cur.bins(fid)
        overflow = False
        for lvl, b in enumerate(hb):
            q = cur.qlen[lvl][b]
            if q > self.bin_size:
                self._bump(cur, lvl, b, self.d1, now)
                overflow = True
            elif q == 0:
                self._bump(cur, lvl, b, -self.d2, now)
        if overflow:
            return DropCause.OVERFLOW

        pmin = min(cur.pm[lvl][b] for lvl, b in enumerate(hb))
        if pmin >= 1.0:
            warm = self.gens[1]
            for lvl, b in enumerate(warm.bins(fid)):
                self._bump(warm, lvl, b, self.d1, now)
            return self.ratelimit(pkt, now)
        if pmin > 0 and self.rng.random() < pmin:
            return DropCause.PROBABILISTIC
        if len(self.fifo) >= self.buffer_pkts:
            return DropCause.OVERFLOW
        self._admit(pkt)
        return None

    def ratelimit(self, pkt, now):
        """Admit at most one non-responsive packet per (possibly jittered) boxtime."""
        box = self.boxtime
        if self.boxtime_jitter > 0:
            box *= 1.0 + self.boxtime_jitter * self.rng.uniform(-1.0, 1.0)
        if now - self.last_nonresponsive_enqueue > box:
            if len(self.fifo) >= self.buffer_pkts:
                return DropCause.OVERFLOW
            self.last_nonresponsive_enqueue = now
            self.ratelimit_admits += 1
            self._admit(pkt)
            return None
        return DropCause.RATE_LIMITED

    def _admit(self, pkt) -> None:
        for gen in self.gens:
            for lvl, b in enumerate(gen.bins(pkt.flow_id)):
                gen.qlen[lvl][b] += 1
        self.fifo.append(pkt)

    def dequeue(self, now):
        self._roll(now)
        return super().dequeue(now)

    def on_depart(self, pkt, now):
        for gen in self.gens:
            for lvl, b in enumerate(gen.bins(pkt.flow_id)):
                q = gen.qlen[lvl][b] - 1
                gen.qlen[lvl][b] = q
                if q == 0:
                    self._bump(gen, lvl, b, -self.d2, now)
