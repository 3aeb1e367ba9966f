"""Scenario execution, sweeps and CSV output."""

from __future__ import annotations

import csv
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

from .aqm import make_discipline
from .config import ScenarioConfig, dumps, get_value, resolve_key, with_value
from .errors import ConfigError
from .metrics import FlowLedger, FlowStats, QueueMonitor, QueueSeries, jain_index, utilization
from .simcore import Simulator, build_dumbbell, derive_seed
from .transport import TcpSink, TcpSource, UdpSink, UdpSource

log = logging.getLogger(__name__)


@dataclass
class RunResult:
    run_id: str
    config: ScenarioConfig
    flows: list
    queues: QueueSeries
    utilization: float
    jain_tcp: float
    udp_share: float
    tcp_share: float
    udp_throughput_bps: float
    tcp_throughput_bps: float
    drops_by_cause: dict
    events: int
    axis: str = ""
    axis_value: object = ""
    extra: dict = field(default_factory=dict)

    @property
    def discipline(self) -> str:
        return self.config.aqm

    def flow(self, flow_id: int) -> FlowStats:
        return self.flows[flow_id]

    def udp_flows(self) -> list:
        return [f for f in self.flows if f.cls == "udp"]

    def tcp_flows(self) -> list:
        return [f for f in self.flows if f.cls == "tcp"]

    def jain(self, cls: Optional[str] = None) -> float:
        flows = self.flows if cls is None else [f for f in self.flows if f.cls == cls]
        try:
            return jain_index([f.throughput_bps for f in flows])
        except ValueError:
            return math.nan

    def to_json(self) -> str:
        data = {
            "run_id": self.run_id,
            "config": dumps(self.config),
            "flows": [asdict(f) for f in self.flows],
            "queues": asdict(self.queues),
            "utilization": self.utilization,
            "jain_tcp": self.jain_tcp,
            "udp_share": self.udp_share,
            "tcp_share": self.tcp_share,
            "drops_by_cause": self.drops_by_cause,
            "events": self.events,
            "axis": self.axis,
            "axis_value": self.axis_value,
            "extra": self.extra,
        }
        return json.dumps(data, sort_keys=True)


def run_scenario(cfg: ScenarioConfig, run_id: str = "run", trace: bool = False) -> RunResult:
    cfg.validate()
    topo = cfg.topology
    sim = Simulator(seed=cfg.seed, trace=trace)
    disc = make_discipline(cfg.aqm, topo.buffer_pkts, **cfg.aqm_params)
    classes = ["tcp"] * topo.n_tcp + ["udp"] * topo.n_udp
    ledger = FlowLedger(classes, cfg.warmup_s)
    monitor = QueueMonitor(classes, ledger)
    net = build_dumbbell(sim, topo, disc, observer=monitor,
                         on_pipe_drop=lambda pkt: ledger.on_drop(pkt, "overflow"))

    tcp_sources = []
    for f in range(topo.n_tcp):
        src = TcpSource(sim, f, net.ingress[f], ledger, max_window=cfg.tcp_window_pkts,
                        pkt_size=cfg.pkt_size_bytes, min_rto=cfg.min_rto_s)
        sink = TcpSink(sim, f, net.ack_ingress[f], ledger)
        net.sinks[f] = sink.receive
        net.sources[f] = src.on_ack_packet
        src.start(sim.rng.uniform(0.0, cfg.tcp_start_s))
        tcp_sources.append(src)
    udp_sources = []
    for f in range(topo.n_tcp, topo.n_flows):
        src = UdpSource(sim, f, net.ingress[f], cfg.udp_rate_bps, ledger,
                        pkt_size_bytes=cfg.pkt_size_bytes)
        net.sinks[f] = UdpSink(sim, ledger).receive
        if cfg.udp_rate_bps > 0:
            src.start(sim.rng.uniform(0.0, src.interval))
        udp_sources.append(src)

    events = sim.run_until(cfg.duration_s)
    monitor.finish(cfg.duration_s)
    window = cfg.duration_s - cfg.warmup_s
    ledger.finalize(window)

    flows = ledger.flows
    capacity = topo.bottleneck_bw_bps
    tcp_bps = sum(f.throughput_bps for f in flows if f.cls == "tcp")
    udp_bps = sum(f.throughput_bps for f in flows if f.cls == "udp")
    total_bits = sum(f.window_bytes for f in flows) * 8.0
    try:
        jain_tcp = jain_index([f.throughput_bps for f in flows if f.cls == "tcp"])
    except ValueError:
        jain_tcp = math.nan

    extra = {
        "mean_cwnd": [s.mean_cwnd(cfg.duration_s) for s in tcp_sources],
        "max_queue_pkts": monitor.max_raw_total,
        "in_flight": _in_flight(sim, disc, len(flows)),
    }
    if cfg.aqm == "sfb":
        extra["rehash_times"] = list(disc.rehash_times)
        extra["ratelimit_admits"] = disc.ratelimit_admits
    log.info("%s: %s util=%.3f udp=%.3f Mbps events=%d", run_id, cfg.aqm,
             total_bits / (capacity * window), udp_bps / 1e6, events)
    return RunResult(
        run_id=run_id,
        config=cfg,
        flows=flows,
        queues=monitor.series,
        utilization=utilization(total_bits, window, capacity),
        jain_tcp=jain_tcp,
        udp_share=udp_bps / capacity,
        tcp_share=tcp_bps / capacity,
        udp_throughput_bps=udp_bps,
        tcp_throughput_bps=tcp_bps,
        drops_by_cause=dict(sorted(ledger.drops_by_cause.items())),
        events=events,
        extra=extra,
    )


def _in_flight(sim, disc, n_flows: int) -> list:
    """Data packets still inside the network, counted from live state."""
    counts = [0] * n_flows
    for ev in sim.pending():
        pkt = ev.payload
        if pkt is not None and hasattr(pkt, "is_ack") and not pkt.is_ack:
            counts[pkt.flow_id] += 1
    for pkt in disc.fifo:
        counts[pkt.flow_id] += 1
    return counts


def _run_job(job):
    cfg, run_id, axis, value = job
    res = run_scenario(cfg, run_id)
    res.axis = axis
    res.axis_value = value
    return res


def run_jobs(jobs: list, workers: int = 1) -> list:
    if workers <= 1 or len(jobs) <= 1:
        return [_run_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_job, jobs))


def sweep_jobs(cfg: ScenarioConfig, axis: str, values: list, label: str = "") -> list:
    if not values:
        raise ConfigError("values", "sweep needs at least one value")
    dotted = resolve_key(cfg, axis)
    if dotted == "aqm.name":
        raise ConfigError(axis, "sweep axis must be numeric")
    jobs = []
    for i, value in enumerate(values):
        point = with_value(cfg, dotted, value)
        point.seed = derive_seed(cfg.seed, i)
        point.validate()
        shown = get_value(point, dotted)
        run_id = f"{label or cfg.aqm}/{dotted.split('.', 1)[1]}={shown:g}"
        jobs.append((point, run_id, dotted, shown))
    return jobs


def sweep(cfg: ScenarioConfig, axis: str, values: list, label: str = "",
          workers: int = 1) -> list:
    """One run per axis value; per-run seeds depend only on the value's index."""
    return run_jobs(sweep_jobs(cfg, axis, values, label), workers)


FLOW_COLUMNS = ("run_id", "flow_id", "class", "delivered_bytes", "dropped", "throughput_bps")
QUEUE_COLUMNS = ("run_id", "t", "class", "ewma_len_pkts")
SUMMARY_COLUMNS = ("run_id", "axis_value", "discipline", "utilization", "jain_tcp", "udp_share")


def output_paths(prefix) -> dict:
    prefix = str(prefix)
    if prefix.endswith(("/", os.sep)) or Path(prefix).is_dir():
        base = Path(prefix)
        return {k: base / f"{k}.csv" for k in ("flows", "queues", "summary")}
    return {k: Path(f"{prefix}.{k}.csv") for k in ("flows", "queues", "summary")}


def _fmt(x, digits=6) -> str:
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        return f"{x:.{digits}f}"
    return str(x)


def emit_csv(results: list, prefix) -> dict:
    """Write flows/queues/summary CSV files; returns the paths written."""
    if not results:
        raise ValueError("no results to write")
    paths = output_paths(prefix)
    paths["flows"].parent.mkdir(parents=True, exist_ok=True)

    def writer(fh):
        return csv.writer(fh, lineterminator="\n")

    with open(paths["flows"], "w", encoding="utf-8", newline="") as fh:
        w = writer(fh)
        w.writerow(FLOW_COLUMNS)
        for r in results:
            for f in r.flows:
                w.writerow([r.run_id, f.flow_id, f.cls, f.delivered_bytes, f.dropped_pkts,
                            _fmt(f.throughput_bps, 3)])
    with open(paths["queues"], "w", encoding="utf-8", newline="") as fh:
        w = writer(fh)
        w.writerow(QUEUE_COLUMNS)
        for r in results:
            q = r.queues
            for i, t in enumerate(q.t):
                ts = f"{t:.3f}"
                w.writerow([r.run_id, ts, "total", _fmt(q.total[i], 4)])
                w.writerow([r.run_id, ts, "tcp", _fmt(q.tcp[i], 4)])
                w.writerow([r.run_id, ts, "udp", _fmt(q.udp[i], 4)])
                for fid, v in enumerate(q.per_flow[i]):
                    w.writerow([r.run_id, ts, f"flow{fid}", _fmt(v, 4)])
    with open(paths["summary"], "w", encoding="utf-8", newline="") as fh:
        w = writer(fh)
        w.writerow(SUMMARY_COLUMNS)
        for r in results:
            value = r.axis_value if r.axis_value != "" else ""
            w.writerow([r.run_id, _fmt(value) if isinstance(value, float) else value,
                        r.discipline, _fmt(r.utilization), _fmt(r.jain_tcp), _fmt(r.udp_share)])
    return paths
