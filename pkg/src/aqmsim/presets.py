"""Named scenario bundles, one per reproduced experiment."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .config import ScenarioConfig, with_value
from .harness import sweep_jobs
from .simcore import DumbbellTopology

DISCIPLINE_ORDER = ("droptail", "red", "fred", "blue", "sfb", "choke")

# x-axis of the UDP-rate sweeps; the original sample points are not published
UDP_RATES = (0.1e6, 0.5e6, 1e6, 2e6, 4e6, 6e6, 8e6)
OVERLOAD_RATE = 8e6

DEFAULT_PARAMS = {
    "choke": {"variant": "adaptive", "interval_num": 5},
}


@dataclass
class Group:
    """One sweep (or a single run when `axis` is None) inside a preset."""

    label: str
    config: ScenarioConfig
    axis: Optional[str] = None
    values: tuple = ()


def standard(aqm: str, udp_rate_bps: float = OVERLOAD_RATE, **params) -> ScenarioConfig:
    """10 TCP + 1 UDP over a 1 Mbps bottleneck with a 150-packet buffer."""
    merged = dict(DEFAULT_PARAMS.get(aqm, {}))
    merged.update(params)
    return ScenarioConfig(aqm=aqm, aqm_params=merged, udp_rate_bps=udp_rate_bps,
                          topology=DumbbellTopology(n_tcp=10, n_udp=1, buffer_pkts=150))


def many_tcp(aqm: str, n_udp: int, buffer_pkts: int, **params) -> ScenarioConfig:
    """49 TCP flows with 300 KB windows, optionally joined by a 40 Mbps UDP flow."""
    return ScenarioConfig(
        aqm=aqm, aqm_params=params, udp_rate_bps=40e6, tcp_window_pkts=300,
        topology=DumbbellTopology(n_tcp=49, n_udp=n_udp, buffer_pkts=buffer_pkts,
                                  access_bw_bps=100e6))


def _fig4():
    return [Group(f"fig4/{d}", standard(d), "udp_rate_bps", UDP_RATES) for d in DISCIPLINE_ORDER]


def _fig5():
    return [Group(f"fig5/{d}", standard(d)) for d in DISCIPLINE_ORDER]


def _fig6():
    return [Group("fig6/fred", standard("fred"), "buffer_pkts",
                  (10, 15, 20, 30, 45, 60, 90, 120, 150))]


def _table1():
    cfg = standard("fred", udp_rate_bps=2e6)
    cfg.topology.access_bw_bps = 100e6
    return [Group("table1/fred", cfg, "bottleneck_bw_bps",
                  (0.5e6, 1e6, 2e6, 4e6, 8e6, 10e6, 20e6))]


def _blue_fig7():
    return [Group("blue-fig7", many_tcp("blue", 0, 300))]


def _blue_fig8():
    return [Group("blue-fig8", many_tcp("blue", 1, 300))]


def _sfb_fig9():
    return [Group("sfb-fig9", many_tcp("sfb", 0, 150))]


def _sfb_fig10():
    return [Group("sfb-fig10", many_tcp("sfb", 1, 150))]


def _boxtime_fig11():
    return [Group("boxtime-fig11", many_tcp("sfb", 1, 150), "boxtime", (0.02, 0.05, 0.5))]


def _sfb_fig12():
    cfg = standard("sfb", udp_rate_bps=4e6)
    cfg.topology.n_udp = 5
    return [Group("sfb-fig12", cfg, "boxtime_jitter", (0.0, 0.5))]


def _choke_fig13():
    return [Group(f"choke-fig13/cand_num={m}", standard("choke", variant="multi", cand_num=m),
                  "udp_rate_bps", UDP_RATES) for m in (1, 2, 4, 8)]


def _choke_fig14():
    return [Group(f"choke-fig14/interval_num={k}", standard("choke", interval_num=k),
                  "udp_rate_bps", UDP_RATES) for k in (1, 2, 5, 10)]


def _choke_fig16():
    groups = []
    for n_tcp, n_udp in ((1, 1), (10, 1), (10, 5)):
        for d in ("choke", "red"):
            cfg = standard(d)
            cfg.topology.n_tcp = n_tcp
            cfg.topology.n_udp = n_udp
            groups.append(Group(f"choke-fig16/{n_tcp}tcp-{n_udp}udp/{d}", cfg,
                                "udp_rate_bps", UDP_RATES))
    return groups


PRESETS = {
    "fig4": _fig4,
    "fig5": _fig5,
    "fig6": _fig6,
    "table1": _table1,
    "blue-fig7": _blue_fig7,
    "blue-fig8": _blue_fig8,
    "sfb-fig9": _sfb_fig9,
    "sfb-fig10": _sfb_fig10,
    "boxtime-fig11": _boxtime_fig11,
    "sfb-fig12": _sfb_fig12,
    "choke-fig13": _choke_fig13,
    "choke-fig14": _choke_fig14,
    "choke-fig16": _choke_fig16,
}


def preset_groups(name: str, duration_s: Optional[float] = None) -> list:
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    groups = PRESETS[name]()
    if duration_s is not None:
        for g in groups:
            warm = min(g.config.warmup_s, duration_s / 10)
            g.config = with_value(with_value(g.config, "warmup_s", warm), "duration_s", duration_s)
    return groups


def preset_jobs(name: str, duration_s: Optional[float] = None) -> list:
    jobs = []
    for g in preset_groups(name, duration_s):
        g.config.validate()
        if g.axis is None:
            jobs.append((g.config, g.label, "", ""))
        else:
            jobs.extend(sweep_jobs(g.config, g.axis, list(g.values), label=g.label))
    return jobs
