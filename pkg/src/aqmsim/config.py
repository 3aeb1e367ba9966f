"""Scenario configuration and its flat key = value file format.

Files are INI-style with three sections::

    [scenario]
    duration_s = 100.0
    seed = 1

    [topology]
    n_tcp = 10
    buffer_pkts = 150

    [aqm]
    name = red
    min_th = 50

Keys inside ``[aqm]`` are the discipline's own parameter names.
"""

from __future__ import annotations

import configparser
import copy
import io
import re
from dataclasses import dataclass, field, fields
from pathlib import Path

from .aqm import DISCIPLINES, make_discipline
from .errors import ConfigError
from .simcore import DumbbellTopology

SCENARIO_KEYS = ("udp_rate_bps", "tcp_window_pkts", "pkt_size_bytes", "duration_s",
                 "warmup_s", "seed", "tcp_start_s", "min_rto_s")
TOPOLOGY_KEYS = tuple(f.name for f in fields(DumbbellTopology))

ALIASES = {
    "udp_rate": "scenario.udp_rate_bps",
    "bottleneck_bw": "topology.bottleneck_bw_bps",
    "access_bw": "topology.access_bw_bps",
    "buffer": "topology.buffer_pkts",
}

_SUFFIX = {"k": 1e3, "K": 1e3, "M": 1e6, "G": 1e9}


@dataclass
class ScenarioConfig:
    aqm: str = "droptail"
    aqm_params: dict = field(default_factory=dict)
    topology: DumbbellTopology = field(default_factory=DumbbellTopology)
    udp_rate_bps: float = 1e6
    tcp_window_pkts: int = 50
    pkt_size_bytes: int = 1000
    duration_s: float = 100.0
    warmup_s: float = 10.0
    seed: int = 1
    # TCP start times are spread uniformly over [0, tcp_start_s)
    tcp_start_s: float = 1.0
    min_rto_s: float = 0.2

    @property
    def n_tcp(self) -> int:
        return self.topology.n_tcp

    @property
    def n_udp(self) -> int:
        return self.topology.n_udp

    def validate(self) -> None:
        if self.aqm not in DISCIPLINES:
            raise ConfigError("aqm.name", f"unknown discipline {self.aqm!r}")
        allowed = DISCIPLINES[self.aqm].params
        for key in self.aqm_params:
            if key not in allowed:
                raise ConfigError(f"aqm.{key}", f"not a parameter of {self.aqm}")
        if self.warmup_s < 0:
            raise ConfigError("scenario.warmup_s", "must be >= 0")
        if self.duration_s <= self.warmup_s:
            raise ConfigError("scenario.duration_s", "must exceed warmup_s")
        if self.udp_rate_bps < 0:
            raise ConfigError("scenario.udp_rate_bps", "must be >= 0")
        if self.tcp_window_pkts < 1:
            raise ConfigError("scenario.tcp_window_pkts", "must be >= 1")
        if self.pkt_size_bytes <= 0:
            raise ConfigError("scenario.pkt_size_bytes", "must be positive")
        if self.tcp_start_s < 0:
            raise ConfigError("scenario.tcp_start_s", "must be >= 0")
        self.topology.validate()
        try:
            make_discipline(self.aqm, self.topology.buffer_pkts, **self.aqm_params)
        except ConfigError as exc:
            if exc.key.startswith("aqm.") or exc.key == "buffer_pkts":
                raise
            raise ConfigError("aqm." + exc.key, str(exc).split(": ", 1)[-1]) from None
        except TypeError as exc:
            raise ConfigError("aqm", str(exc)) from None

    def copy(self) -> "ScenarioConfig":
        return copy.deepcopy(self)


def parse_number(text: str) -> float | int:
    """Parse '150', '0.002', '8M', '500k' and the like."""
    s = text.strip()
    scale = 1.0
    if s and s[-1] in _SUFFIX:
        scale = _SUFFIX[s[-1]]
        s = s[:-1]
    if scale == 1.0 and re.fullmatch(r"[+-]?\d+", s):
        return int(s)
    value = float(s) * scale
    return int(value) if scale != 1.0 and value.is_integer() else value


def _parse_value(text: str):
    try:
        return parse_number(text)
    except ValueError:
        return text.strip()


def _format_value(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def resolve_key(cfg: ScenarioConfig, key: str) -> str:
    """Map a user-facing key onto its dotted form."""
    key = ALIASES.get(key, key)
    if "." in key:
        section, name = key.split(".", 1)
        if section == "scenario" and name in SCENARIO_KEYS:
            return key
        if section == "topology" and name in TOPOLOGY_KEYS:
            return key
        if section == "aqm" and (name == "name" or name in DISCIPLINES[cfg.aqm].params):
            return key
        raise ConfigError(key, "unknown configuration key")
    if key in SCENARIO_KEYS:
        return "scenario." + key
    if key in TOPOLOGY_KEYS:
        return "topology." + key
    if cfg.aqm in DISCIPLINES and key in DISCIPLINES[cfg.aqm].params:
        return "aqm." + key
    raise ConfigError(key, "unknown configuration key")


def _coerce(template, value, key):
    if isinstance(template, bool):
        raise ConfigError(key, "boolean keys are not supported")
    if isinstance(template, int):
        if float(value) != int(float(value)):
            raise ConfigError(key, f"expects an integer, got {value!r}")
        return int(float(value))
    if isinstance(template, float):
        return float(value)
    return value


def with_value(cfg: ScenarioConfig, key: str, value) -> ScenarioConfig:
    """Copy of `cfg` with one dotted key replaced."""
    dotted = resolve_key(cfg, key)
    section, name = dotted.split(".", 1)
    out = cfg.copy()
    if section == "scenario":
        setattr(out, name, _coerce(getattr(out, name), value, dotted))
    elif section == "topology":
        setattr(out.topology, name, _coerce(getattr(out.topology, name), value, dotted))
    elif name == "name":
        out.aqm = str(value)
    else:
        out.aqm_params[name] = value
    return out


def get_value(cfg: ScenarioConfig, key: str):
    dotted = resolve_key(cfg, key)
    section, name = dotted.split(".", 1)
    if section == "scenario":
        return getattr(cfg, name)
    if section == "topology":
        return getattr(cfg.topology, name)
    if name == "name":
        return cfg.aqm
    return cfg.aqm_params.get(name)


def _parser() -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str  # keep N and L upper-case
    return cp


def loads(text: str) -> ScenarioConfig:
    cp = _parser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError("config", str(exc)) from None
    unknown = set(cp.sections()) - {"scenario", "topology", "aqm"}
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown section")
    cfg = ScenarioConfig()
    if cp.has_section("aqm"):
        cfg.aqm = cp.get("aqm", "name", fallback=cfg.aqm).strip()
        if cfg.aqm not in DISCIPLINES:
            raise ConfigError("aqm.name", f"unknown discipline {cfg.aqm!r}")
    for section in ("scenario", "topology", "aqm"):
        if not cp.has_section(section):
            continue
        for name, raw in cp.items(section):
            if section == "aqm" and name == "name":
                continue
            key = f"{section}.{name}"
            resolve_key(cfg, key)
            try:
                value = _parse_value(raw)
                cfg = with_value(cfg, key, value)
            except ValueError as exc:
                if isinstance(exc, ConfigError):
                    raise
                raise ConfigError(key, str(exc)) from None
    cfg.validate()
    return cfg


def load(path) -> ScenarioConfig:
    return loads(Path(path).read_text(encoding="utf-8"))


def dumps(cfg: ScenarioConfig) -> str:
    cp = _parser()
    cp["scenario"] = {k: _format_value(getattr(cfg, k)) for k in SCENARIO_KEYS}
    cp["topology"] = {k: _format_value(getattr(cfg.topology, k)) for k in TOPOLOGY_KEYS}
    aqm = {"name": cfg.aqm}
    for k in DISCIPLINES[cfg.aqm].params:
        if cfg.aqm_params.get(k) is not None:
            aqm[k] = _format_value(cfg.aqm_params[k])
    cp["aqm"] = aqm
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue().rstrip("\n") + "\n"


def dump(cfg: ScenarioConfig, path) -> None:
    Path(path).write_text(dumps(cfg), encoding="utf-8", newline="\n")
