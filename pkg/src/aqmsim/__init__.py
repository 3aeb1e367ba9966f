"""Discrete-event comparison of active queue management disciplines."""

from .config import ScenarioConfig, load, loads
from .errors import ConfigError
from .harness import RunResult, emit_csv, run_scenario, sweep
from .simcore import DumbbellTopology

__version__ = "0.1.0"

__all__ = ["ConfigError", "DumbbellTopology", "RunResult", "ScenarioConfig",
           "emit_csv", "load", "loads", "run_scenario", "sweep"]
