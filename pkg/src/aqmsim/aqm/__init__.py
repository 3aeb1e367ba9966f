"""Queue disciplines behind one enqueue/dequeue/idle interface."""

from ..errors import ConfigError
from .base import DropCause, DropTail, QueueDiscipline
from .blue import Blue, BlueState, blue_on_idle, blue_on_loss
from .choke import Choke, ChokeState, choke_candidates
from .fred import Fred, FredState
from .red import Red, RedState, red_avg_update, red_drop_prob
from .sfb import BinGeneration, Sfb, sfb_hash

DISCIPLINES = {cls.name: cls for cls in (DropTail, Red, Fred, Blue, Sfb, Choke)}


def make_discipline(name: str, buffer_pkts: int, **params) -> QueueDiscipline:
    """Instantiate a discipline by name, rejecting parameters it does not take."""
    try:
        cls = DISCIPLINES[name]
    except KeyError:
        raise ConfigError("aqm.name", f"unknown discipline {name!r}; "
                          f"choose from {', '.join(DISCIPLINES)}") from None
    for key in params:
        if key not in cls.params:
            raise ConfigError(f"aqm.{key}", f"not a parameter of {name}")
    return cls(buffer_pkts, **params)


__all__ = [
    "DISCIPLINES", "BinGeneration", "Blue", "BlueState", "Choke", "ChokeState",
    "ConfigError", "DropCause", "DropTail", "Fred", "FredState", "QueueDiscipline",
    "Red", "RedState", "Sfb", "blue_on_idle", "blue_on_loss", "choke_candidates",
    "make_discipline", "red_avg_update", "red_drop_prob", "sfb_hash",
]
