import pytest

from aqmsim.harness import run_scenario
from aqmsim.presets import preset_jobs


class RunCache:
    """Runs preset jobs once per session, keyed by run id."""

    def __init__(self):
        self._results = {}

    def preset(self, name, keep=lambda job: True):
        out = []
        for job in preset_jobs(name):
            if not keep(job):
                continue
            cfg, run_id, axis, value = job
            if run_id not in self._results:
                res = run_scenario(cfg, run_id)
                res.axis, res.axis_value = axis, value
                self._results[run_id] = res
            out.append(self._results[run_id])
        return out


@pytest.fixture(scope="session")
def runs():
    return RunCache()
