import pathlib

import pytest

from compapprox.harness.fixtures import fixture_config
from compapprox.harness.runner import run_experiment


class _FixtureRuns:
    """Runs bundled fixtures on demand, once per session, into a shared dir."""

    def __init__(self, root: pathlib.Path):
        self.root = root
        self._status = {}

    def run(self, name):
        if name not in self._status:
            cfg = fixture_config(name)
            outdir = self.root / name
            self._status[name] = run_experiment(cfg, output_dir=outdir)
        return self._status[name], self.root / name

    def summary_path(self, name):
        status, outdir = self.run(name)
        return outdir / f"{name}_summary.json"


@pytest.fixture(scope="session")
def fixture_runs(tmp_path_factory):
    return _FixtureRuns(tmp_path_factory.mktemp("fixture-artifacts"))
