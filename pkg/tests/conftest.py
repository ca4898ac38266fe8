import numpy as np
import pytest
from hypothesis import settings

from causalfs.series import EnsembleTimeSeries, VariableMeta

settings.register_profile("ci", max_examples=50, deadline=None)
settings.load_profile("ci")


def make_ensemble(lengths, n_vars=3, seed=0, target="y"):
    """Gaussian white-noise ensemble with predictors x0.. and a target."""
    rng = np.random.default_rng(seed)
    names = [f"x{i}" for i in range(n_vars - 1)] + [target]
    roles = ["predictor"] * (n_vars - 1) + ["target"]
    members = [rng.standard_normal((T, n_vars)) for T in lengths]
    return EnsembleTimeSeries(members, [VariableMeta(n, r) for n, r in zip(names, roles)])


@pytest.fixture
def small_ensemble():
    return make_ensemble([60, 80, 70, 90, 65])


def snapshot(directory):
    """Every file under ``directory`` as bytes, keyed by relative path.

    The manifest's ``runtime`` block (wall time, worker count) is dropped;
    everything else a run writes must be reproducible byte for byte.
    """
    import json
    from pathlib import Path

    out = {}
    for path in sorted(Path(directory).rglob("*")):
        if not path.is_file():
            continue
        data = path.read_bytes()
        if path.name == "manifest.json":
            manifest = json.loads(data)
            manifest.pop("runtime")
            data = json.dumps(manifest, sort_keys=True).encode()
        out[str(path.relative_to(directory))] = data
    return out


# small, fast confounder run shared by the CLI tests
CLI_BASE = ["--scenario", "confounder", "--n-members", "10", "--seed", "1", "--quiet"]


ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def acceptance_log(request):
    """Collects one ``(criterion, passed, detail)`` line per acceptance check."""
    return request.config.stash.setdefault(ACCEPTANCE, [])


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line[1])
