import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def vehicle_files(tmp_path_factory):
    """A small synthetic vehicle CSV plus its schema file."""
    from emissions_ml.synthetic import write_dataset

    d = tmp_path_factory.mktemp("vehicles")
    write_dataset(d / "vehicles.csv", 600, seed=3, schema_path=d / "schema.json")
    return d / "vehicles.csv", d / "schema.json"


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
