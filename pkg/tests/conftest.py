import warnings

import pytest
from hypothesis import HealthCheck, settings

from esnlab.errors import EchoStateWarning

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(autouse=True)
def _quiet_echo_state_warnings():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", EchoStateWarning)
        yield


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for number in sorted(results):
            terminalreporter.write_line(results[number])
