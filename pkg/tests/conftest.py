import pytest
from hypothesis import HealthCheck, settings

from lambdasym.symexpr import SamplingConfig

settings.register_profile(
    "default",
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture
def cfg():
    return SamplingConfig()


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import RESULTS

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(RESULTS):
        verdict, title = RESULTS[number]
        terminalreporter.write_line(f"criterion {number}: {verdict}  {title}")
