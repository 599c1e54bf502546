import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "maxlab",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
    derandomize=True,
)
settings.load_profile("maxlab")


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


_ACCEPTANCE = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


@pytest.fixture
def acceptance(request):
    """Collects one summary line per acceptance criterion."""
    details = {}
    yield details
    rep = getattr(request.node, "rep_call", None)
    ok = rep is not None and rep.passed
    number = request.node.callspec.params.get("k") if hasattr(request.node, "callspec") else None
    name = details.get("name", request.node.name)
    _ACCEPTANCE.append((details.get("k", number), name, ok, details.get("summary", "")))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k, name, ok, summary in sorted(_ACCEPTANCE, key=lambda r: (r[0] is None, r[0])):
        terminalreporter.write_line(f"criterion {k:>2} {'PASS' if ok else 'FAIL'}  {name}: {summary}")
