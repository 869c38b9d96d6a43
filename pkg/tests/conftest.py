import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow], max_examples=50
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240613)


# -- acceptance summary: one line per criterion ------------------------------

_CRITERIA: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion n")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or (report.when != "call" and not report.failed and not report.skipped):
        return
    n, title = mark.args
    entry = _CRITERIA.setdefault(n, {"title": title, "status": "PASS", "details": []})
    props = dict(item.user_properties)
    if hasattr(report, "wasxfail") or report.failed:
        entry["status"] = "FAIL"
    elif report.skipped:
        entry["status"] = "SKIP" if entry["status"] == "PASS" else entry["status"]
    elif props.get("status") == "WARN" and entry["status"] == "PASS":
        entry["status"] = "WARN"
    if report.when == "call" and "detail" in props:
        entry["details"].append(props["detail"])


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        e = _CRITERIA[n]
        detail = "; ".join(e["details"])
        terminalreporter.write_line(f"criterion {n:2d} {e['status']:4s} {e['title']}" + (f" | {detail}" if detail else ""))
