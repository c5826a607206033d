import pytest

from arpdp.ingest import IntervalGraph

_CRITERIA = []


@pytest.fixture
def three_user_graph():
    # 3 users, 4 requests: users 1 and 2 each reach two others, user 3 sends nothing.
    return IntervalGraph.from_edges(1, [("u1", "u2"), ("u1", "u3"), ("u2", "u1"), ("u2", "u3")])


@pytest.fixture
def criterion(request):
    """Record an acceptance criterion's outcome for the end-of-run summary."""
    entry = {"name": None, "detail": "", "passed": False}

    def record(name, detail=""):
        entry["name"] = name
        entry["detail"] = detail

    yield record
    if entry["name"] is not None:
        rep = getattr(request.node, "rep_call", None)
        entry["passed"] = bool(rep and rep.passed)
        _CRITERIA.append(entry)


@pytest.hookimpl(hookwrapper=True, tryfirst=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for e in sorted(_CRITERIA, key=lambda e: e["name"]):
        status = "PASS" if e["passed"] else "FAIL"
        terminalreporter.write_line(f"{status}  {e['name']}  {e['detail']}")
