"""Collects acceptance outcomes and prints one line per criterion."""

import pytest

_OUTCOMES = {}


@pytest.fixture
def note(request):
    """Attach a short detail string to the criterion line of the running test."""

    def add(text):
        request.node.user_properties.append(("note", str(text)))

    return add


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, name = marker.args
    failed = rep.failed
    if rep.when == "call" or failed:
        _, prev_ok, notes = _OUTCOMES.get(number, (name, True, []))
        notes = notes + [v for k, v in item.user_properties if k == "note" and v not in notes]
        _OUTCOMES[number] = (name, prev_ok and not failed, notes)


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_OUTCOMES):
        name, ok, notes = _OUTCOMES[number]
        line = f"[ACCEPT] criterion {number:2d} {name}: {'PASS' if ok else 'FAIL'}"
        if notes:
            line += "  (" + "; ".join(notes) + ")"
        terminalreporter.write_line(line)
