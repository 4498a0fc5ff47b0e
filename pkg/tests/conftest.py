_criteria: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion covered by this test")
    config.addinivalue_line("markers", "advisory: hardware-dependent check, reported but not required")


def pytest_runtest_logreport(report):
    m = _markers.get(report.nodeid)
    if m is None:
        return
    n, title, advisory = m
    key = (n, advisory)
    prev = _criteria.get(key, (title, "PASS", []))
    status, notes = prev[1], prev[2]
    if report.when == "call" or report.outcome != "passed":
        if report.skipped:
            status = "SKIP" if status == "PASS" else status
            notes.append(str(report.longrepr[-1]) if isinstance(report.longrepr, tuple) else "skipped")
        elif report.failed:
            status = "FAIL"
    _criteria[key] = (title, status, notes)


_markers: dict = {}


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m is not None:
            _markers[item.nodeid] = (m.args[0], m.args[1], item.get_closest_marker("advisory") is not None)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for (n, advisory), (title, status, notes) in sorted(_criteria.items()):
        tag = " (advisory)" if advisory else ""
        extra = f"  [{notes[0]}]" if status == "SKIP" and notes else ""
        terminalreporter.write_line(f"criterion {n}{tag}: {status}  {title}{extra}")

