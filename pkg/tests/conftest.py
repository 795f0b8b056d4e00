import pytest

_ACCEPTANCE = []


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        number, title = mark.args
        _ACCEPTANCE.append((number, title, item.name, rep.passed))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    by_number = {}
    for number, title, name, ok in _ACCEPTANCE:
        by_number.setdefault((number, title), []).append((name, ok))
    for (number, title), results in sorted(by_number.items(), key=lambda kv: str(kv[0][0])):
        ok = all(r for _, r in results)
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {number}. {title}")
        for name, r in results:
            if not r:
                terminalreporter.write_line(f"        failed: {name}")
