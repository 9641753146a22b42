import _acceptance


def pytest_terminal_summary(terminalreporter):
    if not _acceptance.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_acceptance.RESULTS):
        terminalreporter.write_line(_acceptance.RESULTS[number])
