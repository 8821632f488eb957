"""Shared pytest plumbing: collected acceptance verdicts are printed
as one block after the normal test summary."""

_ACCEPTANCE = []


def record_acceptance(number, name, passed, detail=""):
    _ACCEPTANCE.append((number, name, bool(passed), detail))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number, name, passed, detail in sorted(_ACCEPTANCE):
        line = f"ACCEPTANCE {number} {name}: {'PASS' if passed else 'FAIL'}"
        if detail:
            line += f"  [{detail}]"
        terminalreporter.write_line(line)
