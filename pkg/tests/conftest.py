import pytest

# filled by tests/test_acceptance.py: criterion id -> (passed, detail)
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[cid]
        terminalreporter.write_line(f"criterion {cid:>2}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def record_criterion():
    def record(cid: int, ok: bool, detail: str) -> bool:
        ACCEPTANCE[cid] = (bool(ok), detail)
        print(f"criterion {cid}: {'PASS' if ok else 'FAIL'}  {detail}")
        return bool(ok)
    return record
