import pytest

CRITERIA = {
    1: "validity sweep, prec <= 12",
    2: "waste bound floor((d+gamma)/2)+2, prec <= 12",
    3: "lower bound gamma+1, all algorithms",
    4: "Min-Mix waste equals d",
    5: "rpris never worse than Min-Mix, d in {7, 8}",
    6: "mean-waste ratios",
    7: "loss fraction against DMRW",
    8: "gadget contracts",
    9: "extender composition laws",
    10: "size law O(d^2)",
    11: "exceptional-converter budget",
}

_results: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def acceptance():
    def record(n, ok, detail=""):
        _results[n] = (bool(ok), detail)
        print(f"ACCEPTANCE {n:2d} {'PASS' if ok else 'FAIL'}  {CRITERIA[n]}: {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n, title in CRITERIA.items():
        ok, detail = _results.get(n, (False, "not run or crashed before reporting"))
        tr.write_line(f"{n:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}")
