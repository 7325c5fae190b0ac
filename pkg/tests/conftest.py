"""Collects acceptance outcomes and prints one PASS/FAIL line per criterion."""

import re

CRITERIA = {
    1: "transform correctness",
    2: "gradient suite",
    3: "mask semantics",
    4: "loss decomposition",
    5: "frequency loss vs spatial-only training",
    6: "trained model vs bicubic",
    7: "receptive field",
    8: "determinism",
}

_outcomes: dict[int, list[tuple[str, bool, str]]] = {}
_PATTERN = re.compile(r"test_acceptance\.py::.*::test_criterion_(\d+)")


def pytest_runtest_logreport(report):
    m = _PATTERN.search(report.nodeid)
    if not m:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        detail = "; ".join(f"{k}={v}" for k, v in report.user_properties)
        _outcomes.setdefault(int(m.group(1)), []).append(
            (report.nodeid.split("::")[-1], report.outcome == "passed", detail))


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n, title in CRITERIA.items():
        parts = _outcomes.get(n)
        if parts is None:
            tr.write_line(f"NOT RUN criterion {n}: {title}")
            continue
        status = "PASS" if all(ok for _, ok, _ in parts) else "FAIL"
        details = " | ".join(f"{name} {'ok' if ok else 'failed'}" + (f" ({d})" if d else "")
                             for name, ok, d in parts)
        tr.write_line(f"{status} criterion {n}: {title} :: {details}")
