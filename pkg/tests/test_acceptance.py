"""Acceptance criteria, one test per criterion.

Each test records a ``[PASS]``/``[FAIL]`` line; they are printed together at
the end of the pytest run (see ``conftest.py``).  Run this file directly to
get the same lines without pytest.  Tolerances live in
:mod:`ring_analyzer.checks` next to the published values they guard.
"""
import sys

import pytest

from ring_analyzer.checks import CRITERIA, format_result, run_check

ACCEPTANCE_LINES = []


@pytest.mark.parametrize("key", [k for k, *_ in CRITERIA])
def test_criterion(key):
    result = run_check(key)
    line = format_result(result)
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert result.passed, line


if __name__ == "__main__":
    failed = 0
    for key, *_ in CRITERIA:
        r = run_check(key)
        print(format_result(r), flush=True)
        failed += not r.passed
    sys.exit(1 if failed else 0)
