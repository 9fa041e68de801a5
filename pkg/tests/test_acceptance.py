"""Acceptance criteria 1-9 (plus the quadrature preflight), one pass/fail line each.

Runs under pytest or directly: ``python tests/test_acceptance.py``.
"""

import pytest

from penalty_ritz.verify import CHECKS, run_check

BY_KEY = {key: (name, fn, budget) for key, name, fn, budget in CHECKS}


@pytest.mark.parametrize("key", [k for k, *_ in CHECKS], ids=lambda k: f"criterion-{k}")
def test_criterion(key, capsys):
    name, fn, budget = BY_KEY[key]
    res = run_check(key, name, fn, budget)
    with capsys.disabled():
        print("\n" + res.line())
    assert res.passed, res.detail
    assert res.seconds < budget, f"criterion {key} took {res.seconds:.1f} s (budget {budget} s)"


if __name__ == "__main__":
    import sys

    failed = 0
    for key, (name, fn, budget) in BY_KEY.items():
        res = run_check(key, name, fn, budget)
        print(res.line())
        failed += not res.passed
    sys.exit(1 if failed else 0)
