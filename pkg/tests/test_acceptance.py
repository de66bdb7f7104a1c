"""Acceptance criteria 1 to 10 at their stated tolerances.

Each test prints one ``PASS``/``FAIL`` line. The Monte Carlo criteria (1, 5,
6, 7) take a few minutes in total. Run directly with ``python tests/test_acceptance.py``
for the bare report.
"""

import sys

import pytest

from occulattice.verify import CRITERIA


@pytest.mark.slow
@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, capsys):
    res = CRITERIA[number]()
    with capsys.disabled():
        print("\n" + res.line())
    assert res.passed, res.summary


if __name__ == "__main__":
    failures = 0
    for number in sorted(CRITERIA):
        res = CRITERIA[number]()
        print(res.line(), flush=True)
        failures += not res.passed
    sys.exit(1 if failures else 0)
