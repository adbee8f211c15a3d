"""Acceptance gate: every criterion runs at its stated tolerance and prints
one pass/fail line (run with -s to see them as they complete)."""

import pytest

from collide1d import acceptance


@pytest.mark.parametrize("criterion", acceptance.ALL_CRITERIA,
                         ids=lambda fn: fn.__name__)
def test_criterion(criterion):
    result = criterion()
    print(result.line())
    assert result.passed, result.line()
