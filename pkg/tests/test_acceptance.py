"""Every acceptance criterion at its stated tolerance; one pass/fail line each."""

import pytest

from belcal.acceptance import ROWS, run_row

from .conftest import ACCEPTANCE_LINES


@pytest.mark.parametrize("number", [n for n, _, _ in ROWS], ids=[f"criterion{n:02d}" for n, _, _ in ROWS])
def test_criterion(number):
    row = run_row(number)
    ACCEPTANCE_LINES.append(row.line())
    print(row.line())
    for c in row.checks:
        print("    " + str(c))
    assert row.error is None, row.error
    failed = [str(c) for c in row.checks if not c.ok]
    assert not failed, "\n".join(failed)
