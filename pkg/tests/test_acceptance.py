"""The ten acceptance criteria at their stated tolerances; one pass/fail line each."""

import pytest

from skewlab.acceptance import CRITERIA, run_criterion

pytestmark = pytest.mark.slow


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, ws, capsys):
    res = run_criterion(number, ws)
    with capsys.disabled():
        print(f"\n{res.line()}  ({res.runtime:.2f} s)  {res.measured}")
    assert res.passed, res.measured


def test_quick_verify_under_a_minute(tmp_path):
    import time

    from skewlab.cli import main

    t0 = time.perf_counter()
    code = main(["verify", "--quick", "--out", str(tmp_path)])
    elapsed = time.perf_counter() - t0
    assert code == 0
    assert elapsed < 60
    assert (tmp_path / "verify.json").exists()
