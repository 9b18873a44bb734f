"""One pass/fail line per acceptance criterion, with runtime against its limit.

Run with `pytest -s tests/test_acceptance.py` to see the summary lines.
"""
import pytest

from mobile_sampling.battery import RUNTIME_LIMITS, run_criterion
from mobile_sampling.config import CRITERIA, ExperimentConfig

CFG = ExperimentConfig()


@pytest.mark.parametrize("claim_id", CRITERIA)
def test_criterion(claim_id):
    verdict, seconds = run_criterion(claim_id, CFG)
    limit = RUNTIME_LIMITS[claim_id]
    ok = verdict.passed and seconds < limit
    line = (f"{'PASS' if ok else 'FAIL'} {claim_id} margin={verdict.margin:.5g} tol={verdict.tolerance:.3g} "
            f"time={seconds:.1f}s limit={limit:.0f}s {verdict.reason}")
    print("\n" + line.rstrip())
    assert verdict.passed, line
    assert seconds < limit, line
