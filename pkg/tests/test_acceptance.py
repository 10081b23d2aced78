"""Acceptance criteria at full scale, one test per criterion.

Each test records a pass/fail line (printed in the terminal summary by
conftest) and asserts that every report of the criterion passed.
"""
import pytest

from ssmp_williams import acceptance as acc

SUMMARY = []
_FIRST = {}


def _record(k, reports):
    ok = all(r.passed for r in reports)
    SUMMARY.append(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}")
    SUMMARY.extend("    " + r.line() for r in reports)
    return ok


@pytest.mark.slow
@pytest.mark.parametrize("k", sorted(acc.CRITERIA))
def test_criterion(k):
    reports = acc.CRITERIA[k]("full", 1)
    _FIRST[k] = acc.stable_json(reports)
    failed = [r.line() for r in reports if not r.passed]
    assert _record(k, reports), "\n".join(failed)


@pytest.mark.slow
def test_criterion_11_determinism():
    reports = []
    for k in sorted(acc.CRITERIA):
        first = _FIRST.get(k)
        if first is None:
            first = acc.stable_json(acc.CRITERIA[k]("full", 1))
        again = acc.stable_json(acc.CRITERIA[k]("full", 1))
        reports.append(acc.threshold_report(f"determinism[criterion {k}]", 0.0 if first == again else 1.0,
                                            "identical JSON", 0.0, 0, acc.BASE_SEED + 11))
    failed = [r.line() for r in reports if not r.passed]
    assert _record(11, reports), "\n".join(failed)
