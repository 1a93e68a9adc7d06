"""One test per acceptance criterion, each printing a PASS/FAIL line.

Criteria 10 and 11 are split: the sub-checks expected to hold are asserted
together, and the moment-4 and density-trend sub-checks get their own tests.
"""

import pytest

from apmoments.acceptance import CRITERIA

from conftest import ACCEPTANCE_LINES

_results = {}

UNATTAINABLE = {10: ("nu=4 moment within 30%",), 11: ("density decreasing",)}


def result(ctx, number):
    if number not in _results:
        r = CRITERIA[number](ctx)
        _results[number] = r
        ACCEPTANCE_LINES.append(r.line())
        print(r.line())
    return _results[number]


def failed(r, names=None):
    return [c for c in r.checks if not c.passed and (names is None or c.name in names)]


@pytest.mark.slow
@pytest.mark.parametrize("number", range(1, 12))
def test_criterion(acceptance_ctx, number):
    r = result(acceptance_ctx, number)
    skip = UNATTAINABLE.get(number, ())
    bad = [c for c in failed(r) if c.name not in skip]
    assert not bad, "; ".join(f"{c.name}: {c.value} vs {c.threshold}" for c in bad)


@pytest.mark.slow
def test_criterion_10_fourth_moment(acceptance_ctx):
    bad = failed(result(acceptance_ctx, 10), UNATTAINABLE[10])
    assert not bad, f"{bad[0].name}: ratio {bad[0].value}" if bad else ""


@pytest.mark.slow
def test_criterion_11_density_trend(acceptance_ctx):
    bad = failed(result(acceptance_ctx, 11), UNATTAINABLE[11])
    assert not bad, f"{bad[0].name}: {bad[0].value}" if bad else ""
