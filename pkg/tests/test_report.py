import json
import math

import pytest

from chdissip.report import Check, DiagnosticsReport


def test_upper_check():
    assert Check.upper("a", 1e-9, 1e-8).passed
    assert not Check.upper("a", 2e-8, 1e-8).passed
    assert not Check.upper("a", math.nan, 1.0).passed


def test_round_trip_through_json():
    rep = DiagnosticsReport([Check.upper("b", 0.5, 1.0, {"t": 1.0}, jumps=1),
                             Check.upper("a", math.inf, 1.0)])
    back = DiagnosticsReport.from_dict(json.loads(json.dumps(rep.to_dict())))
    assert [c.name for c in back] == ["a", "b"]
    assert back["b"].info["jumps"] == 1 and back["b"].location == {"t": 1.0}
    assert not back.passed and [c.name for c in back.failures()] == ["a"]


def test_duplicate_names_rejected():
    rep = DiagnosticsReport([Check.upper("a", 0.0, 1.0)])
    with pytest.raises(ValueError):
        rep.add(Check.upper("a", 0.0, 1.0))


def test_table_lists_every_check():
    rep = DiagnosticsReport([Check.upper("alpha", 0.0, 1.0), Check.upper("beta", 2.0, 1.0)])
    lines = rep.table().splitlines()
    assert len(lines) == 3 and "FAIL" in lines[2] and "PASS" in lines[1]
