import json
import math

import pytest

from deformalg.reports import ResidualReport, SpectrumReport, match_nearest, to_csv, to_json


def test_empty_spectrum_is_valid_json():
    doc = json.loads(to_json(SpectrumReport(computed=[], reference=[])))
    assert doc["computed"] == []
    assert doc["max_dev"] == 0.0


def test_json_sorted_keys_and_17_digits():
    text = to_json({"b": 0.1, "a": [1.0 / 3.0, 2.0], "c": {"z": 1, "y": float("nan")}})
    doc = json.loads(text)
    assert list(doc) == ["a", "b", "c"]
    assert "0.10000000000000001" in text
    assert "0.33333333333333331" in text
    assert doc["a"][1] == 2.0 and isinstance(doc["a"][1], float)
    assert doc["c"]["y"] == "NaN"
    assert float(doc["a"][0]) == 1.0 / 3.0


def test_json_round_trip_exact():
    values = [math.pi, 1e-300, -2.5e17, 0.1 + 0.2]
    assert json.loads(to_json(values)) == values


def test_csv_rows_and_point_column():
    rep = SpectrumReport(computed=[0.0, 1.0], reference=[0.0, 1.0], labels=[0, 1])
    lines = to_csv([("a", rep)]).splitlines()
    assert lines == ["index,computed,reference,deviation", "0,0.0,0.0,0.0", "1,1.0,1.0,0.0"]
    multi = to_csv([("a", rep), ("b", rep)]).splitlines()
    assert multi[0] == "point,index,computed,reference,deviation"
    assert multi[3] == "b,0,0.0,0.0,0.0"


def test_match_nearest_does_not_reuse():
    assert match_nearest([0.0, 0.1, 5.0], [0.0, 0.05]) == [0.0, 0.1]


def test_subset_reference_needs_matched():
    with pytest.raises(ValueError):
        SpectrumReport(computed=[1.0, 2.0], reference=[1.0])


def test_residual_report():
    rep = ResidualReport()
    rep.add("r1", "s1", 1e-9)
    rep.add("r1", "s2", 3e-9)
    rep.add("r2", "s1", 2e-9)
    assert rep.max_residual == 3e-9
    assert rep.by_relation() == {"r1": 3e-9, "r2": 2e-9}
    assert rep.passed(5e-9) and not rep.passed(1e-9)
