import json
from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st
from mpmath import mp, mpf

from opxlab.report import ResidualReport, decimal, emit_table, merge_reports, render

GOLDEN = Path(__file__).parent / "golden"


def sample_report():
    with mp.workdps(50):
        return ResidualReport("dPI", (1, 2, 3), (mpf(10) ** -40 / 3, mpf(-2) * mpf(10) ** -41, mpf(0)),
                              mpf(10) ** -30, {"family": "FreudQuartic", "certified_digits": 60})


@pytest.mark.parametrize("fmt, name", [("csv", "report.csv"), ("json", "report.json"), ("text", "report.txt")])
def test_golden_files(tmp_path, fmt, name):
    out = emit_table(sample_report(), fmt, tmp_path / name)
    assert Path(out).read_text() == (GOLDEN / name).read_text()


def test_empty_report_has_header_only():
    report = ResidualReport("empty", (), (), mpf(1))
    assert render(report, "csv") == "identity,index,residual,tolerance,verdict\n"
    assert report.passed and report.max_residual == 0


def test_json_round_trip():
    report = sample_report()
    back = ResidualReport.from_dict(json.loads(render(report, "json")))
    assert back == report


def test_verdicts():
    report = sample_report()
    assert report.passed and report.verdict == "pass"
    failing = ResidualReport("x", (0,), (mpf(2),), mpf(1))
    assert not failing.passed and failing.summary().startswith("FAIL")


def test_bad_inputs(tmp_path):
    with pytest.raises(ValueError):
        ResidualReport("x", (0, 1), (mpf(1),), mpf(1))
    with pytest.raises(ValueError):
        render(sample_report(), "xml")


def test_merge_normalises_by_tolerance():
    a = ResidualReport("a", (0,), (mpf(1),), mpf(2))
    b = ResidualReport("b", (0,), (mpf(3),), mpf(1))
    merged = merge_reports("m", [a, b])
    assert merged.indices == ("a[0]", "b[0]")
    assert merged.residuals == (mpf("0.5"), mpf(3)) and not merged.passed


@given(st.integers(-10 ** 30, 10 ** 30), st.integers(-200, 200))
def test_decimal_is_deterministic_and_parsable(man, exp):
    with mp.workdps(60):
        value = mpf(man) * mpf(10) ** exp
        text = decimal(value)
        assert text == decimal(value)
        if value:
            assert abs(mpf(text) - value) <= abs(value) * mpf(10) ** -19
        assert "," not in text and " " not in text
