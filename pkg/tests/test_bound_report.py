import json
import os

import numpy as np

from bound_report import (
    BoundReport,
    Report,
    format_number,
    normalize,
    render_json,
    render_markdown,
    render_text,
    save_report,
)
from design import WellSpreadMode


def make_bound(measured=3, hypotheses=None):
    return BoundReport(
        name="sg dimension",
        bound=2.999999999999999,
        bound_int=3,
        measured=measured,
        relation="<=",
        hypotheses={"delta_sg": True} if hypotheses is None else hypotheses,
        details={"rank": np.int64(6)},
        certificate={"q": 3, "k": 24, "t": 6},
    )


def test_normalize_rounds_and_converts():
    assert normalize(1 / 3) == 0.333333333333
    assert normalize(float("inf")) == "inf"
    assert normalize(-np.inf) == "-inf"
    assert normalize(float("nan")) == "nan"
    assert normalize(np.float64(2.0)) == 2.0
    assert normalize(np.bool_(True)) is True
    assert normalize(np.array([1 + 2j])) == [[1.0, 2.0]]
    assert normalize((1, np.int32(2))) == [1, 2]
    assert normalize({1: WellSpreadMode.SQUARE}) == {"1": WellSpreadMode.SQUARE.value}


def test_format_number():
    assert format_number(0.1 + 0.2) == "0.3"
    assert format_number(7) == "7"


def test_bound_report_relations():
    upper = make_bound()
    assert upper.bound_holds and upper.passed
    assert not make_bound(measured=4).bound_holds
    lower = BoundReport("rank", 6.6, 7, 6, ">=")
    assert not lower.passed
    broken = make_bound(hypotheses={"delta_sg": False})
    assert broken.bound_holds and not broken.passed
    doc = upper.to_dict()
    assert doc["bound"] == 3.0
    assert doc["details"]["rank"] == 6


def test_add_bound_creates_two_verdicts():
    report = Report(job={"subcommand": "sg"})
    report.add_bound(make_bound(hypotheses={"delta_sg": True, "no_pairs": False}))
    names = [v.name for v in report.verdicts]
    assert names == ["sg dimension hypotheses", "sg dimension bound"]
    assert not report.verdicts[0].passed
    assert "no_pairs" in report.verdicts[0].detail
    assert report.verdicts[1].passed
    assert report.certificates == [{"q": 3, "k": 24, "t": 6}]
    assert not report.passed


def test_timing_only_when_set():
    report = Report(job={"subcommand": "scale"})
    assert "timing_seconds" not in report.to_dict()
    report.timing = 0.25
    assert report.to_dict()["timing_seconds"] == 0.25


def test_empty_report_is_valid_json():
    doc = json.loads(render_json(Report(job={"subcommand": "gen"})))
    assert doc["verdicts"] == []
    assert doc["passed"] is True


def test_text_and_markdown_forms():
    report = Report(job={"subcommand": "sg"})
    report.add_bound(make_bound())
    report.results["delta"] = 1.0
    text = render_text(report)
    lines = text.splitlines()
    assert lines[0] == "blockrank report: sg"
    assert lines[1] == "status: PASS"
    assert "  [PASS] sg dimension bound: measured 3 <= bound 3 (closed form 3)" in lines
    assert "  delta: 1.0" in lines
    md = render_markdown(report)
    assert md.startswith("# BLOCKRANK ANALYSIS REPORT")
    assert "| sg dimension | 3 | <= | 3 | 3 |" in md


def test_save_report(tmp_path):
    report = Report(job={"subcommand": "lines"})
    path = save_report(report, str(tmp_path / "out"))
    assert os.path.basename(path) == "lines_report.md"
    assert open(path).read().startswith("# BLOCKRANK")
    named = save_report(report, str(tmp_path / "out"), "custom.md")
    assert named.endswith("custom.md")
