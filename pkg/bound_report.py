"""
Bound Report Generator

Structured records comparing a closed-form bound against a numerically
measured rank or dimension, and the top-level run report the CLI emits as
JSON, plain text or a saved markdown document.
"""

import json
import math
import os
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional

import numpy as np


SIGNIFICANT_DIGITS = 12


def normalize(value: Any) -> Any:
    """
    Convert a value into plain JSON data.

    Floats are rounded to 12 significant digits, non-finite floats become the
    strings "inf", "-inf" and "nan", complex numbers become [re, im] pairs and
    numpy containers become lists.
    """
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        x = float(value)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return float(f"{x:.{SIGNIFICANT_DIGITS}g}")
    if isinstance(value, (complex, np.complexfloating)):
        return [normalize(value.real), normalize(value.imag)]
    if isinstance(value, np.ndarray):
        return [normalize(v) for v in value.tolist()] if value.ndim else normalize(value.item())
    if isinstance(value, dict):
        return {str(k): normalize(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [normalize(v) for v in value]
    if hasattr(value, "to_dict"):
        return normalize(value.to_dict())
    return value


def format_number(value: Any) -> str:
    value = normalize(value)
    if isinstance(value, float):
        return f"{value:.{SIGNIFICANT_DIGITS}g}"
    return str(value)


@dataclass
class BoundReport:
    """
    A closed-form bound next to the measured quantity it constrains.

    relation is ">=" for rank lower bounds and "<=" for dimension upper bounds;
    bound_int is the integral threshold actually compared against.
    """

    name: str
    bound: float
    bound_int: int
    measured: int
    relation: str
    hypotheses: Dict[str, bool] = field(default_factory=dict)
    details: Dict[str, Any] = field(default_factory=dict)
    certificate: Optional[Dict[str, Any]] = None

    @property
    def hypotheses_ok(self) -> bool:
        return all(self.hypotheses.values())

    @property
    def bound_holds(self) -> bool:
        if self.relation == ">=":
            return self.measured >= self.bound_int
        return self.measured <= self.bound_int

    @property
    def passed(self) -> bool:
        return self.hypotheses_ok and self.bound_holds

    def summary(self) -> str:
        return (f"measured {self.measured} {self.relation} bound {self.bound_int} "
                f"(closed form {format_number(self.bound)})")

    def to_dict(self) -> Dict[str, Any]:
        return normalize({
            "name": self.name,
            "bound": self.bound,
            "bound_int": self.bound_int,
            "measured": self.measured,
            "relation": self.relation,
            "hypotheses": self.hypotheses,
            "hypotheses_ok": self.hypotheses_ok,
            "bound_holds": self.bound_holds,
            "passed": self.passed,
            "details": self.details,
            "certificate": self.certificate,
        })


@dataclass
class Verdict:
    name: str
    passed: bool
    detail: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return {"name": self.name, "passed": bool(self.passed), "detail": self.detail}


@dataclass
class Report:
    """Everything a CLI run produces."""

    job: Dict[str, Any]
    verdicts: List[Verdict] = field(default_factory=list)
    bounds: List[BoundReport] = field(default_factory=list)
    certificates: List[Dict[str, Any]] = field(default_factory=list)
    results: Dict[str, Any] = field(default_factory=dict)
    timing: Optional[float] = None

    def add_verdict(self, name: str, passed: bool, detail: str = "") -> Verdict:
        verdict = Verdict(name, bool(passed), detail)
        self.verdicts.append(verdict)
        return verdict

    def add_bound(self, bound: BoundReport) -> None:
        self.bounds.append(bound)
        if bound.certificate is not None:
            self.certificates.append(bound.certificate)
        failed = [name for name, ok in bound.hypotheses.items() if not ok]
        if failed:
            self.add_verdict(f"{bound.name} hypotheses", False, "failed: " + ", ".join(failed))
        else:
            self.add_verdict(f"{bound.name} hypotheses", True)
        self.add_verdict(f"{bound.name} bound", bound.bound_holds, bound.summary())

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    def to_dict(self) -> Dict[str, Any]:
        doc = {
            "job": self.job,
            "passed": self.passed,
            "verdicts": [v.to_dict() for v in self.verdicts],
            "bounds": [b.to_dict() for b in self.bounds],
            "certificates": self.certificates,
            "results": self.results,
        }
        if self.timing is not None:
            doc["timing_seconds"] = self.timing
        return normalize(doc)


def render_json(report: Report) -> str:
    return json.dumps(report.to_dict(), indent=2) + "\n"


def _flatten_items(prefix: str, value: Any, out: List[str], depth: int = 0) -> None:
    if isinstance(value, dict) and depth < 3:
        for key, sub in value.items():
            _flatten_items(f"{prefix}.{key}" if prefix else str(key), sub, out, depth + 1)
    elif isinstance(value, list) and len(value) > 8:
        out.append(f"  {prefix}: [{len(value)} entries, last {format_number(value[-1]) if not isinstance(value[-1], (list, dict)) else '...'}]")
    else:
        text = value if isinstance(value, str) else json.dumps(value)
        out.append(f"  {prefix}: {text}")


def render_text(report: Report) -> str:
    """Plain text form; carries the same rounded numbers as the JSON form."""
    doc = report.to_dict()
    lines = [f"blockrank report: {doc['job'].get('subcommand', '')}",
             f"status: {'PASS' if doc['passed'] else 'FAIL'}",
             "job:"]
    for key, value in doc["job"].items():
        lines.append(f"  {key}: {value if isinstance(value, str) else json.dumps(value)}")
    lines.append("verdicts:")
    for v in doc["verdicts"]:
        mark = "PASS" if v["passed"] else "FAIL"
        lines.append(f"  [{mark}] {v['name']}" + (f": {v['detail']}" if v["detail"] else ""))
    if doc["bounds"]:
        lines.append("bounds:")
        for b in doc["bounds"]:
            lines.append(f"  {b['name']}: measured {b['measured']} {b['relation']} "
                         f"{b['bound_int']} (closed form {format_number(b['bound'])}) "
                         f"-> {'PASS' if b['passed'] else 'FAIL'}")
    if doc["results"]:
        lines.append("results:")
        _flatten_items("", doc["results"], lines)
    if "timing_seconds" in doc:
        lines.append(f"timing_seconds: {format_number(doc['timing_seconds'])}")
    return "\n".join(lines) + "\n"


def render_markdown(report: Report) -> str:
    """Markdown document for the reports directory."""
    doc = report.to_dict()
    status = "PASS" if doc["passed"] else "FAIL"
    md = f"""
# BLOCKRANK ANALYSIS REPORT

**SUBCOMMAND:** {doc['job'].get('subcommand', '')}
**STATUS:** {status}

## 1. JOB

| Setting | Value |
|---------|-------|
"""
    for key, value in doc["job"].items():
        md += f"| {key} | {value} |\n"

    md += "\n## 2. VERDICTS\n\n| Check | Result | Detail |\n|-------|--------|--------|\n"
    for v in doc["verdicts"]:
        md += f"| {v['name']} | {'PASS' if v['passed'] else 'FAIL'} | {v['detail']} |\n"

    if doc["bounds"]:
        md += "\n## 3. BOUNDS VS MEASUREMENTS\n\n| Bound | Measured | Relation | Threshold | Closed form |\n"
        md += "|-------|----------|----------|-----------|-------------|\n"
        for b in doc["bounds"]:
            md += (f"| {b['name']} | {b['measured']} | {b['relation']} | {b['bound_int']} "
                   f"| {format_number(b['bound'])} |\n")

    if doc["results"]:
        md += "\n## 4. RESULTS\n\n```json\n" + json.dumps(doc["results"], indent=2) + "\n```\n"
    return md.lstrip("\n")


def save_report(report: Report, directory: str, filename: Optional[str] = None) -> str:
    """
    Save the markdown form of a report.

    Args:
        report: Report to save
        directory: Target directory (created if missing)
        filename: Optional file name; defaults to <subcommand>_report.md

    Returns:
        Path of the saved file
    """
    os.makedirs(directory, exist_ok=True)
    if not filename:
        filename = f"{report.job.get('subcommand', 'blockrank')}_report.md"
    path = os.path.join(directory, filename)
    with open(path, "w", encoding="utf-8") as f:
        f.write(render_markdown(report))
    return path
