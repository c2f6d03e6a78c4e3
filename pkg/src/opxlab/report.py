"""Residual reports and their deterministic serializations."""
from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from dataclasses import dataclass, field

import mpmath
from mpmath import mp, mpf

OUTPUT_DIGITS = 20


def decimal(value, digits: int = OUTPUT_DIGITS) -> str:
    """Locale-free scientific notation with a fixed number of significant digits."""
    if isinstance(value, mpmath.mpc):
        return f"{decimal(value.real, digits)}{'+' if value.imag >= 0 else '-'}{decimal(abs(value.imag), digits)}j"
    with mp.workdps(max(mp.dps, digits + 10)):
        value = mpf(value)
        if value == 0:
            return "0"
        if not mpmath.isfinite(value):
            return "nan" if mpmath.isnan(value) else ("inf" if value > 0 else "-inf")
        return mpmath.nstr(value, digits, min_fixed=1, max_fixed=0, strip_zeros=False)


@dataclass(eq=False)
class ResidualReport:
    """Per-index residual magnitudes of one identity with a verdict."""

    identity: str
    indices: tuple
    residuals: tuple
    tolerance: object
    notes: dict = field(default_factory=dict)

    def __post_init__(self):
        self.indices = tuple(self.indices)
        self.residuals = tuple(abs(r) for r in self.residuals)
        if len(self.indices) != len(self.residuals):
            raise ValueError("indices and residuals differ in length")

    @property
    def max_residual(self):
        return max(self.residuals) if self.residuals else mpf(0)

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.tolerance

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"

    @property
    def index_range(self):
        return (self.indices[0], self.indices[-1]) if self.indices else None

    def to_dict(self) -> dict:
        return {
            "identity": self.identity,
            "indices": [str(i) for i in self.indices],
            "residuals": [decimal(r) for r in self.residuals],
            "max_residual": decimal(self.max_residual),
            "tolerance": decimal(self.tolerance),
            "verdict": self.verdict,
            "notes": {k: str(v) for k, v in sorted(self.notes.items())},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ResidualReport":
        def idx(s):
            try:
                return int(s)
            except ValueError:
                return s

        # parse with enough digits that re-serialising reproduces the strings
        with mp.workdps(max(mp.dps, OUTPUT_DIGITS + 10)):
            return cls(
                identity=data["identity"],
                indices=tuple(idx(i) for i in data["indices"]),
                residuals=tuple(mpf(r) for r in data["residuals"]),
                tolerance=mpf(data["tolerance"]),
                notes=dict(data.get("notes", {})),
            )

    def __eq__(self, other):
        if not isinstance(other, ResidualReport):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def summary(self) -> str:
        return (f"{self.verdict.upper():4s} {self.identity}: max residual {decimal(self.max_residual, 6)}"
                f" (tolerance {decimal(self.tolerance, 6)})")


def merge_reports(identity: str, reports, notes=None) -> ResidualReport:
    """Concatenate several reports into one, worst tolerance wins per entry."""
    indices, residuals, scaled = [], [], []
    merged_notes = dict(notes or {})
    for rep in reports:
        for i, r in zip(rep.indices, rep.residuals):
            indices.append(f"{rep.identity}[{i}]")
            residuals.append(r)
            scaled.append(r / rep.tolerance if rep.tolerance else (mpf(0) if r == 0 else mpf("inf")))
        for k, v in rep.notes.items():
            merged_notes[f"{rep.identity}.{k}"] = v
    # residuals are normalised by their own tolerance so a single bound of 1 applies
    return ResidualReport(identity, tuple(indices), tuple(scaled), mpf(1), merged_notes)


# -- emitters ---------------------------------------------------------------

def render(report: ResidualReport, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["identity", "index", "residual", "tolerance", "verdict"])
        for i, r in zip(report.indices, report.residuals):
            ok = "pass" if r <= report.tolerance else "fail"
            writer.writerow([report.identity, i, decimal(r), decimal(report.tolerance), ok])
        return buf.getvalue()
    if fmt == "text":
        lines = [report.summary()]
        width = max([len(str(i)) for i in report.indices] + [5])
        lines.append(f"  {'index':>{width}}  residual")
        for i, r in zip(report.indices, report.residuals):
            lines.append(f"  {str(i):>{width}}  {decimal(r, 8)}")
        for k, v in sorted(report.notes.items()):
            lines.append(f"  note {k}: {v}")
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown format {fmt!r}")


def write_atomic(path, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit_table(report: ResidualReport, fmt: str, path) -> str:
    """Write ``report`` to ``path`` in csv, json or text form; returns the path."""
    write_atomic(path, render(report, fmt))
    return str(path)
