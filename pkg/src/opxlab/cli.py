"""Configuration-driven batch front end.

A run is described by a TOML file (every key optional)::

    precision = 120            # digits, at least 40
    N = 15                     # largest degree, at least 5
    checks = ["dp", "cp"]      # names from opxlab.suite.CHECKS
    families = ["FreudQuartic"]
    out = "run"
    jobs = 1

    [grid]
    points = 5                 # odd, at least 5
    spacing = "auto"           # or a decimal string

    [flow]
    start = "0.2"
    end = "0.7"
    target = 8
    step = "0.05"
    buffer = 10
    method = "taylor"          # or "rk4"

    [[weight]]
    family = "FreudQuartic"
    t = "0.3"

Parameter values are decimal strings so that no binary float touches a
high-precision input.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from mpmath import mp

from .direct import recurrence_coefficients, verblunsky_coefficients
from .errors import ConfigError, OpxError
from .flows import MIN_BUFFER, flow_trajectory, trajectory_csv
from .numerics import default_digits, to_mpf
from .report import decimal, write_atomic
from .suite import CHECKS, CRITERION, DEFAULT_POINTS, TITLES, SuiteSettings, run_checks
from .weights import Family, WeightSpec, moment_table

MIN_DIGITS = 40
MIN_N = 5
MIN_POINTS = 5
OUTPUT_DIGITS = 30

# fixed interpretive choices; the per-run resolutions are added alongside
DECISIONS = {
    "bce_r0": "r_0 = 0 (B_0 vanishes identically); later r_n by the quadratic with the product-equation branch rule",
    "charlier_pv_variable": "x_n = a_n^2 and y = 1 - a/x_n",
    "toda_time": "JacobiToda flows in s = -t; lattice families in log a; others in t",
    "flow_integrator": "fixed-step Taylor series (order 30) with step-halving acceptance; RK4 available",
    "flow_truncation": "buffer of extra sites doubled until the watched sites move less than the tolerance",
    "meixner_pv": "y(a_0) found by shooting; the sign-change root with the smallest stencil residual is kept",
    "modified_laguerre_pq": "(p_n, q_n) system omitted; only (x_n, y_n) is checked",
}


def parse_family(name: str) -> Family:
    """Accept the family value ("FreudQuartic") or member name ("freud"), any case."""
    key = name.strip().lower()
    for fam in Family:
        if key in (fam.value.lower(), fam.name.lower()):
            return fam
    raise ConfigError(f"unknown family {name!r}; choose from {', '.join(f.value for f in Family)}")


@dataclass(frozen=True)
class RunConfig:
    digits: int = field(default_factory=default_digits)
    N: int = 15
    checks: tuple | None = None  # None: the command's default checks
    families: tuple = ()
    weights: tuple = ()
    grid_points: int = 5
    spacing: str | None = None
    flow_start: str = "0.2"
    flow_end: str = "0.7"
    flow_target: int = 8
    flow_step: str = "0.05"
    flow_buffer: int = 10
    flow_method: str = "taylor"
    out: str = "opxlab-run"
    jobs: int = 1

    def validate(self) -> "RunConfig":
        if not isinstance(self.digits, int) or self.digits < MIN_DIGITS:
            raise ConfigError(f"must be an integer >= {MIN_DIGITS}, got {self.digits!r}", "precision")
        if not isinstance(self.N, int) or self.N < MIN_N:
            raise ConfigError(f"must be an integer >= {MIN_N}, got {self.N!r}", "N")
        if not isinstance(self.grid_points, int) or self.grid_points < MIN_POINTS or self.grid_points % 2 == 0:
            raise ConfigError(f"must be an odd integer >= {MIN_POINTS}, got {self.grid_points!r}", "grid.points")
        for i, name in enumerate(self.checks or ()):
            if name not in CHECKS:
                raise ConfigError(f"unknown check {name!r}; choose from {', '.join(CHECKS)}", f"checks[{i}]")
        if self.flow_method not in ("taylor", "rk4"):
            raise ConfigError(f"must be 'taylor' or 'rk4', got {self.flow_method!r}", "flow.method")
        if not isinstance(self.flow_buffer, int) or self.flow_buffer < MIN_BUFFER:
            raise ConfigError(f"must be an integer >= {MIN_BUFFER}", "flow.buffer")
        if not isinstance(self.flow_target, int) or not 0 <= self.flow_target:
            raise ConfigError("must be a non-negative integer", "flow.target")
        if not isinstance(self.jobs, int) or self.jobs < 1:
            raise ConfigError("must be a positive integer", "jobs")
        for path, value in (("flow.start", self.flow_start), ("flow.end", self.flow_end),
                            ("flow.step", self.flow_step), ("grid.spacing", self.spacing)):
            if value is not None:
                _check_decimal(value, path)
        return self

    def settings(self) -> SuiteSettings:
        return SuiteSettings(
            digits=self.digits, N=self.N, points=self.grid_points, spacing=self.spacing,
            specs=self.weights, families=self.families, flow_start=self.flow_start, flow_end=self.flow_end,
            flow_target=self.flow_target, flow_step=self.flow_step, flow_buffer=self.flow_buffer,
            flow_method=self.flow_method)

    def specs(self) -> list:
        """Weights the run covers: explicit weights, else the defaults of the selected families."""
        if self.weights:
            chosen = [w for w in self.weights if not self.families or w.family in self.families]
        else:
            chosen = [DEFAULT_POINTS[f] for f in (self.families or tuple(Family))]
        return chosen

    def to_dict(self) -> dict:
        return {
            "precision": self.digits,
            "N": self.N,
            "checks": None if self.checks is None else list(self.checks),
            "families": [f.value for f in self.families],
            "weights": [{"family": w.family.value, **w.params} for w in self.weights],
            "grid": {"points": self.grid_points, "spacing": self.spacing or "auto"},
            "flow": {"start": self.flow_start, "end": self.flow_end, "target": self.flow_target,
                     "step": self.flow_step, "buffer": self.flow_buffer, "method": self.flow_method},
        }


def _check_decimal(value, path):
    if isinstance(value, float):
        raise ConfigError("give numbers as decimal strings, not floats", path)
    try:
        to_mpf(str(value))
    except (ValueError, TypeError):
        raise ConfigError(f"not a decimal number: {value!r}", path) from None


_TOP_KEYS = {"precision", "N", "checks", "families", "out", "jobs", "grid", "flow", "weight"}
_GRID_KEYS = {"points", "spacing"}
_FLOW_KEYS = {"start", "end", "target", "step", "buffer", "method"}


def _reject_unknown(table: dict, allowed: set, prefix: str):
    for key in table:
        if key not in allowed:
            raise ConfigError("unknown key", f"{prefix}{key}")


def config_from_dict(data: dict) -> RunConfig:
    """Build and validate a RunConfig from parsed TOML."""
    _reject_unknown(data, _TOP_KEYS, "")
    kw = {}
    if "precision" in data:
        kw["digits"] = data["precision"]
    for key in ("N", "out", "jobs"):
        if key in data:
            kw[key] = data[key]
    if "checks" in data:
        if not isinstance(data["checks"], list):
            raise ConfigError("must be a list of check names", "checks")
        kw["checks"] = tuple(data["checks"])
    if "families" in data:
        fams = []
        for i, name in enumerate(data["families"]):
            try:
                fams.append(parse_family(str(name)))
            except ConfigError as exc:
                raise ConfigError(str(exc), f"families[{i}]") from None
        kw["families"] = tuple(fams)
    grid = data.get("grid", {})
    _reject_unknown(grid, _GRID_KEYS, "grid.")
    if "points" in grid:
        kw["grid_points"] = grid["points"]
    if grid.get("spacing", "auto") != "auto":
        kw["spacing"] = str(grid["spacing"]) if not isinstance(grid["spacing"], float) else grid["spacing"]
    flow = data.get("flow", {})
    _reject_unknown(flow, _FLOW_KEYS, "flow.")
    for key in _FLOW_KEYS:
        if key in flow:
            kw[f"flow_{key}"] = flow[key]
    weights = []
    for i, block in enumerate(data.get("weight", [])):
        path = f"weight[{i}]"
        if "family" not in block:
            raise ConfigError("missing key", f"{path}.family")
        try:
            fam = parse_family(str(block["family"]))
        except ConfigError as exc:
            raise ConfigError(str(exc), f"{path}.family") from None
        params = {k: v for k, v in block.items() if k != "family"}
        for k, v in params.items():
            _check_decimal(v, f"{path}.{k}")
        try:
            spec = WeightSpec(fam, {k: str(v) for k, v in params.items()})
            with mp.workdps(60):
                spec.validate()
        except (ValueError, OpxError) as exc:
            raise ConfigError(str(exc), path) from None
        weights.append(spec)
    kw["weights"] = tuple(weights)
    for key in ("flow_start", "flow_end", "flow_step"):
        if key in kw and not isinstance(kw[key], float):
            kw[key] = str(kw[key])
    return RunConfig(**kw).validate()


def load_config(path) -> RunConfig:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", str(path)) from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML: {exc}", str(path)) from None
    return config_from_dict(data)


# -- artifacts ----------------------------------------------------------------

def residuals_csv(result) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["check", "identity", "family", "index", "residual", "tolerance", "verdict"])
    for rep in result.reports:
        family = rep.notes.get("family", "")
        for i, r in zip(rep.indices, rep.residuals):
            w.writerow([result.name, rep.identity, family, i, decimal(r), decimal(rep.tolerance),
                        "pass" if r <= rep.tolerance else "fail"])
    return buf.getvalue()


def coefficients_csv(entries) -> str:
    """Long format (family, n, quantity, value) for recurrence and Verblunsky data."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["family", "n", "quantity", "value"])
    for spec, data in entries:
        with mp.workdps(data.precision):
            if spec.family is Family.CIRCLE:
                rows = [("alpha", data.alpha), ("kappa", data.kappa)]
            else:
                rows = [("a_sq", data.a_sq), ("b", data.b), ("gamma", data.gamma)]
            for quantity, values in rows:
                for n, v in enumerate(values):
                    w.writerow([spec.family.value, n, quantity, decimal(v, OUTPUT_DIGITS)])
    return buf.getvalue()


def moments_csv(tables) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["family", "k", "moment", "certified_digits"])
    for table in tables:
        with mp.workdps(table.precision):
            for k, m in enumerate(table.entries):
                w.writerow([table.spec.family.value, k, decimal(m, OUTPUT_DIGITS), table.certified_digits])
    return buf.getvalue()


@dataclass
class RunManifest:
    command: str
    config: dict
    certified_digits: dict = field(default_factory=dict)
    resolutions: dict = field(default_factory=dict)
    verdicts: list = field(default_factory=list)
    checks: list = field(default_factory=list)
    artifacts: list = field(default_factory=list)
    timing: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(v["verdict"] == "pass" for v in self.verdicts)

    @property
    def exit_code(self) -> int:
        return 0 if self.passed else 1

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "config": self.config,
            "decisions": dict(sorted(DECISIONS.items())),
            "resolutions": {k: self.resolutions[k] for k in sorted(self.resolutions)},
            "certified_digits": {k: self.certified_digits[k] for k in sorted(self.certified_digits)},
            "verdicts": self.verdicts,
            "all_passed": self.passed,
            "checks": self.checks,
            "artifacts": sorted(self.artifacts),
            # wall-clock data lives apart so the rest is byte-reproducible
            "timing": self.timing,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False) + "\n"


def _write(out: Path, name: str, text: str, manifest: RunManifest):
    write_atomic(out / name, text)
    manifest.artifacts.append(name)


def _coefficient_entries(config: RunConfig) -> list:
    entries = []
    for spec in config.specs():
        if spec.family is Family.CIRCLE:
            entries.append((spec, verblunsky_coefficients(spec, config.N, config.digits)))
        else:
            entries.append((spec, recurrence_coefficients(spec, config.N, config.digits)))
    return entries


def _trajectory(config: RunConfig, result) -> str:
    """Re-run the first flow of a flow check with its accepted buffer and export every step."""
    rep = result.reports[0]
    spec = config.settings().spec_for(parse_family(rep.notes["family"]))
    spec = spec.with_param(spec.deformation, config.flow_start)
    states = flow_trajectory(spec, config.flow_target, int(rep.notes["buffer"]), config.flow_end, config.digits,
                             config.flow_step, config.flow_method)
    return trajectory_csv(states)


# -- pipeline -----------------------------------------------------------------

COMMAND_CHECKS = {
    "check-dp": ("dp",),
    "check-cp": ("cp",),
    "check-lax": ("lax",),
    "flow": ("flow",),
    "suite": CHECKS,
}


def run_pipeline(config: RunConfig, command: str = "suite") -> RunManifest:
    """Run the stages ``command`` needs, write artifacts under ``config.out``
    and return the manifest (also written as manifest.json)."""
    out = Path(config.out)
    manifest = RunManifest(command, config.to_dict())
    started = time.perf_counter()
    if command == "moments":
        tables = [moment_table(spec, config.N, config.digits) for spec in config.specs()]
        manifest.certified_digits = {t.spec.family.value: t.certified_digits for t in tables}
        _write(out, "moments.csv", moments_csv(tables), manifest)
    elif command in ("recurrence", "verblunsky"):
        wanted = [s for s in config.specs() if (s.family is Family.CIRCLE) == (command == "verblunsky")]
        entries = _coefficient_entries(replace(config, weights=tuple(wanted), families=tuple(s.family for s in wanted)))
        manifest.certified_digits = {s.family.value: d.certified_digits for s, d in entries}
        _write(out, "coefficients.csv", coefficients_csv(entries), manifest)
    else:
        names = COMMAND_CHECKS[command] if config.checks is None else config.checks
        if command != "suite":
            names = tuple(n for n in names if n in COMMAND_CHECKS[command])
        results = run_checks(names, config.settings(), jobs=config.jobs) if names else []
        for res in results:
            manifest.checks.append(res.to_dict())
            manifest.verdicts.append({"check": res.name, "criterion": CRITERION[res.name],
                                      "title": TITLES[res.name], "verdict": res.verdict})
            manifest.resolutions.update(res.resolutions)
            for fam, digits in res.certified.items():
                manifest.certified_digits[fam] = min(digits, manifest.certified_digits.get(fam, digits))
            _write(out, f"residuals_{res.name}.csv", residuals_csv(res), manifest)
            if res.name == "flow" and res.reports:
                _write(out, "trajectory.csv", _trajectory(config, res), manifest)
        if command == "suite" and results:
            _write(out, "coefficients.csv", coefficients_csv(_coefficient_entries(config)), manifest)
    manifest.timing = {"total_seconds": round(time.perf_counter() - started, 3)}
    manifest.artifacts.append("manifest.json")
    write_atomic(out / "manifest.json", manifest.to_json())
    return manifest


def report_text(manifest: dict) -> str:
    lines = [f"command: {manifest['command']}  precision: {manifest['config']['precision']}"
             f"  N: {manifest['config']['N']}"]
    for v in manifest["verdicts"]:
        lines.append(f"  [{v['criterion']}] {v['verdict'].upper():4s} {v['check']:<12s} {v['title']}")
    for check in manifest["checks"]:
        for rep in check["reports"]:
            if rep["verdict"] != "pass":
                lines.append(f"      failed: {rep['identity']} max {rep['max_residual']} > {rep['tolerance']}")
    for key, res in manifest["resolutions"].items():
        lines.append(f"  resolution {key}: {res.get('reading')} ({res.get('resolution')})")
    lines.append("all checks passed" if manifest["all_passed"] else "some checks failed")
    return "\n".join(lines) + "\n"


# -- command line -------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="opxlab", description="High-precision checks of orthogonal "
                                     "polynomial recurrences, lattice flows and Painleve equations.")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "moments": "compute moment tables",
        "recurrence": "recurrence coefficients of the real-line families",
        "verblunsky": "Verblunsky coefficients of the circle family",
        "flow": "integrate lattice flows against the moment pipeline",
        "check-dp": "discrete Painleve residuals",
        "check-cp": "continuous Painleve residuals",
        "check-lax": "Lax-pair residuals",
        "suite": "run the acceptance battery",
        "report": "summarise a finished run",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--out", help="output directory (report: directory holding manifest.json)")
        if name == "report":
            continue
        p.add_argument("--config", help="TOML run configuration")
        p.add_argument("--precision", type=int, help="decimal digits (default 120 or $OPXLAB_PRECISION)")
        p.add_argument("--check", action="append", dest="checks", choices=CHECKS, help="check to run (repeatable)")
        p.add_argument("--family", action="append", dest="families", help="restrict to a family (repeatable)")
        p.add_argument("--jobs", type=int, help="parallel worker processes")
    return parser


def resolve_config(args) -> RunConfig:
    config = load_config(args.config) if args.config else RunConfig()
    changes = {}
    if args.precision is not None:
        changes["digits"] = args.precision
    if args.checks:
        changes["checks"] = tuple(args.checks)
    if args.families:
        changes["families"] = tuple(parse_family(f) for f in args.families)
    if args.jobs is not None:
        changes["jobs"] = args.jobs
    if args.out:
        changes["out"] = args.out
    return replace(config, **changes).validate()


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "report":
            path = Path(args.out or ".") / "manifest.json"
            try:
                manifest = json.loads(path.read_text(encoding="utf-8"))
            except OSError as exc:
                raise ConfigError(f"cannot read manifest: {exc}", str(path)) from None
            sys.stdout.write(report_text(manifest))
            return 0 if manifest["all_passed"] else 1
        config = resolve_config(args)
        manifest = run_pipeline(config, args.command)
    except ConfigError as exc:
        print(f"opxlab: configuration error: {exc}", file=sys.stderr)
        return 2
    except (OpxError, ArithmeticError, ValueError, KeyError) as exc:
        print(f"opxlab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    sys.stdout.write(report_text(manifest.to_dict()))
    return manifest.exit_code


if __name__ == "__main__":
    sys.exit(main())
