"""Comparison reports and deterministic CSV / JSON writers."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__


def fmt(x) -> str:
    """Shortest round-trip text for a number; blank for None."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_csv(path, header: list[str], rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else fmt(v) for v in row])
    return path


@dataclass
class Check:
    name: str
    value: float
    tolerance: float
    comparator: str  # "<", "<=", ">", ">="
    note: str = ""

    @property
    def passed(self) -> bool:
        v, t = self.value, self.tolerance
        if v is None or (isinstance(v, float) and math.isnan(v)):
            return False
        return bool({"<": v < t, "<=": v <= t, ">": v > t, ">=": v >= t}[self.comparator])


@dataclass
class ComparisonRow:
    coordinate: str
    simulated: float
    se: float | None
    theory: float
    deviation: float | None = None  # in SE units when se is known

    def __post_init__(self):
        if self.deviation is None and self.se not in (None, 0) and np.isfinite(self.se):
            self.deviation = abs(self.simulated - self.theory) / self.se


@dataclass
class ComparisonReport:
    experiment: str
    seed: int
    config_hash: str
    config: dict
    rows: list[ComparisonRow] = field(default_factory=list)
    checks: list[Check] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    files: list[str] = field(default_factory=list)
    extra: dict = field(default_factory=dict)
    wall_time: float = 0.0
    version: str = __version__

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(c.passed for c in self.checks)

    def summary(self) -> dict:
        devs = [r.deviation for r in self.rows if r.deviation is not None]
        return {
            "experiment": self.experiment,
            "passed": self.passed,
            "seed": self.seed,
            "config_hash": self.config_hash,
            "config": self.config,
            "version": self.version,
            "checks": [
                {"name": c.name, "value": _jsonable(c.value), "tolerance": c.tolerance, "comparator": c.comparator, "passed": c.passed, "note": c.note}
                for c in self.checks
            ],
            "max_abs_deviation_se": max(devs) if devs else None,
            "rows": len(self.rows),
            "warnings": self.warnings,
            "files": sorted(self.files),
            "extra": {k: _jsonable(v) for k, v in self.extra.items()},
            "wall_time_s": round(self.wall_time, 3),
        }

    def text(self) -> str:
        lines = [
            f"experiment   {self.experiment}",
            f"status       {'PASS' if self.passed else 'FAIL'}",
            f"seed         {self.seed}",
            f"config hash  {self.config_hash}",
            f"version      {self.version}",
            "config       " + " ".join(f"{k}={v}" for k, v in sorted(self.config.items())),
            "",
            "checks",
        ]
        for c in self.checks:
            lines.append(f"  [{'pass' if c.passed else 'FAIL'}] {c.name}: {c.value!r} {c.comparator} {c.tolerance!r}" + (f"  ({c.note})" if c.note else ""))
        if self.rows:
            lines += ["", "comparison rows", f"  {'coordinate':<28}{'simulated':>16}{'se':>14}{'theory':>16}{'dev/se':>10}"]
            for r in self.rows:
                se = "" if r.se is None else f"{r.se:.3e}"
                dev = "" if r.deviation is None else f"{r.deviation:.2f}"
                lines.append(f"  {r.coordinate:<28}{r.simulated:>16.6g}{se:>14}{r.theory:>16.6g}{dev:>10}")
        if self.warnings:
            lines += ["", "warnings"] + [f"  {w}" for w in self.warnings]
        if self.files:
            lines += ["", "files"] + [f"  {f}" for f in sorted(self.files)]
        return "\n".join(lines) + "\n"

    def write(self, out_dir) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        self.files += ["summary.json", "report.txt"]
        (out / "summary.json").write_text(json.dumps(self.summary(), sort_keys=True, indent=2) + "\n", encoding="utf-8")
        (out / "report.txt").write_text(self.text(), encoding="utf-8")


def _jsonable(v):
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else repr(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    return v
