"""Run manifests, discrepancy ledger rows and on-disk reports."""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import __version__

STATUSES = ("pass", "fail", "report")


@dataclass
class Check:
    name: str
    status: str  # pass / fail / report
    value: float
    tolerance: float | None = None
    detail: str = ""

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ValueError(f"status must be one of {STATUSES}")


def check(name, value, tol, detail="", *, below=True) -> Check:
    """pass when value <= tol (``below``) or value > tol (otherwise); NaN fails."""
    ok = (value <= tol) if below else (value > tol)
    return Check(name, "pass" if ok and not math.isnan(value) else "fail", float(value), tol, detail)


@dataclass
class LedgerEntry:
    formula: str
    printed: str
    derived: str
    residual: str

    def __post_init__(self):
        for k, v in asdict(self).items():
            if v is None or str(v).strip() == "":
                raise ValueError(f"ledger field {k!r} is empty")


@dataclass
class Table:
    header: list
    rows: list


@dataclass
class RunManifest:
    experiment: str
    config: dict
    config_hash: str
    version: str = __version__
    started: str = ""
    duration_s: float = 0.0
    checks: list = field(default_factory=list)
    ledger: list = field(default_factory=list)
    tables: dict = field(default_factory=dict)
    info: dict = field(default_factory=dict)

    def add(self, c: Check):
        if any(x.name == c.name for x in self.checks):
            raise ValueError(f"check {c.name!r} recorded twice")
        self.checks.append(c)
        return c

    @property
    def failed(self) -> list:
        return [c for c in self.checks if c.status == "fail"]

    def to_json(self) -> dict:
        return {
            "experiment": self.experiment,
            "version": self.version,
            "config_hash": self.config_hash,
            "started": self.started,
            "duration_s": round(self.duration_s, 3),
            "config": self.config,
            "checks": [asdict(c) for c in self.checks],
            "ledger": [asdict(e) for e in self.ledger],
            "tables": sorted(self.tables),
            "info": self.info,
        }


def run_dir(manifest: RunManifest, base) -> Path:
    return Path(base) / f"{manifest.experiment}_{manifest.config_hash}"


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def summary_text(m: RunManifest) -> str:
    lines = [f"{m.experiment}  version {m.version}  config {m.config_hash}  {m.duration_s:.1f} s", ""]
    for c in m.checks:
        tol = "" if c.tolerance is None else f"  (tol {c.tolerance:.3g})"
        lines.append(f"[{c.status.upper():6s}] {c.name}: {c.value:.6g}{tol}  {c.detail}".rstrip())
    if m.ledger:
        lines += ["", "Discrepancy ledger:"]
        for e in m.ledger:
            lines.append(f"  {e.formula}: printed {e.printed} | derived {e.derived} | residual {e.residual}")
    for k, v in sorted(m.info.items()):
        lines.append(f"{k}: {v}")
    n_fail = len(m.failed)
    lines += ["", "ALL CHECKS PASSED" if n_fail == 0 else f"{n_fail} CHECK(S) FAILED"]
    return "\n".join(lines) + "\n"


def emit_report(manifest: RunManifest, base) -> Path:
    """Write manifest.json, one CSV per table and summary.txt under ``<base>/<experiment>_<hash>/``.

    Writability is checked before anything is written.
    """
    base = Path(base)
    base.mkdir(parents=True, exist_ok=True)
    if not os.access(base, os.W_OK):
        raise OSError(f"output directory {base} is not writable")
    d = run_dir(manifest, base)
    d.mkdir(exist_ok=True)
    for name, tab in sorted(manifest.tables.items()):
        with open(d / f"{name}.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(tab.header)
            w.writerows([[_fmt(v) for v in row] for row in tab.rows])
    (d / "manifest.json").write_text(json.dumps(manifest.to_json(), indent=2, sort_keys=True) + "\n")
    (d / "summary.txt").write_text(summary_text(manifest))
    return d
