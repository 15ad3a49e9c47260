"""Deterministic machine-readable reports.

Report bodies are JSON with all rationals rendered as numerator/
denominator strings (floats never enter a verdict); for a fixed config
and seed the body is byte-identical across runs, with the runtime kept
in a separate field excluded from the deterministic body.
"""

from __future__ import annotations

import csv
import json
from fractions import Fraction
from typing import Any, Optional, Sequence

REPORT_VERSION = 1


def frac_str(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def jsonable(value: Any) -> Any:
    """Recursively convert values to exact JSON-safe forms."""
    if isinstance(value, Fraction):
        return frac_str(value)
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, (str, int, bool)) or value is None:
        return value
    if hasattr(value, "__dataclass_fields__"):
        return {f: jsonable(getattr(value, f)) for f in value.__dataclass_fields__}
    return str(value)


def build_report(command: str, inputs: dict, results: Any,
                 findings: Sequence[str], runtime: Optional[float] = None) -> dict:
    report = {
        "version": REPORT_VERSION,
        "command": command,
        "inputs": jsonable(inputs),
        "results": jsonable(results),
        "findings": list(findings),
    }
    if runtime is not None:
        report["runtime_seconds"] = runtime
    return report


def report_body(report: dict) -> str:
    """The deterministic body: everything except the runtime."""
    body = {k: v for k, v in report.items() if k != "runtime_seconds"}
    return json.dumps(body, sort_keys=True, separators=(",", ":"))


def report_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2)


def write_csv(path: str, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([frac_str(v) if isinstance(v, Fraction) else v
                             for v in row])
