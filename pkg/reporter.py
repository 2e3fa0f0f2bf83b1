# reporter.py
from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

import markdown2
import numpy as np
import yaml

import config
from errors import SpinorInputError

logger = logging.getLogger("SpinorMetrology")


def format_value(value: Any) -> str:
    """Text form of one CSV cell: floats with 17 significant digits, bools lower-case."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return format(value, ".17g")
    return str(value)


@dataclass
class CheckResult:
    name: str
    value: float
    reference: float
    passed: bool
    detail: str = ""


class Reporter:
    def __init__(self, output_dir: str = "."):
        self.output_dir = output_dir

    def _path(self, filename: str) -> Path:
        out = Path(self.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        return out / filename

    def write_csv(self, filename: str, columns: Sequence[str], rows: Iterable[Dict[str, Any]]) -> Path:
        path = self._path(filename)
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\r\n")
            writer.writerow(columns)
            for row in rows:
                writer.writerow([format_value(row.get(col)) for col in columns])
        return path

    def write_matrix(self, filename: str, row_axis: np.ndarray, col_axis: np.ndarray,
                     values: np.ndarray, corner: str = "theta\\phi") -> Path:
        """Dense grid: first row holds the column axis, first column the row axis."""
        values = np.asarray(values)
        if values.shape != (len(row_axis), len(col_axis)):
            raise SpinorInputError(
                f"Matrix shape {values.shape} does not match axes ({len(row_axis)}, {len(col_axis)})."
            )
        path = self._path(filename)
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\r\n")
            writer.writerow([corner] + [format_value(x) for x in col_axis])
            for x, row in zip(row_axis, values):
                writer.writerow([format_value(x)] + [format_value(v) for v in row])
        return path

    def write_manifest(self, filename: str, manifest: Dict[str, Any]) -> Path:
        manifest = dict(manifest)
        manifest.setdefault("schema_version", config.MANIFEST_SCHEMA_VERSION)
        manifest.setdefault("library_version", config.LIBRARY_VERSION)
        manifest.setdefault("units", config.UNITS)
        path = self._path(filename)
        path.write_text(json.dumps(manifest, indent=2, sort_keys=True, default=_json_default) + "\n",
                        encoding="utf-8")
        return path

    def write_verify_report(self, checks: List[CheckResult], html: bool = False,
                            date_str: Optional[str] = None) -> List[Path]:
        if not date_str:
            date_str = datetime.now(timezone.utc).strftime("%Y-%m-%d")
        passed = sum(1 for c in checks if c.passed)

        lines: list[str] = []
        lines.append(f"# Verification report ({date_str})")
        lines.append("")
        lines.append(f"- Checks: **{len(checks)}**")
        lines.append(f"- Passed: **{passed}**")
        lines.append(f"- Failed: **{len(checks) - passed}**")
        lines.append("")
        lines.append("| Check | Value | Reference | Status |")
        lines.append("|---|---|---|---|")
        for c in checks:
            status = "PASS" if c.passed else "FAIL"
            lines.append(f"| {c.name} | {format_value(c.value)} | {format_value(c.reference)} | {status} |")
        failures = [c for c in checks if not c.passed and c.detail]
        if failures:
            lines.append("")
            lines.append("## Failures")
            for c in failures:
                lines.append(f"- {c.name}: {c.detail}")

        content = "\n".join(lines) + "\n"
        md_path = self._path("verify_report.md")
        md_path.write_text(content, encoding="utf-8")
        paths = [md_path]
        if html:
            html_body = markdown2.markdown(content, extras=["tables"])
            html_path = self._path("verify_report.html")
            html_path.write_text(html_body, encoding="utf-8")
            paths.append(html_path)
        return paths


def _json_default(obj: Any) -> Any:
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, Path):
        return str(obj)
    if isinstance(obj, datetime):
        return obj.isoformat()
    raise TypeError(f"Object of type {type(obj).__name__} is not JSON serializable")


def load_manifest(path: str) -> Dict[str, Any]:
    """Read a JSON manifest, or a hand-written YAML one (.yaml/.yml)."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise SpinorInputError(f"Cannot read manifest '{path}': {e}") from e
    try:
        if Path(path).suffix.lower() in (".yaml", ".yml"):
            data = yaml.safe_load(text)
        else:
            data = json.loads(text)
    except (yaml.YAMLError, json.JSONDecodeError) as e:
        raise SpinorInputError(f"Manifest '{path}' is not valid JSON/YAML: {e}") from e
    if not isinstance(data, dict):
        raise SpinorInputError(f"Manifest '{path}' must contain a mapping.")
    version = data.get("schema_version")
    if version != config.MANIFEST_SCHEMA_VERSION:
        raise SpinorInputError(
            f"Manifest schema version {version!r} is not supported (expected {config.MANIFEST_SCHEMA_VERSION})."
        )
    if "command" not in data or "argv" not in data:
        raise SpinorInputError(f"Manifest '{path}' lacks 'command' or 'argv'.")
    return data
