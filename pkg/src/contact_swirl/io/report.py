"""
Key-value report documents (YAML, sorted keys).
"""
from pathlib import Path
from typing import Any, Dict

import yaml

from ..core.diagnostics import DiagnosticsReport
from ..core.solver import SolveReport
from ..errors import ConfigError
from .csv_handler import PathLike

REPORT_FILE = "report.yaml"
DIAGNOSTICS_FILE = "diagnostics.yaml"


def dump_document(data: Dict[str, Any], path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        yaml.safe_dump(data, f, sort_keys=True, default_flow_style=False,
                       allow_unicode=True)
    return path


def load_document(path: PathLike) -> Dict[str, Any]:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"report not found: {path}")
    with open(path, "r", encoding="utf-8") as f:
        data = yaml.safe_load(f)
    return data or {}


def write_report(report: SolveReport, run_dir: PathLike) -> Path:
    data = report.to_dict()
    data["diagnostics"] = (None if report.diagnostics is None
                           else report.diagnostics.to_dict())
    return dump_document(data, Path(run_dir) / REPORT_FILE)


def write_diagnostics(diagnostics: DiagnosticsReport, run_dir: PathLike) -> Path:
    return dump_document(diagnostics.to_dict(), Path(run_dir) / DIAGNOSTICS_FILE)
