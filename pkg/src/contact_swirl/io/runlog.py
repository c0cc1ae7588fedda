"""
Markdown run log with JST timestamps.
"""
from datetime import datetime, timedelta
from pathlib import Path
from typing import Any, Dict, List, Optional

from dateutil import tz

JST = tz.gettz("Asia/Tokyo")


def now_jst() -> datetime:
    return datetime.now(tz=JST)


def run_label(start_time: datetime, command: str) -> str:
    return f"{start_time.strftime('%Y%m%d-%H%M%S-JST')}-{command}"


class RunlogWriter:
    """Runログ出力"""

    def __init__(self, log_path: Path):
        self.log_path = Path(log_path)
        self.content: List[str] = []
        self.log_path.parent.mkdir(parents=True, exist_ok=True)

    def write_header(self, start_time: datetime, command: str,
                     config_source: Optional[str],
                     total_runs: int) -> None:
        self.content.append("# Contact Swirl Solver Run Log")
        self.content.append("")
        self.content.append(f"**Started:** {start_time.isoformat()}")
        self.content.append(f"**Command:** {command}")
        self.content.append(f"**Config:** {config_source or '(defaults)'}")
        self.content.append(f"**Total Runs:** {total_runs}")
        self.content.append("")

    def write_summary(self, stats: Dict[str, int], rows: List[Dict[str, Any]],
                      duration: timedelta) -> None:
        self.content.append("## Summary")
        self.content.append("")
        self.content.append(f"- **Duration:** {duration}")
        for key in ("total", "converged", "gate_failed", "diverged", "failed"):
            label = key.replace("_", " ").title()
            self.content.append(f"- **{label}:** {stats.get(key, 0)}")
        self.content.append("")
        if rows:
            self.content.append("| run | sigma | converged | error | wall time [s] |")
            self.content.append("|-----|-------|-----------|-------|---------------|")
            for row in rows:
                self.content.append(
                    f"| {row['run']} | {row['sigma']:.6g} | {row['converged']} "
                    f"| {row.get('error_class') or '-'} | {row['wall_time']:.3f} |"
                )
            self.content.append("")
        self._flush()

    def write_artifacts(self, artifact_paths: List[str]) -> None:
        if artifact_paths:
            self.content.append("## Artifacts")
            for path in artifact_paths:
                self.content.append(f"- {path}")
            self.content.append("")
        self._flush()

    def has_non_empty_summary(self) -> bool:
        return "## Summary" in self.content

    def _flush(self) -> None:
        with open(self.log_path, "w", encoding="utf-8") as f:
            f.write("\n".join(self.content))
