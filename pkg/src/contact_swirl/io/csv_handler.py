"""
Deterministic delimited-text I/O.

Floats are written with repr(), the shortest decimal that parses back to the
same double, so a write/read cycle is exact.
"""
import csv
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

from ..errors import ConfigError

PathLike = Union[str, Path]


def format_value(value: Any) -> str:
    if isinstance(value, bool) or value is None:
        return "" if value is None else str(value).lower()
    if isinstance(value, float) or hasattr(value, "dtype"):
        return repr(float(value))
    return str(value)


class CSVHandler:
    """CSV入出力"""

    def load_rows(self, file_path: PathLike,
                  required: Optional[Sequence[str]] = None) -> List[Dict[str, str]]:
        path = Path(file_path)
        if not path.exists():
            raise ConfigError(f"file not found: {path}")
        with open(path, "r", encoding="utf-8", newline="") as f:
            reader = csv.DictReader(f)
            missing = [c for c in (required or []) if c not in (reader.fieldnames or [])]
            if missing:
                raise ConfigError(f"missing columns {missing} in {path}")
            return list(reader)

    def write_rows(self, rows: List[Dict[str, Any]], file_path: PathLike,
                   columns: Optional[Sequence[str]] = None) -> None:
        """Write rows; without explicit columns the header is the sorted key union."""
        path = Path(file_path)
        path.parent.mkdir(parents=True, exist_ok=True)

        if columns is None:
            all_columns = set()
            for row in rows:
                all_columns.update(row.keys())
            columns = sorted(all_columns)

        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                writer.writerow([format_value(row.get(c)) for c in columns])
