"""
I/O処理モジュール
"""

from .csv_handler import CSVHandler
from .fields import read_fields, restore_state, write_solution
from .report import write_diagnostics, write_report
from .runlog import RunlogWriter

__all__ = [
    "CSVHandler",
    "RunlogWriter",
    "read_fields",
    "restore_state",
    "write_diagnostics",
    "write_report",
    "write_solution",
]
