"""
Run orchestration: single solves, sigma sweeps and diagnostics-only reruns.
"""
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from ..errors import ConfigError, ContactSwirlError
from ..io.csv_handler import CSVHandler
from ..io.fields import read_fields, restore_state, write_solution
from ..io.report import write_diagnostics, write_report
from ..io.runlog import RunlogWriter, now_jst, run_label
from .config import RunConfig, build_profile
from .diagnostics import run_diagnostics
from .solver import ContactSolver

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_GATE_FAILED = 2
EXIT_CONFIG = 3
EXIT_STATE = 4
EXIT_DIVERGED = 5

RUN_LOG_ENV = "CONTACT_SWIRL_RUN_LOG_DIR"
SUMMARY_FILE = "sweep_summary.csv"
SUMMARY_COLUMNS = ("sigma_scale", "sigma", "converged", "f_dev_max", "u_dev_max",
                   "error_class")


@dataclass
class RunResult:
    """単一ソルブの結果"""

    run: str
    run_dir: str
    sigma_scale: float
    sigma: float
    converged: bool
    exit_code: int
    error_class: Optional[str] = None
    f_dev_max: Optional[float] = None
    u_dev_max: Optional[float] = None
    wall_time: float = 0.0


def sweep_dir_name(scale: float) -> str:
    return f"sigma_{scale:g}"


class Runner:
    """ソルブ実行オーケストレータ"""

    VERSION = "0.1.0"

    def __init__(self, config: RunConfig, *, config_source: Optional[str] = None,
                 max_workers: Optional[int] = None, verbose: bool = False,
                 run_log_dir: Optional[str] = None):
        self.config = config
        self.config_source = config_source
        self.max_workers = max_workers or config.max_workers
        self.verbose = verbose
        self.out_dir = Path(config.output.out_dir)
        env_dir = os.getenv(RUN_LOG_ENV)
        self.run_log_dir = Path(run_log_dir or env_dir or self.out_dir / "runlog")
        self.csv_handler = CSVHandler()

        self.stats = {
            "total": 0,
            "converged": 0,
            "gate_failed": 0,
            "diverged": 0,
            "failed": 0,
        }
        self.results: List[RunResult] = []

    # Entry points -----------------------------------------------------------

    def run(self) -> int:
        """Sweep if the config lists sigma scales, a single solve otherwise."""
        if self.config.sweep:
            return self.sweep()
        return self.solve()

    def solve(self) -> int:
        return self._execute("solve", [(self.config.profile.scale, self.out_dir)])

    def sweep(self, scales: Optional[Sequence[float]] = None) -> int:
        scales = sorted(set(scales if scales is not None else self.config.sweep))
        if not scales:
            raise ConfigError("sweep: at least one sigma scale factor is required")
        plan = [(s, self.out_dir / sweep_dir_name(s)) for s in scales]
        code = self._execute("sweep", plan)
        self._write_summary()
        return code

    def diagnose(self, run_dir: Optional[str] = None) -> int:
        """Regenerate diagnostics.yaml from a written run directory."""
        target = Path(run_dir) if run_dir else self.out_dir
        try:
            profile = build_profile(self.config)
            stored = read_fields(target, self.csv_handler)
            state = restore_state(stored, profile.background, profile.interface_values())
            solver_config = self.config.to_solver_config()
            diagnostics = run_diagnostics(state, windows=solver_config.windows,
                                          decay_ratio=solver_config.decay_ratio,
                                          flux_gate=solver_config.flux_gate,
                                          quadrature=solver_config.quadrature)
        except ContactSwirlError as e:
            print(f"Error [{e.error_class}]: {e.message}", file=sys.stderr)
            return e.exit_code
        path = write_diagnostics(diagnostics, target)
        if self.verbose:
            print(f"Diagnostics written to: {path}")
        return EXIT_OK if all(diagnostics.gates.values()) else EXIT_GATE_FAILED

    # Execution --------------------------------------------------------------

    def _execute(self, command: str, plan: List) -> int:
        start_time = now_jst()
        runlog = RunlogWriter(self.run_log_dir / f"{run_label(start_time, command)}.md")
        runlog.write_header(start_time, command, self.config_source, len(plan))
        self.stats["total"] = len(plan)

        try:
            if len(plan) == 1 or self.max_workers == 1:
                self.results = [self._solve_one(scale, path) for scale, path in plan]
            else:
                with ThreadPoolExecutor(max_workers=self.max_workers) as executor:
                    futures = [executor.submit(self._solve_one, scale, path)
                               for scale, path in plan]
                    self.results = [future.result() for future in futures]
        except OSError as e:
            print(f"Fatal error: {e}", file=sys.stderr)
            return EXIT_CONFIG

        for result in self.results:
            self._count(result)

        end_time = now_jst()
        runlog.write_summary(self.stats, [
            {"run": r.run, "sigma": r.sigma, "converged": r.converged,
             "error_class": r.error_class, "wall_time": r.wall_time}
            for r in self.results
        ], end_time - start_time)
        runlog.write_artifacts([r.run_dir for r in self.results])
        if not runlog.has_non_empty_summary():
            raise ValueError("Runlog Summary is empty")

        self._print_report()
        return max(r.exit_code for r in self.results)

    def _solve_one(self, scale: float, run_dir: Path) -> RunResult:
        run_dir = Path(run_dir)
        name = run_dir.name or str(run_dir)
        try:
            profile = build_profile(self.config, scale)
            solver = ContactSolver(self.config.to_solver_config(), profile)
        except ContactSwirlError as e:
            logger.error("run %s rejected: %s", name, e.message)
            return RunResult(run=name, run_dir=str(run_dir), sigma_scale=scale, sigma=0.0,
                             converged=False, exit_code=e.exit_code,
                             error_class=e.error_class)

        state, report = solver.solve_full()
        run_dir.mkdir(parents=True, exist_ok=True)
        if state is not None:
            write_solution(state, run_dir, self.csv_handler)
        write_report(report, run_dir)
        if report.diagnostics is not None:
            write_diagnostics(report.diagnostics, run_dir)

        if report.error is not None:
            exit_code = report.error_exit or EXIT_STATE
        elif report.converged:
            exit_code = EXIT_OK
        else:
            exit_code = EXIT_GATE_FAILED

        if self.verbose:
            mark = "✓" if exit_code == EXIT_OK else "✗"
            print(f"  {mark} {name}: sigma={report.sigma:.3e} "
                  f"wall={report.wall_time:.2f}s exit={exit_code}")
        return RunResult(
            run=name, run_dir=str(run_dir), sigma_scale=scale, sigma=report.sigma,
            converged=report.converged, exit_code=exit_code,
            error_class=report.error_class,
            f_dev_max=report.max_deviation.get("f"),
            u_dev_max=report.max_deviation.get("u"),
            wall_time=report.wall_time,
        )

    def _count(self, result: RunResult) -> None:
        if result.exit_code == EXIT_OK:
            self.stats["converged"] += 1
        elif result.exit_code == EXIT_GATE_FAILED:
            self.stats["gate_failed"] += 1
        elif result.exit_code == EXIT_DIVERGED:
            self.stats["diverged"] += 1
        else:
            self.stats["failed"] += 1

    def _write_summary(self) -> Path:
        rows: List[Dict] = [
            {"sigma_scale": r.sigma_scale, "sigma": r.sigma, "converged": r.converged,
             "f_dev_max": r.f_dev_max, "u_dev_max": r.u_dev_max,
             "error_class": r.error_class or ""}
            for r in sorted(self.results, key=lambda r: r.sigma_scale)
        ]
        path = self.out_dir / SUMMARY_FILE
        self.csv_handler.write_rows(rows, path, SUMMARY_COLUMNS)
        return path

    def _print_report(self) -> None:
        print("\n" + "=" * 50)
        print("Solve Report")
        print("=" * 50)
        print(f"Total runs: {self.stats['total']}")
        print(f"Converged: {self.stats['converged']}")
        print(f"Gate failed: {self.stats['gate_failed']}")
        print(f"Diverged: {self.stats['diverged']}")
        print(f"Failed: {self.stats['failed']}")
        for r in self.results:
            deviation = "-" if r.f_dev_max is None else f"{r.f_dev_max:.3e}"
            print(f"  {r.run}: sigma={r.sigma:.3e} max|f-1/2|={deviation} "
                  f"error={r.error_class or '-'}")
        print("=" * 50)


def run_and_write(config: RunConfig, *, config_source: Optional[str] = None,
                  verbose: bool = False) -> int:
    """Execute the config (solve or sweep), write every artifact, return the exit code."""
    return Runner(config, config_source=config_source, verbose=verbose).run()
