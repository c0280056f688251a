"""
GB2D - Pipeline Engine

Runs synthesize -> solve -> localize -> recover -> certify for one scenario
and N-sweeps over paired seeds, and writes the result files. Every file
carries the resolved configuration (reproducibility header); wall-clock
times are logged and shown on the console but never written, so reruns with
the same configuration produce identical files.
"""

import csv
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from config import ExperimentConfig, GenConfig
from constants import Defaults
from core_model import Scenario, ValidationReport, validate_scenario
from localize import (
    DelayEstimates,
    DualPolynomialSet,
    dual_atomic_norm,
    localize_all,
    write_config_line,
    write_curve_csv,
    write_support_csv,
)
from logger_utils import get_logger
from operators import MeasurementModel
from recover import CertificateReport, RecoveryResult, certify, recover_all
from scenario import generate_scenario, save_scenario, synthesize_measurements
from sdp import DualSolution, assemble_dual_sdp, save_solution, solve


logger = get_logger(__name__)


@dataclass
class RunRecord:
    """Everything produced by one pipeline run"""
    scenario: Scenario
    validation: ValidationReport
    y: np.ndarray
    solution: DualSolution
    polys: DualPolynomialSet
    estimates: DelayEstimates
    recovery: RecoveryResult
    certificate: CertificateReport
    dual_norms: List[float]
    wall_time: float = 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            'seed': self.scenario.seed,
            'validation': self.validation.to_dict(),
            'solver': {
                'status': self.solution.status.value,
                'iterations': self.solution.iterations,
                'objective': self.solution.objective,
                'residuals': {
                    'primal': self.solution.primal_residual,
                    'dual': self.solution.dual_residual,
                },
                'diagnostics': self.solution.diagnostics,
                'dual_norms': self.dual_norms,
            },
            'estimates': self.estimates.to_dict(),
            'recovery': self.recovery.to_dict(),
            'certificate': self.certificate.to_dict(),
        }


@dataclass
class SweepRow:
    """One repetition of a sweep; error is set when the repetition failed"""
    n_samples: int
    repetition: int
    seed: int
    status: str
    mse: Optional[float] = None
    mean_delay_error: Optional[float] = None
    success: bool = False
    certified: bool = False
    error: Optional[str] = None
    wall_time: float = 0.0


@dataclass
class SweepSummary:
    """Aggregate row of a sweep (one per N)"""
    n_samples: int
    mse_mean: float
    mse_median: float
    success_rate: float
    delay_err_mean: float
    rows: List[SweepRow] = field(default_factory=list)


class Gb2dPipeline:
    """
    Experiment engine

    @param config - Fully resolved experiment configuration

    @example
    pipeline = Gb2dPipeline(build_experiment_config(preset='fig2'))
    record = pipeline.run_pipeline()
    """

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.out_dir = Path(config.out_dir)
        logger.info(
            f"Initialized pipeline: preset={config.preset or '-'}, N={config.gen.n_samples}, "
            f"K={config.gen.user_count}, out_dir={self.out_dir}"
        )

    def header(self) -> Dict[str, Any]:
        """Reproducibility header written into every output file"""
        return self.config.to_dict()

    # ========================================
    # Single runs
    # ========================================

    def generate(self, gen: Optional[GenConfig] = None) -> Tuple[Scenario, ValidationReport]:
        scenario = generate_scenario(gen or self.config.gen)
        return scenario, validate_scenario(scenario)

    def solve_scenario(self, scenario: Scenario, warm_start: Optional[DualSolution] = None):
        """Synthesize and solve; returns (model, y, solution)"""
        model = MeasurementModel.from_scenario(scenario)
        y = synthesize_measurements(scenario)
        problem = assemble_dual_sdp(model, y, collapse=self.config.solver.collapse_common_codebook)
        solution = solve(problem, self.config.solver, warm_start)
        return model, y, solution

    def run_once(self, gen: Optional[GenConfig] = None, warm_start: Optional[DualSolution] = None) -> RunRecord:
        """
        Run the full pipeline on one generated scenario

        @param gen - Generation settings (default: the configured ones)
        @param warm_start - Optional previous solution for the solver
        @returns RunRecord
        """
        started = time.perf_counter()
        scenario, validation = self.generate(gen)
        model, y, solution = self.solve_scenario(scenario, warm_start)

        polys = DualPolynomialSet.from_solution(solution.lam, model)
        dual_norms = [dual_atomic_norm(block) for block in polys.blocks]
        estimates = localize_all(polys, self.config.localize)
        recovery = recover_all(y, model, estimates, truth=scenario, dual_value=solution.objective)
        certificate = certify(scenario, solution, self.config.cert_tol)

        record = RunRecord(
            scenario=scenario,
            validation=validation,
            y=y,
            solution=solution,
            polys=polys,
            estimates=estimates,
            recovery=recovery,
            certificate=certificate,
            dual_norms=dual_norms,
            wall_time=time.perf_counter() - started,
        )
        logger.info(
            f"Run seed={scenario.seed} N={scenario.n_samples}: status={solution.status.value}, "
            f"success={recovery.success}, certified={certificate.certified}, "
            f"wall time {record.wall_time:.2f} s"
        )
        return record

    def run_pipeline(self, write: bool = True) -> RunRecord:
        """
        Run the configured scenario and write the result files

        Files: scenario JSON, solution JSON, result JSON, dual-polynomial curve
        CSV, support CSV and polar CSV in the output directory.
        """
        record = self.run_once()
        if write:
            self.write_run(record)
        self._log_run_summary(record)
        return record

    def write_run(self, record: RunRecord) -> Dict[str, Path]:
        header = self.header()
        self.out_dir.mkdir(parents=True, exist_ok=True)
        estimated_points = [tau for peaks in record.estimates.per_user for tau, _ in peaks]
        paths = {
            'scenario': save_scenario(record.scenario, self.out_dir / Defaults.SCENARIO_FILE, header),
            'solution': save_solution(record.solution, self.out_dir / Defaults.SOLUTION_FILE, header),
            'result': write_json(self.out_dir / Defaults.RESULT_FILE, {'config': header, **record.to_dict()}),
            'curve': write_curve_csv(
                record.polys, self.out_dir / Defaults.CURVE_FILE,
                grid_size=self.config.localize.grid_factor * record.scenario.n_samples,
                extra_points=estimated_points, header=header,
            ),
            'support': write_support_csv(
                record.polys, record.estimates, self.out_dir / Defaults.SUPPORT_FILE,
                channels=record.scenario.channels, header=header,
            ),
            'polar': write_polar_csv(record, self.out_dir / Defaults.POLAR_FILE, header),
        }
        return paths

    def _log_run_summary(self, record: RunRecord) -> None:
        logger.info(f"\n{'=' * 60}")
        logger.info("Pipeline Completed!")
        logger.info(f"Solver status: {record.solution.status.value} ({record.solution.iterations} iterations)")
        logger.info(f"Delays per user: {record.estimates.counts} (true {record.scenario.path_counts})")
        logger.info(f"Max delay error: {record.recovery.max_delay_error:.3e}")
        logger.info(f"Message MSE (mean): {record.recovery.mse_mean}")
        logger.info(f"Certified: {record.certificate.certified}")
        logger.info(f"{'=' * 60}\n")

    # ========================================
    # Sweeps
    # ========================================

    def _sweep_task(self, n_samples: int, repetition: int, seed: int) -> SweepRow:
        started = time.perf_counter()
        try:
            gen = self.config.gen.with_overrides(n_samples=n_samples, seed=seed)
            record = self.run_once(gen)
            return SweepRow(
                n_samples=n_samples,
                repetition=repetition,
                seed=seed,
                status=record.solution.status.value,
                mse=record.recovery.mse_mean,
                mean_delay_error=record.recovery.mean_delay_error,
                success=record.recovery.success,
                certified=record.certificate.certified,
                wall_time=time.perf_counter() - started,
            )
        except Exception as error:
            logger.exception(f"Sweep N={n_samples} repetition {repetition} (seed {seed}) failed: {error}")
            return SweepRow(
                n_samples=n_samples, repetition=repetition, seed=seed, status='error',
                error=str(error), wall_time=time.perf_counter() - started,
            )

    def sweep(self, write: bool = True) -> List[SweepSummary]:
        """
        Sweep N over config.n_values with paired seeds

        Every N reuses the same repetition seeds; repetitions run concurrently
        and rows are ordered by (N, repetition) whatever the completion order.
        A failed repetition is recorded, never fatal.

        @returns One SweepSummary per N value
        @throws ValueError - If fewer than two N values are configured
        """
        n_values = self.config.n_values or []
        if len(n_values) < 2:
            raise ValueError(f"a sweep needs at least two N values, got {n_values}")
        seeds = self.config.repetition_seeds()
        tasks = [(n, index, seed) for n in n_values for index, seed in enumerate(seeds)]

        logger.info(f"Starting sweep over N={n_values} with {len(seeds)} paired seed(s)")
        workers = max(1, self.config.solver.workers)
        with ThreadPoolExecutor(max_workers=workers, thread_name_prefix='sweep') as pool:
            rows = list(pool.map(lambda task: self._sweep_task(*task), tasks))

        summaries = []
        for n in n_values:
            group = [row for row in rows if row.n_samples == n]
            mses = [row.mse for row in group if row.mse is not None]
            delay_errors = [row.mean_delay_error for row in group if row.mean_delay_error is not None]
            summaries.append(SweepSummary(
                n_samples=n,
                mse_mean=float(np.mean(mses)) if mses else float('nan'),
                mse_median=float(np.median(mses)) if mses else float('nan'),
                success_rate=sum(row.success for row in group) / len(group),
                delay_err_mean=float(np.mean(delay_errors)) if delay_errors else float('nan'),
                rows=group,
            ))

        if write:
            write_sweep_csv(summaries, self.out_dir / Defaults.SWEEP_FILE, self.header())
            write_sweep_runs_csv(summaries, self.out_dir / Defaults.SWEEP_RUNS_FILE, self.header())

        failed = sum(1 for row in rows if row.error is not None)
        logger.info(f"\n{'=' * 60}")
        logger.info("Sweep Completed!")
        logger.info(f"Repetitions run: {len(rows)}")
        logger.info(f"Failed: {failed}")
        for summary in summaries:
            logger.info(
                f"N={summary.n_samples}: mse_mean={summary.mse_mean:.3e}, "
                f"success_rate={summary.success_rate:.2f}"
            )
        logger.info(f"{'=' * 60}\n")
        return summaries


# ========================================
# Writers
# ========================================

def write_json(path: Path, document: Dict[str, Any]) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with open(target, 'w', encoding='utf-8', newline='\n') as file:
        json.dump(json_safe(document), file, indent=2)
        file.write('\n')
    logger.info(f"Result written to {target}")
    return target


def json_safe(value):
    """Replace non-finite floats with None so the output is strict JSON"""
    if isinstance(value, dict):
        return {key: json_safe(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [json_safe(item) for item in value]
    if isinstance(value, (float, np.floating)):
        return float(value) if np.isfinite(value) else None
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def write_polar_csv(record: RunRecord, path: Path, header: Optional[Dict[str, Any]] = None) -> Path:
    """True and estimated delays as unit-circle points (cos 2 pi tau, sin 2 pi tau)"""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with open(target, 'w', encoding='utf-8', newline='') as file:
        writer = csv.writer(file, lineterminator='\n')
        write_config_line(file, None if header is None else json_safe(header))
        writer.writerow(['user', 'kind', 'tau', 'x', 'y'])
        for user, channel in enumerate(record.scenario.channels):
            points = [('true', float(tau)) for tau in channel.delays]
            points += [('estimated', float(tau)) for tau in record.estimates.delays(user)]
            for kind, tau in points:
                angle = 2.0 * np.pi * tau
                writer.writerow([user + 1, kind, tau, float(np.cos(angle)), float(np.sin(angle))])
    logger.info(f"Polar plot data written to {target}")
    return target


def write_sweep_csv(summaries: List[SweepSummary], path: Path, header: Optional[Dict[str, Any]] = None) -> Path:
    """Aggregate sweep CSV: N,mse_mean,mse_median,success_rate,delay_err_mean"""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with open(target, 'w', encoding='utf-8', newline='') as file:
        writer = csv.writer(file, lineterminator='\n')
        write_config_line(file, None if header is None else json_safe(header))
        writer.writerow(['N', 'mse_mean', 'mse_median', 'success_rate', 'delay_err_mean'])
        for summary in summaries:
            writer.writerow([
                summary.n_samples, summary.mse_mean, summary.mse_median,
                summary.success_rate, summary.delay_err_mean,
            ])
    logger.info(f"Sweep summary written to {target}")
    return target


def write_sweep_runs_csv(summaries: List[SweepSummary], path: Path, header: Optional[Dict[str, Any]] = None) -> Path:
    """Per-repetition sweep rows ordered by (N, repetition)"""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with open(target, 'w', encoding='utf-8', newline='') as file:
        writer = csv.writer(file, lineterminator='\n')
        write_config_line(file, None if header is None else json_safe(header))
        writer.writerow(['N', 'repetition', 'seed', 'status', 'mse', 'delay_err_mean', 'success', 'certified', 'error'])
        for summary in summaries:
            for row in summary.rows:
                writer.writerow([
                    row.n_samples, row.repetition, row.seed, row.status,
                    '' if row.mse is None else row.mse,
                    '' if row.mean_delay_error is None else row.mean_delay_error,
                    int(row.success), int(row.certified), row.error or '',
                ])
    logger.info(f"Sweep repetitions written to {target}")
    return target
