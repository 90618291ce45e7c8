"""
Solve Management Layer - runs seeded restarts of an oscillator system.
Aggregates restart outcomes into a validated SolveReport and replays saved reports.
"""

import logging
import math
import os
import time
from collections import deque
from concurrent.futures import Future, ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

from modules.dynamics import SystemId, build_system
from modules.errors import SolverError
from modules.formula import (Assignment, Formula, Objective, OracleResult, brute_force,
                             eval_assignment, parse_dimacs, serialize_dimacs)
from modules.integrator import IntegratorConfig, Trace, TraceRow, integrate
from modules.kernel import SystemParams
from modules.readout import ConvergenceStatus, convergence_check, window_size
from settings_manager import SettingsManager, SolverSettings

logger = logging.getLogger(__name__)


class SolveStatus(Enum):
    """Outcome of a solve run"""
    SOLVED = "solved"
    BEST_EFFORT = "best_effort"
    INPUT_ERROR = "input_error"

    @property
    def exit_code(self) -> int:
        return {SolveStatus.SOLVED: 0, SolveStatus.BEST_EFFORT: 1, SolveStatus.INPUT_ERROR: 2}[self]


@dataclass(frozen=True)
class RestartTask:
    """Everything one worker needs to run a restart"""
    index: int
    formula: Formula
    system_id: SystemId
    params: SystemParams
    config: IntegratorConfig
    objective: Objective
    target: int
    window: int
    keep_trace: bool


@dataclass
class RestartRecord:
    """Per-restart outcome"""
    index: int
    seed: int
    solved: bool
    converged: bool
    steps: int
    final_energy: float
    final_sat_count: int
    final_nae_count: int
    best_value: int
    best_assignment: str
    best_t: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            'index': self.index,
            'seed': self.seed,
            'solved': self.solved,
            'converged': self.converged,
            'steps': self.steps,
            'final_energy': self.final_energy if math.isfinite(self.final_energy) else None,
            'final_sat_count': self.final_sat_count,
            'final_nae_count': self.final_nae_count,
            'best_value': self.best_value,
            'best_assignment': self.best_assignment,
            'best_t': self.best_t,
        }


@dataclass
class SolveReport:
    """Aggregated result of a solve run"""
    status: SolveStatus
    objective: Objective
    system: str
    num_vars: int
    num_clauses: int
    best_value: int = 0
    best_assignment: Optional[Assignment] = None
    target: Optional[int] = None
    restarts_used: int = 0
    total_steps: int = 0
    wall_time: float = 0.0
    restarts: List[RestartRecord] = field(default_factory=list)
    params: Dict[str, Any] = field(default_factory=dict)
    settings: Dict[str, Any] = field(default_factory=dict)
    seed: int = 0
    instance: str = ""
    oracle: Optional[Dict[str, Any]] = None
    message: str = ""

    @property
    def exit_code(self) -> int:
        return self.status.exit_code

    def to_dict(self, include_wall_time: bool = True) -> Dict[str, Any]:
        data = {
            'status': self.status.value,
            'objective': self.objective.value,
            'system': self.system,
            'num_vars': self.num_vars,
            'num_clauses': self.num_clauses,
            'best_value': self.best_value,
            'best_assignment': self.best_assignment.as_ints() if self.best_assignment else None,
            'target': self.target,
            'restarts_used': self.restarts_used,
            'total_steps': self.total_steps,
            'restarts': [record.to_dict() for record in self.restarts],
            'params': self.params,
            'settings': self.settings,
            'seed': self.seed,
            'instance': self.instance,
            'oracle': self.oracle,
            'message': self.message,
        }
        if include_wall_time:
            data['wall_time'] = self.wall_time
        return data

    @classmethod
    def input_error(cls, message: str, settings: Optional[SolverSettings] = None) -> 'SolveReport':
        settings = settings or SolverSettings()
        return cls(
            status=SolveStatus.INPUT_ERROR,
            objective=settings.objective_kind,
            system=settings.system,
            num_vars=0,
            num_clauses=0,
            settings=settings.to_dict(),
            seed=settings.seed,
            message=message,
        )


@dataclass
class SolveConfig:
    """A formula plus the resolved settings for one solve run"""
    formula: Formula
    settings: SolverSettings = field(default_factory=SolverSettings)
    keep_trace: bool = False
    record_kernels: bool = False

    @property
    def params(self) -> SystemParams:
        return self.settings.to_params()

    def worker_count(self) -> int:
        requested = self.settings.workers or os.cpu_count() or 1
        return max(1, min(requested, self.settings.restarts))


def run_restart(task: RestartTask) -> Tuple[RestartRecord, Optional[Trace]]:
    """
    Integrate one seeded restart, tracking the best readout over every sample.
    Stops once the convergence window holds with the target reached.
    """
    system = build_system(task.system_id, task.formula, task.params)
    window: deque = deque(maxlen=task.window)
    best = {'value': -1, 'assignment': '', 't': 0.0, 'converged': False}

    def observe(row: TraceRow, trace: Trace) -> bool:
        value = row.nae_count if task.objective is Objective.MAX_NAE else row.sat_count
        if value > best['value']:
            best.update(value=value, assignment=''.join(str(b) for b in row.x), t=row.t)
        window.append(row)
        if len(window) < task.window:
            return False
        status = convergence_check(list(window), task.formula, task.objective, task.target)
        if status is ConvergenceStatus.CONVERGED:
            best['converged'] = True
            return True
        return False

    trace = integrate(system, task.formula, task.params, task.config, observers=[observe])
    last = trace.last
    record = RestartRecord(
        index=task.index,
        seed=task.config.rng_seed,
        solved=best['value'] >= task.target,
        converged=best['converged'],
        steps=trace.metadata.get('steps', 0),
        final_energy=last.energy,
        final_sat_count=last.sat_count,
        final_nae_count=last.nae_count,
        best_value=best['value'],
        best_assignment=best['assignment'],
        best_t=best['t'],
    )
    return record, (trace if task.keep_trace else None)


class SolveManager:
    """
    Orchestrates restarts across a worker pool.
    Results are consumed in restart order so the report does not depend on scheduling.
    """

    def __init__(self, config: SolveConfig):
        self.config = config
        self.settings = config.settings
        self.formula = config.formula
        self.objective = self.settings.objective_kind
        self.trace: Optional[Trace] = None
        self.oracle_result: Optional[OracleResult] = None

    def _oracle_target(self) -> int:
        """M for sat; the oracle optimum for the max objectives when available"""
        m = self.formula.num_clauses
        if not self.settings.use_oracle:
            return m
        if self.formula.num_vars > self.settings.oracle_cap:
            logger.warning(f"Skipping oracle: N={self.formula.num_vars} exceeds cap {self.settings.oracle_cap}")
            return m
        self.oracle_result = brute_force(self.formula, self.objective, cap=self.settings.oracle_cap)
        logger.info(f"Oracle optimum for {self.objective.value}: {self.oracle_result.best_value}/{m}")
        if self.objective is Objective.SAT:
            return m
        return self.oracle_result.best_value

    def _tasks(self, params: SystemParams, target: int) -> List[RestartTask]:
        s = self.settings
        window = window_size(params, params.dt, s.sample_stride, s.window_periods)
        tasks = []
        for index in range(s.restarts):
            cfg = IntegratorConfig.from_params(params, t_end=s.t_end, rng_seed=s.seed + index,
                                               sample_stride=s.sample_stride,
                                               record_kernels=self.config.record_kernels)
            tasks.append(RestartTask(index, self.formula, s.system_id, params, cfg,
                                     self.objective, target, window, self.config.keep_trace))
        return tasks

    def _run_tasks(self, tasks: List[RestartTask]) -> List[Tuple[RestartRecord, Optional[Trace]]]:
        """Run in order and stop after the first solved restart"""
        workers = self.config.worker_count()
        results = []
        if workers == 1:
            for task in tasks:
                results.append(run_restart(task))
                if results[-1][0].solved:
                    break
            return results

        pool = ProcessPoolExecutor(max_workers=workers)
        try:
            futures: List[Future] = [pool.submit(run_restart, task) for task in tasks]
            for future in futures:
                results.append(future.result())
                if results[-1][0].solved:
                    break
        finally:
            pool.shutdown(wait=True, cancel_futures=True)
        return results

    def run(self) -> SolveReport:
        """
        Run restarts and build the report.

        Raises:
            SolverError: on invalid parameters or a formula the chosen dynamics reject
        """
        start_time = time.perf_counter()
        SettingsManager(self.settings).validate()
        params = self.config.params
        target = self._oracle_target()
        tasks = self._tasks(params, target)

        logger.info(f"Solving N={self.formula.num_vars}, M={self.formula.num_clauses} with "
                    f"system {self.settings.system} ({self.objective.value}), "
                    f"{len(tasks)} restarts x {self.settings.periods} periods")

        results = self._run_tasks(tasks)
        records = [record for record, _ in results]
        for record in records:
            logger.info(f"Restart {record.index} (seed {record.seed}): best {record.best_value}, "
                        f"{'solved' if record.solved else 'not solved'} after {record.steps} steps")

        # highest value wins; earliest restart on ties
        best_position = max(range(len(records)), key=lambda k: (records[k].best_value, -k))
        best_record = records[best_position]
        self.trace = results[best_position][1]

        best_assignment = Assignment(tuple(c == '1' for c in best_record.best_assignment))
        stats = eval_assignment(self.formula, best_assignment)
        best_value = stats.value(self.objective)
        if best_value != best_record.best_value:
            raise SolverError(f"Readout value {best_record.best_value} disagrees with evaluation {best_value}")

        solved = best_value >= target
        report = SolveReport(
            status=SolveStatus.SOLVED if solved else SolveStatus.BEST_EFFORT,
            objective=self.objective,
            system=self.settings.system,
            num_vars=self.formula.num_vars,
            num_clauses=self.formula.num_clauses,
            best_value=best_value,
            best_assignment=best_assignment,
            target=target,
            restarts_used=len(records),
            total_steps=sum(record.steps for record in records),
            wall_time=time.perf_counter() - start_time,
            restarts=records,
            params=params.to_dict(),
            settings=self.settings.to_dict(),
            seed=self.settings.seed,
            instance=serialize_dimacs(self.formula),
            oracle=self.oracle_result.to_dict() if self.oracle_result else None,
        )
        logger.info(f"Solve finished: {report.status.value}, best {best_value}/{self.formula.num_clauses} "
                    f"in {report.restarts_used} restarts ({report.wall_time:.2f}s)")
        return report


def run_solve(config: SolveConfig) -> SolveReport:
    """Run a solve and return its report"""
    return SolveManager(config).run()


def replay_report(report: Dict[str, Any], workers: Optional[int] = None) -> SolveReport:
    """Re-run the instance, settings and seed stored in a report"""
    formula = parse_dimacs(report['instance'])
    settings = SolverSettings.from_dict(report['settings'])
    if workers is not None:
        settings = SettingsManager(settings).apply_overrides({'workers': workers})
    return run_solve(SolveConfig(formula=formula, settings=settings))


def reports_match(first: SolveReport, second: SolveReport) -> bool:
    """True when two reports agree on everything except wall time"""
    return first.to_dict(include_wall_time=False) == second.to_dict(include_wall_time=False)
