"""
Boolean readout of oscillator states and convergence detection over sampled rows.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence, Tuple

import numpy as np

from modules.formula import Assignment, Formula, Objective
from modules.integrator import TraceRow
from modules.kernel import TWO_PI, PhaseState, SystemParams, thetas

logger = logging.getLogger(__name__)

TIE_TOLERANCE = 1e-9


class ConvergenceStatus(Enum):
    CONVERGED = "converged"
    RUNNING = "running"


@dataclass(frozen=True)
class ReadoutResult:
    """Assignment with per-variable margin |cos| and tie flags"""
    assignment: Assignment
    confidence: Tuple[float, ...]
    ambiguous_flags: Tuple[bool, ...]

    @property
    def num_ambiguous(self) -> int:
        return sum(self.ambiguous_flags)


def _binarize_cos(cos_values: np.ndarray) -> ReadoutResult:
    ambiguous = np.abs(cos_values) <= TIE_TOLERANCE
    bits = (cos_values >= 0.0) | ambiguous
    return ReadoutResult(
        assignment=Assignment(tuple(bool(b) for b in bits)),
        confidence=tuple(float(c) for c in np.abs(cos_values)),
        ambiguous_flags=tuple(bool(a) for a in ambiguous),
    )


def analog_values(p: PhaseState, params: SystemParams) -> np.ndarray:
    """x_i(t) = (1 + cos theta_i)/2"""
    return 0.5 * (1.0 + np.cos(thetas(p, params)))


def binarize_system1(p: PhaseState, params: SystemParams) -> ReadoutResult:
    """x_i = 1 when (1 + cos theta_i)/2 >= 1/2; ties read as 1 and are flagged"""
    return _binarize_cos(np.cos(thetas(p, params)))


def wrapped_phases(p: PhaseState, params: SystemParams) -> np.ndarray:
    """phi_i = omega * alpha_i wrapped to [0, 2 pi)"""
    return np.mod(params.omega * p.alpha, TWO_PI)


def binarize_system2(p: PhaseState, params: SystemParams) -> ReadoutResult:
    """x_i = 1 when phi_i is closer to 0 than to pi"""
    # closer to 0 (mod 2 pi) than to pi is exactly cos(phi) > 0
    return _binarize_cos(np.cos(wrapped_phases(p, params)))


def convergence_check(window: Sequence[TraceRow], formula: Formula, objective: Objective,
                      target: Optional[int] = None) -> ConvergenceStatus:
    """
    Converged when the readout holds still over the whole window and the objective agrees.

    Args:
        window: the most recent rows, oldest first
        target: value the objective must reach (sat always requires M)
    """
    if not window:
        return ConvergenceStatus.RUNNING
    first = window[0].x
    if any(row.x != first for row in window[1:]):
        return ConvergenceStatus.RUNNING

    if objective is Objective.SAT:
        settled = all(row.sat_count == formula.num_clauses for row in window)
    elif objective is Objective.MAX_SAT:
        settled = target is None or all(row.sat_count >= target for row in window)
    else:
        counts = {row.nae_count for row in window}
        settled = len(counts) == 1 and (target is None or counts.pop() >= target)

    return ConvergenceStatus.CONVERGED if settled else ConvergenceStatus.RUNNING


def window_size(params: SystemParams, dt: float, sample_stride: int, periods: float = 3.0) -> int:
    """Number of sampled rows spanning the given number of periods (at least 2)"""
    return max(2, int(math.ceil(periods * params.period / (dt * sample_stride))))
