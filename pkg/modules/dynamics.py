"""
Binds a system choice, a formula and parameters into the callables the integrator drives.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from modules.formula import Formula, Objective
from modules.kernel import PhaseState, S2Mode, SystemParams, clause_kernels
from modules.readout import ReadoutResult, binarize_system1, binarize_system2
from modules.system_one import energy_v, rhs_system1
from modules.system_two import build_term_list, rhs_full, term_drift, term_energy

logger = logging.getLogger(__name__)


class SystemId(Enum):
    """Which oscillator system drives a run"""
    ONE = "one"
    TWO = "two"

    @property
    def default_objective(self) -> Objective:
        return Objective.SAT if self is SystemId.ONE else Objective.MAX_NAE


@dataclass(frozen=True)
class OscillatorSystem:
    """Drift, energy, readout and kernel callables for one (system, formula, params) triple"""
    name: str
    system_id: SystemId
    formula: Formula
    params: SystemParams
    drift: Callable[[PhaseState], np.ndarray]
    energy: Callable[[PhaseState], float]
    readout: Callable[[PhaseState], ReadoutResult]

    def kernels(self, p: PhaseState) -> np.ndarray:
        return clause_kernels(self.formula, p, self.params)


def build_system(system_id: SystemId, formula: Formula, params: SystemParams) -> OscillatorSystem:
    """
    System I uses V as its energy. System II reports the averaged energy E at phi = omega * alpha;
    in full mode E is NaN for formulas that are not 3-uniform, the averaged modes reject them.
    """
    system_id = SystemId(system_id)

    if system_id is SystemId.ONE:
        return OscillatorSystem(
            name="system_one",
            system_id=system_id,
            formula=formula,
            params=params,
            drift=lambda p: rhs_system1(formula, params, p),
            energy=lambda p: energy_v(formula, params, p),
            readout=lambda p: binarize_system1(p, params),
        )

    mode = params.s2_mode
    terms = build_term_list(formula) if mode is not S2Mode.FULL or formula.is_three_uniform() else None

    def energy(p: PhaseState) -> float:
        if terms is None:
            return math.nan
        return term_energy(terms, params, params.omega * p.alpha)

    if mode is S2Mode.FULL:
        if terms is None:
            logger.warning("Formula is not 3-uniform; System II energy will be reported as NaN")
        drift = lambda p: rhs_full(formula, params, p)  # noqa: E731
    else:
        drift = lambda p: term_drift(terms, params, params.omega * p.alpha, mode)  # noqa: E731

    return OscillatorSystem(
        name=f"system_two_{mode.value}",
        system_id=system_id,
        formula=formula,
        params=params,
        drift=drift,
        energy=energy,
        readout=lambda p: binarize_system2(p, params),
    )
