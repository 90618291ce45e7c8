"""
Finite-difference verification of the analytic gradients and descent identities.
Backs the `gradcheck` command and the gradient tests.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, List

import numpy as np

from modules.formula import Formula, generate_random_3sat, seeded_rng
from modules.kernel import PhaseState, S2Mode, SystemParams
from modules.system_one import energy_v, grad_v, rhs_system1
from modules.system_two import build_term_list, term_drift, term_energy

logger = logging.getLogger(__name__)

DEFAULT_STEP = 2e-5
DEFAULT_TOLERANCE = 1e-6
RELATIVE_FLOOR = 1e-3


@dataclass
class GradCheckResult:
    """Worst relative error of one suite"""
    name: str
    checks: int
    max_rel_error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.tolerance

    def to_dict(self) -> Dict:
        return {
            'name': self.name,
            'checks': self.checks,
            'max_rel_error': self.max_rel_error,
            'tolerance': self.tolerance,
            'passed': self.passed,
        }


def derivative(func: Callable[[float], float], x: float, h: float = DEFAULT_STEP) -> float:
    """Five-point centered derivative; the step grows with |x| past 1"""
    step = h * max(1.0, abs(x))
    return (8.0 * (func(x + step) - func(x - step)) - (func(x + 2 * step) - func(x - 2 * step))) / (12.0 * step)


def central_difference(func: Callable[[np.ndarray], float], x: np.ndarray,
                       h: float = DEFAULT_STEP) -> np.ndarray:
    """Centered-difference gradient of a scalar function, one coordinate at a time"""
    x0 = np.asarray(x, dtype=float)
    grad = np.zeros(x0.shape[0])
    for j in range(x0.shape[0]):
        def along(value: float, j: int = j) -> float:
            point = np.copy(x0)
            point[j] = value
            return func(point)
        grad[j] = derivative(along, float(x0[j]), h)
    return grad


def relative_error(analytic: np.ndarray, reference: np.ndarray) -> float:
    """Max componentwise |a - r| / max(|r|, 1e-3 * max|r|)"""
    analytic = np.atleast_1d(np.asarray(analytic, dtype=float))
    reference = np.atleast_1d(np.asarray(reference, dtype=float))
    scale = float(np.max(np.abs(reference))) if reference.size else 0.0
    floor = max(RELATIVE_FLOOR * scale, 1e-12)
    denom = np.maximum(np.abs(reference), floor)
    return float(np.max(np.abs(analytic - reference) / denom))


def grad_v_error(formula: Formula, params: SystemParams, p: PhaseState,
                 h: float = DEFAULT_STEP) -> float:
    """Analytic grad V against central differences in alpha"""
    numeric = central_difference(lambda a: energy_v(formula, params, PhaseState(p.t, a)), p.alpha, h)
    return relative_error(grad_v(formula, params, p), numeric)


def averaged_gradient_error(formula: Formula, params: SystemParams, phases: np.ndarray,
                            h: float = DEFAULT_STEP) -> float:
    """averaged_gradient drift against -grad E by central differences"""
    terms = build_term_list(formula)
    numeric = central_difference(lambda phi: term_energy(terms, params, phi), phases, h)
    return relative_error(term_drift(terms, params, phases, S2Mode.AVERAGED_GRADIENT), -numeric)


def system_one_descent_error(formula: Formula, params: SystemParams, p: PhaseState,
                             h: float = DEFAULT_STEP) -> float:
    """
    Checks dV/dt = -sum_i (1 + d(alpha_i)/dt)^2 along the System I flow.
    The explicit dV/dt term is a finite difference in t. The two terms of dV/dt largely
    cancel, so the error is measured against the largest of them.
    """
    rate = rhs_system1(formula, params, p)
    partial_t = derivative(lambda t: energy_v(formula, params, PhaseState(t, p.alpha)), p.t, h)
    along_flow = float(np.dot(grad_v(formula, params, p), rate))
    expected = -float(np.sum((1.0 + rate) ** 2))
    scale = max(abs(along_flow), abs(partial_t), abs(expected), 1e-300)
    return abs(along_flow + partial_t - expected) / scale


def averaged_descent_error(formula: Formula, params: SystemParams, phases: np.ndarray,
                           h: float = DEFAULT_STEP) -> float:
    """Directional derivative of E along the averaged_gradient flow against -sum (d(phi_i)/dt)^2"""
    terms = build_term_list(formula)
    rate = term_drift(terms, params, phases, S2Mode.AVERAGED_GRADIENT)
    speed = float(np.linalg.norm(rate))
    if speed == 0.0:
        return 0.0
    direction = rate / speed
    slope = derivative(lambda s: term_energy(terms, params, phases + s * direction), 0.0, h)
    return relative_error(speed * slope, -speed ** 2)


def random_instances(count: int, seed: int, max_vars: int = 8,
                     max_clauses: int = 20) -> List[Formula]:
    """Random 3-SAT instances with 3 <= N <= max_vars and 1 <= M <= max_clauses"""
    rng = seeded_rng(seed)
    instances = []
    for index in range(count):
        n = int(rng.integers(3, max_vars + 1))
        m = int(rng.integers(1, max_clauses + 1))
        instances.append(generate_random_3sat(n, m, seed + index))
    return instances


def run_gradcheck_suites(num_instances: int = 50, states_per_instance: int = 10,
                         seed: int = 0, tolerance: float = DEFAULT_TOLERANCE,
                         h: float = DEFAULT_STEP) -> List[GradCheckResult]:
    """
    Run every suite over the same random instances and states.
    System I suites use its default coupling; the descent identity runs at omega = 1.
    """
    rng = seeded_rng(seed)
    instances = random_instances(num_instances, seed)
    one = SystemParams.system_one_defaults()
    one_unit = SystemParams.system_one_defaults(omega=1.0)
    two = SystemParams.system_two_defaults()
    worst = {'grad_v': 0.0, 'averaged_gradient': 0.0, 'descent_system_one': 0.0, 'descent_averaged': 0.0}

    for formula in instances:
        n = formula.num_vars
        for _ in range(states_per_instance):
            p = PhaseState(rng.uniform(0.0, one.period), rng.uniform(0.0, one.period, size=n))
            p_unit = PhaseState(rng.uniform(0.0, one_unit.period), rng.uniform(0.0, one_unit.period, size=n))
            phases = rng.uniform(0.0, 2.0 * np.pi, size=n)
            worst['grad_v'] = max(worst['grad_v'], grad_v_error(formula, one, p, h))
            worst['averaged_gradient'] = max(worst['averaged_gradient'],
                                             averaged_gradient_error(formula, two, phases, h))
            worst['descent_system_one'] = max(worst['descent_system_one'],
                                              system_one_descent_error(formula, one_unit, p_unit, h))
            worst['descent_averaged'] = max(worst['descent_averaged'],
                                            averaged_descent_error(formula, two, phases, h))

    checks = num_instances * states_per_instance
    results = [GradCheckResult(name, checks, value, tolerance) for name, value in worst.items()]
    for result in results:
        logger.info(f"{result.name}: max relative error {result.max_rel_error:.3e} over {checks} states")
    return results
