"""
Tests for the System I energy V, its analytic gradient and the gradient-flow right-hand side.
"""

import math

import numpy as np
import pytest

from modules.formula import Objective, brute_force, eval_assignment, generate_random_3sat
from modules.gradcheck import (DEFAULT_TOLERANCE, central_difference, grad_v_error, relative_error,
                               run_gradcheck_suites, system_one_descent_error)
from modules.integrator import rk4_drift_step
from modules.kernel import PhaseState, SystemParams, corner_state, kernel_value
from modules.readout import binarize_system1
from modules.system_one import energy_sample, energy_v, grad_v, rhs_system1

PARAMS = SystemParams.system_one_defaults()
UNIT = SystemParams.system_one_defaults(omega=1.0)


def random_state(rng, n, params=PARAMS):
    return PhaseState(rng.uniform(0, params.period), rng.uniform(0, params.period, size=n))


def direct_energy(formula, params, p):
    """Sum of A K_m^2 through the per-clause product routine"""
    return sum(params.A * kernel_value(formula, m, p, params) ** 2 for m in range(formula.num_clauses))


def test_energy_zero_when_all_clauses_satisfied(a12):
    solution = brute_force(a12, Objective.SAT).best_assignment
    phases = [0.0 if bit else math.pi for bit in solution.bits]
    assert energy_v(a12, PARAMS, corner_state(phases, PARAMS)) == 0.0


def test_energy_all_false_corner(positive_clause):
    p = corner_state([math.pi] * 3, PARAMS)
    assert energy_v(positive_clause, PARAMS, p) == pytest.approx(PARAMS.A)
    sample = energy_sample(positive_clause, PARAMS, p)
    assert sample.t == 0.0
    assert sample.value == pytest.approx(PARAMS.A)


def test_energy_matches_direct_products():
    rng = np.random.default_rng(1)
    for seed in range(10):
        formula = generate_random_3sat(int(rng.integers(3, 9)), int(rng.integers(1, 21)), seed)
        p = random_state(rng, formula.num_vars)
        assert energy_v(formula, PARAMS, p) == pytest.approx(direct_energy(formula, PARAMS, p), rel=1e-12)


def test_gradient_vanishes_at_sine_zeros(a12):
    rng = np.random.default_rng(2)
    phases = rng.integers(0, 4, size=6) * math.pi
    assert np.allclose(grad_v(a12, PARAMS, corner_state(phases, PARAMS)), 0.0, atol=1e-12)


def test_gradient_and_rhs_with_zero_coupling(a12):
    params = SystemParams(A=0.0)
    p = random_state(np.random.default_rng(4), 6, params)
    assert np.array_equal(grad_v(a12, params, p), np.zeros(6))
    assert np.array_equal(rhs_system1(a12, params, p), -np.ones(6))


def test_gradient_matches_finite_difference():
    rng = np.random.default_rng(5)
    for seed in range(20):
        formula = generate_random_3sat(3, int(rng.integers(1, 8)), seed)
        p = random_state(rng, 3)
        numeric = central_difference(lambda a: energy_v(formula, PARAMS, PhaseState(p.t, a)), p.alpha)
        assert relative_error(grad_v(formula, PARAMS, p), numeric) < 1e-6


def test_gradient_check_on_larger_instances():
    rng = np.random.default_rng(6)
    for seed in range(10):
        formula = generate_random_3sat(int(rng.integers(4, 9)), int(rng.integers(5, 21)), 100 + seed)
        assert grad_v_error(formula, PARAMS, random_state(rng, formula.num_vars)) < 1e-6


def test_rhs_is_negated_gradient_plus_one(a12):
    p = random_state(np.random.default_rng(7), 6)
    assert np.array_equal(rhs_system1(a12, PARAMS, p), -(grad_v(a12, PARAMS, p) + 1.0))


def test_rhs_at_solution_is_minus_one(a12):
    solution = brute_force(a12, Objective.SAT).best_assignment
    phases = [0.0 if bit else math.pi for bit in solution.bits]
    assert np.allclose(rhs_system1(a12, PARAMS, corner_state(phases, PARAMS, t=0.3)), -1.0)


def test_descent_identity_at_unit_frequency():
    rng = np.random.default_rng(8)
    for seed in range(25):
        formula = generate_random_3sat(int(rng.integers(3, 7)), int(rng.integers(1, 15)), seed)
        p = random_state(rng, formula.num_vars, UNIT)
        assert system_one_descent_error(formula, UNIT, p) < 1e-6


def test_descent_identity_near_a_solution(a12):
    """Close to a satisfying corner dV/dt is tiny while its two terms are not"""
    solution = brute_force(a12, Objective.SAT).best_assignment
    rng = np.random.default_rng(10)
    phases = np.array([0.0 if bit else math.pi for bit in solution.bits]) + rng.uniform(-1e-2, 1e-2, size=6)
    p = corner_state(phases, UNIT, t=0.3)
    gradient = grad_v(a12, UNIT, p)
    assert np.sum(gradient ** 2) < 1e-6 * abs(np.sum(gradient))
    assert system_one_descent_error(a12, UNIT, p) < 1e-6


def test_five_point_stencil_is_exact_for_quartics():
    x = np.array([0.5, -2.0, 3.0])
    numeric = central_difference(lambda v: float(np.sum(v ** 4 - 3 * v ** 2)), x)
    assert numeric == pytest.approx(4 * x ** 3 - 6 * x, rel=1e-8)


def test_gradcheck_suites_pass_at_default_tolerance():
    results = run_gradcheck_suites(num_instances=10, states_per_instance=5, seed=3)
    assert [result.name for result in results] == [
        'grad_v', 'averaged_gradient', 'descent_system_one', 'descent_averaged']
    for result in results:
        assert result.tolerance == DEFAULT_TOLERANCE
        assert result.passed, result.to_dict()


def test_noiseless_trajectory_energy_is_nonincreasing(a12):
    rng = np.random.default_rng(9)
    p = random_state(rng, 6, UNIT)
    dt = UNIT.period / 500
    previous = energy_v(a12, UNIT, p)
    for _ in range(1500):
        p = rk4_drift_step(lambda s: rhs_system1(a12, UNIT, s), p, dt)
        current = energy_v(a12, UNIT, p)
        assert current <= previous + 1e-9 * max(1.0, previous)
        previous = current


def test_steady_state_at_satisfying_corner(a12):
    """The noiseless flow keeps every kernel at zero and the readout fixed"""
    solution = brute_force(a12, Objective.SAT).best_assignment
    phases = np.array([0.0 if bit else math.pi for bit in solution.bits])
    p = corner_state(phases, PARAMS)
    x0 = (1 + np.cos(phases)) / 2
    drift = lambda s: rhs_system1(a12, PARAMS, s)  # noqa: E731
    for _ in range(10):
        for _ in range(100):
            p = rk4_drift_step(drift, p, PARAMS.period / 100)
        x = (1 + np.cos(PARAMS.omega * (p.t + p.alpha))) / 2
        assert np.allclose(x, x0, atol=1e-9)
        assert energy_v(a12, PARAMS, p) < 1e-18
        assert binarize_system1(p, PARAMS).assignment == solution
        assert eval_assignment(a12, binarize_system1(p, PARAMS).assignment).sat_count == 10
