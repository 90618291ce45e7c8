"""
Tests for the RK4 drift step, the stochastic step and the sampling integrator.
"""

import dataclasses
import math

import numpy as np
import pytest

from modules.dynamics import SystemId, build_system
from modules.errors import ConfigError, IntegrationError
from modules.integrator import (IntegratorConfig, Trace, TraceRow, integrate, random_initial_state,
                                rk4_drift_step, sde_step)
from modules.kernel import PhaseState, SystemParams

PARAMS = SystemParams.system_one_defaults()


def decay(p):
    return -p.alpha


def run_decay(dt, t_end=1.0):
    p = PhaseState(0.0, [1.0])
    for _ in range(int(round(t_end / dt))):
        p = rk4_drift_step(decay, p, dt)
    return abs(p.alpha[0] - math.exp(-t_end))


def test_rk4_constant_drift_is_exact():
    p = rk4_drift_step(lambda s: np.array([2.0, -1.0]), PhaseState(0.5, [0.0, 1.0]), 0.25)
    assert p.t == pytest.approx(0.75)
    assert p.alpha == pytest.approx([0.5, 0.75])


def test_rk4_zero_step_is_identity():
    p = PhaseState(1.0, [0.1, 0.2])
    q = rk4_drift_step(decay, p, 0.0)
    assert q.t == p.t
    assert np.array_equal(q.alpha, p.alpha)


def test_rk4_sees_time_argument():
    """d(alpha)/dt = t integrates exactly to t^2/2"""
    p = PhaseState(0.0, [0.0])
    for _ in range(10):
        p = rk4_drift_step(lambda s: np.array([s.t]), p, 0.1)
    assert p.alpha[0] == pytest.approx(0.5, rel=1e-12)


def test_rk4_convergence_order():
    errors = [run_decay(dt) for dt in (0.1, 0.05, 0.025)]
    orders = [math.log2(a / b) for a, b in zip(errors, errors[1:])]
    assert min(orders) >= 3.7


def test_rk4_rejects_non_finite_drift():
    with pytest.raises(IntegrationError):
        rk4_drift_step(lambda s: np.array([math.inf]), PhaseState(0.0, [0.0]), 0.1)


def test_sde_step_without_noise_matches_rk4():
    cfg = IntegratorConfig(dt=0.01, t_end=1.0, a_n=0.0)
    rng = np.random.default_rng(0)
    p = PhaseState(0.0, [0.3, -0.2])
    assert np.array_equal(sde_step(decay, p, cfg, rng).alpha, rk4_drift_step(decay, p, 0.01).alpha)
    # no draws consumed
    assert rng.standard_normal() == np.random.default_rng(0).standard_normal()


def test_sde_noise_statistics():
    """Zero drift: one step adds a_n sqrt(dt) xi"""
    cfg = IntegratorConfig(dt=0.01, t_end=1.0, a_n=0.5)
    rng = np.random.default_rng(5)
    zero = lambda s: np.zeros(s.num_vars)  # noqa: E731
    p = PhaseState(0.0, np.zeros(20000))
    increments = sde_step(zero, p, cfg, rng).alpha
    assert abs(increments.mean()) < 4 * 0.05 / math.sqrt(20000)
    assert increments.std() == pytest.approx(0.05, rel=0.03)


@pytest.mark.parametrize("overrides", [
    {'dt': 0.0}, {'t_end': -1.0}, {'a_n': -0.1}, {'sample_stride': 0},
])
def test_config_validation(overrides):
    with pytest.raises(ConfigError):
        IntegratorConfig(**overrides)


def test_config_resolution_check():
    with pytest.raises(ConfigError):
        IntegratorConfig(dt=0.2).check_resolution(PARAMS)
    cfg = IntegratorConfig.from_params(PARAMS, t_end=2.0, rng_seed=4, sample_stride=10)
    assert cfg.dt == PARAMS.dt
    assert cfg.a_n == PARAMS.a_n
    assert cfg.num_steps == 2000


def test_random_initial_state_range():
    p = random_initial_state(1000, PARAMS, np.random.default_rng(1))
    assert p.t == 0.0
    assert p.alpha.min() >= 0.0
    assert p.alpha.max() < PARAMS.period


def test_trace_append_checks():
    trace = Trace(num_vars=2)
    trace.append(TraceRow(0, 0.0, 1.0, (0.1, 0.2), (1, 0), 1, 0))
    with pytest.raises(ValueError):
        trace.append(TraceRow(1, 0.0, 1.0, (0.1, 0.2), (1, 0), 1, 0))
    with pytest.raises(ValueError):
        trace.append(TraceRow(1, 0.1, 1.0, (0.1,), (1,), 1, 0))
    assert len(trace) == 1
    assert trace.last.step == 0


def test_integrate_row_count_and_metadata(a12):
    system = build_system(SystemId.ONE, a12, PARAMS)
    cfg = IntegratorConfig.from_params(PARAMS, t_end=1.0, rng_seed=3, sample_stride=100)
    trace = integrate(system, a12, PARAMS, cfg)
    assert len(trace) == 11
    assert [row.step for row in trace.rows] == list(range(0, 1001, 100))
    assert trace.metadata['steps'] == 1000
    assert trace.metadata['seed'] == 3
    assert trace.metadata['system'] == "system_one"
    frame = trace.to_frame()
    assert list(frame.columns) == trace.columns()
    assert frame['x_1'].dtype == np.int64


def test_integrate_zero_horizon(a12):
    system = build_system(SystemId.ONE, a12, PARAMS)
    trace = integrate(system, a12, PARAMS, IntegratorConfig.from_params(PARAMS, t_end=0.0))
    assert len(trace) == 1
    assert trace.metadata['steps'] == 0


def test_integrate_is_deterministic(a12):
    params = SystemParams.system_two_defaults(s2_mode="averaged_printed")
    system = build_system(SystemId.TWO, a12, params)
    cfg = IntegratorConfig.from_params(params, t_end=1.0, rng_seed=11, sample_stride=50)
    first = integrate(system, a12, params, cfg)
    second = integrate(system, a12, params, cfg)
    assert [row.alpha for row in first.rows] == [row.alpha for row in second.rows]
    other = integrate(system, a12, params, IntegratorConfig.from_params(params, t_end=1.0, rng_seed=12))
    assert other.rows[0].alpha != first.rows[0].alpha


def test_integrate_accepts_negative_seed(a12):
    params = SystemParams.system_two_defaults(s2_mode="averaged_printed")
    system = build_system(SystemId.TWO, a12, params)
    negative = integrate(system, a12, params, IntegratorConfig.from_params(params, t_end=0.2, rng_seed=-1))
    wrapped = integrate(system, a12, params, IntegratorConfig.from_params(params, t_end=0.2, rng_seed=2 ** 64 - 1))
    assert negative.metadata['seed'] == -1
    assert [row.alpha for row in negative.rows] == [row.alpha for row in wrapped.rows]


def test_integrate_records_kernels(a12):
    system = build_system(SystemId.ONE, a12, PARAMS)
    cfg = IntegratorConfig.from_params(PARAMS, t_end=0.2, sample_stride=100, record_kernels=True)
    trace = integrate(system, a12, PARAMS, cfg)
    assert all(len(row.kernels) == a12.num_clauses for row in trace.rows)


def test_observer_stops_run(a12):
    system = build_system(SystemId.ONE, a12, PARAMS)
    cfg = IntegratorConfig.from_params(PARAMS, t_end=5.0, sample_stride=100)
    trace = integrate(system, a12, PARAMS, cfg, observers=[lambda row, tr: len(tr) == 3])
    assert len(trace) == 3
    assert trace.metadata['steps'] == 200


def test_integrate_reports_failing_step(a12):
    system = build_system(SystemId.ONE, a12, PARAMS)
    healthy = system.drift
    broken = dataclasses.replace(
        system, drift=lambda p: np.full(p.num_vars, math.nan) if p.t > 0.01075 else healthy(p))
    cfg = IntegratorConfig.from_params(PARAMS, t_end=1.0, sample_stride=5)
    with pytest.raises(IntegrationError) as info:
        integrate(broken, a12, PARAMS, cfg)
    assert info.value.step == 11
    assert info.value.row_index == 3


def test_integrate_rejects_non_finite_initial_state(a12):
    system = build_system(SystemId.ONE, a12, PARAMS)
    cfg = IntegratorConfig.from_params(PARAMS, t_end=1.0)
    with pytest.raises(IntegrationError):
        integrate(system, a12, PARAMS, cfg, initial=PhaseState(0.0, [math.nan] * 6))
