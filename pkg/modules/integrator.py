"""
Stochastic integrator for the oscillator systems.
Fixed-step RK4 drift plus additive Wiener increments, with periodic trace sampling.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from modules.errors import ConfigError, IntegrationError
from modules.formula import Formula, eval_assignment, seeded_rng
from modules.kernel import PhaseState, SystemParams

logger = logging.getLogger(__name__)

Drift = Callable[[PhaseState], np.ndarray]
# Observers receive each recorded row plus the trace so far; returning True stops the run
Observer = Callable[['TraceRow', 'Trace'], bool]


@dataclass(frozen=True)
class IntegratorConfig:
    """Step size, horizon, noise and sampling for one integration"""
    dt: float = 1e-3
    t_end: float = 100.0
    a_n: float = 5e-4
    rng_seed: int = 0
    sample_stride: int = 100
    record_kernels: bool = False

    def __post_init__(self):
        if not self.dt > 0.0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if not self.t_end >= 0.0:
            raise ConfigError(f"t_end must be non-negative, got {self.t_end}")
        if not self.a_n >= 0.0:
            raise ConfigError(f"noise amplitude must be non-negative, got {self.a_n}")
        if self.sample_stride < 1:
            raise ConfigError(f"sample_stride must be at least 1, got {self.sample_stride}")

    @classmethod
    def from_params(cls, params: SystemParams, t_end: float, rng_seed: int = 0,
                    sample_stride: int = 100, record_kernels: bool = False) -> 'IntegratorConfig':
        """Config sharing dt and a_n with the model parameters"""
        config = cls(dt=params.dt, t_end=t_end, a_n=params.a_n, rng_seed=rng_seed,
                     sample_stride=sample_stride, record_kernels=record_kernels)
        return config.check_resolution(params)

    @property
    def num_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    def check_resolution(self, params: SystemParams) -> 'IntegratorConfig':
        if not self.dt < params.period / 10.0:
            raise ConfigError(f"dt={self.dt} must be below a tenth of the period {params.period}")
        return self


@dataclass(frozen=True, eq=False)
class TraceRow:
    """One sampled point of a run"""
    step: int
    t: float
    energy: float
    alpha: Tuple[float, ...]
    x: Tuple[int, ...]
    sat_count: int
    nae_count: int
    kernels: Optional[Tuple[float, ...]] = None

    def to_dict(self) -> Dict[str, Any]:
        data = {
            'step': self.step,
            't': self.t,
            'energy': self.energy,
            'sat_count': self.sat_count,
            'nae_count': self.nae_count,
            'alpha': list(self.alpha),
            'x': list(self.x),
        }
        if self.kernels is not None:
            data['kernels'] = list(self.kernels)
        return data


@dataclass
class Trace:
    """Sampled rows of a run plus the metadata needed to replay it"""
    num_vars: int
    metadata: Dict[str, Any] = field(default_factory=dict)
    rows: List[TraceRow] = field(default_factory=list)

    def append(self, row: TraceRow):
        if len(row.alpha) != self.num_vars or len(row.x) != self.num_vars:
            raise ValueError(f"Row width {len(row.alpha)} does not match N={self.num_vars}")
        if self.rows and not row.t > self.rows[-1].t:
            raise ValueError(f"Trace times must increase strictly ({row.t} after {self.rows[-1].t})")
        self.rows.append(row)

    @property
    def last(self) -> Optional[TraceRow]:
        return self.rows[-1] if self.rows else None

    def columns(self) -> List[str]:
        n = self.num_vars
        return (['step', 't', 'energy', 'sat_count', 'nae_count']
                + [f'alpha_{i}' for i in range(1, n + 1)]
                + [f'x_{i}' for i in range(1, n + 1)])

    def to_frame(self) -> pd.DataFrame:
        """One column per scalar, alpha_1..alpha_N and x_1..x_N"""
        records = [
            [row.step, row.t, row.energy, row.sat_count, row.nae_count, *row.alpha, *row.x]
            for row in self.rows
        ]
        frame = pd.DataFrame.from_records(records, columns=self.columns())
        if not self.rows:
            return frame
        int_columns = ['step', 'sat_count', 'nae_count'] + [f'x_{i}' for i in range(1, self.num_vars + 1)]
        return frame.astype({name: 'int64' for name in int_columns})

    def __len__(self) -> int:
        return len(self.rows)


def random_initial_state(num_vars: int, params: SystemParams,
                         rng: np.random.Generator, t: float = 0.0) -> PhaseState:
    """alpha_i uniform on [0, 2 pi / omega)"""
    return PhaseState(t, rng.uniform(0.0, params.period, size=num_vars))


def _checked(values: np.ndarray, stage: str) -> np.ndarray:
    if not np.all(np.isfinite(values)):
        raise IntegrationError(f"Non-finite drift at {stage}")
    return values


def rk4_drift_step(rhs: Drift, p: PhaseState, dt: float) -> PhaseState:
    """Classical RK4 on alpha; t advances by dt and the drift sees t, t + dt/2 and t + dt"""
    if dt == 0.0:
        return PhaseState(p.t, p.alpha)
    half = 0.5 * dt
    k1 = _checked(rhs(p), "k1")
    k2 = _checked(rhs(PhaseState(p.t + half, p.alpha + half * k1)), "k2")
    k3 = _checked(rhs(PhaseState(p.t + half, p.alpha + half * k2)), "k3")
    k4 = _checked(rhs(PhaseState(p.t + dt, p.alpha + dt * k3)), "k4")
    return PhaseState(p.t + dt, p.alpha + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4))


def sde_step(rhs: Drift, p: PhaseState, cfg: IntegratorConfig,
             rng: np.random.Generator) -> PhaseState:
    """RK4 drift followed by a_n * sqrt(dt) * xi on each alpha_i"""
    drifted = rk4_drift_step(rhs, p, cfg.dt)
    if cfg.a_n == 0.0:
        return drifted
    noise = cfg.a_n * math.sqrt(cfg.dt) * rng.standard_normal(p.num_vars)
    return PhaseState(drifted.t, drifted.alpha + noise)


def _sample(system, formula: Formula, p: PhaseState, step: int,
            record_kernels: bool) -> TraceRow:
    readout = system.readout(p)
    stats = eval_assignment(formula, readout.assignment)
    kernels = tuple(float(k) for k in system.kernels(p)) if record_kernels else None
    return TraceRow(
        step=step,
        t=p.t,
        energy=float(system.energy(p)),
        alpha=tuple(float(a) for a in p.alpha),
        x=tuple(readout.assignment.as_ints()),
        sat_count=stats.sat_count,
        nae_count=stats.nae_count,
        kernels=kernels,
    )


def integrate(system, formula: Formula, params: SystemParams, cfg: IntegratorConfig,
              initial: Optional[PhaseState] = None,
              observers: Sequence[Observer] = ()) -> Trace:
    """
    Run sde_step from an initial state and sample a row every sample_stride steps.

    Args:
        system: bound dynamics exposing drift(p), energy(p), readout(p) and kernels(p)
        initial: starting state; drawn from the seeded generator when omitted
        observers: callbacks run on every recorded row; any True return stops the run

    Raises:
        IntegrationError: when the state or drift becomes non-finite
    """
    cfg.check_resolution(params)
    rng = seeded_rng(cfg.rng_seed)
    state = initial if initial is not None else random_initial_state(formula.num_vars, params, rng)
    if not state.is_finite():
        raise IntegrationError("Initial state is not finite", step=0, row_index=0)

    trace = Trace(num_vars=formula.num_vars, metadata={
        'system': getattr(system, 'name', 'custom'),
        'seed': cfg.rng_seed,
        'dt': cfg.dt,
        't_end': cfg.t_end,
        'sample_stride': cfg.sample_stride,
        'params': params.to_dict(),
    })

    def record(step: int) -> bool:
        row = _sample(system, formula, state, step, cfg.record_kernels)
        trace.append(row)
        return any(observer(row, trace) for observer in observers)

    if record(0):
        logger.debug("Observer stopped the run at the initial row")
        trace.metadata['steps'] = 0
        return trace

    steps_done = 0
    for step in range(1, cfg.num_steps + 1):
        try:
            state = sde_step(system.drift, state, cfg, rng)
        except IntegrationError as e:
            raise IntegrationError(str(e), step=step, row_index=len(trace)) from e
        if not state.is_finite():
            raise IntegrationError("Non-finite state", step=step, row_index=len(trace))
        steps_done = step
        if step % cfg.sample_stride == 0 and record(step):
            logger.debug(f"Observer stopped the run at step {step} (t={state.t:.3f})")
            break

    trace.metadata['steps'] = steps_done
    return trace
