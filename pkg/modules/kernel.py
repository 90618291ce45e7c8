"""
Clause kernel layer shared by both oscillator systems.
Evaluates K_m = prod_i (1 - c_mi cos theta_i)/2 and its leave-one-out products without division.
"""

import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Any, Dict, Sequence, Tuple

import numpy as np

from modules.errors import ConfigError, FormulaError
from modules.formula import Formula

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi


class S2Mode(Enum):
    """System II dynamics variants"""
    FULL = "full"
    AVERAGED_PRINTED = "averaged_printed"
    AVERAGED_GRADIENT = "averaged_gradient"


@dataclass(frozen=True, eq=False)
class PhaseState:
    """Simulation time t plus the unwrapped time-lag variables alpha_i"""
    t: float
    alpha: np.ndarray

    def __post_init__(self):
        alpha = np.array(self.alpha, dtype=float)
        if alpha.ndim != 1:
            raise ValueError(f"alpha must be one-dimensional, got shape {alpha.shape}")
        alpha.setflags(write=False)
        object.__setattr__(self, 'alpha', alpha)
        object.__setattr__(self, 't', float(self.t))

    @property
    def num_vars(self) -> int:
        return self.alpha.shape[0]

    def is_finite(self) -> bool:
        return math.isfinite(self.t) and bool(np.all(np.isfinite(self.alpha)))

    def shifted(self, delta: float) -> 'PhaseState':
        """Joint shift (t, alpha) -> (t + delta, alpha - delta)"""
        return PhaseState(self.t + delta, self.alpha - delta)


@dataclass(frozen=True)
class SystemParams:
    """
    Model parameters shared by both systems.
    A is the clause coupling, A_s the second-harmonic injection strength.
    """
    A: float = 1.0
    A_s: float = 0.0
    omega: float = TWO_PI
    a_n: float = 5e-4
    dt: float = 1e-3
    kernel_normalized: bool = False
    s2_mode: S2Mode = S2Mode.FULL

    def __post_init__(self):
        if not self.A >= 0.0:
            raise ConfigError(f"A must be non-negative, got {self.A}")
        if not self.A_s >= 0.0:
            raise ConfigError(f"A_s must be non-negative, got {self.A_s}")
        if not self.omega > 0.0:
            raise ConfigError(f"omega must be positive, got {self.omega}")
        if not self.a_n >= 0.0:
            raise ConfigError(f"noise amplitude must be non-negative, got {self.a_n}")
        if not self.dt > 0.0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if isinstance(self.s2_mode, str):
            object.__setattr__(self, 's2_mode', S2Mode(self.s2_mode))

    @classmethod
    def system_one_defaults(cls, **overrides) -> 'SystemParams':
        """Simulation values used for System I runs"""
        return replace(cls(A=10.0 / TWO_PI, A_s=0.0), **overrides)

    @classmethod
    def system_two_defaults(cls, **overrides) -> 'SystemParams':
        """Simulation values used for System II runs; kernels drop the absent-variable factors"""
        return replace(cls(A=5.0 / TWO_PI, A_s=0.01 / TWO_PI, kernel_normalized=True), **overrides)

    @property
    def period(self) -> float:
        return TWO_PI / self.omega

    def require_positive_coupling(self) -> 'SystemParams':
        if not self.A > 0.0:
            raise ConfigError(f"A must be positive for solving, got {self.A}")
        return self

    def to_dict(self) -> Dict[str, Any]:
        return {
            'A': self.A,
            'A_s': self.A_s,
            'omega': self.omega,
            'a_n': self.a_n,
            'dt': self.dt,
            'kernel_normalized': self.kernel_normalized,
            's2_mode': self.s2_mode.value,
        }


def theta(p: PhaseState, params: SystemParams, i: int) -> float:
    """Oscillator argument theta_i = omega * (t + alpha_i) for 0-based variable i"""
    return params.omega * (p.t + float(p.alpha[i]))


def thetas(p: PhaseState, params: SystemParams) -> np.ndarray:
    return params.omega * (p.t + p.alpha)


def kernel_scale(formula: Formula, params: SystemParams) -> np.ndarray:
    """Per-clause factor 2^-(N-L) from absent variables (1 when normalized)"""
    if params.kernel_normalized:
        return np.ones(formula.num_clauses)
    return np.exp2(-(formula.num_vars - formula.literal_counts).astype(float))


def literal_factors(signs: np.ndarray, cos_theta: np.ndarray) -> np.ndarray:
    """(1 - c_mi cos theta_i)/2 for present literals, 1 where c_mi = 0"""
    factors = 0.5 * (1.0 - signs * cos_theta[None, :])
    return np.where(signs != 0, factors, 1.0)


def exclusive_products(factors: np.ndarray) -> np.ndarray:
    """out[m, i] = prod_{j != i} factors[m, j], built from prefix and suffix products"""
    ones = np.ones((factors.shape[0], 1))
    prefix = np.cumprod(np.hstack([ones, factors[:, :-1]]), axis=1)
    suffix = np.cumprod(np.hstack([ones, factors[:, :0:-1]]), axis=1)[:, ::-1]
    return prefix * suffix


def kernels_from_cos(formula: Formula, params: SystemParams,
                     cos_theta: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Vectorized kernels for all clauses.

    Returns:
        (K, K_loo): K has shape (M,), K_loo has shape (M, N) with
        K_loo[m, i] = prod_{j != i} (1 - c_mj cos theta_j)/2. Entries with c_mi = 0 carry no meaning.
    """
    scale = kernel_scale(formula, params)
    factors = literal_factors(formula.sign_matrix, cos_theta)
    loo = exclusive_products(factors) * scale[:, None]
    kernels = np.prod(factors, axis=1) * scale
    return kernels, loo


def clause_kernels(formula: Formula, p: PhaseState, params: SystemParams) -> np.ndarray:
    """K_m for every clause"""
    kernels, _ = kernels_from_cos(formula, params, np.cos(thetas(p, params)))
    return kernels


def kernel_value(formula: Formula, m: int, p: PhaseState, params: SystemParams) -> float:
    """K_m for 0-based clause m; absent variables contribute 1/2 unless normalized"""
    clause = formula.clauses[m]
    value = 1.0
    for var, sign in clause.literals:
        value *= 0.5 * (1.0 - sign * math.cos(theta(p, params, var - 1)))
    if not params.kernel_normalized:
        value *= 0.5 ** (formula.num_vars - len(clause))
    return value


def kernel_leave_one_out(formula: Formula, m: int, p: PhaseState,
                         params: SystemParams, i: int) -> float:
    """
    K_m^(i) = prod_{j != i} (1 - c_mj cos theta_j)/2 for 0-based variable i present in clause m.
    K_m / (1 - c_mi cos theta_i) equals K_m^(i)/2, so no quotient is ever formed.
    """
    clause = formula.clauses[m]
    if (i + 1) not in clause.variables:
        raise FormulaError(f"Variable {i + 1} is absent from clause {m + 1}")
    value = 1.0
    for var, sign in clause.literals:
        if var - 1 == i:
            continue
        value *= 0.5 * (1.0 - sign * math.cos(theta(p, params, var - 1)))
    if not params.kernel_normalized:
        value *= 0.5 ** (formula.num_vars - len(clause))
    return value


def corner_state(phases: Sequence[float], params: SystemParams, t: float = 0.0) -> PhaseState:
    """State whose oscillator arguments at time t equal the given phases"""
    alpha = np.asarray(phases, dtype=float) / params.omega - t
    return PhaseState(t, alpha)
