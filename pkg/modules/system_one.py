"""
System I: gradient flow whose zero-energy states are 3-SAT solutions.
V = sum_m A K_m^2 and d(alpha_i)/dt = -(dV/d(alpha_i) + 1).
"""

import logging
from dataclasses import dataclass

import numpy as np

from modules.formula import Formula
from modules.kernel import PhaseState, SystemParams, kernels_from_cos, thetas

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EnergySample:
    """V at time t"""
    t: float
    value: float


def energy_from_theta(formula: Formula, params: SystemParams, theta: np.ndarray) -> float:
    kernels, _ = kernels_from_cos(formula, params, np.cos(theta))
    return float(params.A * np.dot(kernels, kernels))


def grad_from_theta(formula: Formula, params: SystemParams, theta: np.ndarray) -> np.ndarray:
    """
    dV/d(alpha_i) = sum_m 2A K_m c_mi (K_m^(i)/2) sin(theta_i) * omega.
    The omega factor comes from d cos(omega (t + alpha))/d(alpha).
    """
    kernels, loo = kernels_from_cos(formula, params, np.cos(theta))
    coupling = (formula.sign_matrix * loo * kernels[:, None]).sum(axis=0)
    return params.A * params.omega * np.sin(theta) * coupling


def energy_v(formula: Formula, params: SystemParams, p: PhaseState) -> float:
    """Lyapunov energy V; zero exactly when every clause kernel vanishes"""
    return energy_from_theta(formula, params, thetas(p, params))


def energy_sample(formula: Formula, params: SystemParams, p: PhaseState) -> EnergySample:
    return EnergySample(p.t, energy_v(formula, params, p))


def grad_v(formula: Formula, params: SystemParams, p: PhaseState) -> np.ndarray:
    """Analytic gradient of V with respect to alpha"""
    return grad_from_theta(formula, params, thetas(p, params))


def rhs_system1(formula: Formula, params: SystemParams, p: PhaseState) -> np.ndarray:
    """d(alpha)/dt = -(grad V + 1); equals -1 in every component once V = 0"""
    return -(grad_v(formula, params, p) + 1.0)
