"""
System II: injection-locked phase dynamics for Max-NAE-3-SAT.
Full time-dependent drift, the averaged energy E over 3-literal clauses, its two
averaged dynamics, and the discrete-phase clause energies at the {0, pi} corners.
"""

import itertools
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np

from modules.errors import CornerError, FormulaError
from modules.formula import Assignment, Formula, eval_assignment
from modules.kernel import PhaseState, S2Mode, SystemParams, kernels_from_cos, thetas

logger = logging.getLogger(__name__)

CORNER_TOLERANCE = 1e-9
# 2^(-2N+1) at N=3; the averaged prefactor once kernels carry no absent-variable factors
CLAUSE_PREFACTOR_EXPONENT = -5
# cos(2phi_i - 2phi_j) families collapse to this constant per clause at the corners (N=3)
CORNER_CONSTANT = Fraction(9, 8)
PAIR_TERM_AMPLITUDE = Fraction(15, 2)
SIGN_PATTERNS: Tuple[Tuple[int, int, int], ...] = tuple(itertools.product((1, -1), repeat=3))
CORNERS: Tuple[Tuple[float, float, float], ...] = tuple(itertools.product((0.0, math.pi), repeat=3))


@dataclass(frozen=True)
class CornerPhases:
    """Binarized phases; every entry exactly 0 or pi"""
    phi: Tuple[float, ...]

    def __post_init__(self):
        snapped = tuple(snap_corner(value) for value in self.phi)
        object.__setattr__(self, 'phi', snapped)

    def to_assignment(self) -> Assignment:
        """phi = 0 reads as x = 1, phi = pi as x = 0"""
        return Assignment(tuple(value == 0.0 for value in self.phi))

    def to_string(self) -> str:
        return ''.join('0' if value == 0.0 else 'p' for value in self.phi)


@dataclass(frozen=True)
class ClauseEnergyRow:
    """Single-clause energy at one corner"""
    signs: Tuple[int, int, int]
    corner: CornerPhases
    energy: float
    energy_over_pi_a: Fraction
    nae_satisfied: bool

    def signs_string(self) -> str:
        return ''.join('+' if s > 0 else '-' for s in self.signs)


@dataclass(frozen=True)
class TermList:
    """
    Every cosine term of the averaged energy in the form coeff * cos(weights . phi).
    centers holds the variable whose outer sum produced the term. prefactor_exponent is the
    faithful-kernel exponent -2N+1; normalized kernels use the 3-variable exponent instead.
    """
    weights: np.ndarray
    coeffs: np.ndarray
    centers: np.ndarray
    prefactor_exponent: int

    @property
    def num_terms(self) -> int:
        return self.coeffs.shape[0]

    def exponent(self, params: SystemParams) -> int:
        return CLAUSE_PREFACTOR_EXPONENT if params.kernel_normalized else self.prefactor_exponent

    def prefactor(self, params: SystemParams) -> float:
        return math.pi * params.A * 2.0 ** self.exponent(params)


def snap_corner(value: float) -> float:
    """Map a value within tolerance of 0 or pi onto that corner, else raise CornerError"""
    if abs(value) <= CORNER_TOLERANCE:
        return 0.0
    if abs(value - math.pi) <= CORNER_TOLERANCE:
        return math.pi
    raise CornerError(f"Phase {value!r} is not a {{0, pi}} corner")


# Full dynamics

def rhs_full(formula: Formula, params: SystemParams, p: PhaseState) -> np.ndarray:
    """
    Time-dependent drift:
    d(alpha_i)/dt = -A sin(theta_i) sum_m c_mi (K_m^(i))^2 (1 - c_mi cos theta_i)/2
                    - sin(2 theta_i) A_s cos(2 omega t)
    """
    theta = thetas(p, params)
    cos_theta = np.cos(theta)
    _, loo = kernels_from_cos(formula, params, cos_theta)
    signs = formula.sign_matrix
    own = 0.5 * (1.0 - signs * cos_theta[None, :])
    coupling = (signs * loo ** 2 * own).sum(axis=0)
    injection = np.sin(2.0 * theta) * params.A_s * math.cos(2.0 * params.omega * p.t)
    return -params.A * np.sin(theta) * coupling - injection


# Averaged energy

def build_term_list(formula: Formula) -> TermList:
    """
    Expand every 3-literal clause into its 21 cosine terms (7 per center variable).

    Raises:
        FormulaError: if a clause does not have exactly 3 distinct variables
    """
    if not formula.is_three_uniform():
        raise FormulaError("Averaged System II energy needs every clause to hold exactly 3 distinct variables")

    n = formula.num_vars
    weights: List[np.ndarray] = []
    coeffs: List[float] = []
    centers: List[int] = []

    def add(coeff: float, center: int, **w: Tuple[int, int]):
        row = np.zeros(n, dtype=np.int64)
        for var, weight in w.values():
            row[var] += weight
        weights.append(row)
        coeffs.append(coeff)
        centers.append(center)

    for clause in formula.clauses:
        literals = [(var - 1, sign) for var, sign in clause.literals]
        for position, (i, ci) in enumerate(literals):
            (j, cj), (k, ck) = [lit for q, lit in enumerate(literals) if q != position]
            add(2 * ci * cj * (1 + ck ** 2 / 2), i, a=(i, 1), b=(j, -1))
            add(2 * ci * ck * (1 + cj ** 2 / 2), i, a=(i, 1), b=(k, -1))
            add(ci * cj * ck ** 2 / 2, i, a=(i, 1), b=(j, 1), c=(k, -2))
            add(ci * ck * cj ** 2 / 2, i, a=(i, 1), b=(k, 1), c=(j, -2))
            add(ci ** 2 * ck ** 2 * (1 + cj ** 2 / 2) / 8, i, a=(i, 2), b=(k, -2))
            add(ci ** 2 * cj * ck / 2, i, a=(i, 2), b=(j, -1), c=(k, -1))
            add(ci ** 2 * cj ** 2 * (1 + ck ** 2 / 2) / 8, i, a=(i, 2), b=(j, -2))

    return TermList(
        weights=np.array(weights, dtype=np.int64),
        coeffs=np.array(coeffs, dtype=float),
        centers=np.array(centers, dtype=np.int64),
        prefactor_exponent=-2 * n + 1,
    )


def term_energy(terms: TermList, params: SystemParams, phases: np.ndarray) -> float:
    phases = np.asarray(phases, dtype=float)
    clause_part = terms.prefactor(params) * float(np.dot(terms.coeffs, np.cos(terms.weights @ phases)))
    injection = 0.5 * math.pi * params.A_s * float(np.cos(2.0 * phases).sum())
    return clause_part - injection


def term_drift(terms: TermList, params: SystemParams, phases: np.ndarray,
               mode: S2Mode) -> np.ndarray:
    """
    averaged_gradient: the exact -dE/d(phi).
    averaged_printed: each term differentiated with respect to its center variable only.
    """
    phases = np.asarray(phases, dtype=float)
    sines = terms.coeffs * np.sin(terms.weights @ phases)
    if mode is S2Mode.AVERAGED_GRADIENT:
        clause_part = terms.weights.T @ sines
    elif mode is S2Mode.AVERAGED_PRINTED:
        center_weight = terms.weights[np.arange(terms.num_terms), terms.centers]
        clause_part = np.bincount(terms.centers, weights=center_weight * sines,
                                  minlength=phases.shape[0])
    else:
        raise ValueError(f"{mode} is not an averaged mode")
    return terms.prefactor(params) * clause_part - math.pi * params.A_s * np.sin(2.0 * phases)


def energy_e(formula: Formula, params: SystemParams, alpha_phases: Sequence[float]) -> float:
    """Averaged energy E at phases phi = omega * alpha"""
    return term_energy(build_term_list(formula), params, np.asarray(alpha_phases, dtype=float))


def rhs_averaged(formula: Formula, params: SystemParams, alpha_phases: Sequence[float],
                 mode: Optional[S2Mode] = None) -> np.ndarray:
    """Averaged dynamics d(phi)/dt; mode defaults to params.s2_mode, falling back to averaged_printed"""
    if mode is None:
        mode = params.s2_mode if params.s2_mode is not S2Mode.FULL else S2Mode.AVERAGED_PRINTED
    return term_drift(build_term_list(formula), params, np.asarray(alpha_phases, dtype=float), mode)


# Discrete-phase reduction

def pair_term_T(c_i: int, c_j: int, phi_i: float, phi_j: float) -> float:
    """T_ij = c_i c_j (6 cos(phi_i - phi_j) + 3/2 cos(phi_i + phi_j))"""
    return c_i * c_j * (6.0 * math.cos(phi_i - phi_j) + 1.5 * math.cos(phi_i + phi_j))


def clause_beta(signs: Sequence[int], phases: Sequence[float]) -> float:
    """T_ij + T_jk + T_ki for one clause"""
    (ci, cj, ck), (pi_, pj, pk) = signs, phases
    return pair_term_T(ci, cj, pi_, pj) + pair_term_T(cj, ck, pj, pk) + pair_term_T(ck, ci, pk, pi_)


def _check_clause_signs(signs: Sequence[int]):
    if len(signs) != 3 or any(s not in (1, -1) for s in signs):
        raise FormulaError(f"Clause signs must be three values in {{+1, -1}}, got {tuple(signs)}")


def discrete_clause_energy(signs: Sequence[int], corner: Sequence[float],
                           params: SystemParams) -> float:
    """
    Single-clause energy at a corner with N=3 normalization:
    pi A 2^-5 (T_ij + T_jk + T_ki + 9/8) - (3/2) pi A_s.

    Raises:
        CornerError: if a phase is not within tolerance of 0 or pi
    """
    _check_clause_signs(signs)
    phi = corner.phi if isinstance(corner, CornerPhases) else CornerPhases(tuple(corner)).phi
    clause_part = clause_beta(signs, phi) + float(CORNER_CONSTANT)
    return math.pi * params.A * clause_part / 32.0 - 1.5 * math.pi * params.A_s


def _exact_energy_over_pi_a(signs: Sequence[int], corner: CornerPhases,
                            params: SystemParams) -> Fraction:
    """energy / (pi A) with the clause part kept exact; A_s/A is rounded to a short rational"""
    total = CORNER_CONSTANT
    phi = corner.phi
    for a, b in ((0, 1), (1, 2), (2, 0)):
        same = 1 if phi[a] == phi[b] else -1
        total += signs[a] * signs[b] * same * PAIR_TERM_AMPLITUDE
    value = total / 32
    if params.A_s and params.A > 0:
        value -= Fraction(3, 2) * Fraction(params.A_s / params.A).limit_denominator(10 ** 9)
    return value


def nae_energy_levels(params: SystemParams) -> Tuple[float, float]:
    """(E1, E2): single-clause corner energy with the NAE clause violated and satisfied"""
    injection = 1.5 * math.pi * params.A_s
    e1 = 189.0 / 256.0 * math.pi * params.A - injection
    e2 = -51.0 / 256.0 * math.pi * params.A - injection
    return e1, e2


def clause_energy_table(params: SystemParams) -> List[ClauseEnergyRow]:
    """All 8 sign patterns by 8 corners, sign pattern outermost"""
    rows = []
    for signs in SIGN_PATTERNS:
        clause = Formula.from_ints(3, [[signs[0] * 1, signs[1] * 2, signs[2] * 3]])
        for phases in CORNERS:
            corner = CornerPhases(phases)
            stats = eval_assignment(clause, corner.to_assignment())
            rows.append(ClauseEnergyRow(
                signs=signs,
                corner=corner,
                energy=discrete_clause_energy(signs, corner, params),
                energy_over_pi_a=_exact_energy_over_pi_a(signs, corner, params),
                nae_satisfied=stats.nae_flags[0],
            ))
    logger.debug(f"Built clause energy table with {len(rows)} rows")
    return rows
