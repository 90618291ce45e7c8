"""
CNF data model for the Oscillator SAT Toolbox.
Handles DIMACS I/O, random 3-SAT generation, Boolean/NAE evaluation and exhaustive oracles.
"""

import io
import logging
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from pathlib import Path
from typing import Iterable, Iterator, List, Optional, TextIO, Tuple, Union

import numpy as np

from modules.errors import DimacsParseError, FormulaError, OracleCapError

logger = logging.getLogger(__name__)

DEFAULT_ORACLE_CAP = 24
ORACLE_CHUNK_BITS = 16
SEED_MASK = (1 << 64) - 1

Literal = Tuple[int, int]  # (1-based variable index, sign in {+1, -1})


class Objective(Enum):
    """Objectives understood by the oracle and the solver"""
    SAT = "sat"
    MAX_SAT = "max_sat"
    MAX_NAE = "max_nae"


@dataclass(frozen=True)
class Clause:
    """A disjunction of signed literals over pairwise distinct variables"""
    literals: Tuple[Literal, ...]

    def __post_init__(self):
        if not self.literals:
            raise FormulaError("Clause must contain at least one literal")
        seen = set()
        for var, sign in self.literals:
            if sign not in (1, -1):
                raise FormulaError(f"Literal sign must be +1 or -1, got {sign}")
            if var < 1:
                raise FormulaError(f"Variable index must be >= 1, got {var}")
            if var in seen:
                raise FormulaError(f"Variable {var} appears twice in clause")
            seen.add(var)

    @classmethod
    def from_ints(cls, ints: Iterable[int]) -> 'Clause':
        """Build a clause from DIMACS-style signed integers"""
        literals = []
        for value in ints:
            if value == 0:
                raise FormulaError("Literal 0 is not allowed inside a clause")
            literals.append((abs(value), 1 if value > 0 else -1))
        return cls(tuple(literals))

    def to_ints(self) -> List[int]:
        return [var * sign for var, sign in self.literals]

    @property
    def variables(self) -> Tuple[int, ...]:
        return tuple(var for var, _ in self.literals)

    @property
    def signs(self) -> Tuple[int, ...]:
        return tuple(sign for _, sign in self.literals)

    def __len__(self) -> int:
        return len(self.literals)


@dataclass(frozen=True)
class Formula:
    """
    CNF instance with N variables and M clauses.
    Immutable after construction; the dense sign matrix c_mi is built once on first use.
    """
    num_vars: int
    clauses: Tuple[Clause, ...]

    def __post_init__(self):
        if self.num_vars < 1:
            raise FormulaError(f"Formula needs at least one variable, got {self.num_vars}")
        if not self.clauses:
            raise FormulaError("Formula needs at least one clause")
        object.__setattr__(self, 'clauses', tuple(self.clauses))
        for m, clause in enumerate(self.clauses):
            if len(clause) > 3:
                raise FormulaError(f"Clause {m + 1} has {len(clause)} literals; at most 3 are supported")
            for var in clause.variables:
                if var > self.num_vars:
                    raise FormulaError(f"Clause {m + 1} references variable {var} > N={self.num_vars}")

    @classmethod
    def from_ints(cls, num_vars: int, clauses: Iterable[Iterable[int]]) -> 'Formula':
        return cls(num_vars, tuple(Clause.from_ints(c) for c in clauses))

    @property
    def num_clauses(self) -> int:
        return len(self.clauses)

    def coefficient(self, m: int, i: int) -> int:
        """c_mi for 0-based clause m and 0-based variable i (0 if absent)"""
        return int(self.sign_matrix[m, i])

    @cached_property
    def sign_matrix(self) -> np.ndarray:
        """Dense M x N matrix of c_mi in {-1, 0, +1}"""
        matrix = np.zeros((self.num_clauses, self.num_vars), dtype=np.int8)
        for m, clause in enumerate(self.clauses):
            for var, sign in clause.literals:
                matrix[m, var - 1] = sign
        matrix.setflags(write=False)
        return matrix

    @cached_property
    def literal_counts(self) -> np.ndarray:
        counts = np.array([len(c) for c in self.clauses], dtype=np.int64)
        counts.setflags(write=False)
        return counts

    def is_three_uniform(self) -> bool:
        """True when every clause has exactly 3 distinct variables"""
        return all(len(c) == 3 for c in self.clauses)

    def validate(self, strict_3: bool = False) -> 'Formula':
        """Apply the optional strict-3 check; base invariants hold by construction"""
        if strict_3:
            for m, clause in enumerate(self.clauses):
                if len(clause) != 3:
                    raise FormulaError(f"Clause {m + 1} has {len(clause)} literals; strict-3 requires exactly 3")
        return self


@dataclass(frozen=True)
class Assignment:
    """Boolean assignment x_1..x_N"""
    bits: Tuple[bool, ...]

    def __post_init__(self):
        object.__setattr__(self, 'bits', tuple(bool(b) for b in self.bits))

    @classmethod
    def from_index(cls, index: int, num_vars: int) -> 'Assignment':
        """Assignment whose binary expansion (x_1 most significant) is index"""
        return cls(tuple(bool((index >> (num_vars - 1 - i)) & 1) for i in range(num_vars)))

    def as_array(self) -> np.ndarray:
        return np.array(self.bits, dtype=np.int8)

    def as_ints(self) -> List[int]:
        return [int(b) for b in self.bits]

    def complement(self) -> 'Assignment':
        return Assignment(tuple(not b for b in self.bits))

    def to_string(self) -> str:
        return ''.join('1' if b else '0' for b in self.bits)

    def __len__(self) -> int:
        return len(self.bits)


@dataclass(frozen=True)
class ClauseStats:
    """Per-clause SAT and NAE flags with their counts"""
    sat_flags: Tuple[bool, ...]
    nae_flags: Tuple[bool, ...]

    @property
    def sat_count(self) -> int:
        return sum(self.sat_flags)

    @property
    def nae_count(self) -> int:
        return sum(self.nae_flags)

    def value(self, objective: Objective) -> int:
        return self.nae_count if objective is Objective.MAX_NAE else self.sat_count


@dataclass(frozen=True)
class OracleResult:
    """Ground truth from exhaustive enumeration"""
    objective: Objective
    best_value: int
    best_assignment: Assignment
    optimal_count: int
    satisfiable: bool
    num_clauses: int = 0
    assignments_checked: int = 0

    def to_dict(self) -> dict:
        return {
            'objective': self.objective.value,
            'best_value': self.best_value,
            'num_clauses': self.num_clauses,
            'best_assignment': self.best_assignment.as_ints(),
            'optimal_count': self.optimal_count,
            'satisfiable': self.satisfiable,
            'assignments_checked': self.assignments_checked,
        }


# DIMACS I/O

def _iter_lines(text: Union[str, TextIO]) -> Iterator[str]:
    if isinstance(text, str):
        return iter(io.StringIO(text))
    return iter(text)


def _build_clause(ints: List[int], line_number: int, allow_duplicates: bool) -> Clause:
    """Resolve duplicates per policy and build the clause"""
    if not ints:
        raise DimacsParseError("empty clause", line_number)
    signs_by_var = {}
    kept = []
    for value in ints:
        var, sign = abs(value), (1 if value > 0 else -1)
        if var in signs_by_var:
            if signs_by_var[var] != sign:
                raise DimacsParseError(f"tautological clause (variable {var} with both signs)", line_number)
            if not allow_duplicates:
                raise DimacsParseError(f"duplicate literal {value} in clause", line_number)
            logger.warning(f"Deduplicated literal {value} on line {line_number}")
            continue
        signs_by_var[var] = sign
        kept.append(value)
    try:
        return Clause.from_ints(kept)
    except Exception as e:
        raise DimacsParseError(str(e), line_number) from e


def parse_dimacs(text: Union[str, TextIO], allow_duplicates: bool = False,
                 strict_3: bool = False) -> Formula:
    """
    Parse DIMACS CNF text into a Formula.

    Args:
        text: DIMACS content or an open text stream
        allow_duplicates: deduplicate repeated identical literals instead of rejecting them
        strict_3: require every clause to have exactly 3 literals

    Tautologies (x and not-x in one clause) are always rejected.
    """
    header: Optional[Tuple[int, int]] = None
    clauses: List[Clause] = []
    current: List[int] = []
    current_line = 0

    for line_number, raw_line in enumerate(_iter_lines(text), start=1):
        line = raw_line.strip()
        if not line or line.startswith('c'):
            continue
        if line.startswith('%'):
            # SATLIB files end with "%" followed by a stray "0"
            break
        tokens = line.split()
        if tokens[0] == 'p':
            if header is not None:
                raise DimacsParseError("duplicate problem line", line_number)
            if len(tokens) != 4 or tokens[1] != 'cnf':
                raise DimacsParseError(f"malformed header '{line}'", line_number)
            try:
                header = (int(tokens[2]), int(tokens[3]))
            except ValueError:
                raise DimacsParseError(f"malformed header '{line}'", line_number)
            if header[0] < 1 or header[1] < 1:
                raise DimacsParseError(f"header needs N >= 1 and M >= 1, got '{line}'", line_number)
            continue
        if header is None:
            raise DimacsParseError("clause data before 'p cnf' header", line_number)

        for token in tokens:
            try:
                value = int(token)
            except ValueError:
                raise DimacsParseError(f"invalid literal '{token}'", line_number)
            if value == 0:
                clauses.append(_build_clause(current, current_line or line_number, allow_duplicates))
                current = []
                current_line = 0
                continue
            if abs(value) > header[0]:
                raise DimacsParseError(f"literal {value} out of range for N={header[0]}", line_number)
            if not current:
                current_line = line_number
            current.append(value)

    if header is None:
        raise DimacsParseError("missing 'p cnf N M' header")
    if current:
        raise DimacsParseError("last clause is not terminated by 0", current_line)
    if len(clauses) != header[1]:
        raise DimacsParseError(f"header declares {header[1]} clauses but {len(clauses)} were found")

    try:
        formula = Formula(header[0], tuple(clauses))
        return formula.validate(strict_3=strict_3)
    except DimacsParseError:
        raise
    except FormulaError as e:
        raise DimacsParseError(str(e)) from e


def serialize_dimacs(formula: Formula) -> str:
    """Write a Formula as DIMACS CNF text"""
    lines = [f"p cnf {formula.num_vars} {formula.num_clauses}"]
    for clause in formula.clauses:
        lines.append(' '.join(str(v) for v in clause.to_ints()) + ' 0')
    return '\n'.join(lines) + '\n'


def read_dimacs_file(path: Union[str, Path], **kwargs) -> Formula:
    """Read a DIMACS file (UTF-8/ASCII)"""
    path = Path(path)
    with open(path, 'r', encoding='utf-8') as f:
        formula = parse_dimacs(f, **kwargs)
    logger.info(f"Loaded {path.name}: N={formula.num_vars}, M={formula.num_clauses}")
    return formula


def write_dimacs_file(formula: Formula, path: Union[str, Path]):
    path = Path(path)
    with open(path, 'w', encoding='utf-8') as f:
        f.write(serialize_dimacs(formula))
    logger.info(f"Wrote {path.name}: N={formula.num_vars}, M={formula.num_clauses}")


# Instance generation

def seeded_rng(seed: int) -> np.random.Generator:
    """Generator for any integer seed; negative and oversized seeds wrap modulo 2^64"""
    return np.random.default_rng(int(seed) & SEED_MASK)


def generate_random_3sat(n_vars: int, n_clauses: int, seed: int) -> Formula:
    """
    Uniform random 3-SAT: each clause picks 3 distinct variables and independent uniform signs.
    Deterministic given the seed.
    """
    if n_vars < 3:
        raise FormulaError(f"Random 3-SAT needs at least 3 variables, got {n_vars}")
    if n_clauses < 1:
        raise FormulaError(f"Random 3-SAT needs at least one clause, got {n_clauses}")
    rng = seeded_rng(seed)
    clauses = []
    for _ in range(n_clauses):
        variables = rng.choice(n_vars, size=3, replace=False) + 1
        signs = rng.integers(0, 2, size=3) * 2 - 1
        clauses.append(Clause(tuple((int(v), int(s)) for v, s in zip(variables, signs))))
    return Formula(n_vars, tuple(clauses))


# Evaluation

def _true_literal_counts(formula: Formula, bits: np.ndarray) -> np.ndarray:
    """Number of true literals per clause for a (B, N) block of 0/1 assignments"""
    signs = formula.sign_matrix
    positive = (signs > 0).astype(np.int32)
    negative = (signs < 0).astype(np.int32)
    bits = bits.astype(np.int32)
    return bits @ positive.T + (1 - bits) @ negative.T


def eval_assignment(formula: Formula, assignment: Assignment) -> ClauseStats:
    """Evaluate SAT and NAE satisfaction of every clause"""
    if len(assignment) != formula.num_vars:
        raise FormulaError(f"Assignment has {len(assignment)} bits but formula has N={formula.num_vars}")
    true_counts = _true_literal_counts(formula, assignment.as_array()[None, :])[0]
    sat_flags = true_counts >= 1
    nae_flags = sat_flags & (true_counts < formula.literal_counts)
    return ClauseStats(tuple(bool(f) for f in sat_flags), tuple(bool(f) for f in nae_flags))


def literal_value(bit: bool, sign: int) -> bool:
    """Truth value of a signed literal"""
    return bool(bit) if sign > 0 else not bit


def nae_xor_form(li: bool, lj: bool, lk: bool) -> bool:
    """(l_i xor l_j) or (l_j xor l_k) or (l_k xor l_i)"""
    return (li != lj) or (lj != lk) or (lk != li)


def nae_and_form(li: bool, lj: bool, lk: bool) -> bool:
    """(l_i or l_j or l_k) and (not l_i or not l_j or not l_k)"""
    return (li or lj or lk) and ((not li) or (not lj) or (not lk))


# Exhaustive oracle

def _index_block(start: int, stop: int, num_vars: int) -> np.ndarray:
    indices = np.arange(start, stop, dtype=np.int64)
    shifts = np.arange(num_vars - 1, -1, -1, dtype=np.int64)
    return ((indices[:, None] >> shifts[None, :]) & 1).astype(np.int8)


def brute_force(formula: Formula, objective: Objective,
                cap: int = DEFAULT_ORACLE_CAP) -> OracleResult:
    """
    Enumerate all 2^N assignments in binary order (x_1 most significant) and
    return the optimum; ties resolve to the lexicographically smallest assignment.
    The space is scanned in fixed-size blocks; the result does not depend on the block size.
    """
    n = formula.num_vars
    if n > cap:
        raise OracleCapError(f"Oracle cap is N <= {cap}, formula has N={n}")

    total = 1 << n
    block = 1 << ORACLE_CHUNK_BITS
    best_value = -1
    best_index = 0
    optimal_count = 0

    for start in range(0, total, block):
        stop = min(start + block, total)
        bits = _index_block(start, stop, n)
        true_counts = _true_literal_counts(formula, bits)
        if objective is Objective.MAX_NAE:
            satisfied = (true_counts >= 1) & (true_counts < formula.literal_counts[None, :])
        else:
            satisfied = true_counts >= 1
        values = satisfied.sum(axis=1)

        block_best = int(values.max())
        if block_best > best_value:
            best_value = block_best
            best_index = start + int(np.argmax(values))
            optimal_count = int(np.count_nonzero(values == block_best))
        elif block_best == best_value:
            optimal_count += int(np.count_nonzero(values == block_best))

    result = OracleResult(
        objective=objective,
        best_value=best_value,
        best_assignment=Assignment.from_index(best_index, n),
        optimal_count=optimal_count,
        satisfiable=best_value == formula.num_clauses,
        num_clauses=formula.num_clauses,
        assignments_checked=total,
    )
    logger.debug(f"Oracle {objective.value}: best={best_value}/{formula.num_clauses}, "
                 f"optimal_count={optimal_count}")
    return result
