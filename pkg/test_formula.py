"""
Tests for the CNF data model, DIMACS I/O, evaluation and the exhaustive oracle.
"""

import io
import itertools
import logging

import pytest
from hypothesis import given
from hypothesis import strategies as st

from modules.errors import DimacsParseError, FormulaError, OracleCapError
from modules.formula import (Assignment, Clause, Formula, Objective, brute_force, eval_assignment,
                             generate_random_3sat, literal_value, nae_and_form, nae_xor_form,
                             parse_dimacs, seeded_rng, serialize_dimacs)

logger = logging.getLogger(__name__)

A12_SAT_OPTIMAL_COUNT = 16
A12_NAE_OPTIMAL_COUNT = 2
A12_FIRST_OPTIMUM = (0, 0, 0, 1, 1, 1)


@st.composite
def formulas(draw, max_vars=6, max_clauses=8):
    n = draw(st.integers(min_value=1, max_value=max_vars))
    m = draw(st.integers(min_value=1, max_value=max_clauses))
    clauses = []
    for _ in range(m):
        size = draw(st.integers(min_value=1, max_value=min(3, n)))
        variables = draw(st.lists(st.integers(1, n), min_size=size, max_size=size, unique=True))
        signs = draw(st.lists(st.sampled_from([1, -1]), min_size=size, max_size=size))
        clauses.append([v * s for v, s in zip(variables, signs)])
    return Formula.from_ints(n, clauses)


# Parsing and serialization

def test_parse_single_clause():
    """Header plus one clause"""
    formula = parse_dimacs("p cnf 3 1\n1 -2 3 0")
    assert formula.num_vars == 3
    assert formula.clauses == (Clause(((1, 1), (2, -1), (3, 1))),)


def test_parse_skips_comments():
    formula = parse_dimacs("c note\np cnf 2 1\n-1 2 0")
    assert formula == Formula.from_ints(2, [[-1, 2]])


def test_parse_a12_fixture(a12):
    """Bundled instance has N=6, M=10 and clause 4 = (-2, -5, -6)"""
    assert a12.num_vars == 6
    assert a12.num_clauses == 10
    assert a12.clauses[3].to_ints() == [-2, -5, -6]
    assert a12.is_three_uniform()


def test_parse_multiline_clause_and_percent_terminator():
    text = "c satlib style\np cnf 4 2\n1 -2\n 3 0\n-4 2 0\n%\n0\n"
    formula = parse_dimacs(text)
    assert [c.to_ints() for c in formula.clauses] == [[1, -2, 3], [-4, 2]]


def test_parse_accepts_stream():
    formula = parse_dimacs(io.StringIO("p cnf 1 1\n1 0\n"))
    assert formula == Formula.from_ints(1, [[1]])


@pytest.mark.parametrize("text, fragment", [
    ("p cnf x 1\n1 0\n", "malformed header"),
    ("p cnf 3\n1 0\n", "malformed header"),
    ("1 2 0\n", "before 'p cnf' header"),
    ("p cnf 2 1\n1 3 0\n", "out of range"),
    ("p cnf 2 2\n1 2 0\n", "declares 2 clauses"),
    ("p cnf 2 1\n1 2\n", "not terminated"),
    ("p cnf 2 1\n1 -1 0\n", "tautological"),
    ("p cnf 2 1\n1 1 0\n", "duplicate literal"),
    ("p cnf 2 1\n0\n", "empty clause"),
    ("p cnf 4 1\n1 2 3 4 0\n", "at most 3"),
    ("p cnf 2 1\np cnf 2 1\n1 0\n", "duplicate problem line"),
])
def test_parse_errors(text, fragment):
    with pytest.raises(DimacsParseError, match=fragment):
        parse_dimacs(text)


def test_parse_error_carries_line_number():
    with pytest.raises(DimacsParseError) as info:
        parse_dimacs("c header next\np cnf 2 1\n1 5 0\n")
    assert info.value.line_number == 3


def test_parse_deduplicates_when_allowed(caplog):
    with caplog.at_level(logging.WARNING):
        formula = parse_dimacs("p cnf 2 1\n1 1 2 0\n", allow_duplicates=True)
    assert formula.clauses[0].to_ints() == [1, 2]
    assert "Deduplicated" in caplog.text


def test_permissive_mode_still_rejects_tautology():
    with pytest.raises(DimacsParseError, match="tautological"):
        parse_dimacs("p cnf 2 1\n1 -1 2 0\n", allow_duplicates=True)


def test_strict_3_flag():
    with pytest.raises(DimacsParseError, match="strict-3"):
        parse_dimacs("p cnf 3 1\n1 2 0\n", strict_3=True)
    assert parse_dimacs("p cnf 3 1\n1 2 3 0\n", strict_3=True).is_three_uniform()


@pytest.mark.parametrize("formula, expected", [
    (Formula.from_ints(3, [[1, -2, 3]]), "p cnf 3 1\n1 -2 3 0\n"),
    (Formula.from_ints(1, [[1]]), "p cnf 1 1\n1 0\n"),
])
def test_serialize(formula, expected):
    assert serialize_dimacs(formula) == expected


def test_a12_round_trip(a12, a12_path):
    assert parse_dimacs(serialize_dimacs(a12)) == a12
    original = [line.split() for line in a12_path.read_text().splitlines() if not line.startswith('c')]
    written = [line.split() for line in serialize_dimacs(a12).splitlines()]
    assert original == written


@given(formulas())
def test_parse_serialize_identity(formula):
    assert parse_dimacs(serialize_dimacs(formula)) == formula


# Data model

def test_clause_rejects_repeated_variable():
    with pytest.raises(FormulaError):
        Clause.from_ints([1, -1])


def test_formula_rejects_out_of_range_variable():
    with pytest.raises(FormulaError):
        Formula.from_ints(2, [[1, 3]])


def test_sign_matrix_and_coefficient():
    formula = Formula.from_ints(4, [[1, -3], [2, 3, -4]])
    assert formula.sign_matrix.tolist() == [[1, 0, -1, 0], [0, 1, 1, -1]]
    assert formula.coefficient(1, 3) == -1
    assert formula.coefficient(0, 1) == 0
    assert not formula.sign_matrix.flags.writeable


def test_assignment_from_index_is_msb_first():
    assert Assignment.from_index(6, 3).as_ints() == [1, 1, 0]
    assert Assignment.from_index(1, 3).to_string() == "001"
    assert Assignment((True, False)).complement().as_ints() == [0, 1]


# Random generation

def test_generator_is_deterministic():
    assert generate_random_3sat(6, 10, 42) == generate_random_3sat(6, 10, 42)


def test_generator_three_variables_uses_all():
    formula = generate_random_3sat(3, 100, 7)
    assert all(set(c.variables) == {1, 2, 3} for c in formula.clauses)


@given(st.integers(min_value=0, max_value=2 ** 63 - 1))
def test_generator_clauses_are_distinct_variable_triples(seed):
    formula = generate_random_3sat(6, 10, seed)
    assert formula.num_clauses == 10
    assert all(len(set(c.variables)) == 3 for c in formula.clauses)


@pytest.mark.parametrize("seed", [-1, -5, -(2 ** 70)])
def test_generator_wraps_negative_seeds(seed):
    assert generate_random_3sat(5, 4, seed) == generate_random_3sat(5, 4, seed % 2 ** 64)


def test_seeded_rng_matches_masked_seed():
    assert seeded_rng(-5).random() == seeded_rng(2 ** 64 - 5).random()
    assert seeded_rng(2 ** 64 + 3).random() == seeded_rng(3).random()


def test_generator_rejects_too_few_variables():
    with pytest.raises(FormulaError):
        generate_random_3sat(2, 5, 0)


# Evaluation

def test_eval_mixed_clause_is_nae():
    """(x1 or x2 or x4) over N=6 with only x1 true"""
    formula = Formula.from_ints(6, [[1, 2, 4]])
    stats = eval_assignment(formula, Assignment((1, 0, 0, 0, 0, 0)))
    assert stats.sat_flags == (True,)
    assert stats.nae_flags == (True,)


def test_eval_all_true_clause_is_not_nae(positive_clause):
    stats = eval_assignment(positive_clause, Assignment((1, 1, 1)))
    assert stats.sat_count == 1
    assert stats.nae_count == 0


def test_eval_a12_all_zero(a12):
    assert eval_assignment(a12, Assignment((0,) * 6)).sat_count == 7


def test_eval_length_mismatch(a12):
    with pytest.raises(FormulaError):
        eval_assignment(a12, Assignment((0, 1)))


@given(formulas(), st.data())
def test_counts_are_ordered(formula, data):
    bits = data.draw(st.lists(st.booleans(), min_size=formula.num_vars, max_size=formula.num_vars))
    stats = eval_assignment(formula, Assignment(tuple(bits)))
    assert stats.nae_count <= stats.sat_count <= formula.num_clauses
    assert all(s for s, n in zip(stats.sat_flags, stats.nae_flags) if n)


def test_nae_identity_exhaustive():
    """XOR form equals the (OR) and (OR of negations) form for every assignment and sign pattern"""
    for bits in itertools.product((False, True), repeat=3):
        for signs in itertools.product((1, -1), repeat=3):
            literals = [literal_value(b, s) for b, s in zip(bits, signs)]
            assert nae_xor_form(*literals) == nae_and_form(*literals)
            formula = Formula.from_ints(3, [[signs[0] * 1, signs[1] * 2, signs[2] * 3]])
            assert eval_assignment(formula, Assignment(bits)).nae_flags[0] == nae_and_form(*literals)


# Oracle

def test_oracle_single_clause(positive_clause):
    sat = brute_force(positive_clause, Objective.SAT)
    assert sat.satisfiable
    assert sat.optimal_count == 7
    assert sat.best_assignment.as_ints() == [0, 0, 1]

    nae = brute_force(positive_clause, Objective.MAX_NAE)
    assert nae.best_value == 1
    assert nae.optimal_count == 6


def test_oracle_a12(a12):
    sat = brute_force(a12, Objective.SAT)
    assert sat.satisfiable
    assert sat.best_value == 10
    assert sat.optimal_count == A12_SAT_OPTIMAL_COUNT
    assert tuple(sat.best_assignment.as_ints()) == A12_FIRST_OPTIMUM

    nae = brute_force(a12, Objective.MAX_NAE)
    assert nae.best_value == 10
    assert nae.optimal_count == A12_NAE_OPTIMAL_COUNT
    assert tuple(nae.best_assignment.as_ints()) == A12_FIRST_OPTIMUM
    assert eval_assignment(a12, nae.best_assignment.complement()).nae_count == 10


def test_oracle_unsatisfiable():
    formula = Formula.from_ints(1, [[1], [-1]])
    result = brute_force(formula, Objective.SAT)
    assert not result.satisfiable
    assert result.best_value == 1
    assert result.optimal_count == 2


def test_oracle_cap():
    formula = Formula.from_ints(5, [[1, 2, 5]])
    with pytest.raises(OracleCapError):
        brute_force(formula, Objective.SAT, cap=4)


@given(formulas())
def test_oracle_sat_matches_max_sat(formula):
    sat = brute_force(formula, Objective.SAT)
    max_sat = brute_force(formula, Objective.MAX_SAT)
    assert sat.satisfiable == (max_sat.best_value == formula.num_clauses)
    assert eval_assignment(formula, max_sat.best_assignment).sat_count == max_sat.best_value


@given(formulas())
def test_oracle_matches_naive_enumeration(formula):
    n = formula.num_vars
    values = [eval_assignment(formula, Assignment.from_index(k, n)).nae_count for k in range(2 ** n)]
    result = brute_force(formula, Objective.MAX_NAE)
    assert result.best_value == max(values)
    assert result.optimal_count == values.count(max(values))
    assert result.best_assignment == Assignment.from_index(values.index(max(values)), n)
