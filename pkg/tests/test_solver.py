import json
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import triple_gap_closed_form
from greendiag.classify import PotentialSpec, preset
from greendiag.exactalg import BiPoly, UniPoly, matrix_rank
from greendiag.solver import (
    NoSolutionAtThisN,
    NotFound,
    build_residual,
    constraint_system,
    emit_solution,
    latex_solution,
    parse_solution,
    solve,
    solve_for_degrees,
)

PRESETS = ["cn2-gap-1", "cn2-gap-2", "cn2-gap-3"]


def test_residual_constant_closed_form():
    spec = preset("constant", u0=F(7, 3))
    assert build_residual(BiPoly([[1]]), UniPoly([F(7, 3), -1]), spec).is_zero()


def test_residual_wrong_q():
    spec = preset("constant", u0=1)
    assert build_residual(BiPoly([[1]]), UniPoly([0, -1]), spec) == BiPoly([[-4]])


def test_residual_of_closed_form_triple_gap():
    spec = preset("cn2-gap-3")
    slices, Q = triple_gap_closed_form(1, F(1, 2))
    assert build_residual(BiPoly.from_slices(slices), Q, spec).is_zero()


def test_solve_for_degrees_triple_gap():
    spec = preset("cn2-gap-3")
    sol = solve_for_degrees(spec, 3, 3)
    slices, Q = triple_gap_closed_form(1, F(1, 2))
    assert sol.P_poly == BiPoly.from_slices(slices)
    assert sol.Q_poly == Q


def test_solve_for_degrees_one_gap():
    spec = preset("cn2-gap-1")
    sol = solve_for_degrees(spec, 1, 1)
    assert sol.P_poly.deg_p == 1
    assert sol.Q_poly.degree == 3
    assert build_residual(sol.P_poly, sol.Q_poly, spec).is_zero()


def test_below_minimal_n_fails():
    with pytest.raises(NoSolutionAtThisN):
        solve_for_degrees(preset("cn2-gap-3"), 3, 2)


def test_solve_constant():
    sol = solve(preset("constant", u0=5))
    assert sol.P == ((1,),)
    assert sol.Q == (5, -1)
    assert sol.sigma == 1


@pytest.mark.parametrize("w, u", [
    ([1, 0, 0, 0, 1], [0, 1, 2]),
    ([0, 1, 0, 0, 1], [0, 0, 2]),
])
def test_not_found_when_integer_m0_has_no_solution(w, u):
    spec = PotentialSpec(w=UniPoly(w), u=UniPoly(u))
    with pytest.raises(NotFound) as err:
        solve(spec, n_max=3)
    assert len(err.value.trace) == 3
    assert all("M0=2" in line for line in err.value.trace)


def test_solution_without_numeric_map():
    # z^4 + 1 with u = 2 z^2 solves at N = 1 even though no x -> z map is known
    spec = PotentialSpec(w=UniPoly([1, 0, 0, 0, 1]), u=UniPoly([0, 0, 2]))
    sol = solve(spec)
    assert sol.P == ((0, 0, 1), (1,))
    assert sol.Q == (0, -1, 0, -1)
    assert sol.sigma == -1


@pytest.mark.parametrize("name", PRESETS)
def test_degree_laws(name, solved):
    spec, sol = solved(name)
    K = spec.u.degree
    N = sol.N
    assert sol.Q[-1] == -1 and len(sol.Q) == 2 * N + 2
    assert sol.M[N] == 0 and sol.P[N] == (1,)
    assert sol.M[N - 1] == K
    assert all(sol.M[k] <= (N - k) * K for k in range(N + 1))
    assert build_residual(sol.P_poly, sol.Q_poly, spec).is_zero()


@pytest.mark.parametrize("name", PRESETS)
def test_unique_at_minimal_n(name):
    spec = preset(name)
    N = int(name[-1])
    A, _ = constraint_system(spec, N, 1)
    assert matrix_rank(A) == N


def test_non_minimal_n_is_underdetermined():
    # P (p + c) also solves at N + 1, so the constants are not pinned down
    spec = preset("cn2-gap-1")
    A, _ = constraint_system(spec, 2, 1)
    assert matrix_rank(A) < 2


@pytest.mark.parametrize("N", [1, 2, 3])
def test_constant_family_has_free_parameters(N):
    spec = preset("constant", u0=F(3, 2))
    A, _ = constraint_system(spec, N, 0)
    assert matrix_rank(A) < N


@given(st.fractions(min_value=-10, max_value=10, max_denominator=9),
       st.fractions(min_value=-10, max_value=10, max_denominator=9))
@settings(max_examples=25, deadline=None)
def test_constant_family_members_solve(u0, c):
    # P = p + c, Q = (u0 - p)(p + c)^2 describes the same G for p + c > 0
    spec = preset("constant", u0=u0)
    P = BiPoly([[c], [1]])
    Q = UniPoly([u0, -1]) * UniPoly([c, 1]) * UniPoly([c, 1])
    assert build_residual(P, Q, spec).is_zero()


def test_emit_constant():
    doc = emit_solution(solve(preset("constant", u0=5)))
    assert doc["P"] == [["1"]]
    assert doc["Q"] == ["5", "-1"]
    assert doc["N"] == 0 and doc["M"] == [0]


def test_emit_triple_gap_structure(solved):
    spec, sol = solved("cn2-gap-3")
    doc = emit_solution(sol)
    assert len(doc["P"]) == 4 and len(doc["Q"]) == 8
    assert doc["M"] == [3, 2, 1, 0]
    assert doc["sigma"] == -1
    assert doc["spec_hash"] == spec.spec_hash()


@pytest.mark.parametrize("name", ["constant", *PRESETS])
def test_roundtrip(name, solved):
    _, sol = solved(name)
    assert parse_solution(json.loads(json.dumps(emit_solution(sol)))) == sol


def test_parse_rejects_bad_documents():
    with pytest.raises(ValueError):
        parse_solution({"P": [["1"]]})
    with pytest.raises(ValueError):
        parse_solution({"P": [["1"]], "Q": ["1"], "sigma": 3})
    with pytest.raises(ValueError):
        parse_solution({"N": 2, "P": [["1"]], "Q": ["1"]})


def test_determinism():
    a = emit_solution(solve(preset("cn2-gap-2", m=F(3, 2), k2=F(2, 7))))
    b = emit_solution(solve(preset("cn2-gap-2", m=F(3, 2), k2=F(2, 7))))
    assert json.dumps(a) == json.dumps(b)


def test_latex(solved):
    _, sol = solved("cn2-gap-1")
    tex = latex_solution(sol)
    assert r"P_{0}(z) &= -\frac{1}{2} z" in tex
    assert r"Q(p) &= \frac{1}{4} p - p^{3}" in tex
