"""Polynomial ansatz solver for the Green function diagonal.

The diagonal is sought as ``G = sigma * P(p, z) / (2 sqrt(Q(p)))`` and must
annihilate the transformed equation

    R = 2 P (P_zz w + P_z w_z / 2) - P_z^2 w - 4 (u - p) P^2 + 4 Q.

Coefficients are found from the top power of ``p`` downwards:

1. ``P_N = 1``; for ``n = N-1 .. 0`` the ``p^(N+n+1)`` slice of ``R`` fixes
   the non-constant part of ``P_n``.  The constants ``c_n = P_{n,0}`` stay free.
2. The ``z^l, l >= 1`` rows of the ``p^N`` slice, together with any rows that
   overflow the degree bound in step 1, form a linear system in the ``c_n``.
3. Every ``q_j`` is read off the ``z^0`` row of ``R`` and the full residual is
   checked to vanish exactly.

The free constants enter the constraint rows affinely, so each row is
recovered exactly by probing at ``c = 0`` and ``c = e_j``; an extra probe
guards the affinity assumption.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .classify import Classification, Inadmissible, PotentialSpec, admissible, n_min
from .exactalg import (
    BiPoly,
    InconsistentSystem,
    SingularSystem,
    UniPoly,
    format_rational,
    parse_rational,
    solve_linear_exact,
)


class NoSolutionAtThisN(ArithmeticError):
    pass


class NotFound(ArithmeticError):
    def __init__(self, trace: list[str]):
        super().__init__("no polynomial solution found:\n  " + "\n  ".join(trace))
        self.trace = trace


@dataclass(frozen=True)
class SolutionForm:
    N: int
    M: tuple[int, ...]
    P: tuple[tuple[Fraction, ...], ...]
    Q: tuple[Fraction, ...]
    sigma: int = 1
    spec_hash: str = ""
    meta: dict = field(default_factory=dict, compare=False)

    @classmethod
    def from_polys(cls, P: BiPoly, Q: UniPoly, sigma: int = 1, spec_hash: str = "") -> "SolutionForm":
        N = P.deg_p
        slices = [P.slice_p(n) for n in range(N + 1)]
        return cls(
            N=N,
            M=tuple(s.degree or 0 for s in slices),
            P=tuple(s.coeffs or (Fraction(0),) for s in slices),
            Q=tuple(Q.coeffs),
            sigma=sigma,
            spec_hash=spec_hash,
        )

    @property
    def P_poly(self) -> BiPoly:
        return BiPoly(self.P)

    @property
    def Q_poly(self) -> UniPoly:
        return UniPoly(self.Q)

    def with_sigma(self, sigma: int) -> "SolutionForm":
        return SolutionForm(self.N, self.M, self.P, self.Q, sigma, self.spec_hash, self.meta)


def build_residual(P: BiPoly, Q: UniPoly, spec: PotentialSpec) -> BiPoly:
    w, u = BiPoly.from_z(spec.w), BiPoly.from_z(spec.u)
    dw = BiPoly.from_z(spec.w.deriv())
    Pz = P.dz()
    Pzz = Pz.dz()
    p = BiPoly.monomial(1, 0)
    two = Fraction(2)
    return (
        two * P * (Pzz * w + Pz * dw * Fraction(1, 2))
        - Pz * Pz * w
        - 4 * (u - p) * P * P
        + 4 * BiPoly.from_p(Q)
    )


def _row_bound(spec: PotentialSpec, N: int, K: int) -> int:
    """Upper bound on the z-degree of any residual slice during the sweep."""
    return 2 * N * K + max(spec.w.degree, K) + 1


def _sweep(spec: PotentialSpec, N: int, K: int, consts: Sequence[Fraction]):
    """Step 1 for given constants; returns P slices and the overflow rows."""
    bound = _row_bound(spec, N, K)
    slices = [UniPoly() for _ in range(N + 1)]
    slices[N] = UniPoly([1])
    overflow: list[Fraction] = []
    zero_q = UniPoly()
    for n in range(N - 1, -1, -1):
        Mn = (N - n) * K
        base = build_residual(BiPoly.from_slices(slices), zero_q, spec)
        known = base.slice_p(N + n + 1)
        # linear response of the p^(N+n+1) slice to each unknown P_{n,l}
        cols = []
        for l in range(1, Mn + 1):
            probe = list(slices)
            probe[n] = UniPoly.monomial(l)
            diff = build_residual(BiPoly.from_slices(probe), zero_q, spec) - base
            cols.append(diff.slice_p(N + n + 1))
        A = [[col[r] for col in cols] for r in range(1, Mn + 1)]
        rhs = [-known[r] for r in range(1, Mn + 1)]
        try:
            coeffs = solve_linear_exact(A, rhs) if Mn else []
        except (SingularSystem, InconsistentSystem) as exc:
            raise NoSolutionAtThisN(f"p^{N + n + 1} sweep for P_{n}: {exc}") from None
        slices[n] = UniPoly([consts[n], *coeffs])
        # rows above the degree bound cannot be absorbed by P_n
        overflow.extend(known[r] for r in range(Mn + 1, bound + 1))
    return slices, overflow


def _constraints(spec: PotentialSpec, N: int, K: int, consts: Sequence[Fraction]) -> list[Fraction]:
    slices, overflow = _sweep(spec, N, K, consts)
    R = build_residual(BiPoly.from_slices(slices), UniPoly(), spec)
    top = R.slice_p(N)
    return overflow + [top[r] for r in range(1, _row_bound(spec, N, K) + 1)]


def constraint_system(spec: PotentialSpec, N: int, K: int):
    """Linear system ``A c = b`` for the constants ``c_n = P_{n,0}``, n < N."""
    zero = [Fraction(0)] * N
    f0 = _constraints(spec, N, K, zero)
    columns = []
    for j in range(N):
        e = list(zero)
        e[j] = Fraction(1)
        fj = _constraints(spec, N, K, e)
        columns.append([a - b for a, b in zip(fj, f0)])
    A = [[col[i] for col in columns] for i in range(len(f0))]
    b = [-v for v in f0]
    # constraint rows must be affine in c
    check = [Fraction(j + 2) for j in range(N)]
    predicted = [f + sum(a * c for a, c in zip(row, check)) for f, row in zip(f0, A)]
    if N and _constraints(spec, N, K, check) != predicted:
        raise NoSolutionAtThisN("constraint rows are not affine in the free constants")
    return A, b


def extract_Q(P: BiPoly, spec: PotentialSpec) -> UniPoly:
    """``q_j`` from the ``z^0`` row of the residual with ``Q = 0``."""
    R0 = build_residual(P, UniPoly(), spec)
    return UniPoly(-R0.coeff(j, 0) / 4 for j in range((R0.deg_p or 0) + 1))


def solve_for_degrees(spec: PotentialSpec, M0: int, N: int, K: int | None = None) -> SolutionForm:
    if K is None:
        K = spec.u.degree or 0
    if K < 1:
        raise Inadmissible("solve_for_degrees needs a non-constant potential")
    if N < n_min(M0, K):
        raise NoSolutionAtThisN(f"N = {N} is below the minimum {n_min(M0, K)} for M0 = {M0}")
    A, b = constraint_system(spec, N, K)
    try:
        consts = solve_linear_exact(A, b)
    except SingularSystem as exc:
        raise NoSolutionAtThisN(f"p^{N} system underdetermined: {exc}") from None
    except InconsistentSystem as exc:
        raise NoSolutionAtThisN(f"p^{N} system inconsistent: {exc}") from None
    slices, overflow = _sweep(spec, N, K, consts)
    if any(overflow):
        raise NoSolutionAtThisN("degree-bound overflow rows do not vanish")
    P = BiPoly.from_slices(slices)
    if (slices[0].degree or 0) != M0:
        raise NoSolutionAtThisN(f"p^0 slice has degree {slices[0].degree}, expected M0 = {M0}")
    Q = extract_Q(P, spec)
    if not build_residual(P, Q, spec).is_zero():
        raise NoSolutionAtThisN("residual does not vanish")
    return SolutionForm.from_polys(P, Q, spec_hash=spec.spec_hash())


def canonical_constant(spec: PotentialSpec) -> SolutionForm:
    """The ``N = 0`` member ``P = 1, Q = u0 - p`` of the constant-potential family."""
    P = BiPoly([[1]])
    Q = UniPoly([spec.u[0], -1])
    if not build_residual(P, Q, spec).is_zero():
        raise ArithmeticError("canonical constant solution failed its residual check")
    return SolutionForm.from_polys(P, Q, sigma=1, spec_hash=spec.spec_hash())


def solve(spec: PotentialSpec, n_max: int | None = None, m0_max: int = 12,
          cls: Classification | None = None) -> SolutionForm:
    from .oracle import sigma_fix

    cls = cls or admissible(spec, m0_max)
    if cls.degenerate:
        sol = canonical_constant(spec)
        return sol.with_sigma(sigma_fix(sol, spec))
    trace = []
    for M0 in cls.M0_candidates:
        lo = n_min(M0, cls.K)
        hi = n_max if n_max is not None else lo + 3
        for N in range(lo, hi + 1):
            try:
                sol = solve_for_degrees(spec, M0, N, cls.K)
            except NoSolutionAtThisN as exc:
                trace.append(f"M0={M0} N={N}: {exc}")
                continue
            return sol.with_sigma(sigma_fix(sol, spec))
    raise NotFound(trace or ["no (M0, N) pairs to try"])


def verify_exact(sol: SolutionForm, spec: PotentialSpec) -> bool:
    return build_residual(sol.P_poly, sol.Q_poly, spec).is_zero()


def emit_solution(sol: SolutionForm) -> dict:
    return {
        "N": sol.N,
        "M": list(sol.M),
        "P": [[format_rational(c) for c in row] for row in sol.P],
        "Q": [format_rational(c) for c in sol.Q],
        "sigma": sol.sigma,
        "spec_hash": sol.spec_hash,
    }


def parse_solution(doc: dict) -> SolutionForm:
    try:
        P = BiPoly([[parse_rational(c) for c in row] for row in doc["P"]])
        Q = UniPoly(parse_rational(c) for c in doc["Q"])
        sigma = int(doc.get("sigma", 1))
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed solution document: {exc}") from None
    if sigma not in (1, -1):
        raise ValueError("sigma must be +1 or -1")
    if P.is_zero():
        raise ValueError("P must not be zero")
    sol = SolutionForm.from_polys(P, Q, sigma, doc.get("spec_hash", ""))
    if "N" in doc and int(doc["N"]) != sol.N:
        raise ValueError(f"N = {doc['N']} disagrees with the P table (deg_p = {sol.N})")
    return sol


def dumps_solution(sol: SolutionForm) -> str:
    return json.dumps(emit_solution(sol), indent=2)


def _latex_poly(coeffs: Sequence[Fraction], var: str) -> str:
    terms = []
    for i, c in enumerate(coeffs):
        if c == 0:
            continue
        mag = abs(c)
        if mag.denominator == 1:
            num = str(mag.numerator)
        else:
            num = rf"\frac{{{mag.numerator}}}{{{mag.denominator}}}"
        mono = "" if i == 0 else (var if i == 1 else f"{var}^{{{i}}}")
        body = num if not mono else (mono if mag == 1 else f"{num} {mono}")
        terms.append(("-" if c < 0 else "+", body))
    if not terms:
        return "0"
    sign, first = terms[0]
    out = ("-" if sign == "-" else "") + first
    return out + "".join(f" {s} {b}" for s, b in terms[1:])


def latex_solution(sol: SolutionForm) -> str:
    lines = [r"\begin{align*}"]
    for n, row in enumerate(sol.P):
        lines.append(rf"  P_{{{n}}}(z) &= {_latex_poly(row, 'z')} \\")
    lines.append(rf"  Q(p) &= {_latex_poly(sol.Q, 'p')}")
    lines.append(r"\end{align*}")
    sign = "" if sol.sigma == 1 else "-"
    lines.append(rf"G(p,x) = {sign}\frac{{\sum_n p^n P_n(z)}}{{2\sqrt{{Q(p)}}}}")
    return "\n".join(lines)
