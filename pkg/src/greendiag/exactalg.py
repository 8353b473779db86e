"""Exact rational arithmetic, dense polynomials and linear solves.

Rationals are :class:`fractions.Fraction` values. Polynomials are immutable
and stored densely, lowest power first, always trimmed.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence, Union

Rational = Fraction
Number = Union[int, Fraction]


class SingularSystem(ArithmeticError):
    """Consistent linear system with free variables."""


class InconsistentSystem(ArithmeticError):
    """Linear system without a solution."""


def parse_rational(text: Union[str, int, Fraction]) -> Fraction:
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int):
        return Fraction(text)
    try:
        return Fraction(str(text).strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"not a rational: {text!r}") from exc


def format_rational(value: Number) -> str:
    """``"n/d"``, or ``"n"`` when the denominator is 1."""
    return str(Fraction(value))


def _trim(coeffs: Iterable[Number]) -> tuple[Fraction, ...]:
    out = [Fraction(c) for c in coeffs]
    while out and out[-1] == 0:
        out.pop()
    return tuple(out)


class UniPoly:
    """Dense univariate polynomial over Q; ``coeffs[i]`` multiplies ``t**i``."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable[Number] = ()):
        self.coeffs = _trim(coeffs)

    @classmethod
    def monomial(cls, power: int, coeff: Number = 1) -> "UniPoly":
        return cls([0] * power + [coeff])

    @property
    def degree(self) -> int | None:
        """``None`` for the zero polynomial."""
        return len(self.coeffs) - 1 if self.coeffs else None

    def is_zero(self) -> bool:
        return not self.coeffs

    def leading(self) -> Fraction:
        return self.coeffs[-1] if self.coeffs else Fraction(0)

    def __getitem__(self, i: int) -> Fraction:
        return self.coeffs[i] if 0 <= i < len(self.coeffs) else Fraction(0)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, (int, Fraction)):
            other = UniPoly([other])
        return isinstance(other, UniPoly) and self.coeffs == other.coeffs

    def __hash__(self) -> int:
        return hash(("UniPoly", self.coeffs))

    def __repr__(self) -> str:
        return f"UniPoly([{', '.join(map(format_rational, self.coeffs))}])"

    def __add__(self, other: "UniPoly | Number") -> "UniPoly":
        if not isinstance(other, UniPoly):
            other = UniPoly([other])
        n = max(len(self.coeffs), len(other.coeffs))
        return UniPoly(self[i] + other[i] for i in range(n))

    __radd__ = __add__

    def __neg__(self) -> "UniPoly":
        return UniPoly(-c for c in self.coeffs)

    def __sub__(self, other: "UniPoly | Number") -> "UniPoly":
        return self + (-other)

    def __rsub__(self, other: Number) -> "UniPoly":
        return (-self) + other

    def __mul__(self, other: "UniPoly | Number") -> "UniPoly":
        if not isinstance(other, UniPoly):
            return UniPoly(c * other for c in self.coeffs)
        if self.is_zero() or other.is_zero():
            return UniPoly()
        out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a:
                for j, b in enumerate(other.coeffs):
                    out[i + j] += a * b
        return UniPoly(out)

    __rmul__ = __mul__

    def deriv(self) -> "UniPoly":
        return UniPoly(i * c for i, c in enumerate(self.coeffs) if i)

    def __call__(self, t):
        acc = 0 * t if not isinstance(t, (int, Fraction)) else Fraction(0)
        for c in reversed(self.coeffs):
            acc = acc * t + (c if isinstance(t, (int, Fraction)) else float(c))
        return acc


class BiPoly:
    """Dense polynomial in ``p`` and ``z``; ``coeffs[n][l]`` multiplies ``p**n z**l``.

    The table is rectangular, ``(deg_p + 1) x (deg_z + 1)``, and re-trimmed on
    construction so the stored degrees always match the contents.
    """

    __slots__ = ("coeffs",)

    def __init__(self, rows: Iterable[Iterable[Number]] = ()):
        table = [[Fraction(c) for c in row] for row in rows]
        width = 0
        for row in table:
            for l in range(len(row) - 1, -1, -1):
                if row[l] != 0:
                    width = max(width, l + 1)
                    break
        while table and all(c == 0 for c in table[-1]):
            table.pop()
        self.coeffs = tuple(
            tuple(row[l] if l < len(row) else Fraction(0) for l in range(width))
            for row in table
        )

    @classmethod
    def from_z(cls, poly: UniPoly) -> "BiPoly":
        return cls([poly.coeffs])

    @classmethod
    def from_p(cls, poly: UniPoly) -> "BiPoly":
        return cls([[c] for c in poly.coeffs])

    @classmethod
    def from_slices(cls, slices: Sequence[UniPoly]) -> "BiPoly":
        return cls([s.coeffs for s in slices])

    @classmethod
    def monomial(cls, n: int, l: int, coeff: Number = 1) -> "BiPoly":
        return cls([[0] * (l + 1)] * n + [[0] * l + [coeff]])

    @property
    def deg_p(self) -> int | None:
        return len(self.coeffs) - 1 if self.coeffs else None

    @property
    def deg_z(self) -> int | None:
        return len(self.coeffs[0]) - 1 if self.coeffs else None

    def is_zero(self) -> bool:
        return not self.coeffs

    def coeff(self, n: int, l: int) -> Fraction:
        if 0 <= n < len(self.coeffs) and 0 <= l < len(self.coeffs[0]):
            return self.coeffs[n][l]
        return Fraction(0)

    def slice_p(self, n: int) -> UniPoly:
        """Coefficient of ``p**n`` as a polynomial in ``z``."""
        return UniPoly(self.coeffs[n]) if 0 <= n < len(self.coeffs) else UniPoly()

    def __eq__(self, other: object) -> bool:
        if isinstance(other, (int, Fraction)):
            other = BiPoly([[other]])
        return isinstance(other, BiPoly) and self.coeffs == other.coeffs

    def __hash__(self) -> int:
        return hash(("BiPoly", self.coeffs))

    def __repr__(self) -> str:
        rows = ", ".join("[" + ", ".join(map(format_rational, r)) + "]" for r in self.coeffs)
        return f"BiPoly([{rows}])"

    def _shape(self) -> tuple[int, int]:
        return len(self.coeffs), (len(self.coeffs[0]) if self.coeffs else 0)

    def __add__(self, other: "BiPoly | Number") -> "BiPoly":
        if not isinstance(other, BiPoly):
            other = BiPoly([[other]])
        (r1, c1), (r2, c2) = self._shape(), other._shape()
        return BiPoly(
            [[self.coeff(n, l) + other.coeff(n, l) for l in range(max(c1, c2))]
             for n in range(max(r1, r2))]
        )

    __radd__ = __add__

    def __neg__(self) -> "BiPoly":
        return BiPoly([[-c for c in row] for row in self.coeffs])

    def __sub__(self, other: "BiPoly | Number") -> "BiPoly":
        return self + (-other)

    def __rsub__(self, other: Number) -> "BiPoly":
        return (-self) + other

    def __mul__(self, other: "BiPoly | Number") -> "BiPoly":
        if not isinstance(other, BiPoly):
            return BiPoly([[c * other for c in row] for row in self.coeffs])
        if self.is_zero() or other.is_zero():
            return BiPoly()
        (r1, c1), (r2, c2) = self._shape(), other._shape()
        out = [[Fraction(0)] * (c1 + c2 - 1) for _ in range(r1 + r2 - 1)]
        for n1, row1 in enumerate(self.coeffs):
            for l1, a in enumerate(row1):
                if not a:
                    continue
                for n2, row2 in enumerate(other.coeffs):
                    dest = out[n1 + n2]
                    for l2, b in enumerate(row2):
                        if b:
                            dest[l1 + l2] += a * b
        return BiPoly(out)

    __rmul__ = __mul__

    def dz(self) -> "BiPoly":
        return BiPoly([[l * c for l, c in enumerate(row) if l] for row in self.coeffs])

    def dp(self) -> "BiPoly":
        return BiPoly([[n * c for c in row] for n, row in enumerate(self.coeffs) if n])

    def __call__(self, p, z):
        acc = None
        for row in reversed(self.coeffs):
            val = UniPoly(row)(z)
            acc = val if acc is None else acc * p + val
        return Fraction(0) if acc is None else acc


def solve_linear_exact(A: Sequence[Sequence[Number]], b: Sequence[Number]) -> list[Fraction]:
    """Solve ``A x = b`` exactly for square or overdetermined consistent ``A``.

    Gauss-Jordan elimination with pivots chosen by floating magnitude. The
    answer is checked by substitution into every original row.

    Raises
    ------
    InconsistentSystem
        No ``x`` satisfies all rows.
    SingularSystem
        The system is consistent but leaves free variables.
    """
    rows = len(A)
    if rows != len(b):
        raise ValueError(f"A has {rows} rows but b has {len(b)} entries")
    cols = len(A[0]) if rows else 0
    if any(len(r) != cols for r in A):
        raise ValueError("ragged matrix")
    M = [[Fraction(v) for v in r] + [Fraction(bi)] for r, bi in zip(A, b)]

    pivots = []
    r = 0
    for c in range(cols):
        best = max(range(r, rows), key=lambda i: abs(float(M[i][c])), default=None)
        if best is None or M[best][c] == 0:
            continue
        M[r], M[best] = M[best], M[r]
        inv = 1 / M[r][c]
        M[r] = [v * inv for v in M[r]]
        for i in range(rows):
            if i != r and M[i][c] != 0:
                f = M[i][c]
                M[i] = [vi - f * vr for vi, vr in zip(M[i], M[r])]
        pivots.append(c)
        r += 1
        if r == rows:
            break

    if any(M[i][cols] != 0 for i in range(r, rows)):
        raise InconsistentSystem(f"rank {r} system with nonzero residual rows")
    if r < cols:
        raise SingularSystem(f"rank {r} < {cols} unknowns")

    x = [Fraction(0)] * cols
    for i, c in enumerate(pivots):
        x[c] = M[i][cols]
    for row, bi in zip(A, b):
        if sum(Fraction(a) * xi for a, xi in zip(row, x)) != bi:
            raise ArithmeticError("back-substitution check failed")
    return x


def matrix_rank(A: Sequence[Sequence[Number]]) -> int:
    M = [[Fraction(v) for v in r] for r in A]
    rank = 0
    cols = len(M[0]) if M else 0
    for c in range(cols):
        pivot = next((i for i in range(rank, len(M)) if M[i][c] != 0), None)
        if pivot is None:
            continue
        M[rank], M[pivot] = M[pivot], M[rank]
        for i in range(rank + 1, len(M)):
            f = M[i][c] / M[rank][c]
            if f:
                M[i] = [vi - f * vr for vi, vr in zip(M[i], M[rank])]
        rank += 1
    return rank


def poly_divmod(a: UniPoly, b: UniPoly) -> tuple[UniPoly, UniPoly]:
    if b.is_zero():
        raise ZeroDivisionError("polynomial division by zero")
    rem = list(a.coeffs)
    db, lead = b.degree, b.leading()
    quot = [Fraction(0)] * max(len(rem) - db, 0)
    for k in range(len(rem) - 1 - db, -1, -1):
        f = rem[k + db] / lead
        quot[k] = f
        if f:
            for i, c in enumerate(b.coeffs):
                rem[k + i] -= f * c
    return UniPoly(quot), UniPoly(rem[:db] if db else ())


def sturm_sequence(poly: UniPoly) -> list[UniPoly]:
    seq = [poly, poly.deriv()]
    while not seq[-1].is_zero():
        seq.append(-poly_divmod(seq[-2], seq[-1])[1])
    return seq[:-1]


def count_roots_below(seq: Sequence[UniPoly], t: Number) -> int:
    """Distinct real roots of ``seq[0]`` in ``(-inf, t)``, from a Sturm sequence."""

    def changes(signs):
        signs = [s for s in signs if s]
        return sum(1 for a, b in zip(signs, signs[1:]) if a != b)

    at_minus_inf = [(-1 if (s.degree % 2) else 1) * (1 if s.leading() > 0 else -1) for s in seq]
    t = Fraction(t)
    at_t = [(v > 0) - (v < 0) for v in (s(t) for s in seq)]
    return changes(at_minus_inf) - changes(at_t)
