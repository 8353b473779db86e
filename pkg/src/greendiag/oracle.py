"""Numeric checks of a closed-form Green function diagonal.

Three independent routes are compared:

* the closed form ``sigma P(p, z(x)) / (2 sqrt Q(p))``;
* the nonlinear equation ``2 G G'' - G'^2 - 4 (U - p) G^2 + 1 = 0`` with
  derivatives taken by finite differences in ``x``;
* ``phi(x) psi(x)`` for the Bloch solutions of ``f'' = (U - p) f`` normalised
  to unit Wronskian ``phi' psi - psi' phi = 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .classify import PotentialSpec
from .exactalg import UniPoly, count_roots_below, sturm_sequence

RK4_STEPS = 4096
RICHARDSON_TOL = 1e-9
SEGMENTS = 64
EDGE_TOL = 1e-9
ASYMPTOTE_P = -1e6

DEFAULT_TOLS = {
    "floquet": 1e-8,
    "residual3": 1e-6,
    "asymptote": 1e-3,
    "band_trace": 1e-5,
    "det": 1e-9,
}


class BranchError(ValueError):
    """``Q(p) <= 0``: ``p`` lies in a band or on an edge."""


class InsideBand(ValueError):
    pass


class DegenerateEigenvectors(ValueError):
    pass


class AsymptoteFailure(ArithmeticError):
    pass


class RootCountMismatch(ArithmeticError):
    pass


# ---------------------------------------------------------------- closed form

@lru_cache(maxsize=64)
def _sturm(q_coeffs: tuple) -> tuple:
    return tuple(sturm_sequence(UniPoly(q_coeffs)))


def branch_sign(Q: Sequence[Fraction], p: float) -> int:
    """Sign of the continuation of ``sqrt Q`` from ``p -> -inf`` to a real ``p``.

    Every band crossed contributes two simple roots and a factor ``-1``.
    """
    below = count_roots_below(_sturm(tuple(Q)), Fraction(p))
    return -1 if (below // 2) % 2 else 1


def _z_slices_at(sol, p: float) -> np.ndarray:
    """Coefficients in ``z`` of ``P(p, z)`` at fixed ``p``, lowest first."""
    width = max(len(row) for row in sol.P)
    out = np.zeros(width)
    for n, row in enumerate(sol.P):
        out[: len(row)] += np.array([float(c) for c in row]) * p ** n
    return out


def eval_G(sol, spec: PotentialSpec, x, p: float, branch: bool = True):
    """``sigma P(p, z(x)) / (2 sqrt Q(p))``, scalar or vectorised in ``x``.

    With ``branch`` the square root follows its continuation from below the
    spectrum, so values in every gap match the resolvent.
    """
    q = UniPoly(sol.Q)(Fraction(p))
    if q <= 0:
        raise BranchError(f"Q({p}) = {float(q):.3e} <= 0")
    sign = sol.sigma * (branch_sign(sol.Q, p) if branch else 1)
    if all(len(row) == 1 for row in sol.P):
        z = np.zeros(np.shape(x)) if np.ndim(x) else 0.0
    else:
        z = spec.z_of_x(x)
    Pz = np.polynomial.polynomial.polyval(z, _z_slices_at(sol, p))
    G = sign * Pz / (2.0 * math.sqrt(float(q)))
    return G if np.ndim(x) else float(G)


def sigma_fix(sol, spec: PotentialSpec, x: float = 0.3, tol: float = DEFAULT_TOLS["asymptote"]) -> int:
    """Sign making ``G * 2 sqrt(-p) -> +1`` as ``p -> -inf``."""
    # the limit does not depend on z, so potentials without a numeric map use z = 0
    z = spec.z_of_x(x) if spec.map_id else 0.0
    P = np.polynomial.polynomial.polyval(z, _z_slices_at(sol, ASYMPTOTE_P))
    Q = float(UniPoly(sol.Q)(Fraction(ASYMPTOTE_P)))
    if Q <= 0:
        raise AsymptoteFailure(f"Q({ASYMPTOTE_P:g}) = {Q:.3e} <= 0")
    scaled = P / math.sqrt(Q) * math.sqrt(-ASYMPTOTE_P)
    if abs(abs(scaled) - 1.0) > tol:
        raise AsymptoteFailure(f"|G| 2 sqrt(-p) = {abs(scaled):.6f} at p = {ASYMPTOTE_P:g}")
    return 1 if scaled > 0 else -1


def residual3_numeric(sol, spec: PotentialSpec, x, p: float, h: float = 1e-3):
    """``|2 G G'' - G'^2 - 4 (U - p) G^2 + 1|`` with 4th-order central differences."""
    xs = np.asarray(x, dtype=float)
    g = [eval_G(sol, spec, xs + k * h, p) for k in (-2, -1, 0, 1, 2)]
    g = [np.asarray(v, dtype=float) for v in g]
    d1 = (g[0] - 8 * g[1] + 8 * g[3] - g[4]) / (12 * h)
    d2 = (-g[0] + 16 * g[1] - 30 * g[2] + 16 * g[3] - g[4]) / (12 * h * h)
    U = np.asarray(spec.potential(xs), dtype=float)
    res = np.abs(2 * g[2] * d2 - d1 * d1 - 4 * (U - p) * g[2] ** 2 + 1)
    return res if np.ndim(x) else float(res)


# ---------------------------------------------------------------- linear ODE

def _rk4(Vnodes: np.ndarray, h: float, state: Sequence[float], record: bool = False):
    """Integrate ``f' = g, g' = V f`` over ``len(Vnodes)//2`` steps.

    ``Vnodes`` holds ``U - p`` at the half-step nodes.  ``state`` is a flat
    list of ``(f, g)`` pairs integrated together.
    """
    V = Vnodes.tolist()
    s = list(state)
    npair = len(s) // 2
    h2, h6 = 0.5 * h, h / 6.0
    traj = [tuple(s)] if record else None
    for j in range(0, len(V) - 1, 2):
        v0, vh, v1 = V[j], V[j + 1], V[j + 2]
        for i in range(npair):
            f, g = s[2 * i], s[2 * i + 1]
            k1f, k1g = g, v0 * f
            k2f, k2g = g + h2 * k1g, vh * (f + h2 * k1f)
            k3f, k3g = g + h2 * k2g, vh * (f + h2 * k2f)
            k4f, k4g = g + h * k3g, v1 * (f + h * k3f)
            s[2 * i] = f + h6 * (k1f + 2 * k2f + 2 * k3f + k4f)
            s[2 * i + 1] = g + h6 * (k1g + 2 * k2g + 2 * k3g + k4g)
        if record:
            traj.append(tuple(s))
    return traj if record else s


def _period(spec: PotentialSpec, period: float | None) -> float:
    if period is not None:
        return float(period)
    if spec.period is not None:
        return spec.period
    if spec.is_constant:
        return 1.0  # any length is a period of a constant
    raise ValueError("potential has no period; pass one explicitly")


@dataclass(frozen=True)
class Monodromy:
    entries: np.ndarray
    p: float
    period: float
    steps: int = RK4_STEPS
    drift: float = 0.0
    det: float = 1.0

    @property
    def trace(self) -> float:
        return float(self.entries[0, 0] + self.entries[1, 1])


def monodromy_of(U: Callable, period: float, p: float, steps: int = RK4_STEPS,
                 x0: float = 0.0, richardson: bool = True) -> Monodromy:
    """Period map of ``f'' = (U - p) f`` from ``x0`` to ``x0 + period``.

    Fixed-step RK4 over ``SEGMENTS`` pieces whose matrices are multiplied
    exactly, so ``det`` is not swamped by cancellation when the entries are
    large.  With ``richardson`` the step is halved until two
    successive matrices agree to ``RICHARDSON_TOL`` (relative), at most four
    times.
    """

    def at(n):
        nodes = x0 + np.linspace(0.0, period, 2 * n + 1)
        V = np.asarray(U(nodes), dtype=float) - p
        seg = max(1, n // SEGMENTS)
        prod = [[Fraction(1), Fraction(0)], [Fraction(0), Fraction(1)]]
        for j in range(0, n, seg):
            f1, g1, f2, g2 = _rk4(V[2 * j: 2 * min(j + seg, n) + 1], period / n, [1.0, 0.0, 0.0, 1.0])
            S = [[Fraction(f1), Fraction(f2)], [Fraction(g1), Fraction(g2)]]
            prod = [[sum(S[i][k] * prod[k][c] for k in range(2)) for c in range(2)] for i in range(2)]
        (a, b), (c, d) = prod
        return np.array([[float(a), float(b)], [float(c), float(d)]]), float(a * d - b * c)

    M, det = at(steps)
    drift = 0.0
    if richardson:
        for _ in range(4):
            finer, det = at(2 * steps)
            drift = float(np.max(np.abs(finer - M)) / max(1.0, np.max(np.abs(finer))))
            M, steps = finer, 2 * steps
            if drift < RICHARDSON_TOL:
                break
    return Monodromy(M, float(p), float(period), steps, drift, det)


def monodromy(spec: PotentialSpec, p: float, period: float | None = None,
              steps: int = RK4_STEPS, richardson: bool = True) -> Monodromy:
    return monodromy_of(spec.potential, _period(spec, period), p, steps, richardson=richardson)


def _eigvec(M: np.ndarray, lam: float) -> np.ndarray:
    a, b = M[0]
    c, d = M[1]
    v1 = np.array([b, lam - a])
    v2 = np.array([lam - d, c])
    v = v1 if np.hypot(*v1) >= np.hypot(*v2) else v2
    return v / np.hypot(*v)


@dataclass
class FloquetPair:
    x: np.ndarray
    phi: np.ndarray
    dphi: np.ndarray
    psi: np.ndarray
    dpsi: np.ndarray
    multiplier: float
    mono: Monodromy = field(repr=False)

    @property
    def wronskian(self) -> np.ndarray:
        return self.dphi * self.psi - self.dpsi * self.phi


def floquet_pair(spec: PotentialSpec, p: float, x, period: float | None = None,
                 steps: int = RK4_STEPS) -> FloquetPair:
    """Bloch solutions at points ``x`` with ``phi' psi - psi' phi = 1``.

    ``phi`` has multiplier ``|lambda| > 1`` (decays towards ``-inf``), ``psi``
    the reciprocal one.  ``phi`` is integrated forward from 0 and ``psi``
    backward from one period, the stable direction for each.
    """
    T = _period(spec, period)
    mono = monodromy(spec, p, T, steps)
    tr = mono.trace
    if abs(tr) <= 2.0:
        raise InsideBand(f"|trace| = {abs(tr):.12f} <= 2 at p = {p}")
    if abs(abs(tr) - 2.0) < EDGE_TOL:
        raise DegenerateEigenvectors(f"band edge at p = {p}")
    lam = 0.5 * (tr + math.copysign(math.sqrt(tr * tr - 4.0), tr))
    M = mono.entries
    v_phi, v_psi = _eigvec(M, lam), _eigvec(M, 1.0 / lam)
    W = v_phi[1] * v_psi[0] - v_psi[1] * v_phi[0]
    v_phi = v_phi / W

    n = mono.steps
    h = T / n
    nodes = np.linspace(0.0, T, 2 * n + 1)
    V = np.asarray(spec.potential(nodes), dtype=float) - p
    fwd = np.array(_rk4(V, h, list(v_phi), record=True))
    bwd = np.array(_rk4(V[::-1].copy(), -h, list(v_psi / lam), record=True))[::-1]

    xs = np.atleast_1d(np.asarray(x, dtype=float))
    red = np.mod(xs, T)
    idx = np.minimum((red // h).astype(int), n - 1)
    out = np.empty((len(xs), 4))
    for i, (xr, j) in enumerate(zip(red, idx)):
        lo, hi = j * h, (j + 1) * h
        a = _partial_step(spec, p, lo, xr - lo, fwd[j])
        b = _partial_step(spec, p, hi, xr - hi, bwd[j + 1])
        out[i] = (a[0], a[1], b[0], b[1])
    # phi, psi pick up the multiplier per period; the product does not
    shift = np.floor_divide(xs, T)
    out[:, 0:2] *= (lam ** shift)[:, None]
    out[:, 2:4] *= (lam ** -shift)[:, None]
    return FloquetPair(xs, out[:, 0], out[:, 1], out[:, 2], out[:, 3], lam, mono)


def _partial_step(spec, p, x0, dx, state):
    if dx == 0.0:
        return tuple(state)
    V = np.asarray(spec.potential(np.array([x0, x0 + dx / 2, x0 + dx])), dtype=float) - p
    return tuple(_rk4(V, dx, list(state)))


def floquet_green_diag(spec: PotentialSpec, p: float, x, period: float | None = None):
    """Green function diagonal ``phi(x) psi(x)`` from the Bloch pair."""
    pair = floquet_pair(spec, p, x, period)
    G = pair.phi * pair.psi
    return G if np.ndim(x) else float(G[0])


# ---------------------------------------------------------------- band edges

def real_roots(Q: UniPoly, expected: int | None = None, tol: float = 1e-10) -> list[float]:
    """Real roots by scanning for sign changes inside the Cauchy bound and bisecting.

    The scan is refined up to four times while fewer than ``expected`` roots
    are bracketed.
    """
    coeffs = [float(c) for c in Q.coeffs]
    lead = coeffs[-1]
    bound = 1.0 + max(abs(c / lead) for c in coeffs[:-1]) if len(coeffs) > 1 else 1.0
    f = np.polynomial.Polynomial(coeffs)
    roots: list[float] = []
    cells = 4096
    for _ in range(5):
        grid = np.linspace(-bound, bound, cells + 1)
        vals = f(grid)
        roots = []
        for i in range(cells):
            a, b, fa, fb = grid[i], grid[i + 1], vals[i], vals[i + 1]
            if fa == 0.0:
                roots.append(float(a))
                continue
            if fa * fb < 0:
                roots.append(_bisect(f, a, b, fa, tol))
        if fb == 0.0:
            roots.append(float(grid[-1]))
        if expected is None or len(roots) >= expected:
            break
        cells *= 4
    return sorted(roots)


def _bisect(f, a, b, fa, tol):
    while b - a > tol * max(1.0, abs(a)) * 1e-2:
        mid = 0.5 * (a + b)
        fm = f(mid)
        if fm == 0.0:
            return float(mid)
        if (fm < 0) == (fa < 0):
            a, fa = mid, fm
        else:
            b = mid
        if mid in (a, b) and b - a <= 2 * np.spacing(abs(mid) + 1.0):
            break
    return float(0.5 * (a + b))


def band_edges_check(sol, spec: PotentialSpec, tol_trace: float = DEFAULT_TOLS["band_trace"]) -> dict:
    Q = UniPoly(sol.Q)
    expected = 2 * sol.N + 1
    roots = real_roots(Q, expected)
    if len(roots) < expected:
        raise RootCountMismatch(f"found {len(roots)} real roots of Q, expected {expected}")
    table = []
    has_period = spec.period is not None
    for r in roots:
        row = {"p": r}
        if has_period:
            dev = abs(abs(monodromy(spec, r).trace) - 2.0)
            row["trace_deviation"] = dev
            row["ok"] = dev <= tol_trace
        table.append(row)
    return {
        "roots": roots,
        "expected": expected,
        "trace_checked": has_period,
        "table": table,
        "ok": all(row.get("ok", True) for row in table),
    }


# ---------------------------------------------------------------- grids

def p_samples(sol, spec: PotentialSpec, roots: Sequence[float] | None = None) -> list[float]:
    """Spectral parameters strictly inside the resolvent set.

    One anchor below the spectrum plus three interior points per gap.
    """
    T = _period(spec, None)
    xs = np.linspace(0.0, T, 257)
    p_min = float(np.min(spec.potential(xs))) - 5.0
    if roots is None:
        roots = real_roots(UniPoly(sol.Q), 2 * sol.N + 1)
    Q = UniPoly(sol.Q)
    ps = [min(p_min, roots[0] - 5.0) if roots else p_min]
    for lo, hi in zip(roots[1::2], roots[2::2]):
        for t in (0.25, 0.5, 0.75):
            p = lo + t * (hi - lo)
            if abs(float(Q(Fraction(p)))) < 1e-12:
                continue
            ps.append(p)
    if spec.period is not None:
        ps = [p for p in ps if abs(abs(monodromy(spec, p).trace) - 2.0) >= 1e-9]
    return ps


def x_samples(spec: PotentialSpec, count: int) -> np.ndarray:
    T = _period(spec, None)
    return (np.arange(count) + 0.25) * T / count


def verify(sol, spec: PotentialSpec, grid_x: int = 32, p_list: Sequence[float] | None = None,
           tols: dict | None = None) -> dict:
    """Run every numeric check and return a JSON-ready report."""
    from .solver import verify_exact

    tols = {**DEFAULT_TOLS, **(tols or {})}
    report: dict = {"tolerances": tols}
    report["exact_residual_zero"] = verify_exact(sol, spec)

    xs = x_samples(spec, grid_x)
    try:
        bands = band_edges_check(sol, spec, tols["band_trace"])
        roots = bands["roots"]
    except RootCountMismatch as exc:
        bands = {"ok": False, "error": str(exc)}
        roots = real_roots(UniPoly(sol.Q))
    report["band_edges"] = bands

    if p_list is None:
        if spec.is_constant:
            u0 = float(spec.u[0])
            p_list = [u0 - d for d in (0.5, 1.0, 5.0, 20.0)]
        else:
            p_list = p_samples(sol, spec, roots)
    points = []
    dets = []
    for p in p_list:
        try:
            pair = floquet_pair(spec, p, xs)
            Gf = pair.phi * pair.psi
            dets.append(pair.mono.det)
        except (InsideBand, DegenerateEigenvectors):
            Gf = None
            dets.append(monodromy(spec, p).det)
        try:
            Gc = eval_G(sol, spec, xs, p)
            r3 = residual3_numeric(sol, spec, xs, p)
        except BranchError:
            Gc = r3 = None
        for i, x in enumerate(xs):
            points.append({
                "x": float(x),
                "p": float(p),
                "G_closed": None if Gc is None else float(Gc[i]),
                "G_floquet": None if Gf is None else float(Gf[i]),
                "residual3": None if r3 is None else float(r3[i]),
            })
    report["points"] = points

    disagreement = [
        abs(pt["G_closed"] - pt["G_floquet"]) if pt["G_closed"] is not None and pt["G_floquet"] is not None
        else math.inf
        for pt in points
    ]
    residuals = [pt["residual3"] if pt["residual3"] is not None else math.inf for pt in points]
    asym = []
    for x in xs[:4]:
        try:
            asym.append(eval_G(sol, spec, float(x), ASYMPTOTE_P) * 2.0 * math.sqrt(-ASYMPTOTE_P))
        except BranchError:
            asym.append(math.nan)
    # non-finite summaries are reported as null so the JSON stays strict
    finite = lambda v: v if math.isfinite(v) else None
    max_dis = max(disagreement, default=0.0)
    max_r3 = max(residuals, default=0.0)
    asym_dev = max((abs(a - 1.0) if math.isfinite(a) else math.inf for a in asym), default=0.0)
    det_dev = max((abs(d - 1.0) for d in dets), default=0.0)
    checks = {
        "exact_residual": report["exact_residual_zero"],
        "floquet": max_dis <= tols["floquet"],
        "residual3": max_r3 <= tols["residual3"],
        "asymptote": asym_dev <= tols["asymptote"],
        "band_edges": bool(bands.get("ok")),
        "det": det_dev <= tols["det"],
    }
    report["summary"] = {
        "max_abs_disagreement": finite(max_dis),
        "max_residual3": finite(max_r3),
        "asymptote_deviation": finite(asym_dev),
        "det_deviation": finite(det_dev),
        "band_edge_table": bands.get("table", []),
        "n_points": len(points),
        "checks": checks,
        "ok": all(checks.values()),
    }
    return report


def report_csv(report: dict) -> str:
    cols = ("x", "p", "G_closed", "G_floquet", "residual3")
    lines = [",".join(cols)]
    for pt in report["points"]:
        lines.append(",".join("" if pt[c] is None else repr(pt[c]) for c in cols))
    return "\n".join(lines) + "\n"
