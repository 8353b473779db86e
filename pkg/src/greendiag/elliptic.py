"""Real Jacobi elliptic functions and the complete integral K, via the AGM.

The second argument is always the parameter ``k2`` (modulus squared).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

AGM_MAX_ITER = 32
AGM_TOL = 1e-16


class DomainError(ValueError):
    pass


def _agm_sequence(k2: float):
    a, b, c = 1.0, math.sqrt(1.0 - k2), math.sqrt(k2)
    seq = [(a, b, c)]
    for _ in range(AGM_MAX_ITER):
        if abs(c) <= AGM_TOL * a:
            break
        a, b, c = 0.5 * (a + b), math.sqrt(a * b), 0.5 * (a - b)
        seq.append((a, b, c))
    return seq


def ellint_K(k2: float) -> float:
    """Complete elliptic integral of the first kind, ``K = pi / (2 agm(1, k'))``."""
    k2 = float(k2)
    if not 0.0 <= k2 < 1.0:
        raise DomainError(f"ellint_K needs 0 <= k2 < 1, got {k2}")
    a = _agm_sequence(k2)[-1][0]
    return math.pi / (2.0 * a)


def jacobi_cn_sn_dn(x, k2: float):
    """Return ``(cn, sn, dn)`` at real ``x`` (scalar or array) for parameter ``k2``.

    Descending Landen / AGM phase recursion; ``dn`` is taken from
    ``sqrt(1 - k2 sn^2)``, which is positive for real arguments.
    """
    k2 = float(k2)
    if not 0.0 <= k2 <= 1.0:
        raise DomainError(f"jacobi_cn_sn_dn needs 0 <= k2 <= 1, got {k2}")
    xs = np.asarray(x, dtype=float)
    if k2 == 1.0:
        sech = 1.0 / np.cosh(xs)
        out = (sech, np.tanh(xs), sech)
    else:
        seq = _agm_sequence(k2)
        n = len(seq) - 1
        phi = (2.0 ** n) * seq[n][0] * xs
        for j in range(n, 0, -1):
            a_j, _, c_j = seq[j]
            phi = 0.5 * (phi + np.arcsin(c_j / a_j * np.sin(phi)))
        sn = np.sin(phi)
        out = (np.cos(phi), sn, np.sqrt(1.0 - k2 * sn * sn))
    if np.ndim(x) == 0:
        return tuple(float(v) for v in out)
    return out


@dataclass(frozen=True)
class EllipticParams:
    k2: float
    Kk: float = field(init=False)

    def __post_init__(self):
        if not 0.0 < self.k2 < 1.0:
            raise DomainError(f"k2 must lie in (0, 1), got {self.k2}")
        object.__setattr__(self, "Kk", ellint_K(self.k2))

    def cn2(self, x, m: float = 1.0):
        cn, _, _ = jacobi_cn_sn_dn(m * np.asarray(x, dtype=float), self.k2)
        return cn * cn
