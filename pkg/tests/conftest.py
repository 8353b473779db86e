from fractions import Fraction as F

import pytest

from greendiag.classify import preset
from greendiag.exactalg import UniPoly
from greendiag.solver import solve


def triple_gap_closed_form(m, k2):
    """Closed-form P_2, P_1, P_0 (with P_3 = 1) and Q for U = -12 m^2 k^2 cn^2(mx; k).

    Expanded at rational m, k2 so the result can be compared exactly.
    """
    m, k2 = F(m), F(k2)
    z = UniPoly([0, 1])
    one = UniPoly([1])
    P2 = -2 * m**2 * (7 * one + k2 * (-14 * one + 3 * z))
    P1 = m**4 * (49 * one + k2 * (-256 * one + 78 * z) + k2**2 * (256 * one + 3 * z * (-52 * one + 15 * z)))
    P0 = -3 * m**6 * (
        12 * one
        + 8 * k2 * (-19 * one + 9 * z)
        + 3 * k2**2 * (128 * one + z * (-121 * one + 45 * z))
        + k2**3 * (-256 * one + 3 * z * (121 * one + 5 * z * (-18 * one + 5 * z)))
    )
    p = UniPoly([0, 1])
    Q = -1 * (
        ((-4 + 8 * k2) * m**2 * one + p)
        * ((9 - 96 * k2 + 96 * k2**2) * m**4 * one + 10 * (-1 + 2 * k2) * m**2 * p + p * p)
        * ((9 - 42 * k2 + 33 * k2**2) * m**4 * one + 2 * (-5 + 7 * k2) * m**2 * p + p * p)
        * (3 * k2 * (-8 + 11 * k2) * m**4 * one + 2 * (-2 + 7 * k2) * m**2 * p + p * p)
    )
    return [P0, P1, P2, one], Q


@pytest.fixture(scope="session")
def solved():
    cache = {}

    def get(name, **params):
        key = (name, tuple(sorted(params.items())))
        if key not in cache:
            spec = preset(name, **params)
            cache[key] = (spec, solve(spec))
        return cache[key]

    return get
