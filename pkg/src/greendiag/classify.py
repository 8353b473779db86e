"""Potentials in transformed coordinates and the ansatz degree bookkeeping.

A potential is given by two polynomials in ``z``: ``w = (dz/dx)**2`` and
``u(z) = U(x(z))``, together with a named numeric map ``x -> z`` so the
oracle can evaluate things on the real line.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

import numpy as np

from .elliptic import EllipticParams, ellint_K
from .exactalg import UniPoly, format_rational, parse_rational

M0_MAX = 12
MAPS = ("identity", "cn2")


class Inadmissible(ValueError):
    def __init__(self, reason: str, trace: list[str] | None = None):
        super().__init__(reason)
        self.reason = reason
        self.trace = trace or []


class DegenerateCase(ValueError):
    """Constant potential: the ansatz degree bound is 0/0."""


def cn2_w(m: Fraction, k2: Fraction) -> UniPoly:
    """``4 m^2 z (1 - z)(1 - k^2 + k^2 z)``, the squared derivative of ``cn^2(mx; k)``."""
    return UniPoly([0, 4 * m * m]) * UniPoly([1, -1]) * UniPoly([1 - k2, k2])


@dataclass(frozen=True)
class PotentialSpec:
    w: UniPoly
    u: UniPoly
    map_id: str | None = None
    params: Mapping[str, Fraction] = field(default_factory=dict)
    name: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "params", {k: parse_rational(v) for k, v in self.params.items()})
        if self.w.is_zero():
            raise ValueError("w = (dz/dx)^2 must not be the zero polynomial")
        if self.map_id is not None and self.map_id not in MAPS:
            raise ValueError(f"unknown map_id {self.map_id!r}; known: {', '.join(MAPS)}")
        if self.map_id == "identity" and self.w != UniPoly([1]):
            raise ValueError("map 'identity' (z = x) requires w = 1")
        if self.map_id == "cn2":
            missing = {"m", "k2"} - set(self.params)
            if missing:
                raise ValueError(f"map 'cn2' needs params {sorted(missing)}")
            m, k2 = self.params["m"], self.params["k2"]
            if m <= 0:
                raise ValueError("m must be positive")
            if not 0 < k2 < 1:
                raise ValueError("k2 must lie in (0, 1)")
            if self.w != cn2_w(m, k2):
                raise ValueError("w does not match 4 m^2 z (1-z)(1-k^2+k^2 z) for the given m, k2")

    @property
    def period(self) -> float | None:
        """x-period of the potential, or ``None`` when it has none."""
        if self.map_id == "cn2":
            return 2.0 * ellint_K(float(self.params["k2"])) / float(self.params["m"])
        return None

    @property
    def is_constant(self) -> bool:
        return (self.u.degree or 0) == 0

    def z_of_x(self, x):
        if self.map_id == "identity":
            return np.asarray(x, dtype=float) if np.ndim(x) else float(x)
        if self.map_id == "cn2":
            z = EllipticParams(float(self.params["k2"])).cn2(x, float(self.params["m"]))
            return z if np.ndim(x) else float(z)
        raise ValueError("spec has no numeric map x -> z")

    def potential(self, x):
        """``U(x)`` as floats; constant potentials need no map."""
        if self.is_constant:
            u0 = float(self.u[0])
            return np.full(np.shape(x), u0) if np.ndim(x) else u0
        return self.u(self.z_of_x(x))

    def to_dict(self) -> dict:
        doc = {
            "map_id": self.map_id,
            "params": {k: format_rational(v) for k, v in sorted(self.params.items())},
            "w": [format_rational(c) for c in self.w.coeffs],
            "u": [format_rational(c) for c in self.u.coeffs] or ["0"],
        }
        if self.name:
            doc["name"] = self.name
        return doc

    @classmethod
    def from_dict(cls, doc: Mapping) -> "PotentialSpec":
        unknown = set(doc) - {"map_id", "params", "w", "u", "name"}
        if unknown:
            raise ValueError(f"unknown spec keys: {sorted(unknown)}")
        try:
            return cls(
                w=UniPoly(parse_rational(c) for c in doc["w"]),
                u=UniPoly(parse_rational(c) for c in doc["u"]),
                map_id=doc.get("map_id"),
                params={k: parse_rational(v) for k, v in (doc.get("params") or {}).items()},
                name=doc.get("name"),
            )
        except KeyError as exc:
            raise ValueError(f"spec missing key {exc}") from None

    def spec_hash(self) -> str:
        doc = self.to_dict()
        doc.pop("name", None)
        blob = json.dumps(doc, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


PRESETS = {
    "constant": "U(x) = u0, z = x",
    "cn2-gap-1": "U(x) = -2 m^2 k^2 cn^2(mx; k), z = cn^2(mx; k)",
    "cn2-gap-2": "U(x) = -6 m^2 k^2 cn^2(mx; k), z = cn^2(mx; k)",
    "cn2-gap-3": "U(x) = -12 m^2 k^2 cn^2(mx; k), z = cn^2(mx; k)",
}
PRESET_DEFAULTS = {
    "constant": {"u0": Fraction(0)},
    "cn2": {"m": Fraction(1), "k2": Fraction(1, 2)},
}


def preset(name: str, **overrides) -> PotentialSpec:
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; known: {', '.join(PRESETS)}")
    if name == "constant":
        params = {**PRESET_DEFAULTS["constant"], **{k: parse_rational(v) for k, v in overrides.items()}}
        if set(params) != {"u0"}:
            raise ValueError(f"preset 'constant' takes only u0, got {sorted(params)}")
        return PotentialSpec(w=UniPoly([1]), u=UniPoly([params["u0"]]), map_id="identity",
                             params=params, name=name)
    gaps = int(name.rsplit("-", 1)[1])
    params = {**PRESET_DEFAULTS["cn2"], **{k: parse_rational(v) for k, v in overrides.items()}}
    if set(params) != {"m", "k2"}:
        raise ValueError(f"preset {name!r} takes m and k2, got {sorted(params)}")
    m, k2 = params["m"], params["k2"]
    amplitude = -gaps * (gaps + 1) * m * m * k2
    return PotentialSpec(w=cn2_w(m, k2), u=UniPoly([0, amplitude]), map_id="cn2",
                         params=params, name=name)


@dataclass(frozen=True)
class Classification:
    K: int
    L: int
    a: Fraction
    uK_norm: Fraction
    M0_candidates: tuple[int, ...] = ()
    degenerate: bool = False
    trace: tuple[str, ...] = ()

    @property
    def M0(self) -> int:
        return self.M0_candidates[0] if self.M0_candidates else 0

    @property
    def N_min(self) -> int:
        return n_min(self.M0, self.K) if not self.degenerate else 0


def degrees(spec: PotentialSpec) -> tuple[int, int, Fraction]:
    K = spec.u.degree or 0
    return K, spec.w.degree - 1, spec.w.leading()


def m0_candidates(K: int, L: int, uK_norm: Fraction, m0_max: int = M0_MAX) -> list[int]:
    """Positive integer roots of ``M^2 + (L-1) M - 4 s uK_norm = 0``, ``s = +-1``."""
    found = []
    for M in range(1, m0_max + 1):
        base = M * M + (L - 1) * M
        if any(base - 4 * s * uK_norm == 0 for s in (1, -1)):
            found.append(M)
    return found


def n_min(M0: int, K: int) -> int:
    if K == 0:
        raise DegenerateCase("N_min is 0/0 for a constant potential")
    return -(-M0 // K)


def admissible(spec: PotentialSpec, m0_max: int = M0_MAX) -> Classification:
    K, L, a = degrees(spec)
    uK = spec.u.leading()
    trace = [f"K = deg u = {K}", f"L = deg w - 1 = {L}", f"a = lead(w) = {format_rational(a)}"]
    if K == 0:
        trace.append("constant potential: degenerate case")
        return Classification(K, L, a, uK / a, (), True, tuple(trace))
    if L < 1:
        trace.append("rejected: L < 1 with K > 0")
        raise Inadmissible("L < 1 with K > 0", trace)
    if K != L - 1:
        trace.append(f"rejected: K = {K} but L - 1 = {L - 1}")
        raise Inadmissible("K != L-1", trace)
    uK_norm = uK / a
    trace.append(f"u_K / a = {format_rational(uK_norm)}")
    cands = m0_candidates(K, L, uK_norm, m0_max)
    if not cands:
        trace.append(f"rejected: no integer M0 in 1..{m0_max}")
        raise Inadmissible("no integer M0", trace)
    trace.append(f"M0 candidates: {cands}")
    return Classification(K, L, a, uK_norm, tuple(cands), False, tuple(trace))


def spec_from_json(text: str) -> PotentialSpec:
    return PotentialSpec.from_dict(json.loads(text))
