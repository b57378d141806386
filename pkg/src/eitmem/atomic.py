"""Cesium D2 level scheme, angular-momentum algebra and Zeeman shifts.

Angular momenta are accepted as ints, floats or :class:`fractions.Fraction`
and are handled internally as doubled integers so that half-integer
arithmetic stays exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from math import factorial, sqrt
from typing import Dict, Tuple

import numpy as np
from scipy.constants import hbar, physical_constants

MU_B = physical_constants["Bohr magneton"][0]  # J/T
GAUSS = 1e-4  # T

# 133Cs D2 line (6S1/2 -> 6P3/2), standard published values.
CS_NUCLEAR_SPIN = Fraction(7, 2)
CS_GAMMA = 2 * np.pi * 5.234e6  # rad/s
CS_WAVELENGTH = 852.34727582e-9  # m
CS_MASS = 2.20694650e-25  # kg
CS_GJ_GROUND = 2.00254032
CS_GJ_EXCITED = 1.3340
# 6P3/2 hyperfine levels relative to F'=4, rad/s
CS_EXCITED_OFFSETS = {
    2: -2 * np.pi * (201.2871e6 + 151.2247e6),
    3: -2 * np.pi * 201.2871e6,
    4: 0.0,
    5: 2 * np.pi * 251.0916e6,
}

GROUND_F = 3
STORAGE_F = 4


class AngularMomentumError(ValueError):
    pass


def _twice(x) -> int:
    """Return 2*x as an int, rejecting anything that is not a half-integer."""
    if isinstance(x, (float, np.floating)):
        if not np.isfinite(x) or abs(2 * x - round(2 * x)) > 1e-9:
            raise AngularMomentumError(f"{x!r} is not a half-integer")
        return int(round(2 * x))
    try:
        v = Fraction(x) * 2
    except (TypeError, ValueError) as exc:
        raise AngularMomentumError(f"not a number: {x!r}") from exc
    if v.denominator != 1:
        raise AngularMomentumError(f"{x!r} is not a half-integer")
    return int(v)


def _check_jm(tj: int, tm: int) -> None:
    if tj < 0:
        raise AngularMomentumError("angular momentum must be non-negative")
    if abs(tm) > tj or (tj - tm) % 2:
        raise AngularMomentumError(f"invalid projection m={tm / 2} for j={tj / 2}")


def _triangle(ta: int, tb: int, tc: int) -> bool:
    return (ta + tb + tc) % 2 == 0 and abs(ta - tb) <= tc <= ta + tb


def _f(n2: int) -> int:
    # factorial of a doubled argument that must be even and >= 0
    return factorial(n2 // 2)


def _delta(ta: int, tb: int, tc: int) -> float:
    return sqrt(
        _f(ta + tb - tc) * _f(ta - tb + tc) * _f(-ta + tb + tc)
        / _f(ta + tb + tc + 2)
    )


def wigner_3j(j1, j2, j3, m1, m2, m3) -> float:
    """Wigner 3j symbol from the Racah sum."""
    t = [_twice(v) for v in (j1, j2, j3, m1, m2, m3)]
    tj1, tj2, tj3, tm1, tm2, tm3 = t
    for tj, tm in ((tj1, tm1), (tj2, tm2), (tj3, tm3)):
        _check_jm(tj, tm)
    if tm1 + tm2 + tm3 != 0 or not _triangle(tj1, tj2, tj3):
        return 0.0

    pre = _delta(tj1, tj2, tj3) * sqrt(
        _f(tj1 + tm1) * _f(tj1 - tm1) * _f(tj2 + tm2) * _f(tj2 - tm2)
        * _f(tj3 + tm3) * _f(tj3 - tm3)
    )
    kmin = max(0, tj2 - tj3 - tm1, tj1 - tj3 + tm2)
    kmax = min(tj1 + tj2 - tj3, tj1 - tm1, tj2 + tm2)
    total = 0.0
    for tk in range(kmin, kmax + 1, 2):
        den = (
            _f(tk) * _f(tj3 - tj2 + tm1 + tk) * _f(tj3 - tj1 - tm2 + tk)
            * _f(tj1 + tj2 - tj3 - tk) * _f(tj1 - tm1 - tk) * _f(tj2 + tm2 - tk)
        )
        total += (-1) ** (tk // 2) / den
    phase = (-1) ** ((tj1 - tj2 - tm3) // 2)
    return phase * pre * total


def wigner_6j(j1, j2, j3, j4, j5, j6) -> float:
    """Wigner 6j symbol {j1 j2 j3; j4 j5 j6} from the Racah sum."""
    t = [_twice(v) for v in (j1, j2, j3, j4, j5, j6)]
    if any(v < 0 for v in t):
        raise AngularMomentumError("angular momentum must be non-negative")
    a, b, c, d, e, f = t
    triads = ((a, b, c), (a, e, f), (d, b, f), (d, e, c))
    if not all(_triangle(*tr) for tr in triads):
        return 0.0
    pre = 1.0
    for tr in triads:
        pre *= _delta(*tr)
    sums = [sum(tr) for tr in triads]
    pairs = (a + b + d + e, a + c + d + f, b + c + e + f)
    total = 0.0
    for tk in range(max(sums), min(pairs) + 1, 2):
        den = 1
        for s in sums:
            den *= _f(tk - s)
        for p in pairs:
            den *= _f(p - tk)
        total += (-1) ** (tk // 2) * _f(tk + 2) / den
    return pre * total


def clebsch_gordan(j1, m1, j2, m2, J, M) -> float:
    """<j1 m1; j2 m2 | J M> in the Condon-Shortley convention."""
    tj1, tm1, tj2, tm2, tJ, tM = (_twice(v) for v in (j1, m1, j2, m2, J, M))
    for tj, tm in ((tj1, tm1), (tj2, tm2), (tJ, tM)):
        _check_jm(tj, tm)
    if tm1 + tm2 != tM:
        return 0.0
    phase = (-1) ** ((tj1 - tj2 + tM) // 2)
    return phase * sqrt(tJ + 1) * wigner_3j(
        Fraction(tj1, 2), Fraction(tj2, 2), Fraction(tJ, 2),
        Fraction(tm1, 2), Fraction(tm2, 2), Fraction(-tM, 2),
    )


def lande_gf(F, J, I, gJ: float) -> float:
    """Hyperfine Lande factor, nuclear contribution neglected."""
    F, J, I = Fraction(F), Fraction(J), Fraction(I)
    if F == 0:
        return 0.0
    return gJ * float((F * (F + 1) - I * (I + 1) + J * (J + 1)) / (2 * F * (F + 1)))


@dataclass(frozen=True)
class LevelScheme:
    """Ground manifolds F=3 (|g>) and F=4 (|s>) coupled to 6P3/2 by sigma+ light.

    ``dipoles[(F, m, Fe)]`` is the dimensionless amplitude for
    |F, m> -> |Fe, m+1>, in units of the reduced <J||d||J'> element.
    """

    gamma: float
    wavelength: float
    mass: float
    g_ground: Dict[int, float]
    g_excited: Dict[int, float]
    excited_offsets: Dict[int, float]
    dipoles: Dict[Tuple[int, int, int], float]
    excited_levels: Tuple[int, ...] = (2, 3, 4, 5)
    ground_f: int = GROUND_F
    storage_f: int = STORAGE_F
    nuclear_spin: Fraction = field(default=CS_NUCLEAR_SPIN)

    @property
    def sublevels(self) -> range:
        return range(-self.ground_f, self.ground_f + 1)

    def dipole(self, F: int, m: int, Fe: int) -> float:
        if Fe not in self.excited_levels:
            return 0.0
        return self.dipoles.get((F, m, Fe), 0.0)

    def restricted(self, excited_levels) -> "LevelScheme":
        """Copy of the scheme keeping only the listed excited manifolds."""
        levels = tuple(sorted(excited_levels))
        unknown = set(levels) - set(self.excited_offsets)
        if unknown:
            raise ValueError(f"unknown excited levels {sorted(unknown)}")
        return replace(self, excited_levels=levels)

    def splittings_over_gamma(self) -> Dict[Tuple[int, int], float]:
        lv = sorted(self.excited_offsets)
        return {
            (a, b): (self.excited_offsets[b] - self.excited_offsets[a]) / self.gamma
            for a, b in zip(lv, lv[1:])
        }


def reduced_hyperfine(F, Fe, J=Fraction(1, 2), Je=Fraction(3, 2), I=CS_NUCLEAR_SPIN) -> float:
    """<Je Fe||d||J F> / <Je||d||J> up to the sqrt(2Fe+1) absorbed in the CG."""
    J, Je, I, F, Fe = (Fraction(x) for x in (J, Je, I, F, Fe))
    phase = (-1) ** int(Je + I + F + 1)
    return phase * sqrt(2 * F + 1) * wigner_6j(Je, Fe, I, F, J, 1)


def sigma_plus_dipole(F: int, m: int, Fe: int) -> float:
    """Relative amplitude for |F, m> -> |Fe, m+1> with sigma+ light."""
    if abs(F - Fe) > 1 or abs(m) > F or abs(m + 1) > Fe:
        return 0.0
    return clebsch_gordan(F, m, 1, 1, Fe, m + 1) * reduced_hyperfine(F, Fe)


def build_cesium_d2() -> LevelScheme:
    I = CS_NUCLEAR_SPIN
    g_ground = {F: lande_gf(F, Fraction(1, 2), I, CS_GJ_GROUND) for F in (GROUND_F, STORAGE_F)}
    g_excited = {Fe: lande_gf(Fe, Fraction(3, 2), I, CS_GJ_EXCITED) for Fe in CS_EXCITED_OFFSETS}
    dipoles = {}
    for F in (GROUND_F, STORAGE_F):
        for m in range(-F, F + 1):
            for Fe in CS_EXCITED_OFFSETS:
                d = sigma_plus_dipole(F, m, Fe)
                if d != 0.0:
                    dipoles[(F, m, Fe)] = d
    return LevelScheme(
        gamma=CS_GAMMA,
        wavelength=CS_WAVELENGTH,
        mass=CS_MASS,
        g_ground=g_ground,
        g_excited=g_excited,
        excited_offsets=dict(CS_EXCITED_OFFSETS),
        dipoles=dipoles,
    )


def zeeman_detuning(m: int, ground_manifold: str, Fe: int, B: float,
                    scheme: LevelScheme | None = None) -> float:
    """Extra detuning (rad/s) of |F, m> -> |Fe, m+1> in a field B (gauss).

    ``ground_manifold`` is ``"g"`` (F=3, probe) or ``"s"`` (F=4, control).
    Works elementwise if B is an array.
    """
    scheme = scheme or _default_scheme()
    if ground_manifold == "g":
        gF = scheme.g_ground[scheme.ground_f]
    elif ground_manifold == "s":
        gF = scheme.g_ground[scheme.storage_f]
    else:
        raise ValueError(f"ground_manifold must be 'g' or 's', got {ground_manifold!r}")
    return MU_B * (m * gF - (m + 1) * scheme.g_excited[Fe]) * (np.asarray(B) * GAUSS) / hbar


_CACHED = None


def _default_scheme() -> LevelScheme:
    global _CACHED
    if _CACHED is None:
        _CACHED = build_cesium_d2()
    return _CACHED
