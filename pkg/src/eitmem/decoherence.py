"""Memory lifetime: thermal transit, motional dephasing and magnetic-gradient
dephasing of the stored collective excitation."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np
from scipy.constants import hbar, k as k_B

from .atomic import GAUSS, MU_B, LevelScheme, clebsch_gordan
from .errors import ConfigError


@dataclass(frozen=True)
class DephasingParams:
    """Inputs of the lifetime estimates (SI units, gradient in G/cm).

    ``beam_diameter``, ``angle`` and ``temperature`` are only needed by
    :func:`transit_time` and :func:`motional_dephasing_time`.
    """

    mass: float
    wavelength: float
    gradient: float
    length: float
    beam_diameter: float | None = None
    angle: float | None = None
    temperature: float | None = None

    def __post_init__(self):
        problems = []
        for name in ("mass", "wavelength", "length"):
            if not getattr(self, name) > 0:
                problems.append(f"{name} must be > 0")
        for name in ("beam_diameter", "temperature"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                problems.append(f"{name} must be > 0")
        if self.angle is not None and not self.angle >= 0:
            problems.append("angle must be >= 0")
        if not np.isfinite(self.gradient):
            problems.append("gradient must be finite")
        if problems:
            raise ConfigError(problems)

    @classmethod
    def from_medium(cls, medium, scheme: LevelScheme, **kw) -> "DephasingParams":
        kw.setdefault("temperature", medium.temperature)
        return cls(mass=scheme.mass, wavelength=scheme.wavelength,
                   gradient=medium.gradient, length=medium.length, **kw)

    def replace(self, **kw) -> "DephasingParams":
        d = dict(self.__dict__)
        d.update(kw)
        return DephasingParams(**d)

    @property
    def thermal_velocity(self) -> float:
        if self.temperature is None:
            raise ConfigError("temperature is required")
        return math.sqrt(k_B * self.temperature / self.mass)


def transit_time(params: DephasingParams) -> float:
    """Time for an atom at the thermal velocity to cross the probe beam."""
    if params.beam_diameter is None:
        raise ConfigError("beam_diameter is required")
    return params.beam_diameter / params.thermal_velocity


def motional_dephasing_time(params: DephasingParams) -> float:
    """Spin-wave grating washout time for probe/control crossing at ``angle``.

    Returns ``math.inf`` for collinear beams.
    """
    if params.angle is None:
        raise ConfigError("angle is required")
    s = math.sin(params.angle)
    if s == 0:
        return math.inf
    return params.wavelength / (2 * math.pi * s) / params.thermal_velocity


def _differential_g(scheme: LevelScheme) -> float:
    return scheme.g_ground[scheme.storage_f] - scheme.g_ground[scheme.ground_f]


def magnetic_phase(m: int, z, t, params: DephasingParams, scheme: LevelScheme):
    """Phase (rad) picked up by the |s_m>-|g_m> coherence at z (m) after t (s)."""
    if abs(m) > scheme.ground_f:
        raise ValueError(f"|m| must be <= {scheme.ground_f}")
    B = params.gradient * np.asarray(z) * 100.0 * GAUSS
    return MU_B * m * _differential_g(scheme) * B * np.asarray(t) / hbar


def sublevel_weights(scheme: LevelScheme, Fe: int = 4) -> np.ndarray:
    """R_m: ratio of probe to control Clebsch-Gordan coefficients into |Fe, m+1>."""
    out = []
    for m in scheme.sublevels:
        num = clebsch_gordan(scheme.ground_f, m, 1, 1, Fe, m + 1)
        den = clebsch_gordan(scheme.storage_f, m, 1, 1, Fe, m + 1)
        out.append(num / den)
    return np.array(out)


def dephasing_times(params: DephasingParams, scheme: LevelScheme) -> np.ndarray:
    """Gaussian decay constants tau_m (s); infinite for m = 0 or no gradient."""
    out = []
    for m in scheme.sublevels:
        rate = abs(MU_B * m * _differential_g(scheme) * params.gradient * 100.0 * params.length * GAUSS / hbar)
        out.append(2 * math.sqrt(2) / rate if rate > 0 else math.inf)
    return np.array(out)


@dataclass
class CollectiveState:
    weights: np.ndarray
    taus: np.ndarray
    populations: np.ndarray

    @classmethod
    def build(cls, populations, params: DephasingParams, scheme: LevelScheme) -> "CollectiveState":
        p = np.asarray(populations, dtype=float)
        if p.size != len(scheme.sublevels) or np.any(p < 0) or abs(p.sum() - 1) > 1e-9:
            raise ConfigError("populations must be non-negative and sum to 1")
        return cls(sublevel_weights(scheme), dephasing_times(params, scheme), p)

    def efficiency(self, t):
        t = np.asarray(t, dtype=float)
        w = self.populations * self.weights**2
        with np.errstate(divide="ignore"):
            inv = np.where(np.isinf(self.taus), 0.0, 1.0 / self.taus**2)
        env = np.exp(-np.multiply.outer(t**2, inv))
        val = (env @ w / w.sum()) ** 2
        return float(val) if val.ndim == 0 else val


def collective_overlap_efficiency(t, populations, params: DephasingParams,
                                  scheme: LevelScheme):
    """eta_s(t): squared overlap of the stored spin wave with its t=0 self."""
    return CollectiveState.build(populations, params, scheme).efficiency(t)


def amplitude_decay_time(populations, params: DephasingParams, scheme: LevelScheme,
                         t_max: float = 1e-3) -> float:
    """Time at which sqrt(eta_s) falls to 1/e; ``inf`` if it never does."""
    from scipy.optimize import brentq

    state = CollectiveState.build(populations, params, scheme)
    f = lambda t: math.sqrt(state.efficiency(t)) - math.exp(-1)  # noqa: E731
    if f(t_max) > 0:
        return math.inf
    return brentq(f, 0.0, t_max, xtol=1e-12)


@dataclass
class LifetimePoint:
    time: float
    overall: float
    band_low: float
    band_high: float


def lifetime_curve(storage_times: Sequence[float], efficiency: float, populations,
                   params: DephasingParams, scheme: LevelScheme,
                   gradient_band: float = 1e-3, include_transit: bool = False,
                   include_motional: bool = False) -> List[LifetimePoint]:
    """Overall efficiency eta * eta_s(t) with a +-``gradient_band`` (G/cm) band.

    ``efficiency`` is the propagation-limited eta at zero storage time.
    The optional factors exp(-t/tau1) and exp(-t^2/tau2^2) are off by default.
    """
    variants = [params.gradient - gradient_band, params.gradient, params.gradient + gradient_band]
    states = [CollectiveState.build(populations, params.replace(gradient=g), scheme) for g in variants]
    tau1 = transit_time(params) if include_transit else math.inf
    tau2 = motional_dephasing_time(params) if include_motional else math.inf
    out = []
    for t in storage_times:
        if t < 0:
            raise ConfigError("storage times must be >= 0")
        extra = math.exp(-t / tau1) * math.exp(-(t / tau2) ** 2)
        vals = [efficiency * s.efficiency(t) * extra for s in states]
        out.append(LifetimePoint(float(t), vals[1], min(vals), max(vals)))
    return out
