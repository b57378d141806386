"""Fourier-domain optical Bloch equations and the medium susceptibility.

Each ground Zeeman sublevel |g_m> (F=3) forms an independent channel: the
sigma+ probe couples it to |F', m+1> for F'=2,3,4 and the sigma+ control
couples |s_m> (F=4) to |F', m+1> for F'=3,4,5.  In linear response the
channel reduces to a 5x5 linear system per envelope frequency and position.

Sign convention: the susceptibility returned here has Im(chi) >= 0 for a
passive medium, the field amplitude transfer is exp(+2 pi i k int chi dz)
and the intensity transmission exp(-4 pi k Im int chi dz).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np
from numpy.polynomial.hermite import hermgauss
from scipy.constants import hbar
from scipy.integrate import quad_vec

from .atomic import GAUSS, MU_B, LevelScheme
from .errors import ConfigError, NumericalError
from .kernels import chi_channels

EXCITED = (2, 3, 4, 5)
PROBE_LEVELS = (2, 3, 4)
CONTROL_LEVELS = (3, 4, 5)
# control Rabi frequency is quoted on |s, m=0> -> |F'=4, m=1>
CONTROL_REFERENCE = (0, 4)


@dataclass(frozen=True)
class FieldConfig:
    """Probe/control detunings and Rabi frequencies, all in rad/s."""

    omega_c: float
    delta_p: float = 0.0
    delta_c: float = 0.0
    omega_p: float = 1.0

    def __post_init__(self):
        problems = []
        if not np.isfinite(self.omega_c) or self.omega_c < 0:
            problems.append(f"omega_c must be finite and >= 0, got {self.omega_c}")
        if not np.isfinite(self.omega_p):
            problems.append("omega_p must be finite")
        for name in ("delta_p", "delta_c"):
            if not np.isfinite(getattr(self, name)):
                problems.append(f"{name} must be finite")
        if problems:
            raise ConfigError(problems)

    def with_control(self, omega_c: float) -> "FieldConfig":
        return FieldConfig(omega_c, self.delta_p, self.delta_c, self.omega_p)


def equal_populations(n: int = 7) -> Tuple[float, ...]:
    return tuple([1.0 / n] * n)


def single_sublevel(m: int, F: int = 3) -> Tuple[float, ...]:
    if abs(m) > F:
        raise ValueError(f"|m| must be <= {F}")
    pops = [0.0] * (2 * F + 1)
    pops[m + F] = 1.0
    return tuple(pops)


@dataclass(frozen=True)
class MediumConfig:
    """Elongated cold cloud with a Gaussian density profile.

    Args:
        od: resonant optical depth with the control off, as measured.
        length: cloud length L (m); density is n0 * exp(-4 z**2 / L**2).
        gradient: magnetic gradient B0 in G/cm, B(z) = B0 * z.
        gamma0: intrinsic ground-state decoherence, rad/s.
        populations: p_m for m = -3..3, summing to one.
        temperature: K, only used by the dephasing estimates.
    """

    od: float
    length: float
    gradient: float
    gamma0: float
    populations: Tuple[float, ...] = field(default_factory=equal_populations)
    temperature: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "populations", tuple(float(p) for p in self.populations))
        problems = self.problems()
        if problems:
            raise ConfigError(problems)

    def problems(self):
        out = []
        if not (np.isfinite(self.od) and self.od >= 0):
            out.append(f"od must be >= 0, got {self.od}")
        if not (np.isfinite(self.length) and self.length > 0):
            out.append(f"length must be > 0, got {self.length}")
        if not np.isfinite(self.gradient):
            out.append("gradient must be finite")
        if not (np.isfinite(self.gamma0) and self.gamma0 >= 0):
            out.append(f"gamma0 must be >= 0, got {self.gamma0}")
        p = np.asarray(self.populations)
        if p.size != 7:
            out.append(f"populations needs 7 entries (m=-3..3), got {p.size}")
        elif np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
            out.append("populations must be non-negative and sum to 1")
        if self.temperature is not None and not self.temperature > 0:
            out.append(f"temperature must be > 0, got {self.temperature}")
        return out

    def density(self, z):
        """n(z)/n0."""
        return np.exp(-4.0 * np.asarray(z) ** 2 / self.length**2)

    def bfield(self, z):
        """Field in gauss at z (m)."""
        return self.gradient * np.asarray(z) * 100.0

    def replace(self, **kw) -> "MediumConfig":
        d = dict(self.__dict__)
        d.update(kw)
        return MediumConfig(**d)


@dataclass
class CoherenceSolution:
    excited: Dict[int, complex]
    ground: complex
    residual: float


@dataclass(frozen=True)
class ChannelTables:
    """Per-(m, F') coefficients fed to the kernel; F' axis ordered as EXCITED."""

    pop: np.ndarray
    dg: np.ndarray
    cc: np.ndarray
    off: np.ndarray
    zp: np.ndarray
    zs: np.ndarray


def control_rabi(omega_c: float, m: int, Fe: int, scheme: LevelScheme) -> float:
    """Control Rabi frequency on |s_m> -> |Fe, m+1>."""
    if Fe not in CONTROL_LEVELS:
        return 0.0
    ref = scheme.dipoles[(scheme.storage_f, *CONTROL_REFERENCE)]
    return omega_c * scheme.dipole(scheme.storage_f, m, Fe) / ref


def channel_tables(fields: FieldConfig, medium: MediumConfig, scheme: LevelScheme) -> ChannelTables:
    ms = list(scheme.sublevels)
    nm, nf = len(ms), len(EXCITED)
    dg = np.zeros((nm, nf))
    cc = np.zeros((nm, nf))
    off = np.zeros((nm, nf))
    zp = np.zeros((nm, nf))
    zs = np.zeros(nm)
    g_g = scheme.g_ground[scheme.ground_f]
    g_s = scheme.g_ground[scheme.storage_f]
    for i, m in enumerate(ms):
        zs[i] = MU_B * m * (g_g - g_s) * GAUSS / hbar
        for j, Fe in enumerate(EXCITED):
            off[i, j] = scheme.excited_offsets[Fe]
            zp[i, j] = MU_B * (m * g_g - (m + 1) * scheme.g_excited[Fe]) * GAUSS / hbar
            if Fe in PROBE_LEVELS:
                dg[i, j] = scheme.dipole(scheme.ground_f, m, Fe)
            cc[i, j] = control_rabi(fields.omega_c, m, Fe, scheme)
    return ChannelTables(np.asarray(medium.populations, dtype=float), dg, cc, off, zp, zs)


def _check_damping(medium: MediumConfig, scheme: LevelScheme):
    if scheme.gamma == 0 and medium.gamma0 == 0:
        raise ConfigError("Gamma = gamma0 = 0 makes the Bloch system singular")


def unit_response(omega, bfield, fields: FieldConfig, medium: MediumConfig,
                  scheme: LevelScheme, tables: ChannelTables | None = None) -> np.ndarray:
    """sum_m sum_F' d sigma / Omega_p on an (omega, B) grid, per unit density."""
    _check_damping(medium, scheme)
    t = tables or channel_tables(fields, medium, scheme)
    return chi_channels(
        np.atleast_1d(np.asarray(omega, dtype=float)),
        np.atleast_1d(np.asarray(bfield, dtype=float)),
        t.pop, t.dg, t.cc, t.off, t.zp, t.zs,
        float(fields.delta_p), float(fields.delta_c),
        float(scheme.gamma), float(medium.gamma0),
    )


def raw_susceptibility(omega, z, fields: FieldConfig, medium: MediumConfig,
                       scheme: LevelScheme) -> np.ndarray:
    """Uncalibrated chi(omega, z): density profile times the unit response."""
    z = np.asarray(z, dtype=float)
    resp = unit_response(omega, medium.bfield(z).ravel(), fields, medium, scheme)
    resp = resp * medium.density(z).ravel()[None, :]
    return _squeeze(resp, omega, z)


def _squeeze(arr, omega, z):
    shape = np.shape(omega) + np.shape(z)
    return arr.reshape(shape) if shape else complex(arr[0, 0])


def solve_coherences(omega: float, z: float, m: int, fields: FieldConfig,
                     medium: MediumConfig, scheme: LevelScheme) -> CoherenceSolution:
    """Direct 5x5 solve of one Zeeman channel at a single (omega, z).

    Unknowns are ordered sigma_{e_F', g} for F' = 2, 3, 4, 5, then sigma_{s g}.
    """
    if abs(m) > scheme.ground_f:
        raise ValueError(f"|m| must be <= {scheme.ground_f}")
    _check_damping(medium, scheme)
    t = channel_tables(fields, medium, scheme)
    i = m + scheme.ground_f
    B = float(medium.bfield(z))
    p = t.pop[i]
    n = len(EXCITED)
    M = np.zeros((n + 1, n + 1), dtype=complex)
    rhs = np.zeros(n + 1, dtype=complex)
    for j, Fe in enumerate(EXCITED):
        if Fe not in scheme.excited_levels or abs(m + 1) > Fe:
            M[j, j] = 1.0
            continue
        M[j, j] = omega + fields.delta_p + t.zp[i, j] * B - t.off[i, j] + 0.5j * scheme.gamma
        M[j, n] = 0.5 * t.cc[i, j]
        M[n, j] = 0.5 * t.cc[i, j]
        rhs[j] = -0.5 * fields.omega_p * t.dg[i, j] * p
    M[n, n] = omega + fields.delta_p - fields.delta_c + t.zs[i] * B + 1j * medium.gamma0
    if not np.any(M[n, :n]):
        M[n, n] = 1.0  # no control: the ground coherence is never driven
    x = np.linalg.solve(M, rhs)
    scale = np.linalg.norm(M) * np.linalg.norm(x) + np.linalg.norm(rhs)
    residual = np.linalg.norm(M @ x - rhs) / scale if scale > 0 else 0.0
    return CoherenceSolution(
        excited={Fe: complex(x[j]) for j, Fe in enumerate(EXCITED)},
        ground=complex(x[n]),
        residual=float(residual),
    )


class Column:
    """Integral of the unit response over the cloud, weighted by n(z)/n0.

    The density profile exp(-4 z^2/L^2) is the Hermite weight in x = 2z/L,
    so  int n(z)/n0 f(z) dz = (L/2) sum_k w_k f(L x_k / 2).  The order is
    doubled until successive estimates agree to ``rtol``.  Integrands with
    sharp z structure (very narrow EIT windows swept across the cloud by the
    gradient) fall back to adaptive Gauss-Kronrod on |z| <= 2L, where the
    density has dropped below 1e-7.
    """

    def __init__(self, medium: MediumConfig, scheme: LevelScheme,
                 rtol: float = 1e-9, order: int = 8, max_order: int = 256):
        self.medium = medium
        self.scheme = scheme
        self.rtol = rtol
        self.order = order
        self.max_order = max_order
        self.order_used = None

    def integrate(self, omega, fields: FieldConfig) -> np.ndarray:
        omega = np.atleast_1d(np.asarray(omega, dtype=float))
        tables = channel_tables(fields, self.medium, self.scheme)
        L = self.medium.length
        if self.medium.gradient == 0:
            self.order_used = 1
            resp = unit_response(omega, [0.0], fields, self.medium, self.scheme, tables)
            return resp[:, 0] * (L * np.sqrt(np.pi) / 2)

        def estimate(n):
            x, w = hermgauss(n)
            resp = unit_response(omega, self.medium.bfield(L * x / 2), fields,
                                 self.medium, self.scheme, tables)
            return resp @ (w * L / 2)

        n = self.order
        prev = estimate(n)
        while 2 * n <= self.max_order:
            n *= 2
            cur = estimate(n)
            scale = np.max(np.abs(cur))
            if scale == 0 or np.max(np.abs(cur - prev)) <= self.rtol * scale:
                self.order_used = n
                return cur
            prev = cur
        return self._adaptive(omega, fields, tables)

    def _adaptive(self, omega, fields, tables):
        med = self.medium

        def f(z):
            resp = unit_response(omega, [med.bfield(z)], fields, med, self.scheme, tables)
            return resp[:, 0] * med.density(z)

        zmax = 2 * med.length
        val, err, info = quad_vec(f, -zmax, zmax, epsrel=self.rtol, norm="max",
                                  limit=2000, full_output=True)
        scale = np.max(np.abs(val))
        if not info.success and err > 10 * self.rtol * scale:
            raise NumericalError(
                f"z-quadrature did not converge: achieved relative error "
                f"{err / scale:.3g} (requested {self.rtol:g})")
        self.order_used = -info.neval
        return val


def resonant_unit_absorption(medium: MediumConfig, scheme: LevelScheme,
                             rtol: float = 1e-9) -> float:
    """Im of the unit column response at probe resonance with the control off."""
    col = Column(medium, scheme, rtol=rtol).integrate([0.0], FieldConfig(omega_c=0.0))
    value = float(col[0].imag)
    if not value > 0:
        raise NumericalError("no resonant absorption to calibrate against")
    return value


def calibration_constant(medium: MediumConfig, scheme: LevelScheme,
                         rtol: float = 1e-9) -> float:
    """kappa such that kappa * raw chi reproduces exp(-od) at control-off resonance."""
    k = 2 * np.pi / scheme.wavelength
    return medium.od / (4 * np.pi * k * resonant_unit_absorption(medium, scheme, rtol))


def susceptibility(omega, z, fields: FieldConfig, medium: MediumConfig,
                   scheme: LevelScheme, kappa: float | None = None):
    """Calibrated chi(omega, z); omega and z broadcast as an outer product."""
    if kappa is None:
        kappa = calibration_constant(medium, scheme)
    return kappa * raw_susceptibility(omega, z, fields, medium, scheme)


def propagation_exponent(omega, fields: FieldConfig, medium: MediumConfig,
                         scheme: LevelScheme, rtol: float = 1e-9) -> np.ndarray:
    """Phi(omega) = 2 pi k int chi dz; field transfer exp(i Phi), T = exp(-2 Im Phi)."""
    ref = resonant_unit_absorption(medium, scheme, rtol)
    col = Column(medium, scheme, rtol=rtol).integrate(omega, fields)
    return 0.5 * medium.od * col / ref


def effective_params(fields: FieldConfig, medium: MediumConfig,
                     scheme: LevelScheme) -> Tuple[float, float]:
    """Stark-shifted probe detuning and control-induced ground decoherence.

    Lowest-order contribution of the off-resonant F'=3 and F'=5 levels,
    summed over all Zeeman channels. Diagnostic only: the full solver
    already contains these effects.
    """
    shift = 0.0
    loss = 0.0
    for m in scheme.sublevels:
        for Fe in (3, 5):
            if Fe not in scheme.excited_levels:
                continue
            w = scheme.excited_offsets[Fe] - scheme.excited_offsets[4]
            c2 = control_rabi(fields.omega_c, m, Fe, scheme) ** 2 / 4
            shift += c2 / w
            loss += c2 / w**2 * scheme.gamma / 2
    return fields.delta_p + shift, medium.gamma0 + loss
