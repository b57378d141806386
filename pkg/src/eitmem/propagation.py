"""Spectral-domain slow-light propagation, control tuning and storage efficiency.

Fourier convention (angular frequency, envelope offset from the probe
carrier)::

    E(w) = int E(t) exp(+i w t) dt,     E(t) = int E(w) exp(-i w t) dw / 2pi

The medium multiplies E(w) by exp(i Phi(w)), Phi = 2 pi k int chi dz, so the
intensity transmission is exp(-2 Im Phi).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .atomic import LevelScheme
from .bloch import FieldConfig, MediumConfig, propagation_exponent
from .errors import BracketError, ConfigError, EitmemError, GridError, NumericalError

log = logging.getLogger(__name__)

# spectral amplitudes below this fraction of the peak are not propagated
SUPPORT_TOL = 1e-17
# output energy allowed in the outer 2% of the window on either side
EDGE_FRACTION = 0.02
EDGE_TOL = 1e-6


@dataclass(frozen=True)
class PulseSpec:
    """Gaussian probe pulse exp(-2 ln2 t^2/tau^2) on a uniform time grid.

    ``tau`` is the intensity FWHM. The grid spans ``span`` seconds (default
    32 tau) with ``n_points`` samples and starts ``lead`` seconds before the
    input peak (default a quarter of the span).
    """

    tau: float
    t0: float = 0.0
    n_points: int = 2**14
    span: float | None = None
    lead: float | None = None

    def __post_init__(self):
        problems = []
        if not self.tau > 0:
            problems.append(f"tau must be > 0, got {self.tau}")
        n = self.n_points
        if n < 16 or n & (n - 1):
            problems.append(f"n_points must be a power of two >= 16, got {n}")
        if self.span is not None and self.tau > 0 and self.span < 16 * self.tau:
            problems.append("grid span must be at least 16 tau")
        if problems:
            raise ConfigError(problems)
        captured = self.captured_energy()
        if captured < 1 - 1e-8:
            raise ConfigError(f"grid captures only {captured:.10f} of the pulse energy")

    @property
    def grid_span(self) -> float:
        return self.span if self.span is not None else 32 * self.tau

    @property
    def dt(self) -> float:
        return self.grid_span / self.n_points

    @property
    def start(self) -> float:
        lead = self.lead if self.lead is not None else self.grid_span / 4
        return self.t0 - lead

    @property
    def times(self) -> np.ndarray:
        return self.start + self.dt * np.arange(self.n_points)

    @property
    def omega(self) -> np.ndarray:
        return 2 * np.pi * np.fft.fftfreq(self.n_points, self.dt)

    def envelope(self) -> np.ndarray:
        t = self.times - self.t0
        return np.exp(-2 * np.log(2) * t**2 / self.tau**2).astype(complex)

    def analytic_energy(self) -> float:
        return self.tau * np.sqrt(np.pi / (4 * np.log(2)))

    def captured_energy(self) -> float:
        return energy(self.envelope(), self.dt) / self.analytic_energy()

    def check_delay(self, delay: float) -> None:
        if self.grid_span < 4 * delay:
            raise GridError(f"enlarge grid: span {self.grid_span:.3g} s < 4x delay {delay:.3g} s")

    def shifted(self, t0: float) -> "PulseSpec":
        return PulseSpec(self.tau, t0, self.n_points, self.span, self.lead)


def energy(envelope, dt: float) -> float:
    return float(np.sum(np.abs(envelope) ** 2) * dt)


def to_spectrum(envelope, pulse: PulseSpec) -> np.ndarray:
    n = pulse.n_points
    return pulse.dt * n * np.fft.ifft(envelope) * np.exp(1j * pulse.omega * pulse.start)


def from_spectrum(spectrum, pulse: PulseSpec) -> np.ndarray:
    return np.fft.fft(spectrum * np.exp(-1j * pulse.omega * pulse.start)) / pulse.dt / pulse.n_points


def spectral_energy(spectrum, pulse: PulseSpec) -> float:
    dw = 2 * np.pi / (pulse.n_points * pulse.dt)
    return float(np.sum(np.abs(spectrum) ** 2) * dw / (2 * np.pi))


@dataclass
class ComplexSpectrum:
    """Complex function sampled on an angular-frequency grid (rad/s)."""

    omega: np.ndarray
    values: np.ndarray

    @property
    def power(self) -> np.ndarray:
        return np.abs(self.values) ** 2


def transmission_spectrum(omega, fields: FieldConfig, medium: MediumConfig,
                          scheme: LevelScheme, rtol: float = 1e-9) -> ComplexSpectrum:
    """Field transfer exp(i Phi(w)); ``.power`` is the intensity transmission T(w)."""
    omega = np.asarray(omega, dtype=float)
    if medium.od == 0:
        return ComplexSpectrum(omega, np.ones(omega.shape, dtype=complex))
    phi = propagation_exponent(omega.ravel(), fields, medium, scheme, rtol).reshape(omega.shape)
    return ComplexSpectrum(omega, np.exp(1j * phi))


def propagate_pulse(pulse: PulseSpec, fields: FieldConfig, medium: MediumConfig,
                    scheme: LevelScheme, rtol: float = 1e-9,
                    envelope: Optional[np.ndarray] = None) -> np.ndarray:
    """Output envelope at the end of the medium under continuous control."""
    ein = pulse.envelope() if envelope is None else np.asarray(envelope, dtype=complex)
    if medium.od == 0:
        return ein.copy()
    spec = to_spectrum(ein, pulse)
    # the transfer function only matters where the input has spectral weight
    support = np.abs(spec) > SUPPORT_TOL * np.abs(spec).max()
    out_spec = np.zeros_like(spec)
    phi = propagation_exponent(pulse.omega[support], fields, medium, scheme, rtol)
    out_spec[support] = spec[support] * np.exp(1j * phi)
    eout = from_spectrum(out_spec, pulse)
    _check_edges(eout, pulse)
    return eout


def _check_edges(eout, pulse: PulseSpec) -> None:
    I = np.abs(eout) ** 2
    total = I.sum()
    if total == 0:
        return
    k = max(1, int(EDGE_FRACTION * pulse.n_points))
    edge = (I[:k].sum() + I[-k:].sum()) / total
    if edge > EDGE_TOL:
        raise GridError(f"enlarge grid: {edge:.2e} of the output energy sits at the grid edge")


def centroid(envelope, times) -> float:
    I = np.abs(envelope) ** 2
    s = I.sum()
    if not s > 0:
        raise NumericalError("centroid of a zero envelope")
    return float(np.sum(I * times) / s)


def group_delay(fields: FieldConfig, medium: MediumConfig, scheme: LevelScheme,
                pulse: PulseSpec, rtol: float = 1e-9) -> float:
    """Energy-centroid delay of the transmitted pulse (s)."""
    ein = pulse.envelope()
    eout = propagate_pulse(pulse, fields, medium, scheme, rtol, ein)
    ratio = energy(eout, pulse.dt) / energy(ein, pulse.dt)
    if ratio < 1e-12:
        raise NumericalError(f"output energy {ratio:.2e} of input: delay undefined")
    return centroid(eout, pulse.times) - centroid(ein, pulse.times)


def two_photon_peak(fields: FieldConfig, medium: MediumConfig, scheme: LevelScheme,
                    rtol: float = 1e-9) -> float:
    """Envelope frequency of maximum transmission near the EIT resonance.

    The search window scales with the largest possible light shift
    (~0.04 Omega_c^2 / Gamma on Cs D2).
    """
    G = scheme.gamma
    half = 0.05 * G + 0.05 * fields.omega_c**2 / G
    grid = np.linspace(-half, half, 401) - (fields.delta_p - fields.delta_c)
    absorb = propagation_exponent(grid, fields, medium, scheme, rtol).imag
    i = int(np.argmin(absorb))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
    if hi <= lo:
        return float(grid[i])
    res = minimize_scalar(
        lambda w: propagation_exponent([w], fields, medium, scheme, rtol)[0].imag,
        bounds=(lo, hi), method="bounded", options={"xatol": 1e-7 * G})
    return float(res.x)


def lock_probe(fields: FieldConfig, medium: MediumConfig, scheme: LevelScheme,
               rtol: float = 1e-9) -> FieldConfig:
    """Move the probe carrier onto the light-shifted transmission maximum.

    chi depends on the probe only through w + delta_p, so shifting delta_p by
    the peak offset puts the peak exactly at w = 0.
    """
    shift = two_photon_peak(fields, medium, scheme, rtol)
    return FieldConfig(fields.omega_c, fields.delta_p + shift, fields.delta_c, fields.omega_p)


def tune_fields(target_delay: float, fields: FieldConfig, medium: MediumConfig,
                scheme: LevelScheme, pulse: PulseSpec, lock: bool = False,
                bracket=(1e-3, 1e2), rtol_delay: float = 1e-3,
                rtol: float = 1e-9) -> FieldConfig:
    """Fields whose group delay equals ``target_delay`` (within ``rtol_delay``).

    ``bracket`` is the allowed Omega_c range in units of Gamma. With
    ``lock`` the probe detuning follows the light-shifted two-photon
    resonance at every trial Omega_c.
    """
    if not target_delay > 0:
        raise ConfigError("target delay must be positive")
    pulse.check_delay(target_delay)
    G = scheme.gamma
    base = FieldConfig(0.0, fields.delta_p, fields.delta_c, fields.omega_p)

    def at(log_oc):
        f = base.with_control(float(np.exp(log_oc)) * G)
        return lock_probe(f, medium, scheme, rtol) if lock else f

    def excess(log_oc):
        try:
            return group_delay(at(log_oc), medium, scheme, pulse, rtol) - target_delay
        except NumericalError:
            return np.inf  # opaque medium: the pulse never comes out

    lo, hi = np.log(bracket[0]), np.log(bracket[1])
    f_hi = excess(hi)
    if f_hi > 0:
        raise BracketError(
            f"delay {f_hi + target_delay:.3g} s at Omega_c = {bracket[1]} Gamma already "
            f"exceeds target {target_delay:.3g} s")
    # walk down from the strong-control end; delay grows as Omega_c drops
    x_hi, x = hi, hi
    step = np.log(2.0)
    achieved = f_hi + target_delay
    while True:
        x = max(x - step, lo)
        fx = excess(x)
        if fx > 0:
            break
        achieved = fx + target_delay
        x_hi = x
        if x <= lo:
            raise BracketError(
                f"target delay {target_delay:.3g} s unreachable: achievable range "
                f"[{f_hi + target_delay:.3g}, {achieved:.3g}] s for Omega_c in "
                f"[{bracket[0]}, {bracket[1]}] Gamma")
    x_lo = x
    if not np.isfinite(fx):
        # refine the opaque edge so brentq sees finite values
        while not np.isfinite(fx):
            mid = 0.5 * (x_lo + x_hi)
            fm = excess(mid)
            if fm <= 0:
                x_hi = mid
            else:
                x_lo, fx = mid, fm
            if x_hi - x_lo < 1e-6:
                raise BracketError("delay diverges before reaching the target")
    xtol = 0.25 * rtol_delay
    root = brentq(excess, x_lo, x_hi, xtol=xtol, rtol=1e-12)
    return at(root)


def tune_control(target_delay: float, fields: FieldConfig, medium: MediumConfig,
                 scheme: LevelScheme, pulse: PulseSpec, **kw) -> float:
    """Control Rabi frequency (rad/s) giving the requested group delay."""
    return tune_fields(target_delay, fields, medium, scheme, pulse, **kw).omega_c


@dataclass
class StorageResult:
    times: np.ndarray
    input_envelope: np.ndarray
    output_envelope: np.ndarray
    cutoff_time: float
    leakage: float
    efficiency: float
    storage_time: float
    storage_factor: float
    fields: FieldConfig

    @property
    def overall(self) -> float:
        return self.efficiency * self.storage_factor

    @property
    def absorbed(self) -> float:
        return 1.0 - self.efficiency - self.leakage


def storage_retrieval_efficiency(pulse: PulseSpec, fields: FieldConfig, medium: MediumConfig,
                                 scheme: LevelScheme, storage_time: float = 0.0,
                                 cutoff: float | None = None,
                                 storage_factor: Callable[[float], float] | None = None,
                                 rtol: float = 1e-9) -> StorageResult:
    """Propagation-limited memory efficiency with the low-OD leakage cut.

    The control is switched off at T_c = t0 + ``cutoff`` (default one
    FWHM). Output energy before T_c has leaked; energy after it counts as
    stored and retrieved. ``storage_factor(t)`` supplies the dephasing
    overlap; by default it is the collective-state overlap of the medium.
    """
    if storage_time < 0:
        raise ConfigError("storage time must be >= 0")
    cutoff = pulse.tau if cutoff is None else cutoff
    ein = pulse.envelope()
    eout = propagate_pulse(pulse, fields, medium, scheme, rtol, ein)
    t = pulse.times
    tc = pulse.t0 + cutoff
    I = np.abs(eout) ** 2
    e_in = energy(ein, pulse.dt)
    eta = float(np.sum(I[t >= tc]) * pulse.dt / e_in)
    leak = float(np.sum(I[t < tc]) * pulse.dt / e_in)
    if storage_factor is None:
        from .decoherence import DephasingParams, collective_overlap_efficiency
        params = DephasingParams.from_medium(medium, scheme)
        storage_factor = lambda ts: collective_overlap_efficiency(  # noqa: E731
            ts, medium.populations, params, scheme)
    eta_s = float(storage_factor(storage_time)) if storage_time > 0 else 1.0
    return StorageResult(t, ein, eout, tc, leak, eta, storage_time, eta_s, fields)


@dataclass
class SweepRow:
    od: float
    omega_c: float = float("nan")
    efficiency: float = float("nan")
    leakage: float = float("nan")
    delta_p: float = float("nan")
    error: str | None = None


def efficiency_vs_od(od_list: Sequence[float], medium: MediumConfig, fields: FieldConfig,
                     scheme: LevelScheme, pulse: PulseSpec,
                     target_delay: float | None = None, lock: bool = True,
                     cutoff: float | None = None, rtol: float = 1e-9) -> List[SweepRow]:
    """Retune the control to the target delay at each OD and record eta.

    Failing points are kept with their error message; the sweep goes on.
    """
    target = 2 * pulse.tau if target_delay is None else target_delay
    rows = []
    for od in sorted(float(x) for x in od_list):
        row = SweepRow(od)
        try:
            med = medium.replace(od=od)
            tuned = tune_fields(target, fields, med, scheme, pulse, lock=lock, rtol=rtol)
            res = storage_retrieval_efficiency(pulse, tuned, med, scheme, cutoff=cutoff, rtol=rtol)
            row.omega_c = tuned.omega_c
            row.delta_p = tuned.delta_p
            row.efficiency = res.efficiency
            row.leakage = res.leakage
        except EitmemError as exc:
            log.warning("OD %g failed: %s", od, exc)
            row.error = str(exc)
        rows.append(row)
    return rows
