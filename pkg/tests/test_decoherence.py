import math

import numpy as np
import pytest
from scipy.constants import hbar, k as k_B, physical_constants
from sympy import S
from sympy.physics.wigner import clebsch_gordan as sym_cg

from eitmem.bloch import equal_populations, single_sublevel
from eitmem.decoherence import (DephasingParams, amplitude_decay_time, collective_overlap_efficiency,
                                dephasing_times, lifetime_curve, magnetic_phase,
                                motional_dephasing_time, sublevel_weights, transit_time)
from eitmem.errors import ConfigError


@pytest.fixture
def params(scheme):
    return DephasingParams(mass=scheme.mass, wavelength=scheme.wavelength, gradient=0.008,
                           length=0.025, beam_diameter=250e-6, angle=math.radians(1),
                           temperature=20e-6)


def test_transit_time(params):
    assert transit_time(params) == pytest.approx(7e-3, rel=0.05)


def test_motional_dephasing(params):
    assert motional_dephasing_time(params) == pytest.approx(220e-6, rel=0.05)
    assert motional_dephasing_time(params.replace(angle=0.0)) == math.inf


def test_thermal_velocity(params, scheme):
    assert params.thermal_velocity == pytest.approx(math.sqrt(k_B * 20e-6 / scheme.mass))


def test_weights_match_sympy(scheme):
    ref = [float(sym_cg(3, 1, 4, S(m), 1, S(m + 1)) / sym_cg(4, 1, 4, S(m), 1, S(m + 1)))
           for m in range(-3, 4)]
    np.testing.assert_allclose(sublevel_weights(scheme), ref, rtol=1e-12)


def test_dephasing_times_oracle(params, scheme):
    mu_b = physical_constants["Bohr magneton"][0]
    dg = scheme.g_ground[4] - scheme.g_ground[3]
    b_span = 0.008 * 2.5 * 1e-4  # gradient (G/cm) * length (cm) in tesla
    for m, tau in zip(range(-3, 4), dephasing_times(params, scheme)):
        if m == 0:
            assert tau == math.inf
        else:
            assert tau == pytest.approx(2 * math.sqrt(2) * hbar / (mu_b * abs(m) * dg * b_span), rel=1e-12)


def test_magnetic_phase(params, scheme):
    a = magnetic_phase(2, 0.01, 1e-6, params, scheme)
    assert magnetic_phase(2, 0.02, 1e-6, params, scheme) == pytest.approx(2 * a)
    assert magnetic_phase(-2, 0.01, 1e-6, params, scheme) == pytest.approx(-a)
    assert magnetic_phase(0, 0.01, 1e-6, params, scheme) == 0.0


def test_overlap_properties(params, scheme):
    pops = equal_populations()
    t = np.linspace(0, 60e-6, 61)
    eta = collective_overlap_efficiency(t, pops, params, scheme)
    assert eta[0] == pytest.approx(1.0, abs=1e-15)
    assert np.all(np.diff(eta) <= 0)
    assert collective_overlap_efficiency(50e-6, single_sublevel(0), params, scheme) == pytest.approx(1.0)
    assert collective_overlap_efficiency(50e-6, pops, params.replace(gradient=0.0), scheme) == pytest.approx(1.0)


def test_decay_time_near_measured(params, scheme):
    t3 = amplitude_decay_time(equal_populations(), params, scheme)
    assert 10e-6 <= t3 <= 25e-6


def test_lifetime_curve(params, scheme):
    pts = lifetime_curve([0, 5e-6, 10e-6, 20e-6], 0.7, equal_populations(), params, scheme)
    assert pts[0].overall == 0.7
    for p in pts:
        assert p.band_low <= p.overall <= p.band_high
    extra = lifetime_curve([20e-6], 0.7, equal_populations(), params, scheme,
                           include_transit=True, include_motional=True)
    assert extra[0].overall < pts[-1].overall
    with pytest.raises(ConfigError):
        lifetime_curve([-1.0], 0.7, equal_populations(), params, scheme)


def test_params_validation(scheme):
    with pytest.raises(ConfigError) as exc:
        DephasingParams(mass=-1, wavelength=0, gradient=0.0, length=0.01, temperature=-3)
    assert len(exc.value.problems) == 3


def test_transit_scaling(params):
    t = transit_time(params)
    assert transit_time(params.replace(temperature=80e-6)) == pytest.approx(t / 2)
    assert transit_time(params.replace(beam_diameter=500e-6)) == pytest.approx(2 * t)


def test_motional_scaling(params):
    t = motional_dephasing_time(params)
    half = math.asin(math.sin(params.angle) / 2)
    assert motional_dephasing_time(params.replace(angle=half)) == pytest.approx(2 * t)
    assert motional_dephasing_time(params.replace(temperature=80e-6)) == pytest.approx(t / 2)


def test_phase_null_and_linear(params, scheme):
    assert magnetic_phase(3, 0.0, 5e-6, params, scheme) == 0.0
    a = magnetic_phase(1, 0.005, 3e-6, params, scheme)
    assert magnetic_phase(1, 0.005, 6e-6, params, scheme) == pytest.approx(2 * a)


@pytest.fixture(scope="module")
def retained_at_12us(scheme):
    from eitmem.bloch import FieldConfig, MediumConfig
    from eitmem.propagation import PulseSpec, storage_retrieval_efficiency, tune_fields
    med = MediumConfig(od=200, length=0.025, gradient=0.008, gamma0=1e-3 * scheme.gamma)
    p = PulseSpec(0.5e-6)
    f = tune_fields(1e-6, FieldConfig(0.0), med, scheme, p, lock=True)
    eta = storage_retrieval_efficiency(p, f, med, scheme).efficiency
    pars = DephasingParams.from_medium(med, scheme)
    pts = lifetime_curve([0.0, 12e-6], eta, med.populations, pars, scheme)
    return pts[1].overall / pts[0].overall


@pytest.mark.xfail(strict=True, reason="a 15 us Gaussian amplitude decay leaves ~25% at 12 us")
def test_half_retained_at_12us(retained_at_12us):
    assert retained_at_12us > 0.5


def test_retained_at_12us_frozen(retained_at_12us):
    assert retained_at_12us == pytest.approx(0.253, abs=0.005)
