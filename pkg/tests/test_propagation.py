import numpy as np
import pytest

from eitmem.bloch import FieldConfig, MediumConfig, single_sublevel
from eitmem.errors import BracketError, ConfigError, GridError
from eitmem.propagation import (PulseSpec, efficiency_vs_od, energy, group_delay, lock_probe, propagate_pulse,
                                spectral_energy, storage_retrieval_efficiency, to_spectrum,
                                transmission_spectrum, tune_control, tune_fields)

TAU = 0.5e-6


@pytest.fixture
def medium(scheme):
    return MediumConfig(od=200, length=0.025, gradient=0.008, gamma0=1e-3 * scheme.gamma)


@pytest.fixture(scope="module")
def tuned(scheme):
    med = MediumConfig(od=200, length=0.025, gradient=0.008, gamma0=1e-3 * scheme.gamma)
    return tune_fields(2 * TAU, FieldConfig(0.0), med, scheme, PulseSpec(TAU), lock=True)


def test_parseval():
    p = PulseSpec(TAU)
    e = p.envelope() * np.exp(1j * 3e6 * p.times)
    assert spectral_energy(to_spectrum(e, p), p) == pytest.approx(energy(e, p.dt), rel=1e-10)
    assert p.captured_energy() == pytest.approx(1.0, abs=1e-8)


def test_pulse_validation():
    with pytest.raises(ConfigError):
        PulseSpec(TAU, n_points=1000)
    with pytest.raises(ConfigError):
        PulseSpec(TAU, span=8 * TAU)
    with pytest.raises(GridError):
        PulseSpec(TAU).check_delay(10 * TAU)


def test_vacuum_is_identity(scheme, medium):
    p = PulseSpec(TAU)
    out = propagate_pulse(p, FieldConfig(1e7), medium.replace(od=0), scheme)
    assert np.array_equal(out, p.envelope())


def test_far_detuned_probe_is_transparent(scheme, medium):
    p = PulseSpec(TAU)
    G = scheme.gamma
    out = propagate_pulse(p, FieldConfig(0.0, delta_p=3000 * G), medium.replace(od=20), scheme)
    assert energy(out, p.dt) / energy(p.envelope(), p.dt) == pytest.approx(1.0, abs=2e-3)


def test_delay_grows_with_od(scheme, medium):
    p = PulseSpec(TAU)
    f = FieldConfig(3 * scheme.gamma)
    delays = [group_delay(f, medium.replace(od=od), scheme, p) for od in (20, 50, 100, 200)]
    assert np.all(np.diff(delays) > 0)


@pytest.mark.parametrize("oc", [1.0, 2.0])
def test_lambda_delay_scaling(scheme, oc):
    G = scheme.gamma
    lam = scheme.restricted([4])
    med = MediumConfig(od=50, length=0.025, gradient=0.0, gamma0=1e-6 * G, populations=single_sublevel(0))
    d = group_delay(FieldConfig(oc * G), med, lam, PulseSpec(4e-6))
    assert d == pytest.approx(50 * G / (oc * G) ** 2, rel=0.1)


def test_tuning_round_trip(scheme, medium, tuned):
    p = PulseSpec(TAU)
    assert group_delay(tuned, medium, scheme, p) == pytest.approx(2 * TAU, rel=1e-3)
    oc = tune_control(2 * TAU, FieldConfig(0.0), medium, scheme, p)
    assert group_delay(FieldConfig(oc), medium, scheme, p) == pytest.approx(2 * TAU, rel=1e-3)


def test_unreachable_delay(scheme, medium):
    with pytest.raises(BracketError):
        tune_fields(2 * TAU, FieldConfig(0.0), medium.replace(od=0.01), scheme, PulseSpec(TAU))


def test_lock_puts_peak_at_carrier(scheme, medium, tuned):
    G = scheme.gamma
    T = transmission_spectrum(np.linspace(-0.02, 0.02, 81) * G, tuned, medium, scheme).power
    assert np.argmax(T) == 40
    relock = lock_probe(tuned, medium, scheme)
    assert relock.delta_p == pytest.approx(tuned.delta_p, abs=1e-4 * G)


def test_time_shift_invariance(scheme, medium, tuned):
    a = storage_retrieval_efficiency(PulseSpec(TAU), tuned, medium, scheme)
    b = storage_retrieval_efficiency(PulseSpec(TAU, t0=1.3e-6), tuned, medium, scheme)
    assert b.efficiency == pytest.approx(a.efficiency, abs=1e-9)
    assert b.cutoff_time - a.cutoff_time == pytest.approx(1.3e-6)


def test_grid_refinement(scheme, medium, tuned):
    ref = storage_retrieval_efficiency(PulseSpec(TAU), tuned, medium, scheme).efficiency
    for n, span in ((2**15, 32), (2**15, 64), (2**13, 32)):
        eta = storage_retrieval_efficiency(PulseSpec(TAU, n_points=n, span=span * TAU),
                                           tuned, medium, scheme).efficiency
        assert eta == pytest.approx(ref, abs=5e-3)


def test_energy_budget_and_cutoff(scheme, medium, tuned):
    p = PulseSpec(TAU)
    etas = []
    for c in (0.5, 1.0, 1.5, 2.0):
        r = storage_retrieval_efficiency(p, tuned, medium, scheme, cutoff=c * TAU)
        assert 0 <= r.efficiency and 0 <= r.leakage and r.efficiency + r.leakage <= 1
        etas.append(r.efficiency)
    assert np.all(np.diff(etas) < 0)


def test_storage_factor_applied(scheme, medium, tuned):
    r = storage_retrieval_efficiency(PulseSpec(TAU), tuned, medium, scheme, storage_time=5e-6,
                                     storage_factor=lambda t: 0.5)
    assert r.overall == pytest.approx(0.5 * r.efficiency)
    with pytest.raises(ConfigError):
        storage_retrieval_efficiency(PulseSpec(TAU), tuned, medium, scheme, storage_time=-1)


def test_grid_edge_detected(scheme, medium):
    # a short grid cannot hold a strongly delayed pulse
    p = PulseSpec(TAU, span=16 * TAU, lead=12 * TAU)
    with pytest.raises(GridError):
        propagate_pulse(p, FieldConfig(1.0 * scheme.gamma), medium, scheme)


@pytest.mark.xfail(strict=True, reason="delayed output already carries ~10% of its energy by t0 + 1.5 tau")
def test_cutoff_sensitivity_below_two_percent(scheme, medium, tuned):
    p = PulseSpec(TAU)
    etas = [storage_retrieval_efficiency(p, tuned, medium, scheme, cutoff=c * TAU).efficiency
            for c in (0.8, 1.5)]
    assert abs(etas[0] - etas[1]) < 0.02


def test_cutoff_sensitivity_frozen(scheme, medium, tuned):
    p = PulseSpec(TAU)
    etas = [storage_retrieval_efficiency(p, tuned, medium, scheme, cutoff=c * TAU).efficiency
            for c in (0.8, 1.0, 1.5)]
    assert etas[1] == pytest.approx(0.7211, abs=2e-3)
    assert etas[0] - etas[2] == pytest.approx(0.104, abs=5e-3)


def test_quadrature_refinement(scheme, medium, tuned):
    p = PulseSpec(TAU)
    a = storage_retrieval_efficiency(p, tuned, medium, scheme, rtol=1e-9).efficiency
    b = storage_retrieval_efficiency(PulseSpec(TAU, n_points=2**15), tuned, medium, scheme,
                                     rtol=5e-10).efficiency
    assert b == pytest.approx(a, abs=5e-3)


def test_empty_medium_transmits_everything(scheme, medium):
    T = transmission_spectrum(np.linspace(-50, 50, 11) * scheme.gamma, FieldConfig(0.0),
                              medium.replace(od=0.0), scheme).power
    assert np.all(T == 1.0)


def test_output_never_exceeds_input(scheme, medium):
    p = PulseSpec(TAU)
    for oc in (1.5, 3.0, 6.0):
        out = propagate_pulse(p, FieldConfig(oc * scheme.gamma), medium.replace(od=30), scheme)
        assert energy(out, p.dt) <= energy(p.envelope(), p.dt)


def test_far_detuned_delay(scheme, medium):
    p = PulseSpec(TAU)
    f = FieldConfig(0.0, delta_p=1000 * scheme.gamma)
    med = medium.replace(od=20)
    T = transmission_spectrum([0.0], f, med, scheme).power[0]
    assert T > 0.999
    assert abs(group_delay(f, med, scheme, p)) < 1e-3 * TAU


def test_delay_falls_with_control(scheme, medium):
    p = PulseSpec(TAU)
    d = [group_delay(FieldConfig(oc * scheme.gamma), medium, scheme, p) for oc in (2.5, 3.5, 5.0, 7.0, 10.0)]
    assert np.all(np.diff(d) < 0)


def test_lambda_scaling_over_a_decade(scheme):
    G = scheme.gamma
    lam = scheme.restricted([4])
    med = MediumConfig(od=50, length=0.025, gradient=0.0, gamma0=1e-6 * G, populations=single_sublevel(0))
    for oc in (0.6, 1.9, 6.0):
        tau = max(4e-6, 20 * 50 / (oc**2 * G))
        d = group_delay(FieldConfig(oc * G), med, lam, PulseSpec(tau))
        assert d == pytest.approx(50 / (oc**2 * G), rel=0.1)


def test_more_od_needs_more_control(scheme, medium):
    p = PulseSpec(TAU)
    ocs = [tune_control(2 * TAU, FieldConfig(0.0), medium.replace(od=od), scheme, p) for od in (50, 100, 200)]
    assert np.all(np.diff(ocs) > 0)


def test_operating_points(scheme, medium, tuned):
    eq = storage_retrieval_efficiency(PulseSpec(TAU), tuned, medium, scheme).efficiency
    assert eq == pytest.approx(0.69, abs=0.05)
    m3 = medium.replace(populations=single_sublevel(3))
    f3 = tune_fields(2 * TAU, FieldConfig(0.0), m3, scheme, PulseSpec(TAU), lock=True)
    assert storage_retrieval_efficiency(PulseSpec(TAU), f3, m3, scheme).efficiency == pytest.approx(0.75, abs=0.05)


@pytest.fixture(scope="module")
def low_od(scheme):
    med = MediumConfig(od=20, length=0.025, gradient=0.008, gamma0=1e-3 * scheme.gamma)
    return efficiency_vs_od([20], med, FieldConfig(0.0), scheme, PulseSpec(TAU))[0]


@pytest.mark.xfail(strict=True, reason="model leakage at OD 20 is ~0.05; loss is absorption, not leakage")
def test_low_od_leakage_large(low_od):
    assert low_od.leakage > 0.2


def test_low_od_frozen(low_od):
    assert low_od.efficiency < 0.45
    assert low_od.leakage == pytest.approx(0.0518, abs=2e-3)


def test_decoherence_lowers_curve(scheme, medium):
    p = PulseSpec(TAU)
    ods = [50, 150, 300]
    a = efficiency_vs_od(ods, medium, FieldConfig(0.0), scheme, p)
    b = efficiency_vs_od(ods, medium.replace(gamma0=0.0), FieldConfig(0.0), scheme, p)
    assert all(y.efficiency > x.efficiency for x, y in zip(a, b))
