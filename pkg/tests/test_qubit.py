import itertools
import math

import numpy as np
import pytest
from scipy.optimize import linprog
from scipy.stats import poisson

from eitmem.errors import ConfigError, NumericalError
from eitmem.qubit import (KETS, PROJECTIONS, DualRailChannel, PolarizationState, TomographyRecord,
                          apply_channel, benchmark_solution, classical_benchmark,
                          density_matrix_from_row, density_matrix_row, fidelity, poisson_distribution,
                          qubit_experiment, reconstruct, simulate_counts)


def lp_benchmark(p, eta):
    """Linear-programming oracle for the measure-and-prepare bound."""
    n = np.arange(p.size)
    score = (n + 1) / (n + 2)
    c = -(p * score)[1:]
    res = linprog(c, A_eq=[p[1:]], b_eq=[eta * (1 - p[0])], bounds=[(0, 1)] * (p.size - 1),
                  method="highs", options={"primal_feasibility_tolerance": 1e-10})
    assert res.success
    return -res.fun / (eta * (1 - p[0]))


def grid_benchmark(p, eta, steps=40):
    """Exhaustive search over q_N on a grid; the last active N absorbs the remainder."""
    n = np.arange(p.size)
    score = (n + 1) / (n + 2)
    budget = eta * (1 - p[0])
    best = -1.0
    grid = np.linspace(0, 1, steps + 1)
    for qs in itertools.product(grid, repeat=p.size - 2):
        q = np.zeros(p.size)
        q[2:] = qs
        rest = budget - np.sum(q * p)
        if rest < 0 or rest > p[1]:
            continue
        q[1] = rest / p[1]
        best = max(best, np.sum(q * p * score) / budget)
    return best


def test_channel_phase_flip():
    out, eff = apply_channel(PolarizationState.named("D"), DualRailChannel.balanced(0.7, 1.0, math.pi))
    assert eff == pytest.approx(0.7)
    assert fidelity(out, "A") == pytest.approx(1.0, abs=1e-12)


def test_channel_unbalanced_rails():
    ch = DualRailChannel(0.6, 0.3, 0.9)
    out, eff = apply_channel(PolarizationState.named("H"), ch)
    assert eff == pytest.approx(0.6)
    out, eff = apply_channel(PolarizationState.named("D"), ch)
    assert eff == pytest.approx(0.45)
    assert np.trace(out.rho).real == pytest.approx(1.0)
    assert out.rho[0, 1].real == pytest.approx(math.sqrt(0.18) * 0.9 / 0.45 / 2)
    with pytest.raises(ConfigError):
        DualRailChannel(1.2, 0.5)


def test_invalid_states_rejected():
    with pytest.raises(ValueError, match="trace"):
        PolarizationState(np.eye(2))
    with pytest.raises(ValueError, match="semidefinite"):
        PolarizationState([[1.5, 0], [0, -0.5]])
    with pytest.raises(ValueError):
        fidelity(np.eye(2) / 2, [1, 1])


@pytest.mark.parametrize("label", PROJECTIONS)
def test_tomography_round_trip(label):
    rec = simulate_counts(PolarizationState.named(label), DualRailChannel.balanced(1.0), 0.5,
                          100_000, 5e-4, seed=11)
    assert fidelity(reconstruct(rec), label) > 0.99


def test_reconstruction_is_physical():
    rec = TomographyRecord.from_totals({"H": 10, "V": 0, "D": 10, "A": 0, "R": 10, "L": 0})
    rho = reconstruct(rec)
    assert np.linalg.eigvalsh(rho.rho).min() >= -1e-12
    assert rho.purity == pytest.approx(1.0)
    with pytest.raises(NumericalError):
        reconstruct(TomographyRecord.from_totals({"H": 0, "V": 0, "D": 1, "A": 0, "R": 1, "L": 0}))


def test_seeded_counts_are_reproducible():
    st = PolarizationState.named("R")
    ch = DualRailChannel.balanced(0.5)
    a = simulate_counts(st, ch, 0.3, 1000, 1e-3, seed=3)
    b = simulate_counts(st, ch, 0.3, 1000, 1e-3, seed=3)
    c = simulate_counts(st, ch, 0.3, 1000, 1e-3, seed=4)
    assert all(np.array_equal(a.counts[p], b.counts[p]) for p in PROJECTIONS)
    assert any(not np.array_equal(a.counts[p], c.counts[p]) for p in PROJECTIONS)


def test_counts_csv_round_trip(tmp_path):
    rec = simulate_counts(PolarizationState.named("D"), DualRailChannel.balanced(0.5), 1.0, 50, seed=1)
    rec.to_csv(tmp_path / "c.csv")
    back = TomographyRecord.from_csv(tmp_path / "c.csv")
    assert all(np.array_equal(rec.counts[p], back.counts[p]) for p in PROJECTIONS)


def test_density_row_round_trip():
    rho = PolarizationState.from_ket([0.6, 0.8j])
    row = density_matrix_row(rho)
    assert len(row) == 8
    np.testing.assert_allclose(density_matrix_from_row(row).rho, rho.rho)


def test_single_photon_benchmark():
    assert benchmark_solution([0.0, 1.0], 1.0).value == pytest.approx(2 / 3, abs=1e-12)
    assert classical_benchmark(1e-7, 1.0) == pytest.approx(2 / 3, abs=1e-6)


@pytest.mark.parametrize("nbar,eta", [(0.05, 0.3), (0.5, 0.685), (1.0, 0.1), (2.0, 0.9), (3.0, 0.5)])
def test_greedy_matches_lp(nbar, eta):
    p = poisson_distribution(nbar)
    assert classical_benchmark(nbar, eta) == pytest.approx(lp_benchmark(p, eta), abs=1e-6)


@pytest.mark.parametrize("eta", [0.2, 0.5, 0.8])
def test_greedy_matches_grid_search(eta):
    p = np.array([0.3, 0.3, 0.25, 0.1, 0.05])
    greedy = benchmark_solution(p, eta).value
    assert grid_benchmark(p, eta) <= greedy + 1e-12
    assert grid_benchmark(p, eta) == pytest.approx(greedy, abs=5e-3)


def test_benchmark_monotone_in_efficiency():
    vals = [classical_benchmark(0.5, e) for e in np.linspace(0.05, 1, 40)]
    assert np.all(np.diff(vals) <= 1e-15)


def test_poisson_truncation():
    p = poisson_distribution(2.0)
    assert 1 - p.sum() < 1e-12
    assert poisson.sf(p.size - 1, 2.0) < 1e-12


def test_infeasible_budget_flagged():
    sol = benchmark_solution([0.5, 0.2, 0.0], 0.8)
    assert not sol.feasible
    assert sol.value == pytest.approx(2 / 3)
    assert benchmark_solution(poisson_distribution(1e-7), 1.0).feasible


def test_experiment_beats_benchmark():
    ch = DualRailChannel.balanced(0.685, 0.99)
    rep = qubit_experiment(ch, 0.5, 100_000, seed=5, background_per_window=5e-4)
    assert rep.average_fidelity > rep.benchmark + 0.1
    for r in rep.results:
        assert r.efficiency == pytest.approx(0.685, abs=0.01)
        assert 0 < r.fidelity_err < 0.01


def test_fidelity_drops_at_low_photon_number():
    ch = DualRailChannel.balanced(0.685, 0.99)
    f = [qubit_experiment(ch, n, 100_000, seed=2, background_per_window=5e-4).average_fidelity
         for n in (0.5, 0.1, 0.02)]
    assert f[0] > f[1] > f[2]


def test_balanced_channel_preserves_state():
    st = PolarizationState.from_ket([0.6, 0.8j])
    out, eff = apply_channel(st, DualRailChannel.balanced(0.4))
    np.testing.assert_allclose(out.rho, st.rho, atol=1e-14)
    assert eff == pytest.approx(0.4)


def test_zero_visibility_mixes():
    out, _ = apply_channel(PolarizationState.named("D"), DualRailChannel.balanced(0.5, 0.0))
    np.testing.assert_allclose(out.rho, np.eye(2) / 2, atol=1e-14)


def test_background_only_rate():
    rec = simulate_counts(PolarizationState.named("H"), DualRailChannel.balanced(1.0), 0.0, 1_000_000,
                          5e-4, seed=8)
    # 3000 expected counts: 8% is four standard deviations
    assert np.mean([rec.counts[p].mean() for p in PROJECTIONS]) == pytest.approx(5e-4, rel=0.08)


def test_orthogonal_projection_dark():
    rec = simulate_counts(PolarizationState.named("H"), DualRailChannel.balanced(1.0), 2.0, 1000, seed=1)
    assert rec.totals()["V"] == 0


def test_counts_linear_in_nbar():
    means = [np.mean(simulate_counts(PolarizationState.named("H"), DualRailChannel.balanced(1.0), n,
                                     200_000, seed=4).counts["H"]) for n in (0.1, 0.2, 0.4)]
    assert means[1] / means[0] == pytest.approx(2, rel=0.02)
    assert means[2] / means[0] == pytest.approx(4, rel=0.02)


@pytest.mark.parametrize("label,rho", [("H", [[1, 0], [0, 0]]), ("D", [[0.5, 0.5], [0.5, 0.5]])])
def test_exact_probabilities_reconstruct(label, rho):
    st = PolarizationState.named(label)
    rec = TomographyRecord.from_totals({p: 1e6 * st.probability(p) for p in PROJECTIONS})
    np.testing.assert_allclose(reconstruct(rec).rho, rho, atol=1e-9)


def test_circular_state_round_trip():
    rec = simulate_counts(PolarizationState.named("R"), DualRailChannel.balanced(1.0), 0.5, 100_000, seed=3)
    assert fidelity(reconstruct(rec), "R") > 0.99


def test_fidelity_trivial_cases():
    assert fidelity(PolarizationState.named("D"), "D") == pytest.approx(1.0)
    assert fidelity(PolarizationState.named("H"), "V") == 0.0
    for s in PROJECTIONS:
        assert fidelity(np.eye(2) / 2, s) == pytest.approx(0.5)


def test_grid_oracle_up_to_thirty_photons():
    # N <= 30 with a coarse two-level grid: only q_N in {0, 1} plus the marginal N
    nbar, eta = 0.5, 0.685
    p = poisson_distribution(nbar)[:31]
    n = np.arange(p.size)
    score = (n + 1) / (n + 2)
    budget = eta * (1 - p[0])
    best = 0.0
    for k in range(1, p.size):
        # accept all N > k, the marginal N = k partially, nothing below
        above = p[k + 1:].sum()
        if above > budget or above + p[k] < budget:
            continue
        qk = (budget - above) / p[k]
        best = max(best, (np.sum((p * score)[k + 1:]) + qk * p[k] * score[k]) / budget)
    assert classical_benchmark(nbar, eta) == pytest.approx(best, abs=1e-6)
    assert classical_benchmark(nbar, eta) == pytest.approx(lp_benchmark(p, eta), abs=1e-6)


def test_ideal_channel_average():
    rep = qubit_experiment(DualRailChannel.balanced(1.0), 0.5, 100_000, seed=6)
    assert rep.average_fidelity > 0.995


def test_realistic_channel_average():
    rep = qubit_experiment(DualRailChannel.balanced(0.685, 0.99), 0.5, 100_000, seed=6,
                           background_per_window=5e-4)
    assert rep.average_fidelity >= 0.95
    assert rep.average_fidelity > classical_benchmark(0.5, 0.685)
