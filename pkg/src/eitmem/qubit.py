"""Polarization-qubit layer: dual-rail channel, photon counting, tomography
and the measure-and-prepare benchmark for weak coherent inputs."""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Sequence

import numpy as np
from scipy.stats import poisson

from .errors import ConfigError, NumericalError

SQ2 = 1 / math.sqrt(2)
KETS = {
    "H": np.array([1, 0], dtype=complex),
    "V": np.array([0, 1], dtype=complex),
    "D": np.array([SQ2, SQ2], dtype=complex),
    "A": np.array([SQ2, -SQ2], dtype=complex),
    "R": np.array([SQ2, -1j * SQ2], dtype=complex),
    "L": np.array([SQ2, 1j * SQ2], dtype=complex),
}
BASES = (("H", "V"), ("D", "A"), ("R", "L"))
PROJECTIONS = tuple(p for pair in BASES for p in pair)


class ReconstructionError(NumericalError):
    pass


class PolarizationState:
    """2x2 density matrix in the {H, V} basis."""

    def __init__(self, rho, atol: float = 1e-10):
        rho = np.array(rho, dtype=complex)
        if rho.shape != (2, 2):
            raise ValueError("density matrix must be 2x2")
        problems = []
        if not np.allclose(rho, rho.conj().T, atol=atol):
            problems.append("not Hermitian")
        if abs(np.trace(rho).real - 1) > atol:
            problems.append(f"trace {np.trace(rho).real:.12g} != 1")
        if np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min() < -atol:
            problems.append("not positive semidefinite")
        if problems:
            raise ValueError("invalid density matrix: " + ", ".join(problems))
        self.rho = rho

    @classmethod
    def from_ket(cls, ket) -> "PolarizationState":
        ket = np.asarray(ket, dtype=complex)
        ket = ket / np.linalg.norm(ket)
        return cls(np.outer(ket, ket.conj()))

    @classmethod
    def named(cls, label: str) -> "PolarizationState":
        return cls.from_ket(KETS[label])

    def probability(self, label: str) -> float:
        k = KETS[label]
        return float(np.real(k.conj() @ self.rho @ k))

    @property
    def purity(self) -> float:
        return float(np.real(np.trace(self.rho @ self.rho)))

    def __repr__(self):
        return f"PolarizationState({np.array2string(self.rho, precision=4)})"


@dataclass(frozen=True)
class DualRailChannel:
    """Phenomenological dual-rail memory: per-rail efficiency, recombination
    visibility and residual interferometer phase."""

    eta_h: float
    eta_v: float
    visibility: float = 1.0
    phase: float = 0.0

    def __post_init__(self):
        problems = [f"{n} must be in [0, 1]" for n in ("eta_h", "eta_v", "visibility")
                    if not 0 <= getattr(self, n) <= 1]
        if problems:
            raise ConfigError(problems)

    @classmethod
    def balanced(cls, eta: float, visibility: float = 1.0, phase: float = 0.0) -> "DualRailChannel":
        return cls(eta, eta, visibility, phase)


def apply_channel(state: PolarizationState, ch: DualRailChannel):
    """Returns (normalized output state, transmitted probability)."""
    r = state.rho
    coh = math.sqrt(ch.eta_h * ch.eta_v) * ch.visibility * np.exp(1j * ch.phase)
    out = np.array([[ch.eta_h * r[0, 0], coh * r[0, 1]],
                    [np.conj(coh) * r[1, 0], ch.eta_v * r[1, 1]]])
    eff = float(np.real(np.trace(out)))
    if eff <= 0:
        raise NumericalError("channel transmits nothing")
    return PolarizationState(out / eff), eff


@dataclass
class TomographyRecord:
    """Per-window detector counts for the six projections."""

    counts: Dict[str, np.ndarray]
    nbar: float = float("nan")
    background: float = 0.0

    def __post_init__(self):
        missing = [p for p in PROJECTIONS if p not in self.counts]
        if missing:
            raise ConfigError(f"missing projections {missing}")
        self.counts = {p: np.asarray(self.counts[p], dtype=np.int64) for p in PROJECTIONS}
        if any(np.any(c < 0) for c in self.counts.values()):
            raise ConfigError("counts must be non-negative")

    @property
    def windows(self) -> int:
        return int(self.counts["H"].size)

    def totals(self) -> Dict[str, int]:
        return {p: int(c.sum()) for p, c in self.counts.items()}

    @classmethod
    def from_totals(cls, totals: Dict[str, float], **kw) -> "TomographyRecord":
        return cls({p: np.array([totals[p]]) for p in PROJECTIONS}, **kw)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["basis", "window_index", "counts"])
            for p in PROJECTIONS:
                for i, c in enumerate(self.counts[p]):
                    w.writerow([p, i, int(c)])

    @classmethod
    def from_csv(cls, path, **kw) -> "TomographyRecord":
        rows: Dict[str, Dict[int, int]] = {p: {} for p in PROJECTIONS}
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                if row["basis"] not in rows:
                    raise ConfigError(f"unknown projection {row['basis']!r}")
                rows[row["basis"]][int(row["window_index"])] = int(row["counts"])
        counts = {}
        for p, d in rows.items():
            arr = np.zeros(max(d) + 1 if d else 0, dtype=np.int64)
            for i, c in d.items():
                arr[i] = c
            counts[p] = arr
        return cls(counts, **kw)


def stream_rng(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for one Monte Carlo stream, fixed by (seed, key)."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, key)]))


def simulate_counts(state: PolarizationState, ch: DualRailChannel, nbar: float,
                    windows: int, background_per_window: float = 0.0,
                    detection_efficiency: float = 1.0, seed: int = 0,
                    stream: int = 0) -> TomographyRecord:
    """Poisson detector counts for ``windows`` pulses per measurement basis.

    Each basis is measured with two detectors behind a polarizing splitter;
    each detector sees the signal projection plus its own Poissonian
    background.
    """
    if nbar < 0 or windows <= 0:
        raise ConfigError("need nbar >= 0 and windows > 0")
    out, eff = apply_channel(state, ch)
    mu = nbar * eff * detection_efficiency
    counts = {}
    for b, pair in enumerate(BASES):
        rng = stream_rng(seed, stream, b)
        for label in pair:
            lam = mu * out.probability(label) + background_per_window
            counts[label] = rng.poisson(max(lam, 0.0), size=windows)
    return TomographyRecord(counts, nbar=nbar, background=background_per_window)


def _pauli(pair) -> np.ndarray:
    a, b = (KETS[x] for x in pair)
    return np.outer(a, a.conj()) - np.outer(b, b.conj())


def stokes(record: TomographyRecord) -> np.ndarray:
    tot = record.totals()
    s = []
    for plus, minus in BASES:
        n = tot[plus] + tot[minus]
        if n == 0:
            raise ReconstructionError(f"no counts in the {plus}/{minus} basis")
        s.append((tot[plus] - tot[minus]) / n)
    return np.array(s)


def reconstruct(record: TomographyRecord) -> PolarizationState:
    """Linear-inversion tomography, projected onto the physical states."""
    s = stokes(record)
    rho = 0.5 * (np.eye(2) + sum(si * _pauli(pair) for si, pair in zip(s, BASES)))
    return PolarizationState(physical_projection(rho))


def physical_projection(rho) -> np.ndarray:
    """Clip negative eigenvalues and renormalize."""
    rho = 0.5 * (rho + rho.conj().T)
    w, v = np.linalg.eigh(rho)
    if w.min() >= 0:
        return rho / np.trace(rho).real
    w = np.clip(w, 0, None)
    out = (v * w) @ v.conj().T
    return out / np.trace(out).real


def fidelity(rho, psi) -> float:
    """Conditional fidelity <psi|rho|psi> with a pure target state."""
    rho = rho.rho if isinstance(rho, PolarizationState) else np.asarray(rho)
    psi = KETS[psi] if isinstance(psi, str) else np.asarray(psi, dtype=complex)
    if abs(np.linalg.norm(psi) - 1) > 1e-9:
        raise ValueError("target state must be normalized")
    return float(np.clip(np.real(psi.conj() @ rho @ psi), 0.0, 1.0))


def fidelity_error(record: TomographyRecord, target: str) -> float:
    """Counting-statistics standard error of the fidelity with a canonical state."""
    tot = record.totals()
    s = stokes(record)
    bloch = [np.real(KETS[target].conj() @ _pauli(pair) @ KETS[target]) for pair in BASES]
    var = 0.0
    for si, bi, (p, m) in zip(s, bloch, BASES):
        var += 0.25 * bi**2 * max(1 - si**2, 0.0) / (tot[p] + tot[m])
    return math.sqrt(var)


@dataclass
class BenchmarkSolution:
    value: float
    acceptance: np.ndarray
    feasible: bool


def poisson_distribution(nbar: float, tail: float = 1e-12) -> np.ndarray:
    n_max = int(poisson.isf(tail, nbar)) + 1 if nbar > 0 else 0
    return poisson.pmf(np.arange(n_max + 1), nbar)


def benchmark_solution(p: Sequence[float], memory_efficiency: float) -> BenchmarkSolution:
    """Best measure-and-prepare fidelity for photon-number distribution ``p``.

    The cheater may accept N-photon inputs with probability q_N and scores
    (N+1)/(N+2) on them; the accepted mass must equal
    memory_efficiency * (1 - p_0). Filling from the largest N down is
    optimal because the score increases with N.
    """
    p = np.asarray(p, dtype=float)
    if not 0 < memory_efficiency <= 1:
        raise ConfigError("memory efficiency must be in (0, 1]")
    n = np.arange(p.size)
    score = (n + 1) / (n + 2)
    avail = p.copy()
    avail[0] = 0.0
    budget = memory_efficiency * (1 - p[0])
    q = np.zeros_like(p)
    # absolute slack covers the tail dropped when a Poisson p is truncated
    feasible = budget <= avail.sum() + 1e-9
    if budget > avail.sum():
        budget = avail.sum()
    left = budget
    for N in range(p.size - 1, 0, -1):
        if left <= 0 or avail[N] == 0:
            continue
        take = min(avail[N], left)
        q[N] = take / avail[N]
        left -= take
    mass = np.sum(q * avail)
    if mass <= 0:
        raise NumericalError("no photons to accept")
    return BenchmarkSolution(float(np.sum(q * avail * score) / mass), q, feasible)


def classical_benchmark(nbar: float, memory_efficiency: float) -> float:
    """Classical fidelity bound for a Poissonian input of mean ``nbar``."""
    if not nbar > 0:
        raise ConfigError("nbar must be > 0")
    sol = benchmark_solution(poisson_distribution(nbar), memory_efficiency)
    if not sol.feasible:
        warnings.warn("efficiency constraint infeasible; returning the unconstrained bound")
    return sol.value


@dataclass
class StateResult:
    state: str
    fidelity: float
    fidelity_err: float
    efficiency: float
    rho: np.ndarray = field(repr=False)


@dataclass
class QubitReport:
    results: List[StateResult]
    benchmark: float
    memory_efficiency: float

    @property
    def average_fidelity(self) -> float:
        return float(np.mean([r.fidelity for r in self.results]))

    @property
    def average_efficiency(self) -> float:
        return float(np.mean([r.efficiency for r in self.results]))


def qubit_experiment(channel: DualRailChannel, nbar: float, windows: int, seed: int = 0,
                     background_per_window: float = 0.0, detection_efficiency: float = 1.0,
                     states: Iterable[str] = PROJECTIONS) -> QubitReport:
    """Store the six canonical qubits, reconstruct each, compare to the benchmark.

    ``efficiency`` per state is estimated from the background-subtracted
    count rate, as it would be measured.
    """
    results = []
    for i, label in enumerate(states):
        rec = simulate_counts(PolarizationState.named(label), channel, nbar, windows,
                              background_per_window, detection_efficiency, seed, stream=i)
        rho = reconstruct(rec)
        tot = record_signal(rec)
        eff = tot / (len(BASES) * windows * nbar * detection_efficiency) if nbar > 0 else float("nan")
        results.append(StateResult(label, fidelity(rho, label), fidelity_error(rec, label),
                                   eff, rho.rho))
    mem = 0.5 * (channel.eta_h + channel.eta_v)
    return QubitReport(results, classical_benchmark(nbar, mem) if nbar > 0 else float("nan"), mem)


def record_signal(rec: TomographyRecord) -> float:
    total = sum(rec.totals().values())
    return total - len(PROJECTIONS) * rec.windows * rec.background


def density_matrix_row(rho) -> List[float]:
    """Eight numbers: Re and Im of rho_HH, rho_HV, rho_VH, rho_VV."""
    rho = rho.rho if isinstance(rho, PolarizationState) else np.asarray(rho)
    flat = rho.reshape(-1)
    return [float(x) for c in flat for x in (c.real, c.imag)]


def density_matrix_from_row(row: Sequence[float]) -> PolarizationState:
    if len(row) != 8:
        raise ValueError("need 8 numbers")
    vals = [complex(row[2 * i], row[2 * i + 1]) for i in range(4)]
    return PolarizationState(np.array(vals).reshape(2, 2))
