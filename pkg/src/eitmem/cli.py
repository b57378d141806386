"""Batch front end: ``eitmem <study> --config FILE [--set k=v ...] [--seed N] [--out DIR]``.

Config files are INI-style. Keys are ``section.key``; they may be written
either under a ``[section]`` header or as dotted keys at top level.
Physical parameters never have defaults. Numerics and output ranges do.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import math
import os
import platform
import sys
from dataclasses import dataclass
from typing import Callable, Dict, List

import numpy as np
import scipy

from . import __version__
from .atomic import build_cesium_d2
from .bloch import FieldConfig, MediumConfig, equal_populations, single_sublevel
from .decoherence import DephasingParams, collective_overlap_efficiency, lifetime_curve
from .errors import ConfigError, EitmemError
from .kernels import BACKEND
from .propagation import (PulseSpec, efficiency_vs_od, storage_retrieval_efficiency,
                          transmission_spectrum, tune_fields)
from .qubit import DualRailChannel, classical_benchmark, qubit_experiment
from .svgplot import line_plot

STUDIES = ("spectrum", "storage", "sweep-od", "lifetime", "qubit", "benchmark")
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
REQUIRED = object()


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _floats(s: str) -> List[float]:
    vals = [float(x) for x in s.replace(",", " ").split()]
    if not vals:
        raise ValueError("empty list")
    return vals


def _control(s: str):
    return "tuned" if s.strip().lower() == "tuned" else float(s)


def _populations(s: str):
    v = s.strip().lower().replace(" ", "")
    if v == "equal":
        return equal_populations()
    if v.startswith("m="):
        return single_sublevel(int(v[2:]))
    return tuple(_floats(s))


@dataclass(frozen=True)
class Key:
    parse: Callable
    default: object = REQUIRED


KEYS: Dict[str, Key] = {
    "run.seed": Key(int, 0),
    "medium.od": Key(float),
    "medium.length_cm": Key(float),
    "medium.gradient_mG_per_cm": Key(float),
    "medium.gamma0_over_Gamma": Key(float),
    "medium.populations": Key(_populations),
    "medium.temperature_uK": Key(float, None),
    "pulse.tau_us": Key(float),
    "pulse.n_points": Key(int, 2**14),
    "pulse.span_over_tau": Key(float, 32.0),
    "fields.omega_c_over_Gamma": Key(_control),
    "fields.delta_p_over_Gamma": Key(float),
    "fields.delta_c_over_Gamma": Key(float),
    "storage.delay_over_tau": Key(float),
    "storage.cutoff_over_tau": Key(float, 1.0),
    "storage.lock": Key(_bool, True),
    "storage.time_us": Key(float, 0.0),
    "spectrum.detuning_min_over_Gamma": Key(float, -3.0),
    "spectrum.detuning_max_over_Gamma": Key(float, 3.0),
    "spectrum.points": Key(int, 601),
    "sweep.od_list": Key(_floats),
    "lifetime.times_us": Key(_floats),
    "lifetime.gradient_band_mG_per_cm": Key(float, 1.0),
    "lifetime.include_transit": Key(_bool, False),
    "lifetime.include_motional": Key(_bool, False),
    "lifetime.beam_diameter_um": Key(float, None),
    "lifetime.angle_deg": Key(float, None),
    "qubit.nbar": Key(float),
    "qubit.windows": Key(int),
    "qubit.background_per_window": Key(float),
    "qubit.detection_efficiency": Key(float),
    "qubit.visibility": Key(float),
    "qubit.phase_rad": Key(float),
    "qubit.eta": Key(float, None),
    "benchmark.nbar_list": Key(_floats),
    "benchmark.efficiency": Key(float),
    "numerics.rtol": Key(float, 1e-9),
}

_MEDIUM = ["medium.od", "medium.length_cm", "medium.gradient_mG_per_cm",
           "medium.gamma0_over_Gamma", "medium.populations"]
_FIELDS = ["fields.delta_p_over_Gamma", "fields.delta_c_over_Gamma"]
_TUNE = _MEDIUM + _FIELDS + ["pulse.tau_us", "storage.delay_over_tau"]

NEEDS = {
    "spectrum": _MEDIUM + _FIELDS + ["fields.omega_c_over_Gamma"],
    "storage": _MEDIUM + _FIELDS + ["pulse.tau_us", "fields.omega_c_over_Gamma"],
    "sweep-od": _TUNE + ["sweep.od_list"],
    "lifetime": _TUNE + ["lifetime.times_us"],
    "qubit": ["qubit.nbar", "qubit.windows", "qubit.background_per_window",
              "qubit.detection_efficiency", "qubit.visibility", "qubit.phase_rad"],
    "benchmark": ["benchmark.nbar_list", "benchmark.efficiency"],
}


def read_config(path: str) -> Dict[str, str]:
    """Flatten an INI file into ``section.key -> raw string``."""
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    cp = configparser.ConfigParser(interpolation=None, delimiters=("=",))
    cp.optionxform = str
    try:
        cp.read_string("[__top__]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    raw = {}
    for section in cp.sections():
        for key, val in cp.items(section):
            name = key if section == "__top__" else f"{section}.{key}"
            raw[name] = val
    return raw


def resolve(study: str, raw: Dict[str, str]) -> Dict[str, object]:
    """Parse and check every key; raise one ConfigError listing all problems."""
    problems = []
    cfg: Dict[str, object] = {}
    for name in raw:
        if name not in KEYS:
            problems.append(f"unknown key {name}")
    needed = set(NEEDS[study])
    if study == "qubit" and "qubit.eta" not in raw:
        needed |= set(_TUNE)
    if study == "lifetime":
        for flag, extra in (("lifetime.include_transit", ["medium.temperature_uK", "lifetime.beam_diameter_um"]),
                            ("lifetime.include_motional", ["medium.temperature_uK", "lifetime.angle_deg"])):
            try:
                if _bool(raw.get(flag, "false")):
                    needed |= set(extra)
            except ValueError:
                pass
    for name, key in KEYS.items():
        if name in raw:
            try:
                cfg[name] = key.parse(raw[name])
            except (ValueError, TypeError) as exc:
                problems.append(f"{name}: cannot parse {raw[name]!r} ({exc})")
        elif name in needed and key.default is REQUIRED:
            problems.append(f"missing required key {name}")
        elif key.default is not REQUIRED:
            cfg[name] = key.default
    problems += _semantic_problems(study, cfg, needed)
    if problems:
        raise ConfigError(problems)
    return cfg


def _semantic_problems(study, cfg, needed) -> List[str]:
    problems = []
    scheme = build_cesium_d2()

    def collect(fn):
        try:
            fn()
        except ConfigError as exc:
            problems.extend(exc.problems)
        except ValueError as exc:
            problems.append(str(exc))
        except KeyError:
            pass  # already reported as missing or unparsable

    def check(cond, msg):
        try:
            ok = cond()
        except (KeyError, TypeError):
            return
        if not ok:
            problems.append(msg)

    # placeholders let present keys be checked even when others are missing
    probe = {"medium.od": 1.0, "medium.length_cm": 1.0, "medium.gradient_mG_per_cm": 0.0,
             "medium.gamma0_over_Gamma": 0.0, "medium.populations": equal_populations(),
             "fields.delta_p_over_Gamma": 0.0, "fields.delta_c_over_Gamma": 0.0,
             "pulse.tau_us": 1.0}
    probe.update(cfg)
    if "medium.od" in needed:
        collect(lambda: _medium(probe, scheme))
    if "fields.delta_p_over_Gamma" in needed:
        oc = cfg.get("fields.omega_c_over_Gamma", 0.0)
        collect(lambda: _fields(probe, scheme, 0.0 if oc == "tuned" else oc))
    if "pulse.tau_us" in needed:
        collect(lambda: _pulse(probe))
    if "storage.delay_over_tau" in needed:
        check(lambda: cfg["storage.delay_over_tau"] > 0, "storage.delay_over_tau must be > 0")
    if cfg.get("fields.omega_c_over_Gamma") == "tuned" and "storage.delay_over_tau" not in cfg:
        problems.append("fields.omega_c_over_Gamma = tuned needs storage.delay_over_tau")
    check(lambda: cfg["storage.time_us"] >= 0, "storage.time_us must be >= 0")
    check(lambda: cfg["numerics.rtol"] > 0, "numerics.rtol must be > 0")
    if study == "spectrum":
        check(lambda: cfg["spectrum.detuning_max_over_Gamma"] > cfg["spectrum.detuning_min_over_Gamma"],
              "spectrum detuning range is empty")
        check(lambda: cfg["spectrum.points"] >= 2, "spectrum.points must be >= 2")
    if study == "sweep-od":
        check(lambda: all(x >= 0 for x in cfg["sweep.od_list"]), "sweep.od_list entries must be >= 0")
    if study == "lifetime":
        check(lambda: all(t >= 0 for t in cfg["lifetime.times_us"]),
              "lifetime.times_us entries must be >= 0")
    if study == "qubit":
        check(lambda: cfg["qubit.nbar"] > 0, "qubit.nbar must be > 0")
        check(lambda: cfg["qubit.windows"] > 0, "qubit.windows must be > 0")
        check(lambda: cfg["qubit.background_per_window"] >= 0, "qubit.background_per_window must be >= 0")
        for k in ("qubit.detection_efficiency", "qubit.visibility"):
            check(lambda k=k: 0 <= cfg[k] <= 1, f"{k} must be in [0, 1]")
        check(lambda: cfg["qubit.eta"] is None or 0 < cfg["qubit.eta"] <= 1, "qubit.eta must be in (0, 1]")
    if study == "benchmark":
        check(lambda: all(x > 0 for x in cfg["benchmark.nbar_list"]),
              "benchmark.nbar_list entries must be > 0")
        check(lambda: 0 < cfg["benchmark.efficiency"] <= 1, "benchmark.efficiency must be in (0, 1]")
    return problems


def _medium(cfg, scheme) -> MediumConfig:
    G = scheme.gamma
    T = cfg.get("medium.temperature_uK")
    return MediumConfig(od=cfg["medium.od"], length=cfg["medium.length_cm"] * 1e-2,
                        gradient=cfg["medium.gradient_mG_per_cm"] * 1e-3,
                        gamma0=cfg["medium.gamma0_over_Gamma"] * G,
                        populations=cfg["medium.populations"],
                        temperature=None if T is None else T * 1e-6)


def _fields(cfg, scheme, omega_c_over_gamma) -> FieldConfig:
    G = scheme.gamma
    return FieldConfig(omega_c_over_gamma * G, cfg["fields.delta_p_over_Gamma"] * G,
                       cfg["fields.delta_c_over_Gamma"] * G)


def _pulse(cfg) -> PulseSpec:
    tau = cfg["pulse.tau_us"] * 1e-6
    return PulseSpec(tau, n_points=cfg["pulse.n_points"], span=cfg["pulse.span_over_tau"] * tau)


def _tuned(cfg, scheme, medium, pulse) -> FieldConfig:
    base = _fields(cfg, scheme, 0.0)
    target = cfg["storage.delay_over_tau"] * pulse.tau
    return tune_fields(target, base, medium, scheme, pulse, lock=cfg["storage.lock"],
                       rtol=cfg["numerics.rtol"])


def _resolve_fields(cfg, scheme, medium, pulse=None) -> FieldConfig:
    oc = cfg["fields.omega_c_over_Gamma"]
    if oc == "tuned":
        pulse = pulse or _pulse(cfg)
        return _tuned(cfg, scheme, medium, pulse)
    return _fields(cfg, scheme, oc)


@dataclass
class StudyOutput:
    header: List[str]
    rows: List[list]
    svg: str | None = None


def run_spectrum(cfg, scheme) -> StudyOutput:
    G = scheme.gamma
    medium = _medium(cfg, scheme)
    fields = _resolve_fields(cfg, scheme, medium)
    det = np.linspace(cfg["spectrum.detuning_min_over_Gamma"], cfg["spectrum.detuning_max_over_Gamma"],
                      cfg["spectrum.points"])
    # detuning is measured from the probe carrier; chi depends on omega + delta_p
    T = transmission_spectrum(det * G - fields.delta_p, fields, medium, scheme, cfg["numerics.rtol"]).power
    rows = [[d, t] for d, t in zip(det, T)]
    svg = line_plot([("transmission", det, T)], "probe detuning / Gamma", "transmission")
    return StudyOutput(["detuning_over_Gamma", "transmission"], rows, svg)


def run_storage(cfg, scheme) -> StudyOutput:
    G = scheme.gamma
    medium = _medium(cfg, scheme)
    pulse = _pulse(cfg)
    fields = _resolve_fields(cfg, scheme, medium, pulse)
    res = storage_retrieval_efficiency(pulse, fields, medium, scheme,
                                       storage_time=cfg["storage.time_us"] * 1e-6,
                                       cutoff=cfg["storage.cutoff_over_tau"] * pulse.tau,
                                       rtol=cfg["numerics.rtol"])
    header = ["od", "omega_c_over_Gamma", "delta_p_over_Gamma", "efficiency", "leakage",
              "storage_factor", "overall"]
    rows = [[medium.od, fields.omega_c / G, fields.delta_p / G, res.efficiency, res.leakage,
             res.storage_factor, res.overall]]
    t_us = (res.times - pulse.t0) / 1e-6
    keep = np.abs(t_us) <= 8 * pulse.tau / 1e-6
    stride = max(1, int(keep.sum()) // 400)
    svg = line_plot([("input", t_us[keep][::stride], np.abs(res.input_envelope[keep][::stride]) ** 2),
                     ("output", t_us[keep][::stride], np.abs(res.output_envelope[keep][::stride]) ** 2)],
                    "time (us)", "intensity")
    return StudyOutput(header, rows, svg)


def run_sweep(cfg, scheme) -> StudyOutput:
    G = scheme.gamma
    medium = _medium(cfg, scheme)
    pulse = _pulse(cfg)
    rows_ = efficiency_vs_od(cfg["sweep.od_list"], medium, _fields(cfg, scheme, 0.0), scheme, pulse,
                             target_delay=cfg["storage.delay_over_tau"] * pulse.tau,
                             lock=cfg["storage.lock"],
                             cutoff=cfg["storage.cutoff_over_tau"] * pulse.tau,
                             rtol=cfg["numerics.rtol"])
    if all(r.error for r in rows_):
        raise EitmemError("every sweep point failed: " + rows_[0].error)
    for r in rows_:
        if r.error:
            print(f"warning: od {r.od:g}: {r.error}", file=sys.stderr)
    rows = [[r.od, r.omega_c / G, r.efficiency, r.leakage] for r in rows_]
    svg = line_plot([("efficiency", [r.od for r in rows_], [r.efficiency for r in rows_])],
                    "optical depth", "efficiency")
    return StudyOutput(["od", "omega_c_over_Gamma", "efficiency", "leakage"], rows, svg)


def _dephasing(cfg, scheme, medium) -> DephasingParams:
    d = cfg.get("lifetime.beam_diameter_um")
    a = cfg.get("lifetime.angle_deg")
    return DephasingParams.from_medium(medium, scheme,
                                       beam_diameter=None if d is None else d * 1e-6,
                                       angle=None if a is None else math.radians(a))


def _memory_efficiency(cfg, scheme, medium) -> float:
    pulse = _pulse(cfg)
    fields = _tuned(cfg, scheme, medium, pulse)
    return storage_retrieval_efficiency(pulse, fields, medium, scheme,
                                        cutoff=cfg["storage.cutoff_over_tau"] * pulse.tau,
                                        rtol=cfg["numerics.rtol"]).efficiency


def run_lifetime(cfg, scheme) -> StudyOutput:
    medium = _medium(cfg, scheme)
    eta = _memory_efficiency(cfg, scheme, medium)
    params = _dephasing(cfg, scheme, medium)
    times = [t * 1e-6 for t in cfg["lifetime.times_us"]]
    pts = lifetime_curve(times, eta, medium.populations, params, scheme,
                         gradient_band=cfg["lifetime.gradient_band_mG_per_cm"] * 1e-3,
                         include_transit=cfg["lifetime.include_transit"],
                         include_motional=cfg["lifetime.include_motional"])
    rows = [[p.time / 1e-6, p.overall, p.band_low, p.band_high] for p in pts]
    t = [r[0] for r in rows]
    svg = line_plot([("efficiency", t, [r[1] for r in rows]), ("band low", t, [r[2] for r in rows]),
                     ("band high", t, [r[3] for r in rows])], "storage time (us)", "efficiency")
    return StudyOutput(["time_us", "efficiency", "band_low", "band_high"], rows, svg)


def run_qubit(cfg, scheme, seed) -> StudyOutput:
    eta = cfg.get("qubit.eta")
    if eta is None:
        medium = _medium(cfg, scheme)
        eta = _memory_efficiency(cfg, scheme, medium)
        t = cfg["storage.time_us"] * 1e-6
        if t > 0:
            eta *= collective_overlap_efficiency(t, medium.populations,
                                                 _dephasing(cfg, scheme, medium), scheme)
    ch = DualRailChannel.balanced(eta, cfg["qubit.visibility"], cfg["qubit.phase_rad"])
    rep = qubit_experiment(ch, cfg["qubit.nbar"], cfg["qubit.windows"], seed,
                           cfg["qubit.background_per_window"], cfg["qubit.detection_efficiency"])
    rows = [[r.state, r.fidelity, r.fidelity_err, r.efficiency] for r in rep.results]
    err = math.sqrt(sum(r.fidelity_err**2 for r in rep.results)) / len(rep.results)
    rows.append(["average", rep.average_fidelity, err, rep.average_efficiency])
    rows.append(["benchmark", rep.benchmark, float("nan"), rep.memory_efficiency])
    return StudyOutput(["state", "fidelity", "fidelity_err", "efficiency"], rows)


def run_benchmark(cfg, scheme) -> StudyOutput:
    eff = cfg["benchmark.efficiency"]
    rows = [[n, classical_benchmark(n, eff)] for n in cfg["benchmark.nbar_list"]]
    svg = line_plot([("bound", [r[0] for r in rows], [r[1] for r in rows])], "mean photon number",
                    "classical fidelity bound")
    return StudyOutput(["nbar", "bound"], rows, svg)


def _cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".12g")
    return str(v)


def to_csv(out: StudyOutput) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(out.header)
    for row in out.rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def _jsonable(v):
    if isinstance(v, tuple):
        return list(v)
    return v


def manifest(study, cfg, seed) -> str:
    doc = {
        "study": study,
        "seed": seed,
        "config": {k: _jsonable(v) for k, v in sorted(cfg.items())},
        "versions": {"eitmem": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                     "python": platform.python_version(), "kernel_backend": BACKEND},
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _fail(code: int, kind: str, problems: List[str]) -> int:
    print(json.dumps({"error": kind, "problems": problems}), file=sys.stderr)
    return code


def run(study: str, config_path: str, overrides=(), seed: int | None = None,
        out_dir: str = "eitmem-out") -> int:
    """Run one study; returns the process exit code."""
    try:
        raw = read_config(config_path)
        for item in overrides:
            if "=" not in item:
                raise ConfigError(f"override {item!r} is not key=value")
            k, v = item.split("=", 1)
            raw[k.strip()] = v.strip()
        if seed is not None:
            raw["run.seed"] = str(seed)
        cfg = resolve(study, raw)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, "config", exc.problems)
    seed = cfg["run.seed"]
    scheme = build_cesium_d2()
    runners = {"spectrum": run_spectrum, "storage": run_storage, "sweep-od": run_sweep,
               "lifetime": run_lifetime, "benchmark": run_benchmark,
               "qubit": lambda c, s: run_qubit(c, s, seed)}
    try:
        with np.errstate(all="ignore"):
            out = runners[study](cfg, scheme)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, "config", exc.problems)
    except EitmemError as exc:
        return _fail(EXIT_NUMERIC, "numerical", [str(exc)])
    try:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "results.csv"), "w", newline="") as fh:
            fh.write(to_csv(out))
        with open(os.path.join(out_dir, "run-manifest.json"), "w") as fh:
            fh.write(manifest(study, cfg, seed))
        if out.svg is not None:
            with open(os.path.join(out_dir, "plot.svg"), "w") as fh:
                fh.write(out.svg)
    except OSError as exc:
        return _fail(EXIT_CONFIG, "output", [f"cannot write to {out_dir}: {exc.strerror}"])
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="eitmem", description="EIT quantum memory studies")
    p.add_argument("study", choices=STUDIES)
    p.add_argument("--config", required=True, help="INI config file")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config key (repeatable)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default="eitmem-out", help="output directory")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return run(args.study, args.config, args.set, args.seed, args.out)


if __name__ == "__main__":
    sys.exit(main())
