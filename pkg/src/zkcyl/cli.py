"""Command-line runner: ``zkcyl run <config>``, ``zkcyl validate <config>``, ``zkcyl version``.

A config is a flat ``key = value`` file; keys are namespaced with dots
(``grid.Mx``, ``integrator.dt``) and listed in :data:`SCHEMA`.  ``--set
key=value`` overrides a file key.  Every run writes CSV results plus
``manifest.json`` holding the config echo, versions, wall-clock time and a
SHA-256 checksum per output file.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import json
import logging
import math
import os
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .dynamics import IntegratorConfig, NumericalBlowup, evolve
from .estimates_lab import (
    THRESHOLD,
    bilinear_suite,
    gwp_arithmetic,
    loglog_slope,
    make_rough,
    probe_commutator,
    probe_quartic,
    scaling_suite,
    write_reports,
)
from .functionals import QuadratureError, energy, increment_check, mass, modified_energy
from .multipliers import IMultiplier
from .spectral_core import GridSpec, ProductPlan, SpectralField, dealias, from_function, hermitian_part, l2_norm, save_snapshot
from .symbols import CountReport, count_parabola, preimage_measure

log = logging.getLogger("zkcyl")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

SCENARIOS = (
    "conserve",
    "soliton",
    "increment",
    "drift_vs_N",
    "bilinear_suite",
    "commutator_suite",
    "counting_suite",
    "scaling_suite",
    "gwp_table",
)


def _floats(text):
    return [float(v) for v in text.replace(",", " ").split()]


def _ints(text):
    return [int(v) for v in text.replace(",", " ").split()]


def _bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _bands(text):
    """``N1:L1:N2:L2`` groups separated by commas."""
    out = []
    for item in text.split(","):
        item = item.strip()
        if item:
            parts = [float(p) for p in item.split(":")]
            if len(parts) != 4:
                raise ValueError(f"band {item!r} needs four fields N1:L1:N2:L2")
            out.append(tuple(parts))
    return out


def _fractions(text):
    return [Fraction(v) for v in text.replace(",", " ").split()]


# key -> (parser, default, help)
SCHEMA = {
    "scenario": (str, None, "one of " + ", ".join(SCENARIOS)),
    "seed": (int, 0, "root seed for every random draw"),
    "out": (str, "zkcyl-out", "output directory"),
    "grid.Lx": (float, 8.0, "x-period scale; x in [0, 2 pi Lx)"),
    "grid.lam": (float, 1.0, "circle scale; y in [0, 2 pi lam)"),
    "grid.Mx": (int, 512, "x mode count"),
    "grid.My": (int, 32, "y mode count"),
    "integrator.scheme": (str, "etdrk4", "strang or etdrk4"),
    "integrator.dt": (float, 1e-3, "time step"),
    "integrator.Tend": (float, 1.0, "final time"),
    "integrator.save_every": (int, 50, "snapshot cadence in steps"),
    "integrator.dealias": (_bool, True, "apply the 2/3 mask"),
    "imultiplier.N": (float, 8.0, "I-operator threshold"),
    "imultiplier.s": (float, 0.95, "I-operator regularity"),
    "data.kind": (str, "bump", "bump, soliton or perturbed_soliton"),
    "data.amplitude": (float, 0.5, "bump amplitude / perturbation size"),
    "data.width": (float, 4.0, "bump width in x"),
    "data.speed": (float, 1.0, "soliton speed c"),
    "sweep.N": (_floats, [8.0, 16.0, 32.0, 64.0], "I thresholds for drift and commutator sweeps"),
    "sweep.seeds": (int, 50, "number of seeds per probe suite"),
    "sweep.lambda": (_ints, [2, 4, 8], "rescaling factors"),
    "sweep.s": (_fractions, [Fraction(19, 20)], "regularities for gwp_table"),
    "sweep.bands": (_bands, [(1.0, 1.0, 4.0, 1.0), (1.0, 2.0, 4.0, 1.0)], "N1:L1:N2:L2 list"),
    "probe.K": (float, 1.0, "x-band for b3"),
    "probe.theta": (float, 0.5, "interpolation parameter for b4"),
    "probe.refine": (_bool, True, "repeat suites on a refined lattice"),
    "probe.Lx": (float, 2.0, "lattice scale for space-time probes"),
    "probe.M": (int, 64, "mode count per space direction for space-time probes"),
    "probe.Tspan": (float, 4 * math.pi, "time period for space-time probes"),
    "counting.instances": (int, 1000, "random instances per counting lemma"),
    "output.snapshots": (_bool, True, "write the final field snapshot"),
}

SWEEP_KEYS = {
    "drift_vs_N": ["sweep.N"],
    "commutator_suite": ["sweep.N"],
    "bilinear_suite": ["sweep.bands"],
    "scaling_suite": ["sweep.lambda"],
    "gwp_table": ["sweep.s"],
}


class ConfigError(ValueError):
    pass


def parse_text(text, overrides=()):
    """Raw ``{key: str}`` from file text plus ``key=value`` overrides."""
    cp = configparser.ConfigParser(interpolation=None, delimiters=("=",), comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string("[run]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc
    raw = dict(cp["run"])
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        k, v = item.split("=", 1)
        raw[k.strip()] = v.strip()
    return raw


def typed(raw):
    """Convert raw strings with :data:`SCHEMA`; unknown keys and bad values raise."""
    cfg = {}
    for key in raw:
        if key not in SCHEMA:
            raise ConfigError(f"unknown key {key!r}")
    for key, (conv, default, _) in SCHEMA.items():
        if key in raw:
            try:
                cfg[key] = conv(raw[key])
            except (ValueError, ZeroDivisionError) as exc:
                raise ConfigError(f"{key}: {exc}") from exc
        else:
            cfg[key] = default
    return cfg


def load_config(path, overrides=()):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return typed(parse_text(text, overrides))


def _grid(cfg):
    return GridSpec(Lx=cfg["grid.Lx"], lam=cfg["grid.lam"], Mx=cfg["grid.Mx"], My=cfg["grid.My"], dt=cfg["integrator.dt"])


def _integrator(cfg):
    return IntegratorConfig(
        scheme=cfg["integrator.scheme"],
        dt=cfg["integrator.dt"],
        Tend=cfg["integrator.Tend"],
        dealias=cfg["integrator.dealias"],
        save_every=cfg["integrator.save_every"],
    )


def _writable(path):
    p = Path(path).resolve()
    while not p.exists():
        p = p.parent
    return p.is_dir() and os.access(p, os.W_OK)


def validate(cfg):
    """Diagnostics (empty when the config is runnable).  No side effects."""
    diags = []
    sc = cfg["scenario"]
    if sc not in SCENARIOS:
        diags.append(f"scenario: {sc!r} is not one of {', '.join(SCENARIOS)}")
    for label, build in (("grid", _grid), ("integrator", _integrator)):
        try:
            build(cfg)
        except ValueError as exc:
            diags.append(f"{label}: {exc}")
    if sc in ("conserve", "soliton", "increment", "drift_vs_N") and not diags:
        try:
            _integrator(cfg).nsteps
        except ValueError as exc:
            diags.append(f"integrator: {exc}")
    try:
        IMultiplier(cfg["imultiplier.N"], cfg["imultiplier.s"])
    except ValueError as exc:
        diags.append(f"imultiplier: {exc}")
    if cfg["data.kind"] not in ("bump", "soliton", "perturbed_soliton"):
        diags.append(f"data.kind: unknown initial data {cfg['data.kind']!r}")
    for key in SWEEP_KEYS.get(sc, []):
        if not cfg[key]:
            diags.append(f"{key}: empty sweep list")
    if sc in ("drift_vs_N", "commutator_suite"):
        for N in cfg["sweep.N"]:
            if N < 2:
                diags.append(f"sweep.N: threshold {N} below 2")
    if cfg["sweep.seeds"] < 1:
        diags.append("sweep.seeds: need at least one seed")
    if sc == "bilinear_suite":
        Lx = cfg["probe.Lx"]
        try:
            g = GridSpec(Lx=Lx, lam=Lx, Mx=cfg["probe.M"], My=cfg["probe.M"])
        except ValueError as exc:
            diags.append(f"probe: {exc}")
            g = None
        for band in cfg["sweep.bands"]:
            for N in (band[0], band[2]):
                if g and (2 * N / math.sqrt(3) * g.Lx >= g.Mx // 2 or 2 * N * g.lam >= g.My // 2):
                    diags.append(f"sweep.bands: band N={N:g} exceeds the Nyquist band of a {g.Mx}x{g.My} grid at scale {Lx:g}")
            if min(band[1], band[3]) <= 0 or min(band[0], band[2]) <= 0:
                diags.append(f"sweep.bands: nonpositive band in {band}")
    if sc == "scaling_suite":
        for lam in cfg["sweep.lambda"]:
            if lam < 1 or lam & (lam - 1):
                diags.append(f"sweep.lambda: {lam} is not a power of two")
    if sc == "gwp_table":
        for s in cfg["sweep.s"]:
            if not 0 < s < 1:
                diags.append(f"sweep.s: s={s} outside (0, 1)")
            elif s <= THRESHOLD:
                diags.append(f"sweep.s: infeasible s={s} (the iteration needs s > 29/31)")
    if sc == "counting_suite" and cfg["counting.instances"] < 1:
        diags.append("counting.instances: need at least one instance")
    if not _writable(cfg["out"]):
        diags.append(f"out: directory {cfg['out']!r} is not writable")
    return diags


# --- initial data ------------------------------------------------------------


def line_soliton(grid, c=1.0, t=0.0, x0=None):
    """Periodised KdV soliton ``3c sech^2(sqrt(c)(x - x0 - ct)/2)``."""
    L = 2 * np.pi * grid.Lx
    x0 = L / 2 if x0 is None else x0

    def f(X, Y):
        d = (X - x0 - c * t + L / 2) % L - L / 2
        return 3 * c / np.cosh(np.sqrt(c) * d / 2) ** 2

    return from_function(grid, f)


def initial_data(cfg, grid):
    kind, a, w = cfg["data.kind"], cfg["data.amplitude"], cfg["data.width"]
    x0 = np.pi * grid.Lx
    if kind == "soliton":
        return line_soliton(grid, cfg["data.speed"])
    if kind == "perturbed_soliton":
        bump = from_function(grid, lambda X, Y: a * np.cos(Y / grid.lam + 0.4) * np.exp(-((X - x0 - 8) / 2) ** 2))
        return line_soliton(grid, cfg["data.speed"]) + bump
    return dealias(from_function(
        grid, lambda X, Y: a * np.exp(-(((X - x0) / w) ** 2)) * (1 + 0.5 * np.cos(Y / grid.lam) + 0.3 * np.sin(3 * Y / grid.lam + 1))
    ))


# --- scenarios -----------------------------------------------------------------


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in row])


def _evolve_ledger(cfg, out):
    grid = _grid(cfg)
    Imul = IMultiplier(cfg["imultiplier.N"], cfg["imultiplier.s"])
    F0 = initial_data(cfg, grid)
    states = []
    try:
        traj = evolve(F0, _integrator(cfg), callback=lambda t, s: states.append((t, s)))
    except NumericalBlowup:
        rows = [(t, mass(s), energy(s), modified_energy(s, Imul)) for t, s in states]
        _write_csv(out / "diagnostic_ledger.csv", ["t", "M", "E", "EI"], rows)
        raise
    if len(traj) % 2 == 0:
        traj = type(traj)(traj.grid, traj.times[:-1], traj.states[:-1])
    led = increment_check(traj, Imul, refine=False)
    led.write_csv(out / "ledger.csv")
    files = ["ledger.csv"]
    if cfg["output.snapshots"]:
        save_snapshot(out / "final.snap", traj.final, t=float(traj.times[-1]))
        files.append("final.snap")
    summary = {
        "mass_drift_rel": led.drift("M") / led.M[0] if led.M[0] else 0.0,
        "energy_drift_rel": led.drift("E") / (abs(led.E[0]) + 1),
        "increment_mismatch": led.final_mismatch,
    }
    return traj, led, files, summary


def scenario_conserve(cfg, out, jobs):
    _, _, files, summary = _evolve_ledger(cfg, out)
    return files, summary


def scenario_increment(cfg, out, jobs):
    return scenario_conserve(cfg, out, jobs)


def scenario_soliton(cfg, out, jobs):
    cfg = dict(cfg, **{"data.kind": "soliton"})
    traj, _, files, summary = _evolve_ledger(cfg, out)
    c = cfg["data.speed"]
    rows = [(float(t), l2_norm(s - line_soliton(traj.grid, c, t))) for t, s in zip(traj.times, traj.states)]
    _write_csv(out / "soliton_error.csv", ["t", "l2_error"], rows)
    summary["max_l2_error"] = max(r[1] for r in rows)
    return files + ["soliton_error.csv"], summary


def scenario_drift_vs_N(cfg, out, jobs):
    grid = _grid(cfg)
    Ns = cfg["sweep.N"]
    Imuls = [IMultiplier(N, cfg["imultiplier.s"]) for N in Ns]
    series = [[] for _ in Ns]
    evolve(initial_data(cfg, grid), _integrator(cfg),
           callback=lambda t, s: [ser.append(modified_energy(s, I)) for ser, I in zip(series, Imuls)])
    drift = [float(np.max(np.abs(np.array(v) - v[0]))) for v in series]
    slope = loglog_slope(Ns, drift) if all(d > 0 for d in drift) else float("nan")
    _write_csv(out / "drift_vs_N.csv", ["N", "drift"], list(zip(Ns, drift)))
    monotone = all(a > b for a, b in zip(drift, drift[1:]))
    return ["drift_vs_N.csv"], {"slope": slope, "envelope_slope": -0.1, "strictly_decreasing": monotone}


def _bilinear_job(args):
    band, seeds, grid, Tspan, K, theta, refine = args
    base, fine = bilinear_suite(*band, seeds=seeds, grid=grid, Tspan=Tspan, K=K, theta=theta, refine=refine)
    return base, fine


def scenario_bilinear_suite(cfg, out, jobs):
    Lx = cfg["probe.Lx"]
    grid = GridSpec(Lx=Lx, lam=Lx, Mx=cfg["probe.M"], My=cfg["probe.M"])
    seeds = [cfg["seed"] + k for k in range(cfg["sweep.seeds"])]
    tasks = [(b, seeds, grid, cfg["probe.Tspan"], cfg["probe.K"], cfg["probe.theta"], cfg["probe.refine"])
             for b in cfg["sweep.bands"]]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_bilinear_job, tasks))
    else:
        results = [_bilinear_job(t) for t in tasks]
    base = [r for res in results for r in res[0]]
    fine = [r for res in results for r in res[1]]
    write_reports(out / "bilinear.csv", base)
    files = ["bilinear.csv"]
    if fine:
        write_reports(out / "bilinear_refined.csv", fine)
        files.append("bilinear_refined.csv")
    conv = all(r.converged is not False for r in base)
    return files, {"reports": len(base), "all_converged": conv}


def scenario_commutator_suite(cfg, out, jobs):
    grid = GridSpec(Lx=1.0, lam=1.0, Mx=512, My=1024)
    Tspan, Mt = 2 * np.pi, 1 << 26
    seed = cfg["seed"]
    u = make_rough(grid, Tspan, Mt, seed=seed)
    v = make_rough(grid, Tspan, Mt, seed=seed + 1)
    w = make_rough(grid, Tspan, Mt, taus=(-39, -3, 11, 22, 24), decay=1.5, seed=seed + 2)
    plan, qplan = ProductPlan(u, v), ProductPlan(w, w)
    reports, base, qbase = [], [], []
    for N in cfg["sweep.N"]:
        Imul = IMultiplier(N, cfg["imultiplier.s"])
        rep, ref = probe_commutator(u, v, Imul, seed=seed, plan=plan)
        q, qref, _ = probe_quartic(w, Imul, seed=seed, plan=qplan)
        reports += [rep, ref, q, qref]
        base.append(ref.ratio)
        qbase.append(qref.ratio)
    write_reports(out / "commutator.csv", reports)
    Ns = cfg["sweep.N"]
    summary = {"commutator_slope": loglog_slope(Ns, base) if len(Ns) > 1 else None,
               "quartic_slope": loglog_slope(Ns, qbase) if len(Ns) > 1 else None,
               "envelope_slope": -0.1}
    return ["commutator.csv"], summary


def random_parabola_instances(rng, n):
    """``(a, b, c, (lo, hi), lam)`` tuples for the parabola counting check."""
    out = []
    for _ in range(n):
        a = rng.choice([-1, 1]) * 10 ** rng.uniform(-2, 1)
        b, c = rng.uniform(-20, 20, 2)
        lo = rng.uniform(-50, 50)
        out.append((float(a), float(b), float(c), (float(lo), float(lo + rng.exponential(10))), int(rng.choice([1, 2, 4, 8]))))
    return out


def random_cubic_instances(rng, n):
    """``(coeffs, J, I, dmin)`` with ``f(x) = c3 x^3 + c1 x + c0`` and ``c3 c1 > 0`` so ``|f'| >= |c1|``."""
    out = []
    for _ in range(n):
        sgn = rng.choice([-1, 1])
        c3 = sgn * rng.uniform(0.01, 2)
        c1 = sgn * rng.uniform(0.1, 5)
        c0 = rng.uniform(-5, 5)
        a = rng.uniform(-3, 2)
        J = (float(a), float(a + rng.uniform(0.5, 3)))
        lo = rng.uniform(-10, 10)
        I = (float(lo), float(lo + rng.exponential(3)))
        out.append(((float(c3), float(c1), float(c0)), J, I, abs(float(c1))))
    return out


def scenario_counting_suite(cfg, out, jobs):
    rng = np.random.default_rng(cfg["seed"])
    n = cfg["counting.instances"]
    reports = [count_parabola(a, b, c, I, lam) for a, b, c, I, lam in random_parabola_instances(rng, n)]
    with open(out / "counting.csv", "w", newline="") as fh:
        fh.write(",".join(CountReport.FIELDS) + "\n")
        for r in reports:
            fh.write(r.csv_row() + "\n")
    rows, violations = [], 0
    for (c3, c1, c0), J, I, dmin in random_cubic_instances(rng, n):
        meas = preimage_measure(lambda x: c3 * x**3 + c1 * x + c0, J, I, dmin, n=1024)
        bound = 2 * (I[1] - I[0]) / dmin
        violations += meas > bound + 1e-9
        rows.append((c3, c1, c0, J[0], J[1], I[0], I[1], dmin, meas, bound))
    _write_csv(out / "preimage.csv", ["c3", "c1", "c0", "J_lo", "J_hi", "I_lo", "I_hi", "dmin", "measure", "bound"], rows)
    return ["counting.csv", "preimage.csv"], {
        "parabola_violations": sum(not r.holds for r in reports),
        "preimage_violations": int(violations),
    }


def scenario_scaling_suite(cfg, out, jobs):
    grid = GridSpec(Lx=1.0, lam=1.0, Mx=cfg["grid.Mx"], My=cfg["grid.My"])
    rng = np.random.default_rng(cfg["seed"])
    xi, q = grid.wavenumbers()
    r = np.sqrt(3 * xi**2 + q**2)
    c = (rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)) * (1 + r) ** -2.0 * grid.dealias_mask()
    u0 = SpectralField(grid, hermitian_part(c))
    rep = scaling_suite(u0, IMultiplier(cfg["imultiplier.N"], cfg["imultiplier.s"]), cfg["sweep.lambda"])
    rows = zip(rep.lams, rep.l2_ratio, rep.l2_ratio_weighted, rep.nabla_constant)
    _write_csv(out / "scaling.csv", ["lambda", "l2_ratio", "l2_ratio_weighted", "nabla_constant"], rows)
    return ["scaling.csv"], {"l2_error": rep.l2_error, "nabla_spread": rep.nabla_spread}


def scenario_gwp_table(cfg, out, jobs):
    rows = []
    for s in cfg["sweep.s"]:
        rec = gwp_arithmetic(s)
        fmt = lambda f: "" if f is None else str(f)
        num = lambda f: "" if f is None else repr(float(f))
        rows.append((str(rec.s), rec.feasible, fmt(rec.lambda_exponent), fmt(rec.N_exponent),
                     fmt(rec.growth_exponent), num(rec.growth_exponent)))
    _write_csv(out / "gwp.csv", ["s", "feasible", "lambda_exponent", "N_exponent", "growth_exponent", "growth_float"], rows)
    return ["gwp.csv"], {"rows": len(rows)}


RUNNERS = {name: globals()[f"scenario_{name}"] for name in SCENARIOS}


# --- manifest ------------------------------------------------------------------


def sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _jsonable(cfg):
    def conv(v):
        if isinstance(v, Fraction):
            return str(v)
        if isinstance(v, (list, tuple)):
            return [conv(x) for x in v]
        return v

    return {k: conv(v) for k, v in cfg.items()}


def write_manifest(out, cfg, files, summary, started, elapsed):
    manifest = {
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "config": _jsonable(cfg),
        "started": started,
        "wall_seconds": elapsed,
        "summary": summary,
        "files": {name: sha256(out / name) for name in sorted(files)},
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")
    return manifest


def verify_manifest(out):
    """Names of files whose checksum no longer matches (or which vanished)."""
    out = Path(out)
    manifest = json.loads((out / "manifest.json").read_text())
    bad = []
    for name, digest in manifest["files"].items():
        p = out / name
        if not p.exists() or sha256(p) != digest:
            bad.append(name)
    return bad


def run(cfg, jobs=1):
    """Execute a validated config.  Returns the exit status."""
    diags = validate(cfg)
    if diags:
        for d in diags:
            print(f"config error: {d}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    started = time.strftime("%Y-%m-%dT%H:%M:%S%z")
    t0 = time.perf_counter()
    try:
        files, summary = RUNNERS[cfg["scenario"]](cfg, out, max(1, jobs))
    except (NumericalBlowup, FloatingPointError, QuadratureError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    write_manifest(out, cfg, files, summary, started, time.perf_counter() - t0)
    print(json.dumps(summary, sort_keys=True, default=str))
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="zkcyl", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a scenario config")
    r.add_argument("config")
    r.add_argument("--jobs", type=int, default=1)
    r.add_argument("--out")
    r.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    v = sub.add_parser("validate", help="check a config without running it")
    v.add_argument("config")
    v.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    sub.add_parser("version", help="print the package version")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    if args.command == "version":
        print(__version__)
        return EXIT_OK
    overrides = list(args.set)
    if getattr(args, "out", None):
        overrides.append(f"out={args.out}")
    try:
        cfg = load_config(args.config, overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "validate":
        diags = validate(cfg)
        for d in diags:
            print(d)
        return EXIT_CONFIG if diags else EXIT_OK
    return run(cfg, jobs=args.jobs)


if __name__ == "__main__":
    sys.exit(main())
