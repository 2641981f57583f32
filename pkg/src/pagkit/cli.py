"""Batch front end: JSON config in, CSV/JSON sweep and validation data out.

Subcommands: linpag, nlpag, validate, estimate-b.  Every output file embeds
a header with the config hash, seed, grid size and package version, floats
are written with 17 significant digits, and re-running a command with the
same config and seed reproduces the files byte for byte at any --jobs.

Exit codes: 0 ok, 2 model invalid, 3 missing prerequisite, 4 bound
violation detected, 5 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__, gains, linops, pll, sim
from .errors import NotHurwitzError, PagkitError
from .model import (
    Composition,
    GainCurve,
    GainRow,
    NonlinearSystem,
    RhoVector,
    StateSpace,
    Structure,
    composition_rho,
)

EXIT_OK = 0
EXIT_MODEL_INVALID = 2
EXIT_MISSING_PREREQ = 3
EXIT_BOUND_VIOLATION = 4
EXIT_NUMERICAL_FAILURE = 5

_COMPOSITIONS = {c.value: c for c in Composition}


class ConfigError(Exception):
    """Invalid or incomplete run configuration."""

    def __init__(self, message, exit_code=EXIT_MODEL_INVALID):
        super().__init__(message)
        self.exit_code = exit_code


def _fmt(x) -> str:
    return "%.17g" % float(x)


def _parse_real(value, what: str) -> float:
    if isinstance(value, str):
        if value.lower() in ("inf", "infinity", "+inf"):
            return math.inf
        raise ConfigError(f"{what}: cannot parse {value!r}")
    return float(value)


@dataclass
class RunConfig:
    """Validated view of the JSON configuration document."""

    raw: dict
    system: NonlinearSystem
    periods: list
    N: int
    levels: list
    compositions: list
    b_table: dict               # level -> b (may be +inf)
    mf_mode: str                # "explicit" | "estimate" | "none"
    mf_values: dict             # level -> M_f (explicit mode)
    M_g: float
    seed: int
    n_trials: int
    b_trials: int
    n_harmonics: int
    tol_ps: float
    max_periods: int

    @property
    def config_hash(self) -> str:
        blob = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _build_system(spec: dict) -> NonlinearSystem:
    if "name" in spec:
        if spec["name"] != "pll":
            raise ConfigError(f"unknown built-in system {spec['name']!r}")
        params = pll.PllParams(
            zeta=float(spec.get("zeta", pll.PllParams.zeta)),
            omega_c=float(spec.get("omega_c", pll.PllParams.omega_c)),
        )
        u_max = _parse_real(spec.get("u_max", pll.DEFAULT_U_MAX), "u_max")
        return pll.pll_system(params, u_max=u_max)
    if "matrices" not in spec:
        raise ConfigError("system needs either a built-in 'name' or 'matrices'")
    mats = spec["matrices"]
    linear = StateSpace(A=mats["A"], B=mats["B"], C=mats["C"], F=mats.get("F"))
    structure = Structure(spec.get("structure", "general"))
    return NonlinearSystem(
        linear=linear,
        nonlinearity=spec.get("nonlinearity", "none"),
        structure=structure,
        u_max=_parse_real(spec.get("u_max", math.inf), "u_max"),
    )


def load_config(doc: dict) -> RunConfig:
    if "system" not in doc:
        raise ConfigError("config is missing 'system'")
    system = _build_system(doc["system"])

    if "periods" in doc:
        periods = [float(t) for t in doc["periods"]]
        if not periods or any(t <= 0 for t in periods):
            raise ConfigError("'periods' must be a nonempty list of positive reals")
    elif "period_grid" in doc:
        g = doc["period_grid"]
        t_min, t_max, count = float(g["t_min"]), float(g["t_max"]), int(g["count"])
        if t_min <= 0 or t_max <= t_min or count < 2:
            raise ConfigError("period_grid needs 0 < t_min < t_max and count >= 2")
        periods = list(np.geomspace(t_min, t_max, count))
    else:
        raise ConfigError("config needs 'periods' or 'period_grid'")
    periods = sorted(periods)

    levels = sorted(float(v) for v in doc.get("levels", []))
    if any(lv < 0 for lv in levels):
        raise ConfigError("levels must be nonnegative")
    if any(lv >= system.u_max for lv in levels):
        raise ConfigError("levels must stay below the system's u_max")

    comps = []
    for name in doc.get("compositions", [c.value for c in Composition]):
        if name not in _COMPOSITIONS:
            raise ConfigError(f"unknown composition {name!r}")
        comps.append(_COMPOSITIONS[name])

    b_table = {}
    for pair in doc.get("b_table", []):
        lvl, b = pair
        b_table[float(lvl)] = _parse_real(b, "b_table entry")

    mf_spec = doc.get("M_f", 0.0)
    mf_values = {}
    if isinstance(mf_spec, dict):
        mf_mode = mf_spec.get("mode")
        if mf_mode == "explicit":
            for lvl, v in mf_spec.get("values", []):
                mf_values[float(lvl)] = float(v)
        elif mf_mode != "estimate":
            raise ConfigError("M_f mode must be 'estimate' or 'explicit'")
    else:
        mf_mode = "explicit"
        mf_values = {lv: float(mf_spec) for lv in levels}

    return RunConfig(
        raw=doc,
        system=system,
        periods=periods,
        N=int(doc.get("N", 4096)),
        levels=levels,
        compositions=comps,
        b_table=b_table,
        mf_mode=mf_mode,
        mf_values=mf_values,
        M_g=float(doc.get("M_g", 0.0)),
        seed=int(doc.get("seed", 0)),
        n_trials=int(doc.get("n_trials", 200)),
        b_trials=int(doc.get("b_trials", 24)),
        n_harmonics=int(doc.get("n_harmonics", 8)),
        tol_ps=float(doc.get("tol_ps", sim.DEFAULT_TOL_PS)),
        max_periods=int(doc.get("max_periods", sim.DEFAULT_MAX_PERIODS)),
    )


def _header(cfg: RunConfig, command: str) -> str:
    return (f"# pagkit v{__version__} command={command} "
            f"config=sha256:{cfg.config_hash} seed={cfg.seed} N={cfg.N}")


def _write_csv(path: Path, header: str, columns: list, rows: list):
    lines = [header, ",".join(columns)]
    for row in rows:
        lines.append(",".join(str(v) if isinstance(v, str) else _fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def _write_json(path: Path, payload: dict):
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _require_b(cfg: RunConfig, level: float) -> float:
    if level not in cfg.b_table:
        raise ConfigError("b-required (supply table or run estimate-b)",
                          EXIT_MISSING_PREREQ)
    return cfg.b_table[level]


def _resolve_mf(cfg: RunConfig):
    """Per-level (M_f, y_max) pairs; 'estimate' mode scans the PLL remainder
    on the region set by the configured invariant-set bound."""
    out = {}
    for level in cfg.levels:
        if cfg.mf_mode == "estimate":
            spec = cfg.raw["system"]
            if spec.get("name") != "pll":
                raise ConfigError("M_f estimation is only available for the pll system",
                                  EXIT_MISSING_PREREQ)
            y_max = _require_b(cfg, level)
            if not math.isfinite(y_max) or y_max <= 0:
                raise ConfigError("M_f estimation needs a finite positive b",
                                  EXIT_MISSING_PREREQ)
            params = pll.PllParams(
                zeta=float(spec.get("zeta", pll.PllParams.zeta)),
                omega_c=float(spec.get("omega_c", pll.PllParams.omega_c)),
            )
            out[level] = (pll.estimate_Mf(params, y_max, level), y_max)
        else:
            if level not in cfg.mf_values:
                raise ConfigError(f"M_f missing for level {level:g}",
                                  EXIT_MISSING_PREREQ)
            out[level] = (cfg.mf_values[level], cfg.b_table.get(level, math.inf))
    return out


def _with_constants(nsys: NonlinearSystem, M_f: float, M_g: float) -> NonlinearSystem:
    if nsys.nonlinearity == "none":
        # f is identically zero, so its remainder constants are zero too
        M_f = M_g = 0.0
    if nsys.structure is Structure.OUTPUT_LURIE:
        M_g = 0.0
    return dataclasses.replace(nsys, M_f=M_f, M_g=M_g)


def _nonlinear_bound(nsys: NonlinearSystem, T: float, N: int, b: float,
                     rho: RhoVector, seed: int) -> gains.NonlinearPagResult:
    if nsys.structure is Structure.OUTPUT_LURIE:
        return gains.nonlinear_pag_special(nsys, T, N, b, rho, seed)
    return gains.nonlinear_pag_general(nsys, T, N, b, rho, seed)


def _ag_bound(nsys: NonlinearSystem, b: float) -> float:
    """Classical asymptotic bound on |y| from the invariant-set bound.

    For output-Lurie systems b already bounds |Cx|; for general structure
    combine the output map norm with the quadratic bound on g.
    """
    if nsys.structure is Structure.OUTPUT_LURIE:
        return b
    if not math.isfinite(b):
        return math.inf
    return float(np.linalg.norm(nsys.linear.C, ord=2)) * b + nsys.M_g * b * b


def _jobs_from(args) -> int:
    if args.jobs is not None:
        return max(1, args.jobs)
    env = os.environ.get("PAGKIT_JOBS")
    return max(1, int(env)) if env else 1


def _parallel_map(fn, items, jobs: int):
    if jobs <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------- linpag ---

def cmd_linpag(cfg: RunConfig, out_dir: Path, jobs: int = 1) -> int:
    sys_lin = cfg.system.linear
    linops.require_hurwitz(sys_lin.A)
    ag = gains.classical_ag_slope(sys_lin, "B")

    def one(T):
        lp = gains.linear_pag(sys_lin, "B", T, cfg.N, cfg.seed)
        cons = gains.linear_pag_conservative(sys_lin, "B", T, cfg.N)
        _, fr = linops.frequency_response(sys_lin, "B", 2.0 * math.pi / T)
        return GainRow(T=T, gamma_dc=lp.gamma_dc, gamma_ac_exact=lp.gamma_ac,
                       gamma_ac_conservative=cons, ag_slope=ag, freq_resp_norm=fr)

    curve = GainCurve(tuple(_parallel_map(one, cfg.periods, jobs)))
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_csv(out_dir / "linpag.csv", _header(cfg, "linpag"),
               ["T", "omega", "gamma_dc", "gamma_ac_exact",
                "gamma_ac_conservative", "ag_slope", "freq_resp_norm"],
               [(r.T, 2.0 * math.pi / r.T, r.gamma_dc, r.gamma_ac_exact,
                 r.gamma_ac_conservative, r.ag_slope, r.freq_resp_norm)
                for r in curve])
    return EXIT_OK


# ----------------------------------------------------------------- nlpag ---

def cmd_nlpag(cfg: RunConfig, out_dir: Path, jobs: int = 1) -> int:
    linops.require_hurwitz(cfg.system.linear.A)
    if not cfg.levels:
        raise ConfigError("nlpag needs a nonempty 'levels' list", EXIT_MISSING_PREREQ)
    for level in cfg.levels:
        _require_b(cfg, level)
    mf_table = _resolve_mf(cfg)

    cells = [(T, level, comp) for T in cfg.periods
             for level in cfg.levels for comp in cfg.compositions]

    def one(cell):
        T, level, comp = cell
        b = cfg.b_table[level]
        M_f, _ = mf_table[level]
        nsys = _with_constants(cfg.system, M_f, cfg.M_g)
        rho = composition_rho(level, comp)
        res = _nonlinear_bound(nsys, T, cfg.N, b, rho, cfg.seed)
        mu = gains.mu_slope(res, level, comp) if level > 0 else 0.0
        return (T, level, comp.value, res.eta_dc, res.eta_ac, mu,
                res.branch_dc.value, res.branch_ac.value, b, M_f)

    rows = _parallel_map(one, cells, jobs)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_csv(out_dir / "nlpag.csv", _header(cfg, "nlpag"),
               ["T", "level", "composition", "eta_dc", "eta_ac", "mu",
                "branch_dc", "branch_ac", "b", "M_f"], rows)
    _write_json(out_dir / "nlpag_meta.json", {
        "version": __version__,
        "config": f"sha256:{cfg.config_hash}",
        "seed": cfg.seed,
        "N": cfg.N,
        "M_f_mode": cfg.mf_mode,
        "constants": [
            {"level": lv, "M_f": mf_table[lv][0], "y_max": mf_table[lv][1],
             "b": cfg.b_table[lv]}
            for lv in cfg.levels
        ],
    })
    return EXIT_OK


# -------------------------------------------------------------- validate ---

def rho_of_samples(values: np.ndarray) -> RhoVector:
    """rho of raw (N, d) samples without building a SampledSignal."""
    dc = values.mean(axis=0)
    dev = values - dc
    return RhoVector(dc=float(np.linalg.norm(dc)),
                     ac=float(np.max(np.linalg.norm(dev, axis=1))))


def _bangbang_trial(nsys: NonlinearSystem, T: float, N: int, rho: RhoVector):
    """Deterministic worst-case-style trial input: bang-bang AC pattern plus
    a DC offset along the strongest zero-frequency direction."""
    lin = nsys.linear
    values = np.zeros((N, lin.m))
    if rho.ac > 0:
        if lin.p == 1:
            v = np.ones(1)
        else:
            G0 = linops.dc_transfer(lin, "B")
            v = np.linalg.svd(G0)[0][:, 0]
        values = values + sim.bangbang_worst_input(lin, "B", T, N, v, rho.ac).values
    if rho.dc > 0:
        G0 = linops.dc_transfer(lin, "B")
        d = np.linalg.svd(G0)[2][0, :]
        values = values + d * rho.dc
    return values


def _run_validate_cell(cfg: RunConfig, nsys: NonlinearSystem, cell_index: int,
                       T: float, level: float, comp: Composition, b: float):
    rho = composition_rho(level, comp)
    bound = _nonlinear_bound(nsys, T, cfg.N, b, rho, cfg.seed)
    ag = _ag_bound(nsys, b)
    verdict, pag_sum, _ = gains.sharpness_compare(bound, ag)
    # Steady states are only resolved to the period-map tolerance, so the
    # componentwise check gets a measurement allowance of that order; it sits
    # several orders below any nonzero bound component.
    meas_tol = 100.0 * cfg.tol_ps * (1.0 + (b if math.isfinite(b) else 0.0))

    inputs = np.empty((cfg.n_trials + 1, cfg.N, nsys.linear.m))
    labels = []
    for tr in range(cfg.n_trials):
        s = int(np.random.SeedSequence([cfg.seed, cell_index, tr]).generate_state(1)[0])
        spec = sim.make_harmonic_spec(T, cfg.n_harmonics, comp, level, s, nsys.linear.m)
        inputs[tr] = sim.realize_input(spec, cfg.N).values
        labels.append(str(tr))
    inputs[cfg.n_trials] = _bangbang_trial(nsys, T, cfg.N, rho)
    labels.append("bangbang")

    res = sim.periodic_steady_state_batch(nsys, inputs, T, tol_ps=cfg.tol_ps,
                                          max_periods=cfg.max_periods)
    trials = []
    violations = failures = 0
    bb_ratio = float("nan")
    for i, label in enumerate(labels):
        if res.status[i] != "ok":
            failures += 1
            trials.append((T, level, comp.value, label, res.status[i],
                           float("nan"), float("nan"), bound.eta_dc, bound.eta_ac,
                           ag, "false", "false"))
            continue
        r = rho_of_samples(res.y_hat[i])
        dc_ok = r.dc <= bound.eta_dc + meas_tol
        ac_ok = r.ac <= bound.eta_ac + meas_tol
        if not (dc_ok and ac_ok):
            violations += 1
        if label == "bangbang" and bound.eta_ac > 0:
            bb_ratio = r.ac / bound.eta_ac
        trials.append((T, level, comp.value, label, "ok", r.dc, r.ac,
                       bound.eta_dc, bound.eta_ac, ag,
                       "true" if dc_ok else "false",
                       "true" if ac_ok else "false"))

    summary = {
        "T": T,
        "level": level,
        "composition": comp.value,
        "b": b,
        "bound_dc": bound.eta_dc,
        "bound_ac": bound.eta_ac,
        "branch_dc": bound.branch_dc.value,
        "branch_ac": bound.branch_ac.value,
        "ag_bound": ag,
        "pag_one_norm": pag_sum,
        "sharpness": verdict.value,
        "n_trials": cfg.n_trials,
        "violations": violations,
        "failures": failures,
        "bangbang_ac_ratio": bb_ratio,
    }
    return trials, summary, res, labels


def cmd_validate(cfg: RunConfig, out_dir: Path, jobs: int = 1,
                 write_waveforms: bool = True) -> int:
    linops.require_hurwitz(cfg.system.linear.A)
    if not cfg.levels:
        raise ConfigError("validate needs a nonempty 'levels' list", EXIT_MISSING_PREREQ)
    for level in cfg.levels:
        _require_b(cfg, level)
    mf_table = _resolve_mf(cfg)

    cells = [(T, level, comp) for T in cfg.periods
             for level in cfg.levels for comp in cfg.compositions]

    def one(args):
        idx, (T, level, comp) = args
        M_f, _ = mf_table[level]
        nsys = _with_constants(cfg.system, M_f, cfg.M_g)
        return _run_validate_cell(cfg, nsys, idx, T, level, comp, cfg.b_table[level])

    results = _parallel_map(one, list(enumerate(cells)), jobs)

    out_dir.mkdir(parents=True, exist_ok=True)
    all_trials = []
    summaries = []
    for (trials, summary, res, labels), (T, level, comp) in zip(results, cells):
        all_trials.extend(trials)
        summaries.append(summary)
        if write_waveforms:
            wdir = out_dir / "waveforms"
            wdir.mkdir(exist_ok=True)
            t_col = np.arange(cfg.N) * (T / cfg.N)
            for i, label in enumerate(labels):
                if res.status[i] != "ok":
                    continue
                name = f"wave_T{_fmt(T)}_l{_fmt(level)}_{comp.value}_{label}.csv"
                arr = np.column_stack([t_col, res.y_hat[i]])
                cols = ["t"] + [f"y{j + 1}" for j in range(res.y_hat.shape[2])]
                _write_csv(wdir / name, _header(cfg, "validate"), cols, arr.tolist())

    _write_csv(out_dir / "validate_trials.csv", _header(cfg, "validate"),
               ["T", "level", "composition", "trial", "status",
                "rho_y_dc", "rho_y_ac", "bound_dc", "bound_ac", "ag_bound",
                "dc_ok", "ac_ok"], all_trials)
    total_violations = sum(s["violations"] for s in summaries)
    total_failures = sum(s["failures"] for s in summaries)
    _write_json(out_dir / "validate_summary.json", {
        "version": __version__,
        "config": f"sha256:{cfg.config_hash}",
        "seed": cfg.seed,
        "N": cfg.N,
        "cells": summaries,
        "total_violations": total_violations,
        "total_failures": total_failures,
    })
    if total_violations > 0:
        return EXIT_BOUND_VIOLATION
    if total_failures > 0:
        return EXIT_NUMERICAL_FAILURE
    return EXIT_OK


# -------------------------------------------------------------- estimate-b -

def cmd_estimate_b(cfg: RunConfig, out_dir: Path, jobs: int = 1) -> int:
    linops.require_hurwitz(cfg.system.linear.A)

    def one(level):
        return sim.estimate_b(cfg.system, level, cfg.b_trials, cfg.seed,
                              cfg.periods, cfg.N, cfg.n_harmonics)

    values = _parallel_map(one, cfg.levels, jobs)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_json(out_dir / "b_table.json", {
        "version": __version__,
        "config": f"sha256:{cfg.config_hash}",
        "seed": cfg.seed,
        "N": cfg.N,
        "heuristic": True,
        "safety": 1.5,
        "n_trials": cfg.b_trials,
        "periods_sampled": cfg.periods,
        "table": [[lv, v] for lv, v in zip(cfg.levels, values)],
    })
    return EXIT_OK


# ------------------------------------------------------------------ main ---

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pagkit",
        description="Period-aware asymptotic gain sweeps and validation campaigns.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("linpag", "linear gain curves over the period grid"),
        ("nlpag", "conservative nonlinear bounds and mu slopes"),
        ("validate", "randomized + bang-bang steady-state validation"),
        ("estimate-b", "heuristic invariant-set bound per input level"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="JSON config path")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--jobs", type=int, default=None,
                       help="worker threads (default: PAGKIT_JOBS or 1)")
        p.add_argument("--grid-n", type=int, default=None,
                       help="override samples per period N")
    return parser


def main(argv: Optional[list] = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        doc = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        print(f"pagkit: cannot read config: {exc}", file=sys.stderr)
        return EXIT_MODEL_INVALID
    if args.seed is not None:
        doc["seed"] = args.seed
    if args.grid_n is not None:
        doc["N"] = args.grid_n
    try:
        cfg = load_config(doc)
    except (ConfigError, ValueError, KeyError) as exc:
        print(f"pagkit: invalid config: {exc}", file=sys.stderr)
        return getattr(exc, "exit_code", EXIT_MODEL_INVALID)

    out_dir = Path(args.out if args.out is not None else doc.get("out_dir", "pagkit_out"))
    jobs = _jobs_from(args)
    command = {
        "linpag": cmd_linpag,
        "nlpag": cmd_nlpag,
        "validate": cmd_validate,
        "estimate-b": cmd_estimate_b,
    }[args.command]
    try:
        return command(cfg, out_dir, jobs)
    except ConfigError as exc:
        print(f"pagkit: {exc}", file=sys.stderr)
        return exc.exit_code
    except NotHurwitzError as exc:
        print(f"pagkit: model invalid: {exc}", file=sys.stderr)
        return EXIT_MODEL_INVALID
    except PagkitError as exc:
        print(f"pagkit: numerical failure [{exc.code}]: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL_FAILURE


if __name__ == "__main__":
    sys.exit(main())
