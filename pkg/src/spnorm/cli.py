"""Command-line front end.

Configuration comes from an INI-style file (key/value with sections) and/or
flags; flags override file values.  Results go to the output file only
(JSON or CSV), diagnostics to stderr, and stdout carries a one-line
completion summary.  Exit codes: 0 success, 1 domain errors (bad bracket,
fiber root not found, divergence), 2 configuration errors.

Solve output is a single JSON object:

    {config_echo, energy: {D, B, C, N, N_poho, I, P}, lambda, residual_h1,
     poho_residual, iterations, converged, field: {r: [...], u: [...]}}

Sweeps are CSV with header ``c,value,lambda,poho_residual,gradnorm_B,converged``;
fiber profiles are CSV with header ``t,omega,omega_prime`` (17 significant
digits throughout, so re-parsing reproduces every scalar bit-exactly).
"""

from __future__ import annotations

import argparse
import configparser
import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    BadBracketError,
    DivergenceError,
    FiberRootNotFoundError,
    InvalidConfigError,
    ResolutionError,
    SpnormError,
    UnsupportedExponentError,
)
from .fiber import find_tu, FiberEvaluator, FiberProfile
from .functionals import energy, extract_multiplier
from .grids import GaussianParams, gaussian_field, make_grid
from .potentials import (
    Potential,
    check_conditions,
    constant_potential,
    exp_bump_potential,
    load_tabulated_potential,
    rational_bump_potential,
)
from .solvers import (
    SolveConfig,
    bracket_cbar,
    solve_subcritical,
    solve_supercritical,
    sweep_gamma,
    sweep_m,
    verify_solution,
)

COMMANDS = ("check-potential", "energy", "fiber", "solve", "sweep", "bracket-cbar", "verify")

SUBCRITICAL_HI = 10.0 / 3.0

# every key a config file may carry, per section
_ALLOWED_KEYS = {
    "run": {"command"},
    "problem": {"p", "c", "potential", "a_inf", "sigma"},
    "numerics": {
        "n",
        "rmax",
        "spacing",
        "grad_tol",
        "poho_tol",
        "max_iter",
        "restarts",
        "seed",
        "parallel",
        "sigma_lo",
        "sigma_hi",
        "step0",
    },
    "bracket": {"c_lo", "c_hi", "neg_tol"},
    "output": {"path", "format"},
}

_RANGES = {
    "n": (16, 10_000_000),
    "rmax": (1e-12, float("inf")),
    "max_iter": (1, 100_000_000),
    "restarts": (1, 10_000),
    "grad_tol": (0.0, 1.0),
    "poho_tol": (0.0, 1.0),
    "step0": (0.0, float("inf")),
    "sigma_lo": (0.0, float("inf")),
    "sigma_hi": (0.0, float("inf")),
    "neg_tol": (0.0, 1.0),
}


@dataclass
class RunConfig:
    command: str
    p: float = 2.5
    c: list = field(default_factory=lambda: [1.0])
    potential: str = "constant"
    a_inf: float = 1.0
    sigma: float = 1.0
    n: int = 2049
    rmax: float = 40.0
    spacing: str = "uniform"
    grad_tol: float = 1e-8
    poho_tol: float = 1e-3
    max_iter: int = 5000
    restarts: int = 6
    seed: int = 42
    parallel: bool = False
    sigma_lo: float = 0.5
    sigma_hi: float = 4.0
    step0: float = 2.0
    c_lo: float = float("nan")
    c_hi: float = float("nan")
    neg_tol: float = 1e-4
    out: str = "spnorm_out.json"
    fmt: str = "json"
    pot: object = None


_STRICT_LOWER = {"grad_tol", "poho_tol", "neg_tol", "step0", "sigma_lo", "sigma_hi", "rmax"}


def _check_range(name: str, value):
    rng = _RANGES.get(name)
    if rng is None:
        return
    lo, hi = rng
    ok = (lo < value <= hi) if name in _STRICT_LOWER else (lo <= value <= hi)
    if not ok:
        kind = "(" if name in _STRICT_LOWER else "["
        raise InvalidConfigError(f"{name} = {value} outside valid range {kind}{lo}, {hi}]")


def build_potential(spec: str, a_inf: float):
    """Parse `constant`, `exp_bump[:amp[,tau]]`, `rational_bump[:amp]`, or `file:PATH`."""
    name, _, args = spec.partition(":")
    if name == "constant":
        return constant_potential(a_inf)
    if name == "exp_bump":
        parts = [float(x) for x in args.split(",")] if args else []
        amp = parts[0] if parts else 1.0
        tau = parts[1] if len(parts) > 1 else 1.0
        return exp_bump_potential(amp=amp, tau=tau, a_inf=a_inf)
    if name == "rational_bump":
        amp = float(args.split(",")[0]) if args else 1.0
        return rational_bump_potential(amp=amp, a_inf=a_inf)
    if name == "file":
        path = Path(args)
        if not path.exists():
            raise InvalidConfigError(f"potential table {path} does not exist")
        return load_tabulated_potential(path)
    raise InvalidConfigError(f"unknown potential spec {spec!r}")


def _coerce(key: str, raw: str):
    if key in ("n", "max_iter", "restarts", "seed"):
        return int(raw)
    if key == "parallel":
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise InvalidConfigError(f"parallel must be boolean, got {raw!r}")
    if key in ("command", "potential", "spacing", "path", "format"):
        return raw
    if key == "c":
        return [float(x) for x in raw.replace(",", " ").split()]
    return float(raw)


def _read_config_file(path: str) -> dict:
    if not Path(path).exists():
        raise InvalidConfigError(f"config file {path} does not exist")
    parser = configparser.ConfigParser()
    parser.read(path)
    values = {}
    unknown = []
    for section in parser.sections():
        allowed = _ALLOWED_KEYS.get(section)
        if allowed is None:
            unknown.append(f"[{section}]")
            continue
        for key, raw in parser.items(section):
            if key not in allowed:
                unknown.append(f"[{section}] {key}")
                continue
            values[key] = _coerce(key, raw)
    if unknown:
        raise InvalidConfigError("unknown config keys: " + ", ".join(sorted(unknown)))
    return values


def _flag_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="spnorm", description=__doc__, add_help=True)
    ap.add_argument("--config", help="INI config file; flags override its values")
    ap.add_argument("--command", choices=COMMANDS)
    ap.add_argument("--p", type=float)
    ap.add_argument("--c", type=str, help="mass, or space/comma-separated list for sweeps")
    ap.add_argument("--potential", type=str, help="constant | exp_bump[:amp,tau] | rational_bump[:amp] | file:PATH")
    ap.add_argument("--a-inf", type=float, dest="a_inf")
    ap.add_argument("--sigma", type=float, help="Gaussian width for energy/fiber commands")
    ap.add_argument("--n", type=int)
    ap.add_argument("--rmax", type=float)
    ap.add_argument("--spacing", choices=("uniform", "graded"))
    ap.add_argument("--grad-tol", type=float, dest="grad_tol")
    ap.add_argument("--poho-tol", type=float, dest="poho_tol")
    ap.add_argument("--max-iter", type=int, dest="max_iter")
    ap.add_argument("--restarts", type=int)
    ap.add_argument("--seed", type=int)
    ap.add_argument("--sigma-lo", type=float, dest="sigma_lo")
    ap.add_argument("--sigma-hi", type=float, dest="sigma_hi")
    ap.add_argument("--step0", type=float)
    ap.add_argument("--c-lo", type=float, dest="c_lo")
    ap.add_argument("--c-hi", type=float, dest="c_hi")
    ap.add_argument("--neg-tol", type=float, dest="neg_tol")
    ap.add_argument("--out", type=str)
    ap.add_argument("--format", choices=("json", "csv"), dest="fmt")
    ap.add_argument("--parallel", action="store_true", default=None)
    return ap


def parse_config(argv=None) -> RunConfig:
    """Resolve file + flags into a validated RunConfig (flags win)."""
    ns = _flag_parser().parse_args(argv)
    values = {}
    if ns.config:
        values.update(_read_config_file(ns.config))
    for key in (
        "command p potential a_inf sigma n rmax spacing grad_tol poho_tol max_iter "
        "restarts seed sigma_lo sigma_hi step0 c_lo c_hi neg_tol parallel"
    ).split():
        v = getattr(ns, key, None)
        if v is not None:
            values[key] = v
    if ns.c is not None:
        values["c"] = _coerce("c", ns.c)
    if ns.out is not None:
        values["path"] = ns.out
    if ns.fmt is not None:
        values["format"] = ns.fmt

    command = values.pop("command", None)
    if command is None:
        raise InvalidConfigError("no command given (use --command or [run] command = ...)")
    if command not in COMMANDS:
        raise InvalidConfigError(f"unknown command {command!r}; valid: {', '.join(COMMANDS)}")

    cfg = RunConfig(command=command)
    for key, value in values.items():
        if key == "path":
            cfg.out = value
        elif key == "format":
            cfg.fmt = value
        else:
            setattr(cfg, key, value)
    if isinstance(cfg.c, (int, float)):
        cfg.c = [float(cfg.c)]

    for name in ("n", "rmax", "max_iter", "restarts", "grad_tol", "poho_tol", "step0", "sigma_lo", "sigma_hi", "neg_tol"):
        _check_range(name, getattr(cfg, name))
    if cfg.spacing not in ("uniform", "graded"):
        raise InvalidConfigError(f"spacing must be uniform or graded, got {cfg.spacing!r}")
    if cfg.fmt not in ("json", "csv"):
        raise InvalidConfigError(f"format must be json or csv, got {cfg.fmt!r}")
    if not (2.0 < cfg.p < 6.0):
        raise InvalidConfigError(f"p = {cfg.p} outside (2, 6)")
    if any(c <= 0 for c in cfg.c):
        raise InvalidConfigError("masses must be positive")
    if cfg.p == 3.0 and command in ("solve", "sweep", "bracket-cbar", "verify"):
        raise UnsupportedExponentError(
            "p = 3 is the Coulomb-Sobolev critical case; solving it is not supported"
        )
    # parse the potential now so missing files and bad specs fail at parse time
    cfg.pot = build_potential(cfg.potential, cfg.a_inf)
    return cfg


def _fmt(x) -> str:
    return f"{x:.17g}"


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def _config_echo(cfg: RunConfig) -> dict:
    return {
        "command": cfg.command,
        "p": cfg.p,
        "c": list(cfg.c),
        "potential": cfg.potential,
        "a_inf": cfg.a_inf,
        "n": cfg.n,
        "rmax": cfg.rmax,
        "spacing": cfg.spacing,
        "grad_tol": cfg.grad_tol,
        "poho_tol": cfg.poho_tol,
        "max_iter": cfg.max_iter,
        "restarts": cfg.restarts,
        "seed": cfg.seed,
    }


def _solve_payload(cfg: RunConfig, res) -> dict:
    bd = res.energy
    return {
        "config_echo": _config_echo(cfg),
        "energy": {"D": bd.D, "B": bd.B, "C": bd.C, "N": bd.N, "N_poho": bd.N_poho, "I": bd.I, "P": bd.P},
        "lambda": res.lambda_,
        "residual_h1": res.residual_h1,
        "poho_residual": res.poho_residual,
        "iterations": res.iterations,
        "converged": res.converged,
        "field": {"r": res.u.grid.nodes.tolist(), "u": res.u.values.tolist()},
    }


def _write_json(path: str, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1, default=_json_default)
        fh.write("\n")


def _write_sweep_csv(path: str, records) -> None:
    with open(path, "w") as fh:
        fh.write("c,value,lambda,poho_residual,gradnorm_B,converged\n")
        for r in records:
            fh.write(
                f"{_fmt(r.c)},{_fmt(r.value)},{_fmt(r.lambda_)},{_fmt(r.poho_residual)},"
                f"{_fmt(r.gradnorm_B)},{str(r.converged).lower()}\n"
            )


def _solve_config(cfg: RunConfig, c: float) -> SolveConfig:
    grid = make_grid(cfg.n, cfg.rmax, cfg.spacing)
    return SolveConfig(
        c=c,
        p=cfg.p,
        pot=cfg.pot,
        grid=grid,
        max_iter=cfg.max_iter,
        step0=cfg.step0,
        grad_tol=cfg.grad_tol,
        poho_tol=cfg.poho_tol,
        restarts=cfg.restarts,
        seed=cfg.seed,
        sigma_lo=cfg.sigma_lo,
        sigma_hi=cfg.sigma_hi,
        parallel=cfg.parallel,
    )


def _pick_solver(p: float):
    return solve_subcritical if p < SUBCRITICAL_HI else solve_supercritical


def run(cfg: RunConfig) -> int:
    """Dispatch one parsed command; returns the process exit code."""
    try:
        if cfg.command == "check-potential":
            report = check_conditions(cfg.pot, cfg.p, rmax=cfg.rmax)
            payload = {
                "config_echo": _config_echo(cfg),
                "a1_ok": report.a1_ok,
                "a2_ok": report.a2_ok,
                "a3_ok": report.a3_ok,
                "phi_ok": report.phi_ok,
                "phi_min": report.phi_min,
                "samples": report.samples,
                "witnesses": [asdict(wit) for wit in report.witnesses],
            }
            _write_json(cfg.out, payload)
            print(f"check-potential: a1={report.a1_ok} a2={report.a2_ok} a3={report.a3_ok} -> {cfg.out}")
            return 0

        if cfg.command == "energy":
            grid = make_grid(cfg.n, cfg.rmax, cfg.spacing)
            u = gaussian_field(GaussianParams(sigma=cfg.sigma, mass=cfg.c[0]), grid)
            bd = energy(u, cfg.pot, cfg.p)
            md = extract_multiplier(u, cfg.pot, cfg.p)
            payload = {
                "config_echo": _config_echo(cfg),
                "sigma": cfg.sigma,
                "energy": {"D": bd.D, "B": bd.B, "C": bd.C, "N": bd.N, "N_poho": bd.N_poho, "I": bd.I, "P": bd.P},
                "lambda": md.lambda_,
                "identity_gap": md.identity_gap,
            }
            _write_json(cfg.out, payload)
            print(f"energy: I={bd.I:.9g} P={bd.P:.9g} -> {cfg.out}")
            return 0

        if cfg.command == "fiber":
            grid = make_grid(cfg.n, cfg.rmax, cfg.spacing)
            u = gaussian_field(GaussianParams(sigma=cfg.sigma, mass=cfg.c[0]), grid)
            if cfg.p > SUBCRITICAL_HI:
                profile = find_tu(u, cfg.pot, cfg.p)
            else:
                ev = FiberEvaluator(u, cfg.pot, cfg.p)
                ts, om, opr = ev.scan()
                profile = FiberProfile(ts, om, opr, None, int(np.sum(np.diff(np.sign(opr)) != 0)))
            profile.to_csv(cfg.out)
            star = f" t_star={profile.t_star:.9g}" if profile.t_star is not None else ""
            print(f"fiber: {len(profile.t_values)} scan points{star} -> {cfg.out}")
            return 0

        if cfg.command == "solve":
            scfg = _solve_config(cfg, cfg.c[0])
            res = _pick_solver(cfg.p)(scfg)
            _write_json(cfg.out, _solve_payload(cfg, res))
            print(
                f"solve: I={res.energy.I:.9g} lambda={res.lambda_:.9g} "
                f"poho={res.poho_residual:.3g} converged={res.converged} -> {cfg.out}"
            )
            return 0

        if cfg.command == "sweep":
            scfg = _solve_config(cfg, cfg.c[0])
            if cfg.p < SUBCRITICAL_HI:
                report = sweep_gamma(scfg, cfg.c)
            else:
                report = sweep_m(scfg, cfg.c)
            if cfg.fmt == "csv":
                _write_sweep_csv(cfg.out, report.records)
            else:
                payload = {"config_echo": _config_echo(cfg), "records": [asdict(r) for r in report.records]}
                _write_json(cfg.out, payload)
            nconv = sum(r.converged for r in report.records)
            print(f"sweep: {len(report.records)} masses, {nconv} converged -> {cfg.out}")
            return 0

        if cfg.command == "bracket-cbar":
            if not np.isfinite(cfg.c_lo) or not np.isfinite(cfg.c_hi):
                raise InvalidConfigError("bracket-cbar needs c_lo and c_hi")
            scfg = _solve_config(cfg, 1.0)
            bracket = bracket_cbar(scfg, cfg.c_lo, cfg.c_hi, cfg.neg_tol)
            payload = {
                "config_echo": _config_echo(cfg),
                "c_lo": bracket.c_lo,
                "c_hi": bracket.c_hi,
                "gamma_lo": bracket.gamma_lo,
                "gamma_hi": bracket.gamma_hi,
                "evaluations": [list(e) for e in bracket.evaluations],
            }
            _write_json(cfg.out, payload)
            print(f"bracket-cbar: cbar in [{bracket.c_lo:.6g}, {bracket.c_hi:.6g}] -> {cfg.out}")
            return 0

        if cfg.command == "verify":
            scfg = _solve_config(cfg, cfg.c[0])
            res = _pick_solver(cfg.p)(scfg)
            report = verify_solution(res, scfg)
            payload = _solve_payload(cfg, res)
            payload["verification"] = asdict(report)
            _write_json(cfg.out, payload)
            print(
                f"verify: poho_rel={report.poho_rel:.3g} residual_h1={report.residual_h1:.3g} "
                f"mass_err={report.mass_error:.3g} -> {cfg.out}"
            )
            return 0

        raise InvalidConfigError(f"unhandled command {cfg.command!r}")
    except (BadBracketError, FiberRootNotFoundError, DivergenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main(argv=None) -> int:
    try:
        cfg = parse_config(argv)
    except (InvalidConfigError, UnsupportedExponentError, ResolutionError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except SpnormError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        return run(cfg)
    except (InvalidConfigError, UnsupportedExponentError, ResolutionError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except SpnormError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
