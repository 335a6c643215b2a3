"""Mass-constrained solvers, sweeps, and the threshold bracket.

Two regimes:

* L^2-subcritical p in (2, 10/3), p != 3: direct minimization of I over the
  mass sphere S(c).  Iteration: a preconditioned projected-gradient step
  followed by multiplicative rescaling back to mass c, with backtracking on
  I (monotone descent).
* L^2-supercritical p in (10/3, 6): minimization of the reduced functional
  J(u) = max_t I(u^t) = I(u^{t_u}).  Each iteration projects the iterate to
  its fiber maximizer (materialized by resampling), takes one descent step
  using the gradient of I at the projected point, and accepts the step only
  if J decreases.

The descent direction is the Sobolev-preconditioned gradient: with v = r u
the Dirichlet form becomes int (v')^2 dr exactly, so solving

    (alpha - d^2/dr^2) y = r g,   y(0) = y(R) = 0,   d = y / r

gives a direction map that is symmetric positive in the volume inner
product.  alpha tracks the current multiplier estimate, so the
preconditioner's length scale follows the iterate.  A raw L^2 gradient step
was measured to need ~1e6 iterations for the broad subcritical states (the
discrete Hessian conditioning is ~1/h^2 over a near-zero soft mode), which
is why the preconditioner is not optional.

Mass projection is multiplicative rescaling u <- sqrt(c / mass(u)) u, so
every iterate sits exactly on S(c).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import solveh_banded

from . import _numerics
from .errors import (
    BadBracketError,
    DegenerateFieldError,
    DivergenceError,
    FiberRootNotFoundError,
    InvalidConfigError,
    SpnormError,
    UnsupportedExponentError,
)
from .fiber import FiberEvaluator, SUPERCRITICAL_LO
from .functionals import EnergyBreakdown, energy, extract_multiplier
from .grids import RadialField, RadialGrid, gaussian_field, GaussianParams, resample_scaled
from .potentials import eval_A, eval_gradA_dot_x

NOISE_AMPLITUDE = 1e-3
ALPHA_FLOOR = 1e-4
ETA_FLOOR = 1e-16
SUBCRITICAL_RANGE = (2.0, 10.0 / 3.0)
FLAT_WINDOW = 3  # consecutive small-Delta-J iterations before declaring a plateau


@dataclass(frozen=True)
class SolveConfig:
    """Everything one solve needs; identical configs give bit-identical runs."""

    c: float
    p: float
    pot: object
    grid: RadialGrid
    max_iter: int = 5000
    step0: float = 2.0
    grad_tol: float = 1e-8
    poho_tol: float = 1e-3
    restarts: int = 6
    seed: int = 42
    sigma_lo: float = 0.5
    sigma_hi: float = 4.0
    parallel: bool = False

    def __post_init__(self):
        if self.c <= 0:
            raise InvalidConfigError("target mass c must be positive")
        if self.grad_tol <= 0 or self.poho_tol <= 0 or self.step0 <= 0:
            raise InvalidConfigError("tolerances and step0 must be positive")
        if self.max_iter < 1:
            raise InvalidConfigError("max_iter must be at least 1")
        if self.restarts < 1:
            raise InvalidConfigError("need at least one restart")
        if not (0 < self.sigma_lo <= self.sigma_hi):
            raise InvalidConfigError("need 0 < sigma_lo <= sigma_hi")


@dataclass(frozen=True)
class SolveResult:
    u: RadialField
    energy: EnergyBreakdown
    lambda_: float
    residual_h1: float
    poho_residual: float
    iterations: int
    converged: bool
    history: tuple


@dataclass(frozen=True)
class SweepRecord:
    c: float
    value: float
    lambda_: float
    poho_residual: float
    gradnorm_B: float
    converged: bool


@dataclass(frozen=True)
class SubadditivityViolation:
    c1: float
    c2: float
    gamma_sum: float
    gamma_total: float
    excess: float


@dataclass(frozen=True)
class MonotonicityViolation:
    c_prev: float
    c_next: float
    value_prev: float
    value_next: float
    excess: float


@dataclass(frozen=True)
class GammaSweepReport:
    records: tuple
    ratios: tuple
    subadditivity_violations: tuple
    ratio_violations: tuple

    @property
    def small_c_trend_ok(self) -> bool:
        """|gamma/c| smaller at the smallest sampled c than at the largest."""
        ok = [x for x in self.ratios if np.isfinite(x)]
        return len(ok) >= 2 and abs(ok[0]) <= abs(ok[-1])


@dataclass(frozen=True)
class MSweepReport:
    records: tuple
    positivity_violations: tuple
    monotonicity_violations: tuple


@dataclass(frozen=True)
class CbarBracket:
    c_lo: float
    c_hi: float
    gamma_lo: float
    gamma_hi: float
    evaluations: tuple  # (c, gamma, converged) triples in evaluation order


@dataclass(frozen=True)
class VerificationReport:
    mass_error: float
    poho_rel: float
    poho_lambda_rel: float
    identity_gap: float
    residual_h1: float
    omega_prime_below: float
    omega_prime_above: float
    fiber_local_max: bool
    fiber_local_min: bool


class _Workspace:
    """Raw-array scratch space for one (grid, potential, p) combination."""

    def __init__(self, cfg: SolveConfig):
        g = cfg.grid
        self.cfg = cfg
        self.r = g.nodes
        self.w = g.weights
        self.measure = _numerics.volume_measure(self.r, self.w)
        self.a_vals = eval_A(cfg.pot, self.r)
        self.g_vals = eval_gradA_dot_x(cfg.pot, self.r)
        self.p = cfg.p
        self.n = g.n
        self._uniform = g.spacing == "uniform"
        self._h = (g.rmax / (g.n - 1)) if self._uniform else None
        self._dr = np.diff(self.r)

    def integrate(self, f: np.ndarray) -> float:
        return float(np.sum(self.measure * f))

    def pieces(self, u: np.ndarray):
        """B, C, N, G, phi for a raw sample vector."""
        du = _numerics.derivative(u, self.r)
        B = self.integrate(du * du)
        rho = u * u
        phi = _numerics.newton_potential_raw(rho, self.r, self.w)
        C = self.integrate(phi * rho)
        up = np.abs(u) ** self.p
        N = self.integrate(self.a_vals * up)
        G = self.integrate(self.g_vals * up)
        return B, C, N, G, phi

    def functionals(self, B, C, N, G):
        p = self.p
        I = 0.5 * B + 0.25 * C - N / p
        P = B + 0.25 * C - (1.5 * (p - 2.0) * N - G) / p
        return I, P

    def gradient(self, u: np.ndarray, phi: np.ndarray) -> np.ndarray:
        return (
            -_numerics.laplacian(u, self.r)
            + phi * u
            - self.a_vals * np.abs(u) ** (self.p - 2.0) * u
        )

    def normalize(self, u: np.ndarray) -> np.ndarray:
        m = self.integrate(u * u)
        if not np.isfinite(m) or m <= 0.0:
            raise DegenerateFieldError("iterate lost all mass")
        return u * np.sqrt(self.cfg.c / m)

    def precondition(self, gproj: np.ndarray, alpha: float) -> np.ndarray:
        """Solve (alpha - d2/dr2) y = r g with Dirichlet ends; return y/r.

        Exact for uniform grids; on graded grids the same constant-coefficient
        solve is applied with the mean spacing (a preconditioner only needs
        the right scale).
        """
        h = self._h if self._uniform else float(np.mean(self._dr))
        s = (self.r * gproj)[1:-1]
        ab = np.zeros((2, self.n - 2))
        ab[0, 1:] = -1.0 / (h * h)
        ab[1, :] = alpha + 2.0 / (h * h)
        y = solveh_banded(ab, s)
        d = np.zeros_like(gproj)
        d[1:-1] = y / self.r[1:-1]
        d[0] = (4.0 * y[0] - y[1]) / (2.0 * h)
        return d

    def start_profiles(self, warm_start=None):
        """Deterministic restart list: optional warm start, then noisy Gaussians."""
        cfg = self.cfg
        starts = []
        if warm_start is not None:
            starts.append(("warm", self.normalize(np.array(warm_start, dtype=float))))
        g = cfg.grid
        lo = max(cfg.sigma_lo, 2.0 * g.max_spacing * (1.0 + 1e-9))
        hi = min(cfg.sigma_hi, g.rmax / 6.0)
        if lo > hi:
            raise InvalidConfigError(
                f"no Gaussian width in [{cfg.sigma_lo}, {cfg.sigma_hi}] is resolvable on this grid"
            )
        widths = np.geomspace(lo, hi, cfg.restarts)
        for i, sigma in enumerate(widths):
            base = gaussian_field(GaussianParams(sigma=float(sigma), mass=cfg.c), g)
            rng = np.random.default_rng([cfg.seed, i])
            vals = base.values * (1.0 + NOISE_AMPLITUDE * rng.standard_normal(self.n))
            vals[-1] = 0.0
            starts.append((f"gauss{i}", self.normalize(vals)))
        return starts


def _relative_gradient(ws: _Workspace, gproj: np.ndarray, lam_hat: float) -> float:
    gn = np.sqrt(ws.integrate(gproj * gproj))
    return float(gn / ((1.0 + abs(lam_hat)) * np.sqrt(ws.cfg.c)))


def _descend_subcritical(ws: _Workspace, u0: np.ndarray):
    """Monotone preconditioned descent from one start; returns the end state."""
    cfg = ws.cfg
    c = cfg.c
    u = u0
    eta = cfg.step0
    B, C, N, G, phi = ws.pieces(u)
    I, P = ws.functionals(B, C, N, G)
    if not np.isfinite(I):
        raise DivergenceError("non-finite energy at start", history=[(I, abs(P), 0.0)])
    history = [(I, abs(P), 0.0)]
    relgrad = np.inf
    hit_tol = False
    k = 0
    while k < cfg.max_iter:
        g = ws.gradient(u, phi)
        gpu = ws.integrate(g * u)
        gproj = g - (gpu / c) * u
        lam_hat = -gpu / c
        relgrad = _relative_gradient(ws, gproj, lam_hat)
        if relgrad <= cfg.grad_tol:
            hit_tol = True
            break
        d = ws.precondition(gproj, max(abs(lam_hat), ALPHA_FLOOR))
        d -= (ws.integrate(d * u) / c) * u
        d[-1] = 0.0
        if ws.integrate(gproj * d) <= 0.0:
            d = gproj  # preconditioner lost positivity (graded grids); fall back
        accepted = False
        while eta >= ETA_FLOOR:
            trial = u - eta * d
            trial[-1] = 0.0
            m = ws.integrate(trial * trial)
            if np.isfinite(m) and m > 0.0:
                trial *= np.sqrt(c / m)
                Bt, Ct, Nt, Gt, phit = ws.pieces(trial)
                It, Pt = ws.functionals(Bt, Ct, Nt, Gt)
                if not np.isfinite(It):
                    raise DivergenceError("non-finite energy during descent", history=history)
                if It < I:
                    accepted = True
                    break
            eta *= 0.5
        if not accepted:
            break  # stationary to line-search resolution
        u, B, C, N, G, phi, I, P = trial, Bt, Ct, Nt, Gt, phit, It, Pt
        k += 1
        history.append((I, abs(P), eta))
        eta = min(1.5 * eta, cfg.step0)
    return {
        "u": u,
        "I": I,
        "P": P,
        "B": B,
        "relgrad": relgrad,
        "hit_tol": hit_tol,
        "iterations": k,
        "history": history,
    }


def _finish(ws: _Workspace, state, converged: bool) -> SolveResult:
    cfg = ws.cfg
    u = RadialField(grid=cfg.grid, values=state["u"])
    bd = energy(u, cfg.pot, cfg.p)
    md = extract_multiplier(u, cfg.pot, cfg.p)
    poho = abs(bd.P) / (1.0 + bd.B)
    return SolveResult(
        u=u,
        energy=bd,
        lambda_=md.lambda_,
        residual_h1=md.residual_h1,
        poho_residual=poho,
        iterations=state["iterations"],
        converged=converged,
        history=tuple(state["history"]),
    )


def solve_subcritical(cfg: SolveConfig, warm_start: RadialField | None = None) -> SolveResult:
    """Best-of-restarts minimization of I over S(c) for p in (2, 10/3) \\ {3}."""
    lo, hi = SUBCRITICAL_RANGE
    if cfg.p == 3.0:
        raise UnsupportedExponentError(
            "p = 3 (Coulomb-Sobolev critical) is not supported as a solve target"
        )
    if not (lo < cfg.p < hi):
        raise UnsupportedExponentError(f"subcritical solver needs p in (2, 10/3), got {cfg.p}")
    ws = _Workspace(cfg)
    warm = warm_start.values if warm_start is not None else None
    best = None
    for _, u0 in ws.start_profiles(warm):
        state = _descend_subcritical(ws, u0)
        if best is None or state["I"] < best["I"]:
            best = state
    poho = abs(best["P"]) / (1.0 + best["B"])
    converged = best["hit_tol"] and poho <= cfg.poho_tol
    return _finish(ws, best, converged)


def _materialize(ws: _Workspace, u: np.ndarray, t: float) -> np.ndarray:
    if abs(t - 1.0) <= 1e-13:
        return u
    fld = resample_scaled(RadialField(grid=ws.cfg.grid, values=u), t)
    return ws.normalize(np.array(fld.values))


def _fiber_eval(ws: _Workspace, u: np.ndarray) -> FiberEvaluator:
    return FiberEvaluator(RadialField(grid=ws.cfg.grid, values=u), ws.cfg.pot, ws.cfg.p)


def _descend_supercritical(ws: _Workspace, u0: np.ndarray):
    """Alternating fiber projection / descent on the reduced functional J."""
    cfg = ws.cfg
    c = cfg.c
    u = u0
    eta = cfg.step0
    history = []
    j_prev = None
    flat = 0
    k = 0
    converged = False
    v = u
    while k < cfg.max_iter:
        ev = _fiber_eval(ws, u)
        prof = ev.locate_max()
        v = _materialize(ws, u, prof.t_star)
        ev_v = _fiber_eval(ws, v)
        try:
            prof_v = ev_v.locate_max()
            J = float(ev_v.omega(prof_v.t_star))
        except FiberRootNotFoundError:
            J = float(ev_v.omega(1.0))
        P_v = float(ev_v.omega_prime(1.0))
        poho = abs(P_v) / (1.0 + ev_v.B)
        history.append((J, abs(P_v), eta))
        if not np.isfinite(J):
            raise DivergenceError("non-finite reduced energy", history=history)
        if j_prev is not None and abs(J - j_prev) <= cfg.grad_tol * (1.0 + abs(J)):
            flat += 1
            if flat >= FLAT_WINDOW and poho <= cfg.poho_tol:
                converged = True
                break
        else:
            flat = 0
        j_prev = J
        # one descent step on I from the projected iterate, accepted on J
        _, _, _, _, phi = ws.pieces(v)
        g = ws.gradient(v, phi)
        gpu = ws.integrate(g * v)
        gproj = g - (gpu / c) * v
        lam_hat = -gpu / c
        d = ws.precondition(gproj, max(abs(lam_hat), ALPHA_FLOOR))
        d -= (ws.integrate(d * v) / c) * v
        d[-1] = 0.0
        if ws.integrate(gproj * d) <= 0.0:
            d = gproj
        accepted = False
        while eta >= ETA_FLOOR:
            trial = v - eta * d
            trial[-1] = 0.0
            m = ws.integrate(trial * trial)
            if np.isfinite(m) and m > 0.0:
                trial *= np.sqrt(c / m)
                try:
                    ev_t = _fiber_eval(ws, trial)
                    prof_t = ev_t.locate_max()
                    Jt = float(ev_t.omega(prof_t.t_star))
                except FiberRootNotFoundError:
                    Jt = np.inf
                if np.isfinite(Jt) and Jt < J:
                    accepted = True
                    break
            eta *= 0.5
        if not accepted:
            # J stationary to line-search resolution: a plateau by definition
            converged = poho <= cfg.poho_tol
            break
        u = trial
        eta = min(1.5 * eta, cfg.step0)
        k += 1
    return {
        "u": v,
        "J": j_prev if j_prev is not None else np.inf,
        "iterations": k,
        "history": history,
        "converged": converged,
    }


def solve_supercritical(cfg: SolveConfig, warm_start: RadialField | None = None) -> SolveResult:
    """Pohozaev min-max solver for p in (10/3, 6); reports the projected iterate."""
    if not (SUPERCRITICAL_LO < cfg.p < 6.0):
        raise UnsupportedExponentError(f"supercritical solver needs p in (10/3, 6), got {cfg.p}")
    ws = _Workspace(cfg)
    warm = warm_start.values if warm_start is not None else None
    best = None
    for _, u0 in ws.start_profiles(warm):
        state = _descend_supercritical(ws, u0)
        if best is None or state["J"] < best["J"]:
            best = state
    return _finish(ws, best, best["converged"])


def _sweep_one(cfg: SolveConfig, c: float, solver, warm_start):
    run_cfg = replace(cfg, c=c)
    try:
        res = solver(run_cfg, warm_start=warm_start)
    except (SpnormError, ValueError):
        nan = float("nan")
        return SweepRecord(c, nan, nan, nan, nan, False), None
    rec = SweepRecord(
        c=c,
        value=res.energy.I,
        lambda_=res.lambda_,
        poho_residual=res.poho_residual,
        gradnorm_B=res.energy.B,
        converged=res.converged,
    )
    return rec, res.u


def _run_sweep(cfg: SolveConfig, c_values, solver):
    c_values = [float(c) for c in c_values]
    if any(c <= 0 for c in c_values) or any(b <= a for a, b in zip(c_values, c_values[1:])):
        raise InvalidConfigError("sweep masses must be positive and strictly increasing")
    records = []
    if cfg.parallel:
        with ThreadPoolExecutor() as pool:
            futs = [pool.submit(_sweep_one, cfg, c, solver, None) for c in c_values]
            records = [f.result()[0] for f in futs]
    else:
        warm = None
        for c in c_values:
            rec, u = _sweep_one(cfg, c, solver, warm)
            records.append(rec)
            if u is not None:
                warm = u
    return records


def sweep_gamma(cfg: SolveConfig, c_values) -> GammaSweepReport:
    """gamma(c) sweep with warm starts plus structural checks.

    All checks use one-sided logic on the solver's upper-bound estimates:
    subadditivity gamma(ci+cj) <= gamma(ci) + gamma(cj) + tol for in-grid
    pairs, and monotonicity of gamma(c)/c, each with tol = 1e-4 * (1 + scale).
    """
    records = _run_sweep(cfg, c_values, solve_subcritical)
    ratios = tuple(r.value / r.c if np.isfinite(r.value) else float("nan") for r in records)

    tol = lambda scale: 1e-4 * (1.0 + abs(scale))
    by_c = {r.c: r.value for r in records if np.isfinite(r.value)}
    cs = sorted(by_c)
    sub_viol = []
    for i, c1 in enumerate(cs):
        for c2 in cs[i:]:
            total = None
            for ct in cs:
                if abs((c1 + c2) - ct) <= 1e-9 * ct:
                    total = ct
                    break
            if total is None:
                continue
            lhs = by_c[total]
            rhs = by_c[c1] + by_c[c2]
            if lhs > rhs + tol(rhs):
                sub_viol.append(SubadditivityViolation(c1, c2, rhs, lhs, lhs - rhs))
    ratio_viol = []
    finite = [(r.c, rat) for r, rat in zip(records, ratios) if np.isfinite(rat)]
    for (c_prev, v_prev), (c_next, v_next) in zip(finite, finite[1:]):
        if v_next > v_prev + tol(v_prev):
            ratio_viol.append(MonotonicityViolation(c_prev, c_next, v_prev, v_next, v_next - v_prev))
    return GammaSweepReport(
        records=tuple(records),
        ratios=ratios,
        subadditivity_violations=tuple(sub_viol),
        ratio_violations=tuple(ratio_viol),
    )


def sweep_m(cfg: SolveConfig, c_values) -> MSweepReport:
    """m(c) sweep: positivity and nonincrease in c, slack 1e-3 * (1 + value)."""
    records = _run_sweep(cfg, c_values, solve_supercritical)
    pos_viol = tuple(r for r in records if np.isfinite(r.value) and r.value <= 0.0)
    mono_viol = []
    finite = [r for r in records if np.isfinite(r.value)]
    for a, b in zip(finite, finite[1:]):
        slack = 1e-3 * (1.0 + abs(a.value))
        if b.value > a.value + slack:
            mono_viol.append(MonotonicityViolation(a.c, b.c, a.value, b.value, b.value - a.value))
    return MSweepReport(
        records=tuple(records),
        positivity_violations=pos_viol,
        monotonicity_violations=tuple(mono_viol),
    )


def bracket_cbar(cfg: SolveConfig, c_lo: float, c_hi: float, neg_tol: float = 1e-4) -> CbarBracket:
    """Geometric bisection for the mass threshold separating gamma ~ 0 from gamma < 0.

    A mass classifies as above-threshold when the solver's best energy drops
    below -neg_tol.  Requires p in (3, 10/3) and endpoints that classify as
    below/above respectively; anything else is a bad bracket.
    """
    if not (3.0 < cfg.p < SUBCRITICAL_RANGE[1]):
        raise UnsupportedExponentError(f"threshold bracketing needs p in (3, 10/3), got {cfg.p}")
    if not (0 < c_lo < c_hi):
        raise BadBracketError(f"need 0 < c_lo < c_hi, got [{c_lo}, {c_hi}]")
    evaluations = []

    def gamma_at(c, warm):
        res = solve_subcritical(replace(cfg, c=c), warm_start=warm)
        evaluations.append((c, res.energy.I, res.converged))
        return res.energy.I, res.u

    gamma_lo, u_lo = gamma_at(c_lo, None)
    gamma_hi, u_hi = gamma_at(c_hi, None)
    if gamma_lo < -neg_tol or gamma_hi >= -neg_tol:
        raise BadBracketError(
            f"endpoints do not bracket the threshold: gamma({c_lo}) = {gamma_lo:.3e}, "
            f"gamma({c_hi}) = {gamma_hi:.3e} with neg_tol = {neg_tol:g}",
            gamma_lo=gamma_lo,
            gamma_hi=gamma_hi,
        )
    lo, hi = c_lo, c_hi
    warm = u_lo
    while (hi - lo) > 0.02 * hi:
        mid = float(np.sqrt(lo * hi))
        gamma_mid, warm = gamma_at(mid, warm)
        if gamma_mid < -neg_tol:
            hi, gamma_hi = mid, gamma_mid
        else:
            lo, gamma_lo = mid, gamma_mid
    return CbarBracket(
        c_lo=lo, c_hi=hi, gamma_lo=gamma_lo, gamma_hi=gamma_hi, evaluations=tuple(evaluations)
    )


def verify_solution(result: SolveResult, cfg: SolveConfig) -> VerificationReport:
    """Recompute the necessary conditions a solution must satisfy; findings are data."""
    u = result.u
    bd = energy(u, cfg.pot, cfg.p)
    md = extract_multiplier(u, cfg.pot, cfg.p)
    ev = FiberEvaluator(u, cfg.pot, cfg.p)
    below = float(ev.omega_prime(0.95))
    above = float(ev.omega_prime(1.05))
    slack = 10.0 * cfg.poho_tol * (1.0 + bd.B)
    g_int = 1.5 * (cfg.p - 2.0) * bd.N - bd.N_poho
    p_lambda = 0.5 * bd.B + 1.5 * md.lambda_ * bd.D + 1.25 * bd.C - (3.0 * bd.N + g_int) / cfg.p
    return VerificationReport(
        mass_error=abs(bd.D - cfg.c) / cfg.c,
        poho_rel=abs(bd.P) / (1.0 + bd.B),
        poho_lambda_rel=abs(p_lambda) / (1.0 + bd.B),
        identity_gap=md.identity_gap,
        residual_h1=md.residual_h1,
        omega_prime_below=below,
        omega_prime_above=above,
        fiber_local_max=(below > -slack) and (above < slack),
        fiber_local_min=(below < slack) and (above > -slack),
    )
