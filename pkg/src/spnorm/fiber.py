"""The fiber map t -> I(u^t) evaluated through exact scaling laws.

Under the mass-preserving dilation u^t(x) = t^{3/2} u(t x),

    B(u^t) = t^2 B(u),      C(u^t) = t C(u),      D(u^t) = D(u),
    int A |u^t|^p dx = t^{3(p-2)/2} int A(x/t) |u|^p dx,

so the fiber energy and its t-derivative need no field resampling: only the
argument of A shifts.  Writing a = 3(p-2)/2,

    omega(t)  = (t^2/2) B + (t/4) C - (t^a/p) W(t),
    omega'(t) = t B + C/4 - (t^{a-1}/p) M(t),

with W(t) = int A(r/t)|u|^p dx and M(t) = int [a A(r/t) - (grad A.x)(r/t)]|u|^p dx.
P(u^t) = t * omega'(t) holds identically; in particular P(u) = omega'(1).

For L^2-supercritical p the fiber has a unique interior maximizer t_u, found
by scanning a log-spaced window for the last positive-to-negative crossing
of omega' and refining by bisection.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import FiberRootNotFoundError
from .grids import RadialField
from .potentials import eval_A, eval_gradA_dot_x

FOUR_PI = 4.0 * np.pi

SCAN_LO = 1e-3
SCAN_HI = 1e3
SCAN_POINTS = 200
BISECT_RELWIDTH = 1e-12

SUPERCRITICAL_LO = 10.0 / 3.0


@dataclass(frozen=True)
class FiberProfile:
    """Scanned fiber map: omega(t), omega'(t), and the located critical scale."""

    t_values: np.ndarray
    omega: np.ndarray
    omega_prime: np.ndarray
    t_star: float | None
    sign_changes: int

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("t,omega,omega_prime\n")
            for t, om, op in zip(self.t_values, self.omega, self.omega_prime):
                fh.write(f"{t:.17g},{om:.17g},{op:.17g}\n")


class FiberEvaluator:
    """Precomputed pieces of one field's fiber map.

    Solvers hold on to one of these per iterate; all evaluations accept scalar
    or array t.  For a constant potential the A-moments are t-independent and
    the whole map is closed-form in (B, C, N).
    """

    def __init__(self, u: RadialField, pot, p: float):
        from .functionals import coulomb, dirichlet, _check_p

        _check_p(p)
        self.p = p
        self.a = 1.5 * (p - 2.0)
        self.pot = pot
        self.B = dirichlet(u)
        self.C = coulomb(u)
        grid = u.grid
        self._measure = FOUR_PI * grid.weights * grid.nodes ** 2 * np.abs(u.values) ** p
        self._r = grid.nodes
        self._constant = getattr(pot, "model", None) == "constant"
        if self._constant:
            self._w_const = pot.a_inf * float(np.sum(self._measure))

    def moments(self, t):
        """W(t) and M(t) for scalar or array t."""
        if self._constant:
            w = self._w_const * np.ones_like(np.asarray(t, dtype=float))
            return w, self.a * w
        tarr = np.atleast_1d(np.asarray(t, dtype=float))
        arg = self._r[None, :] / tarr[:, None]
        a_vals = eval_A(self.pot, arg)
        g_vals = eval_gradA_dot_x(self.pot, arg)
        w = a_vals @ self._measure
        m = (self.a * a_vals - g_vals) @ self._measure
        if np.isscalar(t) or np.ndim(t) == 0:
            return float(w[0]), float(m[0])
        return w, m

    def omega(self, t):
        t = np.asarray(t, dtype=float)
        w, _ = self.moments(t)
        return 0.5 * t * t * self.B + 0.25 * t * self.C - (t ** self.a / self.p) * w

    def omega_prime(self, t):
        t = np.asarray(t, dtype=float)
        _, m = self.moments(t)
        return t * self.B + 0.25 * self.C - (t ** (self.a - 1.0) / self.p) * m

    def pohozaev(self, t):
        t = np.asarray(t, dtype=float)
        _, m = self.moments(t)
        return t * t * self.B + 0.25 * t * self.C - (t ** self.a / self.p) * m

    def scan(self, t_lo: float = SCAN_LO, t_hi: float = SCAN_HI, points: int = SCAN_POINTS):
        ts = np.geomspace(t_lo, t_hi, points)
        w, m = self.moments(ts)
        om = 0.5 * ts * ts * self.B + 0.25 * ts * self.C - (ts ** self.a / self.p) * w
        opr = ts * self.B + 0.25 * self.C - (ts ** (self.a - 1.0) / self.p) * m
        return ts, om, opr

    def locate_max(self, t_lo: float = SCAN_LO, t_hi: float = SCAN_HI, points: int = SCAN_POINTS) -> FiberProfile:
        """Scan + bisect the last +/- crossing of omega'."""
        ts, om, opr = self.scan(t_lo, t_hi, points)
        signs = np.sign(opr)
        flips = np.where(np.diff(signs) != 0)[0]
        sign_changes = int(flips.size)
        down = [i for i in flips if signs[i] > 0 >= signs[i + 1]]
        if not down:
            profile = FiberProfile(ts, om, opr, None, sign_changes)
            raise FiberRootNotFoundError(
                f"no positive-to-negative crossing of the fiber derivative in [{t_lo:g}, {t_hi:g}]",
                profile=profile,
            )
        lo, hi = float(ts[down[-1]]), float(ts[down[-1] + 1])
        while (hi - lo) > BISECT_RELWIDTH * hi:
            mid = float(np.sqrt(lo * hi))
            if float(self.omega_prime(mid)) > 0.0:
                lo = mid
            else:
                hi = mid
        t_star = float(np.sqrt(lo * hi))
        return FiberProfile(ts, om, opr, t_star, sign_changes)


def _positive_scale(t: float) -> None:
    if t <= 0:
        raise ValueError(f"scale must be positive, got {t}")


def fiber_energy(u: RadialField, pot, p: float, t: float) -> float:
    """I(u^t) via scaling laws (no resampling of u)."""
    _positive_scale(t)
    return float(FiberEvaluator(u, pot, p).omega(t))


def fiber_derivative(u: RadialField, pot, p: float, t: float) -> float:
    """d/dt I(u^t); at t = 1 this is the Pohozaev functional P(u)."""
    _positive_scale(t)
    return float(FiberEvaluator(u, pot, p).omega_prime(t))


def fiber_pohozaev(u: RadialField, pot, p: float, t: float) -> float:
    """P(u^t) via scaling laws; equals t * fiber_derivative(u, pot, p, t)."""
    _positive_scale(t)
    return float(FiberEvaluator(u, pot, p).pohozaev(t))


def fiber_gap(u: RadialField, pot, p: float, t: float) -> float:
    """I(u) - I(u^t) + ((t^2-1)/2) P(u); nonnegative for admissible potentials."""
    _positive_scale(t)
    ev = FiberEvaluator(u, pot, p)
    i_u = float(ev.omega(1.0))
    p_u = float(ev.omega_prime(1.0))
    return i_u - float(ev.omega(t)) + 0.5 * (t * t - 1.0) * p_u


def find_tu(
    u: RadialField,
    pot,
    p: float,
    t_lo: float = SCAN_LO,
    t_hi: float = SCAN_HI,
    points: int = SCAN_POINTS,
) -> FiberProfile:
    """Locate the Pohozaev scale t_u for L^2-supercritical p.

    Scans omega' on a log grid, counts its sign changes, brackets the last
    positive-to-negative crossing and bisects it to relative width 1e-12.
    Uniqueness of t_u for admissible data shows up as sign_changes == 1;
    anything else is surfaced in the profile rather than silently resolved.
    """
    if not (SUPERCRITICAL_LO < p < 6.0):
        raise ValueError(f"fiber root finding needs p in (10/3, 6), got {p}")
    if not np.any(u.values != 0.0):
        raise ValueError("fiber root finding needs a nonzero field")
    return FiberEvaluator(u, pot, p).locate_max(t_lo, t_hi, points)
