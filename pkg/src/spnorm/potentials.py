"""Radial coefficient models A(|x|) and numerical hypothesis checks.

Three closed-form models are built in, all with A(r) >= A_inf > 0 and
A(r) -> A_inf at infinity:

    constant       A(r) = a_inf
    exp_bump       A(r) = a_inf + amp * exp(-tau r)
    rational_bump  A(r) = a_inf + amp / (1 + r)

A user-supplied tabulated radial A is accepted as well; its radial
derivative then comes from finite differences of the interpolant.

The admissibility hypotheses are checked by dense sampling:

    (A1)  A(r) >= A_inf everywhere and A flattens to A_inf at the far edge;
    (A2)  t -> (3/2)(p-2) A(t x) - grad A(t x).(t x) is nonincreasing;
    (A3)  t -> t^{3/2} A(t x) is nondecreasing.

The (A2)-derived diagnostic

    phi(t, x) = -t^{-3(p-2)/2} [A(x) - A(t x)]
                + 2 (t^{-3(p-2)/2} - 1) / (3 (p-2)) * grad A(x).x

must be nonnegative for admissible A; any sampled negative value below
-1e-10 is recorded with a witness.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import InvalidConfigError

MODELS = ("constant", "exp_bump", "rational_bump")

A2_SLACK = 1e-10
PHI_FLOOR = -1e-10
FLATNESS_FRACTION = 0.05


@dataclass(frozen=True)
class Potential:
    """Closed-form radial coefficient A(r)."""

    model: str
    a_inf: float
    amp: float = 0.0
    tau: float = 1.0

    def __post_init__(self):
        if self.model not in MODELS:
            raise InvalidConfigError(f"unknown potential model {self.model!r}")
        if self.a_inf <= 0:
            raise InvalidConfigError("a_inf must be positive")
        if self.amp < 0:
            raise InvalidConfigError("amp must be nonnegative (A >= a_inf is required)")
        if self.model == "exp_bump" and self.tau <= 0:
            raise InvalidConfigError("tau must be positive for exp_bump")


def constant_potential(a_inf: float = 1.0) -> Potential:
    return Potential(model="constant", a_inf=a_inf)


def exp_bump_potential(amp: float = 1.0, tau: float = 1.0, a_inf: float = 1.0) -> Potential:
    return Potential(model="exp_bump", a_inf=a_inf, amp=amp, tau=tau)


def rational_bump_potential(amp: float = 1.0, a_inf: float = 1.0) -> Potential:
    return Potential(model="rational_bump", a_inf=a_inf, amp=amp)


class TabulatedPotential:
    """Radial A given by a two-column table; constant a_inf beyond the last node.

    The table must have strictly increasing radii with the first at r = 0.
    a_inf is taken from the last tabulated value; grad A.x uses central finite
    differences of the monotone-cubic interpolant.
    """

    model = "tabulated"

    def __init__(self, radii, values):
        radii = np.ascontiguousarray(radii, dtype=float)
        values = np.ascontiguousarray(values, dtype=float)
        if radii.ndim != 1 or radii.shape != values.shape or radii.size < 4:
            raise InvalidConfigError("tabulated potential needs matching 1-d columns, >= 4 rows")
        if radii[0] != 0.0:
            raise InvalidConfigError("tabulated potential must start at r = 0")
        if np.any(np.diff(radii) <= 0):
            raise InvalidConfigError("tabulated radii must be strictly increasing")
        if not np.all(np.isfinite(values)):
            raise InvalidConfigError("tabulated values must be finite")
        a_inf = float(values[-1])
        if a_inf <= 0:
            raise InvalidConfigError("tabulated a_inf (last value) must be positive")
        radii.setflags(write=False)
        values.setflags(write=False)
        self.radii = radii
        self.values = values
        self.a_inf = a_inf
        self.amp = float(np.max(values) - a_inf)
        self._interp = PchipInterpolator(radii, values, extrapolate=False)

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        flat = np.atleast_1d(r)
        out = np.full(flat.shape, self.a_inf)
        inside = flat <= self.radii[-1]
        out[inside] = self._interp(flat[inside])
        return out.reshape(r.shape)


def load_tabulated_potential(path) -> TabulatedPotential:
    """Read an `r value` per line text file into a TabulatedPotential."""
    rows = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise InvalidConfigError(f"{path}:{lineno}: expected two columns, got {len(parts)}")
        rows.append((float(parts[0]), float(parts[1])))
    if not rows:
        raise InvalidConfigError(f"{path}: empty potential table")
    arr = np.array(rows)
    return TabulatedPotential(arr[:, 0], arr[:, 1])


def eval_A(pot, r):
    """A(r) for scalar or array r >= 0."""
    scalar = np.isscalar(r)
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("radius must be nonnegative")
    if pot.model == "constant":
        out = np.full(r.shape, pot.a_inf)
    elif pot.model == "exp_bump":
        out = pot.a_inf + pot.amp * np.exp(-pot.tau * r)
    elif pot.model == "rational_bump":
        out = pot.a_inf + pot.amp / (1.0 + r)
    else:  # tabulated
        out = pot(r)
    return float(out) if scalar else out


def eval_gradA_dot_x(pot, r):
    """grad A(x).x = r A'(r) for radial A; <= 0 for every admissible model."""
    scalar = np.isscalar(r)
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("radius must be nonnegative")
    if pot.model == "constant":
        out = np.zeros(r.shape)
    elif pot.model == "exp_bump":
        out = -pot.amp * pot.tau * r * np.exp(-pot.tau * r)
    elif pot.model == "rational_bump":
        out = -pot.amp * r / (1.0 + r) ** 2
    else:  # tabulated: central finite difference of the interpolant
        h = 1e-6 * np.maximum(r, 1.0)
        lo = np.maximum(r - h, 0.0)
        out = r * (eval_A(pot, r + h) - eval_A(pot, lo)) / (r + h - lo)
        out = np.where(r == 0.0, 0.0, out)
    return float(out) if scalar else out


def phi_diagnostic(pot, p: float, t, r):
    """The Lemma-type diagnostic phi(t, x); nonnegative when (A2) holds."""
    t = np.asarray(t, dtype=float)
    a = 1.5 * (p - 2.0)
    ta = t ** (-a)
    return -ta * (eval_A(pot, r) - eval_A(pot, t * r)) + (
        2.0 * (ta - 1.0) / (3.0 * (p - 2.0))
    ) * eval_gradA_dot_x(pot, r)


@dataclass(frozen=True)
class Witness:
    """One sampled violation of a condition: where, and by how much."""

    condition: str
    t: float
    r: float
    violation: float
    t_next: float = float("nan")


@dataclass(frozen=True)
class ConditionReport:
    a1_ok: bool
    a2_ok: bool
    a3_ok: bool
    phi_ok: bool
    phi_min: float
    witnesses: tuple
    samples: int

    @property
    def all_ok(self) -> bool:
        return self.a1_ok and self.a2_ok and self.a3_ok and self.phi_ok


def _default_t_samples() -> np.ndarray:
    return np.geomspace(1e-2, 1e2, 200)


def _default_r_samples(rmax: float) -> np.ndarray:
    return np.concatenate([[0.0], np.geomspace(1e-4 * rmax, rmax, 99)])


def recheck_witness(pot, p: float, wit: Witness) -> float:
    """Recompute the violation a witness records (tests use this for reproducibility)."""
    if wit.condition == "a1_lower":
        return pot.a_inf - eval_A(pot, wit.r)
    if wit.condition == "a1_flat":
        return abs(eval_A(pot, wit.r) - pot.a_inf) - FLATNESS_FRACTION * pot.a_inf
    if wit.condition == "a2":
        g = lambda t: 1.5 * (p - 2.0) * eval_A(pot, t * wit.r) - eval_gradA_dot_x(pot, t * wit.r)
        return g(wit.t_next) - g(wit.t)
    if wit.condition == "a3":
        g = lambda t: t ** 1.5 * eval_A(pot, t * wit.r)
        return g(wit.t) - g(wit.t_next)
    if wit.condition == "phi":
        return -phi_diagnostic(pot, p, wit.t, wit.r)
    raise ValueError(f"unknown witness condition {wit.condition!r}")


def check_conditions(pot, p: float, t_samples=None, r_samples=None, rmax: float = 40.0) -> ConditionReport:
    """Sample-based verification of (A1)-(A3) and the phi diagnostic.

    Failures are data, not errors: each failed condition carries at least one
    witness locating the violated sampled inequality.
    """
    if not (2.0 < p < 6.0):
        raise ValueError(f"exponent must lie in (2, 6), got {p}")
    t = np.asarray(t_samples, dtype=float) if t_samples is not None else _default_t_samples()
    r = np.asarray(r_samples, dtype=float) if r_samples is not None else _default_r_samples(rmax)
    if t.size == 0 or r.size == 0:
        raise ValueError("sample grids must be nonempty")
    if t.min() > 1e-2 or t.max() < 1e2:
        raise ValueError("t samples must span at least [1e-2, 1e2]")

    witnesses = []

    # (A1): pointwise lower bound plus approximate flatness at the far edge
    a_vals = eval_A(pot, r)
    a1_ok = True
    low = pot.a_inf - a_vals
    bad = np.where(low > A2_SLACK)[0]
    if bad.size:
        a1_ok = False
        i = bad[np.argmax(low[bad])]
        witnesses.append(Witness("a1_lower", 1.0, float(r[i]), float(low[i])))
    r_far = float(r.max())
    flat_defect = abs(eval_A(pot, r_far) - pot.a_inf) - FLATNESS_FRACTION * pot.a_inf
    if flat_defect > 0:
        a1_ok = False
        witnesses.append(Witness("a1_flat", 1.0, r_far, float(flat_defect)))

    # (A2)/(A3): monotonicity across consecutive t samples for each radius
    tr = np.outer(t, r)  # (n_t, n_r)
    a_tr = eval_A(pot, tr)
    g_tr = eval_gradA_dot_x(pot, tr)
    a2_map = 1.5 * (p - 2.0) * a_tr - g_tr
    a3_map = (t ** 1.5)[:, None] * a_tr

    a2_jump = np.diff(a2_map, axis=0)  # must be <= slack (nonincreasing)
    a2_ok = bool(np.all(a2_jump <= A2_SLACK))
    if not a2_ok:
        k, j = np.unravel_index(np.argmax(a2_jump), a2_jump.shape)
        witnesses.append(
            Witness("a2", float(t[k]), float(r[j]), float(a2_jump[k, j]), t_next=float(t[k + 1]))
        )

    a3_drop = -np.diff(a3_map, axis=0)  # must be <= slack (nondecreasing)
    a3_ok = bool(np.all(a3_drop <= A2_SLACK))
    if not a3_ok:
        k, j = np.unravel_index(np.argmax(a3_drop), a3_drop.shape)
        witnesses.append(
            Witness("a3", float(t[k]), float(r[j]), float(a3_drop[k, j]), t_next=float(t[k + 1]))
        )

    # phi diagnostic on the same sample grid
    a_r = a_vals[None, :]
    ta = (t ** (-1.5 * (p - 2.0)))[:, None]
    phi = -ta * (a_r - a_tr) + (2.0 * (ta - 1.0) / (3.0 * (p - 2.0))) * eval_gradA_dot_x(pot, r)[None, :]
    phi_min = float(np.min(phi))
    phi_ok = phi_min >= PHI_FLOOR
    if not phi_ok:
        k, j = np.unravel_index(np.argmin(phi), phi.shape)
        witnesses.append(Witness("phi", float(t[k]), float(r[j]), float(-phi[k, j])))

    return ConditionReport(
        a1_ok=a1_ok,
        a2_ok=a2_ok,
        a3_ok=a3_ok,
        phi_ok=phi_ok,
        phi_min=phi_min,
        witnesses=tuple(witnesses),
        samples=int(t.size * r.size),
    )
