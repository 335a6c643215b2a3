"""Scalar functionals of a radial field.

With B = int |grad u|^2, C the Coulomb double integral, D = int |u|^2 and
N = int A |u|^p, the constrained energy and the Pohozaev functional are

    I(u) = B/2 + C/4 - N/p,
    P(u) = B + C/4 - N_poho/p,
    N_poho = int [ (3/2)(p-2) A(x) - grad A(x).x ] |u|^p dx.

P is the t-derivative of the fiber map t -> I(u^t) at t = 1 and vanishes on
constrained critical points.  The Lagrange multiplier of a candidate
solution is recovered from the Nehari-type identity F_lambda(u) = 0 with

    F_lambda = B + lambda D + C - N,
    P_lambda = B/2 + (3/2) lambda D + (5/4) C - (1/p) int [3A + grad A.x] |u|^p,

which satisfy (3/2) F_lambda - P_lambda = P identically.

The Coulomb kernel is 1/|x - y| with no extra normalization, so the induced
Newton potential solves -Delta phi = 4 pi u^2.  For radial densities phi has
the cumulative form

    phi(r) = (4 pi / r) int_0^r s^2 rho(s) ds + 4 pi int_r^R s rho(s) ds,

computed here with prefix sums over the quadrature weights so that
coulomb(u) is algebraically identical to the O(n^2) double-sum oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _numerics
from .errors import DegenerateFieldError
from .grids import RadialField, RadialGrid, integrate_radial, radial_derivative
from .potentials import eval_A, eval_gradA_dot_x

FOUR_PI = 4.0 * np.pi


def _check_p(p: float) -> None:
    if not (2.0 < p < 6.0):
        raise ValueError(f"exponent must lie in (2, 6), got {p}")


@dataclass(frozen=True)
class EnergyBreakdown:
    """All scalar functionals of one field, with the composite identities baked in."""

    D: float
    B: float
    C: float
    N: float
    N_poho: float
    I: float
    P: float
    p: float


@dataclass(frozen=True)
class MultiplierDiagnostics:
    lambda_: float
    residual_h1: float
    identity_gap: float
    f_lambda: float
    p_lambda: float


def mass(u: RadialField) -> float:
    """D(u) = int |u|^2 dx."""
    return integrate_radial(u.values * u.values, u.grid)


def dirichlet(u: RadialField) -> float:
    """B(u) = int |grad u|^2 dx."""
    du = radial_derivative(u)
    return integrate_radial(du * du, u.grid)


def newton_potential(rho: np.ndarray, grid: RadialGrid) -> np.ndarray:
    """Newton potential of a radial density, phi(r) = int rho(y)/|x-y| dy.

    Prefix/suffix sums over the quadrature weights; at r = 0 the limit
    phi(0) = 4 pi int s rho(s) ds.
    """
    return _numerics.newton_potential_raw(np.asarray(rho, dtype=float), grid.nodes, grid.weights)


def coulomb(u: RadialField) -> float:
    """C(u), the Coulomb self-energy of rho = u^2, via the O(n) prefix-sum potential."""
    rho = u.values * u.values
    phi = newton_potential(rho, u.grid)
    return integrate_radial(phi * rho, u.grid)


def coulomb_bruteforce(u: RadialField) -> float:
    """O(n^2) double-quadrature oracle for coulomb().

    The radially reduced kernel is (4 pi)^2 r^2 s^2 rho(r) rho(s) / max(r, s);
    the r = s = 0 cell vanishes with the Jacobian.  Intended for n <= 512.
    """
    r = u.grid.nodes
    w = u.grid.weights
    f = w * r * r * (u.values * u.values)
    denom = np.maximum.outer(r, r)
    with np.errstate(divide="ignore"):
        kernel = np.where(denom > 0.0, 1.0 / denom, 0.0)
    return FOUR_PI * FOUR_PI * float(f @ kernel @ f)


def weighted_nonlinearity(u: RadialField, pot, p: float) -> float:
    """N(u) = int A(x) |u|^p dx (without the 1/p factor)."""
    _check_p(p)
    return integrate_radial(eval_A(pot, u.grid.nodes) * np.abs(u.values) ** p, u.grid)


def gradA_weighted_nonlinearity(u: RadialField, pot, p: float) -> float:
    """int (grad A.x) |u|^p dx, the tilt entering N_poho and P_lambda."""
    _check_p(p)
    return integrate_radial(eval_gradA_dot_x(pot, u.grid.nodes) * np.abs(u.values) ** p, u.grid)


def energy(u: RadialField, pot, p: float) -> EnergyBreakdown:
    """Evaluate every scalar functional of u at once."""
    _check_p(p)
    D = mass(u)
    B = dirichlet(u)
    C = coulomb(u)
    N = weighted_nonlinearity(u, pot, p)
    G = gradA_weighted_nonlinearity(u, pot, p)
    N_poho = 1.5 * (p - 2.0) * N - G
    return EnergyBreakdown(
        D=D,
        B=B,
        C=C,
        N=N,
        N_poho=N_poho,
        I=0.5 * B + 0.25 * C - N / p,
        P=B + 0.25 * C - N_poho / p,
        p=p,
    )


def radial_laplacian(u: RadialField) -> np.ndarray:
    """Delta u = u'' + (2/r) u' by three-point stencils.

    At r = 0 the even extension gives Delta u(0) = 3 u''(0); at r = R a
    one-sided stencil is used (the boundary value is pinned to zero anyway).
    """
    return _numerics.laplacian(u.values, u.grid.nodes)


def energy_gradient(u: RadialField, pot, p: float) -> np.ndarray:
    """L^2 gradient of I: -Delta u + phi_u u - A |u|^{p-2} u."""
    _check_p(p)
    phi = newton_potential(u.values * u.values, u.grid)
    a_vals = eval_A(pot, u.grid.nodes)
    return (
        -radial_laplacian(u)
        + phi * u.values
        - a_vals * np.abs(u.values) ** (p - 2.0) * u.values
    )


def extract_multiplier(u: RadialField, pot, p: float) -> MultiplierDiagnostics:
    """Lagrange multiplier and Pohozaev bookkeeping for a candidate solution.

    lambda is the unique value making F_lambda(u) = 0.  The identity
    (3/2) F_lambda - P_lambda = P holds for any field and any lambda; its
    numerical gap is reported as a sanity check on the bookkeeping.
    """
    bd = energy(u, pot, p)
    if bd.D <= 0.0:
        raise DegenerateFieldError("cannot extract a multiplier from a zero field")
    lam = (bd.N - bd.B - bd.C) / bd.D
    G = gradA_weighted_nonlinearity(u, pot, p)
    f_lambda = bd.B + lam * bd.D + bd.C - bd.N
    p_lambda = 0.5 * bd.B + 1.5 * lam * bd.D + 1.25 * bd.C - (3.0 * bd.N + G) / p
    identity_gap = abs(1.5 * f_lambda - p_lambda - bd.P)
    grad = energy_gradient(u, pot, p)
    res = grad + lam * u.values
    residual_h1 = np.sqrt(integrate_radial(res * res, u.grid) / bd.D)
    return MultiplierDiagnostics(
        lambda_=lam,
        residual_h1=float(residual_h1),
        identity_gap=identity_gap,
        f_lambda=f_lambda,
        p_lambda=p_lambda,
    )


def coercivity_diagnostic(u: RadialField) -> float:
    """Empirical constant in the lower bound C(u) >= -B(u)/(16 pi) + const * |u|_3^3.

    Returns (C(u) + B(u)/(16 pi)) / int |u|^3; strictly positive for every
    nonzero field if the bound holds with a positive constant.
    """
    cubic = integrate_radial(np.abs(u.values) ** 3, u.grid)
    if cubic <= 0.0:
        raise DegenerateFieldError("zero cubic norm")
    return (coulomb(u) + dirichlet(u) / (16.0 * np.pi)) / cubic


def gn_diagnostic(u: RadialField, pot, p: float) -> float:
    """Empirical Gagliardo-Nirenberg ratio N / (B^{3(p-2)/4} D^{(6-p)/4})."""
    _check_p(p)
    B = dirichlet(u)
    if B <= 0.0:
        raise DegenerateFieldError("zero Dirichlet energy")
    D = mass(u)
    N = weighted_nonlinearity(u, pot, p)
    return N / (B ** (0.75 * (p - 2.0)) * D ** (0.25 * (6.0 - p)))
