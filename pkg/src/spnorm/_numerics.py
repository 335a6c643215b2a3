"""Array-level stencil and quadrature kernels shared by the public modules.

These operate on raw numpy arrays so the solvers can iterate without
re-validating field objects on every step.  The public operations in
`grids` and `functionals` delegate here.
"""

from __future__ import annotations

import numpy as np

FOUR_PI = 4.0 * np.pi


def volume_measure(r: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Per-node volume weights 4 pi w_i r_i^2."""
    return FOUR_PI * w * r * r


def derivative(u: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Three-point first derivative: central interior, one-sided ends."""
    d = np.empty_like(u)
    h1 = r[1:-1] - r[:-2]
    h2 = r[2:] - r[1:-1]
    d[1:-1] = (
        -h2 / (h1 * (h1 + h2)) * u[:-2]
        + (h2 - h1) / (h1 * h2) * u[1:-1]
        + h1 / (h2 * (h1 + h2)) * u[2:]
    )
    a, b = r[1] - r[0], r[2] - r[1]
    d[0] = (
        -(2 * a + b) / (a * (a + b)) * u[0]
        + (a + b) / (a * b) * u[1]
        - a / (b * (a + b)) * u[2]
    )
    a, b = r[-2] - r[-3], r[-1] - r[-2]
    d[-1] = (
        b / (a * (a + b)) * u[-3]
        - (a + b) / (a * b) * u[-2]
        + (a + 2 * b) / (b * (a + b)) * u[-1]
    )
    return d


def laplacian(u: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Radial Laplacian u'' + (2/r) u'; even extension at the origin."""
    du = derivative(u, r)
    d2 = np.empty_like(u)
    h1 = r[1:-1] - r[:-2]
    h2 = r[2:] - r[1:-1]
    d2[1:-1] = 2.0 * (
        u[:-2] / (h1 * (h1 + h2)) - u[1:-1] / (h1 * h2) + u[2:] / (h2 * (h1 + h2))
    )
    d2[0] = 2.0 * (u[1] - u[0]) / (r[1] - r[0]) ** 2
    a, b = r[-2] - r[-3], r[-1] - r[-2]
    d2[-1] = 2.0 * (u[-3] / (a * (a + b)) - u[-2] / (a * b) + u[-1] / (b * (a + b)))
    out = np.empty_like(u)
    out[1:] = d2[1:] + 2.0 * du[1:] / r[1:]
    out[0] = 3.0 * d2[0]
    return out


def newton_potential_raw(rho: np.ndarray, r: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Prefix-sum Newton potential of a radial density (see functionals)."""
    inner = np.cumsum(w * r * r * rho)
    q = w * r * rho
    outer = np.cumsum(q[::-1])[::-1] - q
    phi = np.empty_like(rho)
    phi[1:] = FOUR_PI * (inner[1:] / r[1:] + outer[1:])
    phi[0] = FOUR_PI * float(np.sum(q))
    return phi
