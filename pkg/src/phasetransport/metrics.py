"""Built-in metrics with closed-form first derivatives.

Three charts ship with the package:

* ``minkowski()``      -- Cartesian (t, x, y, z), exact eta.
* ``schwarzschild(M)`` -- curvature coordinates (t, r, theta, phi),
  guarded to r > 2M(1 + 1e-6) and away from the polar axis.
* ``weak_field(M)``    -- Cartesian chart with g_00 = -(1 + 2 Phi),
  Phi = -M/r, spatial part exactly flat.

Each carries analytic derivative and inverse evaluators so that
downstream consumers (Christoffel assembly, transport) avoid one level
of numerical differentiation.  Wrap any of them with
``without_closed_form`` to exercise the finite-difference fallbacks.
"""

from __future__ import annotations

import numpy as np

from .tensor import DIM, DomainGuard, MetricField, SpacetimeEvent, flat_metric

#: Relative safety margin kept outside the Schwarzschild horizon.
HORIZON_MARGIN = 1e-6
#: Polar-axis exclusion for spherical-type charts (sin(theta) floor).
AXIS_MARGIN = 1e-8


def minkowski() -> MetricField:
    return flat_metric()


def _schwarzschild_guard(mass: float) -> DomainGuard:
    r_min = 2.0 * mass * (1.0 + HORIZON_MARGIN)

    def probe(x: SpacetimeEvent):
        r = x.coords[1]
        if not r > r_min:
            return f"r = {r:.6g} inside guarded radius {r_min:.6g}"
        s = abs(np.sin(x.coords[2]))
        if s < AXIS_MARGIN:
            return f"theta = {x.coords[2]:.6g} too close to the polar axis"
        return None

    return DomainGuard(probe, label=f"schwarzschild(M={mass:g})")


def schwarzschild(mass: float = 1.0) -> MetricField:
    """Vacuum black-hole exterior in curvature coordinates (t, r, theta, phi)."""
    if not mass > 0:
        raise ValueError("mass must be positive")
    M = float(mass)

    def matrix(c: np.ndarray) -> np.ndarray:
        r, th = c[1], c[2]
        f = 1.0 - 2.0 * M / r
        g = np.zeros((DIM, DIM))
        g[0, 0] = -f
        g[1, 1] = 1.0 / f
        g[2, 2] = r * r
        g[3, 3] = r * r * np.sin(th) ** 2
        return g

    def inverse(c: np.ndarray) -> np.ndarray:
        r, th = c[1], c[2]
        f = 1.0 - 2.0 * M / r
        gi = np.zeros((DIM, DIM))
        gi[0, 0] = -1.0 / f
        gi[1, 1] = f
        gi[2, 2] = 1.0 / (r * r)
        gi[3, 3] = 1.0 / (r * r * np.sin(th) ** 2)
        return gi

    def deriv(c: np.ndarray) -> np.ndarray:
        # out[m, n, s] = d g_mn / d x^s
        r, th = c[1], c[2]
        f = 1.0 - 2.0 * M / r
        df = 2.0 * M / (r * r)
        sin_th, cos_th = np.sin(th), np.cos(th)
        out = np.zeros((DIM, DIM, DIM))
        out[0, 0, 1] = -df
        out[1, 1, 1] = -df / (f * f)
        out[2, 2, 1] = 2.0 * r
        out[3, 3, 1] = 2.0 * r * sin_th**2
        out[3, 3, 2] = 2.0 * r * r * sin_th * cos_th
        return out

    return MetricField(
        matrix_fn=matrix,
        deriv_fn=deriv,
        inverse_fn=inverse,
        guard=_schwarzschild_guard(M),
        name=f"schwarzschild(M={M:g})",
        coordinate_names=("t", "r", "theta", "phi"),
    )


def weak_field(mass: float = 1.0) -> MetricField:
    """Newtonian-limit chart: g_00 = -(1 + 2 Phi) with Phi = -M/r, flat space part.

    The time-time component changes sign at r = 2M, so the same horizon
    guard as Schwarzschild applies.
    """
    if not mass > 0:
        raise ValueError("mass must be positive")
    M = float(mass)
    r_min = 2.0 * M * (1.0 + HORIZON_MARGIN)

    def radius(c: np.ndarray) -> float:
        return float(np.sqrt(c[1] ** 2 + c[2] ** 2 + c[3] ** 2))

    def probe(x: SpacetimeEvent):
        r = radius(x.coords)
        if not r > r_min:
            return f"r = {r:.6g} inside guarded radius {r_min:.6g}"
        return None

    def matrix(c: np.ndarray) -> np.ndarray:
        g = np.eye(DIM)
        g[0, 0] = -(1.0 - 2.0 * M / radius(c))
        return g

    def inverse(c: np.ndarray) -> np.ndarray:
        gi = np.eye(DIM)
        gi[0, 0] = -1.0 / (1.0 - 2.0 * M / radius(c))
        return gi

    def deriv(c: np.ndarray) -> np.ndarray:
        # d g_00 / d x^i = -2 dPhi/dx^i = -2 M x_i / r^3
        r = radius(c)
        out = np.zeros((DIM, DIM, DIM))
        for i in (1, 2, 3):
            out[0, 0, i] = -2.0 * M * c[i] / r**3
        return out

    return MetricField(
        matrix_fn=matrix,
        deriv_fn=deriv,
        inverse_fn=inverse,
        guard=DomainGuard(probe, label=f"weak-field(M={M:g})"),
        name=f"weak-field(M={M:g})",
        coordinate_names=("t", "x", "y", "z"),
    )


def without_closed_form(g: MetricField) -> MetricField:
    """Copy of `g` stripped to its bare matrix evaluator.

    Forces downstream code onto the finite-difference path; used to test
    the documented looser tolerances for user-supplied metrics.
    """
    return MetricField(
        matrix_fn=g.matrix_fn,
        deriv_fn=None,
        inverse_fn=None,
        guard=g.guard,
        name=f"{g.name} [numeric]",
        coordinate_names=g.coordinate_names,
    )
