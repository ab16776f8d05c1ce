"""Electromagnetic field-strength matrices and vector potentials.

Sign convention (fixed package-wide, signature (-, +, +, +)): the
covariant field-strength matrix stores

    F_0i = -E_i        F_i0 = +E_i        F_ij = eps_ijk B_k

so that the transport law du_m/dtau = (e/m) F_mn u^n reproduces
d(m v)/dt = e (E + v x B) in the low-velocity limit.  The cyclotron and
linear-acceleration oracles in the test suite pin this choice.

Potentials are stored covariantly, A_m = (A_0, A_i), with F = dA, i.e.
F_mn = d_m A_n - d_n A_m.  For a static potential A_0 = -phi this gives
the usual E = -grad(phi).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import MalformedFaraday
from .tensor import (
    DIM,
    DomainGuard,
    EVERYWHERE,
    SpacetimeEvent,
    Tensor2,
    Variance,
)

_ANTISYMMETRY_TOL = 1e-12


def matrix_from_eb(e_field, b_field) -> np.ndarray:
    """Covariant F_mn for uniform E and B three-vectors (Cartesian chart)."""
    ex, ey, ez = (float(v) for v in e_field)
    bx, by, bz = (float(v) for v in b_field)
    return np.array(
        [
            [0.0, -ex, -ey, -ez],
            [ex, 0.0, bz, -by],
            [ey, -bz, 0.0, bx],
            [ez, by, -bx, 0.0],
        ]
    )


def eb_from_matrix(f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Invert matrix_from_eb: recover (E, B) from a covariant F_mn."""
    e_field = np.array([f[1, 0], f[2, 0], f[3, 0]])
    b_field = np.array([f[2, 3], -f[1, 3], f[1, 2]])
    return e_field, b_field


@dataclass(frozen=True)
class FaradayField:
    """Antisymmetric covariant field strength as an evaluator over events."""

    matrix_fn: Callable[[np.ndarray], np.ndarray]
    guard: DomainGuard = EVERYWHERE
    name: str = "faraday"

    def matrix_raw(self, coords: np.ndarray) -> np.ndarray:
        return self.matrix_fn(coords)

    def matrix(self, x: SpacetimeEvent) -> Tensor2:
        """Typed components at `x`; antisymmetry enforced to 1e-12."""
        self.guard.check(x)
        f = self.matrix_fn(x.coords)
        gap = float(np.max(np.abs(f + f.T)))
        if gap > _ANTISYMMETRY_TOL:
            raise MalformedFaraday(f"{self.name}: antisymmetry violated by {gap:.3e}")
        return Tensor2(f, (Variance.DOWN, Variance.DOWN), symmetry="antisymmetric")


def uniform_faraday(e_field=(0.0, 0.0, 0.0), b_field=(0.0, 0.0, 0.0)) -> FaradayField:
    """Constant E and B throughout a Cartesian chart."""
    f = matrix_from_eb(e_field, b_field)
    f.setflags(write=False)
    return FaradayField(lambda c: f, name="uniform-eb")


@dataclass(frozen=True)
class VectorPotential:
    """Covariant potential A_m as an evaluator over events.

    ``deriv_fn`` optionally supplies closed-form gradients with layout
    ``out[m, n] = d A_n / d x^m``; built-in potentials carry one so that
    the derived field strength (and hence its closure residual) is exact
    for linear potentials.
    """

    values_fn: Callable[[np.ndarray], np.ndarray]
    deriv_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None
    guard: DomainGuard = EVERYWHERE
    name: str = "potential"

    def values_raw(self, coords: np.ndarray) -> np.ndarray:
        return self.values_fn(coords)

    def deriv_raw(self, coords: np.ndarray) -> Optional[np.ndarray]:
        return None if self.deriv_fn is None else self.deriv_fn(coords)

    def values(self, x: SpacetimeEvent) -> np.ndarray:
        self.guard.check(x)
        return self.values_fn(x.coords)


def zero_potential() -> VectorPotential:
    z = np.zeros(DIM)
    z.setflags(write=False)
    zz = np.zeros((DIM, DIM))
    zz.setflags(write=False)
    return VectorPotential(lambda c: z, deriv_fn=lambda c: zz, name="zero")


def uniform_field_potential(e_field=(0.0, 0.0, 0.0), b_field=(0.0, 0.0, 0.0)) -> VectorPotential:
    """Potential for uniform E and B in a Cartesian chart.

    A_0 = E . x  (so F_0i = -E_i) plus the symmetric gauge
    A_i = (B x r)_i / 2 for the magnetic part.
    """
    ev = np.array([float(v) for v in e_field])
    bv = np.array([float(v) for v in b_field])

    def values(c: np.ndarray) -> np.ndarray:
        r = c[1:]
        out = np.empty(DIM)
        out[0] = ev @ r
        out[1:] = 0.5 * np.cross(bv, r)
        return out

    def deriv(c: np.ndarray) -> np.ndarray:
        # out[m, n] = d A_n / d x^m; the potential is linear, so constant
        out = np.zeros((DIM, DIM))
        out[1:, 0] = ev
        for i in range(3):
            basis = np.zeros(3)
            basis[i] = 1.0
            out[1 + i, 1:] = 0.5 * np.cross(bv, basis)
        return out

    return VectorPotential(values, deriv_fn=deriv, name="uniform-eb-gauge")


def coulomb_potential(charge: float, radial_index: Optional[int] = None) -> VectorPotential:
    """Monopole potential A_0 = q / r.

    With ``radial_index=None`` the chart is Cartesian and r is the
    Euclidean radius; pass ``radial_index=1`` for spherical-type charts
    where the radius is a coordinate.
    """
    q = float(charge)

    if radial_index is None:

        def values(c: np.ndarray) -> np.ndarray:
            r = np.sqrt(c[1] ** 2 + c[2] ** 2 + c[3] ** 2)
            out = np.zeros(DIM)
            out[0] = q / r
            return out

        def deriv(c: np.ndarray) -> np.ndarray:
            r = np.sqrt(c[1] ** 2 + c[2] ** 2 + c[3] ** 2)
            out = np.zeros((DIM, DIM))
            for i in (1, 2, 3):
                out[i, 0] = -q * c[i] / r**3
            return out

        def probe(x: SpacetimeEvent):
            r = np.sqrt(x.coords[1] ** 2 + x.coords[2] ** 2 + x.coords[3] ** 2)
            return None if r > 1e-9 else f"r = {r:.3e} at the potential singularity"

    else:
        k = radial_index

        def values(c: np.ndarray) -> np.ndarray:
            out = np.zeros(DIM)
            out[0] = q / c[k]
            return out

        def deriv(c: np.ndarray) -> np.ndarray:
            out = np.zeros((DIM, DIM))
            out[k, 0] = -q / c[k] ** 2
            return out

        def probe(x: SpacetimeEvent):
            return None if x.coords[k] > 1e-9 else "radial coordinate at singularity"

    return VectorPotential(
        values, deriv_fn=deriv, guard=DomainGuard(probe, "coulomb"), name=f"coulomb(q={q:g})"
    )


def axial_magnetic_potential_spherical(b_strength: float) -> VectorPotential:
    """Asymptotically uniform magnetic field along the polar axis, spherical chart.

    A_phi = (B/2) r^2 sin^2(theta); the derived field strength falls off
    to the uniform Cartesian B_z = B far from the origin.  This is the
    standard axially symmetric test field on a black-hole chart.
    """
    B = float(b_strength)

    def values(c: np.ndarray) -> np.ndarray:
        r, th = c[1], c[2]
        out = np.zeros(DIM)
        out[3] = 0.5 * B * r * r * np.sin(th) ** 2
        return out

    def deriv(c: np.ndarray) -> np.ndarray:
        r, th = c[1], c[2]
        out = np.zeros((DIM, DIM))
        out[1, 3] = B * r * np.sin(th) ** 2
        out[2, 3] = B * r * r * np.sin(th) * np.cos(th)
        return out

    return VectorPotential(values, deriv_fn=deriv, name=f"axial-b(B={B:g})")
