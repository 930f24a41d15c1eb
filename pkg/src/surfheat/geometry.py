"""Implicit surfaces {phi = 0} and the closest-point lift between S and S_h.

Points are numpy arrays of shape ``(3,)`` or ``(n, 3)``; every query is
vectorised over the leading axis and returns matching shapes.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DegenerateGradient, NotInTube

TOL_GEOM = 1e-12
MAX_GEOM_ITERS = 50
DELTA_MIN = 1e-8

Field = Callable[[np.ndarray], np.ndarray]


def _as_points(p):
    p = np.asarray(p, dtype=float)
    single = p.ndim == 1
    return np.atleast_2d(p), single


@dataclass(frozen=True)
class LevelSetSurface:
    """A closed smooth surface given as the zero set of ``phi``.

    ``phi`` maps ``(n, 3) -> (n,)`` and ``grad_phi`` maps ``(n, 3) -> (n, 3)``.
    When ``exact_closest_point`` is given and ``use_exact`` is set, queries use
    it instead of the generic projection.
    """

    name: str
    phi: Field
    grad_phi: Field
    tube_radius: float
    exact_closest_point: Optional[Field] = None
    exact_area: Optional[float] = None
    use_exact: bool = True
    tol_geom: float = TOL_GEOM
    max_geom_iters: int = MAX_GEOM_ITERS
    delta_min: float = DELTA_MIN

    def closest_point(self, p, generic=False):
        pts, single = _as_points(p)
        if self.exact_closest_point is not None and self.use_exact and not generic:
            a = self.exact_closest_point(pts)
        else:
            a = self._project(pts)
        dist = np.linalg.norm(pts - a, axis=1)
        if np.any(dist > self.tube_radius * (1 + 1e-12)):
            worst = int(np.argmax(dist))
            raise NotInTube(
                f"point {pts[worst]} is {dist[worst]:.3g} from {self.name}, "
                f"tube radius {self.tube_radius}"
            )
        return a[0] if single else a

    def _project(self, p):
        # alternate a Newton step onto {phi=0} with a tangential pull toward p;
        # the fixed point has p - a parallel to grad_phi(a)
        a = p.copy()
        for _ in range(self.max_geom_iters):
            g = self.grad_phi(a)
            g2 = np.einsum("ij,ij->i", g, g)
            if np.any(g2 < self.delta_min**2):
                raise NotInTube(f"{self.name}: vanishing gradient during projection")
            step = -(self.phi(a) / g2)[:, None] * g
            # damping: cap the Newton step where |grad phi| is small
            if np.isfinite(self.tube_radius):
                cap = 0.5 * self.tube_radius
                slen = np.linalg.norm(step, axis=1)
                scale = np.minimum(1.0, cap / np.maximum(slen, 1e-300))
                step = step * scale[:, None]
            a = a + step
            nu = self._unit_normal(a)
            d = p - a
            tang = d - np.einsum("ij,ij->i", d, nu)[:, None] * nu
            a = a + tang
            moved = max(np.abs(step).max(initial=0.0), np.abs(tang).max(initial=0.0))
            if moved <= self.tol_geom:
                break
        else:
            raise NotInTube(
                f"{self.name}: projection did not converge in {self.max_geom_iters} iterations"
            )
        # final polish onto the zero set
        g = self.grad_phi(a)
        a = a - (self.phi(a) / np.einsum("ij,ij->i", g, g))[:, None] * g
        return a

    def _unit_normal(self, a):
        g = self.grad_phi(a)
        n = np.linalg.norm(g, axis=1)
        if np.any(n < self.delta_min):
            raise DegenerateGradient(f"{self.name}: |grad phi| < {self.delta_min}")
        return g / n[:, None]

    def normal(self, a):
        pts, single = _as_points(a)
        nu = self._unit_normal(pts)
        return nu[0] if single else nu

    def signed_distance(self, p):
        pts, single = _as_points(p)
        a = self.closest_point(pts)
        d = np.linalg.norm(pts - a, axis=1) * np.sign(self.phi(pts))
        return d[0] if single else d

    def tangent_projector(self, a):
        pts, single = _as_points(a)
        nu = self._unit_normal(pts)
        P = np.eye(3)[None, :, :] - nu[:, :, None] * nu[:, None, :]
        return P[0] if single else P

    def lift_scalar(self, z, p):
        """Value of ``z`` (a field on S) at the closest point of ``p``."""
        pts, single = _as_points(p)
        vals = np.asarray(z(self.closest_point(pts)), dtype=float)
        vals = np.broadcast_to(vals, (pts.shape[0],)).copy()
        return vals[0] if single else vals


# module-level aliases matching the operation names used elsewhere

def closest_point(surface, p):
    return surface.closest_point(p)


def signed_distance(surface, p):
    return surface.signed_distance(p)


def tangent_projector(surface, a):
    return surface.tangent_projector(a)


def lift_scalar(surface, z, p):
    return surface.lift_scalar(z, p)


def tangent_frame(surface, a):
    """Orthonormal tangent vectors ``(t1, t2)`` at points ``a`` on S."""
    pts, _ = _as_points(a)
    nu = surface.normal(pts)
    # seed with the axis least aligned with the normal
    axis = np.argmin(np.abs(nu), axis=1)
    e = np.eye(3)[axis]
    t1 = e - np.einsum("ij,ij->i", e, nu)[:, None] * nu
    t1 /= np.linalg.norm(t1, axis=1)[:, None]
    t2 = np.cross(nu, t1)
    return t1, t2


def sphere(radius=1.0):
    """Sphere |x| = radius with phi = |x|^2 - radius^2."""
    r2 = radius * radius

    def phi(x):
        return np.einsum("ij,ij->i", x, x) - r2

    def grad_phi(x):
        return 2.0 * x

    def cp(x):
        n = np.linalg.norm(x, axis=1)
        if np.any(n < DELTA_MIN):
            raise NotInTube("sphere: closest point undefined at the centre")
        return radius * x / n[:, None]

    return LevelSetSurface(
        name="sphere",
        phi=phi,
        grad_phi=grad_phi,
        tube_radius=radius,
        exact_closest_point=cp,
        exact_area=4.0 * np.pi * r2,
    )


def torus(R=1.0, r=0.4, use_exact=False):
    """Torus around the z-axis; queries go through the generic projection by default."""

    def phi(x):
        rho = np.hypot(x[:, 0], x[:, 1])
        return (rho - R) ** 2 + x[:, 2] ** 2 - r * r

    def grad_phi(x):
        rho = np.hypot(x[:, 0], x[:, 1])
        rho = np.where(rho < DELTA_MIN, DELTA_MIN, rho)
        s = 2.0 * (rho - R) / rho
        return np.stack([s * x[:, 0], s * x[:, 1], 2.0 * x[:, 2]], axis=1)

    def cp(x):
        rho = np.hypot(x[:, 0], x[:, 1])
        if np.any(rho < DELTA_MIN):
            raise NotInTube("torus: closest point undefined on the axis")
        c = np.zeros_like(x)
        c[:, 0] = R * x[:, 0] / rho
        c[:, 1] = R * x[:, 1] / rho
        d = x - c
        dn = np.linalg.norm(d, axis=1)
        if np.any(dn < DELTA_MIN):
            raise NotInTube("torus: closest point undefined on the core circle")
        return c + r * d / dn[:, None]

    return LevelSetSurface(
        name="torus",
        phi=phi,
        grad_phi=grad_phi,
        tube_radius=min(r, R - r),
        exact_closest_point=cp,
        exact_area=4.0 * np.pi**2 * R * r,
        use_exact=use_exact,
    )


def plane():
    """The plane x3 = 0. Closest point is the identity on it; used for flat-triangle checks."""

    def phi(x):
        return x[:, 2].copy()

    def grad_phi(x):
        g = np.zeros_like(x)
        g[:, 2] = 1.0
        return g

    def cp(x):
        a = x.copy()
        a[:, 2] = 0.0
        return a

    return LevelSetSurface(
        name="plane", phi=phi, grad_phi=grad_phi, tube_radius=np.inf, exact_closest_point=cp
    )


SURFACES = {"sphere": sphere, "torus": torus}


def get_surface(name):
    try:
        return SURFACES[name]()
    except KeyError:
        raise ValueError(f"unknown surface {name!r}; choose from {sorted(SURFACES)}") from None
