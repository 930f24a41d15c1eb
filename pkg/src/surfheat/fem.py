"""P1 elements on S_h, edge-midpoint quadrature forms and the discrete projections.

Coefficient fields are vectorised callables over points of shape ``(n, 3)``:

* ``A(x, t) -> (n, 3, 3)`` symmetric, applied to in-plane P1 gradients,
* ``b(x, t) -> (n, 3)``, projected onto the tangent plane of S before use,
* ``c(x, t), f(x, t) -> (n,)`` and ``y0(x) -> (n,)``.

All coefficient evaluations happen at lifted edge midpoints (points of S).
Element quantities are built per triangle in index order and scattered
through a fixed triplet pattern, so assembly is deterministic.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import linalg
from .errors import DegenerateTriangle, EllipticityViolation
from .geometry import tangent_frame

# barycentric weight of corner i at the midpoint of side k (side k joins k, k+1)
MIDPOINT_BARY = np.array(
    [
        [0.5, 0.5, 0.0],
        [0.0, 0.5, 0.5],
        [0.5, 0.0, 0.5],
    ]
)

# Dunavant degree-4 rule, barycentric points and weights summing to one
_A4, _B4 = 0.445948490915965, 0.091576213509771
_W4A, _W4B = 0.223381589678011, 0.109951743655322
DEG4_BARY = np.array(
    [
        [1 - 2 * _A4, _A4, _A4], [_A4, 1 - 2 * _A4, _A4], [_A4, _A4, 1 - 2 * _A4],
        [1 - 2 * _B4, _B4, _B4], [_B4, 1 - 2 * _B4, _B4], [_B4, _B4, 1 - 2 * _B4],
    ]
)
DEG4_WEIGHTS = np.array([_W4A] * 3 + [_W4B] * 3)


@dataclass
class CoefficientSet:
    A: Callable
    b: Optional[Callable]
    c: Optional[Callable]
    f: Optional[Callable]
    y0: Callable
    y0_grad: Optional[Callable] = None
    lambda_min: float = 1e-8
    # lets the time stepper reuse matrices across slabs
    A_time_dependent: bool = True
    b_time_dependent: bool = True
    c_time_dependent: bool = True

    def check(self, surface, points, times, rng=None):
        """Sampled ellipticity and finiteness checks on ``points`` of S."""
        rng = np.random.default_rng(0) if rng is None else rng
        t1, t2 = tangent_frame(surface, points)
        for t in times:
            A = self.A(points, t)
            theta = rng.uniform(0, 2 * np.pi, points.shape[0])
            v = np.cos(theta)[:, None] * t1 + np.sin(theta)[:, None] * t2
            q = np.einsum("ni,nij,nj->n", v, A, v)
            if np.any(q < self.lambda_min):
                raise EllipticityViolation(f"v.Av = {q.min():.3e} < lambda_min at t={t}")
            for fld in (self.b, self.c, self.f):
                if fld is not None and not np.all(np.isfinite(fld(points, t))):
                    raise ValueError(f"non-finite coefficient at t={t}")


def identity_tensor(x, t=None):
    return np.broadcast_to(np.eye(3), (x.shape[0], 3, 3))


class P1Space:
    """Per-(mesh, surface) cache of geometry needed by assembly."""

    def __init__(self, mesh, surface):
        self.mesh = mesh
        self.surface = surface
        tri = mesh.triangles
        c = mesh.corners
        e1 = c[:, 1] - c[:, 0]
        e2 = c[:, 2] - c[:, 0]
        g11 = np.einsum("ij,ij->i", e1, e1)
        g12 = np.einsum("ij,ij->i", e1, e2)
        g22 = np.einsum("ij,ij->i", e2, e2)
        det = g11 * g22 - g12 * g12
        area = 0.5 * np.sqrt(np.maximum(det, 0.0))
        if np.any(area <= 0.0):
            raise DegenerateTriangle(f"{int(np.sum(area <= 0))} degenerate triangle(s)")
        # gradients of barycentric coordinates: [grad l1, grad l2] = [e1 e2] G^-1
        inv11, inv12, inv22 = g22 / det, -g12 / det, g11 / det
        gl1 = inv11[:, None] * e1 + inv12[:, None] * e2
        gl2 = inv12[:, None] * e1 + inv22[:, None] * e2
        self.grad_basis = np.stack([-gl1 - gl2, gl1, gl2], axis=1)  # (F, 3, 3)
        self.area = area
        self.weights = area / 3.0
        n = np.cross(e1, e2)
        n /= np.linalg.norm(n, axis=1)[:, None]
        self.tri_normal = n
        self.tri_projector = np.eye(3)[None] - n[:, :, None] * n[:, None, :]
        rows = np.broadcast_to(tri[:, :, None], (tri.shape[0], 3, 3))
        cols = np.broadcast_to(tri[:, None, :], (tri.shape[0], 3, 3))
        self.pattern = linalg.TripletPattern(rows, cols, (mesh.n_vertices, mesh.n_vertices))
        self._lifted = None
        self._surf_proj = None
        self._frames = None

    @property
    def lifted_midpoints(self):
        """Closest points of the side midpoints, shape ``(F, 3, 3)``."""
        if self._lifted is None:
            m = self.mesh.edge_midpoints.reshape(-1, 3)
            self._lifted = self.surface.closest_point(m).reshape(m.shape[0] // 3, 3, 3)
        return self._lifted

    @property
    def flat_lifted(self):
        return self.lifted_midpoints.reshape(-1, 3)

    @property
    def surface_projectors(self):
        if self._surf_proj is None:
            P = self.surface.tangent_projector(self.flat_lifted)
            self._surf_proj = P.reshape(-1, 3, 3, 3)
        return self._surf_proj

    @property
    def frames(self):
        if self._frames is None:
            self._frames = tangent_frame(self.surface, self.flat_lifted)
        return self._frames

    def scatter(self, local, symmetric=False):
        return self.pattern.assemble(local, symmetric)

    def scatter_vector(self, local):
        return np.bincount(
            self.mesh.triangles.ravel(), weights=local.ravel(), minlength=self.mesh.n_vertices
        )


def get_space(mesh, surface=None):
    surface = surface if surface is not None else mesh.surface
    cache = mesh.__dict__.setdefault("_p1_spaces", {})
    key = id(surface)
    if key not in cache:
        cache[key] = (surface, P1Space(mesh, surface))
    return cache[key][1]


@dataclass(eq=False)
class P1Function:
    mesh: object
    dof: np.ndarray

    def __post_init__(self):
        self.dof = np.asarray(self.dof, dtype=float)
        if self.dof.shape != (self.mesh.n_vertices,):
            raise ValueError(f"dof length {self.dof.shape} != vertex count {self.mesh.n_vertices}")

    def at_barycentric(self, bary):
        """Values at barycentric points ``bary`` (q, 3) of every triangle, shape (F, q)."""
        return self.dof[self.mesh.triangles] @ np.asarray(bary).T

    def gradients(self, surface=None):
        sp = get_space(self.mesh, surface)
        return np.einsum("fk,fkj->fj", self.dof[self.mesh.triangles], sp.grad_basis)


def p1_gradient(mesh, u, triangle_index):
    """Constant in-plane gradient of ``u`` on one triangle."""
    c = mesh.corners[triangle_index]
    e1, e2 = c[1] - c[0], c[2] - c[0]
    G = np.array([[e1 @ e1, e1 @ e2], [e1 @ e2, e2 @ e2]])
    if np.linalg.det(G) <= 0.0:
        raise DegenerateTriangle(f"triangle {triangle_index} is degenerate")
    dof = u.dof if isinstance(u, P1Function) else np.asarray(u)
    vals = dof[mesh.triangles[triangle_index]]
    coef = np.linalg.solve(G, [vals[1] - vals[0], vals[2] - vals[0]])
    return coef[0] * e1 + coef[1] * e2


def assemble_mass(mesh, surface=None):
    sp = get_space(mesh, surface)
    block = (np.ones((3, 3)) + np.eye(3)) / 12.0
    return sp.scatter(sp.area[:, None, None] * block[None], symmetric=True)


def _eval_A(sp, A, t, check=True):
    vals = np.asarray(A(sp.flat_lifted, t), dtype=float)
    vals = np.broadcast_to(vals, (sp.flat_lifted.shape[0], 3, 3))
    if check:
        t1, t2 = sp.frames
        a = np.einsum("ni,nij,nj->n", t1, vals, t1)
        b = 0.5 * (np.einsum("ni,nij,nj->n", t1, vals, t2) + np.einsum("ni,nij,nj->n", t2, vals, t1))
        d = np.einsum("ni,nij,nj->n", t2, vals, t2)
        lam = 0.5 * (a + d) - np.sqrt(0.25 * (a - d) ** 2 + b * b)
        if np.any(lam <= 0.0):
            k = int(np.argmin(lam))
            raise EllipticityViolation(
                f"coefficient tensor not tangentially elliptic at {sp.flat_lifted[k]}, t={t}: "
                f"min eigenvalue {lam[k]:.3e}"
            )
    return vals.reshape(-1, 3, 3, 3)


def stiffness_local(sp, A=None, t=0.0, check=True):
    """Element matrices of the midpoint-quadrature diffusion form, ``(F, 3, 3)``."""
    G = sp.grad_basis
    if A is None:
        return sp.area[:, None, None] * np.einsum("fid,fjd->fij", G, G)
    Ak = _eval_A(sp, A, t, check)
    Asum = np.einsum("f,fkab->fab", sp.weights, Ak)
    return np.einsum("fia,fab,fjb->fij", G, Asum, G)


def assemble_stiffness(mesh, surface=None):
    """Exact P1 stiffness on S_h (the gradient part of a_h)."""
    sp = get_space(mesh, surface)
    return sp.scatter(stiffness_local(sp), symmetric=True)


def assemble_tilde_stiffness(mesh, surface, A, t, check=True):
    sp = get_space(mesh, surface)
    return sp.scatter(stiffness_local(sp, A, t, check), symmetric=True)


def quadrature_form(mesh, surface, A, t, u, v):
    """Midpoint-rule value of the diffusion form for two P1 functions."""
    sp = get_space(mesh, surface)
    gu = u.gradients(surface) if isinstance(u, P1Function) else P1Function(mesh, u).gradients(surface)
    gv = v.gradients(surface) if isinstance(v, P1Function) else P1Function(mesh, v).gradients(surface)
    Ak = _eval_A(sp, A, t)
    return float(np.einsum("f,fa,fkab,fb->", sp.weights, gu, Ak, gv))


def advection_local(sp, b, t):
    bk = np.asarray(b(sp.flat_lifted, t), dtype=float).reshape(-1, 3)
    bk = np.einsum("nab,nb->na", sp.surface_projectors.reshape(-1, 3, 3), bk).reshape(-1, 3, 3)
    # (b . grad phi_j) at each midpoint k: (F, k, j)
    bg = np.einsum("fka,fja->fkj", bk, sp.grad_basis)
    # test function i at midpoint k
    return np.einsum("f,ki,fkj->fij", sp.weights, MIDPOINT_BARY, bg)


def assemble_advection(mesh, surface, b, t):
    sp = get_space(mesh, surface)
    return sp.scatter(advection_local(sp, b, t))


def reaction_local(sp, c, t):
    ck = np.broadcast_to(np.asarray(c(sp.flat_lifted, t), dtype=float), (sp.flat_lifted.shape[0],))
    ck = ck.reshape(-1, 3)
    return np.einsum("f,fk,ki,kj->fij", sp.weights, ck, MIDPOINT_BARY, MIDPOINT_BARY)


def assemble_reaction(mesh, surface, c, t):
    sp = get_space(mesh, surface)
    return sp.scatter(reaction_local(sp, c, t), symmetric=True)


def load_vector(mesh, surface, s, t=None):
    """Midpoint-rule integrals of the lifted field against every hat function.

    ``s`` is called as ``s(x, t)`` when ``t`` is given and ``s(x)`` otherwise.
    """
    sp = get_space(mesh, surface)
    pts = sp.flat_lifted
    vals = s(pts) if t is None else s(pts, t)
    vals = np.broadcast_to(np.asarray(vals, dtype=float), (pts.shape[0],)).reshape(-1, 3)
    local = np.einsum("f,fk,ki->fi", sp.weights, vals, MIDPOINT_BARY)
    return sp.scatter_vector(local)


def interpolate(mesh, surface, z):
    return P1Function(mesh, np.broadcast_to(np.asarray(z(mesh.vertices), dtype=float),
                                            (mesh.n_vertices,)).copy())


def l2_project(mesh, surface, z, tol=linalg.DEFAULT_TOL, max_iter=None):
    M = assemble_mass(mesh, surface)
    res = linalg.cg_solve(M, load_vector(mesh, surface, z), tol, max_iter)
    return P1Function(mesh, res.x)


def lifted_gradient(sp, grad_z, t=None):
    """Gradient of the lift on S_h at the side midpoints, ``(F, 3, 3)``.

    The ambient gradient is taken tangential to S at the lifted point and then
    to the triangle plane.
    """
    g = grad_z(sp.flat_lifted) if t is None else grad_z(sp.flat_lifted, t)
    g = np.asarray(g, dtype=float).reshape(-1, 3)
    g = np.einsum("nab,nb->na", sp.surface_projectors.reshape(-1, 3, 3), g).reshape(-1, 3, 3)
    return np.einsum("fab,fkb->fka", sp.tri_projector, g)


def ritz_rhs(mesh, surface, z, grad_z, A=None, t=0.0):
    """Right-hand side a_h(z_lift, phi_i) (or its tensor-weighted variant) by midpoint rule."""
    sp = get_space(mesh, surface)
    dz = lifted_gradient(sp, grad_z)
    if A is not None:
        Ak = _eval_A(sp, A, t)
        dz = np.einsum("fkab,fkb->fka", Ak, dz)
    grad_part = np.einsum("f,fka,fia->fi", sp.weights, dz, sp.grad_basis)
    zk = np.broadcast_to(np.asarray(z(sp.flat_lifted), dtype=float), (sp.flat_lifted.shape[0],))
    mass_part = np.einsum("f,fk,ki->fi", sp.weights, zk.reshape(-1, 3), MIDPOINT_BARY)
    return sp.scatter_vector(grad_part + mass_part)


def ritz_project(mesh, surface, z, grad_z, tol=linalg.DEFAULT_TOL, max_iter=None):
    """R_h z: solves (K + M) x = a_h(z_lift, phi)."""
    system = linalg.combine([(1.0, assemble_stiffness(mesh, surface)),
                             (1.0, assemble_mass(mesh, surface))])
    res = linalg.cg_solve(system, ritz_rhs(mesh, surface, z, grad_z), tol, max_iter)
    return P1Function(mesh, res.x)


def ritz_project_n(mesh, surface, A, t_n, z, grad_z, tol=linalg.DEFAULT_TOL, max_iter=None):
    """R_h^n z with the quadrature diffusion form at time ``t_n``."""
    system = linalg.combine([(1.0, assemble_tilde_stiffness(mesh, surface, A, t_n)),
                             (1.0, assemble_mass(mesh, surface))])
    res = linalg.cg_solve(system, ritz_rhs(mesh, surface, z, grad_z, A, t_n), tol, max_iter)
    return P1Function(mesh, res.x)


def discrete_green(mesh, surface, v, tol=linalg.DEFAULT_TOL, max_iter=None):
    """G_h v: solves (K + M) x = load(v)."""
    system = linalg.combine([(1.0, assemble_stiffness(mesh, surface)),
                             (1.0, assemble_mass(mesh, surface))])
    res = linalg.cg_solve(system, load_vector(mesh, surface, v), tol, max_iter)
    return P1Function(mesh, res.x)


def deg4_integrate(corners, integrand):
    """Degree-4 Dunavant integral of ``integrand(points (F, 6, 3)) -> (F, 6)`` per triangle."""
    area = 0.5 * np.linalg.norm(
        np.cross(corners[:, 1] - corners[:, 0], corners[:, 2] - corners[:, 0]), axis=1
    )
    pts = np.einsum("qk,fkd->fqd", DEG4_BARY, corners)
    return area * (integrand(pts) @ DEG4_WEIGHTS)


def midpoint_integrate(corners, integrand):
    """Edge-midpoint rule per triangle with weights area/3."""
    area = 0.5 * np.linalg.norm(
        np.cross(corners[:, 1] - corners[:, 0], corners[:, 2] - corners[:, 0]), axis=1
    )
    pts = 0.5 * (corners + np.roll(corners, -1, axis=1))
    return area / 3.0 * integrand(pts).sum(axis=1)
