"""Flat-triangle meshes with nodes on S: icosphere and torus families.

Refinement is uniform 1->4 with parents keeping their indices and edge
midpoint children appended in first-encounter order, so vertex numbering is
reproducible across runs.
"""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np

from .errors import DegenerateTriangle, QualityViolation
from .geometry import LevelSetSurface

GAMMA_0 = 0.3
# a structured torus grid cannot reach 0.3 under the global-h definition
GAMMA_0_TORUS = 0.25
MAX_LEVEL = 8

_T = (1.0 + np.sqrt(5.0)) / 2.0
_ICO_VERTICES = np.array(
    [
        [-1, _T, 0], [1, _T, 0], [-1, -_T, 0], [1, -_T, 0],
        [0, -1, _T], [0, 1, _T], [0, -1, -_T], [0, 1, -_T],
        [_T, 0, -1], [_T, 0, 1], [-_T, 0, -1], [-_T, 0, 1],
    ],
    dtype=float,
)
_ICO_FACES = np.array(
    [
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ],
    dtype=np.int64,
)


@dataclass(frozen=True, eq=False)
class SurfaceMesh:
    vertices: np.ndarray
    triangles: np.ndarray
    surface: Optional[LevelSetSurface] = field(default=None, repr=False)
    level: int = 0

    def __post_init__(self):
        v = np.ascontiguousarray(self.vertices, dtype=float)
        t = np.ascontiguousarray(self.triangles, dtype=np.int64)
        v.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t)

    @property
    def n_vertices(self):
        return self.vertices.shape[0]

    @property
    def n_triangles(self):
        return self.triangles.shape[0]

    @cached_property
    def corners(self):
        """Triangle corner coordinates, shape ``(F, 3, 3)``."""
        return self.vertices[self.triangles]

    @cached_property
    def normals(self):
        c = self.corners
        n = np.cross(c[:, 1] - c[:, 0], c[:, 2] - c[:, 0])
        return n / np.linalg.norm(n, axis=1)[:, None]

    @cached_property
    def per_triangle_area(self):
        c = self.corners
        return 0.5 * np.linalg.norm(np.cross(c[:, 1] - c[:, 0], c[:, 2] - c[:, 0]), axis=1)

    @cached_property
    def _edge_data(self):
        # local edge k joins corners k and (k+1) % 3
        tri = self.triangles
        a = tri
        b = np.roll(tri, -1, axis=1)
        lo = np.minimum(a, b).ravel()
        hi = np.maximum(a, b).ravel()
        keys = lo * (self.n_vertices + 1) + hi
        uniq, first, inv = np.unique(keys, return_index=True, return_inverse=True)
        order = np.argsort(first, kind="stable")
        rank = np.empty_like(order)
        rank[order] = np.arange(order.size)
        edges = np.stack([lo[first[order]], hi[first[order]]], axis=1)
        return edges, rank[inv].reshape(tri.shape)

    @property
    def edges(self):
        """Unique undirected edges ``(E, 2)`` in first-encounter order."""
        return self._edge_data[0]

    @property
    def triangle_edges(self):
        """Global edge index of local edge k (corners k, k+1) per triangle."""
        return self._edge_data[1]

    @property
    def n_edges(self):
        return self.edges.shape[0]

    @cached_property
    def edge_midpoints(self):
        """Per-triangle side midpoints ``(F, 3, 3)``; side k joins corners k and k+1."""
        c = self.corners
        return 0.5 * (c + np.roll(c, -1, axis=1))

    @cached_property
    def lifted_edge_midpoints(self):
        if self.surface is None:
            raise ValueError("mesh has no surface attached; cannot lift midpoints")
        m = self.edge_midpoints.reshape(-1, 3)
        return self.surface.closest_point(m).reshape(self.n_triangles, 3, 3)

    @cached_property
    def _size(self):
        return mesh_size(self)

    @property
    def h(self):
        return self._size[0]

    @property
    def gamma_h(self):
        return self._size[1]

    def with_surface(self, surface):
        return SurfaceMesh(self.vertices, self.triangles, surface, self.level)


def triangle_radii(corners):
    """Circumradius and inradius of flat triangles given as ``(F, 3, 3)`` corners."""
    a = np.linalg.norm(corners[:, 1] - corners[:, 2], axis=1)
    b = np.linalg.norm(corners[:, 2] - corners[:, 0], axis=1)
    c = np.linalg.norm(corners[:, 0] - corners[:, 1], axis=1)
    area = 0.5 * np.linalg.norm(
        np.cross(corners[:, 1] - corners[:, 0], corners[:, 2] - corners[:, 0]), axis=1
    )
    if np.any(area <= 0.0):
        raise DegenerateTriangle(f"{int(np.sum(area <= 0))} triangle(s) with non-positive area")
    circ = a * b * c / (4.0 * area)
    inr = area / (0.5 * (a + b + c))
    return circ, inr


def mesh_size(mesh):
    """Return ``(h, gamma_h)``: max circumdiameter and min inscribed diameter over h."""
    circ, inr = triangle_radii(mesh.corners)
    h = 2.0 * circ.max()
    return h, 2.0 * inr.min() / h


def surface_area(mesh):
    return float(mesh.per_triangle_area.sum())


def _subdivide(vertices, triangles, n_vertices):
    tri = triangles
    a = tri
    b = np.roll(tri, -1, axis=1)
    lo = np.minimum(a, b).ravel()
    hi = np.maximum(a, b).ravel()
    keys = lo * (n_vertices + 1) + hi
    _, first, inv = np.unique(keys, return_index=True, return_inverse=True)
    order = np.argsort(first, kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(order.size)
    mid_idx = (n_vertices + rank[inv]).reshape(tri.shape)
    e_lo, e_hi = lo[first[order]], hi[first[order]]
    mids = 0.5 * (vertices[e_lo] + vertices[e_hi])
    m01, m12, m20 = mid_idx[:, 0], mid_idx[:, 1], mid_idx[:, 2]
    v0, v1, v2 = tri[:, 0], tri[:, 1], tri[:, 2]
    children = np.stack(
        [
            np.stack([v0, m01, m20], 1),
            np.stack([m01, v1, m12], 1),
            np.stack([m20, m12, v2], 1),
            np.stack([m01, m12, m20], 1),
        ],
        axis=1,
    ).reshape(-1, 3)
    return np.vstack([vertices, mids]), children


def default_gamma_0(surface):
    return GAMMA_0_TORUS if surface is not None and surface.name == "torus" else GAMMA_0


def refine_and_project(mesh, surface=None, gamma_0=None):
    """Split each triangle into four and move the new edge midpoints onto S."""
    surface = surface if surface is not None else mesh.surface
    if gamma_0 is None:
        gamma_0 = default_gamma_0(surface)
    verts, tris = _subdivide(mesh.vertices, mesh.triangles, mesh.n_vertices)
    nv = mesh.n_vertices
    verts[nv:] = surface.closest_point(verts[nv:])
    out = SurfaceMesh(verts, tris, surface, mesh.level + 1)
    if out.gamma_h < gamma_0:
        raise QualityViolation(f"gamma_h = {out.gamma_h:.4f} < gamma_0 = {gamma_0}")
    return out


def build_icosphere(level, surface, gamma_0=GAMMA_0, max_level=MAX_LEVEL):
    if not 0 <= level <= max_level:
        raise ValueError(f"level must lie in [0, {max_level}], got {level}")
    verts = surface.closest_point(_ICO_VERTICES)
    mesh = SurfaceMesh(verts, _ICO_FACES.copy(), surface, 0)
    for _ in range(level):
        mesh = refine_and_project(mesh, surface, gamma_0)
    return mesh


def torus_base_mesh(surface, n_major=20, n_minor=8, R=1.0, r=0.4):
    """Quad grid in the torus angles, each quad split along a diagonal.

    Odd rings are shifted by half a cell in the major angle, which keeps the
    triangles close to isosceles.
    """
    if n_minor % 2:
        raise ValueError("n_minor must be even for the staggered ring layout")
    i, j = np.meshgrid(np.arange(n_major), np.arange(n_minor), indexing="ij")
    shift = 0.5 * (j % 2)
    u = 2.0 * np.pi * (i + shift) / n_major
    v = 2.0 * np.pi * j / n_minor
    pts = np.stack(
        [(R + r * np.cos(v)) * np.cos(u), (R + r * np.cos(v)) * np.sin(u), r * np.sin(v)], axis=-1
    ).reshape(-1, 3)

    def idx(ii, jj):
        return (ii % n_major) * n_minor + (jj % n_minor)

    tris = []
    for a in range(n_major):
        for b in range(n_minor):
            p00, p10 = idx(a, b), idx(a + 1, b)
            p01, p11 = idx(a, b + 1), idx(a + 1, b + 1)
            if b % 2 == 0:
                # ring b+1 is shifted forward: split along p10-p01
                tris.append([p00, p10, p01])
                tris.append([p10, p11, p01])
            else:
                tris.append([p00, p10, p11])
                tris.append([p00, p11, p01])
    pts = surface.closest_point(pts)
    return SurfaceMesh(pts, np.array(tris, dtype=np.int64), surface, 0)


def build_torus(level, surface, gamma_0=GAMMA_0_TORUS, max_level=MAX_LEVEL, **base_kw):
    if not 0 <= level <= max_level:
        raise ValueError(f"level must lie in [0, {max_level}], got {level}")
    mesh = torus_base_mesh(surface, **base_kw)
    if mesh.gamma_h < gamma_0:
        raise QualityViolation(f"torus base mesh gamma_h = {mesh.gamma_h:.4f} < {gamma_0}")
    for _ in range(level):
        mesh = refine_and_project(mesh, surface, gamma_0)
    return mesh


def build_mesh(surface, level, **kw):
    if surface.name == "sphere":
        return build_icosphere(level, surface, **kw)
    if surface.name == "torus":
        return build_torus(level, surface, **kw)
    raise ValueError(f"no mesh family for surface {surface.name!r}")


@dataclass
class MeshDiagnostics:
    boundary_edges: list
    nonmanifold_edges: list
    orientation_conflicts: list
    off_surface_vertices: list
    degenerate_triangles: list
    euler_characteristic: int
    n_vertices: int
    n_edges: int
    n_faces: int

    @property
    def violations(self):
        return (
            len(self.boundary_edges)
            + len(self.nonmanifold_edges)
            + len(self.orientation_conflicts)
            + len(self.off_surface_vertices)
            + len(self.degenerate_triangles)
        )

    @property
    def ok(self):
        return self.violations == 0


def validate_manifold(mesh, surface=None, tol_geom=None):
    """Report incidence, orientation, on-surface and area violations without raising."""
    surface = surface if surface is not None else mesh.surface
    tri = mesh.triangles
    a = tri.ravel()
    b = np.roll(tri, -1, axis=1).ravel()
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    forward = a < b
    pairs = {}
    for k in range(lo.size):
        pairs.setdefault((int(lo[k]), int(hi[k])), []).append(bool(forward[k]))
    boundary, nonmanifold, conflicts = [], [], []
    for e, dirs in pairs.items():
        if len(dirs) == 1:
            boundary.append(e)
        elif len(dirs) > 2:
            nonmanifold.append(e)
        elif dirs[0] == dirs[1]:
            conflicts.append(e)
    off = []
    if surface is not None:
        tol = surface.tol_geom if tol_geom is None else tol_geom
        # phi is normalised by |grad phi| so the check is a distance
        g = np.linalg.norm(surface.grad_phi(mesh.vertices), axis=1)
        d = np.abs(surface.phi(mesh.vertices)) / g
        off = np.flatnonzero(d > tol).tolist()
    degenerate = np.flatnonzero(mesh.per_triangle_area <= 0.0).tolist()
    used = np.unique(tri)
    V, E, F = used.size, len(pairs), tri.shape[0]
    return MeshDiagnostics(
        boundary_edges=boundary,
        nonmanifold_edges=nonmanifold,
        orientation_conflicts=conflicts,
        off_surface_vertices=off,
        degenerate_triangles=degenerate,
        euler_characteristic=V - E + F,
        n_vertices=V,
        n_edges=E,
        n_faces=F,
    )


def write_off(mesh, path):
    """Plain OFF triangle soup: header, counts, vertex lines, face lines (0-based)."""
    with open(path, "w") as fh:
        fh.write("OFF\n")
        fh.write(f"{mesh.n_vertices} {mesh.n_triangles} {mesh.n_edges}\n")
        for x, y, z in mesh.vertices:
            fh.write(f"{x:.17g} {y:.17g} {z:.17g}\n")
        for i, j, k in mesh.triangles:
            fh.write(f"3 {i} {j} {k}\n")


def read_off(path):
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
    if lines[0] != "OFF":
        raise ValueError("missing OFF header")
    nv, nf = (int(x) for x in lines[1].split()[:2])
    verts = np.array([[float(x) for x in ln.split()] for ln in lines[2 : 2 + nv]])
    faces = np.array([[int(x) for x in ln.split()[1:4]] for ln in lines[2 + nv : 2 + nv + nf]])
    return SurfaceMesh(verts, faces)
