"""dG(0) in time with P1 in space.

Test functions are constant on each slab, so the global variational problem
decouples into one implicit system per slab:

    (M + tau_n (K_n + B_n + C_n)) Y^n = J_n + int_{slab} load(f, t) dt

with jump term ``J_1 = load(y0)`` and ``J_n = M Y^{n-1}`` for n >= 2. All
matrices use coefficients frozen at the right endpoint t_n.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from . import fem, linalg
from .errors import NoConvergence, SlabSolveError

log = logging.getLogger(__name__)

GAUSS2 = np.array([-1.0, 1.0]) / np.sqrt(3.0)


@dataclass(frozen=True, eq=False)
class TimeGrid:
    t: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        if t.ndim != 1 or t.size < 2:
            raise ValueError("time grid needs at least two nodes")
        if t[0] != 0.0:
            raise ValueError("time grid must start at 0")
        if np.any(np.diff(t) <= 0.0):
            raise ValueError("time grid must be strictly increasing")
        t.setflags(write=False)
        object.__setattr__(self, "t", t)

    @classmethod
    def uniform(cls, T, n_steps):
        t = np.linspace(0.0, T, n_steps + 1)
        t[-1] = T
        return cls(t)

    @classmethod
    def from_step(cls, T, tau):
        """Uniform grid with the largest step not exceeding ``tau``."""
        n = int(np.ceil(T / tau - 1e-9))
        return cls.uniform(T, max(n, 1))

    @property
    def N(self):
        return self.t.size - 1

    @property
    def T(self):
        return float(self.t[-1])

    @property
    def tau_n(self):
        return np.diff(self.t)

    @property
    def tau(self):
        return float(self.tau_n.max())


@dataclass(eq=False)
class DG0Solution:
    mesh: object
    grid: TimeGrid
    slabs: np.ndarray  # (N, n_vertices); row n-1 holds Y^n
    iterations: list = field(default_factory=list)
    residuals: list = field(default_factory=list)

    def __post_init__(self):
        self.slabs.setflags(write=False)

    def __len__(self):
        return self.slabs.shape[0]

    def slab(self, n):
        """Y^n as a P1Function, 1 <= n <= N."""
        return fem.P1Function(self.mesh, self.slabs[n - 1])

    @property
    def initial_trace(self):
        # Y_+^0 is the value on the first slab
        return self.slab(1)


def dg0_step(M, Ktilde_n, B_n, C_n, y_prev, rhs_n, tau_n, tol=linalg.DEFAULT_TOL,
             max_iter=None, slab=None, jump=None, x0=None):
    """Solve one slab; ``jump`` replaces ``M @ y_prev`` when given (first slab)."""
    if tau_n <= 0.0:
        raise ValueError("tau_n must be positive")
    system = linalg.combine([(1.0, M), (tau_n, Ktilde_n), (tau_n, B_n), (tau_n, C_n)])
    jump = M @ y_prev if jump is None else jump
    return _solve_system(system, jump + rhs_n, B_n is None, tol, max_iter, slab, x0)


def _solve_system(system, rhs, maybe_symmetric, tol, max_iter, slab, x0):
    use_cg = maybe_symmetric and system.symmetric and linalg.is_symmetric(system)
    solver = linalg.cg_solve if use_cg else linalg.bicgstab_solve
    try:
        return solver(system, rhs, tol, max_iter, x0=x0)
    except NoConvergence as exc:
        raise SlabSolveError(
            f"slab {slab}: {exc}", slab, residual=exc.residual, history=exc.history
        ) from exc


def forcing_integral(mesh, surface, f, t0, t1):
    """Two-point Gauss in time of load(f, t) over [t0, t1]."""
    if f is None:
        return np.zeros(mesh.n_vertices)
    mid, half = 0.5 * (t0 + t1), 0.5 * (t1 - t0)
    out = np.zeros(mesh.n_vertices)
    for g in GAUSS2:
        out += half * fem.load_vector(mesh, surface, f, mid + half * g)
    return out


class SlabOperators:
    """Assembles (and caches when coefficients are static) the per-slab matrices."""

    def __init__(self, mesh, surface, coeffs):
        self.mesh, self.surface, self.coeffs = mesh, surface, coeffs
        self.M = fem.assemble_mass(mesh, surface)
        self._cache = {}

    def _get(self, key, time_dep, build, t):
        if not time_dep and key in self._cache:
            return self._cache[key]
        mat = build(t)
        if not time_dep:
            self._cache[key] = mat
        return mat

    def at(self, t):
        c = self.coeffs
        K = self._get("K", c.A_time_dependent,
                      lambda s: fem.assemble_tilde_stiffness(self.mesh, self.surface, c.A, s), t)
        B = None if c.b is None else self._get(
            "B", c.b_time_dependent, lambda s: fem.assemble_advection(self.mesh, self.surface, c.b, s), t)
        C = None if c.c is None else self._get(
            "C", c.c_time_dependent, lambda s: fem.assemble_reaction(self.mesh, self.surface, c.c, s), t)
        return K, B, C

    @property
    def static(self):
        c = self.coeffs
        return not (c.A_time_dependent or (c.b is not None and c.b_time_dependent)
                    or (c.c is not None and c.c_time_dependent))


def solve_parabolic(mesh, surface, coeffs, grid, tol=linalg.DEFAULT_TOL, max_iter=None,
                    on_slab=None):
    """Run the scheme over ``grid``; ``on_slab(n, t_n, Y_n)`` is called after each slab."""
    ops = SlabOperators(mesh, surface, coeffs)
    M = ops.M
    N = grid.N
    out = np.empty((N, mesh.n_vertices))
    iters, resids = [], []
    system_cache = {}
    y_prev = None
    for n in range(1, N + 1):
        t0, t1 = grid.t[n - 1], grid.t[n]
        tau_n = t1 - t0
        K, B, C = ops.at(t1)
        key = round(tau_n, 15)
        if ops.static and key in system_cache:
            system = system_cache[key]
        else:
            system = linalg.combine([(1.0, M), (tau_n, K), (tau_n, B), (tau_n, C)])
            if ops.static:
                system_cache[key] = system
        if n == 1:
            jump = fem.load_vector(mesh, surface, coeffs.y0)
        else:
            jump = M @ y_prev
        rhs = jump + forcing_integral(mesh, surface, coeffs.f, t0, t1)
        res = _solve_system(system, rhs, B is None, tol, max_iter, n, y_prev)
        y_prev = res.x
        out[n - 1] = y_prev
        iters.append(res.iterations)
        resids.append(res.residual)
        if on_slab is not None:
            on_slab(n, t1, y_prev)
    log.debug("solved %d slabs, max iterations %d", N, max(iters))
    return DG0Solution(mesh, grid, out, iters, resids)


def variational_residual(mesh, surface, coeffs, solution, phi):
    """A(Y, Phi) minus the right-hand side, for ``phi`` of shape (N, n_vertices).

    Evaluated form by form through the scalar quadrature routines rather than
    the assembled slab systems. The returned scale is sum_n |Phi^n| |b_n| with
    b_n the slab right-hand side (jump plus forcing), so a solve to relative
    residual ``tol`` gives a defect of at most ``tol * scale``.
    """
    grid = solution.grid
    Y = solution.slabs
    M = fem.assemble_mass(mesh, surface)
    lhs = 0.0
    rhs = 0.0
    scale = 0.0
    for n in range(1, grid.N + 1):
        t1, tau_n = grid.t[n], grid.tau_n[n - 1]
        yn = fem.P1Function(mesh, Y[n - 1])
        pn = fem.P1Function(mesh, phi[n - 1])
        lhs += tau_n * fem.quadrature_form(mesh, surface, coeffs.A, t1, yn, pn)
        if coeffs.b is not None:
            lhs += tau_n * advection_form(mesh, surface, coeffs.b, t1, yn, pn)
        if coeffs.c is not None:
            lhs += tau_n * reaction_form(mesh, surface, coeffs.c, t1, yn, pn)
        F_n = forcing_integral(mesh, surface, coeffs.f, grid.t[n - 1], t1)
        if n >= 2:
            jump = M @ Y[n - 2]
            lhs += phi[n - 1] @ (M @ Y[n - 1])
            rhs += phi[n - 1] @ (jump + F_n)
        else:
            # (Y_+^0, Phi_+^0)_h against (y0_lift, Phi_+^0)_h
            jump = fem.load_vector(mesh, surface, coeffs.y0)
            lhs += phi[0] @ (M @ Y[0])
            rhs += phi[0] @ (jump + F_n)
        scale += np.linalg.norm(phi[n - 1]) * np.linalg.norm(jump + F_n)
    return lhs - rhs, scale


def advection_form(mesh, surface, b, t, u, v):
    sp = fem.get_space(mesh, surface)
    gu = u.gradients(surface)
    bk = np.asarray(b(sp.flat_lifted, t), dtype=float)
    bk = np.einsum("nab,nb->na", sp.surface_projectors.reshape(-1, 3, 3), bk).reshape(-1, 3, 3)
    vk = v.at_barycentric(fem.MIDPOINT_BARY)
    return float(np.einsum("f,fka,fa,fk->", sp.weights, bk, gu, vk))


def reaction_form(mesh, surface, c, t, u, v):
    sp = fem.get_space(mesh, surface)
    ck = np.broadcast_to(np.asarray(c(sp.flat_lifted, t), dtype=float), (sp.flat_lifted.shape[0],))
    uk = u.at_barycentric(fem.MIDPOINT_BARY)
    vk = v.at_barycentric(fem.MIDPOINT_BARY)
    return float(np.einsum("f,fk,fk,fk->", sp.weights, ck.reshape(-1, 3), uk, vk))
