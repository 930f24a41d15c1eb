"""Manufactured problems, discrete error norms, EOCs and refinement studies."""

import csv
import hashlib
import io
import logging
import math
from dataclasses import dataclass, field, fields
from typing import Callable, Optional

import numpy as np

from . import fem, linalg
from .errors import NonPositiveError
from .geometry import sphere, tangent_frame, torus
from .mesh import build_mesh, surface_area
from .timestepping import TimeGrid, solve_parabolic

log = logging.getLogger(__name__)

H_FD = 1e-4
TOL_MMS = 1e-5


# --- finite-difference oracle -------------------------------------------------

def fd_surface_gradient(surface, g, p, h=H_FD):
    """Tangential gradient of a field on S by central differences of g o cp."""
    t1, t2 = tangent_frame(surface, p)
    out = np.zeros_like(p)
    for t in (t1, t2):
        plus = g(surface.closest_point(p + h * t))
        minus = g(surface.closest_point(p - h * t))
        out += ((plus - minus) / (2 * h))[:, None] * t
    return out


def fd_surface_divergence(surface, F, p, h=H_FD):
    """Surface divergence tr(P DF) of a tangential field by central differences."""
    t1, t2 = tangent_frame(surface, p)
    out = np.zeros(p.shape[0])
    for t in (t1, t2):
        plus = F(surface.closest_point(p + h * t))
        minus = F(surface.closest_point(p - h * t))
        out += np.einsum("ij,ij->i", plus - minus, t) / (2 * h)
    return out


def _flux(surface, A, grad, t):
    # tangential part of A applied to the surface gradient
    def F(q):
        P = surface.tangent_projector(q)
        return np.einsum("nab,nbc,nc->na", P, A(q, t), grad(q))
    return F


def finite_difference_surface_residual(surface, y, coeffs, p, t, h_fd=H_FD):
    """y_t - div_S(A grad_S y) + b.grad_S y + c y - f at points ``p`` of S."""
    p = np.atleast_2d(np.asarray(p, dtype=float))
    def ys(q):
        return y(q, t)

    def grad(q):
        return fd_surface_gradient(surface, ys, q, h_fd)

    res = (y(p, t + h_fd) - y(p, t - h_fd)) / (2 * h_fd)
    res = res - fd_surface_divergence(surface, _flux(surface, coeffs.A, grad, t), p, h_fd)
    if coeffs.b is not None:
        P = surface.tangent_projector(p)
        bt = np.einsum("nab,nb->na", P, coeffs.b(p, t))
        res = res + np.einsum("na,na->n", bt, grad(p))
    if coeffs.c is not None:
        res = res + coeffs.c(p, t) * y(p, t)
    if coeffs.f is not None:
        res = res - coeffs.f(p, t)
    return res


def _points_key(p):
    return hashlib.blake2b(np.ascontiguousarray(p).tobytes(), digest_size=16).digest()


class SeparableOracleForcing:
    """Forcing f(x, t) that makes y(x, t) = theta(t) Y(x) solve the equation exactly.

    The coefficients are sums of time factor times spatial field. Each spatial
    operator term is evaluated with the finite-difference oracle and cached per
    point set, so repeated calls on the fixed quadrature points are cheap.
    """

    def __init__(self, surface, Y, theta, A_terms=(), b_terms=(), c_terms=(), h_fd=H_FD):
        self.surface = surface
        self.Y = Y
        self.theta = theta
        self.A_terms = list(A_terms)
        self.b_terms = list(b_terms)
        self.c_terms = list(c_terms)
        self.h_fd = h_fd
        self._cache = {}

    def _spatial(self, p):
        key = _points_key(p)
        if key in self._cache:
            return self._cache[key]
        s, h = self.surface, self.h_fd
        def grad(q):
            return fd_surface_gradient(s, self.Y, q, h)

        def const(field_):
            return lambda q, t: field_(q)

        divs = [fd_surface_divergence(s, _flux(s, const(Aa), grad, 0.0), p, h)
                for _, Aa in self.A_terms]
        gp = grad(p) if self.b_terms else None
        P = s.tangent_projector(p) if self.b_terms else None
        advs = [np.einsum("nab,nb,na->n", P, bb(p), gp) for _, bb in self.b_terms]
        Yp = self.Y(p)
        reacts = [cc(p) * Yp for _, cc in self.c_terms]
        out = (Yp, divs, advs, reacts)
        if len(self._cache) > 64:
            self._cache.clear()
        self._cache[key] = out
        return out

    def __call__(self, p, t):
        p = np.atleast_2d(np.asarray(p, dtype=float))
        Yp, divs, advs, reacts = self._spatial(p)
        h = self.h_fd
        th = self.theta(t)
        out = (self.theta(t + h) - self.theta(t - h)) / (2 * h) * Yp
        for (alpha, _), d in zip(self.A_terms, divs):
            out = out - th * alpha(t) * d
        for (beta, _), a in zip(self.b_terms, advs):
            out = out + th * beta(t) * a
        for (gamma, _), r in zip(self.c_terms, reacts):
            out = out + th * gamma(t) * r
        return out


# --- manufactured problems ----------------------------------------------------

@dataclass
class ManufacturedProblem:
    label: str
    surface: object
    y: Callable          # y(x, t)
    grad_y: Callable     # ambient gradient, (x, t) -> (n, 3)
    coeffs: fem.CoefficientSet
    T: float = 1.0

    def sample_points(self, n, rng):
        """Random points on S: random ambient directions pushed onto the surface."""
        if self.surface.name == "torus":
            u, v = rng.uniform(0, 2 * np.pi, (2, n))
            R, r = 1.0, 0.4
            x = np.stack([(R + r * np.cos(v)) * np.cos(u), (R + r * np.cos(v)) * np.sin(u),
                          r * np.sin(v)], axis=1)
            return self.surface.closest_point(x)
        x = rng.normal(size=(n, 3))
        return self.surface.closest_point(x / np.linalg.norm(x, axis=1)[:, None])

    def residuals(self, n=200, seed=42, h_fd=H_FD):
        rng = np.random.default_rng(seed)
        p = self.sample_points(n, rng)
        t = rng.uniform(0.0, self.T, n)
        out = np.empty(n)
        # group by time: the oracle takes one t per call
        for k in range(n):
            out[k] = finite_difference_surface_residual(
                self.surface, self.y, self.coeffs, p[k : k + 1], t[k], h_fd)[0]
        return out

    def certify(self, n=200, seed=42, tol=TOL_MMS):
        r = np.abs(self.residuals(n, seed)).max()
        if not r <= tol:
            raise ValueError(f"manufactured problem {self.label!r} fails residual check: {r:.3e}")
        return float(r)


def _xy(x):
    return x[:, 0] * x[:, 1]


def _grad_xy(x):
    return np.stack([x[:, 1], x[:, 0], np.zeros(x.shape[0])], axis=1)


def sphere_heat():
    """y = exp(-t) x1 x2 on the unit sphere, A = I, f = 5 exp(-t) x1 x2."""
    S = sphere()
    coeffs = fem.CoefficientSet(
        A=fem.identity_tensor, b=None, c=None,
        f=lambda x, t: 5.0 * np.exp(-t) * _xy(x),
        y0=_xy, y0_grad=_grad_xy, lambda_min=1.0,
        A_time_dependent=False,
    )
    return ManufacturedProblem(
        "heat", S,
        y=lambda x, t: np.exp(-t) * _xy(x),
        grad_y=lambda x, t: np.exp(-t) * _grad_xy(x),
        coeffs=coeffs,
    )


def _sphere_projector(x):
    n = x / np.linalg.norm(x, axis=1)[:, None]
    return np.eye(3)[None] - n[:, :, None] * n[:, None, :]


def _aniso_direction(x):
    P = _sphere_projector(x)
    return P[:, :, 0]  # P e1


def sphere_full():
    """y = exp(-t) x1 x2 with A = P + 0.5 (1 + t) w w^T, w = P e1, b = P (e3 x x), c = 1 + sin t."""
    S = sphere()

    def A_base(x):
        return _sphere_projector(x)

    def A_rank1(x):
        w = _aniso_direction(x)
        return w[:, :, None] * w[:, None, :]

    def A(x, t):
        return A_base(x) + 0.5 * (1.0 + t) * A_rank1(x)

    def b_space(x):
        v = np.stack([-x[:, 1], x[:, 0], np.zeros(x.shape[0])], axis=1)
        return np.einsum("nab,nb->na", _sphere_projector(x), v)

    forcing = SeparableOracleForcing(
        S, _xy, theta=lambda t: math.exp(-t),
        A_terms=[(lambda t: 1.0, A_base), (lambda t: 0.5 * (1.0 + t), A_rank1)],
        b_terms=[(lambda t: 1.0, b_space)],
        c_terms=[(lambda t: 1.0 + math.sin(t), lambda x: np.ones(x.shape[0]))],
    )
    coeffs = fem.CoefficientSet(
        A=A, b=lambda x, t: b_space(x), c=lambda x, t: np.full(x.shape[0], 1.0 + math.sin(t)),
        f=forcing, y0=_xy, y0_grad=_grad_xy, lambda_min=0.5,
        A_time_dependent=True, b_time_dependent=False, c_time_dependent=True,
    )
    return ManufacturedProblem(
        "full", S,
        y=lambda x, t: np.exp(-t) * _xy(x),
        grad_y=lambda x, t: np.exp(-t) * _grad_xy(x),
        coeffs=coeffs,
    )


def torus_heat():
    """y = exp(-t) x1 on the torus (R=1, r=0.4), A = I, f from the oracle."""
    T = torus()

    def x1(x):
        return x[:, 0].copy()

    def grad_x1(x):
        g = np.zeros_like(x)
        g[:, 0] = 1.0
        return g

    forcing = SeparableOracleForcing(
        T, x1, theta=lambda t: math.exp(-t),
        A_terms=[(lambda t: 1.0, fem.identity_tensor)],
    )
    coeffs = fem.CoefficientSet(
        A=fem.identity_tensor, b=None, c=None, f=forcing, y0=x1, y0_grad=grad_x1,
        lambda_min=1.0, A_time_dependent=False,
    )
    return ManufacturedProblem(
        "torus_heat", T,
        y=lambda x, t: math.exp(-t) * x1(x),
        grad_y=lambda x, t: math.exp(-t) * grad_x1(x),
        coeffs=coeffs,
    )


PROBLEMS = {"heat": sphere_heat, "full": sphere_full, "torus_heat": torus_heat}


def get_problem(label, surface_name=None):
    if label not in PROBLEMS:
        raise ValueError(f"unknown problem {label!r}; choose from {sorted(PROBLEMS)}")
    prob = PROBLEMS[label]()
    if surface_name is not None and prob.surface.name != surface_name:
        raise ValueError(f"problem {label!r} lives on {prob.surface.name}, not {surface_name}")
    return prob


# --- error norms --------------------------------------------------------------

SAMPLE_BARY = np.vstack([np.eye(3), fem.MIDPOINT_BARY, [[1 / 3, 1 / 3, 1 / 3]]])


def _sample_lifts(mesh, surface):
    sp = fem.get_space(mesh, surface)
    if not hasattr(sp, "_linf_lifts"):
        pts = np.einsum("qk,fkd->fqd", SAMPLE_BARY, mesh.corners).reshape(-1, 3)
        sp._linf_lifts = surface.closest_point(pts)
    return sp._linf_lifts


def _deg4_lifts(mesh, surface):
    sp = fem.get_space(mesh, surface)
    if not hasattr(sp, "_deg4_lifts"):
        pts = np.einsum("qk,fkd->fqd", fem.DEG4_BARY, mesh.corners).reshape(-1, 3)
        sp._deg4_lifts = surface.closest_point(pts)
        sp._deg4_proj = surface.tangent_projector(sp._deg4_lifts)
    return sp._deg4_lifts, sp._deg4_proj


def _dof(Y):
    return Y.dof if isinstance(Y, fem.P1Function) else np.asarray(Y, dtype=float)


def error_linf(mesh, surface, Y_n, y_exact, t_n):
    """Max of |y_lift - Y| over vertices, side midpoints and barycentres."""
    lifts = _sample_lifts(mesh, surface)
    exact = np.broadcast_to(y_exact(lifts, t_n), (lifts.shape[0],))
    approx = (_dof(Y_n)[mesh.triangles] @ SAMPLE_BARY.T).ravel()
    return float(np.abs(exact - approx).max())


def error_l2(mesh, surface, Y_n, y_exact, t_n):
    lifts, _ = _deg4_lifts(mesh, surface)
    exact = np.broadcast_to(y_exact(lifts, t_n), (lifts.shape[0],)).reshape(mesh.n_triangles, -1)
    approx = _dof(Y_n)[mesh.triangles] @ fem.DEG4_BARY.T
    area = mesh.per_triangle_area
    return float(np.sqrt(np.sum(area * ((exact - approx) ** 2 @ fem.DEG4_WEIGHTS))))


def error_h1(mesh, surface, Y_n, grad_exact, t_n):
    """L2 norm over S_h of the gradient error; ``grad_exact`` is ambient."""
    lifts, Ps = _deg4_lifts(mesh, surface)
    sp = fem.get_space(mesh, surface)
    g = np.einsum("nab,nb->na", Ps, grad_exact(lifts, t_n)).reshape(mesh.n_triangles, -1, 3)
    g = np.einsum("fab,fqb->fqa", sp.tri_projector, g)
    gh = np.einsum("fk,fkj->fj", _dof(Y_n)[mesh.triangles], sp.grad_basis)
    d2 = np.sum((g - gh[:, None, :]) ** 2, axis=2)
    return float(np.sqrt(np.sum(mesh.per_triangle_area * (d2 @ fem.DEG4_WEIGHTS))))


# --- EOC ----------------------------------------------------------------------

def eoc(errors, hs, sentinel=False):
    """Entry k is log(e_k / e_{k+1}) / log(h_k / h_{k+1}).

    With ``sentinel`` set, pairs touching a non-positive error give ``inf``
    instead of raising.
    """
    e = np.asarray(errors, dtype=float)
    h = np.asarray(hs, dtype=float)
    if e.shape != h.shape or e.size < 2:
        raise ValueError("need matching arrays of length >= 2")
    bad = e <= 0.0
    if np.any(bad) and not sentinel:
        raise NonPositiveError(f"non-positive error at positions {np.flatnonzero(bad).tolist()}")
    out = np.full(e.size - 1, np.inf)
    ok = ~(bad[:-1] | bad[1:])
    out[ok] = np.log(e[:-1][ok] / e[1:][ok]) / np.log(h[:-1][ok] / h[1:][ok])
    return out


def fitted_eoc(errors, hs):
    """Least-squares slope of log(error) against log(h)."""
    e = np.asarray(errors, dtype=float)
    if np.any(e <= 0.0):
        raise NonPositiveError("non-positive error in fit")
    return float(np.polyfit(np.log(np.asarray(hs, dtype=float)), np.log(e), 1)[0])


def rho(h):
    """sqrt(|log h|), the discrete Sobolev factor."""
    return math.sqrt(abs(math.log(h)))


# --- reports ------------------------------------------------------------------

@dataclass
class ReportRow:
    level: int
    h: float
    gamma_h: float
    tau: float = float("nan")
    n_steps: Optional[int] = None
    err_linf_max_n: float = float("nan")
    err_l2_final: float = float("nan")
    err_h1_final: float = float("nan")
    eoc_linf: float = float("nan")
    eoc_l2: float = float("nan")
    eoc_h1: float = float("nan")
    rho_ratio: float = float("nan")


CSV_COLUMNS = [f.name for f in fields(ReportRow)]


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    return format(float(v), ".17g")


@dataclass
class ConvergenceReport:
    study: str
    label: str
    rows: list
    parameter: str = "h"  # refinement variable the EOCs are taken against
    metadata: dict = field(default_factory=dict)

    def column(self, name):
        return np.array([getattr(r, name) for r in self.rows], dtype=float)

    def compute_eocs(self):
        x = self.column(self.parameter)
        if len(self.rows) < 2:
            return self
        if np.any(np.diff(x) >= 0):
            raise ValueError(f"{self.parameter} must strictly decrease across rows")
        for src, dst in (("err_linf_max_n", "eoc_linf"), ("err_l2_final", "eoc_l2"),
                         ("err_h1_final", "eoc_h1")):
            e = self.column(src)
            if np.all(np.isnan(e)):
                continue
            rates = eoc(np.nan_to_num(e, nan=0.0), x, sentinel=True)
            for row, r in zip(self.rows[1:], rates):
                setattr(row, dst, float(r))
        return self

    def fitted(self, column):
        return fitted_eoc(self.column(column), self.column(self.parameter))

    def to_csv(self, path=None):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            w.writerow([_fmt(getattr(r, c)) for c in CSV_COLUMNS])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    def to_markdown(self):
        head = "| " + " | ".join(CSV_COLUMNS) + " |"
        sep = "|" + "|".join("---:" for _ in CSV_COLUMNS) + "|"
        lines = [f"**{self.study} / {self.label}**", "", head, sep]
        for r in self.rows:
            cells = []
            for c in CSV_COLUMNS:
                v = getattr(r, c)
                if isinstance(v, (int, np.integer)):
                    cells.append(str(int(v)))
                elif v is None or (isinstance(v, float) and math.isnan(v)):
                    cells.append("")
                else:
                    cells.append(f"{v:.4g}")
            lines.append("| " + " | ".join(cells) + " |")
        if self.metadata:
            lines.append("")
            for k in sorted(self.metadata):
                lines.append(f"- {k}: {self.metadata[k]}")
        return "\n".join(lines) + "\n"


# --- studies ------------------------------------------------------------------

def run_solve(problem, mesh, grid, tol=linalg.DEFAULT_TOL, max_iter=None, hook=None):
    """Solve on one mesh/grid and return (solution, max_n L_inf error, final L2, final H1).

    ``hook(mesh, grid, n, t_n, Y)`` is called after every slab (used for dumps).
    """
    surface = problem.surface
    worst = [0.0]

    def track(n, t_n, Y):
        worst[0] = max(worst[0], error_linf(mesh, surface, Y, problem.y, t_n))
        if hook is not None:
            hook(mesh, grid, n, t_n, Y)

    sol = solve_parabolic(mesh, surface, problem.coeffs, grid, tol, max_iter, on_slab=track)
    T = grid.T
    Yn = sol.slabs[-1]
    return (sol, worst[0], error_l2(mesh, surface, Yn, problem.y, T),
            error_h1(mesh, surface, Yn, problem.grad_y, T))


def spatial_study(problem, levels, kappa=1.0, T=None, tol=linalg.DEFAULT_TOL, max_iter=None,
                  hook=None):
    """Refine mesh and step together with tau = kappa h^2."""
    T = problem.T if T is None else T
    rows = []
    for level in levels:
        mesh = build_mesh(problem.surface, level)
        grid = TimeGrid.from_step(T, kappa * mesh.h**2)
        _, linf, l2, h1 = run_solve(problem, mesh, grid, tol, max_iter, hook)
        rows.append(ReportRow(level, mesh.h, mesh.gamma_h, grid.tau, grid.N, linf, l2, h1,
                              rho_ratio=linf / (rho(mesh.h) * mesh.h)))
        log.info("spatial %s level %d: h=%.4g N=%d linf=%.4e", problem.label, level, mesh.h,
                 grid.N, linf)
    meta = {"grid_rule": f"tau = {kappa} h^2", "T": T, "solver_tol": tol}
    return ConvergenceReport("spatial", problem.label, rows, "h", meta).compute_eocs()


def temporal_study(problem, fixed_level, taus, T=None, tol=linalg.DEFAULT_TOL, max_iter=None,
                   hook=None):
    T = problem.T if T is None else T
    mesh = build_mesh(problem.surface, fixed_level)
    rows = []
    for tau in taus:
        n = int(round(T / tau))
        grid = TimeGrid.uniform(T, n)
        _, linf, l2, h1 = run_solve(problem, mesh, grid, tol, max_iter, hook)
        rows.append(ReportRow(fixed_level, mesh.h, mesh.gamma_h, grid.tau, grid.N, linf, l2, h1,
                              rho_ratio=linf / (rho(mesh.h) * mesh.h)))
        log.info("temporal %s tau=%.4g: linf=%.4e", problem.label, grid.tau, linf)
    meta = {"fixed_level": fixed_level, "T": T, "solver_tol": tol}
    return ConvergenceReport("temporal", problem.label, rows, "tau", meta).compute_eocs()


def projection_study(surface, z, grad_z, levels, A=None, t_n=0.0, tol=linalg.DEFAULT_TOL,
                     label="xy"):
    """Errors of R_h z and R_h^n z (with tensor ``A``, identity if omitted) per level."""
    A = fem.identity_tensor if A is None else A
    rows_r, rows_rn = [], []
    zt = lambda x, t: z(x)  # noqa: E731
    gt = lambda x, t: grad_z(x)  # noqa: E731
    for level in levels:
        mesh = build_mesh(surface, level)
        for rows, proj in (
            (rows_r, fem.ritz_project(mesh, surface, z, grad_z, tol)),
            (rows_rn, fem.ritz_project_n(mesh, surface, A, t_n, z, grad_z, tol)),
        ):
            linf = error_linf(mesh, surface, proj, zt, 0.0)
            rows.append(ReportRow(
                level, mesh.h, mesh.gamma_h,
                err_linf_max_n=linf,
                err_l2_final=error_l2(mesh, surface, proj, zt, 0.0),
                err_h1_final=error_h1(mesh, surface, proj, gt, 0.0),
                rho_ratio=linf / (rho(mesh.h) * mesh.h),
            ))
    meta = {"solver_tol": tol}
    return (ConvergenceReport("projection", f"{label}_ritz", rows_r, "h", meta).compute_eocs(),
            ConvergenceReport("projection", f"{label}_ritz_n", rows_rn, "h", meta).compute_eocs())


def _x3_squared(x):
    return x[:, 2] ** 2


def geometry_study(surface, levels, f=None, exact_integral=None):
    """Per level: midpoint-to-surface distance (L_inf column), area defect (L2 column)
    and integral defect of ``f`` (H1 column)."""
    if f is None:
        f = _x3_squared
        if surface.name == "sphere":
            exact_integral = 4.0 * np.pi / 3.0
    rows = []
    for level in levels:
        mesh = build_mesh(surface, level)
        mids = 0.5 * (mesh.vertices[mesh.edges[:, 0]] + mesh.vertices[mesh.edges[:, 1]])
        dist = float(np.abs(surface.signed_distance(mids)).max())
        area_err = abs(surface.exact_area - surface_area(mesh)) if surface.exact_area else float("nan")
        integ = float(fem.load_vector(mesh, surface, f).sum())
        int_err = abs(exact_integral - integ) if exact_integral is not None else float("nan")
        rows.append(ReportRow(level, mesh.h, mesh.gamma_h, err_linf_max_n=dist,
                              err_l2_final=area_err, err_h1_final=int_err))
    return ConvergenceReport("geometry", surface.name, rows, "h", {}).compute_eocs()


# --- assertions ---------------------------------------------------------------

@dataclass
class Check:
    name: str
    value: float
    lo: Optional[float]
    hi: Optional[float] = None

    @property
    def ok(self):
        if math.isnan(self.value):
            return False
        return (self.lo is None or self.value >= self.lo) and (self.hi is None or self.value <= self.hi)

    def __str__(self):
        rng = f">= {self.lo}" if self.hi is None else f"in [{self.lo}, {self.hi}]"
        return f"{'PASS' if self.ok else 'FAIL'} {self.name} = {self.value:.4f} ({rng})"


SPATIAL_FLOOR = {"heat": 1.0, "full": 0.9, "torus_heat": 0.9}


def check_report(report, min_eoc=None):
    """Rate assertions attached to each study kind."""
    if report.study == "spatial":
        lo = SPATIAL_FLOOR.get(report.label, 1.0) if min_eoc is None else min_eoc
        checks = [Check("fitted L_inf EOC", report.fitted("err_linf_max_n"), lo)]
        ratios = report.column("rho_ratio")
        checks.append(Check("rho ratio growth", float(ratios.max() / ratios[0]), None, 3.0))
        return checks
    if report.study == "temporal":
        lo = 0.5 if min_eoc is None else min_eoc
        return [Check("fitted temporal L_inf EOC", report.fitted("err_linf_max_n"), lo)]
    if report.study == "projection":
        return [Check("fitted L2 EOC", report.fitted("err_l2_final"), 1.8, 2.2),
                Check("fitted H1 EOC", report.fitted("err_h1_final"), 0.8, 1.2),
                Check("fitted L_inf EOC", report.fitted("err_linf_max_n"), 1.0)]
    if report.study == "geometry":
        checks = [Check("midpoint distance EOC", report.fitted("err_linf_max_n"), 1.8, 2.2)]
        if not np.all(np.isnan(report.column("err_l2_final"))):
            checks.append(Check("area defect EOC", report.fitted("err_l2_final"), 1.8, 2.2))
        return checks
    return []
