import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from surfheat import fem, linalg
from surfheat.errors import DegenerateTriangle, EllipticityViolation
from surfheat.geometry import plane
from surfheat.mesh import SurfaceMesh, surface_area

UNIT_TRI = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]


def flat_mesh(verts=UNIT_TRI, tris=((0, 1, 2),)):
    return SurfaceMesh(np.asarray(verts, float), np.asarray(tris), plane())


def square_mesh(n=4):
    """Flat n x n grid in the x3 = 0 plane, two triangles per cell."""
    g = np.linspace(0.0, 1.0, n + 1)
    X, Y = np.meshgrid(g, g, indexing="ij")
    verts = np.stack([X.ravel(), Y.ravel(), np.zeros(X.size)], axis=1)
    idx = np.arange((n + 1) ** 2).reshape(n + 1, n + 1)
    tris = []
    for i in range(n):
        for j in range(n):
            a, b, c, d = idx[i, j], idx[i + 1, j], idx[i + 1, j + 1], idx[i, j + 1]
            tris += [(a, b, c), (a, c, d)]
    return flat_mesh(verts, tris)


def random_triangle(rng):
    while True:
        c = rng.normal(size=(3, 3))
        if np.linalg.norm(np.cross(c[1] - c[0], c[2] - c[0])) > 0.2:
            return c


class TestGradient:
    def test_constant(self, ico):
        m = ico[1]
        for k in (0, 7, 33):
            np.testing.assert_allclose(fem.p1_gradient(m, np.full(m.n_vertices, 3.0), k), 0, atol=1e-14)

    def test_linear_on_flat_triangle(self):
        m = flat_mesh([[0, 0, 0], [2, 0, 0], [0, 3, 0]])
        u = 1.0 + 2.0 * m.vertices[:, 0] - 0.5 * m.vertices[:, 1]
        np.testing.assert_allclose(fem.p1_gradient(m, u, 0), [2, -0.5, 0], atol=1e-14)

    def test_directional_derivative_oracle(self):
        # the interpolant restricted to the triangle is affine; differences along
        # any in-plane direction must equal grad . direction
        rng = np.random.default_rng(4)
        for _ in range(20):
            c = random_triangle(rng)
            m = SurfaceMesh(c, [[0, 1, 2]])
            u = rng.normal(size=3)
            g = fem.p1_gradient(m, u, 0)
            n = np.cross(c[1] - c[0], c[2] - c[0])
            assert abs(g @ n) < 1e-12 * np.linalg.norm(n) * max(1.0, np.linalg.norm(g))
            w = rng.dirichlet(np.ones(3))
            d = rng.normal(size=2)
            p = w @ c
            q = p + 1e-3 * (d[0] * (c[1] - c[0]) + d[1] * (c[2] - c[0]))
            # barycentrics of q
            wq = w + 1e-3 * np.array([-d[0] - d[1], d[0], d[1]])
            assert (wq @ u - w @ u) == pytest.approx(g @ (q - p), rel=1e-9, abs=1e-13)

    def test_agrees_with_vectorised(self, ico):
        m = ico[2]
        u = np.sin(m.vertices[:, 0]) + m.vertices[:, 2]
        G = fem.P1Function(m, u).gradients()
        for k in (0, 100, 319):
            np.testing.assert_allclose(G[k], fem.p1_gradient(m, u, k), atol=1e-12)

    def test_degenerate(self):
        m = SurfaceMesh([[0, 0, 0], [1, 0, 0], [2, 0, 0]], [[0, 1, 2]])
        with pytest.raises(DegenerateTriangle):
            fem.p1_gradient(m, np.zeros(3), 0)


class TestMass:
    def test_reference_block(self):
        M = fem.assemble_mass(flat_mesh()).to_dense()
        np.testing.assert_allclose(M, (np.ones((3, 3)) + np.eye(3)) / 24.0, rtol=1e-15)

    def test_against_deg4(self):
        rng = np.random.default_rng(0)
        c = random_triangle(rng)
        m = SurfaceMesh(c, [[0, 1, 2]])
        M = fem.assemble_mass(m).to_dense()
        for i in range(3):
            for j in range(3):
                def prod(p, i=i, j=j):
                    lam = np.linalg.lstsq(np.vstack([c.T, np.ones(3)]),
                                          np.vstack([p[0].T, np.ones(p.shape[1])]), rcond=None)[0]
                    return (lam[i] * lam[j])[None]
                assert M[i, j] == pytest.approx(fem.deg4_integrate(c[None], prod)[0], rel=1e-12)

    def test_total_mass_is_area(self, ico):
        for k in (1, 3):
            M = fem.assemble_mass(ico[k])
            one = np.ones(M.n_rows)
            assert one @ (M @ one) == pytest.approx(surface_area(ico[k]), rel=1e-13)

    def test_row_sums(self, ico):
        m = ico[2]
        M = fem.assemble_mass(m)
        sp = fem.get_space(m)
        lumped = np.bincount(m.triangles.ravel(), np.repeat(sp.area / 3, 3), m.n_vertices)
        np.testing.assert_allclose(M @ np.ones(m.n_vertices), lumped, rtol=1e-13)

    def test_spd(self, ico):
        M = fem.assemble_mass(ico[1]).to_dense()
        np.testing.assert_array_equal(M, M.T)
        assert np.linalg.eigvalsh(M).min() > 0


class TestStiffness:
    def test_reference_block(self):
        K = fem.assemble_stiffness(flat_mesh()).to_dense()
        expect = 0.5 * np.array([[2, -1, -1], [-1, 1, 0], [-1, 0, 1]])
        np.testing.assert_allclose(K, expect, atol=1e-15)

    def test_identity_tensor_reproduces_K(self, unit_sphere, ico):
        m = ico[2]
        K = fem.assemble_stiffness(m, unit_sphere).to_dense()
        Kt = fem.assemble_tilde_stiffness(m, unit_sphere, fem.identity_tensor, 0.0).to_dense()
        np.testing.assert_allclose(Kt, K, atol=1e-14)

    def test_quadratic_tensor_against_deg4(self):
        rng = np.random.default_rng(5)
        S = rng.normal(size=(3, 3, 3))

        def A(x, t=None):
            q = 2.0 + 0.3 * x[:, 0] ** 2 - 0.2 * x[:, 0] * x[:, 1] + 0.1 * x[:, 1]
            B = np.einsum("n,ij->nij", q, np.eye(3))
            return B + 0.05 * np.einsum("nk,kij->nij", x, S + S.transpose(0, 2, 1))

        m = flat_mesh([[0.1, 0.2, 0], [1.3, -0.1, 0], [0.4, 0.9, 0]])
        Kt = fem.assemble_tilde_stiffness(m, m.surface, A, 0.0).to_dense()
        G = fem.get_space(m).grad_basis[0]
        c = m.corners
        for i in range(3):
            for j in range(3):
                val = fem.deg4_integrate(
                    c, lambda p: np.einsum("a,nab,b->n", G[i], A(p[0]), G[j])[None])[0]
                assert Kt[i, j] == pytest.approx(val, rel=1e-12, abs=1e-14)

    def test_symmetric_psd_kernel_constants(self, unit_sphere, ico):
        from surfheat.verification import sphere_full
        A = sphere_full().coeffs.A
        Kt = fem.assemble_tilde_stiffness(ico[2], unit_sphere, A, 0.3).to_dense()
        np.testing.assert_allclose(Kt, Kt.T, atol=1e-15)
        ev = np.linalg.eigvalsh(Kt)
        assert ev.min() > -1e-12
        assert np.sum(ev < 1e-10) == 1
        np.testing.assert_allclose(Kt @ np.ones(len(Kt)), 0, atol=1e-12)

    def test_ellipticity_violation(self, unit_sphere, ico):
        neg = lambda x, t: -np.broadcast_to(np.eye(3), (x.shape[0], 3, 3))  # noqa: E731
        with pytest.raises(EllipticityViolation):
            fem.assemble_tilde_stiffness(ico[1], unit_sphere, neg, 0.0)

    def test_normal_only_tensor_rejected(self, unit_sphere, ico):
        # A = nu nu^T vanishes on tangent vectors
        nn = lambda x, t: np.einsum("ni,nj->nij", x, x)  # noqa: E731
        with pytest.raises(EllipticityViolation):
            fem.assemble_tilde_stiffness(ico[1], unit_sphere, nn, 0.0)

    def test_quadrature_form_matches_matrix(self, unit_sphere, ico):
        m = ico[2]
        rng = np.random.default_rng(1)
        u, v = rng.normal(size=(2, m.n_vertices))
        A = fem.identity_tensor
        Kt = fem.assemble_tilde_stiffness(m, unit_sphere, A, 0.0)
        assert fem.quadrature_form(m, unit_sphere, A, 0.0, u, v) == pytest.approx(v @ (Kt @ u), rel=1e-12)


class TestAdvection:
    def test_zero_field(self, unit_sphere, ico):
        B = fem.assemble_advection(ico[1], unit_sphere, lambda x, t: np.zeros_like(x), 0.0)
        assert not B.to_dense().any()

    def test_constants_in_kernel(self, unit_sphere, ico):
        b = lambda x, t: np.cross([0.0, 0.0, 1.0], x)  # noqa: E731
        B = fem.assemble_advection(ico[2], unit_sphere, b, 0.0)
        np.testing.assert_allclose(B @ np.ones(ico[2].n_vertices), 0, atol=1e-14)

    def test_flat_constant_field_exact(self):
        m = square_mesh(3)
        bvec = np.array([0.7, -0.4, 0.0])
        B = fem.assemble_advection(m, m.surface, lambda x, t: np.tile(bvec, (len(x), 1)), 0.0)
        sp = fem.get_space(m)
        # exact: int phi_i (b . grad phi_j) = (b . grad phi_j) |T| / 3 per triangle
        local = np.einsum("a,fja->fj", bvec, sp.grad_basis)[:, None, :] * (sp.area / 3)[:, None, None]
        local = np.broadcast_to(local, (m.n_triangles, 3, 3))
        np.testing.assert_allclose(B.to_dense(), sp.scatter(local).to_dense(), atol=1e-15)

    def test_normal_component_removed(self, unit_sphere, ico):
        B = fem.assemble_advection(ico[1], unit_sphere, lambda x, t: 5.0 * x, 0.0)
        assert np.abs(B.to_dense()).max() < 1e-14


class TestReaction:
    def test_unit_equals_mass(self, unit_sphere, ico):
        C = fem.assemble_reaction(ico[2], unit_sphere, lambda x, t: np.ones(len(x)), 0.0)
        np.testing.assert_allclose(C.to_dense(), fem.assemble_mass(ico[2]).to_dense(), atol=1e-16)

    def test_zero(self, unit_sphere, ico):
        C = fem.assemble_reaction(ico[1], unit_sphere, lambda x, t: np.zeros(len(x)), 0.0)
        assert not C.to_dense().any()

    def test_linear_coefficient_discrepancy_scaling(self):
        # cubic integrands are not integrated exactly; the error shrinks like s^3
        c = lambda x, t=None: 1.0 + x[:, 0]  # noqa: E731
        base = np.array([[0.0, 0, 0], [1.0, 0.2, 0], [0.3, 0.8, 0]])
        errs = []
        for s in (1.0, 0.5, 0.25):
            m = flat_mesh(s * base)
            C = fem.assemble_reaction(m, m.surface, c, 0.0).to_dense()
            cc = m.corners
            lam_of = lambda p: np.linalg.solve(  # noqa: E731
                np.vstack([cc[0].T[:2], np.ones(3)]), np.vstack([p[0].T[:2], np.ones(p.shape[1])]))
            ref = np.array([[fem.deg4_integrate(cc, lambda p: (c(p[0]) * lam_of(p)[i] * lam_of(p)[j])[None])[0]
                             for j in range(3)] for i in range(3)])
            errs.append(np.abs(C - ref).max())
        assert errs[0] > 1e-6
        np.testing.assert_allclose(errs[0] / errs[1], 8.0, rtol=1e-6)
        np.testing.assert_allclose(errs[1] / errs[2], 8.0, rtol=1e-6)


class TestLoadAndProjections:
    def test_load_of_one_is_row_sum(self, unit_sphere, ico):
        m = ico[2]
        F = fem.load_vector(m, unit_sphere, lambda x: np.ones(len(x)))
        np.testing.assert_allclose(F, fem.assemble_mass(m) @ np.ones(m.n_vertices), rtol=1e-14)

    def test_load_odd_function_sums_to_zero(self, unit_sphere, ico):
        F = fem.load_vector(ico[3], unit_sphere, lambda x: x[:, 0])
        assert abs(F.sum()) < 1e-13
        assert np.abs(F).max() > 1e-4

    def test_load_time_argument(self, unit_sphere, ico):
        F = fem.load_vector(ico[1], unit_sphere, lambda x, t: t * np.ones(len(x)), t=2.0)
        G = fem.load_vector(ico[1], unit_sphere, lambda x: np.ones(len(x)))
        np.testing.assert_allclose(F, 2 * G, rtol=1e-15)

    def test_interpolate(self, unit_sphere, ico):
        m = ico[2]
        f = fem.interpolate(m, unit_sphere, lambda x: x[:, 0] * x[:, 1])
        np.testing.assert_array_equal(f.dof, m.vertices[:, 0] * m.vertices[:, 1])
        # value at the midpoint of a side is the average of its ends
        vals = f.at_barycentric(fem.MIDPOINT_BARY)
        np.testing.assert_allclose(vals[:, 0], 0.5 * (f.dof[m.triangles[:, 0]] + f.dof[m.triangles[:, 1]]))

    def test_l2_project_constant(self, unit_sphere, ico):
        p = fem.l2_project(ico[2], unit_sphere, lambda x: np.full(len(x), 2.5))
        np.testing.assert_allclose(p.dof, 2.5, rtol=1e-9)

    def test_l2_project_normal_equations(self, unit_sphere, ico):
        m = ico[2]
        z = lambda x: np.exp(x[:, 2])  # noqa: E731
        p = fem.l2_project(m, unit_sphere, z, tol=1e-12)
        r = fem.assemble_mass(m) @ p.dof - fem.load_vector(m, unit_sphere, z)
        assert np.linalg.norm(r) <= 1e-11 * np.linalg.norm(fem.load_vector(m, unit_sphere, z))

    def test_ritz_of_constant(self, unit_sphere, ico):
        z = lambda x: np.full(len(x), -1.5)  # noqa: E731
        gz = lambda x: np.zeros_like(x)  # noqa: E731
        np.testing.assert_allclose(fem.ritz_project(ico[2], unit_sphere, z, gz).dof, -1.5, rtol=1e-9)
        A = fem.identity_tensor
        np.testing.assert_allclose(fem.ritz_project_n(ico[2], unit_sphere, A, 0.0, z, gz).dof,
                                   -1.5, rtol=1e-9)

    def test_ritz_n_identity_equals_ritz(self, unit_sphere, ico):
        from surfheat.verification import _grad_xy, _xy
        a = fem.ritz_project(ico[2], unit_sphere, _xy, _grad_xy, tol=1e-12).dof
        b = fem.ritz_project_n(ico[2], unit_sphere, fem.identity_tensor, 0.0, _xy, _grad_xy,
                               tol=1e-12).dof
        np.testing.assert_allclose(a, b, atol=1e-10)

    def test_galerkin_orthogonality(self, unit_sphere, ico):
        from surfheat.verification import _grad_xy, _xy, sphere_full
        m = ico[3]
        A = sphere_full().coeffs.A
        R = fem.ritz_project_n(m, unit_sphere, A, 0.5, _xy, _grad_xy, tol=1e-12)
        system = linalg.combine([(1.0, fem.assemble_tilde_stiffness(m, unit_sphere, A, 0.5)),
                                 (1.0, fem.assemble_mass(m, unit_sphere))])
        rhs = fem.ritz_rhs(m, unit_sphere, _xy, _grad_xy, A, 0.5)
        defect = system @ R.dof - rhs
        idx = np.random.default_rng(0).choice(m.n_vertices, 20, replace=False)
        assert np.abs(defect[idx]).max() <= 1e-10 * np.linalg.norm(rhs)

    def test_green_of_constant_and_symmetry(self, unit_sphere, ico):
        m = ico[2]
        g = fem.discrete_green(m, unit_sphere, lambda x: np.ones(len(x)))
        np.testing.assert_allclose(g.dof, 1.0, rtol=1e-9)
        # (G_h u, v)_h = (u, G_h v)_h for P1 data through the mass matrix
        M = fem.assemble_mass(m)
        S = linalg.combine([(1.0, fem.assemble_stiffness(m)), (1.0, M)]).to_dense()
        Gmat = np.linalg.solve(S, M.to_dense())
        H = M.to_dense() @ Gmat
        np.testing.assert_allclose(H, H.T, atol=1e-13)


class TestQuadrature:
    @settings(max_examples=60, deadline=None)
    @given(arrays(float, 10, elements=st.floats(-5, 5)), st.integers(0, 2**31 - 1))
    def test_midpoint_exact_on_quadratics(self, coef, seed):
        c = random_triangle(np.random.default_rng(seed))

        def q(p):
            x, y, z = p[..., 0], p[..., 1], p[..., 2]
            terms = [np.ones_like(x), x, y, z, x * x, y * y, z * z, x * y, y * z, x * z]
            return sum(a * t for a, t in zip(coef, terms))

        mid = fem.midpoint_integrate(c[None], q)[0]
        ref = fem.deg4_integrate(c[None], q)[0]
        scale = np.abs(coef).sum() * 10 + 1
        assert mid == pytest.approx(ref, abs=1e-12 * scale)

    def test_midpoint_not_exact_on_cubic(self):
        c = np.array(UNIT_TRI)[None]
        cube = lambda p: p[..., 0] ** 3  # noqa: E731
        assert abs(fem.midpoint_integrate(c, cube)[0] - 1.0 / 20.0) > 1e-3
        assert fem.deg4_integrate(c, cube)[0] == pytest.approx(1.0 / 20.0, rel=1e-12)
