import numpy as np
import pytest

from surfheat import fem, linalg
from surfheat.errors import SlabSolveError
from surfheat.fem import CoefficientSet, identity_tensor
from surfheat.timestepping import TimeGrid, dg0_step, forcing_integral, solve_parabolic, \
    variational_residual
from surfheat.verification import sphere_full


def const(v):
    return lambda x, t=None: np.full(x.shape[0], float(v))


def heat_coeffs(y0, f=None, c=None):
    return CoefficientSet(A=identity_tensor, b=None, c=c, f=f, y0=y0,
                          A_time_dependent=False, c_time_dependent=False)


class TestTimeGrid:
    def test_uniform(self):
        g = TimeGrid.uniform(1.0, 4)
        np.testing.assert_allclose(g.t, [0, 0.25, 0.5, 0.75, 1.0])
        assert g.N == 4 and g.T == 1.0 and g.tau == 0.25

    def test_from_step_rounds_up(self):
        assert TimeGrid.from_step(1.0, 0.3).N == 4
        assert TimeGrid.from_step(1.0, 0.1).N == 10
        g = TimeGrid.from_step(1.0, 1.0 / 32)
        assert g.N == 32 and g.tau == pytest.approx(1 / 32)

    @pytest.mark.parametrize("t", [[0.0], [0.1, 0.5], [0.0, 0.5, 0.5], [0.0, 0.6, 0.3]])
    def test_invalid(self, t):
        with pytest.raises(ValueError):
            TimeGrid(t)

    def test_nonuniform_steps(self):
        g = TimeGrid([0.0, 0.1, 0.4, 1.0])
        np.testing.assert_allclose(g.tau_n, [0.1, 0.3, 0.6])
        assert g.tau == pytest.approx(0.6)


class TestStep:
    def test_zero(self, ico):
        M = fem.assemble_mass(ico[1])
        K = fem.assemble_stiffness(ico[1])
        z = np.zeros(M.n_rows)
        x = dg0_step(M, K, None, None, z, z, 0.1).x
        assert not x.any()

    def test_constant_in_kernel(self, ico):
        M = fem.assemble_mass(ico[2])
        K = fem.assemble_stiffness(ico[2])
        y = np.full(M.n_rows, 3.0)
        x = dg0_step(M, K, None, None, y, np.zeros(M.n_rows), 0.5, tol=1e-12).x
        np.testing.assert_allclose(x, 3.0, rtol=1e-10)

    def test_scalar_recurrence(self, unit_sphere, ico):
        kappa, c0, f0, tau = 2.0, 0.7, 1.3, 0.2
        co = heat_coeffs(const(kappa), f=const(f0), c=const(c0))
        sol = solve_parabolic(ico[2], unit_sphere, co, TimeGrid.uniform(1.0, 5), tol=1e-12)
        y = kappa
        for n in range(1, 6):
            y = (y + tau * f0) / (1 + tau * c0)
            np.testing.assert_allclose(sol.slabs[n - 1], y, rtol=1e-10)

    def test_nonpositive_step(self, ico):
        M = fem.assemble_mass(ico[0])
        with pytest.raises(ValueError):
            dg0_step(M, M, None, None, np.zeros(12), np.zeros(12), 0.0)

    def test_slab_failure_is_wrapped(self, unit_sphere, ico):
        co = heat_coeffs(lambda x: x[:, 0] * x[:, 1])
        with pytest.raises(SlabSolveError) as info:
            solve_parabolic(ico[3], unit_sphere, co, TimeGrid.uniform(1.0, 2), tol=1e-14, max_iter=1)
        assert info.value.slab == 1


class TestSolve:
    def test_all_zero(self, unit_sphere, ico):
        co = heat_coeffs(const(0.0), f=const(0.0))
        sol = solve_parabolic(ico[2], unit_sphere, co, TimeGrid.uniform(1.0, 4))
        assert not sol.slabs.any() and len(sol) == 4

    def test_single_step_algebra(self, unit_sphere, ico):
        m = ico[2]
        pr = sphere_full()
        co = pr.coeffs
        T = 0.3
        sol = solve_parabolic(m, unit_sphere, co, TimeGrid.uniform(T, 1), tol=1e-13)
        M = fem.assemble_mass(m).to_dense()
        K = fem.assemble_tilde_stiffness(m, unit_sphere, co.A, T).to_dense()
        B = fem.assemble_advection(m, unit_sphere, co.b, T).to_dense()
        C = fem.assemble_reaction(m, unit_sphere, co.c, T).to_dense()
        rhs = fem.load_vector(m, unit_sphere, co.y0) + forcing_integral(m, unit_sphere, co.f, 0.0, T)
        expect = np.linalg.solve(M + T * (K + B + C), rhs)
        np.testing.assert_allclose(sol.slabs[0], expect, rtol=1e-9, atol=1e-11)

    def test_energy_nonincreasing(self, unit_sphere, ico):
        m = ico[3]
        co = heat_coeffs(lambda x: x[:, 0] * x[:, 1] + x[:, 2])
        sol = solve_parabolic(m, unit_sphere, co, TimeGrid.uniform(1.0, 10), tol=1e-12)
        M = fem.assemble_mass(m)
        energy = [y @ (M @ y) for y in sol.slabs]
        assert all(b <= a * (1 + 1e-12) for a, b in zip(energy, energy[1:]))
        # the x1 x2 part (eigenvalue 6) decays faster than the x3 part (eigenvalue 2)
        assert energy[-1] < energy[0]

    def test_mass_conservation_pure_diffusion(self, unit_sphere, ico):
        m = ico[2]
        co = heat_coeffs(lambda x: 1.0 + x[:, 2])
        sol = solve_parabolic(m, unit_sphere, co, TimeGrid.uniform(1.0, 6), tol=1e-13)
        M = fem.assemble_mass(m)
        total = [np.ones(m.n_vertices) @ (M @ y) for y in sol.slabs]
        np.testing.assert_allclose(total, total[0], rtol=1e-10)

    def test_deterministic(self, unit_sphere, ico):
        co = sphere_full().coeffs
        g = TimeGrid.uniform(1.0, 4)
        a = solve_parabolic(ico[2], unit_sphere, co, g).slabs
        b = solve_parabolic(ico[2], unit_sphere, co, g).slabs
        assert a.tobytes() == b.tobytes()

    def test_hook_called_per_slab(self, unit_sphere, ico):
        seen = []
        co = heat_coeffs(const(1.0))
        solve_parabolic(ico[1], unit_sphere, co, TimeGrid.uniform(1.0, 3),
                        on_slab=lambda n, t, Y: seen.append((n, t)))
        assert seen == [(1, pytest.approx(1 / 3)), (2, pytest.approx(2 / 3)), (3, 1.0)]

    def test_variational_equivalence(self, unit_sphere, ico):
        m = ico[2]
        co = sphere_full().coeffs
        g = TimeGrid([0.0, 0.2, 0.5, 0.6, 1.0])
        sol = solve_parabolic(m, unit_sphere, co, g, tol=1e-13)
        rng = np.random.default_rng(0)
        for _ in range(3):
            phi = rng.normal(size=(g.N, m.n_vertices))
            r, scale = variational_residual(m, unit_sphere, co, sol, phi)
            assert abs(r) <= 1e-9 * scale

    def test_variational_residual_detects_perturbation(self, unit_sphere, ico):
        m = ico[2]
        co = sphere_full().coeffs
        g = TimeGrid.uniform(1.0, 3)
        sol = solve_parabolic(m, unit_sphere, co, g, tol=1e-13)
        bad = type(sol)(m, g, sol.slabs + 1e-3)
        phi = np.ones((g.N, m.n_vertices))
        r, scale = variational_residual(m, unit_sphere, co, bad, phi)
        assert abs(r) > 1e-6 * scale

    def test_static_matrices_cached(self, unit_sphere, ico, monkeypatch):
        calls = []
        orig = fem.assemble_tilde_stiffness

        def counting(*a, **k):
            calls.append(1)
            return orig(*a, **k)

        monkeypatch.setattr(fem, "assemble_tilde_stiffness", counting)
        solve_parabolic(ico[1], unit_sphere, heat_coeffs(const(1.0)), TimeGrid.uniform(1.0, 5))
        assert len(calls) == 1


def test_cg_used_for_symmetric_systems(unit_sphere, ico, monkeypatch):
    used = []
    orig_cg, orig_bi = linalg.cg_solve, linalg.bicgstab_solve
    monkeypatch.setattr(linalg, "cg_solve", lambda *a, **k: used.append("cg") or orig_cg(*a, **k))
    monkeypatch.setattr(linalg, "bicgstab_solve",
                        lambda *a, **k: used.append("bi") or orig_bi(*a, **k))
    solve_parabolic(ico[1], unit_sphere, heat_coeffs(const(1.0)), TimeGrid.uniform(1.0, 2))
    assert used == ["cg", "cg"]
    used.clear()
    solve_parabolic(ico[1], unit_sphere, sphere_full().coeffs, TimeGrid.uniform(1.0, 2))
    assert used == ["bi", "bi"]
