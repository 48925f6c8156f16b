import numpy as np
import pytest
import sympy as sp

from qavkdv.baselines import avf_step
from qavkdv.errors import ConfigurationError, SolverDivergenceError
from qavkdv.initial import init_soliton, soliton_exact
from qavkdv.integrator import (
    SolverConfig,
    fixed_point_solve,
    qav_eprk_step,
    qav_rk_step_with_q,
    solve_stage_system,
    stage_residual,
    stage_rhs,
)
from qavkdv.model import KdvParams, hamiltonian_h, mass_h, modified_energy_h
from qavkdv.spectral import inner_h, make_grid, norm_h
from qavkdv.tableau import forward_euler, gauss_tableau
from conftest import random_trig

P = KdvParams()


@pytest.fixture(scope="module")
def soliton_grid():
    return make_grid(-40, 40, 512)


def test_solver_config_validation():
    with pytest.raises(ConfigurationError):
        SolverConfig(dt=0.0)
    with pytest.raises(ConfigurationError):
        SolverConfig(dt=0.1, tol=0.0)
    with pytest.raises(ConfigurationError):
        SolverConfig(dt=0.1, max_iter=0)
    cfg = SolverConfig(dt=0.1)
    assert cfg.tol == 1e-14 and cfg.max_iter == 100 and not cfg.eip and not cfg.warm_start


def test_stage_rhs_trivial():
    g = make_grid(0, 2 * np.pi, 16)
    z = np.zeros(16)
    np.testing.assert_array_equal(stage_rhs(z, z, g, P), 0.0)
    np.testing.assert_allclose(stage_rhs(z, np.full(16, 2.5), g, P), 0.0, atol=1e-15)


def test_stage_rhs_symbolic():
    x = sp.symbols("x")
    U, Q = sp.sin(x), sp.sin(x) ** 2
    expr = sp.diff(-Q / 6 - U**2 / 3 - sp.diff(U, x, 2), x)
    f = sp.lambdify(x, expr, "numpy")
    g = make_grid(0, 2 * np.pi, 64)
    xs = g.nodes
    got = stage_rhs(np.sin(xs), np.sin(xs) ** 2, g, KdvParams(1, 1))
    assert np.max(np.abs(got - f(xs))) <= 1e-10


def test_stage_rhs_has_zero_mean(rng):
    g = make_grid(-3, 3, 64)
    for _ in range(10):
        k = stage_rhs(rng.normal(size=64), rng.normal(size=64), g, P)
        assert abs(inner_h(k, np.ones(64), g)) <= 1e-13 * max(1.0, np.abs(k).max())


def test_zero_state_fixed_point():
    g = make_grid(-10, 10, 32)
    stages, diag = fixed_point_solve(np.zeros(32), g, gauss_tableau(2), P, SolverConfig(dt=0.1))
    assert diag.iterations == 1 and diag.converged
    for arr in (stages.U, stages.Q, stages.k, stages.l):
        np.testing.assert_array_equal(arr, 0.0)
    u, _ = qav_eprk_step(np.zeros(32), g, gauss_tableau(2), P, SolverConfig(dt=0.1))
    np.testing.assert_array_equal(u, 0.0)


def _dense_d1_longdouble(g):
    N = g.N
    j = np.arange(N)
    diff = (j[:, None] - j[None, :]).astype(np.longdouble)
    D = np.zeros((N, N), dtype=np.longdouble)
    off = diff != 0
    pi = np.longdouble("3.14159265358979323846264338327950288")
    sign = np.where(np.abs(diff) % 2 == 1, -1, 1).astype(np.longdouble)
    D[off] = 0.5 * sign[off] / np.tan(pi * diff[off] / N)
    return D * (2 * pi / (np.longdouble(g.b) - np.longdouble(g.a)))


def _stage_defect_extended(u_n, k, g, tab, p, dt):
    """Scheme stage equations evaluated with a dense extended-precision D1."""
    D = _dense_d1_longdouble(g)
    ld = np.longdouble
    u_n = u_n.astype(ld)
    k = k.astype(ld)
    A = tab.a.astype(ld)
    U = u_n + ld(dt) * (A @ k)
    Q = u_n * u_n + 2 * ld(dt) * (A @ (U * k))
    worst = 0.0
    for i in range(tab.s):
        inner = -ld(p.eta) / 6 * Q[i] - ld(p.eta) / 3 * U[i] ** 2 - ld(p.mu2) * (D @ (D @ U[i]))
        worst = max(worst, float(np.max(np.abs(k[i] - D @ inner))))
    return worst


def test_soliton_stage_residual(soliton_grid):
    g = soliton_grid
    u = init_soliton(g)
    cfg = SolverConfig(dt=0.01)
    tab = gauss_tableau(2)
    stages, diag = fixed_point_solve(u, g, tab, P, cfg)
    assert diag.converged and diag.iterations <= 100
    assert _stage_defect_extended(u, stages.k, g, tab, P, cfg.dt) <= 1e-12
    # the double-precision evaluation is limited by round-off in D1^3 (theta_max^3 ~ 8e3)
    assert stage_residual(u, stages, g, tab, P, cfg.dt) <= 1e-11
    # stage quantities agree with their definitions
    np.testing.assert_allclose(stages.U, u + cfg.dt * tab.a @ stages.k, atol=1e-15)
    np.testing.assert_allclose(stages.l, 2 * stages.U * stages.k, atol=0)


def test_dispersionless_matches_plain_picard(rng):
    g = make_grid(0, 2 * np.pi, 64)
    p = KdvParams(1.0, 0.0)
    u = np.exp(np.sin(g.nodes))
    tab = gauss_tableau(2)
    dt = 1e-4
    cap = 5
    stages, diag = fixed_point_solve(u, g, tab, p, SolverConfig(dt=dt, max_iter=cap, tol=1e-300))
    assert diag.iterations == cap and not diag.converged
    # explicit Picard on k = D1(-eta/6 Q - eta/3 U^2)
    k = np.zeros((2, 64))
    d1 = g.operator.d1
    for _ in range(cap):
        U = u + dt * tab.a @ k
        Q = u * u + 2 * dt * tab.a @ (U * k)
        k = d1(-Q / 6 - U * U / 3)
    np.testing.assert_allclose(stages.k, k, rtol=0, atol=1e-13 * np.abs(k).max())


def test_linear_stage_solve_against_dense_system(rng):
    g = make_grid(-3, 5, 32)
    D = g.operator.dense_matrix()
    D3 = D @ D @ D
    mu2, dt = 1.3, 0.07
    for s in (1, 2, 3):
        tab = gauss_tableau(s)
        big = np.eye(s * 32) + mu2 * dt * np.kron(tab.a, D3)
        rhs = rng.normal(size=(s, 32))
        direct = np.linalg.solve(big, rhs.reshape(-1)).reshape(s, 32)
        got = solve_stage_system(rhs, g, tab, mu2, dt)
        np.testing.assert_allclose(got, direct, atol=1e-12 * max(1, np.abs(direct).max()))


def test_step_matches_avf_for_one_stage(soliton_grid):
    g = soliton_grid
    u = init_soliton(g)
    cfg = SolverConfig(dt=0.01)
    a, _ = qav_eprk_step(u, g, gauss_tableau(1), P, cfg)
    b, _ = avf_step(u, g, P, cfg)
    assert np.max(np.abs(a - b)) <= 1e-12


def _soliton_error(g, s, dt, T=1.0):
    u = init_soliton(g)
    tab = gauss_tableau(s)
    cfg = SolverConfig(dt=dt)
    for _ in range(int(round(T / dt))):
        u, _ = qav_eprk_step(u, g, tab, P, cfg)
    return norm_h(u - soliton_exact(g.nodes, T, 1.0, 0.0, P), g)


def test_fourth_order_in_time(soliton_grid):
    errs = [_soliton_error(soliton_grid, 2, dt) for dt in (0.1, 0.05, 0.025)]
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(np.abs(orders - 4.0) <= 0.3), orders


def test_qav_rk_with_q_consistent_matches_eprk(soliton_grid, rng):
    g = soliton_grid
    u = init_soliton(g)
    tab = gauss_tableau(2)
    cfg = SolverConfig(dt=0.05)
    u1, q1, _ = qav_rk_step_with_q(u, u * u, g, tab, P, cfg)
    u2, _ = qav_eprk_step(u, g, tab, P, cfg)
    assert np.max(np.abs(u1 - u2)) <= 1e-12
    assert np.max(np.abs((q1 - u1 * u1) - 0.0)) <= 1e-12


def test_qav_rk_with_q_offset_preserved(soliton_grid):
    g = soliton_grid
    u = init_soliton(g)
    u1, q1, _ = qav_rk_step_with_q(u, u * u + 1, g, gauss_tableau(3), P, SolverConfig(dt=0.05))
    assert np.max(np.abs((q1 - u1 * u1) - 1.0)) <= 1e-12


def test_qav_rk_with_q_zero():
    g = make_grid(0, 1, 16)
    u, q, _ = qav_rk_step_with_q(np.zeros(16), np.zeros(16), g, gauss_tableau(2), P, SolverConfig(dt=0.1))
    np.testing.assert_array_equal(u, 0.0)
    np.testing.assert_array_equal(q, 0.0)


def test_conservation_over_run(soliton_grid):
    g = soliton_grid
    u = init_soliton(g)
    H0, M0 = hamiltonian_h(u, g, P), mass_h(u, g)
    tab = gauss_tableau(2)
    cfg = SolverConfig(dt=0.1)
    worst = 0.0
    for _ in range(100):
        m_prev = mass_h(u, g)
        u, diag = qav_eprk_step(u, g, tab, P, cfg)
        assert diag.converged
        assert abs(mass_h(u, g) - m_prev) <= 1e-12 * (1 + abs(m_prev))
        worst = max(worst, abs(hamiltonian_h(u, g, P) - H0) / (1 + abs(H0)))
    assert worst <= 1e-10
    assert abs(mass_h(u, g) - M0) <= 1e-12 * (1 + abs(M0))


def test_modified_energy_and_quadratic_relation_with_inconsistent_q(rng):
    g = make_grid(-20, 20, 128)
    u = init_soliton(g, c=0.5)
    q = u * u + 0.3 * np.cos(2 * np.pi * g.nodes / 40) + 0.2
    E0 = modified_energy_h(u, q, g, P)
    rel0 = q - u * u
    tab = gauss_tableau(2)
    cfg = SolverConfig(dt=0.1)
    for _ in range(20):
        E_prev, r_prev = modified_energy_h(u, q, g, P), q - u * u
        u, q, diag = qav_rk_step_with_q(u, q, g, tab, P, cfg)
        assert diag.converged
        assert abs(modified_energy_h(u, q, g, P) - E_prev) <= 1e-11 * (1 + abs(E0))
        assert np.max(np.abs((q - u * u) - r_prev)) <= 1e-11
    assert np.max(np.abs((q - u * u) - rel0)) <= 1e-11


@pytest.mark.parametrize("s", [1, 2, 3])
def test_symmetry(s, rng):
    g = make_grid(-20, 20, 128)
    u0 = init_soliton(g, c=0.8) + 0.05 * random_trig(g, rng, degree=6)
    tab = gauss_tableau(s)
    u1, _ = qav_eprk_step(u0, g, tab, P, SolverConfig(dt=0.05))
    back, _ = qav_eprk_step(u1, g, tab, P, SolverConfig(dt=-0.05))
    assert np.max(np.abs(back - u0)) <= 1e-10


def test_non_converged_step_is_flagged(soliton_grid):
    u = init_soliton(soliton_grid)
    u1, diag = qav_eprk_step(u, soliton_grid, gauss_tableau(2), P, SolverConfig(dt=0.1, max_iter=2))
    assert diag.iterations == 2 and not diag.converged
    assert np.all(np.isfinite(u1))


def test_divergence_raises():
    g = make_grid(0, 2 * np.pi, 64)
    u = 50 * np.exp(np.sin(g.nodes))
    with np.errstate(all="ignore"), pytest.raises(SolverDivergenceError) as info:
        qav_eprk_step(u, g, gauss_tableau(2), KdvParams(1, 0), SolverConfig(dt=10.0))
    assert info.value.iteration >= 1


def test_rejects_non_symplectic_tableau():
    g = make_grid(0, 1, 8)
    with pytest.raises(ConfigurationError):
        qav_eprk_step(np.zeros(8), g, forward_euler(), P, SolverConfig(dt=0.1))


def test_eip_needs_reference():
    g = make_grid(-40, 40, 64)
    with pytest.raises(ConfigurationError):
        qav_eprk_step(init_soliton(g), g, gauss_tableau(1), P, SolverConfig(dt=0.1, eip=True))


def test_warm_start_reaches_same_solution(soliton_grid):
    g = soliton_grid
    u = init_soliton(g)
    tab = gauss_tableau(2)
    cfg = SolverConfig(dt=0.05)
    u1, d1 = qav_eprk_step(u, g, tab, P, cfg)
    u2a, cold = qav_eprk_step(u1, g, tab, P, cfg)
    u2b, warm = qav_eprk_step(u1, g, tab, P, cfg, k0=d1.stages)
    assert np.max(np.abs(u2a - u2b)) <= 1e-13
    assert warm.iterations < cold.iterations
