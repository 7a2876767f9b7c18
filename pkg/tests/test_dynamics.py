"""Reduced flows, reconstruction, extremals, closed forms, quadrature."""

import numpy as np
import numpy.testing as npt
import pytest
from scipy.integrate import solve_ivp

from lsb_lab import (
    AlgebraElement,
    ConnectionCoefficients,
    DivergenceError,
    DomainError,
    GroupId,
    IntegratorConfig,
    PoleError,
    SymmetricSolutionParams,
    Trajectory,
    closed_form_symmetric,
    closed_loop_rhs,
    euler_poincare_rhs,
    exp_map,
    feedback_solve,
    group_identity,
    group_manifold,
    inertia_diagonal,
    integrate_euler_poincare,
    integrate_extremal,
    integrate_riccati,
    moebius_line,
    objective_value,
    quadrature,
    reconstruct_group,
)

B_ONE = ConnectionCoefficients.maurer_cartan()


def test_integrator_config_validation():
    cfg = IntegratorConfig("rk4", 0.25, 1.0)
    assert cfg.n_steps == 4
    npt.assert_allclose(cfg.times(), [0.0, 0.25, 0.5, 0.75, 1.0])
    with pytest.raises(DomainError):
        IntegratorConfig("rk5", 0.1, 1.0)
    with pytest.raises(DomainError):
        IntegratorConfig("rk4", -0.1, 1.0)
    with pytest.raises(DomainError):
        IntegratorConfig("rk4", 2.0, 1.0)
    with pytest.raises(DomainError):
        IntegratorConfig("rk4", 0.3, 1.0)  # horizon not a step multiple


def test_trajectory_grid_validation():
    times = np.array([0.0, 0.1, 0.2])
    tr = Trajectory(group=GroupId.SO3, times=times, xi=np.zeros((3, 3)))
    assert tr.step == pytest.approx(0.1)
    with pytest.raises(DomainError):
        Trajectory(group=GroupId.SO3, times=np.array([0.0, 0.1, 0.35]),
                   xi=np.zeros((3, 3)))
    with pytest.raises(DomainError):
        Trajectory(group=GroupId.SO3, times=times, xi=np.zeros((4, 3)))


def test_reduced_flow_matches_classical_equations():
    """The so3 reduced flow is the classical free-spin system; compare the
    terminal state against an adaptive reference solver."""
    I1, I2, I3 = 1.0, 2.0, 3.0

    def classical(t, w):
        return [(I2 - I3) / I1 * w[1] * w[2],
                (I3 - I1) / I2 * w[2] * w[0],
                (I1 - I2) / I3 * w[0] * w[1]]

    ref = solve_ivp(classical, (0.0, 1.0), [0.8, 0.3, 0.1],
                    rtol=1e-12, atol=1e-14, t_eval=[1.0])
    J = inertia_diagonal(GroupId.SO3, I1, I2, I3)
    tr = integrate_euler_poincare(
        GroupId.SO3, J, AlgebraElement(GroupId.SO3, [0.8, 0.3, 0.1]),
        IntegratorConfig("rk4", 1e-3, 1.0))
    assert np.abs(tr.xi[-1] - ref.y[:, 0]).max() < 1e-12


def test_principal_axis_spin_is_stationary():
    J = inertia_diagonal(GroupId.SO3, 1.0, 2.0, 3.0)
    xi0 = AlgebraElement(GroupId.SO3, [0.0, 0.0, 0.9])
    npt.assert_array_equal(euler_poincare_rhs(GroupId.SO3, J, xi0).coeffs,
                           np.zeros(3))
    tr = integrate_euler_poincare(GroupId.SO3, J, xi0,
                                  IntegratorConfig("rk4", 1e-2, 1.0))
    assert np.all(tr.xi == tr.xi[0])


def test_reconstruction_constant_control_exact():
    xi = AlgebraElement(GroupId.SO3, [0.4, -0.2, 0.7])
    cfg = IntegratorConfig("rk4", 0.05, 1.0)
    n = cfg.n_steps + 1
    flat = Trajectory(group=GroupId.SO3, times=cfg.times(),
                      xi=np.tile(xi.coeffs, (n, 1)))
    g_body = reconstruct_group(GroupId.SO3, flat, group_identity(GroupId.SO3))
    g_spatial = reconstruct_group(GroupId.SO3, flat,
                                  group_identity(GroupId.SO3),
                                  convention="spatial")
    exact = exp_map(AlgebraElement(GroupId.SO3, 1.0 * xi.coeffs)).matrix
    npt.assert_allclose(g_body.g[-1], exact, atol=1e-13)
    # both conventions agree from the identity with frozen control
    npt.assert_allclose(g_spatial.g[-1], exact, atol=1e-13)


def test_reconstruction_preserves_constraint_long_run():
    from lsb_lab import GroupElement, constraint_residual
    J = inertia_diagonal(GroupId.SO3, 1.0, 2.0, 3.0)
    cfg = IntegratorConfig("rk4", 1e-2, 10.0)
    ep = integrate_euler_poincare(
        GroupId.SO3, J, AlgebraElement(GroupId.SO3, [0.8, 0.3, 0.1]), cfg)
    rec = reconstruct_group(GroupId.SO3, ep, group_identity(GroupId.SO3))
    worst = max(constraint_residual(GroupElement(GroupId.SO3, g))
                for g in rec.g[::50])
    assert worst < 1e-12


def test_reconstruction_input_checks():
    times = np.array([0.0, 0.1, 0.2])
    bare = Trajectory(group=GroupId.SO3, times=times, xi=np.zeros((3, 3)))
    with pytest.raises(DomainError):
        reconstruct_group(GroupId.SO3, bare, group_identity(GroupId.SO3),
                          convention="sideways")
    with pytest.raises(DomainError):
        reconstruct_group(GroupId.SO3, bare, group_identity(GroupId.SO3),
                          cfg=IntegratorConfig("rk4", 0.05, 0.2))
    no_xi = Trajectory(group=GroupId.SO3, times=times)
    with pytest.raises(DomainError):
        reconstruct_group(GroupId.SO3, no_xi, group_identity(GroupId.SO3))


def test_manifold_lift_constant_control():
    """With frozen control the linear lift is the exponential curve."""
    xi = AlgebraElement(GroupId.SO3, [0.3, -0.5, 0.4])
    cfg = IntegratorConfig("rk4", 1e-3, 1.0)
    n = cfg.n_steps + 1
    flat = Trajectory(group=GroupId.SO3, times=cfg.times(),
                      xi=np.tile(xi.coeffs, (n, 1)))
    x0 = exp_map(AlgebraElement(GroupId.SO3, [0.1, 0.2, -0.3]))
    p0 = np.zeros((3, 3))
    ext = integrate_extremal(group_manifold(GroupId.SO3), B_ONE,
                             inertia_diagonal(GroupId.SO3, 1.0, 2.0, 3.0),
                             x0, p0, cfg, xi_traj=flat)
    exact = x0.matrix @ exp_map(xi).matrix
    npt.assert_allclose(ext.x[-1], exact, atol=1e-12)
    npt.assert_array_equal(ext.p, np.zeros_like(ext.p))


def test_manifold_lift_requires_control():
    cfg = IntegratorConfig("rk4", 0.1, 1.0)
    J = inertia_diagonal(GroupId.SO3, 1.0, 2.0, 3.0)
    with pytest.raises(DomainError):
        integrate_extremal(group_manifold(GroupId.SO3), B_ONE, J,
                           group_identity(GroupId.SO3), np.zeros((3, 3)), cfg)


def test_line_extremal_conserves_slot_momentum():
    """The closed loop on the line keeps p (1 + x^2) constant for the
    equal-transverse-coefficient cost; drift stays at integrator roundoff."""
    ext = integrate_extremal(moebius_line(GroupId.SL2R), B_ONE,
                             (1.0, 1.0, 2.0), 0.5, -1.0,
                             IntegratorConfig("rk4", 1e-3, 1.0))
    mom = ext.p * (1.0 + ext.x ** 2)
    assert mom[0] == pytest.approx(-1.25, abs=1e-15)
    assert np.abs(mom - mom[0]).max() < 1e-11


def test_line_extremal_stores_feedback_and_rhs():
    ext = integrate_extremal(moebius_line(GroupId.SL2R), B_ONE,
                             (1.0, 1.0, 2.0), 0.5, -1.0,
                             IntegratorConfig("rk4", 1e-2, 0.2))
    for k in (0, 7, 20):
        xi = feedback_solve(GroupId.SL2R, B_ONE, (1.0, 1.0, 2.0),
                            ext.x[k], ext.p[k])
        npt.assert_array_equal(ext.xi[k], xi.coeffs)
        xd, pd = closed_loop_rhs(GroupId.SL2R, B_ONE, (1.0, 1.0, 2.0),
                                 ext.x[k], ext.p[k])
        assert ext.xdot[k] == xd and ext.pdot[k] == pd


def test_line_extremal_divergence_reported():
    with pytest.raises(DivergenceError) as info:
        integrate_extremal(moebius_line(GroupId.SL2R), B_ONE,
                           (1.0, 1.0, 2.0), 0.5, 1.0,
                           IntegratorConfig("euler", 1e-3, 1.0))
    err = info.value
    assert err.escape_time == pytest.approx(0.9682780395712847, rel=1e-9)
    assert err.last_index == 963
    assert "0.968" in str(err)


def test_driven_line_flow_exact_solution():
    # frozen control with quadratic coefficient one: x(t) = x0 / (1 - x0 t)
    cfg = IntegratorConfig("rk4", 1e-3, 0.5)
    n = cfg.n_steps + 1
    xi = np.tile([0.0, -1.0, 0.0], (n, 1))
    tr = integrate_riccati(GroupId.SL2R, B_ONE, xi, 1.0, cfg)
    exact = 1.0 / (1.0 - cfg.times())
    assert np.abs(tr.x - exact).max() < 1e-10


def test_driven_line_flow_escapes_past_pole():
    cfg = IntegratorConfig("rk4", 1e-3, 1.5)
    n = cfg.n_steps + 1
    xi = np.tile([0.0, 1.0, 0.0], (n, 1))  # field -x^2, pole of x(t) at t = 1
    with pytest.raises(DivergenceError) as info:
        integrate_riccati(GroupId.SL2R, B_ONE, xi, -1.0, cfg)
    assert info.value.escape_time == pytest.approx(1.001, abs=1e-6)
    assert info.value.last_index == 1000


def test_driven_line_flow_grid_checked():
    cfg = IntegratorConfig("rk4", 1e-2, 0.5)
    with pytest.raises(DomainError):
        integrate_riccati(GroupId.SL2R, B_ONE, np.zeros((7, 3)), 1.0, cfg)
    carrier = Trajectory(group=GroupId.SL2R,
                         times=np.arange(6) * 0.1,
                         xi=np.zeros((6, 3)))
    with pytest.raises(DomainError):
        integrate_riccati(GroupId.SL2R, B_ONE, carrier, 1.0, cfg)


def test_feedback_solve_pinned_values():
    xi = feedback_solve(GroupId.SL2R, B_ONE, (1.0, 1.0, 2.0), 0.5, -1.0)
    npt.assert_allclose(xi.coeffs, [-1.0, 0.25, -0.5], rtol=1e-15)
    with pytest.raises(DomainError):
        feedback_solve(GroupId.SL2R, B_ONE, (1.0, 1.0, 2.0), 0.5 + 0.1j, 1.0)


def test_feedback_matches_stationarity_relations():
    # xi_+ = B+ p / I+, xi_- = -B- p x^2 / I-, xi_0 = 2 B0 p x / I0
    rng = np.random.default_rng(43)
    bp, bm, b0 = 1.1, 0.7, 1.3
    B = ConnectionCoefficients(np.array([bp, bm, b0]))
    for _ in range(10):
        x, p = rng.uniform(-2, 2), rng.uniform(-2, 2)
        ip, im, i0 = rng.uniform(0.5, 3.0, 3)
        xi = feedback_solve(GroupId.SL2R, B, (ip, im, i0), x, p)
        npt.assert_allclose(
            xi.coeffs,
            [bp * p / ip, -bm * p * x * x / im, 2.0 * b0 * p * x / i0],
            rtol=1e-13)


def test_closed_loop_rhs_is_the_substituted_field():
    rng = np.random.default_rng(47)
    from lsb_lab import riccati_coefficients
    for _ in range(10):
        x, p = rng.uniform(-2, 2), rng.uniform(-2, 2)
        xi = feedback_solve(GroupId.SL2R, B_ONE, (1.0, 2.0, 1.5), x, p)
        a, b, c = riccati_coefficients(GroupId.SL2R, xi, B_ONE)
        xd, pd = closed_loop_rhs(GroupId.SL2R, B_ONE, (1.0, 2.0, 1.5), x, p)
        assert xd == pytest.approx(a * x * x + b * x + c, rel=1e-14)
        assert pd == pytest.approx(-(2.0 * a * x + b) * p, rel=1e-14)


def test_symmetric_params_derived_quantities():
    pars = SymmetricSolutionParams(I=1.0, I0=2.0, xi0=0.5, xi_plus0=1.0)
    assert pars.alpha == pytest.approx(1.0)
    assert pars.C0 == pytest.approx(0.5)
    assert pars.C_plus == pytest.approx(0.5)
    assert pars.C_minus == 0.0
    with pytest.raises(DomainError):
        SymmetricSolutionParams(I=0.0, I0=2.0)
    with pytest.raises(DomainError):
        SymmetricSolutionParams(I=1.0, I0=2.0, B_zero=0.0)


def test_closed_form_formulas_as_written():
    t = np.linspace(0.0, 1.0, 11)
    pars = SymmetricSolutionParams(I=1.0, I0=2.0, xi0=0.5, xi_plus0=1.0)
    x, p = closed_form_symmetric(GroupId.SL2R, pars, t)
    npt.assert_allclose(x, 0.5 * np.exp(-t), rtol=1e-15)
    npt.assert_allclose(p, np.exp(t), rtol=1e-15)
    assert x.dtype == np.float64  # real data stays real

    pars = SymmetricSolutionParams(I=1.0, I0=2.0, xi0=0.5,
                                   xi_plus0=1.0, xi_minus0=2.0)
    x, p = closed_form_symmetric(GroupId.SU2, pars, 0.3)
    up, dn = np.exp(0.3), np.exp(-0.3)
    assert x == pytest.approx(0.5 / (1.0 * dn + 0.5j * up))
    assert p == pytest.approx(0.5 * up - 1j * dn)

    x, p = closed_form_symmetric(GroupId.SO21, pars, 0.3)
    assert x == pytest.approx(0.5 * up / (1.0 * dn - 0.5j))
    assert p == pytest.approx(-1j * dn - 0.5)

    with pytest.raises(DomainError):
        closed_form_symmetric(GroupId.SO3, pars, 0.0)


def test_closed_form_pole_detection():
    # denominator root placed at t = 0.25 by choice of the minus coefficient
    pars = SymmetricSolutionParams(I=1.0, I0=2.0, xi0=0.5, xi_plus0=1.0,
                                   xi_minus0=-1j * np.exp(0.5))
    with pytest.raises(PoleError) as info:
        closed_form_symmetric(GroupId.SU2, pars, np.linspace(0.0, 1.0, 401))
    assert info.value.location == pytest.approx(0.25, abs=1e-12)
    degenerate = SymmetricSolutionParams(I=1.0, I0=2.0, xi0=0.5)
    with pytest.raises(PoleError):
        closed_form_symmetric(GroupId.SL2R, degenerate, 0.0)


@pytest.mark.xfail(strict=True, reason=(
    "closed_form_symmetric evaluates the formulas as written, and those do "
    "not solve the feedback-substituted loop: the loop forces sign(xdot) = "
    "sign(p) while the formulas decay with p > 0; measured sup gap is O(1)"))
def test_line_extremal_matches_closed_form():
    cfg = IntegratorConfig("rk4", 1e-3, 1.0)
    ext = integrate_extremal(moebius_line(GroupId.SL2R), B_ONE,
                             (1.0, 1.0, 2.0), 0.5, -1.0, cfg)
    xi0 = feedback_solve(GroupId.SL2R, B_ONE, (1.0, 1.0, 2.0), 0.5, -1.0)
    pars = SymmetricSolutionParams(I=1.0, I0=2.0,
                                   xi0=float(np.real(xi0.coeffs[2])),
                                   xi_plus0=complex(xi0.coeffs[0]).real,
                                   xi_minus0=complex(xi0.coeffs[1]).real)
    x_form, p_form = closed_form_symmetric(GroupId.SL2R, pars, cfg.times())
    assert np.abs(ext.x - x_form).max() <= 1e-7
    assert np.abs(ext.p - p_form).max() <= 1e-7


@pytest.mark.xfail(strict=True, reason=(
    "the formula curves do not satisfy the substituted field: their time "
    "derivative disagrees with closed_loop_rhs by O(1) wherever p != 0"))
def test_closed_form_satisfies_substituted_field():
    pars = SymmetricSolutionParams(I=1.0, I0=2.0, xi0=0.5, xi_plus0=1.0)
    t = np.linspace(0.0, 1.0, 101)
    x, p = closed_form_symmetric(GroupId.SL2R, pars, t)
    al = pars.alpha
    worst = 0.0
    for k in range(t.size):
        xd, pd = closed_loop_rhs(GroupId.SL2R, pars.connection(),
                                 (pars.I, pars.I, pars.I0), x[k], p[k])
        worst = max(worst, abs(-al * x[k] - xd), abs(al * p[k] - pd))
    assert worst <= 1e-9


def test_quadrature_exact_on_cubics():
    for n in (8, 9, 3):  # even, odd with tail rule, bare tail rule
        t = np.linspace(0.0, 1.0, n + 1)
        vals = t ** 3 - 2.0 * t + 1.0
        assert quadrature(t, vals) == pytest.approx(0.25 - 1.0 + 1.0,
                                                    abs=1e-14)
    with pytest.raises(DomainError):
        quadrature(np.array([0.0, 1.0]), np.array([1.0, 1.0]))


def test_quadrature_fourth_order():
    def err(n):
        t = np.linspace(0.0, 1.0, n + 1)
        return abs(quadrature(t, t ** 6) - 1.0 / 7.0)

    assert err(16) / err(32) > 12.0


def test_objective_value_constant_control():
    J = inertia_diagonal(GroupId.SO3, 1.0, 2.0, 3.0)
    cfg = IntegratorConfig("rk4", 0.1, 2.0)
    n = cfg.n_steps + 1
    tr = Trajectory(group=GroupId.SO3, times=cfg.times(),
                    xi=np.tile([0.5, -0.5, 1.0], (n, 1)))
    # (1/2)(1*0.25 + 2*0.25 + 3*1.0) * horizon
    assert objective_value(J, tr) == pytest.approx(0.5 * 3.75 * 2.0,
                                                   rel=1e-14)
    assert objective_value((1.0, 2.0, 3.0), tr) == pytest.approx(3.75,
                                                                 rel=1e-14)
