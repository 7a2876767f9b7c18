"""Time integration of the reduced, reconstructed, and extremal flows.

Covers: the reduced body-velocity equations and their group reconstruction,
optimal-feedback extremal flows on the line (which drive Riccati equations
and can blow up in finite time), lifted extremal flows on the group manifold,
closed-form symmetric-case solutions, and quadrature of the running cost.

All steppers work on a uniform grid.  Fourth-order Runge-Kutta is the
default; explicit Euler is available for comparison runs.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg

from .actions import (
    ConnectionCoefficients,
    StateSpace,
    line_generator_polynomials,
    riccati_coefficients,
)
from .errors import DivergenceError, DomainError, PoleError
from .groups import (
    AlgebraElement,
    GroupElement,
    GroupId,
    InertiaOperator,
    _BASES,
    bracket,
    inertia_apply,
    inertia_solve,
)

__all__ = [
    "IntegratorConfig",
    "Trajectory",
    "SymmetricSolutionParams",
    "euler_poincare_rhs",
    "integrate_euler_poincare",
    "reconstruct_group",
    "feedback_solve",
    "closed_loop_rhs",
    "integrate_extremal",
    "integrate_riccati",
    "closed_form_symmetric",
    "objective_value",
    "quadrature",
    "DIVERGENCE_CAP",
]

DIVERGENCE_CAP = 1e8


@dataclass(frozen=True)
class IntegratorConfig:
    """Uniform-grid integrator settings.

    The horizon must be an integer number of steps (to one part in 1e9).
    """

    method: str = "rk4"
    step: float = 1e-3
    horizon: float = 1.0

    def __post_init__(self):
        if self.method not in ("rk4", "euler"):
            raise DomainError(f"unknown method {self.method!r}")
        if not (self.step > 0 and np.isfinite(self.step)):
            raise DomainError("step must be positive and finite")
        if not (self.horizon > 0 and np.isfinite(self.horizon)):
            raise DomainError("horizon must be positive and finite")
        if self.step > self.horizon * (1 + 1e-12):
            raise DomainError("step must not exceed horizon")
        ratio = self.horizon / self.step
        if abs(ratio - round(ratio)) > 1e-9:
            raise DomainError(
                f"horizon/step = {ratio!r} is not an integer sample count")

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon / self.step))

    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.step


@dataclass(frozen=True)
class Trajectory:
    """Struct-of-arrays trajectory on a uniform time grid.

    Optional fields: xi (body velocity coefficients, shape (n, 3)), g (group
    elements, (n, d, d)), x and p (states and costates, scalar or matrix per
    space), and xdot/pdot (the integrator's own right-hand-side samples,
    suitable as on-grid derivatives).
    """

    group: GroupId
    times: np.ndarray
    xi: np.ndarray | None = None
    g: np.ndarray | None = None
    x: np.ndarray | None = None
    p: np.ndarray | None = None
    xdot: np.ndarray | None = None
    pdot: np.ndarray | None = None

    def __post_init__(self):
        t = np.asarray(self.times, dtype=np.float64)
        if t.ndim != 1 or t.size < 2:
            raise DomainError("times must hold at least two samples")
        dt = np.diff(t)
        if not np.all(dt > 0):
            raise DomainError("times must be strictly increasing")
        if np.abs(dt - dt[0]).max() > 1e-9 * max(dt[0], 1.0):
            raise DomainError("times must be uniform")
        object.__setattr__(self, "times", t)
        for name in ("xi", "g", "x", "p", "xdot", "pdot"):
            arr = getattr(self, name)
            if arr is not None and len(arr) != t.size:
                raise DomainError(f"{name} has {len(arr)} samples for "
                                  f"{t.size} grid points")

    @property
    def step(self) -> float:
        return float(self.times[1] - self.times[0])

    def xi_element(self, k: int) -> AlgebraElement:
        return AlgebraElement(self.group, self.xi[k])


@dataclass(frozen=True)
class SymmetricSolutionParams:
    """Parameters of the equal-transverse-inertia special case.

    Derived quantities: the exponent alpha = 2 xi0 (I0 - I) / I and the
    solution constants C0 = I0 xi0 / (2 B0), C+ = I xi_plus0 / (2 B+),
    C- = I xi_minus0 / (2 B-).
    """

    I: float
    I0: float
    B_plus: float = 1.0
    B_minus: float = 1.0
    B_zero: float = 1.0
    xi0: float = 0.0
    xi_plus0: complex = 0.0
    xi_minus0: complex = 0.0

    def __post_init__(self):
        if self.I == 0:
            raise DomainError("transverse inertia I must be nonzero")
        if self.B_plus * self.B_minus * self.B_zero == 0:
            raise DomainError("all connection coefficients must be nonzero")

    @property
    def alpha(self) -> float:
        return 2.0 * self.xi0 * (self.I0 - self.I) / self.I

    @property
    def C0(self) -> float:
        return self.I0 * self.xi0 / (2.0 * self.B_zero)

    @property
    def C_plus(self) -> complex:
        return self.I * self.xi_plus0 / (2.0 * self.B_plus)

    @property
    def C_minus(self) -> complex:
        return self.I * self.xi_minus0 / (2.0 * self.B_minus)

    def connection(self) -> ConnectionCoefficients:
        return ConnectionCoefficients(
            np.array([self.B_plus, self.B_minus, self.B_zero]))


def _star_coeffs(c: np.ndarray) -> np.ndarray:
    # adjoint with respect to the ambient Hermitian form, at coefficient level
    return np.array([-np.conj(c[0]), np.conj(c[1]), np.conj(c[2])])


def euler_poincare_rhs(group: GroupId, J: InertiaOperator,
                       xi: AlgebraElement) -> AlgebraElement:
    """Body-velocity derivative of the reduced free motion.

    For so3, su2, sl2r this is J^-1 [J xi, xi].  The so21 variant brackets the
    starred velocity with J xi (star = conjugate transpose, which at the
    coefficient level maps (c+, c-, c0) to (-conj c+, conj c-, conj c0)).
    """
    if J.group is not group or xi.group is not group:
        raise DomainError("group mismatch in reduced dynamics")
    Jxi = inertia_apply(J, xi)
    if group is GroupId.SO21:
        starred = AlgebraElement(group, _star_coeffs(xi.coeffs))
        rhs = bracket(starred, Jxi)
    else:
        rhs = bracket(Jxi, xi)
    return inertia_solve(J, rhs)


def _check_finite(arr, t: float, k: int, label: str):
    a = np.asarray(arr)
    if not np.all(np.isfinite(a)) or np.abs(a).max() > DIVERGENCE_CAP:
        raise DivergenceError(
            f"{label} left the finite range near t = {t:.6g}",
            escape_time=t, last_index=k)


def _step(method: str, f, t: float, y, h: float):
    if method == "euler":
        return y + h * f(t, y)
    k1 = f(t, y)
    k2 = f(t + h / 2.0, y + (h / 2.0) * k1)
    k3 = f(t + h / 2.0, y + (h / 2.0) * k2)
    k4 = f(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate_euler_poincare(group: GroupId, J: InertiaOperator,
                             xi0: AlgebraElement,
                             cfg: IntegratorConfig) -> Trajectory:
    """Integrate the reduced body-velocity flow; returns a xi-only trajectory."""
    if xi0.group is not group:
        raise DomainError("initial velocity group mismatch")
    times = cfg.times()
    out = np.empty((times.size, 3), dtype=group.scalar_dtype)
    out[0] = xi0.coeffs

    def f(t, c):
        return euler_poincare_rhs(group, J, AlgebraElement(group, c)).coeffs

    for k in range(times.size - 1):
        out[k + 1] = _step(cfg.method, f, times[k], out[k], cfg.step)
        _check_finite(out[k + 1], times[k + 1], k, "body velocity")
    return Trajectory(group=group, times=times, xi=out)


def reconstruct_group(group: GroupId, xi_traj: Trajectory,
                      g0: GroupElement, cfg: IntegratorConfig | None = None,
                      convention: str = "body") -> Trajectory:
    """Product-integral reconstruction of the group curve from xi(t).

    Steps by the exponential of the midpoint-interpolated velocity, which
    preserves the group constraint to machine accuracy over long runs:
    convention="body" solves gdot = g xi, convention="spatial" solves
    gdot = xi g.  Returns the trajectory with the g field filled in.
    """
    if xi_traj.xi is None:
        raise DomainError("reconstruction needs body-velocity samples")
    if g0.group is not group or xi_traj.group is not group:
        raise DomainError("group mismatch in reconstruction")
    if convention not in ("body", "spatial"):
        raise DomainError(f"unknown convention {convention!r}")
    if cfg is not None and abs(cfg.step - xi_traj.step) > 1e-12 * xi_traj.step:
        raise DomainError("config step does not match the trajectory grid")
    times = xi_traj.times
    h = xi_traj.step
    n = times.size
    gs = np.empty((n,) + g0.matrix.shape, dtype=group.scalar_dtype)
    gs[0] = g0.matrix
    base = _BASES[group]
    for k in range(n - 1):
        mid = 0.5 * (xi_traj.xi[k] + xi_traj.xi[k + 1])
        stepm = scipy.linalg.expm(h * np.tensordot(mid, base, axes=(0, 0)))
        gs[k + 1] = gs[k] @ stepm if convention == "body" else stepm @ gs[k]
        _check_finite(gs[k + 1], times[k + 1], k, "group element")
    return replace(xi_traj, g=gs)


def _diag_coeffs(I_coeffs) -> np.ndarray:
    if isinstance(I_coeffs, InertiaOperator):
        vals = I_coeffs.diagonal_coefficients()
    else:
        vals = np.asarray(I_coeffs, dtype=np.float64)
        if vals.shape != (3,):
            raise DomainError("inertia coefficients must be a 3-vector")
    if np.any(vals == 0):
        raise DomainError("inertia coefficients must be nonzero")
    return vals


def feedback_solve(group: GroupId, B: ConnectionCoefficients, I_coeffs,
                   x, p) -> AlgebraElement:
    """Optimal control on the line: xi_a = p X_a(x) / I_a.

    This is the stationary point of the costate Hamiltonian in the control;
    for the diagonal cost the stationarity is slot-by-slot.
    """
    I = _diag_coeffs(I_coeffs)
    rows = line_generator_polynomials(group, B)
    xv, pv = complex(x), complex(p)
    if not group.is_complex and (xv.imag != 0 or pv.imag != 0):
        raise DomainError("states and costates on this line are real")
    gen = rows[:, 0] + rows[:, 1] * xv + rows[:, 2] * xv * xv
    coeffs = pv * gen / I
    if not group.is_complex:
        coeffs = np.real(coeffs)
    return AlgebraElement(group, coeffs)


def closed_loop_rhs(group: GroupId, B: ConnectionCoefficients, I_coeffs,
                    x, p):
    """Feedback-substituted extremal field on the line.

    Defined by substituting the optimal feedback into the control
    coefficients: xdot = a x^2 + b x + c and pdot = -(2 a x + b) p with
    (a, b, c) evaluated at the feedback control.
    """
    xi = feedback_solve(group, B, I_coeffs, x, p)
    a, b, c = riccati_coefficients(group, xi, B)
    xdot = a * x * x + b * x + c
    pdot = -(2.0 * a * x + b) * p
    return xdot, pdot


def _step_sampled(method: str, rhs, y, h: float, s0, sm, s1):
    # one step of a flow whose time dependence enters only through sampled
    # data (s0 at the left endpoint, sm at the midpoint, s1 at the right)
    if method == "euler":
        return y + h * rhs(y, s0)
    k1 = rhs(y, s0)
    k2 = rhs(y + (h / 2.0) * k1, sm)
    k3 = rhs(y + (h / 2.0) * k2, sm)
    k4 = rhs(y + h * k3, s1)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _escape_estimate(t_prev: float, prev_mag: float, t_new: float,
                     new_mag: float) -> float:
    # reciprocal extrapolation: near a simple pole 1/|x| decays linearly
    if not np.isfinite(new_mag) or new_mag <= prev_mag or prev_mag <= 0:
        return t_new
    inv_prev, inv_new = 1.0 / prev_mag, 1.0 / new_mag
    slope = (inv_prev - inv_new) / (t_new - t_prev)
    return t_new + inv_new / slope


def integrate_extremal(space: StateSpace, B: ConnectionCoefficients,
                       J: InertiaOperator, x0, p0, cfg: IntegratorConfig,
                       xi_traj: Trajectory | None = None) -> Trajectory:
    """Integrate an extremal flow, storing states, costates, controls, and
    the right-hand-side samples.

    On the line the control comes from the optimal feedback, so the system
    is the closed loop (solutions may escape in finite time; the divergence
    error carries an escape-time estimate).  On the group manifold the
    control curve must be supplied and the flow is the linear lift
    xdot = x xi(t), pdot = p xi(t).
    """
    group = space.group
    times = cfg.times()
    n = times.size
    if space.is_line:
        I = _diag_coeffs(J)
        dtype = group.scalar_dtype
        xs = np.empty(n, dtype=dtype)
        ps = np.empty(n, dtype=dtype)
        xs[0], ps[0] = x0, p0

        def f(t, y):
            xd, pd = closed_loop_rhs(group, B, I, y[0], y[1])
            return np.array([xd, pd], dtype=dtype)

        for k in range(n - 1):
            y = _step(cfg.method, f, times[k], np.array([xs[k], ps[k]]),
                      cfg.step)
            bad = (not np.all(np.isfinite(y))) or np.abs(y).max() > DIVERGENCE_CAP
            if bad:
                prev = max(abs(xs[k]), abs(ps[k]))
                mag = np.abs(y).max() if np.all(np.isfinite(y)) else np.inf
                est = _escape_estimate(times[k], prev, times[k + 1], mag)
                raise DivergenceError(
                    f"extremal escaped near t = {est:.6g} "
                    f"(last finite sample at t = {times[k]:.6g})",
                    escape_time=float(est), last_index=k)
            xs[k + 1], ps[k + 1] = y
        xis = np.empty((n, 3), dtype=dtype)
        xdot = np.empty(n, dtype=dtype)
        pdot = np.empty(n, dtype=dtype)
        for k in range(n):
            xis[k] = feedback_solve(group, B, I, xs[k], ps[k]).coeffs
            xdot[k], pdot[k] = closed_loop_rhs(group, B, I, xs[k], ps[k])
        return Trajectory(group=group, times=times, xi=xis, x=xs, p=ps,
                          xdot=xdot, pdot=pdot)

    if xi_traj is None or xi_traj.xi is None:
        raise DomainError("group-manifold extremals need a control trajectory")
    if xi_traj.times.size != n or abs(xi_traj.step - cfg.step) > 1e-12 * cfg.step:
        raise DomainError("control trajectory grid does not match the config")
    if not isinstance(x0, GroupElement) or x0.group is not group:
        raise DomainError("x0 must be a group element of the space's group")
    base = _BASES[group]
    mats = np.tensordot(xi_traj.xi, base, axes=(1, 0))  # (n, d, d)
    d = group.dim
    xs = np.empty((n, d, d), dtype=group.scalar_dtype)
    ps = np.empty((n, d, d), dtype=group.scalar_dtype)
    xs[0] = x0.matrix
    ps[0] = np.asarray(p0, dtype=group.scalar_dtype)

    def lift(y, m):
        return y @ m

    for k in range(n - 1):
        m0, m1 = mats[k], mats[k + 1]
        mm = 0.5 * (m0 + m1)
        xs[k + 1] = _step_sampled(cfg.method, lift, xs[k], cfg.step, m0, mm, m1)
        ps[k + 1] = _step_sampled(cfg.method, lift, ps[k], cfg.step, m0, mm, m1)
        _check_finite(xs[k + 1], times[k + 1], k, "state")
        _check_finite(ps[k + 1], times[k + 1], k, "costate")
    xdot = np.einsum("kij,kjl->kil", xs, mats)
    pdot = np.einsum("kij,kjl->kil", ps, mats)
    return Trajectory(group=group, times=times, xi=xi_traj.xi.copy(), x=xs,
                      p=ps, xdot=xdot, pdot=pdot)


def integrate_riccati(group: GroupId, B: ConnectionCoefficients,
                      xi_traj, x0, cfg: IntegratorConfig) -> Trajectory:
    """Integrate the line equation driven by a fixed control curve.

    ``xi_traj`` is either a Trajectory carrying control samples or a plain
    (n+1, 3) array of control coefficients on the config grid.  All
    solutions share one time-dependent Riccati equation, so families
    produced by this routine admit the cross-ratio invariant.
    """
    if isinstance(xi_traj, Trajectory):
        if xi_traj.xi is None:
            raise DomainError("control samples required")
        if abs(xi_traj.step - cfg.step) > 1e-12 * cfg.step:
            raise DomainError("control trajectory grid does not match the config")
        xi = xi_traj.xi
    else:
        xi = np.asarray(xi_traj)
    times = cfg.times()
    n = times.size
    if xi.shape != (n, 3):
        raise DomainError("control samples do not match the config grid")
    dtype = group.scalar_dtype
    rows = line_generator_polynomials(group, B)
    polys = xi @ rows  # (n, 3) coefficient rows (c0, c1, c2)
    xs = np.empty(n, dtype=dtype)
    xs[0] = x0
    xdot = np.empty(n, dtype=dtype)

    def field(y, c):
        return c[0] + c[1] * y + c[2] * y * y

    for k in range(n - 1):
        cm = 0.5 * (polys[k] + polys[k + 1])
        xs[k + 1] = _step_sampled(cfg.method, field, xs[k], cfg.step,
                                  polys[k], cm, polys[k + 1])
        val = xs[k + 1]
        if not np.isfinite(val) or abs(val) > DIVERGENCE_CAP:
            mag = abs(val) if np.isfinite(val) else np.inf
            est = _escape_estimate(times[k], abs(xs[k]), times[k + 1], mag)
            raise DivergenceError(
                f"line solution escaped near t = {est:.6g}",
                escape_time=float(est), last_index=k)
    for k in range(n):
        c = polys[k]
        xdot[k] = c[0] + c[1] * xs[k] + c[2] * xs[k] * xs[k]
    return Trajectory(group=group, times=times, xi=np.array(xi, copy=True),
                      x=xs, xdot=xdot)


def closed_form_symmetric(group: GroupId, params: SymmetricSolutionParams, t):
    """Symmetric-case solution formulas, evaluated exactly as written.

    sl2r: x = C0/(2 C+) e^{-alpha t},          p = 2 C+ e^{alpha t}
    su2:  x = C0/(C- e^{-alpha t} + i C+ e^{alpha t}),
          p = C+ e^{alpha t} - i C- e^{-alpha t}
    so21: x = C+ e^{alpha t}/(C- e^{-alpha t} - i C0),
          p = -i C- e^{-alpha t} - C0

    Raises a pole error where a denominator vanishes.
    """
    t = np.asarray(t, dtype=np.float64)
    al = params.alpha
    up, dn = np.exp(al * t), np.exp(-al * t)
    C0, Cp, Cm = params.C0, params.C_plus, params.C_minus

    def guard(den, scale):
        bad = np.atleast_1d(np.abs(den) <= 1e-12 * max(scale, 1e-300))
        if np.any(bad):
            tt = np.broadcast_to(np.atleast_1d(t), bad.shape)
            loc = float(tt[int(np.argmax(bad))])
            raise PoleError(f"denominator vanishes at t = {loc:.6g}",
                            location=loc)

    if group is GroupId.SL2R:
        guard(2.0 * Cp, abs(C0))
        x = C0 / (2.0 * Cp) * dn
        p = 2.0 * Cp * up
        if complex(params.xi_plus0).imag == 0:
            x, p = np.real(x), np.real(p)
        return x, p
    if group is GroupId.SU2:
        den = Cm * dn + 1j * Cp * up
        guard(den, abs(C0))
        return C0 / den, Cp * up - 1j * Cm * dn
    if group is GroupId.SO21:
        den = Cm * dn - 1j * C0
        guard(den, abs(Cp))
        return Cp * up / den, -1j * Cm * dn - C0
    raise DomainError(f"no symmetric solution formulas for {group.value}")


def quadrature(times: np.ndarray, values: np.ndarray):
    """Composite Simpson integral on a uniform grid.

    Uses the 3/8 rule on the final three intervals when the interval count
    is odd.  Fourth-order accurate for smooth integrands.
    """
    n = times.size - 1
    if n < 2:
        raise DomainError("quadrature needs at least 3 samples")
    h = float(times[1] - times[0])
    v = np.asarray(values)

    def simpson(block):
        # block holds an even number of intervals
        return (h / 3.0) * (block[0] + block[-1]
                            + 4.0 * block[1:-1:2].sum()
                            + 2.0 * block[2:-1:2].sum())

    if n % 2 == 0:
        return simpson(v)
    if n == 3:
        return (3.0 * h / 8.0) * (v[0] + 3.0 * v[1] + 3.0 * v[2] + v[3])
    head = simpson(v[:n - 2])
    tail = (3.0 * h / 8.0) * (v[n - 3] + 3.0 * v[n - 2] + 3.0 * v[n - 1] + v[n])
    return head + tail


def objective_value(J, xi_traj: Trajectory, cfg: IntegratorConfig | None = None,
                    pairing: str = "coordinate"):
    """Integral of the running cost (1/2)<xi, J xi> along the trajectory."""
    from .actions import quadratic_cost
    if xi_traj.xi is None:
        raise DomainError("objective needs control samples")
    if cfg is not None and abs(cfg.step - xi_traj.step) > 1e-12 * xi_traj.step:
        raise DomainError("config step does not match the trajectory grid")
    group = xi_traj.group
    if isinstance(J, InertiaOperator):
        op = J
    else:
        vals = _diag_coeffs(J)
        op = InertiaOperator(group, np.diag(vals))
    costs = np.array([
        quadratic_cost(op, AlgebraElement(group, c), pairing=pairing)
        for c in xi_traj.xi])
    return quadrature(xi_traj.times, costs)
