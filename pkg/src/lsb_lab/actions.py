"""State spaces, group actions, and the costate-side machinery.

Two kinds of state space are supported.  A group manifold carries the right
translation action of the group on itself, with infinitesimal generators
x -> x e_a.  A Moebius line carries the fractional-linear action of one of
the 2x2 groups on a scalar coordinate, whose infinitesimal generators are
quadratic polynomials in the coordinate; a control built from them drives a
Riccati equation.

The connection coefficients (B_plus, B_minus, B_zero) rescale the line
generators slot by slot; (1, 1, 1) is the canonical (Maurer-Cartan) case.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, PoleError, UnsupportedProblemError
from .groups import (
    AlgebraElement,
    GroupElement,
    GroupId,
    InertiaOperator,
    basis,
    inertia_apply,
    killing_form,
    slot_index,
    CONSTRAINT_TOL,
)

__all__ = [
    "StateSpace",
    "ConnectionCoefficients",
    "Costate",
    "group_manifold",
    "moebius_line",
    "generator_field",
    "infinitesimal_action",
    "riccati_coefficients",
    "line_generator_polynomials",
    "momentum_map",
    "lin_constraint_residual",
    "quadratic_cost",
    "pontryagin_hamiltonian",
    "clebsch_lagrangian",
    "moebius_apply",
    "moebius_closure_constants",
]

_LINE_GROUPS = (GroupId.SL2R, GroupId.SU2, GroupId.SO21)


@dataclass(frozen=True)
class StateSpace:
    """Either the group itself ("group_manifold") or the scalar line acted on
    by fractional-linear maps ("moebius_line")."""

    kind: str
    group: GroupId

    def __post_init__(self):
        if self.kind not in ("group_manifold", "moebius_line"):
            raise DomainError(f"unknown state space kind {self.kind!r}")
        if self.kind == "moebius_line" and self.group not in _LINE_GROUPS:
            raise DomainError(
                f"the line action is defined for sl2r, su2, so21, not "
                f"{self.group.value}")

    @property
    def is_line(self) -> bool:
        return self.kind == "moebius_line"


def group_manifold(group: GroupId) -> StateSpace:
    return StateSpace("group_manifold", group)


def moebius_line(group: GroupId) -> StateSpace:
    return StateSpace("moebius_line", group)


@dataclass(frozen=True)
class ConnectionCoefficients:
    """Diagonal connection coefficients (B_plus, B_minus, B_zero)."""

    diag: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.diag, dtype=np.float64)
        if d.shape != (3,):
            raise DomainError(f"connection needs 3 coefficients, got shape {d.shape}")
        if not np.all(np.isfinite(d)):
            raise DomainError("connection coefficients must be finite")
        d.flags.writeable = False
        object.__setattr__(self, "diag", d)

    @staticmethod
    def maurer_cartan() -> "ConnectionCoefficients":
        return ConnectionCoefficients(np.ones(3))


def _line_scalar(space: StateSpace, x) -> complex | float:
    if isinstance(x, (GroupElement, np.ndarray)):
        raise DomainError("line states are scalars")
    x = complex(x)
    if space.group is GroupId.SL2R:
        if abs(x.imag) > 1e-12 * max(1.0, abs(x.real)):
            raise DomainError("sl2r line states are real scalars")
        return x.real
    return x


def _manifold_matrix(space: StateSpace, x) -> np.ndarray:
    """Matrix of a manifold state.

    Accepts a validated GroupElement or a raw square matrix; the raw form
    exists for samples of numeric curves, which satisfy the group
    constraint only approximately.
    """
    if isinstance(x, GroupElement):
        if x.group is not space.group:
            raise DomainError(f"state group {x.group.value} does not match "
                              f"space group {space.group.value}")
        return x.matrix
    m = np.asarray(x, dtype=space.group.scalar_dtype)
    d = space.group.dim
    if m.shape != (d, d):
        raise DomainError(f"manifold state must be {d}x{d}, got {m.shape}")
    if not np.all(np.isfinite(m)):
        raise DomainError("manifold state must be finite")
    return m


@dataclass(frozen=True)
class Costate:
    """A point (x, p) of the cotangent bundle in the trivialized picture:
    scalars on the line, a group element paired with a same-shape matrix on
    the group manifold."""

    space: StateSpace
    x: object
    p: object

    def __post_init__(self):
        if self.space.is_line:
            _line_scalar(self.space, self.x)
            complex(self.p)
        else:
            m = _manifold_matrix(self.space, self.x)
            p = np.asarray(self.p, dtype=self.space.group.scalar_dtype)
            if p.shape != m.shape:
                raise DomainError("costate matrix must match the state's shape")


def line_generator_polynomials(group: GroupId,
                               B: ConnectionCoefficients) -> np.ndarray:
    """Coefficient rows (constant, linear, quadratic) of the three line
    generators, as a (3, 3) array over the group's scalars."""
    bp, bm, b0 = B.diag
    if group is GroupId.SL2R:
        rows = [(bp, 0.0, 0.0), (0.0, 0.0, -bm), (0.0, 2.0 * b0, 0.0)]
        return np.array(rows, dtype=np.float64)
    if group is GroupId.SU2:
        rows = [(bp, 0.0, bp), (1j * bm, 0.0, -1j * bm), (0.0, 2j * b0, 0.0)]
    elif group is GroupId.SO21:
        rows = [(0.0, 2j * bp, 0.0), (1j * bm, 0.0, 1j * bm), (-b0, 0.0, b0)]
    else:
        raise UnsupportedProblemError(
            f"no line generators for {group.value}")
    return np.array(rows, dtype=np.complex128)


def generator_field(space: StateSpace, a, B: ConnectionCoefficients, x):
    """Value of the a-th infinitesimal generator at the state x.

    Group manifold: the matrix x e_a.
    Moebius line: the generator polynomial evaluated at x.
    """
    idx = slot_index(a)
    if space.is_line:
        xv = _line_scalar(space, x)
        row = line_generator_polynomials(space.group, B)[idx]
        val = row[0] + row[1] * xv + row[2] * xv * xv
        return val if space.group.is_complex else float(np.real(val))
    m = _manifold_matrix(space, x)
    return m @ basis(space.group)[idx]


def riccati_coefficients(group: GroupId, xi: AlgebraElement,
                         B: ConnectionCoefficients):
    """Coefficients (a, b, c) of the line control field a x^2 + b x + c
    induced by the algebra element xi.  Linear in xi."""
    if group is GroupId.SO3:
        raise UnsupportedProblemError("so3 has no line action here")
    if xi.group is not group:
        raise DomainError(f"group mismatch: {xi.group.value} vs {group.value}")
    rows = line_generator_polynomials(group, B)
    poly = xi.coeffs @ rows  # (constant, linear, quadratic)
    if group.is_complex:
        return poly[2], poly[1], poly[0]
    return float(np.real(poly[2])), float(np.real(poly[1])), float(np.real(poly[0]))


def infinitesimal_action(space: StateSpace, xi: AlgebraElement,
                         B: ConnectionCoefficients, x):
    """Tangent value of the action generated by xi at x; linear in xi."""
    if xi.group is not space.group:
        raise DomainError(f"group mismatch: {xi.group.value} vs "
                          f"{space.group.value}")
    if space.is_line:
        xv = _line_scalar(space, x)
        a, b, c = riccati_coefficients(space.group, xi, B)
        return a * xv * xv + b * xv + c
    m = _manifold_matrix(space, x)
    return m @ xi.matrix()


def _costate_pairing(space: StateSpace, p, tangent):
    if space.is_line:
        return complex(p) * tangent if space.group.is_complex \
            else float(p) * tangent
    p = np.asarray(p, dtype=space.group.scalar_dtype)
    if space.group.is_complex:
        return float(np.real(np.trace(p.conj().T @ tangent)))
    return float(np.trace(p.T @ tangent))


def momentum_map(space: StateSpace, B: ConnectionCoefficients, x, p) -> np.ndarray:
    """Slot-wise pairings of the costate with the three generators; the
    contraction with a coefficient vector equals the pairing of p with the
    corresponding infinitesimal action value."""
    vals = [_costate_pairing(space, p, generator_field(space, a, B, x))
            for a in range(3)]
    dtype = space.group.scalar_dtype if space.is_line else np.float64
    return np.array(vals, dtype=dtype)


def lin_constraint_residual(space: StateSpace, B: ConnectionCoefficients,
                            x, xdot, xi: AlgebraElement):
    """xdot minus the control field; identically zero on controlled curves."""
    return xdot - infinitesimal_action(space, xi, B, x)


def quadratic_cost(J: InertiaOperator, xi: AlgebraElement,
                   pairing: str = "coordinate"):
    """Running cost (1/2)<xi, J xi>.

    pairing="coordinate": half the coefficient quadratic form (no conjugation,
    so the expression is holomorphic in complex coefficients).
    pairing="trace": half the group trace pairing of xi with J xi.
    """
    if J.group is not xi.group:
        raise DomainError(f"group mismatch: {J.group.value} vs {xi.group.value}")
    if pairing == "coordinate":
        val = 0.5 * (xi.coeffs @ (J.matrix3 @ xi.coeffs))
        return val if xi.group.is_complex else float(np.real(val))
    if pairing == "trace":
        return 0.5 * killing_form(xi, inertia_apply(J, xi))
    raise DomainError(f"unknown pairing {pairing!r}")


def pontryagin_hamiltonian(space: StateSpace, B: ConnectionCoefficients,
                           J: InertiaOperator, x, p, xi: AlgebraElement,
                           pairing: str = "coordinate"):
    """<p, control field at x> minus the running cost.

    Stationary in xi exactly at the optimal feedback value.
    """
    drive = _costate_pairing(space, p, infinitesimal_action(space, xi, B, x))
    return drive - quadratic_cost(J, xi, pairing=pairing)


def clebsch_lagrangian(space: StateSpace, B: ConnectionCoefficients,
                       J: InertiaOperator, x, p, xdot, xi: AlgebraElement,
                       pairing: str = "coordinate"):
    """Running cost plus the costate-weighted control residual.

    Collapses to the running cost whenever (x, xdot) satisfies the control
    equation, and for p = 0.
    """
    penalty = _costate_pairing(
        space, p, lin_constraint_residual(space, B, x, xdot, xi))
    return quadratic_cost(J, xi, pairing=pairing) + penalty


def moebius_apply(group: GroupId, g: GroupElement, x):
    """Fractional-linear action (g00 x + g01) / (g10 x + g11) on the line."""
    if group is GroupId.SO3:
        raise UnsupportedProblemError("so3 has no line action here")
    m = g.matrix if isinstance(g, GroupElement) else np.asarray(g)
    den = m[1, 0] * x + m[1, 1]
    if abs(den) < 1e-300:
        raise PoleError(f"fractional-linear map has a pole at x = {x}")
    val = (m[0, 0] * x + m[0, 1]) / den
    return val if group.is_complex else float(np.real(val))


def _poly_commutator(pa: np.ndarray, pb: np.ndarray) -> np.ndarray:
    # pa, pb: coefficient rows (c0, c1, c2); returns degree-3 coefficient rows
    # of pa * pb' - pb * pa'
    da = np.array([pa[1], 2.0 * pa[2], 0.0])
    db = np.array([pb[1], 2.0 * pb[2], 0.0])
    prod1 = np.convolve(pa, db)[:4]
    prod2 = np.convolve(pb, da)[:4]
    return prod1 - prod2


def moebius_closure_constants(group: GroupId, B: ConnectionCoefficients):
    """Structure constants realized by the line generators.

    Computes every pairwise vector-field commutator by exact polynomial
    algebra and solves for its expansion in the generator span.  Returns
    (tensor, residual) where tensor[a, b, :] are the expansion coefficients
    of [X_a, X_b] and residual bounds the out-of-span leftovers (the cubic
    coefficient and the linear-solve defect).  All three generators must be
    independent, which requires every connection coefficient to be nonzero.
    """
    rows = line_generator_polynomials(group, B).astype(np.complex128)
    if abs(np.linalg.det(rows)) < 1e-12:
        raise DomainError("degenerate connection: generators do not span")
    tensor = np.zeros((3, 3, 3), dtype=np.complex128)
    residual = 0.0
    for a in range(3):
        for b in range(3):
            comm = _poly_commutator(rows[a], rows[b])
            residual = max(residual, abs(comm[3]))
            coeffs = np.linalg.solve(rows.T, comm[:3])
            tensor[a, b] = coeffs
            residual = max(residual,
                           float(np.abs(coeffs @ rows - comm[:3]).max()))
    if not group.is_complex:
        tensor = np.real(tensor)
    return tensor, residual
