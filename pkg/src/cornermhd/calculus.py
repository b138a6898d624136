"""Discrete differential operators and norms.

All derivatives are second order: centered 3-point stencils inside,
one-sided 3/4-point stencils in the boundary layer, so no ghost-cell
assumption is made here (the evolution solvers keep their own ghost
machinery).  On sector grids the polar metric factors are applied, and
Cartesian derivatives are assembled from the chain rule.

Norm reductions use numpy's pairwise summation, which is deterministic
for a fixed array layout, so results are reproducible bit-for-bit.
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError, EosDomainError, PreconditionError
from .fields import CARTESIAN, POLAR, ScalarField, VectorField
from .geometry import Grid, TangentialFrame

# ---------------------------------------------------------------------------
# primitive stencils (axis-wise, one-sided in the boundary layer)
# ---------------------------------------------------------------------------


def _d1(v: np.ndarray, h: float, axis: int) -> np.ndarray:
    """First derivative, O(h^2) everywhere."""
    v = np.moveaxis(v, axis, 0)
    out = np.empty_like(v)
    out[1:-1] = (v[2:] - v[:-2]) / (2.0 * h)
    out[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h)
    out[-1] = (3.0 * v[-1] - 4.0 * v[-2] + v[-3]) / (2.0 * h)
    return np.moveaxis(out, 0, axis)


def _d2(v: np.ndarray, h: float, axis: int) -> np.ndarray:
    """Second derivative, O(h^2) everywhere (4-point one-sided at edges)."""
    v = np.moveaxis(v, axis, 0)
    out = np.empty_like(v)
    out[1:-1] = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / (h * h)
    out[0] = (2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]) / (h * h)
    out[-1] = (2.0 * v[-1] - 5.0 * v[-2] + 4.0 * v[-3] - v[-4]) / (h * h)
    return np.moveaxis(out, 0, axis)


# ---------------------------------------------------------------------------
# grid-aware first derivatives
# ---------------------------------------------------------------------------


def dx1(f: ScalarField) -> np.ndarray:
    """Cartesian d/dx1 of a scalar sample (chain rule on sectors)."""
    g = f.grid
    if g.is_square:
        return _d1(f.values, g.h1, 0)
    R, TH = g.mesh()
    fr = _d1(f.values, g.h1, 0)
    ft = _d1(f.values, g.h2, 1)
    return np.cos(TH) * fr - np.sin(TH) / R * ft


def dx2(f: ScalarField) -> np.ndarray:
    g = f.grid
    if g.is_square:
        return _d1(f.values, g.h2, 1)
    R, TH = g.mesh()
    fr = _d1(f.values, g.h1, 0)
    ft = _d1(f.values, g.h2, 1)
    return np.sin(TH) * fr + np.cos(TH) / R * ft


def gradient(f: ScalarField) -> VectorField:
    """Gradient; polar components (d_r, (1/r) d_theta) on sectors."""
    g = f.grid
    if g.is_square:
        return VectorField.from_arrays(
            g, _d1(f.values, g.h1, 0), _d1(f.values, g.h2, 1), CARTESIAN
        )
    R, _ = g.mesh()
    return VectorField.from_arrays(
        g, _d1(f.values, g.h1, 0), _d1(f.values, g.h2, 1) / R, POLAR
    )


def divergence(v: VectorField) -> ScalarField:
    g = v.grid
    if g.is_square:
        return ScalarField(
            g, _d1(v.c1.values, g.h1, 0) + _d1(v.c2.values, g.h2, 1)
        )
    if v.basis != POLAR:
        raise DomainError("sector vector fields must carry polar components")
    R, _ = g.mesh()
    return ScalarField(
        g,
        _d1(R * v.c1.values, g.h1, 0) / R + _d1(v.c2.values, g.h2, 1) / R,
    )


def curl2d(v: VectorField) -> ScalarField:
    """Scalar curl d_1 v2 - d_2 v1 (sign fixed by u x v = u2 v1 - u1 v2)."""
    g = v.grid
    if g.is_square:
        return ScalarField(
            g, _d1(v.c2.values, g.h1, 0) - _d1(v.c1.values, g.h2, 1)
        )
    if v.basis != POLAR:
        raise DomainError("sector vector fields must carry polar components")
    R, _ = g.mesh()
    return ScalarField(
        g,
        _d1(R * v.c2.values, g.h1, 0) / R - _d1(v.c1.values, g.h2, 1) / R,
    )


def laplacian(f: ScalarField) -> ScalarField:
    g = f.grid
    if g.is_square:
        return ScalarField(g, _d2(f.values, g.h1, 0) + _d2(f.values, g.h2, 1))
    R, _ = g.mesh()
    return ScalarField(
        g,
        _d2(f.values, g.h1, 0)
        + _d1(f.values, g.h1, 0) / R
        + _d2(f.values, g.h2, 1) / (R * R),
    )


_DIFF_KINDS = {
    "gradient": gradient,
    "divergence": divergence,
    "curl2d": curl2d,
    "laplacian": laplacian,
}


def diff_op(kind: str, field):
    """Dispatch: gradient | divergence | curl2d | laplacian."""
    if min(field.grid.n1, field.grid.n2) < 4:
        raise DomainError("grid too small for second-order stencils")
    try:
        op = _DIFF_KINDS[kind]
    except KeyError:
        raise DomainError(f"unknown differential operator {kind!r}") from None
    return op(field)


# ---------------------------------------------------------------------------
# boundary traces
# ---------------------------------------------------------------------------


def edge_trace(values: np.ndarray, face: str) -> np.ndarray:
    """Quadratic one-sided extrapolation of cell data to a boundary face."""
    if face == "x1lo":
        a, b, c = values[0, :], values[1, :], values[2, :]
    elif face == "x1hi":
        a, b, c = values[-1, :], values[-2, :], values[-3, :]
    elif face == "x2lo":
        a, b, c = values[:, 0], values[:, 1], values[:, 2]
    elif face == "x2hi":
        a, b, c = values[:, -1], values[:, -2], values[:, -3]
    else:
        raise DomainError(f"unknown face {face!r}")
    return (15.0 * a - 10.0 * b + 3.0 * c) / 8.0


_SQUARE_NORMAL_COMP = {"x1lo": (0, -1.0), "x1hi": (0, 1.0), "x2lo": (1, -1.0), "x2hi": (1, 1.0)}


def normal_traces(v: VectorField) -> dict[str, np.ndarray]:
    """Extrapolated boundary traces of v . nu per face."""
    g = v.grid
    out = {}
    if g.is_square:
        comps = (v.c1.values, v.c2.values)
        for face, (k, sign) in _SQUARE_NORMAL_COMP.items():
            out[face] = sign * edge_trace(comps[k], face)
        return out
    if v.basis != POLAR:
        raise DomainError("sector vector fields must carry polar components")
    # legs: nu = -/+ e_theta; arc: nu = e_r
    out["leg0"] = -edge_trace(v.c2.values, "x2lo")
    out["leg1"] = edge_trace(v.c2.values, "x2hi")
    out["arc"] = edge_trace(v.c1.values, "x1hi")
    return out


def max_normal_trace(v: VectorField, skip_faces=()) -> float:
    return max(
        float(np.max(np.abs(tr)))
        for face, tr in normal_traces(v).items()
        if face not in skip_faces
    )


# ---------------------------------------------------------------------------
# Sobolev and anisotropic norms
# ---------------------------------------------------------------------------

MAX_SOBOLEV_ORDER = 4
MAX_ANISO_ORDER = 6


def _cartesian_derivative_table(f: ScalarField, s: int) -> dict:
    """All d1^a1 d2^a2 f with a1+a2 <= s, built level by level."""
    table = {(0, 0): f.values}
    g = f.grid
    for level in range(1, s + 1):
        for a1 in range(level + 1):
            a2 = level - a1
            if a1 > 0:
                base = ScalarField(g, table[(a1 - 1, a2)])
                table[(a1, a2)] = dx1(base)
            else:
                base = ScalarField(g, table[(a1, a2 - 1)])
                table[(a1, a2)] = dx2(base)
    return table


def sobolev_norm(field, s: int) -> float:
    """Discrete H^s norm: sqrt(sum over |alpha| <= s of the L2 norms
    squared of all Cartesian derivatives)."""
    if s < 0 or s > MAX_SOBOLEV_ORDER:
        raise DomainError(f"sobolev order must be in [0, {MAX_SOBOLEV_ORDER}]")
    if isinstance(field, VectorField):
        a, b = field.cartesian_components()
        comps = [ScalarField(field.grid, a), ScalarField(field.grid, b)]
    else:
        comps = [field]
    w = comps[0].grid.cell_weights()
    total = 0.0
    for comp in comps:
        table = _cartesian_derivative_table(comp, s)
        for vals in table.values():
            total += float(np.sum(w * vals * vals))
    return float(np.sqrt(total))


def _dw(values: np.ndarray, w: np.ndarray, grid: Grid) -> np.ndarray:
    """Conormal derivative w . grad_h (square grids)."""
    return w[0] * _d1(values, grid.h1, 0) + w[1] * _d1(values, grid.h2, 1)


def aniso_norm(
    field: ScalarField, m: int, frame: TangentialFrame, ordering: str = "x_outer"
) -> float:
    """Anisotropic norm: full derivatives weighted twice, conormal ones once.

    Sums ||d1^a1 d2^a2 dw1^a3 dw2^a4 f||_{L2}^2 over
    2(a1+a2) + a3 + a4 <= m; ``ordering='w_outer'`` applies the conormal
    factors after the Cartesian ones instead (equivalent norm family).
    """
    if m < 0 or m > MAX_ANISO_ORDER:
        raise DomainError(f"aniso order must be in [0, {MAX_ANISO_ORDER}]")
    g = field.grid
    if not g.is_square:
        raise DomainError("anisotropic norms are computed on square domains only")
    if frame.grid.shape != g.shape:
        raise DomainError("frame and field grids disagree")
    if ordering not in ("x_outer", "w_outer"):
        raise DomainError(f"unknown ordering {ordering!r}")
    w = g.cell_weights()
    w1, w2 = frame.w1, frame.w2

    def x_derivs(base: np.ndarray, budget: int):
        """{(a1, a2): array} with a1 + a2 <= budget."""
        out = {(0, 0): base}
        for level in range(1, budget + 1):
            for a1 in range(level + 1):
                a2 = level - a1
                if a1 > 0:
                    out[(a1, a2)] = _d1(out[(a1 - 1, a2)], g.h1, 0)
                else:
                    out[(a1, a2)] = _d1(out[(a1, a2 - 1)], g.h2, 1)
        return out

    def w_derivs(base: np.ndarray, budget: int):
        """{(a3, a4): array} with a3 + a4 <= budget, dw2 applied first."""
        out = {(0, 0): base}
        for a4 in range(1, budget + 1):
            out[(0, a4)] = _dw(out[(0, a4 - 1)], w2, g)
        for a3 in range(1, budget + 1):
            for a4 in range(0, budget + 1 - a3):
                out[(a3, a4)] = _dw(out[(a3 - 1, a4)], w1, g)
        return out

    total = 0.0
    if ordering == "x_outer":
        inner = w_derivs(field.values, m)
        for (a3, a4), base in inner.items():
            budget = (m - a3 - a4) // 2
            if budget < 0:
                continue
            for vals in x_derivs(base, budget).values():
                total += float(np.sum(w * vals * vals))
    else:
        inner = x_derivs(field.values, m // 2)
        for (a1, a2), base in inner.items():
            budget = m - 2 * (a1 + a2)
            for vals in w_derivs(base, budget).values():
                total += float(np.sum(w * vals * vals))
    return float(np.sqrt(total))


# ---------------------------------------------------------------------------
# energy functional and advection decomposition
# ---------------------------------------------------------------------------


def energy_functional(z, Z, eos) -> float:
    """Quadratic energy of the linearized system:
    integral of R|u|^2 + |b|^2 + (1/Q)|p_tot - b.B|^2 + |s|^2."""
    from .linear import State  # local import to avoid a cycle

    if isinstance(z, State) and z.pvar_kind != "total_pressure":
        raise PreconditionError("energy functional expects the total-pressure state")
    R, _, Q = eos.eval_arrays(Z.P.values, Z.S.values)
    if np.any(Q <= 0):
        raise EosDomainError("nonpositive Q in energy functional")
    g = z.u.grid
    w = g.cell_weights()
    u2 = z.u.c1.values**2 + z.u.c2.values**2
    b2 = z.b.c1.values**2 + z.b.c2.values**2
    bB = z.b.c1.values * Z.B.c1.values + z.b.c2.values * Z.B.c2.values
    integrand = R * u2 + b2 + (z.pvar.values - bB) ** 2 / Q + z.s.values**2
    return float(np.sum(w * integrand))


def tangential_decompose(
    U: VectorField, frame: TangentialFrame, trace_tol: float | None = None
) -> tuple[ScalarField, ScalarField]:
    """Coefficients (V1, V2) with U . grad = V1 d_w1 + V2 d_w2.

    Requires U tangent to every edge; the quotient by the frame factors
    x(1-x/delta) is evaluated at cell centers, which never touch the zero
    set of the factors.
    """
    g = U.grid
    if not g.is_square:
        raise DomainError("tangential decomposition is provided on squares only")
    h = max(g.h1, g.h2)
    if trace_tol is None:
        scale = max(float(np.max(np.abs(U.c1.values))), float(np.max(np.abs(U.c2.values))), 1e-300)
        trace_tol = 50.0 * h * h * scale
    worst = max_normal_trace(U)
    if worst > trace_tol:
        raise PreconditionError(
            f"U.nu = {worst:.3e} exceeds tolerance {trace_tol:.3e}; quotient would be singular"
        )
    w1 = frame.w1[0]
    w2 = frame.w2[1]
    return ScalarField(g, U.c1.values / w1), ScalarField(g, U.c2.values / w2)
