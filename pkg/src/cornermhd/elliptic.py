"""Elliptic building blocks on the square: Poisson-Dirichlet and
Poisson-Neumann solves, the Helmholtz decomposition v = grad f + g with
div g = 0, the div-curl reconstruction u = perp-grad K1 + grad K2, and a
probe for the div-curl a priori bound ||X||_s <= C(||div X||_{s-1} +
||curl X||_{s-1}).

The Laplacian is the symmetric 5-point operator on the cell-centered
grid: Dirichlet faces use ghost reflection K_g = -K_i (zero trace at the
face midpoint), Neumann faces K_g = K_i (zero flux).  Both closures keep
the matrix symmetric, so plain conjugate gradients apply; the Neumann
null space is removed by projecting out the mean every iteration.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .calculus import sobolev_norm, divergence, curl2d, max_normal_trace, edge_trace
from .errors import DomainError, PreconditionError, SolverFailure
from .fields import CARTESIAN, ScalarField, VectorField
from .geometry import Grid

CG_TOL = 1e-10
CG_ITER_FACTOR = 50


@dataclass
class PoissonSolution:
    potential: ScalarField
    residual_norm: float
    iterations: int


def _require_square(grid: Grid, what: str):
    if not grid.is_square:
        raise DomainError(
            f"{what} is implemented on square domains (the sector lab needs no elliptic solve)"
        )


def _neg_laplacian(v: np.ndarray, grid: Grid, bc: str) -> np.ndarray:
    """-Delta with parity ghosts; 'dirichlet' -> odd, 'neumann' -> even."""
    sgn = -1.0 if bc == "dirichlet" else 1.0
    h1s, h2s = grid.h1**2, grid.h2**2
    p = np.empty((grid.n1 + 2, grid.n2 + 2))
    p[1:-1, 1:-1] = v
    p[0, 1:-1] = sgn * v[0]
    p[-1, 1:-1] = sgn * v[-1]
    p[1:-1, 0] = sgn * v[:, 0]
    p[1:-1, -1] = sgn * v[:, -1]
    lap = (p[2:, 1:-1] - 2.0 * v + p[:-2, 1:-1]) / h1s + (
        p[1:-1, 2:] - 2.0 * v + p[1:-1, :-2]
    ) / h2s
    return -lap


def _cg(apply_a, rhs: np.ndarray, tol: float, maxiter: int, project=None):
    """Conjugate gradients on an SPD operator; optional per-iteration
    projection (used to pin the Neumann mean)."""
    x = np.zeros_like(rhs)
    if project is not None:
        rhs = project(rhs)
    r = rhs.copy()
    p = r.copy()
    rs = float(np.sum(r * r))
    bnorm = float(np.sqrt(np.sum(rhs * rhs)))
    if bnorm == 0.0:
        return x, 0.0, 0
    history = [np.sqrt(rs) / bnorm]
    for it in range(1, maxiter + 1):
        ap = apply_a(p)
        alpha = rs / float(np.sum(p * ap))
        x += alpha * p
        r -= alpha * ap
        if project is not None:
            x = project(x)
            r = project(r)
        rs_new = float(np.sum(r * r))
        rel = np.sqrt(rs_new) / bnorm
        history.append(rel)
        if rel <= tol:
            return x, rel, it
        p = r + (rs_new / rs) * p
        rs = rs_new
    raise SolverFailure(
        f"CG stalled at rel. residual {history[-1]:.3e} after {maxiter} iterations",
        residual_history=history,
    )


def poisson_dirichlet(f: ScalarField, tol: float = CG_TOL) -> PoissonSolution:
    """Solve Delta K = f with K = 0 on the boundary."""
    g = f.grid
    _require_square(g, "poisson_dirichlet")
    maxiter = CG_ITER_FACTOR * max(g.n1, g.n2)
    x, rel, it = _cg(
        lambda v: _neg_laplacian(v, g, "dirichlet"), -f.values, tol, maxiter
    )
    return PoissonSolution(ScalarField(g, x), rel, it)


def poisson_neumann(f: ScalarField, tol: float = CG_TOL) -> PoissonSolution:
    """Solve Delta K = f, dK/dnu = 0, with mean(K) = 0.

    Data with nonzero average violates the compatibility condition
    integral(f) = 0; the mean is then subtracted (with a warning) and the
    solve proceeds on the projected data.
    """
    g = f.grid
    _require_square(g, "poisson_neumann")
    w = g.cell_weights()
    area = float(np.sum(w))

    def project(v):
        return v - np.sum(w * v) / area

    mean = float(np.sum(w * f.values) / area)
    norm = f.l2()
    rhs = f.values
    if abs(mean) > 1e-10 * max(norm, 1e-300):
        warnings.warn(
            f"Poisson-Neumann data has mean {mean:.3e}; solving on f - mean",
            stacklevel=2,
        )
        rhs = f.values - mean
    maxiter = CG_ITER_FACTOR * max(g.n1, g.n2)
    x, rel, it = _cg(
        lambda v: _neg_laplacian(v, g, "neumann"), -rhs, tol, maxiter, project=project
    )
    return PoissonSolution(ScalarField(g, x), rel, it)


# ---------------------------------------------------------------------------
# cell gradients aware of the boundary condition (second order everywhere)
# ---------------------------------------------------------------------------


def _grad_cells_dirichlet(K: np.ndarray, grid: Grid):
    """Gradient at cells of a potential vanishing on the boundary."""
    g1 = np.empty_like(K)
    g2 = np.empty_like(K)
    h1, h2 = grid.h1, grid.h2
    g1[1:-1, :] = (K[2:, :] - K[:-2, :]) / (2 * h1)
    g1[0, :] = (K[1, :] + 3.0 * K[0, :]) / (3 * h1)  # quadratic through K(face)=0
    g1[-1, :] = -(K[-2, :] + 3.0 * K[-1, :]) / (3 * h1)
    g2[:, 1:-1] = (K[:, 2:] - K[:, :-2]) / (2 * h2)
    g2[:, 0] = (K[:, 1] + 3.0 * K[:, 0]) / (3 * h2)
    g2[:, -1] = -(K[:, -2] + 3.0 * K[:, -1]) / (3 * h2)
    return g1, g2


def _grad_cells_neumann(K: np.ndarray, grid: Grid):
    """Gradient at cells of a potential with zero normal flux."""
    g1 = np.empty_like(K)
    g2 = np.empty_like(K)
    h1, h2 = grid.h1, grid.h2
    g1[1:-1, :] = (K[2:, :] - K[:-2, :]) / (2 * h1)
    g1[0, :] = (K[1, :] - K[0, :]) / (2 * h1)  # quadratic with K'(face)=0
    g1[-1, :] = -(K[-2, :] - K[-1, :]) / (2 * h1)
    g2[:, 1:-1] = (K[:, 2:] - K[:, :-2]) / (2 * h2)
    g2[:, 0] = (K[:, 1] - K[:, 0]) / (2 * h2)
    g2[:, -1] = -(K[:, -2] - K[:, -1]) / (2 * h2)
    return g1, g2


# ---------------------------------------------------------------------------
# Helmholtz decomposition via a flux-form Neumann solve
# ---------------------------------------------------------------------------


@dataclass
class HelmholtzParts:
    f: ScalarField  # zero-mean potential
    g: VectorField  # solenoidal remainder, v = grad f + g by construction
    div_g_l2: float  # face-form discrete divergence of g
    solve: PoissonSolution


def _faces_from_cells(v1: np.ndarray, v2: np.ndarray, grid: Grid):
    """Normal components on faces; boundary faces take the quadratically
    extrapolated trace of the corresponding cell data."""
    n1, n2 = grid.shape
    fx = np.empty((n1 + 1, n2))
    fy = np.empty((n1, n2 + 1))
    fx[1:-1, :] = 0.5 * (v1[1:, :] + v1[:-1, :])
    fx[0, :] = edge_trace(v1, "x1lo")
    fx[-1, :] = edge_trace(v1, "x1hi")
    fy[:, 1:-1] = 0.5 * (v2[:, 1:] + v2[:, :-1])
    fy[:, 0] = edge_trace(v2, "x2lo")
    fy[:, -1] = edge_trace(v2, "x2hi")
    return fx, fy


def _div_faces(fx: np.ndarray, fy: np.ndarray, grid: Grid) -> np.ndarray:
    return (fx[1:, :] - fx[:-1, :]) / grid.h1 + (fy[:, 1:] - fy[:, :-1]) / grid.h2


def _grad_faces_zeroflux(K: np.ndarray, grid: Grid):
    n1, n2 = grid.shape
    fx = np.zeros((n1 + 1, n2))
    fy = np.zeros((n1, n2 + 1))
    fx[1:-1, :] = (K[1:, :] - K[:-1, :]) / grid.h1
    fy[:, 1:-1] = (K[:, 1:] - K[:, :-1]) / grid.h2
    return fx, fy


def helmholtz_decompose(v: VectorField, tol: float = CG_TOL) -> HelmholtzParts:
    """Unique splitting v = grad f + g with div g = 0 and mean(f) = 0.

    f solves the inhomogeneous-Neumann Poisson problem Delta f = div v,
    df/dnu = v.nu; the boundary flux is folded into the face stencil, so
    the face-form divergence of g vanishes to the CG tolerance exactly,
    not merely to O(h^2).
    """
    g = v.grid
    _require_square(g, "helmholtz_decompose")
    if v.basis != CARTESIAN:
        raise DomainError("helmholtz_decompose expects Cartesian components")
    vfx, vfy = _faces_from_cells(v.c1.values, v.c2.values, g)

    # boundary-flux injection: grad f on boundary faces is pinned to v.nu
    bx = np.zeros_like(vfx)
    by = np.zeros_like(vfy)
    bx[0, :], bx[-1, :] = vfx[0, :], vfx[-1, :]
    by[:, 0], by[:, -1] = vfy[:, 0], vfy[:, -1]

    rhs = _div_faces(vfx, vfy, g) - _div_faces(bx, by, g)
    w = g.cell_weights()
    area = float(np.sum(w))

    def project(x):
        return x - np.sum(w * x) / area

    def apply_a(x):
        fx, fy = _grad_faces_zeroflux(x, g)
        return -_div_faces(fx, fy, g)

    maxiter = CG_ITER_FACTOR * max(g.n1, g.n2)
    K, rel, it = _cg(apply_a, -rhs, tol, maxiter, project=project)
    sol = PoissonSolution(ScalarField(g, K), rel, it)

    gfx, gfy = _grad_faces_zeroflux(K, g)
    res_fx = vfx - (gfx + bx)
    res_fy = vfy - (gfy + by)
    div_g = _div_faces(res_fx, res_fy, g)
    div_g_l2 = float(np.sqrt(np.sum(w * div_g**2)))

    c1, c2 = _grad_cells_from_faces(gfx + bx, gfy + by)
    grad_f = VectorField.from_arrays(g, c1, c2, CARTESIAN)
    sol_part = VectorField.from_arrays(
        g, v.c1.values - c1, v.c2.values - c2, CARTESIAN
    )
    return HelmholtzParts(sol.potential, sol_part, div_g_l2, sol)


def _grad_cells_from_faces(fx: np.ndarray, fy: np.ndarray):
    return 0.5 * (fx[1:, :] + fx[:-1, :]), 0.5 * (fy[:, 1:] + fy[:, :-1])


# ---------------------------------------------------------------------------
# div-curl reconstruction
# ---------------------------------------------------------------------------


def div_curl_solve(v1: ScalarField, v2: ScalarField, tol: float = CG_TOL) -> VectorField:
    """Unique tangential field with div u = v1 - avg(v1) and curl u = v2.

    u = perp-grad K1 + grad K2 where K1 solves the Dirichlet problem for
    v2 and K2 the Neumann problem for the mean-free part of v1 (the
    average operator removes the solvability obstruction).
    """
    g = v1.grid
    _require_square(g, "div_curl_solve")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # the mean of v1 is removed by contract
        k2 = poisson_neumann(v1, tol=tol)
    k1 = poisson_dirichlet(v2, tol=tol)
    d1, d2 = _grad_cells_dirichlet(k1.potential.values, g)
    n1, n2 = _grad_cells_neumann(k2.potential.values, g)
    # perp-grad K1 = (-d2 K1, d1 K1)
    return VectorField.from_arrays(g, -d2 + n1, d1 + n2, CARTESIAN)


# ---------------------------------------------------------------------------
# Hodge-bound probe
# ---------------------------------------------------------------------------

HODGE_FLOOR = 1e-14


def hodge_ratio(
    X: VectorField,
    s: int,
    enforce_trace: bool = True,
    trace_tol: float | None = None,
) -> float:
    """||X||_s / (||div X||_{s-1} + ||curl X||_{s-1}), floored denominator.

    For corner angles below pi/s the ratio stays bounded under
    refinement; above the threshold it grows, which is the computational
    face of the angle condition.
    """
    if s not in (1, 2):
        raise DomainError("hodge_ratio supports s in {1, 2}")
    g = X.grid
    if enforce_trace:
        h = max(g.h1, g.h2)
        if trace_tol is None:
            a, b = X.cartesian_components()
            scale = max(float(np.max(np.hypot(a, b))), 1e-300)
            trace_tol = 50.0 * h * h * scale
        worst = max_normal_trace(X)
        if worst > trace_tol:
            raise PreconditionError(
                f"X.nu = {worst:.3e} exceeds tolerance {trace_tol:.3e}"
            )
    num = sobolev_norm(X, s)
    den = sobolev_norm(divergence(X), s - 1) + sobolev_norm(curl2d(X), s - 1)
    if num == 0.0:
        return 0.0
    return num / max(den, HODGE_FLOOR)
