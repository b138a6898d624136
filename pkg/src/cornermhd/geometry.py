"""Model corner domains, structured grids, and boundary geometry.

Two domain families are supported: axis-aligned squares (0, delta)^2 and
circular sectors {0 < r < r0, 0 < theta < omega} with a convex opening
angle omega in (0, pi).  Grids are cell-centered so that no sample point
ever lies on the boundary or at the corner.

The module also provides the boundary-adapted objects used by the norm
and solver machinery: the tangential frame w1 = (x1(1 - x1/delta), 0),
w2 = (0, x2(1 - x2/delta)) on squares, smooth boundary-distance pairs
(Phi1, Phi2) near a corner, and the 2x2 curvature matrices h1, h2 defined
by (h^i)^t nu_l = d_i nu_l for nu_l = -grad Phi_l.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import sympy as sp

from .errors import DomainError, SingularGeometryError

SQUARE = "square"
SECTOR = "sector"

SQUARE_FACES = ("x1lo", "x1hi", "x2lo", "x2hi")
SECTOR_FACES = ("leg0", "leg1", "arc")


@dataclass(frozen=True)
class DomainSpec:
    """Model domain: a square of side ``delta`` or a sector (omega, r0)."""

    kind: str
    delta: float = 1.0
    omega: float = 0.0
    r0: float = 1.0

    def __post_init__(self):
        if self.kind == SQUARE:
            if not self.delta > 0.0:
                raise DomainError(f"square side must be positive, got {self.delta}")
        elif self.kind == SECTOR:
            if not 0.0 < self.omega < np.pi:
                raise DomainError(
                    f"sector angle must lie in (0, pi) (convex corner), got {self.omega}"
                )
            if not self.r0 > 0.0:
                raise DomainError(f"sector radius must be positive, got {self.r0}")
        else:
            raise DomainError(f"unknown domain kind {self.kind!r}")

    @staticmethod
    def square(delta: float = 1.0) -> "DomainSpec":
        return DomainSpec(SQUARE, delta=delta)

    @staticmethod
    def sector(omega: float, r0: float = 1.0) -> "DomainSpec":
        return DomainSpec(SECTOR, omega=omega, r0=r0)

    @property
    def faces(self) -> tuple[str, ...]:
        return SQUARE_FACES if self.kind == SQUARE else SECTOR_FACES


@dataclass(frozen=True)
class Grid:
    """Cell-centered structured grid on a DomainSpec.

    Axis 0 runs over x1 (or r), axis 1 over x2 (or theta).  ``c1``/``c2``
    are the 1-d center coordinates, ``h1``/``h2`` the uniform spacings.
    """

    domain: DomainSpec
    n1: int
    n2: int
    h1: float
    h2: float
    c1: np.ndarray = field(repr=False)
    c2: np.ndarray = field(repr=False)

    @property
    def is_square(self) -> bool:
        return self.domain.kind == SQUARE

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n1, self.n2)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Coordinate arrays of shape (n1, n2): (x1, x2) or (r, theta)."""
        return np.meshgrid(self.c1, self.c2, indexing="ij")

    def mesh_cartesian(self) -> tuple[np.ndarray, np.ndarray]:
        a, b = self.mesh()
        if self.is_square:
            return a, b
        return a * np.cos(b), a * np.sin(b)

    def cell_weights(self) -> np.ndarray:
        """Midpoint-rule quadrature weight per cell, shape (n1, n2)."""
        if self.is_square:
            return np.full(self.shape, self.h1 * self.h2)
        # polar measure r dr dtheta
        return np.broadcast_to(
            (self.c1 * self.h1 * self.h2)[:, None], self.shape
        ).copy()

    @property
    def area(self) -> float:
        if self.is_square:
            return self.domain.delta**2
        return 0.5 * self.domain.omega * self.domain.r0**2


def make_grid(spec: DomainSpec, n1: int, n2: int) -> Grid:
    """Cell-centered grid with n1 x n2 cells covering the domain."""
    if n1 < 4 or n2 < 4:
        raise DomainError(f"grid needs at least 4 cells per direction, got {n1}x{n2}")
    if spec.kind == SQUARE:
        h1 = spec.delta / n1
        h2 = spec.delta / n2
    else:
        h1 = spec.r0 / n1
        h2 = spec.omega / n2
    c1 = (np.arange(n1) + 0.5) * h1
    c2 = (np.arange(n2) + 0.5) * h2
    return Grid(spec, n1, n2, h1, h2, c1, c2)


def boundary_normal(grid: Grid, face: str, index: int) -> np.ndarray:
    """Outward unit normal (Cartesian components) at the face point
    adjacent to the ``index``-th cell along the face."""
    dom = grid.domain
    if dom.kind == SQUARE:
        if face == "x1lo":
            return np.array([-1.0, 0.0])
        if face == "x1hi":
            return np.array([1.0, 0.0])
        if face == "x2lo":
            return np.array([0.0, -1.0])
        if face == "x2hi":
            return np.array([0.0, 1.0])
        raise DomainError(f"unknown square face {face!r}")
    if face == "leg0":
        # theta = 0 leg: outward normal is -e_theta at theta = 0
        return np.array([0.0, -1.0])
    if face == "leg1":
        w = dom.omega
        return np.array([-np.sin(w), np.cos(w)])
    if face == "arc":
        th = grid.c2[index]
        return np.array([np.cos(th), np.sin(th)])
    raise DomainError(f"unknown sector face {face!r}")


class AnalyticScalar:
    """Scalar function of (x1, x2) with analytic gradient and Hessian."""

    def __init__(self, value: Callable, grad: Callable, hess: Callable):
        self.value = value
        self.grad = grad
        self.hess = hess

    @staticmethod
    def from_sympy(expr: sp.Expr, xy=None) -> "AnalyticScalar":
        if xy is None:
            xy = sp.symbols("x1 x2")
        x1, x2 = xy
        g = [sp.diff(expr, x1), sp.diff(expr, x2)]
        H = [[sp.diff(gi, v) for v in (x1, x2)] for gi in g]
        fv = sp.lambdify((x1, x2), expr, "numpy")
        fg = sp.lambdify((x1, x2), g, "numpy")
        fh = sp.lambdify((x1, x2), H, "numpy")

        def value(a, b):
            return np.asarray(fv(a, b), dtype=float)

        def grad(a, b):
            return np.asarray(fg(a, b), dtype=float)

        def hess(a, b):
            return np.asarray(fh(a, b), dtype=float)

        return AnalyticScalar(value, grad, hess)


@dataclass
class PhiPair:
    """Smooth extensions of the distances to the two legs of a corner.

    Both legs must be transversal where evaluated: the gradients of phi1
    and phi2 may never be parallel.
    """

    phi1: AnalyticScalar
    phi2: AnalyticScalar

    @staticmethod
    def flat_corner() -> "PhiPair":
        """The square corner at the origin: Phi1 = x1, Phi2 = x2."""
        x1, x2 = sp.symbols("x1 x2")
        return PhiPair(
            AnalyticScalar.from_sympy(x1, (x1, x2)),
            AnalyticScalar.from_sympy(x2, (x1, x2)),
        )

    @staticmethod
    def from_sympy(e1: sp.Expr, e2: sp.Expr, xy=None) -> "PhiPair":
        if xy is None:
            xy = sp.symbols("x1 x2")
        return PhiPair(
            AnalyticScalar.from_sympy(e1, xy), AnalyticScalar.from_sympy(e2, xy)
        )


def h_matrices(phi: PhiPair, point) -> tuple[np.ndarray, np.ndarray]:
    """Curvature matrices h1, h2 at ``point`` satisfying
    (h^i)^t (-grad Phi_l) = d_i (-grad Phi_l) for l = 1, 2.

    Closed form in terms of first and second derivatives of the pair;
    for flat legs both matrices vanish identically.
    """
    a, b = float(point[0]), float(point[1])
    g1 = phi.phi1.grad(a, b)
    g2 = phi.phi2.grad(a, b)
    H1 = phi.phi1.hess(a, b)
    H2 = phi.phi2.hess(a, b)
    det = g1[0] * g2[1] - g2[0] * g1[1]
    scale = max(np.hypot(*g1) * np.hypot(*g2), 1e-300)
    if abs(det) < 1e-12 * scale:
        raise SingularGeometryError(
            f"grad Phi1 x grad Phi2 = {det:.3e} is degenerate at {point}"
        )
    h1 = np.empty((2, 2))
    h2 = np.empty((2, 2))
    for j in range(2):  # column j holds the d_1 d_j / d_2 d_j blocks
        h1[0, j] = g2[1] * H1[0, j] - g1[1] * H2[0, j]
        h1[1, j] = -g2[0] * H1[0, j] + g1[0] * H2[0, j]
        h2[0, j] = g2[1] * H1[1, j] - g1[1] * H2[1, j]
        h2[1, j] = -g2[0] * H1[1, j] + g1[0] * H2[1, j]
    return h1 / det, h2 / det


@dataclass
class TangentialFrame:
    """Global tangential vector fields w1, w2 on a square domain.

    w1 = (x1 (1 - x1/delta), 0) and w2 = (0, x2 (1 - x2/delta)); both are
    tangent to every edge and degenerate linearly at the corners, matching
    the local corner frame (x1, 0), (0, x2) up to smooth positive factors.
    """

    grid: Grid
    w1: np.ndarray  # shape (2, n1, n2)
    w2: np.ndarray

    def w1_at(self, x1, x2):
        d = self.grid.domain.delta
        return np.array([x1 * (1.0 - x1 / d), 0.0 * x2])

    def w2_at(self, x1, x2):
        d = self.grid.domain.delta
        return np.array([0.0 * x1, x2 * (1.0 - x2 / d)])


def tangential_frame(grid: Grid) -> TangentialFrame:
    """The square's global frame sampled at the cell centers."""
    if not grid.is_square:
        raise DomainError("tangential frames are only provided on square domains")
    d = grid.domain.delta
    X1, X2 = grid.mesh()
    z = np.zeros(grid.shape)
    w1 = np.stack([X1 * (1.0 - X1 / d), z])
    w2 = np.stack([z, X2 * (1.0 - X2 / d)])
    return TangentialFrame(grid, w1, w2)
