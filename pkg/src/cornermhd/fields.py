"""Sampled scalar and vector fields on a structured grid.

Fields hold plain float arrays of shape (n1, n2).  Vector fields carry a
basis tag: Cartesian components on squares, polar components (e_r,
e_theta) on sectors unless explicitly converted.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import Grid

CARTESIAN = "cartesian"
POLAR = "polar"


@dataclass
class ScalarField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise ValueError(
                f"values shape {self.values.shape} != grid shape {self.grid.shape}"
            )

    @staticmethod
    def zeros(grid: Grid) -> "ScalarField":
        return ScalarField(grid, np.zeros(grid.shape))

    @staticmethod
    def constant(grid: Grid, c: float) -> "ScalarField":
        return ScalarField(grid, np.full(grid.shape, float(c)))

    @staticmethod
    def from_function(grid: Grid, f) -> "ScalarField":
        """Sample f(a, b) at cell centers; (a, b) = (x1, x2) or (r, theta)."""
        A, B = grid.mesh()
        return ScalarField(grid, np.broadcast_to(np.asarray(f(A, B), float), grid.shape).copy())

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.copy())

    def l2(self) -> float:
        w = self.grid.cell_weights()
        return float(np.sqrt(np.sum(w * self.values**2)))

    def mean(self) -> float:
        w = self.grid.cell_weights()
        return float(np.sum(w * self.values) / np.sum(w))

    def __add__(self, other):
        return ScalarField(self.grid, self.values + other.values)

    def __sub__(self, other):
        return ScalarField(self.grid, self.values - other.values)

    def __mul__(self, c: float):
        return ScalarField(self.grid, self.values * c)

    __rmul__ = __mul__


@dataclass
class VectorField:
    c1: ScalarField
    c2: ScalarField
    basis: str = CARTESIAN

    def __post_init__(self):
        if self.c1.grid is not self.c2.grid and self.c1.grid != self.c2.grid:
            raise ValueError("vector components must share one grid")

    @property
    def grid(self) -> Grid:
        return self.c1.grid

    @staticmethod
    def zeros(grid: Grid, basis: str = CARTESIAN) -> "VectorField":
        return VectorField(ScalarField.zeros(grid), ScalarField.zeros(grid), basis)

    @staticmethod
    def from_functions(grid: Grid, f1, f2, basis: str = CARTESIAN) -> "VectorField":
        return VectorField(
            ScalarField.from_function(grid, f1),
            ScalarField.from_function(grid, f2),
            basis,
        )

    @staticmethod
    def from_arrays(grid: Grid, v1, v2, basis: str = CARTESIAN) -> "VectorField":
        return VectorField(ScalarField(grid, v1), ScalarField(grid, v2), basis)

    def copy(self) -> "VectorField":
        return VectorField(self.c1.copy(), self.c2.copy(), self.basis)

    def cartesian_components(self) -> tuple[np.ndarray, np.ndarray]:
        """Component arrays in the Cartesian basis."""
        if self.basis == CARTESIAN:
            return self.c1.values, self.c2.values
        _, TH = self.grid.mesh()
        ct, st = np.cos(TH), np.sin(TH)
        vr, vt = self.c1.values, self.c2.values
        return vr * ct - vt * st, vr * st + vt * ct

    def magnitude(self) -> ScalarField:
        return ScalarField(
            self.grid, np.hypot(self.c1.values, self.c2.values)
        )

    def l2(self) -> float:
        w = self.grid.cell_weights()
        return float(np.sqrt(np.sum(w * (self.c1.values**2 + self.c2.values**2))))

    def __add__(self, other):
        assert self.basis == other.basis
        return VectorField(self.c1 + other.c1, self.c2 + other.c2, self.basis)

    def __sub__(self, other):
        assert self.basis == other.basis
        return VectorField(self.c1 - other.c1, self.c2 - other.c2, self.basis)

    def __mul__(self, c: float):
        return VectorField(self.c1 * c, self.c2 * c, self.basis)

    __rmul__ = __mul__


@dataclass
class NormReport:
    """Norm values, optional refinement series, and fitted growth rates.

    ``series[label]`` is a list of (grid_n, value) pairs ordered by
    increasing grid_n; a growth rate (mean log2 of successive ratios per
    2x refinement) is fitted once a series holds at least 3 entries.
    """

    values: dict = field(default_factory=dict)
    series: dict = field(default_factory=dict)

    def add(self, label: str, value: float, grid_n: int | None = None):
        if value < 0:
            raise ValueError("norm values must be nonnegative")
        self.values[label] = float(value)
        if grid_n is not None:
            self.series.setdefault(label, []).append((int(grid_n), float(value)))

    def growth_rate(self, label: str) -> float:
        """Mean log2(value ratio) per successive refinement of the series."""
        pts = sorted(self.series.get(label, []))
        if len(pts) < 3:
            raise ValueError("growth rate needs at least 3 refinements")
        rates = []
        for (n0, v0), (n1, v1) in zip(pts, pts[1:]):
            if v0 <= 0:
                raise ValueError("growth rate needs positive norm values")
            rates.append(np.log2(v1 / v0) / np.log2(n1 / n0))
        return float(np.mean(rates))

    def to_csv(self, path, header_lines=()):
        rows = []
        for label, pts in sorted(self.series.items()):
            for n, v in sorted(pts):
                rows.append((label, n, v))
            if len(pts) >= 3:
                rows.append((label + ".rate", "", self.growth_rate(label)))
        for label in sorted(set(self.values) - set(self.series)):
            rows.append((label, "", self.values[label]))
        from .report import write_csv

        write_csv(path, ("label", "grid_n", "value"), rows, header_lines)
