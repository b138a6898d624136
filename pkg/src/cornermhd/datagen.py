"""Built-in data generators: manufactured solutions, acoustic standing
waves, and seeded random smooth fields.

Manufactured states are built from pure trigonometric modes whose parity
about every edge matches the solver's ghost reflection exactly (stream
functions from sine modes, scalars from cosine modes), so boundary
closures introduce no extra error and convergence studies measure the
interior scheme.  Sources are computed symbolically from the linearized
system and lambdified.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import sympy as sp

from .eos import EosModel
from .fields import CARTESIAN, POLAR, ScalarField, VectorField
from .geometry import Grid
from .linear import (
    Background,
    BackgroundSlice,
    SourceSlice,
    SourceTerm,
    State,
    TOTAL_PRESSURE,
)

_T, _X, _Y = sp.symbols("t x1 x2", real=True)


def _lamb(expr):
    f = sp.lambdify((_T, _X, _Y), expr, "numpy")

    def call(t, X, Y):
        return np.broadcast_to(np.asarray(f(t, X, Y), float), X.shape).copy()

    return call


def _perp_grad(psi):
    return [-sp.diff(psi, _Y), sp.diff(psi, _X)]


def _sine_stream(rng, modes, amp):
    expr = sp.Integer(0)
    for i in range(1, modes + 1):
        for j in range(1, modes + 1):
            c = rng.uniform(-1.0, 1.0) * amp / (i * j)
            expr += c * sp.sin(i * sp.pi * _X) * sp.sin(j * sp.pi * _Y)
    return expr


def _cos_modes(rng, modes, amp):
    expr = sp.Integer(0)
    for i in range(modes + 1):
        for j in range(modes + 1):
            if i == j == 0:
                continue
            c = rng.uniform(-1.0, 1.0) * amp / (1 + i * j)
            expr += c * sp.cos(i * sp.pi * _X) * sp.cos(j * sp.pi * _Y)
    return expr


@dataclass
class ManufacturedCase:
    """Symbolic exact solution z*, background Z and matching source F for
    the linearized system on the unit square."""

    z_exprs: list  # [u1, u2, b1, b2, p_total, s]
    Z_exprs: list  # [U1, U2, B1, B2, P, S]
    F_exprs: list  # [F11, F12, F21, F22, F3, F4]

    def __post_init__(self):
        self._z = [_lamb(e) for e in self.z_exprs]
        self._Z = [_lamb(e) for e in self.Z_exprs]
        self._F = [_lamb(e) for e in self.F_exprs]

    def exact_state(self, grid: Grid, t: float) -> State:
        X, Y = grid.mesh()
        v = [f(t, X, Y) for f in self._z]
        return State(
            VectorField.from_arrays(grid, v[0], v[1], CARTESIAN),
            VectorField.from_arrays(grid, v[2], v[3], CARTESIAN),
            ScalarField(grid, v[4]),
            TOTAL_PRESSURE,
            ScalarField(grid, v[5]),
        )

    def background(self, grid: Grid) -> Background:
        X, Y = grid.mesh()

        def sampler(t: float) -> BackgroundSlice:
            v = [f(t, X, Y) for f in self._Z]
            return BackgroundSlice(
                VectorField.from_arrays(grid, v[0], v[1], CARTESIAN),
                VectorField.from_arrays(grid, v[2], v[3], CARTESIAN),
                ScalarField(grid, v[4]),
                ScalarField(grid, v[5]),
            )

        return Background(sampler)

    def source(self, grid: Grid) -> SourceTerm:
        X, Y = grid.mesh()

        def sampler(t: float) -> SourceSlice:
            v = [f(t, X, Y) for f in self._F]
            return SourceSlice(
                VectorField.from_arrays(grid, v[0], v[1], CARTESIAN),
                VectorField.from_arrays(grid, v[2], v[3], CARTESIAN),
                ScalarField(grid, v[4]),
                ScalarField(grid, v[5]),
            )

        return SourceTerm(sampler)


def _linear_source_exprs(z, Z, eos: EosModel):
    """F = (L + B)(Z) z* computed symbolically (curvature term is zero on
    the square's flat legs)."""
    u = z[0:2]
    b = z[2:4]
    p, s = z[4], z[5]
    U, B = Z[0:2], Z[2:4]
    P, S = Z[4], Z[5]
    if eos.kind == "ideal_gas":
        g = sp.Float(eos.gamma)
        R = P ** (1 / g) * sp.exp(-S / g)
        Q = g * P
    else:
        R = 1 + eos.epsilon * P
        Q = R / eos.epsilon

    def Dt(f):
        return sp.diff(f, _T) + U[0] * sp.diff(f, _X) + U[1] * sp.diff(f, _Y)

    def advB(f):
        return B[0] * sp.diff(f, _X) + B[1] * sp.diff(f, _Y)

    divu = sp.diff(u[0], _X) + sp.diff(u[1], _Y)
    F1 = [R * Dt(u[i]) + sp.diff(p, (_X, _Y)[i]) - advB(b[i]) for i in range(2)]
    F2 = [Dt(b[i]) - advB(u[i]) + B[i] * divu for i in range(2)]
    F3 = Dt(p) / Q - (B[0] * Dt(b[0]) + B[1] * Dt(b[1])) / Q + divu
    F4 = Dt(s)
    return [F1[0], F1[1], F2[0], F2[1], F3, F4]


def manufactured_linear_case(
    eos: EosModel,
    seed: int = 1234,
    amplitude: float = 0.1,
    background_amplitude: float = 0.3,
    p_base: float = 1.0,
) -> ManufacturedCase:
    """Smooth manufactured solution with a variable smooth background.

    Velocities and magnetic fields (state and background) come from sine
    stream functions, so they are tangential on every edge; scalars come
    from cosine modes, so their normal derivatives vanish at the walls.
    """
    rng = np.random.default_rng(seed)
    tt = 1 + sp.sin(_T) / 2
    ts = 1 + sp.cos(2 * _T) / 3
    u = [tt * e for e in _perp_grad(_sine_stream(rng, 2, amplitude))]
    b = [ts * e for e in _perp_grad(_sine_stream(rng, 2, amplitude))]
    p = amplitude * tt * sp.cos(sp.pi * _X) * sp.cos(sp.pi * _Y) + amplitude / 2 * ts * sp.cos(
        2 * sp.pi * _X
    )
    s = amplitude * ts * sp.cos(sp.pi * _Y) * sp.cos(sp.pi * _X)
    U = [(1 + sp.sin(_T) / 4) * e for e in _perp_grad(_sine_stream(rng, 2, background_amplitude))]
    B = [(1 + sp.cos(_T) / 4) * e for e in _perp_grad(_sine_stream(rng, 2, background_amplitude))]
    P = sp.Float(p_base) + background_amplitude / 2 * sp.cos(sp.pi * _X) * sp.cos(sp.pi * _Y) * (
        1 + sp.sin(_T) / 5
    )
    S = background_amplitude / 3 * sp.cos(sp.pi * _X) * (1 + sp.cos(_T) / 5)
    z = [u[0], u[1], b[0], b[1], p, s]
    Z = [U[0], U[1], B[0], B[1], P, S]
    return ManufacturedCase(z, Z, _linear_source_exprs(z, Z, eos))


def standing_wave_case(eos: EosModel, P0: float = 1.0, S0: float = 0.0) -> ManufacturedCase:
    """Exact acoustic standing wave about the constant background
    (U = B = 0, P = P0, S = S0): sources vanish, u stays tangential, and
    the mode oscillates at frequency sqrt(2) pi sqrt(Q0/R0)."""
    R0, _, Q0 = eos.eval_arrays(np.float64(P0), np.float64(S0))
    c = sp.sqrt(sp.Float(float(Q0)) / sp.Float(float(R0)))
    om = sp.sqrt(2) * sp.pi * c
    p = sp.cos(om * _T) * sp.cos(sp.pi * _X) * sp.cos(sp.pi * _Y)
    amp = sp.pi / (sp.Float(float(R0)) * om)
    u1 = amp * sp.sin(om * _T) * sp.sin(sp.pi * _X) * sp.cos(sp.pi * _Y)
    u2 = amp * sp.sin(om * _T) * sp.cos(sp.pi * _X) * sp.sin(sp.pi * _Y)
    zero = sp.Integer(0)
    z = [u1, u2, zero, zero, p, zero]
    Z = [zero, zero, zero, zero, sp.Float(P0), sp.Float(S0)]
    F = [zero] * 6
    return ManufacturedCase(z, Z, F)


def random_smooth_state(
    grid: Grid,
    seed: int,
    amplitude: float = 1e-2,
    p_base: float = 1.0,
    modes: int = 2,
) -> State:
    """Seeded smooth state (physical pressure) satisfying the order-0/1
    compatibility conditions exactly: u, b tangential divergence-free,
    p and s cosine modes with vanishing wall-normal derivatives."""
    rng = np.random.default_rng(seed)
    u = _perp_grad(_sine_stream(rng, modes, amplitude))
    b = _perp_grad(_sine_stream(rng, modes, amplitude))
    p = sp.Float(p_base) + _cos_modes(rng, modes, amplitude)
    s = _cos_modes(rng, modes, amplitude)
    X, Y = grid.mesh()
    ev = lambda e: _lamb(e)(0.0, X, Y)
    from .linear import PHYSICAL_P

    return State(
        VectorField.from_arrays(grid, ev(u[0]), ev(u[1]), CARTESIAN),
        VectorField.from_arrays(grid, ev(b[0]), ev(b[1]), CARTESIAN),
        ScalarField(grid, ev(p)),
        PHYSICAL_P,
        ScalarField(grid, ev(s)),
    )


# ---------------------------------------------------------------------------
# tangential test fields for the Hodge probe
# ---------------------------------------------------------------------------


def random_tangential_field(grid: Grid, seed: int, modes: int = 2) -> VectorField:
    """Seeded smooth field tangent to the whole boundary.

    Square: perp-gradient of a boundary-vanishing stream plus a gradient
    part with zero wall-normal derivative.  Sector: perp-gradient of a
    stream vanishing on both legs and the arc.
    """
    rng = np.random.default_rng(seed)
    if grid.is_square:
        psi = _sine_stream(rng, modes, 1.0)
        phi = _cos_modes(rng, modes, 0.5)
        vx = -sp.diff(psi, _Y) + sp.diff(phi, _X)
        vy = sp.diff(psi, _X) + sp.diff(phi, _Y)
        X, Y = grid.mesh()
        return VectorField.from_arrays(
            grid, _lamb(vx)(0.0, X, Y), _lamb(vy)(0.0, X, Y), CARTESIAN
        )
    om = grid.domain.omega
    r0 = grid.domain.r0
    # boundary-vanishing stream in Cartesian coordinates:
    # x2 * (sin(om) x1 - cos(om) x2) * (r0^2 - r^2) * polynomial
    l1 = _Y
    l2 = sp.sin(om) * _X - sp.cos(om) * _Y
    l3 = r0**2 - _X**2 - _Y**2
    poly = sum(
        rng.uniform(-1.0, 1.0) * _X**i * _Y**j / (1 + i + j)
        for i in range(modes + 1)
        for j in range(modes + 1)
    )
    psi = l1 * l2 * l3 * poly
    vx = -sp.diff(psi, _Y)
    vy = sp.diff(psi, _X)
    fx, fy = _lamb(vx), _lamb(vy)
    Rm, TH = grid.mesh()
    X, Y = Rm * np.cos(TH), Rm * np.sin(TH)
    cx, cy = fx(0.0, X, Y), fy(0.0, X, Y)
    vr = cx * np.cos(TH) + cy * np.sin(TH)
    vt = -cx * np.sin(TH) + cy * np.cos(TH)
    return VectorField.from_arrays(grid, vr, vt, POLAR)


def smoothstep_cutoff(r: np.ndarray, r_on: float, r_off: float) -> np.ndarray:
    """C^1 radial cutoff: 1 below r_on, 0 above r_off."""
    t = np.clip((r - r_on) / (r_off - r_on), 0.0, 1.0)
    return 1.0 - t * t * (3.0 - 2.0 * t)


def singular_gradient_probe(grid: Grid) -> VectorField:
    """Tangential probe field for the Hodge bound above the angle
    threshold: grad(r^a cos(a theta)) with a = pi/omega, cut off smoothly
    before the arc so the trace condition holds on the whole boundary."""
    om = grid.domain.omega
    a = np.pi / om
    Rm, TH = grid.mesh()
    chi = smoothstep_cutoff(Rm, 0.4 * grid.domain.r0, 0.8 * grid.domain.r0)
    vr = a * Rm ** (a - 1.0) * np.cos(a * TH) * chi
    vt = -a * Rm ** (a - 1.0) * np.sin(a * TH) * chi
    return VectorField.from_arrays(grid, vr, vt, POLAR)
