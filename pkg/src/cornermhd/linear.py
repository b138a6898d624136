"""Linearized ideal-MHD initial-boundary-value solver on the square.

State vector z = (u1, u2, b1, b2, p, s) with p the *total* pressure.  The
system about a background Z = (U, B, P, S):

    R (d_t u + U.grad u) + grad p - B.grad b            = F1
    d_t b + U.grad b - B.grad u + B (div u) + [h-term]  = F2
    (1/Q)(d_t p + U.grad p) - (1/Q) B.(d_t b + U.grad b) + div u = F3
    d_t s + U.grad s                                    = F4

with wall condition u.nu = 0.  On the square the legs are flat, so the
zero-order curvature correction vanishes identically; the coefficient
assembly below still exposes it for testing against the geometry module.

Spatial discretization: centered second-order differences with ghost
cells filled by parity reflection (normal components odd, tangential and
scalar components even), optional fourth-difference artificial
dissipation.  Time integration: three-stage SSP Runge-Kutta under a CFL
bound from the characteristic-speed estimate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import calculus as calc
from .calculus import _d1
from .eos import EosModel
from .errors import DomainError, NumericalError, PreconditionError
from .fields import CARTESIAN, ScalarField, VectorField
from .geometry import Grid

TOTAL_PRESSURE = "total_pressure"
PHYSICAL_P = "physical_p"

# component order (u1, u2, b1, b2, p, s); odd-parity components per axis
_ODD_AXIS0 = (0, 2)
_ODD_AXIS1 = (1, 3)
NCOMP = 6


# ---------------------------------------------------------------------------
# containers
# ---------------------------------------------------------------------------


@dataclass
class State:
    u: VectorField
    b: VectorField
    pvar: ScalarField
    pvar_kind: str
    s: ScalarField

    def __post_init__(self):
        if self.pvar_kind not in (TOTAL_PRESSURE, PHYSICAL_P):
            raise DomainError(f"unknown pressure kind {self.pvar_kind!r}")

    @property
    def grid(self) -> Grid:
        return self.u.grid

    def stack(self) -> np.ndarray:
        return np.stack(
            [
                self.u.c1.values,
                self.u.c2.values,
                self.b.c1.values,
                self.b.c2.values,
                self.pvar.values,
                self.s.values,
            ]
        )

    @staticmethod
    def from_stack(grid: Grid, arr: np.ndarray, pvar_kind: str) -> "State":
        return State(
            VectorField.from_arrays(grid, arr[0].copy(), arr[1].copy(), CARTESIAN),
            VectorField.from_arrays(grid, arr[2].copy(), arr[3].copy(), CARTESIAN),
            ScalarField(grid, arr[4].copy()),
            pvar_kind,
            ScalarField(grid, arr[5].copy()),
        )

    @staticmethod
    def zeros(grid: Grid, pvar_kind: str = TOTAL_PRESSURE) -> "State":
        return State.from_stack(grid, np.zeros((NCOMP,) + grid.shape), pvar_kind)

    def copy(self) -> "State":
        return State.from_stack(self.grid, self.stack(), self.pvar_kind)


@dataclass
class BackgroundSlice:
    U: VectorField
    B: VectorField
    P: ScalarField
    S: ScalarField

    @property
    def grid(self) -> Grid:
        return self.U.grid

    def max_tangency_defect(self) -> float:
        return max(calc.max_normal_trace(self.U), calc.max_normal_trace(self.B))


class Background:
    """Static coefficients or a time-indexed family Z(t)."""

    def __init__(self, sampler: Callable[[float], BackgroundSlice]):
        self._sampler = sampler
        self._cache_t: float | None = None
        self._cache: BackgroundSlice | None = None

    @staticmethod
    def static(U: VectorField, B: VectorField, P: ScalarField, S: ScalarField) -> "Background":
        sl = BackgroundSlice(U, B, P, S)
        return Background(lambda t: sl)

    @staticmethod
    def constant(grid: Grid, P: float, S: float = 0.0) -> "Background":
        """Constant state; tangency forces U = B = 0 on the square."""
        return Background.static(
            VectorField.zeros(grid),
            VectorField.zeros(grid),
            ScalarField.constant(grid, P),
            ScalarField.constant(grid, S),
        )

    @staticmethod
    def from_trajectory(grid: Grid, times: np.ndarray, stacks: np.ndarray) -> "Background":
        """Piecewise-linear interpolation in t of stored physical-pressure
        snapshots (u, b, p, s); used by the fixed-point iteration."""
        times = np.asarray(times, float)

        def sampler(t: float) -> BackgroundSlice:
            k = int(np.clip(np.searchsorted(times, t, side="right") - 1, 0, len(times) - 2))
            t0, t1 = times[k], times[k + 1]
            w = 0.0 if t1 == t0 else np.clip((t - t0) / (t1 - t0), 0.0, 1.0)
            arr = (1.0 - w) * stacks[k] + w * stacks[k + 1]
            return BackgroundSlice(
                VectorField.from_arrays(grid, arr[0], arr[1], CARTESIAN),
                VectorField.from_arrays(grid, arr[2], arr[3], CARTESIAN),
                ScalarField(grid, arr[4]),
                ScalarField(grid, arr[5]),
            )

        return Background(sampler)

    def sample(self, t: float) -> BackgroundSlice:
        if self._cache_t is not None and t == self._cache_t:
            return self._cache
        sl = self._sampler(t)
        self._cache_t, self._cache = t, sl
        return sl


@dataclass
class SourceSlice:
    F1: VectorField
    F2: VectorField
    F3: ScalarField
    F4: ScalarField


class SourceTerm:
    def __init__(self, sampler: Callable[[float], SourceSlice]):
        self._sampler = sampler

    @staticmethod
    def zero(grid: Grid) -> "SourceTerm":
        sl = SourceSlice(
            VectorField.zeros(grid),
            VectorField.zeros(grid),
            ScalarField.zeros(grid),
            ScalarField.zeros(grid),
        )
        return SourceTerm(lambda t: sl)

    def sample(self, t: float) -> SourceSlice:
        return self._sampler(t)


# ---------------------------------------------------------------------------
# coefficient assembly and the symmetrizer
# ---------------------------------------------------------------------------


@dataclass
class CoeffBundle:
    A0: np.ndarray
    A1: np.ndarray
    A2: np.ndarray
    S0: np.ndarray
    S0A0: np.ndarray
    S0A1: np.ndarray
    S0A2: np.ndarray
    bterm_h: tuple | None = None  # (h1, h2) matrices where supplied


def coefficient_matrices(U1, U2, B1, B2, R, Q) -> tuple[np.ndarray, ...]:
    """A0, A1, A2, S0 as (..., 6, 6) arrays from pointwise background data."""
    U1, U2, B1, B2, R, Q = np.broadcast_arrays(
        *(np.asarray(a, float) for a in (U1, U2, B1, B2, R, Q))
    )
    shape = U1.shape + (NCOMP, NCOMP)
    A0 = np.zeros(shape)
    A1 = np.zeros(shape)
    A2 = np.zeros(shape)
    S0 = np.zeros(shape)

    A0[..., 0, 0] = R
    A0[..., 1, 1] = R
    A0[..., 2, 2] = 1.0
    A0[..., 3, 3] = 1.0
    A0[..., 4, 2] = -B1 / Q
    A0[..., 4, 3] = -B2 / Q
    A0[..., 4, 4] = 1.0 / Q
    A0[..., 5, 5] = 1.0

    A1[..., 0, 0] = R * U1
    A1[..., 0, 2] = -B1
    A1[..., 0, 4] = 1.0
    A1[..., 1, 1] = R * U1
    A1[..., 1, 3] = -B1
    A1[..., 2, 2] = U1
    A1[..., 3, 0] = B2
    A1[..., 3, 1] = -B1
    A1[..., 3, 3] = U1
    A1[..., 4, 0] = 1.0
    A1[..., 4, 2] = -B1 * U1 / Q
    A1[..., 4, 3] = -B2 * U1 / Q
    A1[..., 4, 4] = U1 / Q
    A1[..., 5, 5] = U1

    A2[..., 0, 0] = R * U2
    A2[..., 0, 2] = -B2
    A2[..., 1, 1] = R * U2
    A2[..., 1, 3] = -B2
    A2[..., 1, 4] = 1.0
    A2[..., 2, 0] = -B2
    A2[..., 2, 1] = B1
    A2[..., 2, 2] = U2
    A2[..., 3, 3] = U2
    A2[..., 4, 1] = 1.0
    A2[..., 4, 2] = -B1 * U2 / Q
    A2[..., 4, 3] = -B2 * U2 / Q
    A2[..., 4, 4] = U2 / Q
    A2[..., 5, 5] = U2

    for k in range(NCOMP):
        S0[..., k, k] = 1.0
    S0[..., 2, 4] = -B1
    S0[..., 3, 4] = -B2
    return A0, A1, A2, S0


def assemble_coeffs(
    Z: BackgroundSlice,
    eos: EosModel,
    point: tuple[int, int] | None = None,
    t: float = 0.0,
    phi_pair=None,
) -> CoeffBundle:
    """Coefficient bundle at one cell (or all cells when point is None).

    The symmetrized products S0*A0 (positive definite) and S0*A1, S0*A2
    (symmetric) realize the system's symmetrizer; ``phi_pair`` optionally
    supplies curved-leg geometry for the zero-order correction, which is
    identically zero on the square.
    """
    R, _, Q = eos.eval_arrays(Z.P.values, Z.S.values)
    args = (Z.U.c1.values, Z.U.c2.values, Z.B.c1.values, Z.B.c2.values, R, Q)
    if point is not None:
        args = tuple(a[point] for a in args)
    A0, A1, A2, S0 = coefficient_matrices(*args)
    bterm_h = None
    if phi_pair is not None:
        from .geometry import h_matrices

        if point is None:
            raise DomainError("curved-leg assembly needs a specific point")
        X1, X2 = Z.grid.mesh_cartesian()
        bterm_h = h_matrices(phi_pair, (X1[point], X2[point]))
    return CoeffBundle(A0, A1, A2, S0, S0 @ A0, S0 @ A1, S0 @ A2, bterm_h)


def bterm_values(h1: np.ndarray, h2: np.ndarray, U, B, u, b) -> np.ndarray:
    """Zero-order correction h(x,U) b - h(x,B) u (a 2-vector)."""
    hU = U[0] * h1 + U[1] * h2
    hB = B[0] * h1 + B[1] * h2
    return hU @ np.asarray(b, float) - hB @ np.asarray(u, float)


def boundary_quadratic(zvec, nu, U, B, P, S, eos: EosModel) -> float:
    """<z, A_nu z> with A_nu = (S0 A1) nu1 + (S0 A2) nu2.

    With a tangential background this collapses to 2 p (u . nu), the
    boundary term of the energy identity.
    """
    R, _, Q = eos.eval_arrays(np.asarray(P, float), np.asarray(S, float))
    _, A1, A2, S0 = coefficient_matrices(U[0], U[1], B[0], B[1], R, Q)
    Anu = S0 @ (A1 * nu[0] + A2 * nu[1])
    z = np.asarray(zvec, float)
    return float(z @ (Anu @ z))


def max_signal_speed(Z: BackgroundSlice, eos: EosModel) -> float:
    """Upper bound for the characteristic speeds,
    max |U| + 2 sqrt(max(R, 1/R) (|B|^2 + Q)).

    The max(R, 1/R) guard keeps the cited bound valid on both sides of
    R = 1.
    """
    R, _, Q = eos.eval_arrays(Z.P.values, Z.S.values)
    Umag = np.hypot(Z.U.c1.values, Z.U.c2.values)
    B2 = Z.B.c1.values**2 + Z.B.c2.values**2
    guard = np.maximum(R, 1.0 / R)
    return float(np.max(Umag + 2.0 * np.sqrt(guard * (B2 + Q))))


# ---------------------------------------------------------------------------
# ghosts and the semi-discrete right-hand side
# ---------------------------------------------------------------------------

PAD = 2


def fill_ghosts(stack: np.ndarray, pad: int = PAD) -> np.ndarray:
    """Padded copy with parity-reflected ghost layers.

    Normal components of u and b reflect odd (their interpolated face
    trace vanishes exactly), tangential components and the scalars
    reflect even.  The interior block is an untouched copy of ``stack``.
    """
    n1, n2 = stack.shape[-2:]
    out = np.empty(stack.shape[:-2] + (n1 + 2 * pad, n2 + 2 * pad))
    out[..., pad:-pad, pad:-pad] = stack
    sign0 = np.ones((NCOMP, 1, 1))
    sign0[list(_ODD_AXIS0)] = -1.0
    sign1 = np.ones((NCOMP, 1, 1))
    sign1[list(_ODD_AXIS1)] = -1.0
    for k in range(pad):
        src_lo = out[..., pad + k, pad:-pad]
        src_hi = out[..., -pad - 1 - k, pad:-pad]
        out[..., pad - 1 - k, pad:-pad] = sign0[..., 0] * src_lo
        out[..., -pad + k, pad:-pad] = sign0[..., 0] * src_hi
    for k in range(pad):
        src_lo = out[..., :, pad + k]
        src_hi = out[..., :, -pad - 1 - k]
        out[..., :, pad - 1 - k] = sign1[..., 0] * src_lo
        out[..., :, -pad + k] = sign1[..., 0] * src_hi
    return out


def enforce_bc(z: State, grid: Grid | None = None) -> np.ndarray:
    """Public ghost-fill: returns the padded (6, n1+4, n2+4) array."""
    return fill_ghosts(z.stack())


class _Stencil:
    """Centered derivatives of a padded component array."""

    __slots__ = ("h1", "h2")

    def __init__(self, grid: Grid):
        self.h1 = grid.h1
        self.h2 = grid.h2

    def d1(self, P: np.ndarray) -> np.ndarray:
        return (P[3:-1, PAD:-PAD] - P[1:-3, PAD:-PAD]) / (2.0 * self.h1)

    def d2(self, P: np.ndarray) -> np.ndarray:
        return (P[PAD:-PAD, 3:-1] - P[PAD:-PAD, 1:-3]) / (2.0 * self.h2)

    def delta4(self, P: np.ndarray) -> np.ndarray:
        d41 = (
            P[:-4, PAD:-PAD]
            - 4.0 * P[1:-3, PAD:-PAD]
            + 6.0 * P[2:-2, PAD:-PAD]
            - 4.0 * P[3:-1, PAD:-PAD]
            + P[4:, PAD:-PAD]
        )
        d42 = (
            P[PAD:-PAD, :-4]
            - 4.0 * P[PAD:-PAD, 1:-3]
            + 6.0 * P[PAD:-PAD, 2:-2]
            - 4.0 * P[PAD:-PAD, 3:-1]
            + P[PAD:-PAD, 4:]
        )
        return d41 / self.h1 + d42 / self.h2


def _rhs_arrays(
    stack: np.ndarray,
    t: float,
    Z: BackgroundSlice,
    Fsl: SourceSlice,
    eos: EosModel,
    grid: Grid,
    dissipation: float,
) -> np.ndarray:
    """Tendency of the total-pressure state; sequential elimination of the
    pressure row through the induction row (A0 is block triangular)."""
    P = fill_ghosts(stack)
    st = _Stencil(grid)
    U1, U2 = Z.U.c1.values, Z.U.c2.values
    B1, B2 = Z.B.c1.values, Z.B.c2.values
    R, _, Q = eos.eval_arrays(Z.P.values, Z.S.values)

    d1 = [st.d1(P[k]) for k in range(NCOMP)]
    d2 = [st.d2(P[k]) for k in range(NCOMP)]

    def advU(k):
        return U1 * d1[k] + U2 * d2[k]

    def advB(k):
        return B1 * d1[k] + B2 * d2[k]

    divu = d1[0] + d2[1]
    tend = np.empty_like(stack)
    tend[0] = (Fsl.F1.c1.values - R * advU(0) - d1[4] + advB(2)) / R
    tend[1] = (Fsl.F1.c2.values - R * advU(1) - d2[4] + advB(3)) / R
    tend[2] = Fsl.F2.c1.values - advU(2) + advB(0) - B1 * divu
    tend[3] = Fsl.F2.c2.values - advU(3) + advB(1) - B2 * divu
    tend[4] = (
        Q * (Fsl.F3.values - divu)
        - advU(4)
        + B1 * (tend[2] + advU(2))
        + B2 * (tend[3] + advU(3))
    )
    tend[5] = Fsl.F4.values - advU(5)

    if dissipation > 0.0:
        # delta4 carries the 1/h factors, so this is -eps h^3 d^4 + h.o.t.
        for k in range(NCOMP):
            tend[k] -= dissipation * st.delta4(P[k])
    return tend


def rhs_linear(
    z: State,
    Z: BackgroundSlice,
    F: SourceSlice,
    eos: EosModel,
    t: float = 0.0,
    dissipation: float = 0.0,
) -> State:
    """State-shaped tendency of the linearized system (public wrapper)."""
    if z.pvar_kind != TOTAL_PRESSURE:
        raise PreconditionError("rhs_linear evolves the total-pressure state")
    if not z.grid.is_square:
        raise DomainError("the linearized solver runs on square domains")
    tend = _rhs_arrays(z.stack(), t, Z, F, eos, z.grid, dissipation)
    if not np.all(np.isfinite(tend)):
        bad = np.argwhere(~np.isfinite(tend))[0]
        raise NumericalError("non-finite tendency", cell=tuple(int(v) for v in bad))
    return State.from_stack(z.grid, tend, TOTAL_PRESSURE)


def step(
    z: State,
    dt: float,
    Z: Background,
    F: SourceTerm,
    t: float,
    eos: EosModel,
    dissipation: float = 0.02,
    cfl: float = 0.5,
    cfl_action: str = "abort",
) -> State:
    """One SSP-RK3 step; ghosts are re-imposed before every stage."""
    g = z.grid
    speed = max_signal_speed(Z.sample(t), eos)
    if dt > cfl * min(g.h1, g.h2) / max(speed, 1e-300) * (1.0 + 1e-12):
        msg = f"dt = {dt:.3e} violates CFL {cfl} at speed {speed:.3e}"
        if cfl_action == "abort":
            raise NumericalError(msg)
        import warnings

        warnings.warn(msg, stacklevel=2)
    y = z.stack()
    arr = _step_arrays(y, dt, Z, F, t, eos, g, dissipation)
    return State.from_stack(g, arr, TOTAL_PRESSURE)


def _step_arrays(y, dt, Z, F, t, eos, grid, dissipation):
    def L(tt, arr):
        return _rhs_arrays(arr, tt, Z.sample(tt), F.sample(tt), eos, grid, dissipation)

    k1 = y + dt * L(t, y)
    k2 = 0.75 * y + 0.25 * (k1 + dt * L(t + dt, k1))
    return (y + 2.0 * (k2 + dt * L(t + 0.5 * dt, k2))) / 3.0


# ---------------------------------------------------------------------------
# the time loop and diagnostics
# ---------------------------------------------------------------------------


@dataclass
class LinearConfig:
    cfl: float = 0.45
    dissipation: float = 0.02
    save_every: int = 1
    check_compat: bool = True
    compat_tol: float | None = None
    fixed_dt: float | None = None
    cfl_action: str = "abort"
    norm_orders: tuple = (1, 2)


@dataclass
class DiagnosticsReport:
    t: np.ndarray
    energy: np.ndarray
    max_bnu: np.ndarray
    max_unu: np.ndarray
    l2_divb: np.ndarray
    res_divb: np.ndarray
    res_curl1: np.ndarray
    res_curl2: np.ndarray
    star_norms: dict = field(default_factory=dict)

    def to_csv(self, path, header_lines=()):
        from .report import write_csv

        cols = ("t", "energy", "max_bnu", "max_unu", "l2_divb", "res_divb", "res_curl1", "res_curl2")
        rows = zip(
            self.t,
            self.energy,
            self.max_bnu,
            self.max_unu,
            self.l2_divb,
            self.res_divb,
            self.res_curl1,
            self.res_curl2,
        )
        write_csv(path, cols, [[float(v) for v in r] for r in rows], header_lines)


@dataclass
class LinearRunResult:
    times: np.ndarray
    states: np.ndarray  # (K, 6, n1, n2), total-pressure states
    dt: float
    diagnostics: DiagnosticsReport

    def state(self, k: int, grid: Grid) -> State:
        return State.from_stack(grid, self.states[k], TOTAL_PRESSURE)


def run_linear(
    z0: State,
    Z: Background,
    F: SourceTerm,
    T: float,
    config: LinearConfig | None = None,
    eos: EosModel | None = None,
) -> LinearRunResult:
    """Advance the linearized problem to time T, collecting diagnostics."""
    from .eos import ideal_gas

    cfg = config or LinearConfig()
    eos = eos or ideal_gas()
    g = z0.grid
    if z0.pvar_kind != TOTAL_PRESSURE:
        raise PreconditionError("run_linear expects the total-pressure state")
    if cfg.check_compat:
        rep = compatibility_check(z0, F, Z, eos, tol=cfg.compat_tol)
        if not rep.passed:
            raise PreconditionError(
                f"compatibility violated: order 0 (u,b) = ({rep.order0_u:.3e}, "
                f"{rep.order0_b:.3e}), order 1 = {rep.order1:.3e}, tol = {rep.tol:.3e}"
            )

    h = min(g.h1, g.h2)
    speed0 = max_signal_speed(Z.sample(0.0), eos)
    dt = cfg.fixed_dt or cfg.cfl * h / max(speed0, 1e-300)
    nsteps = max(1, int(np.ceil(T / dt - 1e-12)))
    dt = T / nsteps

    y = z0.stack()
    times = [0.0]
    snaps = [y.copy()]
    t = 0.0
    for k in range(nsteps):
        speed = max_signal_speed(Z.sample(t), eos)
        if dt * speed / h > cfg.cfl * (1.0 + 1e-9):
            msg = f"dt = {dt:.3e} violates CFL {cfg.cfl} at t = {t:.3e} (speed {speed:.3e})"
            if cfg.cfl_action == "abort":
                raise NumericalError(msg)
            import warnings

            warnings.warn(msg, stacklevel=2)
        y = _step_arrays(y, dt, Z, F, t, eos, g, cfg.dissipation)
        t = (k + 1) * dt
        if not np.all(np.isfinite(y)):
            bad = np.argwhere(~np.isfinite(y))[0]
            raise NumericalError(
                f"non-finite state at t = {t:.6g}", cell=tuple(int(v) for v in bad)
            )
        if (k + 1) % cfg.save_every == 0 or k + 1 == nsteps:
            times.append(t)
            snaps.append(y.copy())

    times = np.asarray(times)
    states = np.asarray(snaps)
    diag = _collect_diagnostics(times, states, Z, F, eos, g, cfg)
    return LinearRunResult(times, states, dt, diag)


def _collect_diagnostics(times, states, Z, F, eos, grid, cfg) -> DiagnosticsReport:
    K = len(times)
    energy = np.empty(K)
    max_bnu = np.empty(K)
    max_unu = np.empty(K)
    l2_divb = np.empty(K)
    star_norms = {m: np.empty(K) for m in cfg.norm_orders if grid.is_square}
    frame = None
    if star_norms:
        from .geometry import tangential_frame

        frame = tangential_frame(grid)
    for k in range(K):
        z = State.from_stack(grid, states[k], TOTAL_PRESSURE)
        Zs = Z.sample(float(times[k]))
        energy[k] = calc.energy_functional(z, Zs, eos)
        max_bnu[k] = calc.max_normal_trace(z.b)
        max_unu[k] = calc.max_normal_trace(z.u)
        l2_divb[k] = calc.divergence(z.b).l2()
        for m in star_norms:
            star_norms[m][k] = calc.aniso_norm(z.pvar, m, frame)
    res_divb = np.full(K, np.nan)
    res_curl1 = np.full(K, np.nan)
    res_curl2 = np.full(K, np.nan)
    if K >= 3 and _uniform_times(times):
        mids, res = divb_transport_residual(times, states, Z, F, grid)
        res_divb[1 : 1 + len(res)] = res
        mids, r1, r2 = curl_system_residual(times, states, Z, F, eos, grid)
        res_curl1[1 : 1 + len(r1)] = r1
        res_curl2[1 : 1 + len(r2)] = r2
    return DiagnosticsReport(
        times, energy, max_bnu, max_unu, l2_divb, res_divb, res_curl1, res_curl2, star_norms
    )


def _uniform_times(times) -> bool:
    if len(times) < 3:
        return False
    dts = np.diff(times)
    return bool(np.all(np.abs(dts - dts[0]) <= 1e-9 * max(dts[0], 1e-300)))


# ---------------------------------------------------------------------------
# structural residual diagnostics
# ---------------------------------------------------------------------------


def _ds(arr, grid, axis) -> np.ndarray:
    return _d1(arr, grid.h1 if axis == 0 else grid.h2, axis)


def _grad(arr, grid):
    return _ds(arr, grid, 0), _ds(arr, grid, 1)


def _l2(arr, grid) -> float:
    return float(np.sqrt(np.sum(grid.cell_weights() * arr * arr)))


def divb_transport_residual(times, states, Z: Background, F: SourceTerm, grid: Grid):
    """L2 residual of the transported div(b) identity at interior snapshots.

    D_t(div b) = sum_ij (d_i B_j d_j u_i - d_i U_j d_j b_i)
                 - (div B)(div u) + div F2   [curvature terms vanish here]
    """
    if len(times) < 3:
        raise PreconditionError("need at least 3 snapshots for the transport residual")
    dt = times[1] - times[0]
    divb = [_ds(s[2], grid, 0) + _ds(s[3], grid, 1) for s in states]
    mids, res = [], []
    for k in range(1, len(times) - 1):
        t = float(times[k])
        Zs = Z.sample(t)
        Fs = F.sample(t)
        U1, U2 = Zs.U.c1.values, Zs.U.c2.values
        B1, B2 = Zs.B.c1.values, Zs.B.c2.values
        dU = [_grad(U1, grid), _grad(U2, grid)]  # dU[j][i] = d_i U_j
        dB = [_grad(B1, grid), _grad(B2, grid)]
        u1, u2, b1, b2 = states[k][0], states[k][1], states[k][2], states[k][3]
        du = [_grad(u1, grid), _grad(u2, grid)]
        db = [_grad(b1, grid), _grad(b2, grid)]
        ddt = (divb[k + 1] - divb[k - 1]) / (2.0 * dt)
        gdivb = _grad(divb[k], grid)
        lhs = ddt + U1 * gdivb[0] + U2 * gdivb[1]
        rhs = np.zeros_like(lhs)
        for i in range(2):
            for j in range(2):
                rhs += dB[j][i] * du[i][j] - dU[j][i] * db[i][j]
        rhs -= (dB[0][0] + dB[1][1]) * (du[0][0] + du[1][1])
        rhs += _ds(Fs.F2.c1.values, grid, 0) + _ds(Fs.F2.c2.values, grid, 1)
        mids.append(t)
        res.append(_l2(lhs - rhs, grid))
    return np.asarray(mids), np.asarray(res)


def _cross(a1, a2, b1, b2):
    return a1 * b2 - a2 * b1


def _curl(v1, v2, grid):
    return _ds(v2, grid, 0) - _ds(v1, grid, 1)


def curl_system_residual(times, states, Z: Background, F: SourceTerm, eos: EosModel, grid: Grid):
    """L2 residuals of the coupled curl system

        R D_t(curl u) - B.grad(curl b)               = G1
        (1 + |B|^2/Q) D_t(curl b) - B.grad(curl u)   = G2

    with the sources assembled term by term (commutators expanded in
    closed form; validated symbolically against the defining combination
    curl E(b) - curl(B E(p)) - (1/Q) B x D_t E(u)).
    """
    if len(times) < 3:
        raise PreconditionError("need at least 3 snapshots for the curl residual")
    dt = float(times[1] - times[0])

    def zparts(k):
        s = states[k]
        return s[0], s[1], s[2], s[3], s[4]

    def background(k):
        Zs = Z.sample(float(times[k]))
        R, _, Q = eos.eval_arrays(Zs.P.values, Zs.S.values)
        return Zs, np.asarray(R, float), np.asarray(Q, float)

    mids, out1, out2 = [], [], []
    for k in range(1, len(times) - 1):
        t = float(times[k])
        u1, u2, b1, b2, p = zparts(k)
        u1m, u2m, b1m, b2m, pm = zparts(k - 1)
        u1p, u2p, b1p, b2p, pp = zparts(k + 1)
        Zs, R, Q = background(k)
        Zm, Rm, _ = background(k - 1)
        Zp, Rp, _ = background(k + 1)
        Fs = F.sample(t)
        Fm = F.sample(float(times[k - 1]))
        Fp = F.sample(float(times[k + 1]))
        U1, U2 = Zs.U.c1.values, Zs.U.c2.values
        B1, B2 = Zs.B.c1.values, Zs.B.c2.values

        def ddt(fp, fm):
            return (fp - fm) / (2.0 * dt)

        def advU(f):
            g1, g2 = _grad(f, grid)
            return U1 * g1 + U2 * g2

        def advB(f):
            g1, g2 = _grad(f, grid)
            return B1 * g1 + B2 * g2

        def Dt(fp, f, fm):
            return ddt(fp, fm) + advU(f)

        # first-order commutator C(a, v) = grad a1 . grad v2 - grad a2 . grad v1
        def C(a1, a2, v1, v2):
            da1, da2 = _grad(a1, grid), _grad(a2, grid)
            dv1, dv2 = _grad(v1, grid), _grad(v2, grid)
            return (da1[0] * dv2[0] + da1[1] * dv2[1]) - (
                da2[0] * dv1[0] + da2[1] * dv1[1]
            )

        curlu = _curl(u1, u2, grid)
        curlb = _curl(b1, b2, grid)
        curlu_p, curlu_m = _curl(u1p, u2p, grid), _curl(u1m, u2m, grid)
        curlb_p, curlb_m = _curl(b1p, b2p, grid), _curl(b1m, b2m, grid)
        Dtu = [Dt(u1p, u1, u1m), Dt(u2p, u2, u2m)]
        Dtb = [Dt(b1p, b1, b1m), Dt(b2p, b2, b2m)]
        Dtp = Dt(pp, p, pm)
        gR = _grad(R, grid)

        # row 1
        G1 = (
            _curl(Fs.F1.c1.values, Fs.F1.c2.values, grid)
            - R * C(U1, U2, u1, u2)
            + C(B1, B2, b1, b2)
            - (gR[0] * Dtu[1] - gR[1] * Dtu[0])
        )
        lhs1 = R * Dt(curlu_p, curlu, curlu_m) - advB(curlb)
        out1.append(_l2(lhs1 - G1, grid))

        # row 2
        DtF1 = [
            ddt(Fp.F1.c1.values, Fm.F1.c1.values) + advU(Fs.F1.c1.values),
            ddt(Fp.F1.c2.values, Fm.F1.c2.values) + advU(Fs.F1.c2.values),
        ]
        DtB = [
            ddt(Zp.B.c1.values, Zm.B.c1.values) + advU(B1),
            ddt(Zp.B.c2.values, Zm.B.c2.values) + advU(B2),
        ]
        DtR = ddt(Rp, Rm) + advU(R)
        iQ = 1.0 / Q
        giQ = _grad(iQ, grid)
        dU = [_grad(U1, grid), _grad(U2, grid)]  # dU[j][i] = d_i U_j
        dB = [_grad(B1, grid), _grad(B2, grid)]
        gp = _grad(p, grid)
        B2mag = B1 * B1 + B2 * B2
        BdotDtb = B1 * Dtb[0] + B2 * Dtb[1]

        brk_p = [
            giQ[i] * Dtp + iQ * (dU[0][i] * gp[0] + dU[1][i] * gp[1]) for i in range(2)
        ]
        brk_b = [
            giQ[i] * BdotDtb + iQ * (dB[0][i] * Dtb[0] + dB[1][i] * Dtb[1])
            for i in range(2)
        ]
        gb = [_grad(b1, grid), _grad(b2, grid)]  # gb[j][i] = d_i b_j
        jsum = [
            sum(
                Zs_b * (dU[0][i] * gb[j][0] + dU[1][i] * gb[j][1]) - DtB[j] * gb[j][i]
                for j, Zs_b in enumerate((B1, B2))
            )
            for i in range(2)
        ]
        Dt2u = []
        dtU = [ddt(Zp.U.c1.values, Zm.U.c1.values), ddt(Zp.U.c2.values, Zm.U.c2.values)]
        for comp, comp_p, comp_m in ((u1, u1p, u1m), (u2, u2p, u2m)):
            dtt = (comp_p - 2.0 * comp + comp_m) / (dt * dt)
            gcomp = _grad(comp, grid)
            dtcomp = ddt(comp_p, comp_m)
            Dt2u.append(
                dtt
                + dtU[0] * gcomp[0]
                + dtU[1] * gcomp[1]
                + 2.0 * advU(dtcomp)
                + advU(advU(comp))
            )

        G2 = (
            _curl(Fs.F2.c1.values, Fs.F2.c2.values, grid)
            - _curl(B1 * Fs.F3.values, B2 * Fs.F3.values, grid)
            - iQ * _cross(B1, B2, DtF1[0], DtF1[1])
            - C(U1, U2, b1, b2)
            + C(B1, B2, u1, u2)
            + iQ * _curl(B1, B2, grid) * (Dtp - BdotDtb)
            - _cross(B1, B2, brk_p[0], brk_p[1])
            + _cross(B1, B2, brk_b[0], brk_b[1])
            + iQ * _cross(B1, B2, jsum[0], jsum[1])
            - iQ * (B1 * DtB[0] + B2 * DtB[1]) * curlb
            + iQ * DtR * _cross(B1, B2, Dtu[0], Dtu[1])
            + iQ * R * _cross(B1, B2, Dt2u[0], Dt2u[1])
        )
        lhs2 = (1.0 + B2mag * iQ) * Dt(curlb_p, curlb, curlb_m) - advB(curlu)
        out2.append(_l2(lhs2 - G2, grid))
        mids.append(t)
    return np.asarray(mids), np.asarray(out1), np.asarray(out2)


# ---------------------------------------------------------------------------
# compatibility conditions (orders 0 and 1)
# ---------------------------------------------------------------------------


@dataclass
class CompatReport:
    order0_u: float
    order0_b: float
    order1: float
    tol: float
    passed: bool


def compatibility_check(
    z0: State,
    F: SourceTerm | None,
    Z: Background,
    eos: EosModel,
    tol: float | None = None,
) -> CompatReport:
    """Boundary traces of u0.nu, b0.nu and of d_t u(0).nu, the latter
    evaluated from the momentum row at t = 0."""
    g = z0.grid
    if z0.pvar_kind != TOTAL_PRESSURE:
        raise PreconditionError("compatibility check expects the total-pressure state")
    h = max(g.h1, g.h2)
    if tol is None:
        tol = 10.0 * h * h
    o0u = calc.max_normal_trace(z0.u)
    o0b = calc.max_normal_trace(z0.b)

    Zs = Z.sample(0.0)
    Fs = (F or SourceTerm.zero(g)).sample(0.0)
    R, _, _ = eos.eval_arrays(Zs.P.values, Zs.S.values)
    U1, U2 = Zs.U.c1.values, Zs.U.c2.values
    B1, B2 = Zs.B.c1.values, Zs.B.c2.values
    u1, u2 = z0.u.c1.values, z0.u.c2.values
    b1, b2 = z0.b.c1.values, z0.b.c2.values
    gp = _grad(z0.pvar.values, g)
    du1, du2 = _grad(u1, g), _grad(u2, g)
    db1, db2 = _grad(b1, g), _grad(b2, g)
    udot = VectorField.from_arrays(
        g,
        (Fs.F1.c1.values - R * (U1 * du1[0] + U2 * du1[1]) - gp[0] + B1 * db1[0] + B2 * db1[1]) / R,
        (Fs.F1.c2.values - R * (U1 * du2[0] + U2 * du2[1]) - gp[1] + B1 * db2[0] + B2 * db2[1]) / R,
        CARTESIAN,
    )
    o1 = calc.max_normal_trace(udot)
    passed = max(o0u, o0b, o1) <= tol
    return CompatReport(o0u, o0b, o1, tol, passed)
