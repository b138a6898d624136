"""The nonlinear system and its fixed-point solver.

The compressible ideal-MHD system in physical variables (u, b, p, s),

    (1/Q)(d_t + u.grad) p + div u                = 0
    R (d_t + u.grad) u + grad p + b x (curl b)   = 0
    (d_t + u.grad) b - b.grad u + b (div u)      = 0
    (d_t + u.grad) s                             = 0
    div b = 0  (monitored, not evolved)

is solved by Picard iteration: each sweep freezes the previous iterate as
the background of the linearized total-pressure problem with zero source,
fixed initial data p(z0), and converts back through the pressure mapping
p(u,b,p,s) = (u,b,p+|b|^2/2,s).  The first iterate is the constant-in-
time extension of the initial data.

``nonlinear_rhs`` is a residual oracle: it uses one-sided boundary
stencils (no ghost parities) because the physical pressure has a nonzero
wall-normal derivative wherever d_nu |b|^2 does not vanish.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import calculus as calc
from .calculus import _d1
from .eos import EosModel
from .errors import DivergenceError, NumericalError, PreconditionError
from .fields import CARTESIAN, ScalarField, VectorField
from .geometry import Grid
from .linear import (
    Background,
    LinearConfig,
    PHYSICAL_P,
    SourceTerm,
    State,
    TOTAL_PRESSURE,
    compatibility_check,
    max_signal_speed,
    run_linear,
)


def p_map(z: State, direction: str) -> State:
    """Shift the pressure component by +/- |b|^2/2 and flip its kind."""
    q = 0.5 * (z.b.c1.values**2 + z.b.c2.values**2)
    if direction == "to_total":
        if z.pvar_kind != PHYSICAL_P:
            raise PreconditionError("to_total expects a physical-pressure state")
        return State(z.u.copy(), z.b.copy(), ScalarField(z.grid, z.pvar.values + q), TOTAL_PRESSURE, z.s.copy())
    if direction == "to_physical":
        if z.pvar_kind != TOTAL_PRESSURE:
            raise PreconditionError("to_physical expects a total-pressure state")
        return State(z.u.copy(), z.b.copy(), ScalarField(z.grid, z.pvar.values - q), PHYSICAL_P, z.s.copy())
    raise PreconditionError(f"unknown direction {direction!r}")


def nonlinear_rhs(z: State, eos: EosModel) -> State:
    """Tendency of (u, b, p, s) per the nonlinear system; one-sided
    second-order stencils throughout (residual oracle, not a stepper)."""
    if z.pvar_kind != PHYSICAL_P:
        raise PreconditionError("nonlinear_rhs expects the physical-pressure state")
    g = z.grid
    u1, u2 = z.u.c1.values, z.u.c2.values
    b1, b2 = z.b.c1.values, z.b.c2.values
    p, s = z.pvar.values, z.s.values
    R, _, Q = eos.eval_arrays(p, s)

    def grad(f):
        return _d1(f, g.h1, 0), _d1(f, g.h2, 1)

    du1, du2 = grad(u1), grad(u2)
    db1, db2 = grad(b1), grad(b2)
    gp = grad(p)
    gs = grad(s)

    def adv_u(df):
        return u1 * df[0] + u2 * df[1]

    def adv_b(df):
        return b1 * df[0] + b2 * df[1]

    divu = du1[0] + du2[1]
    curlb = db2[0] - db1[1]
    # b x (curl b) = (b2 w, -b1 w), so that it equals grad(|b|^2/2) - b.grad b
    tend_u1 = -adv_u(du1) - (gp[0] + b2 * curlb) / R
    tend_u2 = -adv_u(du2) - (gp[1] - b1 * curlb) / R
    tend_b1 = -adv_u(db1) + adv_b(du1) - b1 * divu
    tend_b2 = -adv_u(db2) + adv_b(du2) - b2 * divu
    tend_p = -adv_u(gp) - Q * divu
    tend_s = -adv_u(gs)
    out = np.stack([tend_u1, tend_u2, tend_b1, tend_b2, tend_p, tend_s])
    if not np.all(np.isfinite(out)):
        bad = np.argwhere(~np.isfinite(out))[0]
        raise NumericalError("non-finite nonlinear tendency", cell=tuple(int(v) for v in bad))
    return State.from_stack(g, out, PHYSICAL_P)


def constraint_monitor(times, stacks, grid: Grid):
    """Time series of ||div b||_{L2} and the extrapolated max |b.nu|."""
    divb = np.empty(len(times))
    bnu = np.empty(len(times))
    for k in range(len(times)):
        b = VectorField.from_arrays(grid, stacks[k][2], stacks[k][3], CARTESIAN)
        divb[k] = calc.divergence(b).l2()
        bnu[k] = calc.max_normal_trace(b)
    return np.asarray(times), divb, bnu


# ---------------------------------------------------------------------------
# Picard iteration
# ---------------------------------------------------------------------------


@dataclass
class PicardConfig:
    tol: float = 1e-10
    kmax: int = 12
    delta_margin: float = 0.5
    cfl: float = 0.45
    dissipation: float = 0.02
    compat_tol: float | None = None


@dataclass
class PicardReport:
    d_l2: list = field(default_factory=list)
    d_h1: list = field(default_factory=list)
    ratios: list = field(default_factory=list)
    mflat: list = field(default_factory=list)
    res_final: float = float("nan")
    converged: bool = False

    def to_csv(self, path, header_lines=()):
        from .report import write_csv

        rows = []
        for k, (dl, dh) in enumerate(zip(self.d_l2, self.d_h1), start=1):
            ratio = self.ratios[k - 2] if k >= 2 else None
            res = self.res_final if k == len(self.d_l2) else None
            rows.append((k, dl, dh, ratio, res))
        write_csv(path, ("k", "d_L2", "d_H1", "ratio", "res_final"), rows, header_lines)


@dataclass
class PicardResult:
    times: np.ndarray
    stacks: np.ndarray  # physical-pressure snapshots (K, 6, n1, n2)
    report: PicardReport


def _diff_norms(grid: Grid, a: np.ndarray, b: np.ndarray):
    """sup-in-time L2 and H1 norms of the snapshot difference."""
    w = grid.cell_weights()
    dl2 = dh1 = 0.0
    for k in range(a.shape[0]):
        d = a[k] - b[k]
        l2sq = float(np.sum(w * d * d))
        h1sq = l2sq
        for comp in d:
            g1 = _d1(comp, grid.h1, 0)
            g2 = _d1(comp, grid.h2, 1)
            h1sq += float(np.sum(w * (g1 * g1 + g2 * g2)))
        dl2 = max(dl2, np.sqrt(l2sq))
        dh1 = max(dh1, np.sqrt(h1sq))
    return dl2, dh1


def _state_box(stack: np.ndarray):
    return stack.min(axis=(1, 2)), stack.max(axis=(1, 2))


def _mflat_surrogate(grid: Grid, times, stacks) -> float:
    """sup-in-time of a low-order slice norm (L2 of z and of d_t z)."""
    w = grid.cell_weights()
    vals = []
    for k in range(len(times)):
        l2sq = float(np.sum(w * stacks[k] ** 2))
        if 0 < k < len(times) - 1:
            dt = times[k + 1] - times[k - 1]
            zt = (stacks[k + 1] - stacks[k - 1]) / dt
            l2sq += float(np.sum(w * zt**2))
        vals.append(np.sqrt(l2sq))
    return float(max(vals))


def picard_solve(
    z0: State,
    eos: EosModel,
    T: float,
    tol: float = 1e-10,
    kmax: int = 12,
    config: PicardConfig | None = None,
) -> PicardResult:
    """Fixed-point sweep: background <- previous iterate, linear solve
    with zero source, pressure mapping back to physical variables.

    Stops when the sup-in-time L2 distance of successive iterates falls
    below tol; aborts if the distance grows twice in a row or an iterate
    leaves the margin box around the initial data.
    """
    cfg = config or PicardConfig(tol=tol, kmax=kmax)
    cfg.tol, cfg.kmax = tol, kmax
    g = z0.grid
    if z0.pvar_kind != PHYSICAL_P:
        raise PreconditionError("picard_solve expects physical-pressure initial data")

    Z0 = Background.static(
        z0.u.copy(), z0.b.copy(), z0.pvar.copy(), z0.s.copy()
    )
    y0 = p_map(z0, "to_total")
    rep0 = compatibility_check(y0, None, Z0, eos, tol=cfg.compat_tol)
    if not rep0.passed:
        raise PreconditionError(
            f"compatibility violated at orders 0-1: u = {rep0.order0_u:.3e}, "
            f"b = {rep0.order0_b:.3e}, order1 = {rep0.order1:.3e} (tol {rep0.tol:.3e})"
        )

    # fixed time grid shared by all iterates; speed bound takes the
    # margin box into account so dt stays admissible for every sweep
    speed0 = max_signal_speed(Z0.sample(0.0), eos)
    h = min(g.h1, g.h2)
    dt = cfg.cfl * h / max(speed0 * 1.2, 1e-300)
    nsteps = max(1, int(np.ceil(T / dt - 1e-12)))
    times = np.linspace(0.0, T, nsteps + 1)

    lo, hi = _state_box(z0.stack())
    lo = lo - cfg.delta_margin
    hi = hi + cfg.delta_margin

    prev = np.repeat(z0.stack()[None, :, :, :], nsteps + 1, axis=0)
    report = PicardReport()
    F = SourceTerm.zero(g)
    lcfg = LinearConfig(
        cfl=cfg.cfl,
        dissipation=cfg.dissipation,
        save_every=1,
        check_compat=False,
        fixed_dt=times[1] - times[0],
        cfl_action="abort",
    )
    grew = 0
    final = prev
    for k in range(1, cfg.kmax + 1):
        Zk = Background.from_trajectory(g, times, prev)
        run = run_linear(y0.copy(), Zk, F, T, config=lcfg, eos=eos)
        cur = run.states.copy()
        cur[:, 4] -= 0.5 * (cur[:, 2] ** 2 + cur[:, 3] ** 2)  # back to physical p
        cmin = cur.min(axis=(0, 2, 3))
        cmax = cur.max(axis=(0, 2, 3))
        if np.any(cmin < lo) or np.any(cmax > hi):
            raise NumericalError(
                f"iterate {k} left the margin box (delta = {cfg.delta_margin})"
            )
        dl2, dh1 = _diff_norms(g, cur, prev)
        report.d_l2.append(dl2)
        report.d_h1.append(dh1)
        report.mflat.append(_mflat_surrogate(g, times, cur))
        if len(report.d_l2) >= 2:
            prev_d = report.d_l2[-2]
            report.ratios.append(dl2 / prev_d if prev_d > 0 else 0.0)
            grew = grew + 1 if dl2 > prev_d > 0 else 0
            if grew >= 2:
                raise DivergenceError(
                    f"successive differences grew twice in a row at k = {k}",
                    report=report,
                )
        final = cur
        prev = cur
        if dl2 <= cfg.tol:
            report.converged = True
            break
    report.res_final = _nonlinear_residual(g, times, final, eos)
    return PicardResult(times, final, report)


def _nonlinear_residual(grid: Grid, times, stacks, eos: EosModel) -> float:
    """Max over interior snapshots of the L2 defect between the stored
    time derivative and the nonlinear right-hand side."""
    if len(times) < 3:
        return float("nan")
    w = grid.cell_weights()
    worst = 0.0
    for k in range(1, len(times) - 1, max(1, (len(times) - 2) // 8)):
        dt = times[k + 1] - times[k - 1]
        zt = (stacks[k + 1] - stacks[k - 1]) / dt
        z = State.from_stack(grid, stacks[k], PHYSICAL_P)
        rhs = nonlinear_rhs(z, eos).stack()
        worst = max(worst, float(np.sqrt(np.sum(w * (zt - rhs) ** 2))))
    return worst
