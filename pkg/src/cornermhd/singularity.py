"""Corner-singularity laboratory on sector domains.

Three analytic families drive everything; all satisfy the leg Neumann
condition d_theta f = 0 on {theta = 0, omega}:

  case A (pi/omega = n >= 3):
      f = r^n (ln r cos n.theta - theta sin n.theta) - lam x2^n,
      lam = pi / (n sin(omega)^(n-1) cos(omega)),   Lap f = -n(n-1) lam x2^(n-2)
  case B (omega = pi/2):
      f = r^4 (ln r cos 4.theta - theta sin 4.theta) - 2 pi x1 x2^3,
      Lap f = -12 pi x1 x2
  case C (pi/omega not an integer):
      f = r^(pi/omega) cos(pi theta / omega),        Lap f = 0

With p = t f and u = -(t^2/2) grad f the pair solves the forced acoustic
problem d_t u + grad p = 0, d_t p + div u = f - (t^2/2) Lap f with zero
initial data and u.nu = 0 on the legs.  The field u carries exactly
r^(pi/omega - 1) corner growth, which drives the norm-divergence scans.

The polar solver imposes a rigid wall at the arc as well; the exact
solution has nonzero flux there, so accuracy is measured on annuli inside
the arc's domain of dependence (wave speed is 1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import calculus as calc
from .calculus import _d1
from .errors import DomainError, NumericalError, PreconditionError
from .fields import NormReport, POLAR, ScalarField, VectorField
from .geometry import Grid, DomainSpec, make_grid


@dataclass(frozen=True)
class CounterexampleSpec:
    case: str  # "A" | "B" | "C"
    omega: float
    n: int = 0
    lam: float = 0.0

    @staticmethod
    def case_a(n: int) -> "CounterexampleSpec":
        if n < 3:
            raise DomainError("case A needs an integer pi/omega >= 3")
        omega = np.pi / n
        lam = np.pi / (n * np.sin(omega) ** (n - 1) * np.cos(omega))
        return CounterexampleSpec("A", omega, n=n, lam=lam)

    @staticmethod
    def case_b() -> "CounterexampleSpec":
        return CounterexampleSpec("B", np.pi / 2, n=2)

    @staticmethod
    def case_c(omega: float) -> "CounterexampleSpec":
        if not 0.0 < omega < np.pi:
            raise DomainError("sector angle must lie in (0, pi)")
        ratio = np.pi / omega
        if abs(ratio - round(ratio)) < 1e-12:
            raise DomainError("case C needs a non-integer pi/omega")
        return CounterexampleSpec("C", omega)

    @property
    def exponent(self) -> float:
        """Corner growth exponent of f."""
        if self.case == "C":
            return np.pi / self.omega
        return float(self.n if self.case == "A" else 4)


@dataclass
class CounterexampleFields:
    f: ScalarField
    grad_f: VectorField  # polar components
    lap_f: ScalarField
    u_exact: VectorField  # -(t^2/2) grad f
    p_exact: ScalarField  # t f
    source: ScalarField  # f - (t^2/2) lap f


def _harmonic_log_part(n: int, R, TH):
    """Re(z^n log z) = r^n (ln r cos n.theta - theta sin n.theta) and its
    polar gradient (d_r, (1/r) d_theta)."""
    ln = np.log(R)
    c, s = np.cos(n * TH), np.sin(n * TH)
    f = R**n * (ln * c - TH * s)
    fr = R ** (n - 1) * (n * ln * c + c - n * TH * s)
    ft_over_r = R ** (n - 1) * (-n * ln * s - s - n * TH * c)
    return f, fr, ft_over_r


def counterexample_field(spec: CounterexampleSpec, t: float, grid: Grid) -> CounterexampleFields:
    """Analytic fields of the chosen case, sampled at the grid cells."""
    dom = grid.domain
    if dom.kind != "sector" or abs(dom.omega - spec.omega) > 1e-12:
        raise DomainError("grid must live on the sector matching the case")
    R, TH = grid.mesh()
    if spec.case == "C":
        a = np.pi / spec.omega
        f = R**a * np.cos(a * TH)
        fr = a * R ** (a - 1.0) * np.cos(a * TH)
        ft = -a * R ** (a - 1.0) * np.sin(a * TH)
        lap = np.zeros_like(f)
    elif spec.case == "A":
        n, lam = spec.n, spec.lam
        f0, fr0, ft0 = _harmonic_log_part(n, R, TH)
        sn, cs = np.sin(TH), np.cos(TH)
        f = f0 - lam * (R * sn) ** n
        fr = fr0 - lam * n * R ** (n - 1) * sn**n
        ft = ft0 - lam * n * R ** (n - 1) * sn ** (n - 1) * cs
        lap = -n * (n - 1) * lam * (R * sn) ** (n - 2)
    elif spec.case == "B":
        f0, fr0, ft0 = _harmonic_log_part(4, R, TH)
        sn, cs = np.sin(TH), np.cos(TH)
        poly = R**4 * cs * sn**3
        f = f0 - 2 * np.pi * poly
        fr = fr0 - 8 * np.pi * R**3 * cs * sn**3
        ft = ft0 - 2 * np.pi * R**3 * (3 * cs**2 * sn**2 - sn**4)
        lap = -12 * np.pi * R**2 * cs * sn
    else:
        raise DomainError(f"unknown case {spec.case!r}")
    fld = ScalarField(grid, f)
    gradf = VectorField.from_arrays(grid, fr, ft, POLAR)
    return CounterexampleFields(
        f=fld,
        grad_f=gradf,
        lap_f=ScalarField(grid, lap),
        u_exact=(-0.5 * t * t) * gradf,
        p_exact=t * fld,
        source=ScalarField(grid, f - 0.5 * t * t * lap),
    )


# ---------------------------------------------------------------------------
# polar acoustic solver for the forced problem
# ---------------------------------------------------------------------------


@dataclass
class AcousticConfig:
    cfl: float = 0.45
    dissipation: float = 0.0
    save_every: int = 10**9  # keep first and last by default


def _pad_polar(v: np.ndarray, parity_theta: float, parity_arc: float) -> np.ndarray:
    """One ghost layer in theta (both legs) and at the arc; the inner
    radial edge gets a copied layer only to keep slicing uniform (the
    schemes below never difference across r = 0)."""
    n1, n2 = v.shape
    out = np.empty((n1 + 2, n2 + 2))
    out[1:-1, 1:-1] = v
    out[1:-1, 0] = parity_theta * v[:, 0]
    out[1:-1, -1] = parity_theta * v[:, -1]
    out[0, :] = out[1, :]  # unused inner layer
    out[-1, :] = parity_arc * out[-2, :]
    return out


def _acoustic_rhs(state: np.ndarray, src: np.ndarray, grid: Grid, dissipation: float) -> np.ndarray:
    """d_t (ur, ut, p): ur' = -d_r p, ut' = -(1/r) d_th p,
    p' = -div u + source, with the radial divergence in flux form so the
    r -> 0 face carries no flux."""
    ur, ut, p = state
    n1, n2 = ur.shape
    h1, h2 = grid.h1, grid.h2
    r = grid.c1[:, None]

    P = _pad_polar(p, 1.0, 1.0)
    dpr = np.empty_like(p)
    dpr[1:-1, :] = (p[2:, :] - p[:-2, :]) / (2 * h1)
    dpr[0, :] = (-3 * p[0, :] + 4 * p[1, :] - p[2, :]) / (2 * h1)
    dpr[-1, :] = (P[-1, 1:-1] - p[-2, :]) / (2 * h1)  # even ghost at the arc
    dpt = (P[1:-1, 2:] - P[1:-1, :-2]) / (2 * h2)

    # radial flux faces of r*ur; the r -> 0 face and the arc wall carry none
    flux = np.empty((n1 + 1, n2))
    flux[1:-1, :] = 0.5 * (r[1:] * ur[1:, :] + r[:-1] * ur[:-1, :])
    flux[0, :] = 0.0
    flux[-1, :] = 0.0
    div_r = (flux[1:, :] - flux[:-1, :]) / (r * h1)

    UT = _pad_polar(ut, -1.0, 1.0)
    div_t = (UT[1:-1, 2:] - UT[1:-1, :-2]) / (2 * h2) / r

    out = np.empty_like(state)
    out[0] = -dpr
    out[1] = -dpt / r
    out[2] = -(div_r + div_t) + src
    if dissipation > 0.0:
        for k, (pt, pa) in enumerate(((1.0, -1.0), (-1.0, 1.0), (1.0, 1.0))):
            out[k] -= dissipation * _diss4(state[k], pt, pa, grid)
    return out


def _delta2(v: np.ndarray, pt: float, pa: float) -> np.ndarray:
    """Second difference (index space) with parity ghosts in theta and at
    the arc; the inner radial edge uses a copied ghost (pure damping)."""
    W = _pad_polar(v, pt, pa)
    return (W[:-2, 1:-1] - 2.0 * W[1:-1, 1:-1] + W[2:, 1:-1]) + (
        W[1:-1, :-2] - 2.0 * W[1:-1, 1:-1] + W[1:-1, 2:]
    )


def _diss4(v: np.ndarray, pt: float, pa: float, grid: Grid) -> np.ndarray:
    """Fourth-difference dissipation, -eps h^3 d^4 consistent: parity is
    preserved by the second difference, so it applies twice."""
    return _delta2(_delta2(v, pt, pa), pt, pa) / min(grid.h1, grid.h2)


def acoustic_sector_run(
    spec: CounterexampleSpec,
    T: float,
    grid: Grid,
    config: AcousticConfig | None = None,
    source_override=None,
):
    """Evolve (u, p) from zero data with the case's source; returns
    (times, snapshots) with snapshots shaped (K, 3, n1, n2) in the order
    (u_r, u_theta, p)."""
    cfg = config or AcousticConfig()
    dom = grid.domain
    if dom.kind != "sector":
        raise DomainError("acoustic_sector_run needs a sector grid")
    r_inner = grid.c1[0]
    dt = cfg.cfl * min(grid.h1, r_inner * grid.h2)  # wave speed 1
    nsteps = max(1, int(np.ceil(T / dt - 1e-12)))
    dt = T / nsteps

    base = counterexample_field(spec, 0.0, grid)

    def src_at(t: float) -> np.ndarray:
        if source_override is not None:
            return source_override(t)
        return base.f.values - 0.5 * t * t * base.lap_f.values

    y = np.zeros((3,) + grid.shape)
    times = [0.0]
    snaps = [y.copy()]
    t = 0.0
    for k in range(nsteps):
        def L(tt, arr):
            return _acoustic_rhs(arr, src_at(tt), grid, cfg.dissipation)

        k1 = y + dt * L(t, y)
        k2 = 0.75 * y + 0.25 * (k1 + dt * L(t + dt, k1))
        y = (y + 2.0 * (k2 + dt * L(t + 0.5 * dt, k2))) / 3.0
        t = (k + 1) * dt
        if not np.all(np.isfinite(y)):
            raise NumericalError(f"non-finite acoustic state at t = {t:.6g}")
        if (k + 1) % cfg.save_every == 0 or k + 1 == nsteps:
            times.append(t)
            snaps.append(y.copy())
    return np.asarray(times), np.asarray(snaps)


def annulus_error(grid: Grid, numeric: np.ndarray, exact: CounterexampleFields, r_lo: float, r_hi: float) -> float:
    """Relative L2 error of (u, p) against the exact fields on the annulus
    r in [r_lo, r_hi] (absolute radii)."""
    R, _ = grid.mesh()
    w = grid.cell_weights() * ((R >= r_lo) & (R <= r_hi))
    du = numeric[0] - exact.u_exact.c1.values
    dv = numeric[1] - exact.u_exact.c2.values
    dp = numeric[2] - exact.p_exact.values
    num = np.sum(w * (du**2 + dv**2 + dp**2))
    den = np.sum(
        w
        * (
            exact.u_exact.c1.values**2
            + exact.u_exact.c2.values**2
            + exact.p_exact.values**2
        )
    )
    return float(np.sqrt(num / max(den, 1e-300)))


# ---------------------------------------------------------------------------
# exponent fits and norm-divergence scans
# ---------------------------------------------------------------------------


def fit_singular_exponent(
    field, theta0: float, window: tuple[float, float], grid: Grid | None = None
):
    """Least-squares slope of log|value| against log r along the grid ray
    nearest theta0, restricted to the radial window (absolute radii)."""
    if isinstance(field, VectorField):
        vals = field.magnitude().values
        grid = field.grid
    elif isinstance(field, ScalarField):
        vals = np.abs(field.values)
        grid = field.grid
    else:
        vals = np.abs(np.asarray(field))
        if grid is None:
            raise PreconditionError("raw arrays need an explicit grid")
    j = int(np.argmin(np.abs(grid.c2 - theta0)))
    r = grid.c1
    mask = (r >= window[0]) & (r <= window[1])
    ray = vals[mask, j]
    if ray.size < 8:
        raise PreconditionError(f"only {ray.size} samples in the fit window")
    if np.any(ray <= 0.0):
        raise PreconditionError("nonpositive samples in the fit window")
    x = np.log(r[mask])
    y = np.log(ray)
    A = np.stack([x, np.ones_like(x)], axis=1)
    coef, res, _, _ = np.linalg.lstsq(A, y, rcond=None)
    dof = max(len(x) - 2, 1)
    sigma2 = float(res[0]) / dof if res.size else 0.0
    cov = sigma2 * np.linalg.inv(A.T @ A)
    return float(coef[0]), float(np.sqrt(max(cov[0, 0], 0.0)))


DIVERGENCE_RATE_THRESHOLD = 0.1


def scan_norms(make_field, s: int, refinements, grid_factory) -> tuple[NormReport, str, float]:
    """Sobolev-norm refinement scan of an analytic field family.

    Verdict 'divergent' when the mean log2 growth per 2x refinement
    exceeds 0.1, else 'finite'."""
    refinements = list(refinements)
    if len(refinements) < 3 or any(b <= a for a, b in zip(refinements, refinements[1:])):
        raise PreconditionError("need at least 3 strictly increasing refinements")
    report = NormReport()
    label = f"H{s}"
    for n in refinements:
        grid = grid_factory(n)
        report.add(label, calc.sobolev_norm(make_field(grid), s), grid_n=n)
    rate = report.growth_rate(label)
    verdict = "divergent" if rate > DIVERGENCE_RATE_THRESHOLD else "finite"
    return report, verdict, rate


def norm_divergence_scan(
    spec: CounterexampleSpec,
    s: int,
    refinements,
    r0: float = 1.0,
    theta_cells=None,
) -> tuple[NormReport, str, float]:
    """Scan of ||u_exact||_{H^s} = ||grad f||_{H^s} / 2 on refining sector
    grids; exhibits the flip from finite to divergent at s = [pi/omega]+1."""

    def factory(n):
        nt = theta_cells(n) if theta_cells else max(8, n // 4)
        return make_grid(DomainSpec.sector(spec.omega, r0), n, nt)

    def field(grid):
        return (-0.5) * counterexample_field(spec, 1.0, grid).grad_f

    return scan_norms(field, s, refinements, factory)
