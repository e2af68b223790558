"""Explicit viscous solver for dt v + g(t, x, v) dx v = eps * Lap v.

Upwind transport by the local sign of g plus centered diffusion, under a
combined CFL rule that keeps the update a convex combination of neighbor
values (monotone scheme, discrete maximum principle).  Also: the viscous
defect-measure estimate, a-priori bound certificates, and the entropy
residual quadrature.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DefectUndefinedError,
    DomainTooSmallError,
    InvalidParameterError,
    InvalidTestFunctionError,
    StepSizeUnderflowError,
)
from .fields import GridFunction, KineticField
from .flux import FluxField, bump_kernel, bump_kernel_prime, _composite_gl

__all__ = [
    "SolverConfig",
    "Trajectory",
    "speed_from_flux",
    "solve_viscous",
    "DefectMeasureEstimate",
    "defect_measure",
    "AprioriCertificate",
    "check_apriori_bounds",
    "SpaceTimeBump",
    "kruzkov_entropy_residual",
]

BOUNDARY_GUARD_CELLS = 5
# mass below this is treated as numerically zero when locating the support;
# diffusive tails decay past it well inside a properly padded domain
BOUNDARY_SUPPORT_TOL = 1e-7


@dataclass(frozen=True)
class SolverConfig:
    viscosity_eps: float
    cfl_number: float = 0.45
    boundary: str = "compact-support-pad"

    def __post_init__(self):
        if self.viscosity_eps < 0:
            raise InvalidParameterError("viscosity must be >= 0")
        if not (0.0 < self.cfl_number < 1.0):
            raise InvalidParameterError("cfl_number must lie in (0, 1)")
        if self.boundary not in ("compact-support-pad", "outflow"):
            raise InvalidParameterError(f"unknown boundary mode {self.boundary!r}")


@dataclass(frozen=True)
class Trajectory:
    """Time-indexed solution snapshots on a fixed grid."""

    snapshots: tuple
    times: np.ndarray
    config: SolverConfig

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        object.__setattr__(self, "times", t)
        if len(self.snapshots) != t.size or t.size < 2:
            raise InvalidParameterError("trajectory needs >= 2 matching snapshots")
        if t[0] != 0.0 or np.any(np.diff(t) <= 0):
            raise InvalidParameterError("times must start at 0 and increase strictly")

    @property
    def grid(self) -> GridFunction:
        return self.snapshots[0]

    def at_time(self, t: float) -> GridFunction:
        i = int(np.argmin(np.abs(self.times - t)))
        return self.snapshots[i]


def speed_from_flux(b: FluxField, x_centers: np.ndarray):
    """Static speed g(t, x, v) = b(x, v), with the state-linear fast path."""
    if b.xi_slope is not None:
        s = np.asarray(b.xi_slope(x_centers), dtype=float)

        def g(t, x, v, _s=s):
            return _s * v
    else:
        def g(t, x, v):
            return b.eval(x, v)
    return g


def _check_support(v: np.ndarray, dx: float) -> None:
    guard = BOUNDARY_GUARD_CELLS
    edge = max(np.max(np.abs(v[:guard])), np.max(np.abs(v[-guard:])))
    if edge > BOUNDARY_SUPPORT_TOL:
        raise DomainTooSmallError(
            f"solution support reached within {guard} cells of the boundary "
            f"(edge magnitude {edge:.3e}); widen the padded domain")


def solve_viscous(
    g,
    u0: GridFunction,
    cfg: SolverConfig,
    T: float,
    output_times=None,
) -> Trajectory:
    """March the upwind + diffusion scheme to time T.

    g is callable (t, x_centers, v) -> speeds.  The time step is
    dt = cfl / (sup|g|/dx + 2 eps/dx^2), recomputed every step, so the
    update stays monotone even if sup|g| grows.  Output times are snapped
    to the nearest internal step; t=0 and t=T are always present.
    """
    if T <= 0:
        raise InvalidParameterError("horizon T must be positive")
    x = u0.centers
    dx = u0.dx
    eps = cfg.viscosity_eps
    v = u0.values.copy()
    _check_support(v, dx)

    outs = [] if output_times is None else sorted(float(t) for t in output_times)
    outs = [t for t in outs if 0.0 < t < T]

    snapshots = [u0.with_values(v.copy())]
    times = [0.0]
    out_idx = 0
    t = 0.0
    dt_floor = max(T, 1.0) * 1e-14

    while t < T:
        a = np.asarray(g(t, x, v), dtype=float)
        A = float(np.max(np.abs(a)))
        denom = A / dx + 2.0 * eps / (dx * dx)
        dt = (T - t) if denom == 0.0 else cfg.cfl_number / denom
        dt = min(dt, T - t)
        # land exactly on the next requested output when the stable step
        # would overshoot it (relevant for transport-free or inviscid runs
        # where the stable step can span the whole horizon)
        if out_idx < len(outs):
            gap_next = outs[out_idx] - t
            if gap_next > dt_floor:
                dt = min(dt, gap_next)
        if dt < dt_floor:
            raise StepSizeUnderflowError(
                f"time step {dt:.3e} underflowed at t={t:.6g} (sup|g|={A:.3e})")
        a = np.asarray(g(t + 0.5 * dt, x, v), dtype=float)

        vp = np.empty(v.size + 2)
        vp[1:-1] = v
        if cfg.boundary == "compact-support-pad":
            vp[0] = 0.0
            vp[-1] = 0.0
        else:  # outflow: copy edge values
            vp[0] = v[0]
            vp[-1] = v[-1]
        left = vp[:-2]
        right = vp[2:]
        dv_up = np.where(a > 0.0, v - left, right - v) / dx
        lap = (right - 2.0 * v + left) / (dx * dx)
        v = v - dt * a * dv_up + dt * eps * lap

        t = t + dt
        if cfg.boundary == "compact-support-pad":
            _check_support(v, dx)

        # snap requested outputs to the first step at or past them
        while out_idx < len(outs) and t >= outs[out_idx] - 1e-12:
            snapshots.append(u0.with_values(v.copy()))
            times.append(t)
            out_idx += 1
            if len(times) >= 2 and times[-1] == times[-2]:
                snapshots.pop()
                times.pop()

    if times[-1] < T:
        snapshots.append(u0.with_values(v.copy()))
        times.append(t)
    return Trajectory(tuple(snapshots), np.asarray(times), cfg)


# ---------------------------------------------------------------------------
# defect measure


@dataclass(frozen=True)
class DefectMeasureEstimate:
    """Grid estimate of the kinetic dissipation measure.

    density has shape (n_times, n_x, n_xi) and approximates
    eps |dx v|^2 rho_bar_delta(xi - v); total_mass integrates it with the
    trapezoid rule in time.
    """

    density: np.ndarray
    times: np.ndarray
    x_centers: np.ndarray
    xi_centers: np.ndarray
    total_mass: float
    R: float

    def mass_at_times(self) -> np.ndarray:
        dx = self.x_centers[1] - self.x_centers[0]
        dxi = self.xi_centers[1] - self.xi_centers[0]
        return np.sum(self.density, axis=(1, 2)) * dx * dxi


def defect_measure(
    traj: Trajectory,
    cfg: SolverConfig,
    R: float,
    n_xi: int,
    delta: float | None = None,
) -> DefectMeasureEstimate:
    eps = cfg.viscosity_eps
    if eps == 0.0:
        raise DefectUndefinedError("defect measure needs a viscous trajectory (eps > 0)")
    g0 = traj.grid
    dx = g0.dx
    ref = KineticField(np.zeros((g0.n, int(n_xi))), g0.x_min, g0.x_max, float(R))
    xi = ref.xi_centers
    if delta is None:
        delta = 2.0 * ref.dxi

    density = np.empty((len(traj.snapshots), g0.n, xi.size))
    for k, snap in enumerate(traj.snapshots):
        v = snap.values
        dvdx = np.gradient(v, dx)
        diss = eps * dvdx * dvdx
        kernel = bump_kernel((xi[None, :] - v[:, None]) / delta) / delta
        density[k] = diss[:, None] * kernel
    per_time = np.sum(density, axis=(1, 2)) * dx * ref.dxi
    total = float(np.trapezoid(per_time, traj.times))
    return DefectMeasureEstimate(
        density=density, times=traj.times, x_centers=g0.centers,
        xi_centers=xi, total_mass=total, R=float(R),
    )


# ---------------------------------------------------------------------------
# a-priori certificates


@dataclass(frozen=True)
class AprioriCertificate:
    linf_initial: float
    linf_max: float
    max_principle_slack: float
    lp_lhs: float
    lp_rhs: float
    lp_slack: float
    p: float
    max_principle_ok: bool
    lp_ok: bool = field(default=True)

    @property
    def all_ok(self) -> bool:
        return self.max_principle_ok and self.lp_ok

    def as_text(self) -> str:
        lines = [
            f"linf_initial = {self.linf_initial!r}",
            f"linf_max = {self.linf_max!r}",
            f"max_principle_slack = {self.max_principle_slack!r}",
            f"max_principle_ok = {self.max_principle_ok}",
            f"p = {self.p!r}",
            f"lp_lhs = {self.lp_lhs!r}",
            f"lp_rhs = {self.lp_rhs!r}",
            f"lp_slack = {self.lp_slack!r}",
            f"lp_ok = {self.lp_ok}",
        ]
        return "\n".join(lines) + "\n"


def check_apriori_bounds(
    traj: Trajectory,
    m: DefectMeasureEstimate,
    b: FluxField,
    p: float,
    tol: float | None = None,
) -> AprioriCertificate:
    """Certify the maximum principle and the L^p energy budget.

    Budget: max_t ||v||_p^p + p(p-1) int |xi|^{p-2} dm  <=
    ||u0||_p^p + p ||u0||_inf^{p-1} ||div b||_{L1([0,T] x grid x [-||u0||_inf, ||u0||_inf])}.
    """
    if p < 1:
        raise InvalidParameterError("budget exponent p must be >= 1")
    u0 = traj.snapshots[0]
    linf0 = u0.norm_linf()
    if tol is None:
        tol = 1e-3 * max(linf0, 1e-300)
    linf_max = max(s.norm_linf() for s in traj.snapshots)
    mp_slack = linf0 + tol - linf_max

    lp_max = max(s.norm_lp(p) ** p for s in traj.snapshots)
    xi = m.xi_centers
    dxi = xi[1] - xi[0]
    dx = m.x_centers[1] - m.x_centers[0]
    with np.errstate(divide="ignore"):
        w = np.abs(xi) ** (p - 2.0) if p != 2.0 else np.ones_like(xi)
    w = np.where(np.isfinite(w), w, 0.0)
    weighted = np.sum(m.density * w[None, None, :], axis=(1, 2)) * dx * dxi
    dissipation = p * (p - 1.0) * float(np.trapezoid(weighted, m.times))
    lhs = lp_max + dissipation

    T = float(traj.times[-1])
    xg = m.x_centers
    xi_win = np.linspace(-linf0, linf0, 65)
    div_abs = np.abs(b.div_x(xg[:, None], xi_win[None, :]))
    div_abs = np.where(np.isfinite(div_abs), div_abs, 0.0)
    div_l1 = T * float(np.sum(div_abs)) * dx * (xi_win[1] - xi_win[0])
    rhs = u0.norm_lp(p) ** p + p * linf0 ** (p - 1.0) * div_l1
    lp_slack = rhs - lhs

    return AprioriCertificate(
        linf_initial=linf0, linf_max=linf_max,
        max_principle_slack=mp_slack,
        lp_lhs=lhs, lp_rhs=rhs, lp_slack=lp_slack, p=float(p),
        max_principle_ok=bool(mp_slack >= 0.0),
        lp_ok=bool(lp_slack >= -tol * max(u0.norm_lp(p) ** p, 1e-300)),
    )


# ---------------------------------------------------------------------------
# entropy residual


@dataclass(frozen=True)
class SpaceTimeBump:
    """Separable nonnegative test function with analytic derivatives.

    phi(t, x) = bump((t - t0)/rt) * bump((x - x0)/rx), compactly supported
    in (t0 - rt, t0 + rt) x (x0 - rx, x0 + rx).
    """

    t0: float
    rt: float
    x0: float
    rx: float

    def value(self, t, x):
        return bump_kernel((np.asarray(t) - self.t0) / self.rt) * \
            bump_kernel((np.asarray(x) - self.x0) / self.rx)

    def dt(self, t, x):
        return bump_kernel_prime_scaled((np.asarray(t) - self.t0), self.rt) * \
            bump_kernel((np.asarray(x) - self.x0) / self.rx)

    def dx(self, t, x):
        return bump_kernel((np.asarray(t) - self.t0) / self.rt) * \
            bump_kernel_prime_scaled((np.asarray(x) - self.x0), self.rx)

    @property
    def t_support(self) -> tuple[float, float]:
        return (self.t0 - self.rt, self.t0 + self.rt)

    @property
    def x_support(self) -> tuple[float, float]:
        return (self.x0 - self.rx, self.x0 + self.rx)


def bump_kernel_prime_scaled(y, r):
    return bump_kernel_prime(np.asarray(y) / r) / r


def kruzkov_entropy_residual(
    u,
    b: FluxField,
    k: float,
    phi: SpaceTimeBump,
    domain: tuple[float, float, float],
    x_breaks=None,
    n_panels: int = 24,
    n_nodes: int = 8,
) -> float:
    """Entropy-pair residual of a candidate solution u against constant k.

    u is callable (t, x_array) -> values.  domain = (T, x_min, x_max) is the
    open parabolic cylinder phi must stay inside.  x_breaks, if given, maps t
    to a list of discontinuity locations of u(t, .), used to split the
    x-quadrature panels so the result is spectrally accurate in phi.

    Returns int int [ |u-k| phi_t + sgn(u-k)(B(x,u)-B(x,k)) phi_x
                      + sgn(u-k)(Bx(x,u)-Bx(x,k)) phi ] dx dt,
    which is >= 0 (up to quadrature error) exactly for entropy solutions.
    """
    T, x_min, x_max = domain
    t_lo, t_hi = phi.t_support
    xs_lo, xs_hi = phi.x_support
    if not (0.0 < t_lo and t_hi < T and x_min < xs_lo and xs_hi < x_max):
        raise InvalidTestFunctionError(
            "test function support must be strictly inside the parabolic cylinder")

    t_nodes, t_weights = _composite_gl(max(4, n_panels // 2), n_nodes)
    t_nodes = phi.t0 + phi.rt * t_nodes
    t_weights = phi.rt * t_weights

    base_x, base_w = np.polynomial.legendre.leggauss(n_nodes)
    total = 0.0
    for tq, tw in zip(t_nodes, t_weights):
        cuts = [xs_lo, xs_hi]
        if x_breaks is not None:
            cuts += [c for c in x_breaks(tq) if xs_lo < c < xs_hi]
        cuts = np.array(sorted(cuts))
        # composite panels between consecutive cuts
        xs = []
        ws = []
        for a, c in zip(cuts[:-1], cuts[1:]):
            sub = np.linspace(a, c, max(2, n_panels // max(1, len(cuts) - 1) + 1))
            half = 0.5 * np.diff(sub)
            mid = 0.5 * (sub[1:] + sub[:-1])
            xs.append((mid[:, None] + half[:, None] * base_x[None, :]).ravel())
            ws.append((half[:, None] * base_w[None, :]).ravel())
        xq = np.concatenate(xs)
        wq = np.concatenate(ws)

        uv = np.asarray(u(tq, xq), dtype=float)
        sgn = np.sign(uv - k)
        Bu = b.state_primitive(xq, uv)
        Bk = b.state_primitive(xq, np.full_like(xq, k))
        Bxu = b.state_primitive_div(xq, uv)
        Bxk = b.state_primitive_div(xq, np.full_like(xq, k))
        integrand = (
            np.abs(uv - k) * phi.dt(tq, xq)
            + sgn * (Bu - Bk) * phi.dx(tq, xq)
            + sgn * (Bxu - Bxk) * phi.value(tq, xq)
        )
        total += tw * float(np.sum(wq * integrand))
    return total
