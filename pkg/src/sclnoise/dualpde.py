"""Backward dual parabolic machinery.

Heat-kernel norm closed forms, the backward equation
dt phi + (1/2) Lap phi + F phi = 0 solved by time reversal, its Feynman-Kac
Monte Carlo representation, and the W^{1,inf} / Gronwall certificates used
by the uniqueness argument.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import (
    InvalidParameterError,
    SchemeMonotonicityError,
)
from .flux import FluxField

__all__ = [
    "heat_kernel_norm",
    "DualPDEProblem",
    "DualField",
    "solve_dual_backward",
    "feynman_kac",
    "W1InfCertificate",
    "w1inf_certificate",
    "GronwallCertificate",
    "gronwall_certificate",
    "smooth_plateau",
]


def heat_kernel_norm(t: float, m: float, d: int = 1, gradient: bool = False) -> float:
    """Exact L^m norm of the heat kernel p_t (or of its gradient, d=1 only).

    The t-exponents are t^{-d(1-1/m)/2} for p_t and t^{-(1+d-d/m)/2} for
    grad p_t; constants come from the closed-form Gaussian integrals.
    """
    if t <= 0:
        raise InvalidParameterError("heat kernel norms need t > 0")
    if m < 1:
        raise InvalidParameterError("exponent m must be in [1, inf]")
    if not gradient:
        if math.isinf(m):
            return (2.0 * math.pi * t) ** (-d / 2.0)
        return (2.0 * math.pi * t) ** (-d * (1.0 - 1.0 / m) / 2.0) * m ** (-d / (2.0 * m))
    if d != 1:
        raise InvalidParameterError("gradient norms implemented in d = 1 only")
    if math.isinf(m):
        return (2.0 * math.pi) ** (-0.5) * math.exp(-0.5) / t
    mth_power = (
        (2.0 * math.pi * t) ** (-m / 2.0)
        * t ** (-float(m))
        * math.gamma((m + 1.0) / 2.0)
        * (2.0 * t / m) ** ((m + 1.0) / 2.0)
    )
    return mth_power ** (1.0 / m)


def smooth_plateau(radius: float, ramp: float) -> Callable[[np.ndarray], np.ndarray]:
    """Smooth [0, 1] cutoff: 1 on [-radius, radius], 0 beyond radius + ramp.

    The ramp is a C^2 polynomial; the W^{1,inf} norm is max(1, 1.875/ramp).
    """
    if radius <= 0 or ramp <= 0:
        raise InvalidParameterError("plateau radius and ramp must be positive")

    def psi(x):
        z = (np.abs(np.asarray(x, dtype=float)) - radius) / ramp
        z = np.clip(z, 0.0, 1.0)
        # integral of the bump profile from z to 1, normalized to [0, 1]
        return 1.0 - z ** 2 * (10.0 - 15.0 * z + 6.0 * z ** 2) * z

    return psi


@dataclass(frozen=True)
class DualPDEProblem:
    """Backward problem dt phi + (1/2) Lap phi + (F + h) phi = 0, phi(t_fin) = psi."""

    F: Callable[[np.ndarray], np.ndarray]
    psi: Callable[[np.ndarray], np.ndarray]
    t_fin: float
    h: Optional[Callable[[np.ndarray], np.ndarray]] = None
    psi_sup: float = 1.0
    psi_grad_sup: float = 2.0

    def __post_init__(self):
        if self.t_fin <= 0:
            raise InvalidParameterError("t_fin must be positive")


@dataclass(frozen=True)
class DualField:
    """Sampled space-time solution of the backward dual problem.

    times ascend from 0 to t_fin; phi[k] is the slice at times[k], and
    dt_phi[k] is the scheme-consistent time derivative
    -((1/2) Lap phi + V phi) evaluated with the marching stencil.
    """

    times: np.ndarray
    phi: np.ndarray
    dt_phi: np.ndarray
    x_min: float
    x_max: float
    t_fin: float

    @property
    def n_x(self) -> int:
        return self.phi.shape[1]

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n_x

    @property
    def x_centers(self) -> np.ndarray:
        return self.x_min + (np.arange(self.n_x) + 0.5) * self.dx

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.phi)))

    def grad_sup_norm(self) -> float:
        return float(np.max(np.abs(np.diff(self.phi, axis=1))) / self.dx)

    def w1inf_norm(self) -> float:
        return max(self.sup_norm(), self.grad_sup_norm())


def _neumann_lap(phi: np.ndarray, dx: float) -> np.ndarray:
    """Second difference with reflected (zero-flux) boundary ghosts."""
    p = np.empty(phi.size + 2)
    p[1:-1] = phi
    p[0] = phi[0]
    p[-1] = phi[-1]
    return (p[2:] - 2.0 * phi + p[:-2]) / (dx * dx)


def solve_dual_backward(
    prob: DualPDEProblem,
    x_min: float,
    x_max: float,
    n_cells: int,
    cfl: float = 0.45,
    n_samples: int = 33,
) -> DualField:
    """Explicit backward solve by time reversal.

    In the reversed time tau = t_fin - t the problem is a forward heat
    equation with potential, marched with dtau <= cfl dx^2 (and further
    restricted if the potential has a negative part).  Nonnegativity of phi
    is asserted; a dip below -1e-12 is an internal scheme bug.
    """
    if not (0.0 < cfl < 1.0):
        raise InvalidParameterError("cfl must lie in (0, 1)")
    dx = (x_max - x_min) / n_cells
    x = x_min + (np.arange(n_cells) + 0.5) * dx
    V = np.asarray(prob.F(x), dtype=float)
    if np.min(V) < -1e-12:
        raise InvalidParameterError("potential F must be nonnegative on the grid")
    if prob.h is not None:
        V = V + np.asarray(prob.h(x), dtype=float)
    neg = max(0.0, -float(np.min(V)))
    dtau = cfl / (1.0 / (dx * dx) + neg)

    phi = np.asarray(prob.psi(x), dtype=float)
    sample_taus = np.linspace(0.0, prob.t_fin, n_samples)

    def rate(p):
        return 0.5 * _neumann_lap(p, dx) + V * p

    slices = [phi.copy()]
    dts = [-rate(phi)]
    tau = 0.0
    next_sample = 1
    while tau < prob.t_fin - 1e-14:
        step = min(dtau, prob.t_fin - tau)
        phi = phi + step * rate(phi)
        tau += step
        if float(np.min(phi)) < -1e-12:
            raise SchemeMonotonicityError(
                f"dual solve produced phi = {float(np.min(phi)):.3e} < 0 at tau={tau:.4g}")
        while next_sample < n_samples and tau >= sample_taus[next_sample] - 0.5 * dtau:
            slices.append(phi.copy())
            dts.append(-rate(phi))
            next_sample += 1

    while len(slices) < n_samples:
        slices.append(phi.copy())
        dts.append(-rate(phi))

    # reorder from tau (backward) to t (forward)
    times = prob.t_fin - sample_taus[::-1]
    phi_arr = np.asarray(slices[::-1])
    dt_arr = np.asarray(dts[::-1])
    return DualField(times=times, phi=phi_arr, dt_phi=dt_arr,
                     x_min=x_min, x_max=x_max, t_fin=prob.t_fin)


def feynman_kac(
    g_potential,
    h_potential,
    data,
    t: float,
    x: float,
    n_samples: int,
    seed: int,
    n_steps: int = 128,
) -> tuple[float, float]:
    """Monte Carlo average of exp(int_0^t (g+h)(x + W_r - W_t) dr) data(x - W_t).

    The time integral uses the trapezoid rule on the path lattice.  Sampling
    is chunked at a fixed size so results are seed-deterministic.
    """
    if n_samples < 100:
        raise InvalidParameterError("feynman_kac needs n_samples >= 100")
    if t <= 0:
        raise InvalidParameterError("time t must be positive")
    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    dt = t / n_steps
    chunk = 20000
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < n_samples:
        n = min(chunk, n_samples - done)
        incr = rng.standard_normal((n, n_steps)) * math.sqrt(dt)
        W = np.empty((n, n_steps + 1))
        W[:, 0] = 0.0
        np.cumsum(incr, axis=1, out=W[:, 1:])
        pos = x + W - W[:, -1:]
        pot = np.zeros((n, n_steps + 1))
        if g_potential is not None:
            pot += np.asarray(g_potential(pos), dtype=float)
        if h_potential is not None:
            pot += np.asarray(h_potential(pos), dtype=float)
        integral = np.trapezoid(pot, dx=dt, axis=1)
        vals = np.exp(integral) * np.asarray(data(x - W[:, -1]), dtype=float)
        total += float(np.sum(vals))
        total_sq += float(np.sum(vals * vals))
        done += n
    mean = total / n_samples
    var = max(0.0, total_sq / n_samples - mean * mean) * n_samples / max(1, n_samples - 1)
    stderr = math.sqrt(var / n_samples)
    return mean, stderr


# ---------------------------------------------------------------------------
# certificates


@dataclass(frozen=True)
class W1InfCertificate:
    measured_sup: float
    measured_grad_sup: float
    bound_sup: float
    bound_grad: float
    sup_ok: bool
    grad_ok: bool

    @property
    def all_ok(self) -> bool:
        return self.sup_ok and self.grad_ok

    def as_text(self) -> str:
        return (
            f"measured_sup = {self.measured_sup!r}\n"
            f"bound_sup = {self.bound_sup!r}\n"
            f"sup_ok = {self.sup_ok}\n"
            f"measured_grad_sup = {self.measured_grad_sup!r}\n"
            f"bound_grad = {self.bound_grad!r}\n"
            f"grad_ok = {self.grad_ok}\n"
        )


def w1inf_certificate(
    dual: DualField,
    g_p_norm: float,
    p: float,
    h_inf: float,
    psi_sup: float,
    psi_grad_sup: float,
) -> W1InfCertificate:
    """Compare the measured W^{1,inf} norm to the explicit Gronwall-form bound.

    Bound: M = sqrt(2) psi_sup exp((g_p A(T) + h_inf sqrt(T))^2 T) with
    A(T) = (T^{1-1/p}/(1-1/p))^{1/2}, and gradient bound
    psi_grad_sup + M (g_p int_0^T ||grad p_tau||_{p'} dtau
                      + 2 h_inf sqrt(2 T^2 ... )) assembled from the
    heat-kernel norm power laws.
    """
    if p <= 1:
        raise InvalidParameterError("the bound needs p > 1")
    T = dual.t_fin
    A = math.sqrt(T ** (1.0 - 1.0 / p) / (1.0 - 1.0 / p))
    M = math.sqrt(2.0) * psi_sup * math.exp((g_p_norm * A + h_inf * math.sqrt(T)) ** 2 * T)

    # int_0^T ||grad p_tau||_{p'} dtau via the exact power law tau^{-alpha}
    p_conj = p / (p - 1.0)
    alpha = (2.0 - 1.0 / p_conj) / 2.0
    c1 = heat_kernel_norm(1.0, p_conj, d=1, gradient=True)
    grad_kernel_int = c1 * T ** (1.0 - alpha) / (1.0 - alpha)
    grad_h_term = h_inf * 2.0 * math.sqrt(T) * math.sqrt(2.0 / math.pi)
    bound_grad = psi_grad_sup + M * (g_p_norm * grad_kernel_int + grad_h_term)

    measured_sup = dual.sup_norm()
    measured_grad = dual.grad_sup_norm()
    return W1InfCertificate(
        measured_sup=measured_sup,
        measured_grad_sup=measured_grad,
        bound_sup=M,
        bound_grad=bound_grad,
        sup_ok=bool(measured_sup <= M * (1.0 + 1e-9)),
        grad_ok=bool(measured_grad <= bound_grad * (1.0 + 1e-9)),
    )


@dataclass(frozen=True)
class GronwallCertificate:
    sup_lhs: float
    c_target: float
    tolerance: float
    ok: bool

    def as_text(self) -> str:
        return (
            f"sup_lhs = {self.sup_lhs!r}\n"
            f"c_target = {self.c_target!r}\n"
            f"tolerance = {self.tolerance!r}\n"
            f"ok = {self.ok}\n"
        )


def gronwall_certificate(
    dual: DualField,
    b: FluxField,
    R: float,
    F: Callable[[np.ndarray], np.ndarray],
    h: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    C_target: float | None = None,
    n_xi: int = 33,
    tolerance: float = 0.05,
) -> GronwallCertificate:
    """Certify dt phi + (1/2) Lap phi + div_x(b phi) <= C on the grid.

    F (and h) must be the potentials the dual field was solved with, so the
    stored dt_phi cancels the diffusion term exactly and the left side
    reduces to b dx phi + (div_x b - F - h) phi.  The default target is
    ||b||_inf ||grad phi||_inf.
    """
    if R > b.support_radius_R:
        raise InvalidParameterError(
            f"R={R} exceeds the field's support radius {b.support_radius_R}")
    x = dual.x_centers
    dx = dual.dx
    V = np.asarray(F(x), dtype=float)
    if h is not None:
        V = V + np.asarray(h(x), dtype=float)
    xi = np.linspace(-R, R, n_xi)
    if C_target is None:
        C_target = b.linf_bound * dual.grad_sup_norm()

    sup_lhs = -np.inf
    for k in range(dual.times.size):
        phi = dual.phi[k]
        lap = _neumann_lap(phi, dx)
        # central first difference with reflected ghosts, matching _neumann_lap
        pad = np.empty(phi.size + 2)
        pad[1:-1] = phi
        pad[0] = phi[0]
        pad[-1] = phi[-1]
        dphi = (pad[2:] - pad[:-2]) / (2.0 * dx)
        base = dual.dt_phi[k] + 0.5 * lap  # cancels to -V phi exactly
        for q in xi:
            lhs = base + b.eval(x, q) * dphi + b.div_x(x, q) * phi
            sup_lhs = max(sup_lhs, float(np.max(lhs)))
    ok = bool(sup_lhs <= C_target * (1.0 + tolerance) + 1e-12)
    return GronwallCertificate(sup_lhs=sup_lhs, c_target=float(C_target),
                               tolerance=tolerance, ok=ok)
