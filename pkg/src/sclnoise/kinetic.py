"""Kinetic-formulation toolkit.

chi construction, moment reconstruction, the gap functional |f| - f^2 with
its validity flags, reconstruction of generalized kinetic candidates, and
the mollification-commutator quadrature.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    InvalidParameterError,
    NotAKineticFunctionError,
    ResolutionInsufficientError,
    StateOutOfRangeError,
)
from .fields import GridFunction, KineticField
from .flux import FluxField, bump_kernel, bump_kernel_prime, _composite_gl

__all__ = [
    "chi_field",
    "reconstruct_u",
    "GapReport",
    "gap_report",
    "pair_gap_identity",
    "reconstruct_from_generalized",
    "commutator_error",
]

# violations below this are mollified-cell-boundary noise, not real failures
DEFAULT_FLAG_TOL = 2.0 * (64.0 * np.finfo(float).eps + 1e-12)


def chi_field(u: GridFunction, R: float, n_xi: int) -> KineticField:
    """Signed indicator chi(u(x), xi) = 1_{xi < u} - 1_{xi < 0} on the tensor grid."""
    if u.norm_linf() > R:
        raise StateOutOfRangeError(
            f"|u| reaches {u.norm_linf()}, exceeding the state window R={R}")
    f = KineticField(np.zeros((u.n, int(n_xi))), u.x_min, u.x_max, float(R))
    xi = f.xi_centers
    vals = (xi[None, :] < u.values[:, None]).astype(float) - (xi[None, :] < 0.0)
    return f.with_values(vals)


def reconstruct_u(f: KineticField, p: float = 2.0) -> tuple[GridFunction, GridFunction]:
    """Zeroth and p-th moments of f in xi.

    u(x) = sum_xi f dxi; moment_p(x) = p sum_xi |xi|^{p-1} sgn(xi) f dxi,
    which equals |u|^p when f is a true kinetic function.
    """
    u_vals = np.sum(f.values, axis=1) * f.dxi
    xi = f.xi_centers
    w = p * np.abs(xi) ** (p - 1.0) * np.sign(xi)
    moment = np.sum(f.values * w[None, :], axis=1) * f.dxi
    u = GridFunction(u_vals, f.x_min, f.x_max)
    return u, u.with_values(moment)


@dataclass(frozen=True)
class GapReport:
    """Gap functional of a kinetic candidate and its validity flags."""

    gap_total: float
    gap_density_max: float
    sign_ok: bool
    bound_ok: bool
    monotone_ok: bool
    jump_ok: bool

    @property
    def all_ok(self) -> bool:
        return self.sign_ok and self.bound_ok and self.monotone_ok and self.jump_ok

    def first_failing_flag(self) -> str | None:
        for name in ("sign", "bound", "monotone", "jump"):
            if not getattr(self, name + "_ok"):
                return name
        return None

    def as_text(self) -> str:
        lines = [
            f"gap_total = {self.gap_total!r}",
            f"gap_density_max = {self.gap_density_max!r}",
            f"sign_ok = {self.sign_ok}",
            f"bound_ok = {self.bound_ok}",
            f"monotone_ok = {self.monotone_ok}",
            f"jump_ok = {self.jump_ok}",
        ]
        return "\n".join(lines) + "\n"


def gap_report(f: KineticField, tol: float = DEFAULT_FLAG_TOL) -> GapReport:
    """Compute sum (|f| - f^2) dx dxi and check the kinetic-candidate conditions.

    Checks, with tolerance tol: sign (sgn(xi) f >= 0), bound (|f| <= 1),
    one-sided monotonicity in xi away from 0, and the jump condition
    f(x, xi) - f(x, xi + h) + 1 >= 0 for every grid offset h > 0.
    Failures set flags; nothing is thrown.
    """
    v = f.values
    density = np.abs(v) - v * v
    gap_total = float(np.sum(density) * f.dx * f.dxi)
    xi = f.xi_centers

    sign_ok = bool(np.min(np.sign(xi)[None, :] * v) >= -tol)
    bound_ok = bool(np.max(np.abs(v)) <= 1.0 + tol)

    # monotone: nonincreasing in xi separately on each side of 0
    same_side = xi[:-1] * xi[1:] > 0.0
    diffs = v[:, :-1] - v[:, 1:]
    monotone_ok = bool(np.min(diffs[:, same_side], initial=0.0) >= -tol)

    # jump: min over j < k of f[:, j] - f[:, k] must be >= -1;
    # computed with a running suffix maximum instead of all pairs
    suffix_max = np.maximum.accumulate(v[:, ::-1], axis=1)[:, ::-1]
    worst = np.min(v[:, :-1] - suffix_max[:, 1:])
    jump_ok = bool(worst >= -1.0 - tol)

    return GapReport(
        gap_total=gap_total,
        gap_density_max=float(np.max(density)),
        sign_ok=sign_ok,
        bound_ok=bound_ok,
        monotone_ok=monotone_ok,
        jump_ok=jump_ok,
    )


def pair_gap_identity(chi1: KineticField, chi2: KineticField) -> tuple[float, float]:
    """Both sides of gap((chi1 + chi2)/2) = (1/4) ||chi1 - chi2||_2^2."""
    if not chi1.same_grid(chi2):
        raise InvalidParameterError("pair_gap_identity needs matching grids")
    mean = chi1.with_values(0.5 * (chi1.values + chi2.values))
    lhs = gap_report(mean).gap_total
    rhs = 0.25 * float(np.sum((chi1.values - chi2.values) ** 2) * chi1.dx * chi1.dxi)
    return lhs, rhs


def reconstruct_from_generalized(
    f: KineticField, tol: float = 1e-6
) -> tuple[GridFunction, float]:
    """Collapse a generalized kinetic candidate to a state field.

    Requires gap_total <= tol and all flags; otherwise raises with the first
    failing check.  Returns (u, residual) with residual the L1 distance
    between f and the exact kinetic function of u.
    """
    report = gap_report(f)
    flag = report.first_failing_flag()
    if flag is not None:
        raise NotAKineticFunctionError(flag)
    if report.gap_total > tol:
        raise NotAKineticFunctionError(
            "gap", f"gap_total {report.gap_total} exceeds tolerance {tol}")
    u, _ = reconstruct_u(f)
    chi = chi_field(u, f.R, f.n_xi)
    residual = float(np.sum(np.abs(f.values - chi.values)) * f.dx * f.dxi)
    return u, residual


def _mollify_kinetic(f: KineticField, eps: float, delta: float,
                     nodes: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """f convolved with the tensor bump at scales (eps, delta), on f's grid."""
    wz = weights * bump_kernel(nodes)
    X = f.x_centers[:, None]
    XI = f.xi_centers[None, :]
    out = np.zeros_like(f.values)
    for zq, wq in zip(nodes, wz):
        inner = np.zeros_like(f.values)
        for er, wr in zip(nodes, wz):
            inner += wr * f.interp(X - eps * zq, XI - delta * er)
        out += wq * inner
    return out


def commutator_error(
    b: FluxField,
    f: KineticField,
    eps: float,
    delta: float,
    phi,
    window: tuple[float, float] | None = None,
    n_panels: int = 8,
    n_nodes: int = 4,
) -> float:
    """Quadrature of the mollification-commutator integral.

    Evaluates, over the (x, xi) grid of f and the kernel support in (z, eta),

        sum f^{eps,delta}(x, xi) f(x - eps z, xi - delta eta) rho_bar(eta)
            [ rho'(z)/eps (b(x, xi) - b(x - eps z, xi - delta eta))
              + rho(z) div_x b(x - eps z, xi - delta eta) ] phi(x)

    times the cell measures.  Vanishes identically for constant b and tends
    to 0 as delta then eps shrink when b is Sobolev in x.
    """
    if eps <= 0 or delta <= 0:
        raise InvalidParameterError("mollification scales must be positive")
    win = window if window is not None else (f.x_min, f.x_max)
    if max(eps, delta) > 0.5 * (win[1] - win[0]):
        raise InvalidParameterError("mollification scale exceeds half the working window")
    if eps < f.dx or delta < f.dxi:
        raise ResolutionInsufficientError(
            f"scales ({eps}, {delta}) below grid resolution ({f.dx}, {f.dxi})")

    nodes, weights = _composite_gl(n_panels, n_nodes)
    f_md = _mollify_kinetic(f, eps, delta, nodes, weights)

    X = f.x_centers[:, None]
    XI = f.xi_centers[None, :]
    b_here = b.eval(X, XI)
    phi_x = np.asarray(phi(f.x_centers), dtype=float)[:, None]

    w_rho = weights * bump_kernel(nodes)        # for the eta integral and div term
    w_rhop = weights * bump_kernel_prime(nodes)  # for the gradient term

    acc = np.zeros_like(f.values)
    for zq, wq, wqp in zip(nodes, w_rho, w_rhop):
        Xs = X - eps * zq
        for er, wr in zip(nodes, w_rho):
            XIs = XI - delta * er
            fs = f.interp(Xs, XIs)
            grad_term = (wqp / eps) * (b_here - b.eval(Xs, XIs))
            div_term = wq * b.div_x(Xs, XIs)
            acc += wr * fs * (grad_term + div_term)
    total = np.sum(f_md * acc * phi_x) * f.dx * f.dxi
    return float(total)
