"""Flux fields b(x, xi), their mollifications and divergence data.

The central example is the inhomogeneous Burgers-type field
b(x, u) = 2 sgn(x) min(sqrt|x|, K) u, whose deterministic conservation law
admits two distinct closed-form entropy solutions for the indicator initial
datum; both are provided here, together with their support edges.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import InvalidParameterError

__all__ = [
    "FluxField",
    "MollifierSpec",
    "bump_kernel",
    "bump_kernel_prime",
    "model_flux",
    "constant_flux",
    "burgers_flux",
    "flux_from_table",
    "flux_from_spec",
    "reference_solution",
    "reference_edges",
    "reference_gap_l1",
    "mollify_flux",
    "divergence_sup",
    "DivergenceSup",
]


# ---------------------------------------------------------------------------
# kernels

_BUMP_NORM = 35.0 / 32.0  # makes (1 - z^2)^3 integrate to 1 on [-1, 1]


def bump_kernel(z):
    """Even, nonnegative, compactly supported polynomial bump with unit mass."""
    z = np.asarray(z, dtype=float)
    inside = np.abs(z) < 1.0
    return np.where(inside, _BUMP_NORM * (1.0 - z * z) ** 3, 0.0)


def bump_kernel_prime(z):
    z = np.asarray(z, dtype=float)
    inside = np.abs(z) < 1.0
    return np.where(inside, _BUMP_NORM * (-6.0 * z) * (1.0 - z * z) ** 2, 0.0)


def _composite_gl(n_panels: int, n_nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre rule on [-1, 1]; symmetric by construction."""
    base_x, base_w = np.polynomial.legendre.leggauss(n_nodes)
    edges = np.linspace(-1.0, 1.0, n_panels + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * base_x[None, :]).ravel()
    weights = (half[:, None] * base_w[None, :]).ravel()
    return nodes, weights


# 32 panels x 8 nodes resolves the sqrt-type kinks of the model flux well
# below the tolerances the tests pin.
_CONV_NODES, _CONV_WEIGHTS = _composite_gl(32, 8)
# cheaper tensor rule for the generic (non-separable) double convolution
_CONV2_NODES, _CONV2_WEIGHTS = _composite_gl(8, 4)


# ---------------------------------------------------------------------------
# flux field container


@dataclass(frozen=True)
class FluxField:
    """Velocity field b(x, xi) with its spatial divergence and norm metadata.

    eval and div_x are vectorized over broadcastable array arguments.
    When b is linear in the state, xi_slope holds c with b(x, xi) = c(x) xi
    (and xi_slope_dx its derivative); solvers use this as a fast path.
    kinks_x lists x-locations where div_x is undefined (a null set).
    """

    eval: Callable[[np.ndarray, np.ndarray], np.ndarray]
    div_x: Callable[[np.ndarray, np.ndarray], np.ndarray]
    support_radius_R: float
    linf_bound: float
    p_exponent: float
    name: str = "custom"
    xi_slope: Optional[Callable[[np.ndarray], np.ndarray]] = None
    xi_slope_dx: Optional[Callable[[np.ndarray], np.ndarray]] = None
    kinks_x: tuple = field(default=())

    def state_primitive(self, x, w, n_quad: int = 32):
        """B(x, w) = int_0^w b(x, v) dv, by Gauss-Legendre in the state."""
        if self.xi_slope is not None:
            return 0.5 * self.xi_slope(np.asarray(x, dtype=float)) * np.asarray(w) ** 2
        gx, gw = np.polynomial.legendre.leggauss(n_quad)
        x = np.asarray(x, dtype=float)
        w = np.asarray(w, dtype=float)
        v = 0.5 * w[..., None] * (gx + 1.0)
        vals = self.eval(np.broadcast_to(x[..., None], v.shape), v)
        return 0.5 * w * np.sum(gw * vals, axis=-1)

    def state_primitive_div(self, x, w, n_quad: int = 32):
        """int_0^w div_x b(x, v) dv (the x-derivative of state_primitive)."""
        if self.xi_slope_dx is not None:
            return 0.5 * self.xi_slope_dx(np.asarray(x, dtype=float)) * np.asarray(w) ** 2
        gx, gw = np.polynomial.legendre.leggauss(n_quad)
        x = np.asarray(x, dtype=float)
        w = np.asarray(w, dtype=float)
        v = 0.5 * w[..., None] * (gx + 1.0)
        vals = self.div_x(np.broadcast_to(x[..., None], v.shape), v)
        return 0.5 * w * np.sum(gw * vals, axis=-1)


# ---------------------------------------------------------------------------
# concrete fields


def model_flux(K: float, R: float = 1.0) -> FluxField:
    """The capped square-root model field b(x, u) = 2 sgn(x) min(sqrt|x|, K) u."""
    if K <= 0:
        raise InvalidParameterError(f"cap K must be positive, got {K}")
    K = float(K)

    def slope(x):
        x = np.asarray(x, dtype=float)
        return 2.0 * np.sign(x) * np.minimum(np.sqrt(np.abs(x)), K)

    def slope_dx(x):
        # d/dx [2 sgn(x) sqrt|x|] = |x|^{-1/2} inside the cap, 0 outside;
        # undefined on the kink set {0, +-K^2} (a null set, returned as 0)
        x = np.asarray(x, dtype=float)
        ax = np.abs(x)
        inside = (ax > 0.0) & (ax < K * K)
        with np.errstate(divide="ignore"):
            d = np.where(inside, 1.0 / np.sqrt(np.where(inside, ax, 1.0)), 0.0)
        return d

    def b(x, xi):
        return slope(x) * np.asarray(xi, dtype=float)

    def div_b(x, xi):
        return slope_dx(x) * np.asarray(xi, dtype=float)

    return FluxField(
        eval=b,
        div_x=div_b,
        support_radius_R=float(R),
        linf_bound=2.0 * K * float(R),
        p_exponent=1.5,
        name="model",
        xi_slope=slope,
        xi_slope_dx=slope_dx,
        kinks_x=(0.0, K * K, -K * K),
    )


def constant_flux(c: float, R: float = 1.0) -> FluxField:
    c = float(c)

    def b(x, xi):
        return np.broadcast_to(np.asarray(c), np.broadcast_shapes(np.shape(x), np.shape(xi))).copy()

    def zero(x, xi):
        return np.zeros(np.broadcast_shapes(np.shape(x), np.shape(xi)))

    return FluxField(
        eval=b, div_x=zero,
        support_radius_R=float(R), linf_bound=abs(c), p_exponent=2.0,
        name="constant",
    )


def burgers_flux(R: float = 1.0) -> FluxField:
    """Homogeneous Burgers speed b(x, u) = u."""

    def b(x, xi):
        return np.broadcast_to(np.asarray(xi, dtype=float),
                               np.broadcast_shapes(np.shape(x), np.shape(xi))).copy()

    def zero(x, xi):
        return np.zeros(np.broadcast_shapes(np.shape(x), np.shape(xi)))

    def one_slope(x):
        return np.ones(np.shape(x))

    def zero_slope(x):
        return np.zeros(np.shape(x))

    return FluxField(
        eval=b, div_x=zero,
        support_radius_R=float(R), linf_bound=float(R), p_exponent=2.0,
        name="burgers_like",
        xi_slope=one_slope, xi_slope_dx=zero_slope,
    )


def flux_from_table(path: str, R: float = 1.0, p_exponent: float = 2.0) -> FluxField:
    """Flux from a CSV of (x, xi, b, div_b) samples on a rectangular lattice."""
    from scipy.interpolate import RegularGridInterpolator

    xs, xis, bs, ds = [], [], [], []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            xs.append(float(row["x"]))
            xis.append(float(row["xi"]))
            bs.append(float(row["b"]))
            ds.append(float(row["div_b"]))
    x_ax = np.unique(xs)
    xi_ax = np.unique(xis)
    if len(x_ax) * len(xi_ax) != len(xs):
        raise InvalidParameterError("custom_table CSV is not a full rectangular lattice")
    order = np.lexsort((xis, xs))
    b_grid = np.asarray(bs)[order].reshape(len(x_ax), len(xi_ax))
    d_grid = np.asarray(ds)[order].reshape(len(x_ax), len(xi_ax))
    b_it = RegularGridInterpolator((x_ax, xi_ax), b_grid, bounds_error=False, fill_value=0.0)
    d_it = RegularGridInterpolator((x_ax, xi_ax), d_grid, bounds_error=False, fill_value=0.0)

    def b(x, xi):
        x, xi = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(xi, dtype=float))
        return b_it(np.stack([x, xi], axis=-1))

    def div_b(x, xi):
        x, xi = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(xi, dtype=float))
        return d_it(np.stack([x, xi], axis=-1))

    return FluxField(
        eval=b, div_x=div_b,
        support_radius_R=float(R), linf_bound=float(np.max(np.abs(b_grid))),
        p_exponent=float(p_exponent), name="custom_table",
    )


_FLUX_REGISTRY = {
    "model": lambda params: model_flux(K=float(params.get("K", 2.0)),
                                       R=float(params.get("R", 1.0))),
    "constant": lambda params: constant_flux(c=float(params.get("c", 1.0)),
                                             R=float(params.get("R", 1.0))),
    "burgers_like": lambda params: burgers_flux(R=float(params.get("R", 1.0))),
    "custom_table": lambda params: flux_from_table(params["path"],
                                                   R=float(params.get("R", 1.0))),
}


def flux_from_spec(name: str, params: dict | None = None) -> FluxField:
    if name not in _FLUX_REGISTRY:
        raise InvalidParameterError(
            f"unknown flux {name!r}; known: {sorted(_FLUX_REGISTRY)}")
    return _FLUX_REGISTRY[name](params or {})


# ---------------------------------------------------------------------------
# the non-uniqueness example's closed forms


def reference_edges(variant: int, t) -> tuple[np.ndarray, np.ndarray]:
    """Support [lo, hi] of the two closed-form entropy solutions."""
    t = np.asarray(t, dtype=float)
    hi = (0.5 * t + 1.0) ** 2
    if variant == 1:
        lo = np.zeros_like(t)
    elif variant == 2:
        lo = -((0.5 * t) ** 2)
    else:
        raise InvalidParameterError(f"variant must be 1 or 2, got {variant}")
    return lo, hi


def reference_solution(variant: int, t: float, x, K: float, T_max: float):
    """Indicator value of the moving support of u1 or u2."""
    if not (0.0 <= t <= T_max):
        raise InvalidParameterError(f"t={t} outside [0, T_max={T_max}]")
    if not (K > T_max / 2.0 + 1.0):
        raise InvalidParameterError(
            f"cap K={K} too small for horizon T_max={T_max}: need K > T_max/2 + 1")
    lo, hi = reference_edges(variant, t)
    x = np.asarray(x, dtype=float)
    return ((x >= lo) & (x <= hi)).astype(float)


def reference_gap_l1(t) -> np.ndarray:
    """Exact L1 distance between u1 and u2: the left supports differ on
    [-(t/2)^2, 0), so the gap is (t/2)^2."""
    t = np.asarray(t, dtype=float)
    return (0.5 * t) ** 2


# ---------------------------------------------------------------------------
# mollification


@dataclass(frozen=True)
class MollifierSpec:
    """Regularization scales for the x and xi directions.

    The kernel profile is the fixed even polynomial bump; it integrates to 1
    within quadrature tolerance and is even exactly by construction.
    """

    spatial_scale_eps: float
    state_scale_delta: float

    def __post_init__(self):
        if self.spatial_scale_eps <= 0 or self.state_scale_delta <= 0:
            raise InvalidParameterError("mollifier scales must be positive")

    kernel = staticmethod(bump_kernel)
    kernel_prime = staticmethod(bump_kernel_prime)


def mollify_flux(
    b: FluxField,
    spec: MollifierSpec,
    window: tuple[float, float] | None = None,
    table_n: int | None = None,
) -> FluxField:
    """Smooth b by convolution with the bump kernel in x and xi.

    For state-linear fields the xi convolution is exact (even kernel kills
    the linear correction) and only the x convolution is computed.  With a
    window and table_n, the slope is precomputed on a lattice and evaluated
    by linear interpolation, which is what the time steppers want.
    """
    eps = spec.spatial_scale_eps
    delta = spec.state_scale_delta
    if window is not None:
        width = window[1] - window[0]
        if max(eps, delta) > 0.5 * width:
            raise InvalidParameterError(
                f"mollifier scale {max(eps, delta)} exceeds half the working window {width}")

    if b.xi_slope is not None:
        slope, kernel, kernel_prime = b.xi_slope, spec.kernel, spec.kernel_prime
        z, w = _CONV_NODES, _CONV_WEIGHTS
        wk = w * kernel(z)
        wkp = w * kernel_prime(z)

        def slope_eps(x):
            x = np.asarray(x, dtype=float)
            return np.sum(wk * slope(x[..., None] - eps * z), axis=-1)

        def slope_eps_dx(x):
            x = np.asarray(x, dtype=float)
            return np.sum(wkp * slope(x[..., None] - eps * z), axis=-1) / eps

        if window is not None and table_n is not None:
            pad = eps
            xt = np.linspace(window[0] - pad, window[1] + pad, int(table_n))
            st = slope_eps(xt)
            dt = slope_eps_dx(xt)

            def slope_fast(x, _xt=xt, _st=st):
                return np.interp(np.asarray(x, dtype=float), _xt, _st)

            def slope_dx_fast(x, _xt=xt, _dt=dt):
                return np.interp(np.asarray(x, dtype=float), _xt, _dt)

            s_fn, ds_fn = slope_fast, slope_dx_fast
        else:
            s_fn, ds_fn = slope_eps, slope_eps_dx

        def b_eps(x, xi):
            return s_fn(x) * np.asarray(xi, dtype=float)

        def div_eps(x, xi):
            return ds_fn(x) * np.asarray(xi, dtype=float)

        return FluxField(
            eval=b_eps, div_x=div_eps,
            support_radius_R=b.support_radius_R,
            linf_bound=b.linf_bound,
            p_exponent=b.p_exponent,
            name=b.name + f"_mollified[{eps:g},{delta:g}]",
            xi_slope=s_fn, xi_slope_dx=ds_fn,
        )

    # generic field: tensor quadrature in both directions
    z, wz = _CONV2_NODES, _CONV2_WEIGHTS
    eta, weta = _CONV2_NODES, _CONV2_WEIGHTS
    wq = (wz * spec.kernel(z))[:, None] * (weta * spec.kernel(eta))[None, :]
    wqp = (wz * spec.kernel_prime(z))[:, None] * (weta * spec.kernel(eta))[None, :]

    def b_eps(x, xi):
        x = np.asarray(x, dtype=float)
        xi = np.asarray(xi, dtype=float)
        xs = x[..., None, None] - eps * z[:, None]
        xis = xi[..., None, None] - delta * eta[None, :]
        return np.sum(wq * b.eval(xs, xis), axis=(-2, -1))

    def div_eps(x, xi):
        x = np.asarray(x, dtype=float)
        xi = np.asarray(xi, dtype=float)
        xs = x[..., None, None] - eps * z[:, None]
        xis = xi[..., None, None] - delta * eta[None, :]
        return np.sum(wqp * b.eval(xs, xis), axis=(-2, -1)) / eps

    return FluxField(
        eval=b_eps, div_x=div_eps,
        support_radius_R=b.support_radius_R,
        linf_bound=b.linf_bound,
        p_exponent=b.p_exponent,
        name=b.name + f"_mollified[{eps:g},{delta:g}]",
    )


# ---------------------------------------------------------------------------
# divergence envelope


@dataclass(frozen=True)
class DivergenceSup:
    """F(x) = sup over |xi| <= R of |div_x b(x, xi)| on a spatial lattice."""

    x: np.ndarray
    F: np.ndarray
    lp_norm: float
    p: float
    skipped: np.ndarray  # indices within half a cell of the kink set

    def as_function(self) -> Callable[[np.ndarray], np.ndarray]:
        def F_of_x(q, _x=self.x, _F=self.F):
            return np.interp(np.asarray(q, dtype=float), _x, _F, left=0.0, right=0.0)
        return F_of_x


def divergence_sup(
    b: FluxField,
    R: float,
    x: np.ndarray,
    n_xi: int = 65,
    p: float | None = None,
) -> DivergenceSup:
    """Envelope of |div_x b| over the state window, with its L^p norm."""
    if R > b.support_radius_R:
        raise InvalidParameterError(
            f"R={R} exceeds the field's support radius {b.support_radius_R}")
    x = np.asarray(x, dtype=float)
    if p is None:
        p = b.p_exponent
    dx = np.median(np.diff(x)) if x.size > 1 else 1.0
    skipped = np.zeros(x.size, dtype=bool)
    for k in b.kinks_x:
        skipped |= np.abs(x - k) < 0.5 * dx
    xi = np.linspace(-R, R, n_xi)
    F = np.max(np.abs(b.div_x(x[:, None], xi[None, :])), axis=1)
    F = np.where(skipped, 0.0, F)
    lp = float((np.sum(F**p) * dx) ** (1.0 / p))
    return DivergenceSup(x=x, F=F, lp_norm=lp, p=float(p),
                         skipped=np.flatnonzero(skipped))
