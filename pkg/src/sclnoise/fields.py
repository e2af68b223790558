"""Grid data containers: 1-D scalar fields and (x, xi) kinetic fields.

Both grids are uniform and cell-centered.  A ``GridFunction`` holds one
solution snapshot u(t, .); a ``KineticField`` holds a function f(x, xi) on
the tensor grid [x_min, x_max] x [-R, R].
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidParameterError

__all__ = ["GridFunction", "KineticField", "make_xi_grid"]


@dataclass(frozen=True)
class GridFunction:
    """Scalar field on a uniform cell-centered spatial grid."""

    values: np.ndarray
    x_min: float
    x_max: float

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if v.ndim != 1 or v.size < 2:
            raise InvalidParameterError("GridFunction needs a 1-D array with >= 2 cells")
        if not (self.x_max > self.x_min):
            raise InvalidParameterError("empty spatial domain")
        if not np.all(np.isfinite(v)):
            raise InvalidParameterError("non-finite values in GridFunction")

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n

    @property
    def centers(self) -> np.ndarray:
        return self.x_min + (np.arange(self.n) + 0.5) * self.dx

    def with_values(self, values: np.ndarray) -> "GridFunction":
        return replace(self, values=np.asarray(values, dtype=float))

    def same_grid(self, other: "GridFunction") -> bool:
        return (
            self.n == other.n
            and self.x_min == other.x_min
            and self.x_max == other.x_max
        )

    def integral(self) -> float:
        return float(np.sum(self.values) * self.dx)

    def norm_l1(self) -> float:
        return float(np.sum(np.abs(self.values)) * self.dx)

    def norm_lp(self, p: float) -> float:
        return float((np.sum(np.abs(self.values) ** p) * self.dx) ** (1.0 / p))

    def norm_linf(self) -> float:
        return float(np.max(np.abs(self.values)))

    def interp(self, x: np.ndarray) -> np.ndarray:
        """Linear interpolation, zero outside the domain."""
        return np.interp(x, self.centers, self.values, left=0.0, right=0.0)


def make_xi_grid(R: float, n_cells: int) -> tuple[float, int]:
    """Round R up to a whole number of cells of width 2R0/n and return (R, n).

    Kept trivial (the grid is parameterized by R and n directly); exists so
    experiment configs can state intent.
    """
    if R <= 0 or n_cells < 2:
        raise InvalidParameterError("xi grid needs R > 0 and >= 2 cells")
    return float(R), int(n_cells)


@dataclass(frozen=True)
class KineticField:
    """Function f(x, xi) on the tensor grid [x_min, x_max] x [-R, R].

    values has shape (n_x, n_xi).  Cell-centered in both directions.
    """

    values: np.ndarray
    x_min: float
    x_max: float
    R: float

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if v.ndim != 2:
            raise InvalidParameterError("KineticField values must be 2-D (n_x, n_xi)")
        if self.R <= 0 or not (self.x_max > self.x_min):
            raise InvalidParameterError("bad KineticField domain")
        if not np.all(np.isfinite(v)):
            raise InvalidParameterError("non-finite values in KineticField")

    @property
    def n_x(self) -> int:
        return self.values.shape[0]

    @property
    def n_xi(self) -> int:
        return self.values.shape[1]

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n_x

    @property
    def dxi(self) -> float:
        return 2.0 * self.R / self.n_xi

    @property
    def x_centers(self) -> np.ndarray:
        return self.x_min + (np.arange(self.n_x) + 0.5) * self.dx

    @property
    def xi_centers(self) -> np.ndarray:
        return -self.R + (np.arange(self.n_xi) + 0.5) * self.dxi

    def same_grid(self, other: "KineticField") -> bool:
        return (
            self.values.shape == other.values.shape
            and self.x_min == other.x_min
            and self.x_max == other.x_max
            and self.R == other.R
        )

    def with_values(self, values: np.ndarray) -> "KineticField":
        return replace(self, values=np.asarray(values, dtype=float))

    def interp(self, x: np.ndarray, xi: np.ndarray) -> np.ndarray:
        """Bilinear interpolation at broadcastable (x, xi) points, zero outside."""
        xc, xic = self.x_centers, self.xi_centers
        x = np.asarray(x, dtype=float)
        xi = np.asarray(xi, dtype=float)
        ix = np.clip((x - xc[0]) / self.dx, 0.0, self.n_x - 1.0)
        jx = np.clip((xi - xic[0]) / self.dxi, 0.0, self.n_xi - 1.0)
        i0 = np.clip(np.floor(ix).astype(int), 0, self.n_x - 2)
        j0 = np.clip(np.floor(jx).astype(int), 0, self.n_xi - 2)
        tx = ix - i0
        tj = jx - j0
        v = self.values
        out = (
            v[i0, j0] * (1 - tx) * (1 - tj)
            + v[i0 + 1, j0] * tx * (1 - tj)
            + v[i0, j0 + 1] * (1 - tx) * tj
            + v[i0 + 1, j0 + 1] * tx * tj
        )
        inside = (
            (x >= xc[0]) & (x <= xc[-1]) & (xi >= xic[0]) & (xi <= xic[-1])
        )
        return np.where(inside, out, 0.0)
