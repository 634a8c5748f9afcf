"""Uniform rectangle grids and 5-point difference operators.

The computational domain is the rectangle [0, a] x [0, b] carved into
nx x ny square cells (the two mesh widths must agree).  Grid functions are
stored as (nx+1, ny+1) arrays with u[i, j] = u(i*h, j*h); interior unknowns
are packed row-major with the x index outermost.  The discrete Laplacian is
the standard 5-point stencil; discrete L2 inner products carry the cell
area h^2.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .errors import DomainError

__all__ = [
    "DomainSpec",
    "neg_laplacian",
    "laplacian_apply",
    "pack",
    "unpack",
    "inner",
    "norm_l2",
    "norm_sup",
]


@dataclass(frozen=True)
class DomainSpec:
    """Rectangle [0, a] x [0, b] with nx x ny square cells."""

    a: float
    b: float
    nx: int
    ny: int

    def __post_init__(self):
        if self.a <= 0 or self.b <= 0:
            raise DomainError("domain side lengths must be positive")
        if self.nx < 4 or self.ny < 4:
            raise DomainError("at least 4 cells per direction required")
        hx = self.a / self.nx
        hy = self.b / self.ny
        if abs(hx - hy) > 1e-12 * max(hx, hy):
            raise DomainError(
                f"cells must be square: a/nx = {hx:g} but b/ny = {hy:g}")

    @property
    def h(self) -> float:
        return self.a / self.nx

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx + 1, self.ny + 1)

    @property
    def interior_shape(self) -> tuple[int, int]:
        return (self.nx - 1, self.ny - 1)

    @property
    def n_interior(self) -> int:
        return (self.nx - 1) * (self.ny - 1)

    def nodes(self) -> tuple[np.ndarray, np.ndarray]:
        """Meshgrid ('ij' indexing) of the node coordinates."""
        x = np.linspace(0.0, self.a, self.nx + 1)
        y = np.linspace(0.0, self.b, self.ny + 1)
        return np.meshgrid(x, y, indexing="ij")

    def refine(self) -> "DomainSpec":
        return DomainSpec(self.a, self.b, 2 * self.nx, 2 * self.ny)


@lru_cache(maxsize=16)
def neg_laplacian(dom: DomainSpec) -> sp.csc_matrix:
    """Sparse -Delta_h on the interior unknowns (SPD)."""
    h2 = dom.h ** 2

    def second_diff(n):
        return sp.diags([-1.0, 2.0, -1.0], [-1, 0, 1],
                        shape=(n, n), format="csr")

    tx = second_diff(dom.nx - 1)
    ty = second_diff(dom.ny - 1)
    ix = sp.identity(dom.nx - 1, format="csr")
    iy = sp.identity(dom.ny - 1, format="csr")
    return ((sp.kron(tx, iy) + sp.kron(ix, ty)) / h2).tocsc()


def laplacian_apply(dom: DomainSpec, u: np.ndarray) -> np.ndarray:
    """5-point Delta_h of a full-grid function, on the interior nodes."""
    if u.shape != dom.shape:
        raise DomainError("grid function shape mismatch")
    h2 = dom.h ** 2
    return (u[2:, 1:-1] + u[:-2, 1:-1] + u[1:-1, 2:] + u[1:-1, :-2]
            - 4.0 * u[1:-1, 1:-1]) / h2


def pack(dom: DomainSpec, u: np.ndarray) -> np.ndarray:
    """Interior nodes of a full-grid array as a flat vector."""
    return u[1:-1, 1:-1].ravel()


def unpack(dom: DomainSpec, vec: np.ndarray, boundary: float = 0.0
           ) -> np.ndarray:
    """Flat interior vector back to a full-grid array with constant
    boundary values."""
    out = np.full(dom.shape, boundary, dtype=float)
    out[1:-1, 1:-1] = vec.reshape(dom.interior_shape)
    return out


def inner(dom: DomainSpec, u: np.ndarray, v: np.ndarray) -> float:
    """Discrete L2 inner product h^2 * sum(u*v) over all nodes."""
    return float(dom.h ** 2 * np.sum(u * v))


def norm_l2(dom: DomainSpec, u: np.ndarray) -> float:
    return float(np.sqrt(max(inner(dom, u, u), 0.0)))


def norm_sup(u: np.ndarray) -> float:
    return float(np.max(np.abs(u))) if u.size else 0.0
