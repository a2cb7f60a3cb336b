"""Uniform 2D grids, field containers, and second-order stencil calculus.

Layout conventions used everywhere in the package:

* arrays are float64, C-order, shape (ny, nx), y index outermost;
* periodic grids cover [0, Lx) x [0, Ly) with nodes x_i = i*hx, hx = Lx/nx,
  and no duplicated seam column or row;
* Dirichlet grids store the nx*ny interior nodes x_i = (i+1)*hx with
  hx = Lx/(nx+1); the boundary ring is an implicit zero and exists only for
  elliptic test problems, never for dynamics.

All first derivatives are central differences (one-sided second-order rows
at Dirichlet edges). Divergence and gradient are exact negative adjoints of
each other under the midpoint inner product on periodic grids, which is what
the discrete energy identities in the solvers rely on.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

PERIODIC = "periodic"
DIRICHLET = "dirichlet"

_BCS = (PERIODIC, DIRICHLET)


@dataclass(frozen=True)
class Grid2D:
    nx: int
    ny: int
    Lx: float
    Ly: float
    bc: str = PERIODIC

    def __post_init__(self):
        if self.nx < 4 or self.ny < 4:
            raise ValueError("grid needs nx, ny >= 4")
        if not (self.Lx > 0.0 and self.Ly > 0.0):
            raise ValueError("grid needs positive extents")
        if self.bc not in _BCS:
            raise ValueError("unknown boundary kind %r" % (self.bc,))

    @property
    def hx(self) -> float:
        if self.bc == PERIODIC:
            return self.Lx / self.nx
        return self.Lx / (self.nx + 1)

    @property
    def hy(self) -> float:
        if self.bc == PERIODIC:
            return self.Ly / self.ny
        return self.Ly / (self.ny + 1)

    @property
    def shape(self):
        return (self.ny, self.nx)

    def x(self) -> np.ndarray:
        if self.bc == PERIODIC:
            return self.hx * np.arange(self.nx)
        return self.hx * (1.0 + np.arange(self.nx))

    def y(self) -> np.ndarray:
        if self.bc == PERIODIC:
            return self.hy * np.arange(self.ny)
        return self.hy * (1.0 + np.arange(self.ny))

    def mesh(self):
        """Return X, Y coordinate arrays of shape (ny, nx)."""
        return np.meshgrid(self.x(), self.y())

    def cell_area(self) -> float:
        return self.hx * self.hy


def _as_values(grid, values):
    a = np.asarray(values, dtype=np.float64)
    if a.shape != grid.shape:
        raise ValueError("values shape %r does not match grid %r" % (a.shape, grid.shape))
    if not np.all(np.isfinite(a)):
        raise ValueError("field contains non-finite values")
    return np.ascontiguousarray(a)


@dataclass
class ScalarField:
    grid: Grid2D
    values: np.ndarray

    def __post_init__(self):
        self.values = _as_values(self.grid, self.values)

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros(grid.shape))

    @classmethod
    def from_function(cls, grid, fn):
        X, Y = grid.mesh()
        return cls(grid, fn(X, Y))

    def copy(self):
        return ScalarField(self.grid, self.values.copy())

    def mean(self) -> float:
        return float(self.values.mean())


@dataclass
class VectorField2:
    grid: Grid2D
    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        self.u = _as_values(self.grid, self.u)
        self.v = _as_values(self.grid, self.v)

    @classmethod
    def zeros(cls, grid):
        z = np.zeros(grid.shape)
        return cls(grid, z, z.copy())

    def copy(self):
        return VectorField2(self.grid, self.u.copy(), self.v.copy())

    def magnitude(self) -> np.ndarray:
        return np.sqrt(self.u * self.u + self.v * self.v)


@dataclass
class TensorField2:
    grid: Grid2D
    xx: np.ndarray
    xy: np.ndarray
    yx: np.ndarray
    yy: np.ndarray

    def __post_init__(self):
        self.xx = _as_values(self.grid, self.xx)
        self.xy = _as_values(self.grid, self.xy)
        self.yx = _as_values(self.grid, self.yx)
        self.yy = _as_values(self.grid, self.yy)


# ---------------------------------------------------------------------------
# array-level difference helpers


def dx_periodic(a, hx):
    return (np.roll(a, -1, 1) - np.roll(a, 1, 1)) / (2.0 * hx)


def dy_periodic(a, hy):
    return (np.roll(a, -1, 0) - np.roll(a, 1, 0)) / (2.0 * hy)


def _d_onesided(a, h, axis):
    # central inside, second-order one-sided rows at the array edges
    out = np.empty_like(a)
    s = [slice(None), slice(None)]

    def sl(spec):
        s2 = list(s)
        s2[axis] = spec
        return tuple(s2)

    out[sl(slice(1, -1))] = (a[sl(slice(2, None))] - a[sl(slice(0, -2))]) / (2.0 * h)
    out[sl(0)] = (-3.0 * a[sl(0)] + 4.0 * a[sl(1)] - a[sl(2)]) / (2.0 * h)
    out[sl(-1)] = (3.0 * a[sl(-1)] - 4.0 * a[sl(-2)] + a[sl(-3)]) / (2.0 * h)
    return out


def _dx(a, grid):
    if grid.bc == PERIODIC:
        return dx_periodic(a, grid.hx)
    return _d_onesided(a, grid.hx, axis=1)


def _dy(a, grid):
    if grid.bc == PERIODIC:
        return dy_periodic(a, grid.hy)
    return _d_onesided(a, grid.hy, axis=0)


# ---------------------------------------------------------------------------
# field operators


def grad(f: ScalarField) -> VectorField2:
    """Central-difference gradient."""
    return VectorField2(f.grid, _dx(f.values, f.grid), _dy(f.values, f.grid))


def div(w: VectorField2) -> ScalarField:
    """Central-difference divergence, the exact negative adjoint of grad
    under the midpoint inner product on periodic grids."""
    return ScalarField(w.grid, _dx(w.u, w.grid) + _dy(w.v, w.grid))


def perp_grad(f: ScalarField) -> VectorField2:
    """Rotated gradient (d_y f, -d_x f); streamline velocity of f."""
    return VectorField2(f.grid, _dy(f.values, f.grid), -_dx(f.values, f.grid))


def curl2(w: VectorField2) -> ScalarField:
    """Scalar curl d_x w_v - d_y w_u; equals div of the rotated field
    (w_v, -w_u) and sends perp_grad(psi) to minus the wide-stencil
    Laplacian of psi."""
    return ScalarField(w.grid, _dx(w.v, w.grid) - _dy(w.u, w.grid))


def integrate(f: ScalarField) -> float:
    """Midpoint quadrature: sum of node values times the cell area."""
    return float(f.values.sum() * f.grid.cell_area())


def lp_norm(f, p: float) -> float:
    """Discrete L^p norm with midpoint quadrature.

    Scalar fields use |f|, vector fields the pointwise Euclidean magnitude.
    Exponents p <= 1 are outside the conjugate-exponent range this package
    works in and are rejected.
    """
    if not p > 1.0:
        raise ValueError("lp_norm requires p > 1")
    if isinstance(f, VectorField2):
        mag = f.magnitude()
        area = f.grid.cell_area()
    else:
        mag = np.abs(f.values)
        area = f.grid.cell_area()
    return float((np.sum(mag**p) * area) ** (1.0 / p))


def linf_norm(f) -> float:
    if isinstance(f, VectorField2):
        return float(f.magnitude().max())
    return float(np.abs(f.values).max())
