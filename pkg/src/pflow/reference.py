"""Classical Euler vorticity stepper, written plainly as a reduction target.

At p = 2 the p-momentum is the velocity and the transported p-vorticity is
the ordinary vorticity, so step_p_euler must reproduce ordinary 2D Euler
dynamics on the same stencils. This module re-derives that path without the
p-machinery: the streamfunction solve inverts the wide five-point symbol
directly, and the Shu-Osher stages are spelled out in their textbook convex
form instead of the incremental arrangement the main stepper uses. The two
paths share only the grid containers, the difference stencils, and the
advection kernel; agreement to round-off is a regression check on
everything layered above those.
"""

from __future__ import annotations

import numpy as np

from .fields import PERIODIC, ScalarField, perp_grad
from .transport import SEMI_LAGRANGIAN, advect_scalar


def _wide_poisson(rhs: np.ndarray, hx: float, hy: float) -> np.ndarray:
    """Invert -div(grad .) built from composed central differences.

    Eigenvalues sin^2(tx)/hx^2 + sin^2(ty)/hy^2; the constant and the
    Nyquist checkerboard modes are null and are zeroed on both sides.
    """
    ny, nx = rhs.shape
    sx = np.sin(2.0 * np.pi * np.arange(nx // 2 + 1) / nx) / hx
    sy = np.sin(2.0 * np.pi * np.arange(ny) / ny) / hy
    if nx % 2 == 0:
        sx[nx // 2] = 0.0
    if ny % 2 == 0:
        sy[ny // 2] = 0.0
    lam = sx[None, :] ** 2 + sy[:, None] ** 2
    rh = np.fft.rfft2(rhs)
    out = np.zeros_like(rh)
    np.divide(rh, lam, out=out, where=lam > 0.0)
    return np.fft.irfft2(out, s=rhs.shape)


def classical_euler_step(omega: ScalarField, dt: float, scheme: str = SEMI_LAGRANGIAN) -> ScalarField:
    """One SSP-RK3 step of d(omega)/dt + v.grad(omega) = 0, v = perp_grad(psi),
    -Lap(psi) = omega, on a periodic grid."""
    grid = omega.grid
    if grid.bc != PERIODIC:
        raise ValueError("the classical reference is periodic only")
    dt = float(dt)

    def stage(om: np.ndarray) -> np.ndarray:
        psi = ScalarField(grid, _wide_poisson(om, grid.hx, grid.hy))
        out = advect_scalar(ScalarField(grid, om), perp_grad(psi), dt, scheme).values
        m = out.mean()
        return out if m == 0.0 else out - m

    om0 = omega.values
    om1 = stage(om0)
    om2 = 0.75 * om0 + 0.25 * stage(om1)
    om3 = om0 / 3.0 + (2.0 / 3.0) * stage(om2)
    return ScalarField(grid, om3)
