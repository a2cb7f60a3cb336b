"""FFT utilities tied to the composed central-difference symbols.

The composed first-difference operator has Fourier symbol i*sin(2*pi*k/n)/h,
so the wide five-point Laplacian diagonalizes with eigenvalues
sin^2(theta_x)/hx^2 + sin^2(theta_y)/hy^2. On even grids that symbol
vanishes not only for the constant but also for the two-cell checkerboard
modes (Nyquist pairs); those modes span the null space of every composed
divergence-form operator here and are treated as gauge directions.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=32)
def _symbols(nx: int, ny: int, hx: float, hy: float):
    sx = np.sin(2.0 * np.pi * np.arange(nx // 2 + 1) / nx) / hx
    sy = np.sin(2.0 * np.pi * np.arange(ny) / ny) / hy
    if nx % 2 == 0:
        sx[nx // 2] = 0.0
    if ny % 2 == 0:
        sy[ny // 2] = 0.0
    lam = sx[None, :] ** 2 + sy[:, None] ** 2
    return sx, sy, lam


@lru_cache(maxsize=32)
def _null_patterns(nx: int, ny: int):
    """Orthonormal-up-to-scale +-1 patterns spanning the stencil null space."""
    pats = [np.ones((ny, nx))]
    colsign = np.where(np.arange(nx) % 2 == 0, 1.0, -1.0)
    rowsign = np.where(np.arange(ny) % 2 == 0, 1.0, -1.0)
    if nx % 2 == 0:
        pats.append(np.tile(colsign, (ny, 1)))
    if ny % 2 == 0:
        pats.append(np.tile(rowsign[:, None], (1, nx)))
    if nx % 2 == 0 and ny % 2 == 0:
        pats.append(np.outer(rowsign, colsign))
    return tuple(pats)


def project_null_modes(values: np.ndarray) -> np.ndarray:
    """Remove the constant and any checkerboard null modes (gauge fixing)."""
    ny, nx = values.shape
    out = values
    for pat in _null_patterns(nx, ny):
        coef = float(np.sum(out * pat)) / (nx * ny)
        out = out - coef * pat
    return out


def null_mode_coefficients(values: np.ndarray):
    ny, nx = values.shape
    return [float(np.sum(values * pat)) / (nx * ny) for pat in _null_patterns(nx, ny)]


def solve_wide_poisson(values: np.ndarray, hx: float, hy: float) -> np.ndarray:
    """Solve -Lap_wide(psi) = values for the gauge-fixed psi.

    Null-mode content of the source is discarded; the result has zero mean
    and zero checkerboard components.
    """
    ny, nx = values.shape
    _, _, lam = _symbols(nx, ny, hx, hy)
    vhat = np.fft.rfft2(values)
    with np.errstate(divide="ignore", invalid="ignore"):
        phat = np.where(lam > 0.0, vhat / np.where(lam > 0.0, lam, 1.0), 0.0)
    return np.fft.irfft2(phat, s=(ny, nx))


def project_div_free(u: np.ndarray, v: np.ndarray, hx: float, hy: float):
    """Spectral Helmholtz projection against the central-difference divergence.

    Returns (u', v', phi) with central div(u', v') zero to round-off and
    (u, v) = (u', v') + grad(phi). Null-mode content is untouched.
    """
    ny, nx = u.shape
    sx, sy, lam = _symbols(nx, ny, hx, hy)
    uhat = np.fft.rfft2(u)
    vhat = np.fft.rfft2(v)
    d = sx[None, :] * uhat + sy[:, None] * vhat
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(lam > 0.0, d / np.where(lam > 0.0, lam, 1.0), 0.0)
    uhat = uhat - sx[None, :] * scale
    vhat = vhat - sy[:, None] * scale
    phihat = -1j * scale
    return (
        np.fft.irfft2(uhat, s=(ny, nx)),
        np.fft.irfft2(vhat, s=(ny, nx)),
        np.fft.irfft2(phihat, s=(ny, nx)),
    )


def lowpass(values: np.ndarray, kmax: int) -> np.ndarray:
    """Zero every Fourier mode with max(|kx|, |ky|) > kmax."""
    ny, nx = values.shape
    vhat = np.fft.rfft2(values)
    kx = np.arange(nx // 2 + 1)
    ky = np.minimum(np.arange(ny), ny - np.arange(ny))
    mask = (kx[None, :] <= kmax) & (ky[:, None] <= kmax)
    return np.fft.irfft2(vhat * mask, s=(ny, nx))
