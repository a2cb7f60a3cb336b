"""Hot numeric kernels in two interchangeable backends.

Every kernel exists twice: a vectorized numpy implementation and a numba
@njit translation of the same arithmetic in the same evaluation order.
Set PFLOW_NUMBA=0 to force the numpy path (the default is numba whenever it
imports). PFLOW_THREADS caps numba's thread pool; kernels only do independent
per-cell writes, so results do not depend on the thread count, and all
reductions happen in numpy.

Grid arrays are float64, C-order, shape (ny, nx) with the y index outermost.
All stencils are the periodic second-order central differences used by the
field operators; composition order matches fields.py so that discrete
adjointness identities carry over bit-for-bit.
"""

from __future__ import annotations

import math
import os

import numpy as np

_flag = os.environ.get("PFLOW_NUMBA", "").strip().lower()
_WANT_NUMBA = _flag not in ("0", "false", "no", "off")

_HAVE_NUMBA = False
if _WANT_NUMBA:
    try:
        import numba
        from numba import njit

        _HAVE_NUMBA = True
    except ImportError:
        _HAVE_NUMBA = False

if _HAVE_NUMBA:
    _threads = os.environ.get("PFLOW_THREADS", "").strip()
    if _threads:
        try:
            numba.set_num_threads(
                max(1, min(int(_threads), numba.config.NUMBA_NUM_THREADS))
            )
        except ValueError:
            pass


# ---------------------------------------------------------------------------
# numpy backend


def _p_power_pair_np(u, v, alpha):
    m = np.sqrt(u * u + v * v)
    pos = m > 0.0
    f = np.where(pos, m, 1.0) ** alpha
    f = np.where(pos, f, 0.0)
    return f * u, f * v


def _p_power_scalar_np(f, alpha):
    m = np.abs(f)
    pos = m > 0.0
    w = np.where(pos, m, 1.0) ** alpha
    w = np.where(pos, w, 0.0)
    return w * f


def _coeff_np(s, ex):
    # s**ex with the degenerate point s == 0 sent to 0 when ex < 0
    # (the flux c*grad still has the correct zero limit for p > 1).
    if ex >= 0.0:
        return s**ex
    pos = s > 0.0
    c = np.where(pos, s, 1.0) ** ex
    return np.where(pos, c, 0.0)


def _plap_apply_np(psi, hx, hy, p, delta):
    gx = (np.roll(psi, -1, 1) - np.roll(psi, 1, 1)) / (2.0 * hx)
    gy = (np.roll(psi, -1, 0) - np.roll(psi, 1, 0)) / (2.0 * hy)
    s = gx * gx + gy * gy + delta * delta
    c = _coeff_np(s, (p - 2.0) / 2.0)
    fx = c * gx
    fy = c * gy
    div = (np.roll(fx, -1, 1) - np.roll(fx, 1, 1)) / (2.0 * hx) + (
        np.roll(fy, -1, 0) - np.roll(fy, 1, 0)
    ) / (2.0 * hy)
    return -div


def _plap_grad_coeffs_np(psi, hx, hy, p, delta):
    gx = (np.roll(psi, -1, 1) - np.roll(psi, 1, 1)) / (2.0 * hx)
    gy = (np.roll(psi, -1, 0) - np.roll(psi, 1, 0)) / (2.0 * hy)
    s = gx * gx + gy * gy + delta * delta
    c = _coeff_np(s, (p - 2.0) / 2.0)
    c2 = (p - 2.0) * _coeff_np(s, (p - 4.0) / 2.0)
    return gx, gy, c, c2


def _plap_hess_apply_np(phi, gx, gy, c, c2, hx, hy):
    px = (np.roll(phi, -1, 1) - np.roll(phi, 1, 1)) / (2.0 * hx)
    py = (np.roll(phi, -1, 0) - np.roll(phi, 1, 0)) / (2.0 * hy)
    dot = gx * px + gy * py
    fx = c * px + c2 * dot * gx
    fy = c * py + c2 * dot * gy
    div = (np.roll(fx, -1, 1) - np.roll(fx, 1, 1)) / (2.0 * hx) + (
        np.roll(fy, -1, 0) - np.roll(fy, 1, 0)
    ) / (2.0 * hy)
    return -div


def _cubic_weights_np(t):
    w0 = 0.5 * (t * ((2.0 - t) * t - 1.0))
    w1 = 0.5 * (t * t * (3.0 * t - 5.0) + 2.0)
    w2 = 0.5 * (t * ((4.0 - 3.0 * t) * t + 1.0))
    w3 = 0.5 * (t * t * (t - 1.0))
    return w0, w1, w2, w3


def _bicubic_interp_np(f, xq, yq):
    # xq, yq are continuous grid indices (coordinate / spacing); integer
    # inputs reproduce node values bitwise, which semi-Lagrangian advection
    # relies on for the zero-velocity identity
    ny, nx = f.shape
    gx = np.mod(xq, nx)
    gx = np.where(gx >= nx, gx - nx, gx)
    gy = np.mod(yq, ny)
    gy = np.where(gy >= ny, gy - ny, gy)
    i1 = np.floor(gx).astype(np.int64)
    j1 = np.floor(gy).astype(np.int64)
    tx = gx - i1
    ty = gy - j1
    i1 %= nx
    j1 %= ny
    cols = ((i1 - 1) % nx, i1, (i1 + 1) % nx, (i1 + 2) % nx)
    rows = ((j1 - 1) % ny, j1, (j1 + 1) % ny, (j1 + 2) % ny)
    wx = _cubic_weights_np(tx)
    wy = _cubic_weights_np(ty)
    fc = f[j1, i1]
    # base plus weighted differences: constants survive interpolation exactly
    val = fc.copy()
    for b in range(4):
        for a in range(4):
            val += wy[b] * wx[a] * (f[rows[b], cols[a]] - fc)
    return val


def _upwind3_tendency_np(q, u, v, hx, hy):
    qxm = np.roll(q, 1, 1)
    qxp = np.roll(q, -1, 1)
    qxpp = np.roll(q, -2, 1)
    uf = 0.5 * (u + np.roll(u, -1, 1))
    qhat = np.where(
        uf >= 0.0,
        (-qxm + 5.0 * q + 2.0 * qxp) / 6.0,
        (2.0 * q + 5.0 * qxp - qxpp) / 6.0,
    )
    fx = uf * qhat
    tx = (fx - np.roll(fx, 1, 1)) / hx

    qym = np.roll(q, 1, 0)
    qyp = np.roll(q, -1, 0)
    qypp = np.roll(q, -2, 0)
    vf = 0.5 * (v + np.roll(v, -1, 0))
    qhat = np.where(
        vf >= 0.0,
        (-qym + 5.0 * q + 2.0 * qyp) / 6.0,
        (2.0 * q + 5.0 * qyp - qypp) / 6.0,
    )
    fy = vf * qhat
    ty = (fy - np.roll(fy, 1, 0)) / hy
    return tx + ty


def _gamma_lap_vec_np(u, v, hx, hy, gamma, delta):
    ux = (np.roll(u, -1, 1) - np.roll(u, 1, 1)) / (2.0 * hx)
    uy = (np.roll(u, -1, 0) - np.roll(u, 1, 0)) / (2.0 * hy)
    vx = (np.roll(v, -1, 1) - np.roll(v, 1, 1)) / (2.0 * hx)
    vy = (np.roll(v, -1, 0) - np.roll(v, 1, 0)) / (2.0 * hy)
    s = ux * ux + uy * uy + vx * vx + vy * vy + delta * delta
    c = _coeff_np(s, (gamma - 2.0) / 2.0)
    ou = (np.roll(c * ux, -1, 1) - np.roll(c * ux, 1, 1)) / (2.0 * hx) + (
        np.roll(c * uy, -1, 0) - np.roll(c * uy, 1, 0)
    ) / (2.0 * hy)
    ov = (np.roll(c * vx, -1, 1) - np.roll(c * vx, 1, 1)) / (2.0 * hx) + (
        np.roll(c * vy, -1, 0) - np.roll(c * vy, 1, 0)
    ) / (2.0 * hy)
    return ou, ov


_NUMPY_IMPLS = {
    "p_power_pair": _p_power_pair_np,
    "p_power_scalar": _p_power_scalar_np,
    "plap_apply": _plap_apply_np,
    "plap_grad_coeffs": _plap_grad_coeffs_np,
    "plap_hess_apply": _plap_hess_apply_np,
    "bicubic_interp": _bicubic_interp_np,
    "upwind3_tendency": _upwind3_tendency_np,
    "gamma_lap_vec": _gamma_lap_vec_np,
}

BACKENDS = {"numpy": _NUMPY_IMPLS}


# ---------------------------------------------------------------------------
# numba backend

if _HAVE_NUMBA:

    @njit(cache=True)
    def _p_power_pair_nb(u, v, alpha):
        # shape-agnostic: iterate the flattened views
        uf = u.reshape(-1)
        vf = v.reshape(-1)
        ou = np.empty_like(uf)
        ov = np.empty_like(vf)
        for i in range(uf.size):
            uu = uf[i]
            vv = vf[i]
            m = math.sqrt(uu * uu + vv * vv)
            if m > 0.0:
                f = m**alpha
                ou[i] = f * uu
                ov[i] = f * vv
            else:
                ou[i] = 0.0
                ov[i] = 0.0
        return ou.reshape(u.shape), ov.reshape(v.shape)

    @njit(cache=True)
    def _p_power_scalar_nb(f, alpha):
        ff = f.reshape(-1)
        out = np.empty_like(ff)
        for i in range(ff.size):
            x = ff[i]
            m = abs(x)
            if m > 0.0:
                out[i] = (m**alpha) * x
            else:
                out[i] = 0.0
        return out.reshape(f.shape)

    @njit(cache=True, inline="always")
    def _coeff_nb(s, ex):
        if ex >= 0.0:
            return s**ex
        if s > 0.0:
            return s**ex
        return 0.0

    @njit(cache=True)
    def _grad_central_nb(f, hx, hy):
        ny, nx = f.shape
        gx = np.empty_like(f)
        gy = np.empty_like(f)
        for j in range(ny):
            jm = j - 1 if j > 0 else ny - 1
            jp = j + 1 if j < ny - 1 else 0
            for i in range(nx):
                im = i - 1 if i > 0 else nx - 1
                ip = i + 1 if i < nx - 1 else 0
                gx[j, i] = (f[j, ip] - f[j, im]) / (2.0 * hx)
                gy[j, i] = (f[jp, i] - f[jm, i]) / (2.0 * hy)
        return gx, gy

    @njit(cache=True)
    def _div_central_nb(fx, fy, hx, hy):
        ny, nx = fx.shape
        out = np.empty_like(fx)
        for j in range(ny):
            jm = j - 1 if j > 0 else ny - 1
            jp = j + 1 if j < ny - 1 else 0
            for i in range(nx):
                im = i - 1 if i > 0 else nx - 1
                ip = i + 1 if i < nx - 1 else 0
                out[j, i] = (fx[j, ip] - fx[j, im]) / (2.0 * hx) + (
                    fy[jp, i] - fy[jm, i]
                ) / (2.0 * hy)
        return out

    @njit(cache=True)
    def _plap_apply_nb(psi, hx, hy, p, delta):
        gx, gy = _grad_central_nb(psi, hx, hy)
        ny, nx = psi.shape
        ex = (p - 2.0) / 2.0
        fx = np.empty_like(psi)
        fy = np.empty_like(psi)
        for j in range(ny):
            for i in range(nx):
                a = gx[j, i]
                b = gy[j, i]
                s = a * a + b * b + delta * delta
                c = _coeff_nb(s, ex)
                fx[j, i] = c * a
                fy[j, i] = c * b
        return -_div_central_nb(fx, fy, hx, hy)

    @njit(cache=True)
    def _plap_grad_coeffs_nb(psi, hx, hy, p, delta):
        gx, gy = _grad_central_nb(psi, hx, hy)
        ny, nx = psi.shape
        ex = (p - 2.0) / 2.0
        ex2 = (p - 4.0) / 2.0
        c = np.empty_like(psi)
        c2 = np.empty_like(psi)
        for j in range(ny):
            for i in range(nx):
                a = gx[j, i]
                b = gy[j, i]
                s = a * a + b * b + delta * delta
                c[j, i] = _coeff_nb(s, ex)
                c2[j, i] = (p - 2.0) * _coeff_nb(s, ex2)
        return gx, gy, c, c2

    @njit(cache=True)
    def _plap_hess_apply_nb(phi, gx, gy, c, c2, hx, hy):
        px, py = _grad_central_nb(phi, hx, hy)
        ny, nx = phi.shape
        fx = np.empty_like(phi)
        fy = np.empty_like(phi)
        for j in range(ny):
            for i in range(nx):
                dot = gx[j, i] * px[j, i] + gy[j, i] * py[j, i]
                fx[j, i] = c[j, i] * px[j, i] + c2[j, i] * dot * gx[j, i]
                fy[j, i] = c[j, i] * py[j, i] + c2[j, i] * dot * gy[j, i]
        return -_div_central_nb(fx, fy, hx, hy)

    @njit(cache=True)
    def _bicubic_interp_nb(f, xq, yq):
        # index-space queries, matching the numpy variant
        ny, nx = f.shape
        n = xq.shape[0]
        out = np.empty(n, dtype=np.float64)
        for k in range(n):
            gx = xq[k] % nx
            if gx >= nx:
                gx -= nx
            gy = yq[k] % ny
            if gy >= ny:
                gy -= ny
            i1 = int(math.floor(gx))
            j1 = int(math.floor(gy))
            tx = gx - i1
            ty = gy - j1
            i1 %= nx
            j1 %= ny
            i0 = (i1 - 1) % nx
            i2 = (i1 + 1) % nx
            i3 = (i1 + 2) % nx
            j0 = (j1 - 1) % ny
            j2 = (j1 + 1) % ny
            j3 = (j1 + 2) % ny

            wx0 = 0.5 * (tx * ((2.0 - tx) * tx - 1.0))
            wx1 = 0.5 * (tx * tx * (3.0 * tx - 5.0) + 2.0)
            wx2 = 0.5 * (tx * ((4.0 - 3.0 * tx) * tx + 1.0))
            wx3 = 0.5 * (tx * tx * (tx - 1.0))
            wy0 = 0.5 * (ty * ((2.0 - ty) * ty - 1.0))
            wy1 = 0.5 * (ty * ty * (3.0 * ty - 5.0) + 2.0)
            wy2 = 0.5 * (ty * ((4.0 - 3.0 * ty) * ty + 1.0))
            wy3 = 0.5 * (ty * ty * (ty - 1.0))

            fc = f[j1, i1]
            acc = fc
            rows = (j0, j1, j2, j3)
            wys = (wy0, wy1, wy2, wy3)
            cols = (i0, i1, i2, i3)
            wxs = (wx0, wx1, wx2, wx3)
            for b in range(4):
                jj = rows[b]
                wb = wys[b]
                for a in range(4):
                    acc += wb * wxs[a] * (f[jj, cols[a]] - fc)
            out[k] = acc
        return out

    @njit(cache=True)
    def _upwind3_tendency_nb(q, u, v, hx, hy):
        ny, nx = q.shape
        fx = np.empty_like(q)
        fy = np.empty_like(q)
        for j in range(ny):
            jm = j - 1 if j > 0 else ny - 1
            jp = j + 1 if j < ny - 1 else 0
            jpp = j + 2 if j < ny - 2 else j + 2 - ny
            for i in range(nx):
                im = i - 1 if i > 0 else nx - 1
                ip = i + 1 if i < nx - 1 else 0
                ipp = i + 2 if i < nx - 2 else i + 2 - nx
                uf = 0.5 * (u[j, i] + u[j, ip])
                if uf >= 0.0:
                    qh = (-q[j, im] + 5.0 * q[j, i] + 2.0 * q[j, ip]) / 6.0
                else:
                    qh = (2.0 * q[j, i] + 5.0 * q[j, ip] - q[j, ipp]) / 6.0
                fx[j, i] = uf * qh
                vf = 0.5 * (v[j, i] + v[jp, i])
                if vf >= 0.0:
                    qh = (-q[jm, i] + 5.0 * q[j, i] + 2.0 * q[jp, i]) / 6.0
                else:
                    qh = (2.0 * q[j, i] + 5.0 * q[jp, i] - q[jpp, i]) / 6.0
                fy[j, i] = vf * qh
        out = np.empty_like(q)
        for j in range(ny):
            jm = j - 1 if j > 0 else ny - 1
            for i in range(nx):
                im = i - 1 if i > 0 else nx - 1
                out[j, i] = (fx[j, i] - fx[j, im]) / hx + (fy[j, i] - fy[jm, i]) / hy
        return out

    @njit(cache=True)
    def _gamma_lap_vec_nb(u, v, hx, hy, gamma, delta):
        ny, nx = u.shape
        ux, uy = _grad_central_nb(u, hx, hy)
        vx, vy = _grad_central_nb(v, hx, hy)
        ex = (gamma - 2.0) / 2.0
        cux = np.empty_like(u)
        cuy = np.empty_like(u)
        cvx = np.empty_like(u)
        cvy = np.empty_like(u)
        for j in range(ny):
            for i in range(nx):
                s = (
                    ux[j, i] * ux[j, i]
                    + uy[j, i] * uy[j, i]
                    + vx[j, i] * vx[j, i]
                    + vy[j, i] * vy[j, i]
                    + delta * delta
                )
                c = _coeff_nb(s, ex)
                cux[j, i] = c * ux[j, i]
                cuy[j, i] = c * uy[j, i]
                cvx[j, i] = c * vx[j, i]
                cvy[j, i] = c * vy[j, i]
        ou = _div_central_nb(cux, cuy, hx, hy)
        ov = _div_central_nb(cvx, cvy, hx, hy)
        return ou, ov

    BACKENDS["numba"] = {
        "p_power_pair": _p_power_pair_nb,
        "p_power_scalar": _p_power_scalar_nb,
        "plap_apply": _plap_apply_nb,
        "plap_grad_coeffs": _plap_grad_coeffs_nb,
        "plap_hess_apply": _plap_hess_apply_nb,
        "bicubic_interp": _bicubic_interp_nb,
        "upwind3_tendency": _upwind3_tendency_nb,
        "gamma_lap_vec": _gamma_lap_vec_nb,
    }


BACKEND = "numba" if (_WANT_NUMBA and _HAVE_NUMBA) else "numpy"
_ACTIVE = BACKENDS[BACKEND]

p_power_pair = _ACTIVE["p_power_pair"]
p_power_scalar = _ACTIVE["p_power_scalar"]
plap_apply = _ACTIVE["plap_apply"]
plap_grad_coeffs = _ACTIVE["plap_grad_coeffs"]
plap_hess_apply = _ACTIVE["plap_hess_apply"]
bicubic_interp = _ACTIVE["bicubic_interp"]
upwind3_tendency = _ACTIVE["upwind3_tendency"]
gamma_lap_vec = _ACTIVE["gamma_lap_vec"]
