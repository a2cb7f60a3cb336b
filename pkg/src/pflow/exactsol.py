"""Closed-form references and structural checks.

Self-similar profiles of the doubly degenerate diffusion rho_t = Lap_p(rho^m)
with the critical scaling index, a conservative explicit stepper for that
equation, the scaling and Galilean transforms of the viscous system,
straight-line transport of weighted particle clouds with their p-cost,
pushforward residuals for potential maps, and the potential-flow residual
pair. Everything here is a reference the dynamical code is measured against,
so the implementations favor being checkable over being fast.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad

from . import _kernels as K
from .errors import DegenerateVelocity, DtTooLarge, InvalidRegime
from .fields import Grid2D, PERIODIC, ScalarField, VectorField2, div, grad, lp_norm
from .pmomentum import PExponent, q_power

EXPONENTIAL = "exponential"
COMPACT_SUPPORT = "compact-support"

_DIFFUSION_SAFETY = 0.4


# ----------------------------------------------------- self-similar profiles


def beta_critical(p: float, m: float, d: int) -> float:
    """Scaling index of the self-similar solution rho = t^(-d*beta) U(x t^-beta)."""
    den = p + d * m * p - d * m - d
    if not den > 0.0:
        raise InvalidRegime("beta_c undefined: p + dmp - dm - d = %g <= 0" % den)
    return 1.0 / den


@dataclass(frozen=True)
class BarenblattParams:
    """Branch and normalization of the unit-mass self-similar profile.

    kind is exponential exactly when m = 1/(p-1); otherwise the profile is
    the compact-support power law. const holds A1 (exponential) or the
    support radius R (compact). Branch coefficients carry a beta_c factor
    so that rho(x, t) = t^(-d b) U(x t^-b) with b = beta_c solves
    rho_t = div(|grad rho^m|^(p-2) grad rho^m) exactly.
    """

    p: float
    m: float
    d: int
    beta_c: float
    kind: str
    const: float


def _radial_mass(f, d: int, upper: float) -> float:
    # integral of f(|xi|) over R^d, d in {1, 2}
    if d == 1:
        val, _ = quad(f, 0.0, upper, epsabs=1e-12, epsrel=1e-12, limit=200)
        return 2.0 * val
    val, _ = quad(lambda r: r * f(r), 0.0, upper, epsabs=1e-12, epsrel=1e-12, limit=200)
    return 2.0 * np.pi * val


@lru_cache(maxsize=64)
def barenblatt_params(p: float, m: float, d: int) -> BarenblattParams:
    """Resolve the branch and the unit-mass normalization constant."""
    p = float(p)
    m = float(m)
    d = int(d)
    if d not in (1, 2):
        raise InvalidRegime("profiles are normalized for d in {1, 2}")
    beta = beta_critical(p, m, d)
    s = p / (p - 1.0)
    if abs(m * (p - 1.0) - 1.0) <= 1e-12:
        k = beta ** (1.0 / (p - 1.0)) * (p - 1.0) ** 2 / p
        mass = _radial_mass(lambda r: np.exp(-k * r**s), d, np.inf)
        return BarenblattParams(p, m, d, beta, EXPONENTIAL, 1.0 / mass)
    if m * (p - 1.0) < 1.0:
        raise InvalidRegime("compact branch needs m(p-1) > 1")
    e = (p - 1.0) / (m * (p - 1.0) - 1.0)
    coef = beta ** (1.0 / (m * (p - 1.0) - 1.0)) * ((m * (p - 1.0) - 1.0) / (m * p)) ** e
    # total mass of coef*(R^s - r^s)_+^e scales like R^(s e + d)
    unit = _radial_mass(lambda r: (1.0 - r**s) ** e, d, 1.0)
    radius = (1.0 / (coef * unit)) ** (1.0 / (s * e + d))
    return BarenblattParams(p, m, d, beta, COMPACT_SUPPORT, radius)


def barenblatt_profile(bp: BarenblattParams, xi):
    """Evaluate the unit-mass profile U at radius |xi|.

    xi may be a scalar, an array of radii, or (for d = 2) a length-2 point.
    Exactly zero outside the support radius on the compact branch.
    """
    if bp.d == 2 and np.ndim(xi) == 1 and np.shape(xi) == (2,):
        r = float(np.hypot(xi[0], xi[1]))
    else:
        r = np.abs(np.asarray(xi, dtype=np.float64))
    s = bp.p / (bp.p - 1.0)
    if bp.kind == EXPONENTIAL:
        k = bp.beta_c ** (1.0 / (bp.p - 1.0)) * (bp.p - 1.0) ** 2 / bp.p
        out = bp.const * np.exp(-k * r**s)
    else:
        dd = bp.m * (bp.p - 1.0) - 1.0
        e = (bp.p - 1.0) / dd
        coef = bp.beta_c ** (1.0 / dd) * (dd / (bp.m * bp.p)) ** e
        out = coef * np.maximum(bp.const**s - r**s, 0.0) ** e
    return out if np.ndim(xi) else float(out)


# ------------------------------------------------ doubly degenerate diffusion


def _face_flux(u, h, pm2, delta, axis=-1):
    g = (np.roll(u, -1, axis) - u) / h
    c = (g * g + delta * delta) ** (pm2 / 2.0)
    return c * g


def _resolve_delta(cfg, gmax):
    if cfg is not None and cfg.delta is not None:
        return cfg.delta
    return 1e-8 * max(1.0, gmax)


def _delta_for(vals, h, cfg):
    gmax = float(abs((np.roll(vals, -1, -1) - vals) / h).max())
    return _resolve_delta(cfg, gmax)


def max_diffusive_dt(rho, p: float, m: float, cfg=None, h: float | None = None) -> float:
    """Explicit stability cap for step_doubly_degenerate: 0.4 h^2 over the
    largest face diffusivity (p-1)(|grad rho^m|^2 + delta^2)^((p-2)/2) m rho^(m-1)."""
    vals, hx, hy = _dd_unpack(rho, h)
    u = vals**m if m != 1.0 else vals
    # axis contributions add in the explicit update, so their caps combine
    # harmonically, not by the worst axis
    atot = 0.0
    for ax, hh in ((-1, hx),) if hy is None else ((-1, hx), (0, hy)):
        g = (np.roll(u, -1, ax) - u) / hh
        delta = _resolve_delta(cfg, float(abs(g).max()))
        c = (p - 1.0) * (g * g + delta * delta) ** ((p - 2.0) / 2.0)
        if m != 1.0:
            face = 0.5 * (np.roll(vals, -1, ax) + vals)
            c = c * m * np.where(face > 0.0, face, 0.0) ** (m - 1.0)
        atot += float(c.max()) / hh**2
    return _DIFFUSION_SAFETY / atot if atot > 0.0 else float("inf")


def _dd_unpack(rho, h):
    if isinstance(rho, ScalarField):
        if rho.grid.bc != PERIODIC:
            raise ValueError("diffusion stepping is periodic only")
        return rho.values, rho.grid.hx, rho.grid.hy
    vals = np.asarray(rho, dtype=np.float64)
    if vals.ndim != 1:
        raise TypeError("plain-array input must be 1D; use a ScalarField in 2D")
    if h is None:
        raise ValueError("1D input needs the spacing h")
    return vals, float(h), None


def step_doubly_degenerate(rho, p: float, m: float, dt: float, cfg=None, h: float | None = None):
    """One conservative explicit step of rho_t = div(|grad rho^m|^(p-2) grad rho^m).

    rho is a periodic ScalarField (2D) or a 1D array with spacing h; the
    update is in flux form, so the total mass telescopes to round-off.
    """
    vals, hx, hy = _dd_unpack(rho, h)
    if float(vals.min()) < 0.0:
        raise ValueError("density must be nonnegative")
    cap = max_diffusive_dt(rho, p, m, cfg, h)
    if dt > cap:
        raise DtTooLarge("dt %.3e exceeds explicit diffusion cap %.3e" % (dt, cap))
    u = vals**m if m != 1.0 else vals
    pm2 = p - 2.0
    fx = _face_flux(u, hx, pm2, _delta_for(u, hx, cfg), axis=-1)
    out = vals + (dt / hx) * (fx - np.roll(fx, 1, -1))
    if hy is not None:
        gy = (np.roll(u, -1, 0) - u) / hy
        dely = _resolve_delta(cfg, float(abs(gy).max()))
        fy = (gy * gy + dely * dely) ** (pm2 / 2.0) * gy
        out = out + (dt / hy) * (fy - np.roll(fy, 1, 0))
    if isinstance(rho, ScalarField):
        return ScalarField(rho.grid, out)
    return out


# ------------------------------------------------------- scaling transforms


def rescale(v: VectorField2, t: float, lam: float, p: float, gamma: float,
            nx_out: int | None = None, ny_out: int | None = None):
    """Apply the invariance v_lam(x, t) = lam^a v(lam x, lam^(a+1) t) with
    a = (gamma-1)/(p+1-gamma): returns the transformed snapshot and time.

    The sample count is kept and the domain shrinks to L/lam, under which
    the resample points land exactly on source nodes; passing nx_out picks
    a new resolution and goes through bicubic interpolation instead.
    """
    if not gamma < p + 1.0:
        raise InvalidRegime("scaling invariance needs gamma < p + 1")
    if not lam > 0.0:
        raise ValueError("lam must be positive")
    alpha = (gamma - 1.0) / (p + 1.0 - gamma)
    g = v.grid
    t_new = float(t) / lam ** (alpha + 1.0)
    fac = lam**alpha
    if nx_out is None and ny_out is None:
        g2 = Grid2D(g.nx, g.ny, g.Lx / lam, g.Ly / lam, g.bc)
        return VectorField2(g2, fac * v.u, fac * v.v), t_new
    if g.bc != PERIODIC:
        raise ValueError("resampling rescale is periodic only")
    nx2 = g.nx if nx_out is None else int(nx_out)
    ny2 = nx2 if ny_out is None else int(ny_out)
    g2 = Grid2D(nx2, ny2, g.Lx / lam, g.Ly / lam, g.bc)
    x2, y2 = g2.mesh()
    xi = (lam * x2) / g.hx
    yi = (lam * y2) / g.hy
    u = K.bicubic_interp(v.u, xi.ravel(), yi.ravel()).reshape(g2.shape)
    w = K.bicubic_interp(v.v, xi.ravel(), yi.ravel()).reshape(g2.shape)
    return VectorField2(g2, fac * u, fac * w), t_new


def _aniso_apply(au, av, su, sv, cp, inverse: bool):
    # (I + cp shat shat) a, or its exact inverse, at points where |s| > 0
    s2 = su * su + sv * sv
    dot = np.where(s2 > 0.0, (au * su + av * sv) / np.where(s2 > 0.0, s2, 1.0), 0.0)
    fac = -cp / (1.0 + cp) if inverse else cp
    return au + fac * dot * su, av + fac * dot * sv


def galilean_check(v: VectorField2, grad_pi: VectorField2, w, p: float,
                   mask_rtol: float = 1e-6) -> float:
    """Round-trip the pressure-gradient transform of a constant boost.

    The two momentum equations share their transport structure exactly when
    grad(theta) |u|^(2-p)(I + c uhat uhat) = grad(pi) |v|^(2-p)(I + c vhat vhat)
    with u = v + w and c = (2-p)/(p-1). grad(theta) is constructed from the
    relation and mapped back; the returned value is the largest pointwise
    discrepancy on the mask where both speeds are resolvable.
    """
    pe = PExponent.of(p)
    wx, wy = float(w[0]), float(w[1])
    if wx == 0.0 and wy == 0.0:
        return 0.0  # u = v: the transform is the identity
    uu, uv = v.u + wx, v.v + wy
    sv = np.hypot(v.u, v.v)
    su = np.hypot(uu, uv)
    thr = mask_rtol * max(float(sv.max()), float(su.max()))
    mask = (sv > thr) & (su > thr)
    if not mask.any():
        raise DegenerateVelocity("no points with both |v| and |v+w| resolvable")
    svg = np.where(mask, sv, 1.0)
    sug = np.where(mask, su, 1.0)
    cp = (2.0 - pe.p) / (pe.p - 1.0)
    ax, ay = _aniso_apply(grad_pi.u, grad_pi.v, v.u, v.v, cp, inverse=False)
    bscale = svg ** (2.0 - pe.p)
    tx, ty = _aniso_apply(ax * bscale, ay * bscale, uu, uv, cp, inverse=True)
    uscale = sug ** (pe.p - 2.0)
    tx, ty = tx * uscale, ty * uscale
    # back: theta -> pi
    cx, cy = _aniso_apply(tx, ty, uu, uv, cp, inverse=False)
    uscale2 = sug ** (2.0 - pe.p)
    dx, dy = _aniso_apply(cx * uscale2, cy * uscale2, v.u, v.v, cp, inverse=True)
    vscale = svg ** (pe.p - 2.0)
    rx = np.abs(dx * vscale - grad_pi.u)
    ry = np.abs(dy * vscale - grad_pi.v)
    return float(np.maximum(rx, ry)[mask].max())


# ----------------------------------------------------- pressureless geodesics


@dataclass
class ParticleCloud:
    """Empirical measure: N particles with straight-line velocities."""

    positions: np.ndarray
    velocities: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.positions = self._as_points(self.positions)
        self.velocities = self._as_points(self.velocities)
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.velocities.shape != self.positions.shape:
            raise ValueError("positions and velocities must share a shape")
        if self.weights.shape != (self.positions.shape[0],):
            raise ValueError("need one weight per particle")
        if self.weights.min() < 0.0:
            raise ValueError("weights must be nonnegative")
        if abs(self.weights.sum() - 1.0) > 1e-12:
            raise ValueError("weights must sum to 1")

    @staticmethod
    def _as_points(arr):
        # a flat array is N particles on the line, not one N-dim particle
        a = np.asarray(arr, dtype=np.float64)
        return a.reshape(-1, 1) if a.ndim == 1 else a


def geodesic_transport(pc: ParticleCloud, t: float) -> ParticleCloud:
    """Constant-speed straight-line transport to parameter t in [0, 1]."""
    if not 0.0 <= t <= 1.0:
        raise ValueError("geodesic parameter must lie in [0, 1]")
    return ParticleCloud(pc.positions + t * pc.velocities, pc.velocities.copy(), pc.weights.copy())


def wasserstein_p_cost(pc: ParticleCloud, p: float) -> float:
    """Sum of weights times |displacement|^p over the unit time interval."""
    speed = np.linalg.norm(pc.velocities, axis=1)
    return float(np.sum(pc.weights * speed**p))


def cloud_hamiltonian(pc: ParticleCloud, p: float) -> float:
    return wasserstein_p_cost(pc, p) / PExponent.of(p).q


# ------------------------------------------------- potential-map pushforward


def optimal_map_residual(psi: ScalarField, rho0, rho1, p: float) -> ScalarField:
    """Pointwise residual det(J_T) rho1(T(x)) - rho0(x) of the potential map
    T(x) = x - |grad psi|^(q-2) grad psi, with rho0 and rho1 callables of
    coordinate arrays; the Jacobian uses the same central stencils as the
    rest of the package."""
    g = psi.grid
    disp = q_power(grad(psi), PExponent.of(p))
    x, y = g.mesh()
    tx, ty = x - disp.u, y - disp.v
    jdu = grad(ScalarField(g, disp.u))
    jdv = grad(ScalarField(g, disp.v))
    det = (1.0 - jdu.u) * (1.0 - jdv.v) - jdu.v * jdv.u
    return ScalarField(g, det * rho1(tx, ty) - rho0(x, y))


def optimal_map_residual_1d(psi: np.ndarray, x: np.ndarray, rho0, rho1, p: float) -> np.ndarray:
    """1D pushforward residual on a non-periodic patch; second-order
    differences, so a consistent (psi, rho0, rho1) triple leaves O(h^2)."""
    q = PExponent.of(p).q
    dpsi = np.gradient(np.asarray(psi, dtype=np.float64), x, edge_order=2)
    if q == 2.0:
        disp = dpsi
    else:
        mag = np.abs(dpsi)
        disp = np.where(mag > 0.0, np.where(mag > 0.0, mag, 1.0) ** (q - 2.0) * dpsi, 0.0)
    t = x - disp
    det = np.gradient(t, x, edge_order=2)
    return det * rho1(t) - rho0(x)


# ------------------------------------------------------ potential-flow checks


def bernoulli_residual(phi0: ScalarField, phi1: ScalarField, dt: float,
                       pi: ScalarField, p: float) -> tuple[float, float]:
    """Residual norms of the potential-flow pair for a gradient velocity
    v = -|grad phi|^(q-2) grad phi.

    r1: L2 norm of dphi/dt + (1/q)|grad phi|^q + pi - c(t), the time slice
    evaluated at the midpoint of the two snapshots, with c(t) the spatial
    mean (the admissible gauge). r2: L2 norm of div(|grad phi|^(q-2) grad phi),
    the constraint that the potential stays source-free.
    """
    if phi0.grid is not phi1.grid and phi0.grid != phi1.grid:
        raise ValueError("snapshots must share a grid")
    if not dt > 0.0:
        raise ValueError("dt must be positive")
    g = phi0.grid
    q = PExponent.of(p).q
    dphidt = (phi1.values - phi0.values) / dt
    mid = ScalarField(g, 0.5 * (phi0.values + phi1.values))
    gp = grad(mid)
    speedq = np.hypot(gp.u, gp.v) ** q
    expr = dphidt + speedq / q + pi.values
    r1 = lp_norm(ScalarField(g, expr - expr.mean()), 2.0)
    r2 = lp_norm(div(q_power(gp, PExponent.of(p))), 2.0)
    return r1, r2
