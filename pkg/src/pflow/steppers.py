"""Time integration of the four dynamical systems.

Vorticity form (inviscid, damped, and gamma=2 viscous): SSP-RK3 in the
transported vorticity, re-solving the degenerate elliptic problem for the
streamfunction at every stage with warm starts. The Shu-Osher convex
combinations are evaluated incrementally (u + (F(u') - u)/4 style), which
is algebraically identical but keeps exact steady states bitwise fixed.

Momentum form (gamma = p): explicit SSP-RK3 on the momentum components with
mollified advecting velocity, shared-modulus diffusion and a linear
momentum diffusion, followed by one spectral divergence projection of the
velocity per step. The projection potential divided by dt is stored as the
pressure.

Damping in the damped model is applied as an exact integrating factor
exp(-nu dt) after each completed step; the damping term is linear in the
vorticity, so pure-decay initial data decays exactly.

Semi-Lagrangian interpolation lets the vorticity mean drift at truncation
level; each advection output is projected back onto the gauge-compatible
slice so long runs cannot trip the elliptic compatibility check.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from . import _kernels as K
from .errors import CflViolation, DtTooLarge
from .fields import PERIODIC, Grid2D, ScalarField, VectorField2, curl2, perp_grad
from .plaplacian import PlapConfig, PPoissonSolver
from .pmomentum import PExponent, p_power, q_power
from .spectral import project_div_free
from .transport import SEMI_LAGRANGIAN, UPWIND3, advect_scalar

EULER = "euler"
EULER_DAMPED = "euler-damped"
PNS_GAMMA2 = "pns-gamma2"
PNS_MOMENTUM = "pns-momentum"

_DIFFUSION_SAFETY = 0.4


@dataclass
class StepConfig:
    """Parameters shared by all steppers.

    gamma defaults to p (the regime of the momentum-form system). When
    viscous, gamma must stay below p + 1, the scaling-invariance ceiling.
    """

    p: float = 2.0
    gamma: float | None = None
    nu: float = 0.0
    eps: float = 0.0
    cfl: float = 0.5
    plap: PlapConfig = dc_field(default_factory=PlapConfig)
    scheme: str = SEMI_LAGRANGIAN
    model: str = EULER

    def __post_init__(self):
        if not self.p > 1.0:
            raise ValueError("p must be > 1")
        if self.gamma is None:
            self.gamma = float(self.p)
        if self.nu < 0.0:
            raise ValueError("nu must be >= 0")
        if self.nu > 0.0 and not (1.0 < self.gamma < self.p + 1.0):
            raise ValueError("viscous runs need gamma in (1, p+1)")
        if self.eps < 0.0:
            raise ValueError("mollifier width must be >= 0")
        if not (0.0 < self.cfl <= 0.9):
            raise ValueError("cfl must lie in (0, 0.9]")
        if self.scheme not in (SEMI_LAGRANGIAN, UPWIND3):
            raise ValueError("unknown scheme %r" % (self.scheme,))
        if self.model not in (EULER, EULER_DAMPED, PNS_GAMMA2, PNS_MOMENTUM):
            raise ValueError("unknown model %r" % (self.model,))

    @property
    def pe(self) -> PExponent:
        return PExponent.of(self.p)


@dataclass
class FlowState:
    """Complete dynamical state at one instant.

    Vorticity-form runs carry psi and maintain v = perp_grad(psi);
    momentum-form runs carry pi (projection potential over dt) and leave
    psi as None. v_p = p_power(v) always.
    """

    t: float
    omega_p: ScalarField
    psi: ScalarField | None
    v: VectorField2
    v_p: VectorField2
    pi: ScalarField | None = None

    @property
    def grid(self) -> Grid2D:
        return self.omega_p.grid

    @classmethod
    def from_vorticity(cls, omega_p: ScalarField, cfg: StepConfig, t: float = 0.0, warm_psi=None):
        """Build a consistent state from a mean-free p-vorticity. Null-mode
        content is kept in omega_p (it induces no velocity); the elliptic
        solve gauges it away internally."""
        psi = PPoissonSolver(cfg.plap).solve(omega_p, cfg.p, warm_start=warm_psi)
        v = perp_grad(psi)
        return cls(t, omega_p, psi, v, p_power(v, cfg.p))

    @classmethod
    def from_velocity(cls, v: VectorField2, cfg: StepConfig, t: float = 0.0):
        """Build a momentum-form state: project the velocity divergence-free
        and derive momentum and vorticity from it."""
        u2, v2, phi = project_div_free(v.u, v.v, v.grid.hx, v.grid.hy)
        vv = VectorField2(v.grid, u2, v2)
        vp = p_power(vv, cfg.p)
        om = curl2(vp)
        return cls(t, om, None, vv, vp, ScalarField(v.grid, phi))


def _solve_stage(omega_vals, grid, cfg: StepConfig, warm: ScalarField | None):
    field = ScalarField(grid, omega_vals)
    psi = PPoissonSolver(cfg.plap).solve(field, cfg.p, warm_start=warm)
    return psi, perp_grad(psi)


def step_p_euler(s: FlowState, cfg: StepConfig, dt: float) -> FlowState:
    """One SSP-RK3 step of inviscid transport: d(omega_p)/dt + v.grad = 0."""
    return _step_vorticity(s, cfg, dt, nu_biharm=0.0)


def _step_vorticity(s: FlowState, cfg: StepConfig, dt: float, nu_biharm: float) -> FlowState:
    if s.psi is None:
        raise ValueError("vorticity-form steppers need a state carrying psi")
    grid = s.grid
    dt = float(dt)

    def stage_update(om: ScalarField, psi: ScalarField, v: VectorField2) -> np.ndarray:
        out = advect_scalar(om, v, dt, cfg.scheme).values
        if nu_biharm != 0.0:
            lap = K.plap_apply(psi.values, grid.hx, grid.hy, 2.0, 0.0)
            out = out - (dt * nu_biharm) * K.plap_apply(lap, grid.hx, grid.hy, 2.0, 0.0)
        # interpolation lets the mean drift at truncation level; recenter it
        # exactly so long runs stay elliptically compatible. Exact-zero means
        # (checkerboard data, conservative fluxes) pass through bitwise.
        m = out.mean()
        return out if m == 0.0 else out - m

    om0 = s.omega_p.values
    f1 = stage_update(s.omega_p, s.psi, s.v)
    psi1, v1 = _solve_stage(f1, grid, cfg, s.psi)

    f2 = stage_update(ScalarField(grid, f1), psi1, v1)
    om2 = om0 + (f2 - om0) * 0.25
    psi2, v2 = _solve_stage(om2, grid, cfg, psi1)

    f3 = stage_update(ScalarField(grid, om2), psi2, v2)
    om3 = om0 + (f3 - om0) * (2.0 / 3.0)
    psi3, v3 = _solve_stage(om3, grid, cfg, psi2)

    return FlowState(s.t + dt, ScalarField(grid, om3), psi3, v3, p_power(v3, cfg.p))


def step_p_euler_damped(s: FlowState, cfg: StepConfig, dt: float) -> FlowState:
    """Inviscid step followed by the exact damping factor exp(-nu dt).

    The damping term is linear in the vorticity, so the integrating factor
    integrates it exactly; nu = 0 reproduces step_p_euler bitwise.
    """
    out = step_p_euler(s, cfg, dt)
    if cfg.nu == 0.0:
        return out
    fac = float(np.exp(-cfg.nu * dt))
    om = ScalarField(out.grid, out.omega_p.values * fac)
    # the elliptic solve does not commute with scaling at p != 2, so
    # re-solve from the decayed vorticity; undamped psi warm-starts it
    return FlowState.from_vorticity(om, cfg, t=out.t, warm_psi=out.psi)


def biharmonic_dt_cap(grid: Grid2D, nu: float) -> float:
    h = min(grid.hx, grid.hy)
    return _DIFFUSION_SAFETY * h**4 / nu if nu > 0.0 else float("inf")


def step_pns_gamma2(s: FlowState, cfg: StepConfig, dt: float) -> FlowState:
    """Viscous vorticity dynamics with the gamma = 2 dissipation: the
    damping is the biharmonic of the streamfunction, evaluated as two
    nested composed-stencil Laplacians."""
    if cfg.nu == 0.0:
        return step_p_euler(s, cfg, dt)
    cap = biharmonic_dt_cap(s.grid, cfg.nu)
    if dt > cap:
        raise DtTooLarge("dt %.3e exceeds explicit biharmonic cap %.3e" % (dt, cap))
    return _step_vorticity(s, cfg, dt, nu_biharm=cfg.nu)


# ---------------------------------------------------------------- mollifier


def _bump_kernel(grid: Grid2D, eps: float):
    """Discrete samples of the unit-mass bump of radius eps, as (offsets,
    weights). Degenerates to the identity stencil when eps < spacing."""
    mx = int(np.floor(eps / grid.hx + 1e-12))
    my = int(np.floor(eps / grid.hy + 1e-12))
    offs = []
    wts = []
    for j in range(-my, my + 1):
        for i in range(-mx, mx + 1):
            r2 = (i * grid.hx) ** 2 + (j * grid.hy) ** 2
            s = r2 / (eps * eps)
            if s < 1.0:
                offs.append((j, i))
                wts.append(float(np.exp(-1.0 / (1.0 - s))))
    w = np.asarray(wts)
    w /= w.sum()
    return offs, w


def _convolve_direct(vals, offs, wts):
    out = np.zeros_like(vals)
    for (j, i), w in zip(offs, wts):
        out += w * np.roll(np.roll(vals, j, axis=0), i, axis=1)
    return out


def _convolve_fft(vals, grid, offs, wts):
    ker = np.zeros(grid.shape)
    for (j, i), w in zip(offs, wts):
        ker[j % grid.ny, i % grid.nx] += w
    return np.fft.irfft2(np.fft.rfft2(vals) * np.fft.rfft2(ker), s=grid.shape)


def mollify(f, eps: float, method: str = "fft"):
    """Convolve with the compactly supported smooth bump of radius eps.

    eps = 0 is the identity. The discrete kernel is nonnegative with unit
    mass, so the convolution contracts every L^p norm (Young) and commutes
    with the periodic difference stencils.
    """
    if eps < 0.0:
        raise ValueError("mollifier width must be >= 0")
    if method not in ("fft", "direct"):
        raise ValueError("unknown mollify method %r" % (method,))
    if isinstance(f, VectorField2):
        grid = f.grid
    elif isinstance(f, ScalarField):
        grid = f.grid
    else:
        raise TypeError("mollify expects a ScalarField or VectorField2")
    if grid.bc != PERIODIC:
        raise ValueError("mollify requires a periodic grid")
    if eps == 0.0:
        return f.copy()

    offs, wts = _bump_kernel(grid, eps)
    if len(offs) == 1:
        return f.copy()
    if method == "direct":
        conv = lambda a: _convolve_direct(a, offs, wts)
    else:
        conv = lambda a: _convolve_fft(a, grid, offs, wts)
    if isinstance(f, ScalarField):
        return ScalarField(grid, conv(f.values))
    return VectorField2(grid, conv(f.u), conv(f.v))


# ------------------------------------------------------------ momentum form


def _momentum_delta(s: FlowState, cfg: StepConfig, s2: np.ndarray) -> float:
    if cfg.plap.delta is not None:
        return cfg.plap.delta
    return 1e-8 * max(1.0, float(np.sqrt(s2.max())))


def momentum_dt_cap(s: FlowState, cfg: StepConfig) -> float:
    """Explicit stability ceiling for the diffusion terms of the momentum
    stepper: dt <= 0.4 h^2 / (nu * max coefficient + eps). For gamma < 2
    the coefficient peaks where the velocity gradient is smallest."""
    grid = s.grid
    h2 = min(grid.hx, grid.hy) ** 2
    coef = 0.0
    if cfg.nu > 0.0:
        gx = (np.roll(s.v.u, -1, 1) - np.roll(s.v.u, 1, 1)) / (2 * grid.hx)
        gy = (np.roll(s.v.u, -1, 0) - np.roll(s.v.u, 1, 0)) / (2 * grid.hy)
        px = (np.roll(s.v.v, -1, 1) - np.roll(s.v.v, 1, 1)) / (2 * grid.hx)
        py = (np.roll(s.v.v, -1, 0) - np.roll(s.v.v, 1, 0)) / (2 * grid.hy)
        s2 = gx * gx + gy * gy + px * px + py * py
        delta = _momentum_delta(s, cfg, s2)
        ex = (cfg.gamma - 2.0) / 2.0
        sref = float(s2.max()) + delta * delta if ex >= 0.0 else float(s2.min()) + delta * delta
        cmax = sref**ex if sref > 0.0 else (0.0 if ex > 0.0 else float("inf"))
        coef += cfg.nu * cmax
    coef += cfg.eps
    return _DIFFUSION_SAFETY * h2 / coef if coef > 0.0 else float("inf")


def step_pns_momentum(s: FlowState, cfg: StepConfig, dt: float) -> FlowState:
    """Fractional step for the mollified momentum-form system with
    gamma = p: explicit SSP-RK3 transport+diffusion on the momentum,
    velocity recovery through the inverse power map, one spectral
    divergence projection, and momentum rebuild."""
    if cfg.gamma != cfg.p:
        raise ValueError("momentum form requires gamma = p")
    grid = s.grid
    if grid.bc != PERIODIC:
        raise ValueError("momentum form requires a periodic grid")
    dt = float(dt)
    cap = momentum_dt_cap(s, cfg)
    if dt > cap:
        raise DtTooLarge("dt %.3e exceeds diffusion cap %.3e" % (dt, cap))
    pe = cfg.pe
    gx = (np.roll(s.v.u, -1, 1) - np.roll(s.v.u, 1, 1)) / (2 * grid.hx)
    gy = (np.roll(s.v.u, -1, 0) - np.roll(s.v.u, 1, 0)) / (2 * grid.hy)
    px = (np.roll(s.v.v, -1, 1) - np.roll(s.v.v, 1, 1)) / (2 * grid.hx)
    py = (np.roll(s.v.v, -1, 0) - np.roll(s.v.v, 1, 0)) / (2 * grid.hy)
    delta = _momentum_delta(s, cfg, gx * gx + gy * gy + px * px + py * py)
    hmin = min(grid.hx, grid.hy)

    def rhs(wu, wv):
        # momentum transport by the mollified velocity + both diffusions
        vel = q_power(VectorField2(grid, wu, wv), pe)
        adv = mollify(vel, cfg.eps) if cfg.eps > 0.0 else vel
        amax = float(np.hypot(adv.u, adv.v).max())
        if amax * dt / hmin > 0.9:
            raise CflViolation(
                "advective CFL %.3f exceeds 0.9 in the momentum stepper"
                % (amax * dt / hmin,)
            )
        du = -K.upwind3_tendency(wu, adv.u, adv.v, grid.hx, grid.hy)
        dv = -K.upwind3_tendency(wv, adv.u, adv.v, grid.hx, grid.hy)
        if cfg.nu > 0.0:
            lu, lv = K.gamma_lap_vec(vel.u, vel.v, grid.hx, grid.hy, cfg.gamma, delta)
            du = du + cfg.nu * lu
            dv = dv + cfg.nu * lv
        if cfg.eps > 0.0:
            du = du - cfg.eps * K.plap_apply(wu, grid.hx, grid.hy, 2.0, 0.0)
            dv = dv - cfg.eps * K.plap_apply(wv, grid.hx, grid.hy, 2.0, 0.0)
        return du, dv

    wu0, wv0 = s.v_p.u, s.v_p.v

    du, dv = rhs(wu0, wv0)
    u1 = wu0 + dt * du
    v1 = wv0 + dt * dv

    du, dv = rhs(u1, v1)
    u2 = wu0 + ((u1 + dt * du) - wu0) * 0.25
    v2 = wv0 + ((v1 + dt * dv) - wv0) * 0.25

    du, dv = rhs(u2, v2)
    u3 = wu0 + ((u2 + dt * du) - wu0) * (2.0 / 3.0)
    v3 = wv0 + ((v2 + dt * dv) - wv0) * (2.0 / 3.0)

    vel = q_power(VectorField2(grid, u3, v3), pe)
    pu, pv, phi = project_div_free(vel.u, vel.v, grid.hx, grid.hy)
    if cfg.p != 2.0:
        # all three tendency terms are divergence-form and conserve the
        # momentum integral; the projection must not break that. Constants
        # are the divergence-free harmonic fields of the torus, so fix the
        # projection's harmonic part by the momentum budget.
        cu, cv = _conserving_shift(pu, pv, cfg.p, float(u3.mean()), float(v3.mean()))
        pu = pu + cu
        pv = pv + cv
    v_new = VectorField2(grid, pu, pv)
    vp_new = p_power(v_new, cfg.p)
    return FlowState(
        s.t + dt,
        curl2(vp_new),
        None,
        v_new,
        vp_new,
        ScalarField(grid, phi / dt),
    )


def _mean_p_power(u, v, p):
    m = np.hypot(u, v)
    with np.errstate(divide="ignore", invalid="ignore"):
        coef = np.where(m > 0.0, m ** (p - 2.0), 0.0)
    return float((coef * u).mean()), float((coef * v).mean())


def _conserving_shift(u, v, p, tu, tv):
    """Constant velocity (cu, cv) with mean(p_power(v + c)) = target mean.
    Damped 2x2 Newton with a finite-difference Jacobian; the map is
    monotone so this converges in a few iterations."""
    scale = max(float(np.hypot(u, v).max()), abs(tu), abs(tv), 1e-300)
    tol = 1e-14 * max(1.0, scale ** (p - 1.0))
    cu = cv = 0.0
    for _ in range(40):
        fu, fv = _mean_p_power(u + cu, v + cv, p)
        ru, rv = fu - tu, fv - tv
        if max(abs(ru), abs(rv)) <= tol:
            break
        eta = 1e-7 * scale
        fup, fvp = _mean_p_power(u + cu + eta, v + cv, p)
        fum, fvm = _mean_p_power(u + cu - eta, v + cv, p)
        j11, j21 = (fup - fum) / (2 * eta), (fvp - fvm) / (2 * eta)
        fup, fvp = _mean_p_power(u + cu, v + cv + eta, p)
        fum, fvm = _mean_p_power(u + cu, v + cv - eta, p)
        j12, j22 = (fup - fum) / (2 * eta), (fvp - fvm) / (2 * eta)
        det = j11 * j22 - j12 * j21
        if det == 0.0 or not np.isfinite(det):
            break
        cu -= (j22 * ru - j12 * rv) / det
        cv -= (j11 * rv - j21 * ru) / det
    return cu, cv


# ------------------------------------------------------------- step control


def max_stable_dt(s: FlowState, cfg: StepConfig) -> float:
    """Largest dt the configured model tolerates from the current state:
    the advective CFL bound plus each model's diffusion cap."""
    grid = s.grid
    hmin = min(grid.hx, grid.hy)
    vmax = float(np.hypot(s.v.u, s.v.v).max())
    dt = cfg.cfl * hmin / vmax if vmax > 0.0 else float("inf")
    if cfg.model == PNS_GAMMA2:
        dt = min(dt, biharmonic_dt_cap(grid, cfg.nu))
    elif cfg.model == PNS_MOMENTUM:
        dt = min(dt, momentum_dt_cap(s, cfg))
    return dt


STEPPERS = {
    EULER: step_p_euler,
    EULER_DAMPED: step_p_euler_damped,
    PNS_GAMMA2: step_pns_gamma2,
    PNS_MOMENTUM: step_pns_momentum,
}
