"""Degenerate elliptic core: the p-Laplacian and its variational solver.

The operator is the discrete divergence form
    A_p(psi) = -div( (|grad psi|^2 + delta^2)^((p-2)/2) grad psi )
built from the composed central stencils of fields.py, so that A_p is the
exact gradient of the convex energy
    J(psi) = sum over cells of ( (1/p) (|grad psi|^2 + delta^2)^(p/2)
                                 - omega * psi ) * hx * hy.
Minimizing J over gauge-fixed fields solves A_p(psi) = omega.

Gauge: on even periodic grids the composed stencils annihilate the constant
and the two-cell checkerboard modes, so J is invariant along them; sources
are projected onto the compatible complement and every iterate is projected
back onto the gauge slice.

The solver is a damped Newton iteration: matrix-free Hessian, preconditioned
conjugate gradients with the FFT inverse of the constant-coefficient wide
Laplacian, Armijo backtracking on J, and a preconditioned steepest-descent
fallback whenever the Newton direction is unusable. Every accepted iterate
strictly decreases J.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from . import _kernels as K
from .errors import NoConvergence, NonZeroMeanSource
from .fields import DIRICHLET, PERIODIC, Grid2D, ScalarField, VectorField2
from .pmomentum import PExponent
from .spectral import project_null_modes, solve_wide_poisson

NEWTON_LS = "newton-ls"
NCG = "ncg"

_MAX_CG = 500
_ARMIJO_C1 = 1e-4
_ALPHA_MIN = 1e-14


@dataclass
class PlapConfig:
    """Knobs for the elliptic operator and solver.

    delta: gradient regularization; None picks 1e-8 times the gradient scale
    of the field at hand (capped below by 1e-8).
    tol: relative residual target, ||A_p(psi) - omega||_2 <= tol * max(1, ||omega||_2).
    max_iter: outer iteration budget (Newton or NCG steps).
    method: "newton-ls" (default) or "ncg".
    cg_eta: inner CG forcing term (residual reduction per Newton system).
    """

    delta: float | None = None
    tol: float = 1e-10
    max_iter: int = 200
    method: str = NEWTON_LS
    cg_eta: float = 0.05

    def __post_init__(self):
        if self.delta is not None and self.delta < 0.0:
            raise ValueError("delta must be >= 0")
        if not self.tol > 0.0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.method not in (NEWTON_LS, NCG):
            raise ValueError("unknown method %r" % (self.method,))
        if not (0.0 < self.cg_eta < 1.0):
            raise ValueError("cg_eta must lie in (0, 1)")


def _resolve_delta(cfg: PlapConfig, psi_vals, hx, hy) -> float:
    if cfg is not None and cfg.delta is not None:
        return float(cfg.delta)
    gx = (np.roll(psi_vals, -1, 1) - np.roll(psi_vals, 1, 1)) / (2.0 * hx)
    gy = (np.roll(psi_vals, -1, 0) - np.roll(psi_vals, 1, 0)) / (2.0 * hy)
    scale = float(np.sqrt(gx * gx + gy * gy).max())
    return 1e-8 * max(1.0, scale)


def _plap_apply_dirichlet(vals, hx, hy, p, delta):
    # zero boundary ring plus odd reflection beyond it, then the same
    # composed central stencils as the periodic path
    ny, nx = vals.shape
    ext = np.zeros((ny + 4, nx + 4))
    ext[2:-2, 2:-2] = vals
    ext[0, 2:-2] = -vals[0]
    ext[-1, 2:-2] = -vals[-1]
    ext[2:-2, 0] = -vals[:, 0]
    ext[2:-2, -1] = -vals[:, -1]
    gx = np.empty_like(ext)
    gy = np.empty_like(ext)
    gx[:, 1:-1] = (ext[:, 2:] - ext[:, :-2]) / (2.0 * hx)
    gy[1:-1, :] = (ext[2:, :] - ext[:-2, :]) / (2.0 * hy)
    gx[:, 0] = gx[:, -1] = 0.0
    gy[0, :] = gy[-1, :] = 0.0
    s = gx * gx + gy * gy + delta * delta
    ex = (p - 2.0) / 2.0
    if ex >= 0.0:
        c = s**ex
    else:
        pos = s > 0.0
        c = np.where(pos, np.where(pos, s, 1.0) ** ex, 0.0)
    fx = c * gx
    fy = c * gy
    div = (fx[2:-2, 3:-1] - fx[2:-2, 1:-3]) / (2.0 * hx) + (
        fy[3:-1, 2:-2] - fy[1:-3, 2:-2]
    ) / (2.0 * hy)
    return -div


def apply_p_laplacian(psi: ScalarField, p, cfg: PlapConfig | None = None) -> ScalarField:
    """Evaluate -div((|grad psi|^2 + delta^2)^((p-2)/2) grad psi)."""
    pe = PExponent.of(p)
    grid = psi.grid
    delta = _resolve_delta(cfg, psi.values, grid.hx, grid.hy)
    if grid.bc == PERIODIC:
        out = K.plap_apply(psi.values, grid.hx, grid.hy, pe.p, delta)
    else:
        out = _plap_apply_dirichlet(psi.values, grid.hx, grid.hy, pe.p, delta)
    return ScalarField(grid, out)


def _check_mean_zero(omega: ScalarField):
    area = omega.grid.cell_area()
    total = float(omega.values.sum()) * area
    l1 = float(np.abs(omega.values).sum()) * area
    if abs(total) > 1e-10 * max(l1, 1e-300):
        raise NonZeroMeanSource(
            "source mean %.3e exceeds 1e-10 of its L1 mass %.3e" % (total, l1)
        )


def _energy(psi_vals, b_vals, hx, hy, p, delta):
    gx = (np.roll(psi_vals, -1, 1) - np.roll(psi_vals, 1, 1)) / (2.0 * hx)
    gy = (np.roll(psi_vals, -1, 0) - np.roll(psi_vals, 1, 0)) / (2.0 * hy)
    s = gx * gx + gy * gy + delta * delta
    dens = s ** (p / 2.0) / p - b_vals * psi_vals
    return float(dens.sum()) * hx * hy


def p_dirichlet_energy(psi: ScalarField, omega: ScalarField, p, cfg: PlapConfig | None = None):
    """Return (J, gradJ) for the regularized p-Dirichlet energy with linear
    source term. gradJ is apply_p_laplacian(psi) - omega, exactly the
    discrete variational derivative of J. Periodic grids only; the source
    must be mean-free to be compatible."""
    pe = PExponent.of(p)
    grid = psi.grid
    if grid.bc != PERIODIC:
        raise ValueError("p_dirichlet_energy is defined on periodic grids")
    if grid != omega.grid:
        raise ValueError("psi and omega live on different grids")
    _check_mean_zero(omega)
    delta = _resolve_delta(cfg, psi.values, grid.hx, grid.hy)
    j = _energy(psi.values, omega.values, grid.hx, grid.hy, pe.p, delta)
    g = K.plap_apply(psi.values, grid.hx, grid.hy, pe.p, delta) - omega.values
    return j, ScalarField(grid, g)


def apply_gamma_laplacian_vec(v: VectorField2, gamma: float, cfg: PlapConfig | None = None) -> VectorField2:
    """Vector diffusion div(|grad v|^(gamma-2) grad v) with the Frobenius
    modulus of the full velocity gradient shared across components.

    Positive divergence form: this is the term added to a right-hand side,
    and sum v . out * h^2 = -sum (|grad v|^2 + delta^2)^((gamma-2)/2)
    |grad v|^2 * h^2 exactly, by stencil adjointness."""
    if not gamma > 1.0:
        raise ValueError("gamma must be > 1")
    grid = v.grid
    if grid.bc != PERIODIC:
        raise ValueError("vector gamma-Laplacian is defined on periodic grids")
    delta = 0.0
    if cfg is not None and cfg.delta is not None:
        delta = float(cfg.delta)
    ou, ov = K.gamma_lap_vec(v.u, v.v, grid.hx, grid.hy, float(gamma), delta)
    return VectorField2(grid, ou, ov)


class PPoissonSolver:
    """Reusable solver instance; owns per-solve statistics.

    One solve at a time per instance. After solve(): iterations, residual,
    energy_history (J of the initial guess followed by every accepted
    iterate), residual_history (gradient norm at the same states),
    step_kinds (one label per accepted step: "newton", "grad", or
    "saturated"), delta_used, cg_iterations, saturated_steps.

    Every "newton" or "grad" step strictly decreases J in exact float
    comparison; "saturated" steps are taken once the per-step decrease
    falls below the float resolution of J, accepted on gradient-norm
    reduction instead.
    """

    def __init__(self, cfg: PlapConfig | None = None):
        self.cfg = cfg or PlapConfig()
        self.iterations = 0
        self.residual = float("nan")
        self.energy_history: list[float] = []
        self.residual_history: list[float] = []
        self.step_kinds: list[str] = []
        self.delta_used = 0.0
        self.cg_iterations = 0
        self.saturated_steps = 0

    # -- internals ---------------------------------------------------------

    def _pcg(self, coeffs, rhs, hx, hy, cscale, eta):
        gx, gy, c, c2 = coeffs
        x = np.zeros_like(rhs)
        r = rhs.copy()
        r0n = float(np.sqrt(np.vdot(r, r).real))
        if r0n == 0.0:
            return x

        # symmetric diagonally scaled FFT preconditioner: with s = 1/sqrt(c)
        # the sandwich s (-Lap_wide)^-1 s stays SPD and follows the variable
        # coefficient, which spans many decades around degenerate regions
        cmax = float(c.max())
        if cmax > 0.0:
            s = 1.0 / np.sqrt(np.maximum(c, 1e-32 * cmax))
            prec = lambda rr: s * solve_wide_poisson(s * rr, hx, hy)
        else:
            prec = lambda rr: solve_wide_poisson(rr, hx, hy) / cscale

        z = prec(r)
        rho = float(np.vdot(r, z).real)
        if not np.isfinite(rho) or rho <= 0.0:
            prec = lambda rr: solve_wide_poisson(rr, hx, hy) / cscale
            z = prec(r)
            rho = float(np.vdot(r, z).real)
        d = z.copy()
        for _ in range(_MAX_CG):
            hd = K.plap_hess_apply(d, gx, gy, c, c2, hx, hy)
            dhd = float(np.vdot(d, hd).real)
            if dhd <= 0.0:
                break
            alpha = rho / dhd
            x += alpha * d
            r -= alpha * hd
            self.cg_iterations += 1
            if float(np.sqrt(np.vdot(r, r).real)) <= eta * r0n:
                break
            z = prec(r)
            rho_new = float(np.vdot(r, z).real)
            if not np.isfinite(rho_new) or rho_new <= 0.0:
                break
            d = z + (rho_new / rho) * d
            rho = rho_new
        return x

    def _line_search(self, psi, b, d, j0, slope, hx, hy, p, delta):
        alpha = 1.0
        while alpha >= _ALPHA_MIN:
            trial = psi + alpha * d
            j = _energy(trial, b, hx, hy, p, delta)
            # strict decrease required: a tie means the true decrease is
            # below float resolution and belongs to the saturated path
            if j < j0 and j <= j0 + _ARMIJO_C1 * alpha * slope:
                return trial, j, alpha
            alpha *= 0.5
        return None, j0, 0.0

    # -- public ------------------------------------------------------------

    def solve(self, omega: ScalarField, p, warm_start: ScalarField | None = None) -> ScalarField:
        pe = PExponent.of(p)
        grid = omega.grid
        if grid.bc != PERIODIC:
            raise ValueError("solve_p_poisson is defined on periodic grids")
        _check_mean_zero(omega)
        hx, hy = grid.hx, grid.hy
        area = grid.cell_area()
        sqrt_area = np.sqrt(area)

        b = project_null_modes(omega.values)
        bnorm = float(np.sqrt(np.vdot(b, b).real)) * sqrt_area
        target = self.cfg.tol * max(1.0, bnorm)

        self.iterations = 0
        self.cg_iterations = 0
        self.saturated_steps = 0
        self.energy_history = []
        self.residual_history = []
        self.step_kinds = []

        if bnorm == 0.0:
            self.residual = 0.0
            self.delta_used = _resolve_delta(self.cfg, np.zeros(grid.shape), hx, hy)
            return ScalarField.zeros(grid)

        if warm_start is not None:
            psi = project_null_modes(np.asarray(warm_start.values, dtype=np.float64))
        else:
            psi = solve_wide_poisson(b, hx, hy)
            if pe.p != 2.0:
                # match the energy scale: minimize J along the linear solution
                gx = (np.roll(psi, -1, 1) - np.roll(psi, 1, 1)) / (2.0 * hx)
                gy = (np.roll(psi, -1, 0) - np.roll(psi, 1, 0)) / (2.0 * hy)
                gp = float(np.sum(np.sqrt(gx * gx + gy * gy) ** pe.p))
                bp = float(np.vdot(b, psi).real)
                if gp > 0.0 and bp > 0.0:
                    psi = psi * (bp / gp) ** (1.0 / (pe.p - 1.0))

        delta = _resolve_delta(self.cfg, psi, hx, hy)
        self.delta_used = delta

        if pe.p == 2.0:
            psi = solve_wide_poisson(b, hx, hy)
            g = K.plap_apply(psi, hx, hy, 2.0, delta) - b
            self.residual = float(np.sqrt(np.vdot(g, g).real)) * sqrt_area
            self.iterations = 1
            self.energy_history = [_energy(psi, b, hx, hy, 2.0, delta)]
            self.residual_history = [self.residual]
            if self.residual <= target:
                return ScalarField(grid, psi)
            # fall through to the iterative path only if the direct solve
            # somehow failed the tolerance

        g = K.plap_apply(psi, hx, hy, pe.p, delta) - b
        gnorm = float(np.sqrt(np.vdot(g, g).real)) * sqrt_area
        j = _energy(psi, b, hx, hy, pe.p, delta)
        self.energy_history.append(j)
        self.residual_history.append(gnorm)

        use_newton = self.cfg.method == NEWTON_LS
        prev_ncg = None  # (g, z, d) triple for NCG recurrences

        for it in range(self.cfg.max_iter):
            if gnorm <= target:
                self.iterations = it
                self.residual = gnorm
                return ScalarField(grid, psi)

            coeffs = K.plap_grad_coeffs(psi, hx, hy, pe.p, delta)
            cscale = max(float(coeffs[2].mean()), 1e-300)

            # candidate directions, best first
            dirs = []
            if use_newton:
                # Eisenstat-Walker forcing: when the warm-started residual is
                # already near the target, one cheap inner solve at exactly
                # the needed reduction beats a fixed-factor one
                eta = float(np.clip(0.5 * target / gnorm, 1e-4, self.cfg.cg_eta))
                d = self._pcg(coeffs, -g, hx, hy, cscale, eta=eta)
                slope = float(np.vdot(g, d).real) * area
                if np.isfinite(slope) and slope < 0.0:
                    dirs.append(("newton", d, slope))
            z = solve_wide_poisson(g, hx, hy) / cscale
            if prev_ncg is not None:
                g_old, z_old, d_old = prev_ncg
                denom = float(np.vdot(g_old, z_old).real)
                beta = max(0.0, float(np.vdot(g - g_old, z).real) / denom) if denom > 0.0 else 0.0
                d2 = -z + beta * d_old
                slope2 = float(np.vdot(g, d2).real) * area
                if slope2 >= 0.0:
                    d2, slope2 = -z, float(np.vdot(g, -z).real) * area
            else:
                d2, slope2 = -z, float(np.vdot(g, -z).real) * area
            dirs.append(("grad", d2, slope2))

            accepted = None
            for kind, d, slope in dirs:
                trial, j_new, alpha = self._line_search(psi, b, d, j, slope, hx, hy, pe.p, delta)
                if trial is not None:
                    accepted = (kind, trial, j_new)
                    break

            if accepted is None:
                # the per-step decrease has fallen below the float
                # resolution of J; drive the gradient norm directly
                for kind, d, _slope in dirs:
                    for alpha in (1.0, 0.5, 0.25, 0.0625):
                        cand = project_null_modes(psi + alpha * d)
                        g_c = K.plap_apply(cand, hx, hy, pe.p, delta) - b
                        gn_c = float(np.sqrt(np.vdot(g_c, g_c).real)) * sqrt_area
                        if gn_c <= 0.9 * gnorm:
                            accepted = ("saturated", cand, _energy(cand, b, hx, hy, pe.p, delta))
                            self.saturated_steps += 1
                            break
                    if accepted is not None:
                        break
            if accepted is None:
                self.iterations = it + 1
                self.residual = gnorm
                raise NoConvergence(self.iterations, gnorm, "line search stalled at residual %.3e" % gnorm)

            kind, trial, j_new = accepted
            # J is exactly invariant under null-mode shifts (the composed
            # stencils annihilate them and b is projected), so the accepted
            # line-search value stays valid for the projected iterate
            psi = project_null_modes(trial)
            j = j_new
            self.energy_history.append(j)
            self.step_kinds.append(kind)
            g = K.plap_apply(psi, hx, hy, pe.p, delta) - b
            gnorm = float(np.sqrt(np.vdot(g, g).real)) * sqrt_area
            self.residual_history.append(gnorm)
            prev_ncg = (g.copy(), z, dirs[-1][1]) if kind == "grad" else None

        if gnorm <= target:
            self.iterations = self.cfg.max_iter
            self.residual = gnorm
            return ScalarField(grid, psi)
        raise NoConvergence(self.cfg.max_iter, gnorm)


def solve_p_poisson(
    omega: ScalarField,
    p,
    cfg: PlapConfig | None = None,
    warm_start: ScalarField | None = None,
) -> ScalarField:
    """Solve A_p(psi) = omega for the gauge-fixed streamfunction."""
    return PPoissonSolver(cfg).solve(omega, p, warm_start)
