"""Named initial conditions and the eddy-turnover clock.

Two of the presets are vorticity-native (gaussian-vortex, radial-steady),
one is velocity-native (taylor-green), and the seeded random field is
built from a band-limited streamfunction so both faces are consistent.
make_initial_state assembles whichever representation the configured
model integrates.
"""

from __future__ import annotations

import numpy as np

from .fields import Grid2D, ScalarField, VectorField2, curl2, perp_grad
from .pmomentum import p_power
from .steppers import PNS_MOMENTUM, FlowState, StepConfig

VORTICITY_PRESETS = ("gaussian-vortex", "radial-steady", "random-seeded")
VELOCITY_PRESETS = ("taylor-green",)
PRESET_NAMES = VORTICITY_PRESETS + VELOCITY_PRESETS + ("from-file",)


def _centered_radius(grid: Grid2D):
    x, y = grid.mesh()
    return np.hypot(x - 0.5 * grid.Lx, y - 0.5 * grid.Ly)


def gaussian_vortex(grid: Grid2D, amplitude: float = 1.0, sigma: float | None = None) -> ScalarField:
    """Mean-free Gaussian blob of p-vorticity at the domain center."""
    if sigma is None:
        sigma = 0.1 * min(grid.Lx, grid.Ly)
    r = _centered_radius(grid)
    w = amplitude * np.exp(-0.5 * (r / sigma) ** 2)
    return ScalarField(grid, w - w.mean())

def radial_steady_psi(grid: Grid2D, amplitude: float = 1.0, r0: float | None = None) -> ScalarField:
    """Streamfunction of the steady rotating patch: -c (1 - t)^4 with
    t = (r/r0)^2 inside r0, constant outside, mean-subtracted. The
    azimuthal speed r-linear near the center rules out the r^(1/(p-1))
    cusp a vorticity-first radial profile forces there, and the C^2
    contact at r0 keeps the edge quiet. Peak speed is amplitude, on the
    ring r0/sqrt(7)."""
    if r0 is None:
        r0 = 0.45 * min(grid.Lx, grid.Ly)
    r = _centered_radius(grid)
    t = np.clip((r / r0) ** 2, 0.0, 1.0)
    c = amplitude * r0 * np.sqrt(7.0) / (8.0 * (6.0 / 7.0) ** 3)
    psi = -c * (1.0 - t) ** 4
    return ScalarField(grid, psi - psi.mean())


def radial_steady(grid: Grid2D, p: float, amplitude: float = 1.0, r0: float | None = None) -> ScalarField:
    """p-vorticity of the steady rotating patch, composed from the same
    discrete curl and p-power the elliptic operator factors through, so
    the stationary streamfunction is recovered by the solve instead of
    being approximated. Mean-free exactly: the discrete curl telescopes
    over the periodic grid."""
    psi = radial_steady_psi(grid, amplitude, r0)
    return curl2(p_power(perp_grad(psi), p))


def taylor_green(grid: Grid2D, amplitude: float = 1.0) -> VectorField2:
    """The cellular velocity field (sin kx cos ky, -cos kx sin ky)."""
    x, y = grid.mesh()
    kx = 2.0 * np.pi / grid.Lx
    ky = 2.0 * np.pi / grid.Ly
    u = amplitude * np.sin(kx * x) * np.cos(ky * y)
    v = -amplitude * np.cos(kx * x) * np.sin(ky * y)
    return VectorField2(grid, u, v)


def random_seeded(grid: Grid2D, seed: int, kmax: int = 6) -> VectorField2:
    """Divergence-free velocity from a band-limited random streamfunction,
    normalized to unit maximum speed. Deterministic in the seed."""
    rng = np.random.default_rng(int(seed))
    psi_hat = np.fft.rfft2(rng.standard_normal(grid.shape))
    ky = np.fft.fftfreq(grid.ny, d=1.0 / grid.ny)
    kx = np.fft.rfftfreq(grid.nx, d=1.0 / grid.nx)
    kkx, kky = np.meshgrid(kx, ky)
    keep = (np.hypot(kkx, kky) <= kmax) & ((kkx != 0) | (kky != 0))
    psi = np.fft.irfft2(np.where(keep, psi_hat, 0.0), s=grid.shape)
    vel = perp_grad(ScalarField(grid, psi))
    smax = float(np.hypot(vel.u, vel.v).max())
    return VectorField2(grid, vel.u / smax, vel.v / smax)


def preset_velocity(name: str, grid: Grid2D, cfg: StepConfig, seed: int | None = None) -> VectorField2:
    if name == "taylor-green":
        return taylor_green(grid)
    if name == "random-seeded":
        if seed is None:
            raise ValueError("random-seeded preset needs a seed")
        return random_seeded(grid, seed)
    raise ValueError("preset %r has no direct velocity form" % (name,))


def preset_vorticity(name: str, grid: Grid2D, cfg: StepConfig, seed: int | None = None) -> ScalarField:
    if name == "gaussian-vortex":
        return gaussian_vortex(grid)
    if name == "radial-steady":
        return radial_steady(grid, cfg.p)
    if name in VELOCITY_PRESETS + ("random-seeded",):
        vel = preset_velocity(name, grid, cfg, seed)
        return curl2(p_power(vel, cfg.p))
    raise ValueError("unknown preset %r" % (name,))


def _state_from_psi(psi: ScalarField, cfg: StepConfig) -> FlowState:
    # no elliptic solve: the state is consistent by construction and the
    # first step warm-starts from this psi
    v = perp_grad(psi)
    vp = p_power(v, cfg.p)
    return FlowState(0.0, curl2(vp), psi, v, vp)


def make_initial_state(name: str, grid: Grid2D, cfg: StepConfig, seed: int | None = None) -> FlowState:
    """Build the FlowState a given model starts from. from-file is handled
    by the runner, which owns snapshot loading."""
    if name == "from-file":
        raise ValueError("from-file initial data is resolved by the runner")
    if name not in PRESET_NAMES:
        raise ValueError("unknown preset %r" % (name,))
    if cfg.model == PNS_MOMENTUM:
        if name in VELOCITY_PRESETS or name == "random-seeded":
            vel = preset_velocity(name, grid, cfg, seed)
        elif name == "radial-steady":
            vel = perp_grad(radial_steady_psi(grid))
        else:
            vel = FlowState.from_vorticity(preset_vorticity(name, grid, cfg, seed), cfg).v
        return FlowState.from_velocity(vel, cfg)
    if name == "radial-steady":
        return _state_from_psi(radial_steady_psi(grid), cfg)
    return FlowState.from_vorticity(preset_vorticity(name, grid, cfg, seed), cfg)


def eddy_turnover(v: VectorField2) -> float:
    """Time for a parcel on the fastest ring to circle the domain center
    once: 2 pi r* / |v|(r*), with a domain-crossing fallback when the
    maximum sits at the center."""
    speed = np.hypot(v.u, v.v)
    smax = float(speed.max())
    if smax == 0.0:
        return float("inf")
    j, i = np.unravel_index(int(np.argmax(speed)), speed.shape)
    x, y = v.grid.mesh()
    r = float(np.hypot(x[j, i] - 0.5 * v.grid.Lx, y[j, i] - 0.5 * v.grid.Ly))
    if r == 0.0:
        return v.grid.Lx / smax
    return 2.0 * np.pi * r / smax
