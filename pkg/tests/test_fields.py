"""Grid, field containers, and the composed central stencil calculus.

The discrete identities checked here are load-bearing for everything
downstream: exact adjointness of grad and -div, pointwise-zero divergence
of the rotated gradient, and the wide-Laplacian eigenvalue that the
elliptic tests reuse.
"""

import numpy as np
import pytest

from pflow import (
    DIRICHLET,
    PERIODIC,
    Grid2D,
    ScalarField,
    VectorField2,
    curl2,
    div,
    grad,
    integrate,
    linf_norm,
    lp_norm,
    perp_grad,
)


def _grid(nx=64, L=2 * np.pi, bc=PERIODIC):
    return Grid2D(nx, nx, L, L, bc)


def test_grid_spacing_periodic():
    g = Grid2D(8, 16, 1.0, 4.0, PERIODIC)
    assert g.hx == 1.0 / 8
    assert g.hy == 4.0 / 16
    assert g.shape == (16, 8)
    assert g.cell_area() == g.hx * g.hy


def test_grid_spacing_dirichlet_interior_nodes():
    # interior nodes only: n nodes span L with n+1 gaps
    g = Grid2D(8, 8, 1.0, 1.0, DIRICHLET)
    assert g.hx == pytest.approx(1.0 / 9)
    x = g.x()
    assert x[0] == pytest.approx(g.hx)
    assert x[-1] == pytest.approx(1.0 - g.hx)


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid2D(2, 8, 1.0, 1.0, PERIODIC)
    with pytest.raises(ValueError):
        Grid2D(8, 8, -1.0, 1.0, PERIODIC)
    with pytest.raises(ValueError):
        Grid2D(8, 8, 1.0, 1.0, "weird")


def test_scalar_field_validation():
    g = _grid(8)
    with pytest.raises(ValueError):
        ScalarField(g, np.zeros((4, 4)))
    bad = np.zeros(g.shape)
    bad[0, 0] = np.nan
    with pytest.raises(ValueError):
        ScalarField(g, bad)


def test_grad_second_order_convergence():
    errs = []
    for nx in (32, 64, 128):
        g = _grid(nx)
        X, Y = g.mesh()
        f = ScalarField(g, np.sin(X) * np.cos(Y))
        gf = grad(f)
        e = max(
            np.abs(gf.u - np.cos(X) * np.cos(Y)).max(),
            np.abs(gf.v + np.sin(X) * np.sin(Y)).max(),
        )
        errs.append(e)
    assert errs[0] / errs[1] > 3.5
    assert errs[1] / errs[2] > 3.5


def test_grad_div_adjointness_exact():
    # sum f * div(w) == -sum grad(f) . w for periodic central stencils
    rng = np.random.default_rng(3)
    g = _grid(48)
    f = rng.standard_normal(g.shape)
    wu = rng.standard_normal(g.shape)
    wv = rng.standard_normal(g.shape)
    sf = ScalarField(g, f)
    w = VectorField2(g, wu, wv)
    gf = grad(sf)
    lhs = float((f * div(w).values).sum())
    rhs = -float((gf.u * wu + gf.v * wv).sum())
    scale = float(np.abs(f).max() * (np.abs(wu).max() + np.abs(wv).max())) * f.size
    assert abs(lhs - rhs) <= 1e-13 * scale


def test_perp_grad_is_divergence_free_pointwise():
    rng = np.random.default_rng(4)
    g = _grid(32)
    psi = ScalarField(g, rng.standard_normal(g.shape))
    v = perp_grad(psi)
    # d_x d_y and d_y d_x central stencils commute exactly
    assert np.abs(div(v).values).max() < 1e-13


def test_perp_grad_orientation():
    g = _grid(64)
    X, Y = g.mesh()
    psi = ScalarField(g, np.sin(Y))
    v = perp_grad(psi)
    # (d_y psi, -d_x psi): flow to +x where cos y > 0
    assert v.u[32, 0] == pytest.approx(np.cos(g.y()[32]), abs=2e-3)
    assert np.abs(v.v).max() < 1e-14


def test_curl_of_perp_grad_is_wide_laplacian_eigen():
    # curl2(perp_grad psi) = -wide_laplacian(psi); on sin x sin y the
    # eigenvalue of the composed stencil is 2 sin(h)^2 / h^2, not 2
    nx = 64
    g = _grid(nx)
    X, Y = g.mesh()
    psi = ScalarField(g, np.sin(X) * np.sin(Y))
    lam = 2.0 * np.sin(g.hx) ** 2 / g.hx**2
    assert lam == pytest.approx(1.9935827280899219, rel=1e-12)
    w = curl2(perp_grad(psi))
    assert np.abs(w.values - lam * psi.values).max() < 1e-12


def test_curl_sign_convention():
    # rigid rotation v = (-y, x) about the domain center has curl +2
    g = Grid2D(64, 64, 2.0, 2.0, PERIODIC)
    X, Y = g.mesh()
    # keep away from the periodic seam: window the check to the interior
    v = VectorField2(g, -(Y - 1.0), X - 1.0)
    w = curl2(v).values
    assert w[20:40, 20:40] == pytest.approx(2.0, abs=1e-12)


def test_integrate_and_norms():
    g = _grid(64)
    X, Y = g.mesh()
    one = ScalarField(g, np.ones(g.shape))
    assert integrate(one) == pytest.approx((2 * np.pi) ** 2, rel=1e-14)
    f = ScalarField(g, np.sin(X))
    # trapezoid on periodic grids is exact for band-limited integrands
    assert abs(integrate(f)) < 1e-13
    assert lp_norm(f, 2) == pytest.approx(np.sqrt(0.5 * (2 * np.pi) ** 2), rel=1e-12)
    v = VectorField2(g, np.sin(X), np.cos(X))
    # |v| = 1 everywhere
    assert lp_norm(v, 3) == pytest.approx(((2 * np.pi) ** 2) ** (1 / 3), rel=1e-12)
    assert linf_norm(v) == pytest.approx(1.0, rel=1e-12)


def test_lp_norm_rejects_p_at_most_one():
    g = _grid(8)
    f = ScalarField.zeros(g)
    with pytest.raises(ValueError):
        lp_norm(f, 1.0)
    with pytest.raises(ValueError):
        lp_norm(f, 0.5)


def test_dirichlet_onesided_gradient_second_order():
    errs = []
    for nx in (32, 64):
        g = Grid2D(nx, nx, 1.0, 1.0, DIRICHLET)
        X, Y = g.mesh()
        f = ScalarField(g, np.sin(np.pi * X) * np.sin(np.pi * Y))
        gf = grad(f)
        e = np.abs(gf.u - np.pi * np.cos(np.pi * X) * np.sin(np.pi * Y)).max()
        errs.append(e)
    assert errs[0] / errs[1] > 3.0


def test_from_function():
    g = _grid(16)
    f = ScalarField.from_function(g, lambda x, y: x + 2 * y)
    X, Y = g.mesh()
    assert np.array_equal(f.values, X + 2 * Y)
