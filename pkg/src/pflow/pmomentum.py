"""Signed-power maps between velocity and momentum, and their algebra.

For exponent p > 1 with dual q = p/(p-1), the momentum of a velocity w is
the signed power |w|^(p-2) w. The maps with exponents p and q are mutually
inverse, and the kinetic energies
    L = (1/p) * integral |v|^p,    H = (1/q) * integral |v_p|^q
satisfy p*L = q*H because |v_p|^q = |v|^p pointwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .fields import ScalarField, VectorField2, TensorField2, integrate


@dataclass(frozen=True)
class PExponent:
    """Exponent pair (p, q) with 1/p + 1/q = 1."""

    p: float

    def __post_init__(self):
        if not self.p > 1.0:
            raise ValueError("exponent must satisfy p > 1")

    @property
    def q(self) -> float:
        return self.p / (self.p - 1.0)

    @classmethod
    def of(cls, p) -> "PExponent":
        if isinstance(p, PExponent):
            return p
        return cls(float(p))


def _signed_power_field(w, alpha):
    if isinstance(w, VectorField2):
        ou, ov = K.p_power_pair(w.u, w.v, alpha)
        return VectorField2(w.grid, ou, ov)
    if isinstance(w, ScalarField):
        return ScalarField(w.grid, K.p_power_scalar(w.values, alpha))
    raise TypeError("expected ScalarField or VectorField2")


def p_power(w, p):
    """Velocity to momentum: |w|^(p-2) w pointwise, with 0 mapped to 0."""
    pe = PExponent.of(p)
    return _signed_power_field(w, pe.p - 2.0)


def q_power(w, q):
    """Momentum back to velocity: |w|^(q-2) w pointwise, with 0 mapped to 0."""
    if isinstance(q, PExponent):
        alpha = q.q - 2.0
    else:
        q = float(q)
        if not q > 1.0:
            raise ValueError("exponent must satisfy q > 1")
        alpha = q - 2.0
    return _signed_power_field(w, alpha)


def energies(v: VectorField2, p) -> tuple[float, float]:
    """Return (L, H) computed from one shared integral of |v|^p.

    Writing the dual energy through |v_p|^q = |v|^p keeps the identity
    p*L = q*H exact instead of merely within rounding.
    """
    pe = PExponent.of(p)
    mass = integrate(ScalarField(v.grid, v.magnitude() ** pe.p))
    return mass / pe.p, mass / pe.q


def a_q_tensor(w: VectorField2, p) -> TensorField2:
    """Anisotropy tensor I + (q-2) \\hat{w} \\otimes \\hat{w} of the momentum
    field; where w vanishes the tensor is the identity. Its spectrum is
    {1, q-1} wherever w is nonzero."""
    pe = PExponent.of(p)
    m2 = w.u * w.u + w.v * w.v
    safe = np.where(m2 > 0.0, m2, 1.0)
    fac = np.where(m2 > 0.0, (pe.q - 2.0) / safe, 0.0)
    off = fac * w.u * w.v  # shared so the tensor is exactly symmetric
    return TensorField2(
        w.grid,
        1.0 + fac * w.u * w.u,
        off,
        off.copy(),
        1.0 + fac * w.v * w.v,
    )


def monotonicity_gap(eta1, eta2, p):
    """Pairing (|a|^(p-2) a - |b|^(p-2) b) . (a - b) and its comparison unit.

    Returns (lhs, rhs_unit) with rhs_unit = (|a| + |b|)^(p-2) |a - b|^2.
    The ratio lhs/rhs_unit is bounded below by a positive constant depending
    only on p; at p = 2 both sides coincide. Inputs are arrays whose last
    axis is the vector dimension; any batch shape is allowed.
    """
    pe = PExponent.of(p)
    a = np.asarray(eta1, dtype=np.float64)
    b = np.asarray(eta2, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError("eta1 and eta2 must have the same shape")
    ma = np.sqrt(np.sum(a * a, axis=-1))
    mb = np.sqrt(np.sum(b * b, axis=-1))

    def signed(m, w):
        f = np.where(m > 0.0, np.where(m > 0.0, m, 1.0) ** (pe.p - 2.0), 0.0)
        return f[..., None] * w

    diff = a - b
    lhs = np.sum((signed(ma, a) - signed(mb, b)) * diff, axis=-1)
    msum = ma + mb
    d2 = np.sum(diff * diff, axis=-1)
    rhs = np.where(msum > 0.0, np.where(msum > 0.0, msum, 1.0) ** (pe.p - 2.0), 0.0) * d2
    return lhs, rhs
