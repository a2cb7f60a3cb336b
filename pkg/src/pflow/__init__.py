"""Finite-difference laboratory for p-Euler and p-Navier-Stokes flows in 2D.

The package is organized around a degenerate elliptic core (streamfunction
recovery from transported vorticity through a p-Laplacian), explicit
transport schemes, momentum-form steppers with spectral projection, closed
form self-similar and geodesic references, and a diagnostics layer that
checks every conservation law and dissipation identity the model family
satisfies.
"""

from ._kernels import BACKEND as kernel_backend
from .fields import (
    DIRICHLET,
    PERIODIC,
    Grid2D,
    ScalarField,
    TensorField2,
    VectorField2,
    curl2,
    div,
    grad,
    integrate,
    linf_norm,
    lp_norm,
    perp_grad,
)
from .pmomentum import PExponent, a_q_tensor, energies, monotonicity_gap, p_power, q_power

__version__ = "0.1.0"
