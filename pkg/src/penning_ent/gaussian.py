"""Gaussian-state tools: symplectic form, propagation, bona fide and PPT tests.

The separability split is radial (x, y) versus axial (z). The partial
transpose flips the momenta of the radial pair; flipping the axial momentum
instead is an equivalent choice kept for cross-checks.
"""

import numpy as np

from .linalg import mat_exp, min_eigenvalue_hermitian

__all__ = [
    "EVENT_THRESHOLD",
    "RADIAL_FLIP",
    "AXIAL_FLIP",
    "symplectic_form",
    "evolve_covariance",
    "evolve_first_moments",
    "bona_fide",
    "bona_fide_margin",
    "partial_transpose_axial",
    "separability_epsilon",
    "symplectic_eigenvalues",
]

# epsilon below this (trap units) counts as an entanglement event
EVENT_THRESHOLD = -1e-10
BONA_FIDE_TOL = 1e-9

RADIAL_FLIP = np.array([1.0, -1.0, 1.0, -1.0, 1.0, 1.0])
AXIAL_FLIP = np.array([1.0, 1.0, 1.0, 1.0, 1.0, -1.0])


def symplectic_form(n_modes=3, hbar=1.0):
    """Commutator matrix ``Omega_jk = [R_j, R_k] / i`` for (x1, p1, x2, p2, ...)."""
    return hbar * np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def _sym(a):
    return 0.5 * (a + np.swapaxes(a, -1, -2))


def evolve_covariance(sigma0, lam, gamma, t):
    """``sigma(t) = P (sigma0 - Gamma) P^T + Gamma`` with ``P = exp(Lambda t)``."""
    p = mat_exp(lam, t)
    return _sym(p @ (np.asarray(sigma0) - gamma) @ np.swapaxes(p, -1, -2) + gamma)


def evolve_first_moments(r0, lam, t):
    """``<R>(t) = exp(Lambda t) <R>(0)``."""
    return (mat_exp(lam, t) @ np.asarray(r0, dtype=float)[..., None])[..., 0]


def bona_fide_margin(sigma, hbar=1.0):
    """Smallest eigenvalue of ``sigma + (i/2) Omega``."""
    n = np.shape(sigma)[-1] // 2
    return min_eigenvalue_hermitian(sigma + 0.5j * symplectic_form(n, hbar))


def bona_fide(sigma, tol=BONA_FIDE_TOL, hbar=1.0):
    """Uncertainty-principle check ``sigma + (i/2) Omega >= -tol``."""
    return bona_fide_margin(sigma, hbar) >= -tol


def partial_transpose_axial(sigma, flip=RADIAL_FLIP):
    """Phase-space partial transpose ``W sigma W`` with ``W = diag(flip)``.

    Sign flips are applied elementwise, so the operation is bit-exact and an
    involution.
    """
    return np.asarray(sigma) * np.outer(flip, flip)


def separability_epsilon(sigma, hbar=1.0, flip=RADIAL_FLIP):
    """Lowest eigenvalue of ``W sigma W + (i/2) Omega``.

    Non-negative iff the radial/axial split is separable; negative values
    witness entanglement.
    """
    return bona_fide_margin(partial_transpose_axial(sigma, flip), hbar)


def symplectic_eigenvalues(sigma):
    """Williamson spectrum of ``sigma`` (ascending, one value per mode).

    Moduli of the eigenvalues of ``i Omega sigma`` with the unit symplectic
    form; a pure state has every value equal to ``hbar / 2``.
    """
    sigma = np.asarray(sigma)
    n = sigma.shape[-1] // 2
    w = np.abs(np.linalg.eigvals(1j * symplectic_form(n) @ sigma))
    return np.sort(w, axis=-1)[..., ::2]
