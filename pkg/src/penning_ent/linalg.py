"""Small dense matrix kernels.

Every function accepts a single ``(n, n)`` matrix or a stack ``(..., n, n)``
and works elementwise over the leading axes, so the Monte-Carlo layer can push
whole batches of trajectories through one call.
"""

import numpy as np

__all__ = [
    "InvalidInputError",
    "NoUniqueSolutionError",
    "mat_exp",
    "solve_lyapunov",
    "lyapunov_operator",
    "min_eigenvalue_hermitian",
    "is_psd",
    "eigenvalue_real_parts",
]

# Pade [13/13] numerator coefficients (Higham 2005) and the matching 1-norm
# bound below which no scaling is needed for double precision.
_PADE13 = (
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
)
_THETA13 = 5.371920351148152

LYAPUNOV_COND_LIMIT = 1e12


class InvalidInputError(ValueError):
    """Raised for NaN/Inf entries or arguments outside an operation's domain."""


class NoUniqueSolutionError(np.linalg.LinAlgError):
    """The vectorized Lyapunov system is singular or too ill-conditioned."""


def _check_finite(a, name="matrix"):
    a = np.asarray(a)
    if not np.all(np.isfinite(a)):
        raise InvalidInputError(f"{name} has non-finite entries")
    return a


def _pade13(a):
    b = _PADE13
    eye = np.broadcast_to(np.eye(a.shape[-1]), a.shape)
    a2 = a @ a
    a4 = a2 @ a2
    a6 = a4 @ a2
    u = a @ (a6 @ (b[13] * a6 + b[11] * a4 + b[9] * a2)
             + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * eye)
    v = (a6 @ (b[12] * a6 + b[10] * a4 + b[8] * a2)
         + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * eye)
    return np.linalg.solve(v - u, v + u)


def mat_exp(a, t=1.0):
    """Matrix exponential ``exp(a * t)`` by scaling and squaring.

    A fixed [13/13] Pade approximant is evaluated on ``a * t / 2**s`` and the
    result squared ``s`` times, with ``s`` chosen per matrix from its 1-norm.

    Parameters
    ----------
    a : array_like, shape (..., n, n)
        Real or complex square matrices.
    t : float
        Non-negative time.

    Returns
    -------
    ndarray, shape (..., n, n)
    """
    a = _check_finite(a)
    if not np.isfinite(t) or t < 0:
        raise InvalidInputError(f"time must be finite and non-negative, got {t}")
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise InvalidInputError(f"expected square matrices, got shape {a.shape}")
    at = a * t
    if at.size == 0:
        return at.copy()
    norm1 = np.abs(at).sum(axis=-2).max(axis=-1)
    with np.errstate(divide="ignore"):
        s = np.ceil(np.log2(norm1 / _THETA13))
    s = np.where(np.isfinite(s) & (s > 0), s, 0).astype(int)
    r = _pade13(at / np.ldexp(1.0, s)[..., None, None])
    for k in range(int(s.max())):
        mask = s > k
        if r.ndim == 2:
            r = r @ r
        else:
            r[mask] = r[mask] @ r[mask]
    if not np.all(np.isfinite(r)):
        raise InvalidInputError("matrix exponential overflowed")
    return r


def lyapunov_operator(lam):
    """Kronecker-sum matrix ``K`` with ``K @ vec(G) == vec(lam @ G + G @ lam.T)``.

    ``vec`` is row-major flattening, so ``K = lam (x) I + I (x) lam``.
    """
    lam = np.asarray(lam, dtype=float)
    n = lam.shape[-1]
    eye = np.eye(n)
    k = (np.einsum("...ik,jl->...ijkl", lam, eye)
         + np.einsum("ik,...jl->...ijkl", eye, lam))
    return k.reshape(*lam.shape[:-2], n * n, n * n)


def _solve_lyapunov_masked(lam, d):
    """Batch solver: returns ``(gamma, ok)`` instead of raising.

    ``ok`` is False where the Kronecker system is numerically singular; the
    corresponding ``gamma`` entries are NaN.
    """
    lam = _check_finite(lam, "drift matrix").astype(float)
    d = _check_finite(d, "diffusion matrix").astype(float)
    n = lam.shape[-1]
    k = lyapunov_operator(lam)
    sv = np.linalg.svd(k, compute_uv=False)
    with np.errstate(divide="ignore"):
        cond = sv[..., 0] / sv[..., -1]
    ok = np.isfinite(cond) & (cond < LYAPUNOV_COND_LIMIT)
    rhs = -2.0 * d.reshape(*d.shape[:-2], n * n)
    # singular members are swapped for the identity so one bad matrix does not
    # poison the batched LU call
    k = np.where(ok[..., None, None], k, np.eye(n * n))
    g = np.linalg.solve(k, rhs[..., None])[..., 0].reshape(d.shape)
    g = 0.5 * (g + np.swapaxes(g, -1, -2))
    # one step of iterative refinement on the matrix-form residual
    lam_t = np.swapaxes(lam, -1, -2)
    r = -2.0 * d - (lam @ g + g @ lam_t)
    corr = np.linalg.solve(k, r.reshape(*r.shape[:-2], n * n)[..., None])[..., 0].reshape(d.shape)
    g = g + 0.5 * (corr + np.swapaxes(corr, -1, -2))
    g = np.where(ok[..., None, None], g, np.nan)
    return g, ok


def solve_lyapunov(lam, d):
    """Solve ``lam @ G + G @ lam.T = -2 d`` for symmetric ``G``.

    The equation is vectorized into an ``n**2`` linear system (Kronecker-sum
    structure) solved by LU with partial pivoting, followed by one step of
    iterative refinement. The result is symmetrized exactly.

    Raises
    ------
    NoUniqueSolutionError
        If the 2-norm condition number of the vectorized system exceeds
        ``LYAPUNOV_COND_LIMIT`` (eigenvalue pairs of ``lam`` summing to ~0).
    """
    g, ok = _solve_lyapunov_masked(lam, d)
    if not np.all(ok):
        raise NoUniqueSolutionError(
            "Lyapunov equation has no unique solution "
            f"({int(np.size(ok) - np.count_nonzero(ok))} singular system(s))"
        )
    return g


def min_eigenvalue_hermitian(m):
    """Smallest eigenvalue of Hermitian ``m`` (only the lower triangle is read)."""
    m = _check_finite(m)
    return np.linalg.eigvalsh(m)[..., 0]


def is_psd(m, tol=1e-12):
    """True where ``m`` is positive semidefinite up to ``tol * max(1, ||m||_2)``."""
    m = _check_finite(m)
    w = np.linalg.eigvalsh(m)
    scale = np.maximum(1.0, np.abs(w).max(axis=-1))
    return w[..., 0] >= -tol * scale


def eigenvalue_real_parts(a):
    """Real parts of the eigenvalues of ``a``, sorted ascending along the last axis."""
    a = _check_finite(a)
    return np.sort(np.linalg.eigvals(a).real, axis=-1)
