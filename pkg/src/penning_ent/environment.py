"""Phenomenological Lindblad environment: drift, diffusion and physicality checks.

Only the symmetry-reduced independent constants are stored. Radial x/y
symmetry is imposed structurally::

    lambda_22 = lambda_11, lambda_21 = lambda_12, lambda_23 = lambda_13,
    lambda_32 = lambda_31, alpha_23 = alpha_13, beta_23 = beta_13

Every field of :class:`EnvironmentConstants` may be a scalar or an array with
a common batch shape; all builders broadcast over it and return stacks of
``(6, 6)`` matrices.
"""

from dataclasses import dataclass, fields
from enum import IntEnum

import numpy as np

from .linalg import (
    NoUniqueSolutionError,
    _solve_lyapunov_masked,
    eigenvalue_real_parts,
    is_psd,
)

__all__ = [
    "XI_CLASSES",
    "COUPLING_NAMES",
    "InfeasibleDrawError",
    "Verdict",
    "EnvironmentConstants",
    "coupling_matrices",
    "build_lambda",
    "build_diffusion",
    "diffusion_radicands",
    "dissipator_matrix",
    "cauchy_schwarz_ok",
    "validate_draw",
    "validate_draws",
    "stationary_covariance",
]

# One xi per independent off-diagonal diffusion class; "x_py" stands for
# D_{x p_y} = D_{y p_x}, "x_z" for D_{xz} = D_{yz}, and so on.
XI_CLASSES = ("x_y", "x_z", "px_py", "px_pz", "x_px", "x_py", "x_pz", "z_px", "z_pz")
COUPLING_NAMES = (
    "lambda_12", "lambda_13", "lambda_31", "alpha_12", "alpha_13", "beta_12", "beta_13",
)

STABILITY_TOL = 1e-12
CAUCHY_SCHWARZ_TOL = 1e-12
DISSIPATOR_TOL = 1e-12
RADICAND_TOL = 1e-12

_X = (0, 2, 4)
_P = (1, 3, 5)


class InfeasibleDrawError(ValueError):
    """An off-diagonal diffusion square root has a negative radicand."""


class Verdict(IntEnum):
    ACCEPTED = 0
    REJECT_DISSIPATOR = 1
    REJECT_CAUCHY_SCHWARZ = 2
    REJECT_UNSTABLE = 3
    REJECT_BONA_FIDE = 4
    REJECT_INFEASIBLE_XI = 5


@dataclass(frozen=True, eq=False)
class EnvironmentConstants:
    """Independent damping, coupling and diffusion-correlation constants."""

    lambda_11: float = 0.0
    lambda_33: float = 0.0
    lambda_12: float = 0.0
    lambda_13: float = 0.0
    lambda_31: float = 0.0
    alpha_12: float = 0.0
    alpha_13: float = 0.0
    beta_12: float = 0.0
    beta_13: float = 0.0
    xi: np.ndarray = None

    def __post_init__(self):
        for f in fields(self):
            if f.name == "xi":
                continue
            v = np.asarray(getattr(self, f.name), dtype=float)
            if not np.all(np.isfinite(v)):
                raise ValueError(f"{f.name} must be finite")
            object.__setattr__(self, f.name, v)
        xi = np.zeros(len(XI_CLASSES)) if self.xi is None else np.asarray(self.xi, dtype=float)
        if xi.shape[-1:] != (len(XI_CLASSES),):
            raise ValueError(f"xi must have trailing length {len(XI_CLASSES)}, got {xi.shape}")
        if not np.all(np.abs(xi) <= 1.0):
            raise ValueError("xi values must lie in [-1, 1]")
        object.__setattr__(self, "xi", xi)
        if np.any(self.lambda_11 < 0) or np.any(self.lambda_33 < 0):
            raise ValueError("damping rates must be non-negative")
        np.broadcast_shapes(self.shape, xi.shape[:-1])

    @property
    def shape(self):
        return np.broadcast_shapes(
            *(getattr(self, f.name).shape for f in fields(self) if f.name != "xi"),
            self.xi.shape[:-1],
        )

    def __len__(self):
        if not self.shape:
            raise TypeError("unbatched EnvironmentConstants has no length")
        return self.shape[0]

    def __getitem__(self, idx):
        shape = self.shape
        kw = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "xi":
                kw[f.name] = np.broadcast_to(v, shape + v.shape[-1:])[idx]
            else:
                kw[f.name] = np.broadcast_to(v, shape)[idx]
        return EnvironmentConstants(**kw)

    @classmethod
    def stack(cls, envs):
        """Concatenate unbatched constants into one batch."""
        envs = list(envs)
        kw = {f.name: np.stack([getattr(e, f.name) for e in envs]) for f in fields(cls)}
        if not envs:
            kw = {f.name: np.zeros((0, 9) if f.name == "xi" else 0) for f in fields(cls)}
        return cls(**kw)

    def to_dict(self):
        """Flat ``{name: float}`` mapping (one key per xi class)."""
        if self.shape:
            raise TypeError("to_dict needs unbatched constants")
        d = {f.name: float(getattr(self, f.name)) for f in fields(self) if f.name != "xi"}
        d.update({f"xi_{c}": float(v) for c, v in zip(XI_CLASSES, self.xi)})
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        xi = [d.pop(f"xi_{c}", 0.0) for c in XI_CLASSES]
        known = {f.name for f in fields(cls)} - {"xi"}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown environment constants: {sorted(unknown)}")
        return cls(xi=xi, **d)

    def replace(self, **changes):
        kw = {f.name: getattr(self, f.name) for f in fields(self)}
        kw.update(changes)
        return EnvironmentConstants(**kw)


def coupling_matrices(env):
    """Full ``(lam, alpha, beta)`` 3x3 matrices with the symmetry identities.

    ``lam[k, l] = lambda_{k+1, l+1}``; ``alpha`` and ``beta`` are antisymmetric.
    """
    shape = env.shape
    z = np.zeros(shape)

    def b(v):
        return np.broadcast_to(v, shape)

    l11, l33 = b(env.lambda_11), b(env.lambda_33)
    l12, l13, l31 = b(env.lambda_12), b(env.lambda_13), b(env.lambda_31)
    a12, a13 = b(env.alpha_12), b(env.alpha_13)
    b12, b13 = b(env.beta_12), b(env.beta_13)

    def mat(rows):
        return np.stack([np.stack(r, axis=-1) for r in rows], axis=-2)

    lam = mat([[l11, l12, l13], [l12, l11, l13], [l31, l31, l33]])
    alpha = mat([[z, a12, a13], [-a12, z, a13], [-a13, -a13, z]])
    beta = mat([[z, b12, b13], [-b12, z, b13], [-b13, -b13, z]])
    return lam, alpha, beta


def build_lambda(trap, env):
    """Drift matrix of the first moments, ``d<R>/dt = Lambda <R>``.

    Hamiltonian part: ``1/m`` kinetic terms, ``-m w**2`` restoring forces and
    the ``+-omega_c/2`` Lorentz coupling between x and y. Dissipative part:
    ``-lambda_kl`` on x_k<-x_l and p_k<-p_l (note the transpose on the
    momentum rows), ``-alpha_kl`` on x_k<-p_l and ``beta_kl`` on p_k<-x_l.
    """
    lam, alpha, beta = coupling_matrices(env)
    out = np.zeros(env.shape + (6, 6))
    x, p = np.array(_X), np.array(_P)
    out[..., x[:, None], x[None, :]] = -lam
    out[..., p[:, None], p[None, :]] = -np.swapaxes(lam, -1, -2)
    out[..., x[:, None], p[None, :]] = -alpha
    out[..., p[:, None], x[None, :]] = beta

    m, wc = trap.mass, trap.omega_c
    for k in range(3):
        out[..., _X[k], _P[k]] += 1.0 / m
    out[..., 1, 0] += -m * trap.omega_perp**2
    out[..., 3, 2] += -m * trap.omega_perp**2
    out[..., 5, 4] += -m * trap.omega_z**2
    out[..., 0, 2] += -wc / 2
    out[..., 1, 3] += -wc / 2
    out[..., 2, 0] += wc / 2
    out[..., 3, 1] += wc / 2
    return out


def _thermal_diagonal(trap, env, theta):
    hbar, m = trap.hbar, trap.mass
    wr, wz = trap.omega_perp, trap.omega_z
    coth_r = 1.0 / np.tanh(wr / (2 * theta * trap.omega_z))
    coth_z = 1.0 / np.tanh(wz / (2 * theta * trap.omega_z))
    dxx = hbar * env.lambda_11 / (2 * m * wr) * coth_r
    dzz = hbar * env.lambda_33 / (2 * m * wz) * coth_z
    dpp = hbar * env.lambda_11 * m * wr / 2 * coth_r
    dpzpz = hbar * env.lambda_33 * m * wz / 2 * coth_z
    return dxx, dzz, dpp, dpzpz


def diffusion_radicands(trap, env, theta):
    """The nine square-root arguments of the off-diagonal diffusion entries.

    Ordered like :data:`XI_CLASSES`, stacked on the last axis.
    """
    shape = env.shape
    dxx, dzz, dpp, dpzpz = (np.broadcast_to(v, shape) for v in _thermal_diagonal(trap, env, theta))
    h2 = trap.hbar**2 / 4
    return np.stack([
        dxx * dxx - h2 * env.alpha_12**2,
        dxx * dzz - h2 * env.alpha_13**2,
        dpp * dpp - h2 * env.beta_12**2,
        dpp * dpzpz - h2 * env.beta_13**2,
        dxx * dpp - h2 * env.lambda_11**2,
        dxx * dpp - h2 * env.lambda_12**2,
        dxx * dpzpz - h2 * env.lambda_13**2,
        dzz * dpp - h2 * env.lambda_31**2,
        dzz * dpzpz - h2 * env.lambda_33**2,
    ], axis=-1)


def _radicand_scale(trap, env, theta):
    shape = env.shape
    dxx, dzz, dpp, dpzpz = (np.abs(np.broadcast_to(v, shape)) for v in _thermal_diagonal(trap, env, theta))
    return np.stack([dxx * dxx, dxx * dzz, dpp * dpp, dpp * dpzpz, dxx * dpp, dxx * dpp,
                     dxx * dpzpz, dzz * dpp, dzz * dpzpz], axis=-1)


def _diffusion_masked(trap, env, theta):
    if not np.all(np.asarray(theta) > 0):
        raise ValueError(f"theta must be positive, got {theta}")
    shape = env.shape
    dxx, dzz, dpp, dpzpz = (np.broadcast_to(v, shape) for v in _thermal_diagonal(trap, env, theta))
    rad = diffusion_radicands(trap, env, theta)
    # radicands that vanish exactly (e.g. D_xx D_pp = hbar^2 lambda_11^2 / 4 at theta -> 0)
    # may come out as tiny negatives
    feasible = np.all(rad >= -RADICAND_TOL * _radicand_scale(trap, env, theta), axis=-1)
    off = env.xi * np.sqrt(np.maximum(rad, 0.0))
    xy, xz, pxpy, pxpz, xpx, xpy, xpz, zpx, zpz = np.moveaxis(off, -1, 0)

    def row(*v):
        return np.stack(np.broadcast_arrays(*v), axis=-1)

    # (x, p_x, y, p_y, z, p_z)
    d = np.stack([
        row(dxx, xpx, xy, xpy, xz, xpz),
        row(xpx, dpp, xpy, pxpy, zpx, pxpz),
        row(xy, xpy, dxx, xpx, xz, xpz),
        row(xpy, pxpy, xpx, dpp, zpx, pxpz),
        row(xz, zpx, xz, zpx, dzz, zpz),
        row(xpz, pxpz, xpz, pxpz, zpz, dpzpz),
    ], axis=-2)
    return d, feasible


def build_diffusion(trap, env, theta):
    """Diffusion matrix ``D`` at dimensionless temperature ``theta``.

    Diagonal entries are the thermal (asymptotic-Gibbs) choice
    ``hbar lambda/(2 m w) coth(w / 2 theta)`` for positions and
    ``hbar lambda m w / 2 coth(...)`` for momenta, with ``w = omega_perp``
    radially and ``omega_z`` axially. Off-diagonal entries are
    ``xi * sqrt(D_kk D_ll - hbar**2 c**2 / 4)`` with ``c`` the matching alpha,
    beta or lambda coupling, one ``xi`` per symmetry class.

    Raises
    ------
    InfeasibleDrawError
        If any square-root argument is negative.
    """
    d, feasible = _diffusion_masked(trap, env, theta)
    if not np.all(feasible):
        raise InfeasibleDrawError("negative radicand in off-diagonal diffusion")
    return d


def dissipator_matrix(env, d, hbar=1.0):
    """Hermitian positivity matrix of the dissipator, ordered (x, y, z, p_x, p_y, p_z).

    Equals ``hbar/2`` times the Gram matrix of the Lindblad coefficient
    vectors whenever the constants come from an actual set of Lindblad
    operators, so it must be positive semidefinite.
    """
    lam, alpha, beta = coupling_matrices(env)
    d = np.asarray(d)
    x, p = np.array(_X), np.array(_P)
    dxx = d[..., x[:, None], x[None, :]]
    dpp = d[..., p[:, None], p[None, :]]
    dxp = d[..., x[:, None], p[None, :]]
    h = hbar / 2
    upper = -dxp - 1j * h * lam
    m = np.empty(np.broadcast_shapes(d.shape[:-2], env.shape) + (6, 6), dtype=complex)
    m[..., :3, :3] = dxx - 1j * h * alpha
    m[..., 3:, 3:] = dpp - 1j * h * beta
    m[..., :3, 3:] = upper
    m[..., 3:, :3] = np.conj(np.swapaxes(upper, -1, -2))
    return m


def cauchy_schwarz_ok(env, d, hbar=1.0, tol=CAUCHY_SCHWARZ_TOL):
    """Pairwise 2x2-minor constraints on ``D`` against ``alpha``, ``beta``, ``lambda``.

    ``D_xkxk D_xlxl - D_xkxl**2 >= hbar**2 alpha_kl**2 / 4`` and the analogous
    momentum (beta) and mixed (lambda, including k = l) inequalities. Slack
    of ``tol`` relative to ``D_kk D_ll`` absorbs roundoff at the boundary.
    """
    lam, alpha, beta = coupling_matrices(env)
    d = np.asarray(d)
    x, p = np.array(_X), np.array(_P)
    h2 = hbar**2 / 4
    ok = True
    for rows, cols, c in ((x, x, alpha), (p, p, beta), (x, p, lam)):
        block = d[..., rows[:, None], cols[None, :]]
        drow = d[..., rows, rows][..., :, None]
        dcol = d[..., cols, cols][..., None, :]
        prod = drow * dcol
        slack = prod - block**2 - h2 * c**2
        ok = ok & np.all(slack >= -tol * np.maximum(np.abs(prod), 1e-300), axis=(-1, -2))
    return ok


def validate_draws(lam_matrix, d, env, hbar=1.0):
    """Vectorized :func:`validate_draw`; returns an int array of :class:`Verdict` codes.

    Checks run in the order Cauchy-Schwarz, dissipator positivity, stability
    and the first failing check determines the verdict.
    """
    cs = cauchy_schwarz_ok(env, d, hbar)
    psd = is_psd(dissipator_matrix(env, d, hbar), DISSIPATOR_TOL)
    shape = np.broadcast_shapes(np.shape(cs), np.shape(psd))
    out = np.full(shape, Verdict.ACCEPTED, dtype=np.int8)
    out[~np.broadcast_to(psd, shape)] = Verdict.REJECT_DISSIPATOR
    out[~np.broadcast_to(cs, shape)] = Verdict.REJECT_CAUCHY_SCHWARZ
    todo = out == Verdict.ACCEPTED
    if np.any(todo):
        lam_b = np.broadcast_to(lam_matrix, shape + (6, 6))
        re = eigenvalue_real_parts(lam_b[todo])
        unstable = re[..., -1] > STABILITY_TOL
        sub = out[todo]
        sub[unstable] = Verdict.REJECT_UNSTABLE
        out[todo] = sub
    return out


def validate_draw(lam_matrix, d, env, hbar=1.0):
    """Physicality verdict for one draw (see :func:`validate_draws`)."""
    return Verdict(int(validate_draws(lam_matrix, d, env, hbar)))


def _stationary_masked(lam_matrix, d):
    re = eigenvalue_real_parts(lam_matrix)
    strict = re[..., -1] < 0
    gamma, ok = _solve_lyapunov_masked(lam_matrix, d)
    ok = ok & strict
    return np.where(ok[..., None, None], gamma, np.nan), ok


def stationary_covariance(lam_matrix, d):
    """Asymptotic covariance ``Gamma`` with ``Lambda Gamma + Gamma Lambda^T = -2 D``.

    Requires strictly stable ``Lambda``; the neutrally stable Hamiltonian
    limit has no stationary state and raises NoUniqueSolutionError.
    """
    gamma, ok = _stationary_masked(lam_matrix, d)
    if not np.all(ok):
        raise NoUniqueSolutionError("drift matrix is not strictly stable or Lyapunov system singular")
    return gamma
