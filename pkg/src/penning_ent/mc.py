"""Monte-Carlo ensembles over the unknown environment constants.

Trajectory ``i`` of a run with seed ``s`` draws its constants from a fixed
block of a Philox stream keyed by ``s``: the counter starts at
``i * UNIFORMS_PER_DRAW / 4``. Every draw is therefore a pure function of
``(seed, i)``, and an ensemble can be cut into chunks and evaluated on any
number of workers without changing a single bit of the result.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .environment import (
    COUPLING_NAMES,
    XI_CLASSES,
    EnvironmentConstants,
    Verdict,
    _diffusion_masked,
    _stationary_masked,
    build_lambda,
    validate_draws,
)
from .gaussian import (
    BONA_FIDE_TOL,
    EVENT_THRESHOLD,
    RADIAL_FLIP,
    symplectic_form,
)
from .linalg import mat_exp
from .trap import TrapParameters, initial_covariance

__all__ = [
    "UNIFORMS_PER_DRAW",
    "SamplerConfig",
    "TimeGrid",
    "Trajectory",
    "TrajectorySummary",
    "Histogram2D",
    "EnsembleResult",
    "stream_uniforms",
    "sample_environment",
    "run_trajectory",
    "run_ensemble",
    "cross_temperature_replay",
]

# 2 damping rates, 7 coupling magnitudes, 7 coupling signs, 9 xi, 3 unused;
# a multiple of 4 so each draw owns whole Philox counter blocks
UNIFORMS_PER_DRAW = 28
_BLOCKS_PER_DRAW = UNIFORMS_PER_DRAW // 4


@dataclass(frozen=True)
class TimeGrid:
    t_max: float = 50.0
    n_steps: int = 500

    def __post_init__(self):
        if not self.t_max > 0:
            raise ValueError(f"t_max must be positive, got {self.t_max}")
        if self.n_steps < 2:
            raise ValueError(f"n_steps must be >= 2, got {self.n_steps}")

    @property
    def times(self):
        return np.linspace(0.0, self.t_max, self.n_steps)

    @property
    def dt(self):
        return self.t_max / (self.n_steps - 1)


@dataclass(frozen=True)
class SamplerConfig:
    """Sampling intervals, ensemble size and histogram layout.

    ``fixed`` pins constants for every draw, keyed like
    :meth:`EnvironmentConstants.to_dict` (e.g. ``{"alpha_12": 0.0}``).
    """

    seed: int = 0
    n_trajectories: int = 1000
    damping_interval: tuple = (1e-2, 1e-1)
    coupling_interval: tuple = (1e-3, 1e-2)
    thetas: tuple = ()
    grid: TimeGrid = field(default_factory=TimeGrid)
    t_bins: int = 100
    eps_bins: int = 100
    eps_range: tuple = None
    chunk_size: int = 20000
    fixed: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("damping_interval", "coupling_interval"):
            lo, hi = getattr(self, name)
            if not (0 < lo <= hi):
                raise ValueError(f"{name} must satisfy 0 < lo <= hi, got {(lo, hi)}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.n_trajectories < 0 or self.chunk_size < 1:
            raise ValueError("n_trajectories must be >= 0 and chunk_size >= 1")
        if self.t_bins < 1 or self.eps_bins < 1:
            raise ValueError("histogram needs at least one bin per axis")
        if self.eps_range is not None and not self.eps_range[0] < self.eps_range[1]:
            raise ValueError(f"eps_range must be increasing, got {self.eps_range}")
        known = set(EnvironmentConstants().to_dict())
        if set(self.fixed) - known:
            raise ValueError(f"unknown fixed constants: {sorted(set(self.fixed) - known)}")


def stream_uniforms(seed, start, count):
    """Uniforms in [0, 1) for draws ``start .. start+count-1``, shape (count, 28)."""
    bg = np.random.Philox(key=int(seed), counter=int(start) * _BLOCKS_PER_DRAW)
    raw = bg.random_raw(int(count) * UNIFORMS_PER_DRAW)
    u = (raw >> np.uint64(11)).astype(np.float64) * 2.0**-53
    return u.reshape(count, UNIFORMS_PER_DRAW)


def sample_environment(uniforms, config=SamplerConfig()):
    """Map a (..., 28) block of uniforms to environment constants.

    Damping rates are uniform on ``damping_interval``; each cross coupling is
    a fair random sign times a magnitude uniform on ``coupling_interval``;
    each xi is uniform on [-1, 1].
    """
    u = np.asarray(uniforms, dtype=float)
    dlo, dhi = config.damping_interval
    clo, chi = config.coupling_interval
    n_c = len(COUPLING_NAMES)
    damping = dlo + (dhi - dlo) * u[..., 0:2]
    mags = clo + (chi - clo) * u[..., 2:2 + n_c]
    signs = np.where(u[..., 2 + n_c:2 + 2 * n_c] < 0.5, -1.0, 1.0)
    couplings = signs * mags
    xi = 2.0 * u[..., 2 + 2 * n_c:2 + 2 * n_c + len(XI_CLASSES)] - 1.0
    kw = {"lambda_11": damping[..., 0], "lambda_33": damping[..., 1], "xi": xi}
    kw.update({name: couplings[..., j] for j, name in enumerate(COUPLING_NAMES)})
    for name, value in config.fixed.items():
        if name.startswith("xi_"):
            kw["xi"][..., XI_CLASSES.index(name[3:])] = value
        else:
            kw[name] = np.full(np.shape(kw[name]), float(value))
    return EnvironmentConstants(**kw)


@dataclass
class _BatchResult:
    verdicts: np.ndarray
    epsilon: np.ndarray  # (n_accepted, n_steps)
    accepted: np.ndarray  # positions within the batch


def _evaluate(trap, env, theta, grid):
    """Push a batch of draws through the full discard/propagate pipeline."""
    n = env.shape[0]
    verdicts = np.full(n, Verdict.ACCEPTED, dtype=np.int8)
    d, feasible = _diffusion_masked(trap, env, theta)
    verdicts[~feasible] = Verdict.REJECT_INFEASIBLE_XI
    idx = np.flatnonzero(feasible)
    empty = _BatchResult(verdicts, np.zeros((0, grid.n_steps)), np.zeros(0, dtype=int))
    if idx.size == 0:
        return empty
    sub_env = env[idx]
    lam = build_lambda(trap, sub_env)
    verdicts[idx] = validate_draws(lam, d[idx], sub_env, trap.hbar)

    keep = verdicts[idx] == Verdict.ACCEPTED
    idx, lam, dd = idx[keep], lam[keep], d[idx][keep]
    if idx.size == 0:
        return empty
    gamma, ok = _stationary_masked(lam, dd)
    verdicts[idx[~ok]] = Verdict.REJECT_UNSTABLE
    idx, lam, gamma = idx[ok], lam[ok], gamma[ok]
    if idx.size == 0:
        return empty

    eps, physical = _propagate(trap, lam, gamma, grid)
    verdicts[idx[~physical]] = Verdict.REJECT_BONA_FIDE
    return _BatchResult(verdicts, eps[physical], idx[physical])


def _propagate(trap, lam, gamma, grid):
    """epsilon(t) on the grid, plus a per-trajectory bona fide flag.

    One propagator ``P = exp(Lambda dt)`` per trajectory; the deviation from
    the stationary state advances by ``Delta -> P Delta P^T``.
    """
    sigma0 = initial_covariance(trap)
    half_omega = 0.5j * symplectic_form(3, trap.hbar)
    flip = np.outer(RADIAL_FLIP, RADIAL_FLIP)
    p = mat_exp(lam, grid.dt)
    pt = np.swapaxes(p, -1, -2)
    delta = sigma0 - gamma
    b = lam.shape[0]
    eps = np.empty((b, grid.n_steps))
    margin = np.empty((b, grid.n_steps))
    stacked = np.empty((2, b, 6, 6), dtype=complex)
    for k in range(grid.n_steps):
        sigma = np.broadcast_to(sigma0, delta.shape) if k == 0 else delta + gamma
        stacked[0] = sigma + half_omega
        stacked[1] = sigma * flip + half_omega
        w = np.linalg.eigvalsh(stacked)[..., 0]
        margin[:, k], eps[:, k] = w[0], w[1]
        delta = p @ delta @ pt
        delta = 0.5 * (delta + np.swapaxes(delta, -1, -2))
    physical = np.all(margin >= -BONA_FIDE_TOL, axis=1)
    return eps, physical


@dataclass
class Trajectory:
    times: np.ndarray
    epsilon: np.ndarray  # None unless accepted
    verdict: Verdict
    env: EnvironmentConstants
    index: int = -1

    @property
    def entangled(self):
        return self.epsilon is not None and bool(np.any(self.epsilon < EVENT_THRESHOLD))


def run_trajectory(trap, env, theta, grid=TimeGrid(), index=-1):
    """Evaluate one draw: diffusion, drift, checks, Gamma, then epsilon(t)."""
    res = _evaluate(trap, EnvironmentConstants.stack([env]), theta, grid)
    verdict = Verdict(int(res.verdicts[0]))
    eps = res.epsilon[0] if verdict == Verdict.ACCEPTED else None
    return Trajectory(grid.times, eps, verdict, env, index)


@dataclass
class TrajectorySummary:
    """Compact record of one accepted trajectory."""

    index: int
    epsilon_min: float
    epsilon_t0: float
    entangled: bool
    env: EnvironmentConstants


@dataclass
class Histogram2D:
    """(t, epsilon) bin counts over accepted trajectories plus run counters."""

    t_edges: np.ndarray
    eps_edges: np.ndarray
    counts: np.ndarray
    n_accepted: int = 0
    n_rejected: dict = field(default_factory=dict)
    n_entanglement_events: int = 0

    @classmethod
    def empty(cls, t_edges, eps_edges):
        counts = np.zeros((len(t_edges) - 1, len(eps_edges) - 1), dtype=np.int64)
        rej = {v.name: 0 for v in Verdict if v != Verdict.ACCEPTED}
        return cls(np.asarray(t_edges, float), np.asarray(eps_edges, float), counts, 0, rej, 0)

    def add_traces(self, times, epsilon):
        """Bin every (t_k, epsilon_k) point; out-of-range epsilon is clamped to the end bins."""
        epsilon = np.atleast_2d(epsilon)
        if epsilon.size == 0:
            return self
        nt, ne = self.counts.shape
        ti = np.clip(np.searchsorted(self.t_edges, times, side="right") - 1, 0, nt - 1)
        ei = np.clip(np.searchsorted(self.eps_edges, epsilon, side="right") - 1, 0, ne - 1)
        flat = np.broadcast_to(ti, epsilon.shape) * ne + ei
        self.counts += np.bincount(flat.ravel(), minlength=nt * ne).reshape(nt, ne)
        return self

    def merge(self, other):
        if not (np.array_equal(self.t_edges, other.t_edges)
                and np.array_equal(self.eps_edges, other.eps_edges)):
            raise ValueError("cannot merge histograms with different bin edges")
        rej = {k: self.n_rejected.get(k, 0) + other.n_rejected.get(k, 0)
               for k in self.n_rejected.keys() | other.n_rejected.keys()}
        return Histogram2D(
            self.t_edges, self.eps_edges, self.counts + other.counts,
            self.n_accepted + other.n_accepted, rej,
            self.n_entanglement_events + other.n_entanglement_events,
        )

    @property
    def n_trajectories(self):
        return self.n_accepted + sum(self.n_rejected.values())


@dataclass
class EnsembleResult:
    theta: float
    histogram: Histogram2D
    summaries: list
    times: np.ndarray
    epsilon: np.ndarray  # (n_accepted, n_steps), rows follow ``summaries``

    @property
    def entangling_draws(self):
        return [s.env for s in self.summaries if s.entangled]

    @property
    def epsilon_min(self):
        return float(self.epsilon.min()) if self.epsilon.size else float("nan")

    @property
    def epsilon_t0_max_abs(self):
        return float(np.abs(self.epsilon[:, 0]).max()) if self.epsilon.size else 0.0


def _run_chunk(args):
    config, trap, theta, start, stop = args
    env = sample_environment(stream_uniforms(config.seed, start, stop - start), config)
    res = _evaluate(trap, env, theta, config.grid)
    codes = np.bincount(res.verdicts, minlength=len(Verdict))
    envs = [env[int(j)] for j in res.accepted]
    return codes, res.accepted + start, res.epsilon, envs


def _auto_eps_edges(eps, bins):
    if eps.size == 0:
        lo, hi = -1.0, 1.0
    else:
        lo, hi = float(eps.min()), float(eps.max())
    span = hi - lo
    margin = 0.05 * span if span > 0 else max(1e-12, 0.05 * abs(hi))
    return np.linspace(lo - margin, hi + margin, bins + 1)


def run_ensemble(config, trap=TrapParameters(), theta=None, workers=1):
    """Run ``config.n_trajectories`` independent draws at temperature ``theta``.

    Draws are cut into chunks of ``config.chunk_size`` that may run in a
    process pool; chunks are merged in index order, so the result does not
    depend on ``workers``. Rejected draws are only counted; accepted ones are
    binned and summarized.
    """
    if theta is None:
        if len(config.thetas) != 1:
            raise ValueError("pass theta explicitly unless config.thetas has one entry")
        theta = config.thetas[0]
    n = config.n_trajectories
    tasks = [(config, trap, theta, s, min(s + config.chunk_size, n))
             for s in range(0, n, config.chunk_size)]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_chunk, tasks))
    else:
        parts = [_run_chunk(t) for t in tasks]

    codes = np.zeros(len(Verdict), dtype=np.int64)
    eps_parts, summaries = [], []
    for c, indices, eps, envs in parts:
        codes += c
        eps_parts.append(eps)
        for i, e, env in zip(indices, eps, envs):
            summaries.append(TrajectorySummary(
                int(i), float(e.min()), float(e[0]), bool(np.any(e < EVENT_THRESHOLD)), env))
    grid = config.grid
    eps_all = np.concatenate(eps_parts) if eps_parts else np.zeros((0, grid.n_steps))

    t_edges = np.linspace(0.0, grid.t_max, config.t_bins + 1)
    eps_edges = (np.linspace(*config.eps_range, config.eps_bins + 1)
                 if config.eps_range is not None else _auto_eps_edges(eps_all, config.eps_bins))
    hist = Histogram2D.empty(t_edges, eps_edges).add_traces(grid.times, eps_all)
    hist.n_accepted = int(codes[Verdict.ACCEPTED])
    hist.n_rejected = {v.name: int(codes[v]) for v in Verdict if v != Verdict.ACCEPTED}
    hist.n_entanglement_events = sum(s.entangled for s in summaries)
    return EnsembleResult(float(theta), hist, summaries, grid.times, eps_all)


def cross_temperature_replay(draws, trap, theta, grid=TimeGrid()):
    """Re-run stored draws at another temperature and count what happens.

    Returns a dict with ``n_draws``, ``accepted``, one count per rejection
    reason and ``entanglement_events``.
    """
    draws = list(draws)
    out = {"n_draws": len(draws), "accepted": 0, "entanglement_events": 0}
    out.update({v.name: 0 for v in Verdict if v != Verdict.ACCEPTED})
    if not draws:
        return out
    res = _evaluate(trap, EnvironmentConstants.stack(draws), theta, grid)
    for v in res.verdicts:
        v = Verdict(int(v))
        if v == Verdict.ACCEPTED:
            out["accepted"] += 1
        else:
            out[v.name] += 1
    out["entanglement_events"] = int(np.sum(np.any(res.epsilon < EVENT_THRESHOLD, axis=1)))
    return out
