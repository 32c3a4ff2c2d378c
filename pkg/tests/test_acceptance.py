"""End-to-end acceptance checks at their stated tolerances.

Each test records one PASS/FAIL line that is printed in the pytest terminal
summary. The 1 mK search runs 10**7 draws and takes a minute or two.
"""

from dataclasses import replace

import numpy as np
import pytest

from penning_ent.environment import (
    EnvironmentConstants,
    build_diffusion,
    build_lambda,
    cauchy_schwarz_ok,
    dissipator_matrix,
    stationary_covariance,
)
from penning_ent.gaussian import (
    EVENT_THRESHOLD,
    evolve_covariance,
    separability_epsilon,
    symplectic_eigenvalues,
    symplectic_form,
)
from penning_ent.io import heatmap_svg, histogram_csv_text
from penning_ent.linalg import eigenvalue_real_parts, is_psd, mat_exp
from penning_ent.mc import SamplerConfig, TimeGrid, cross_temperature_replay, run_ensemble
from penning_ent.trap import TrapParameters, initial_covariance, temperature_to_dimensionless

from .oracles import principal_minors_ok, random_hermitian_with_gap

pytestmark = pytest.mark.slow

TRAP = TrapParameters()
GRID = TimeGrid()
KELVIN = {"10 mK": 1e-2, "0.1 K": 1e-1, "1 K": 1.0}
THETA = {name: temperature_to_dimensionless(t) for name, t in KELVIN.items()}
THETA_1MK = temperature_to_dimensionless(1e-3)
SEED = 20240601


@pytest.fixture(scope="module")
def realistic():
    """Ensembles at 10 mK, 0.1 K and 1 K large enough for >= 1000 accepted trajectories."""
    cfg = SamplerConfig(seed=SEED, n_trajectories=85_000)
    return {name: run_ensemble(cfg, TRAP, theta) for name, theta in THETA.items()}


@pytest.fixture(scope="module")
def search_1mk():
    cfg = SamplerConfig(seed=SEED, n_trajectories=10_000_000, eps_range=(-0.05, 0.5))
    return run_ensemble(cfg, TRAP, THETA_1MK)


def test_c1_no_entanglement_at_realistic_temperatures(realistic, criterion):
    with criterion(1, "separability at 10 mK, 0.1 K, 1 K") as info:
        parts = []
        for name, res in realistic.items():
            # the first 1000 draws of the stream form the nominal 1000-trajectory ensemble
            first = [s for s in res.summaries if s.index < 1000]
            assert sum(s.entangled for s in first) == 0
            assert res.histogram.n_accepted >= 1000
            assert res.histogram.n_entanglement_events == 0
            assert res.epsilon.min() >= EVENT_THRESHOLD
            parts.append(f"{name}: 0 events in {res.histogram.n_accepted} accepted, {len(first)} from the first 1000 draws")
        info["detail"] = "; ".join(parts)


def test_c2_entanglement_at_1mk(search_1mk, criterion):
    with criterion(2, "entanglement at 1 mK within 10^7 draws") as info:
        h = search_1mk.histogram
        info["detail"] = f"{h.n_entanglement_events} events among {h.n_accepted} accepted"
        assert h.n_trajectories == 10_000_000
        assert h.n_entanglement_events >= 1
        assert search_1mk.epsilon_min < EVENT_THRESHOLD


def test_c3_cross_temperature_replay(search_1mk, criterion):
    with criterion(3, "1 mK entangling draws replayed at >= 10 mK") as info:
        draws = search_1mk.entangling_draws
        assert draws
        own = cross_temperature_replay(draws, TRAP, THETA_1MK, GRID)
        assert own["entanglement_events"] == len(draws)
        parts = []
        for name, theta in THETA.items():
            out = cross_temperature_replay(draws, TRAP, theta, GRID)
            assert out["entanglement_events"] == 0
            parts.append(f"{name}: {out['accepted']}/{len(draws)} accepted, 0 events")
        info["detail"] = "; ".join(parts)


def test_c4_linear_temperature_scaling(realistic, criterion):
    with criterion(4, "late-time epsilon ratio 1 K / 0.1 K in [8, 12]") as info:
        lo, hi = realistic["0.1 K"], realistic["1 K"]
        row_lo = {s.index: k for k, s in enumerate(lo.summaries)}
        matched = [(row_lo[s.index], k) for k, s in enumerate(hi.summaries) if s.index in row_lo]
        assert len(matched) >= 100
        late = GRID.times >= 0.8 * GRID.t_max
        med_lo = np.median(lo.epsilon[[a for a, _ in matched]][:, late])
        med_hi = np.median(hi.epsilon[[b for _, b in matched]][:, late])
        ratio = med_hi / med_lo
        info["detail"] = f"{len(matched)} matched draws, ratio {ratio:.4f}"
        assert 8 <= ratio <= 12


def test_c5_initial_condition(realistic, search_1mk, criterion):
    with criterion(5, "max |epsilon(0)| <= 1e-9") as info:
        worst = max(r.epsilon_t0_max_abs for r in (*realistic.values(), search_1mk))
        info["detail"] = f"max |epsilon(0)| = {worst:.3e}"
        assert worst <= 1e-9


def test_c6_unitary_limit(criterion):
    with criterion(6, "zero-environment limit") as info:
        env = EnvironmentConstants()
        lam = build_lambda(TRAP, env)
        assert np.array_equal(build_diffusion(TRAP, env, 1.0), np.zeros((6, 6)))
        sigma0 = initial_covariance(TRAP)
        om = symplectic_form()
        times = np.linspace(0, 50, 501)
        eps_dev = sympl_dev = 0.0
        for t in times:
            p = mat_exp(lam, t)
            sympl_dev = max(sympl_dev, np.abs(p @ om @ p.T - om).max())
            sigma = evolve_covariance(sigma0, lam, np.zeros((6, 6)), t)
            eps_dev = max(eps_dev, abs(separability_epsilon(sigma)))
        assert eps_dev <= 1e-9
        assert sympl_dev <= 1e-10

        ev = np.linalg.eigvals(lam)
        assert np.abs(ev.real).max() <= 1e-10
        freqs = np.sort(np.abs(ev.imag))
        closed = np.sort(np.repeat([TRAP.omega_minus, TRAP.omega_z, TRAP.omega_plus], 2))
        assert np.abs(freqs - closed).max() <= 1e-6
        w_minus, w_plus = freqs[0], freqs[-1]
        # quoted to four decimals
        assert abs(w_plus - 7.5924) <= 1e-4
        assert abs(w_minus - 0.0658) <= 1e-4
        info["detail"] = (f"max|eps| {eps_dev:.1e}, symplectic dev {sympl_dev:.1e}, "
                          f"omega+ {w_plus:.7f}, omega- {w_minus:.7f}")


def test_c7_lyapunov_correctness(realistic, criterion):
    with criterion(7, "Lyapunov residual and relaxation to Gamma") as info:
        res = realistic["1 K"]
        theta = res.theta
        envs = [s.env for s in res.summaries[:1000]]
        assert len(envs) == 1000
        batch = EnvironmentConstants.stack(envs)
        lam = build_lambda(TRAP, batch)
        d = build_diffusion(TRAP, batch, theta)
        sigma0 = initial_covariance(TRAP)
        worst_res = worst_relax = 0.0
        for k in range(len(envs)):
            g = stationary_covariance(lam[k], d[k])
            r = np.abs(lam[k] @ g + g @ lam[k].T + 2 * d[k]).max()
            worst_res = max(worst_res, r / max(1.0, np.abs(d[k]).max()))
            # slowest decay rate of the drift (spectral abscissa)
            lam_min = -eigenvalue_real_parts(lam[k])[-1]
            sigma = evolve_covariance(sigma0, lam[k], g, 20.0 / lam_min)
            worst_relax = max(worst_relax, np.abs(sigma - g).max() / np.abs(g).max())
        info["detail"] = f"residual {worst_res:.1e} x max(1,|D|), relaxation {worst_relax:.1e} x |Gamma|"
        assert worst_res <= 1e-10
        assert worst_relax <= 1e-4


def test_c8_validator_equivalence(criterion):
    with criterion(8, "eigenvalue PSD verdict equals principal-minor oracle") as info:
        rng = np.random.default_rng(SEED)
        herm = [random_hermitian_with_gap(rng) for _ in range(200)]
        agree_h = [bool(is_psd(m)) == principal_minors_ok(m) for m in herm]

        cfg = SamplerConfig()
        from penning_ent.mc import sample_environment, stream_uniforms

        envs = sample_environment(stream_uniforms(SEED, 0, 200), cfg)
        # half the draws with shrunken couplings so both verdicts occur
        shrink = np.where(np.arange(200) < 100, 1.0, 0.05)
        envs = envs.replace(
            xi=envs.xi * shrink[:, None],
            **{k: getattr(envs, k) * shrink for k in
               ("lambda_12", "lambda_13", "lambda_31", "alpha_12", "alpha_13", "beta_12", "beta_13")})
        d = build_diffusion(TRAP, envs, THETA["1 K"])
        m = dissipator_matrix(envs, d)
        verdict = is_psd(m)
        agree_d = [bool(verdict[k]) == principal_minors_ok(m[k]) for k in range(200)]
        n_psd = int(np.sum(verdict))
        info["detail"] = (f"Hermitian {sum(agree_h)}/200, dissipator {sum(agree_d)}/200 "
                          f"({n_psd} PSD)")
        assert all(agree_h) and all(agree_d)
        assert 0 < n_psd < 200


def _bona_fide_recheck(res):
    """Recompute sigma(t) in closed form for every accepted trajectory.

    Returns the smallest Williamson eigenvalue seen and the number of grid
    points where the recorded epsilon disagrees with the partially
    transposed Williamson test (nu < 1/2 iff entangled).
    """
    sigma0 = initial_covariance(TRAP)
    times = GRID.times
    flip = np.outer([1, -1, 1, -1, 1, 1], [1, -1, 1, -1, 1, 1])
    worst_nu, mismatches = np.inf, 0
    for s, eps in zip(res.summaries, res.epsilon):
        lam = build_lambda(TRAP, s.env)
        g = stationary_covariance(lam, build_diffusion(TRAP, s.env, res.theta))
        p = mat_exp(lam[None] * times[:, None, None])
        sigma = p @ (sigma0 - g) @ np.swapaxes(p, -1, -2) + g
        sigma = 0.5 * (sigma + np.swapaxes(sigma, -1, -2))
        assert np.all(np.linalg.eigvalsh(sigma)[:, 0] > 0)
        worst_nu = min(worst_nu, symplectic_eigenvalues(sigma)[:, 0].min())
        nu_pt = symplectic_eigenvalues(sigma * flip)[:, 0]
        mismatches += int(np.sum((eps < -1e-9) & (nu_pt >= 0.5)))
        mismatches += int(np.sum((eps > 1e-9) & (nu_pt < 0.5 - 1e-9)))
    return worst_nu, mismatches


def test_c9_physicality(realistic, search_1mk, criterion):
    with criterion(9, "bona fide along accepted trajectories; CS rejection implies dissipator failure") as info:
        worst = np.inf
        n_checked = 0
        for res in (realistic["10 mK"], search_1mk):
            nu, mismatch = _bona_fide_recheck(res)
            assert mismatch == 0
            worst = min(worst, nu)
            n_checked += len(res.summaries)
        assert worst >= 0.5 - 1e-9
        for res in (*realistic.values(), search_1mk):
            assert res.histogram.n_rejected["REJECT_BONA_FIDE"] == 0

        rng = np.random.default_rng(SEED)
        from penning_ent.mc import sample_environment, stream_uniforms

        envs = sample_environment(stream_uniforms(SEED + 1, 0, 2000))
        d = build_diffusion(TRAP, envs, THETA["10 mK"])
        noise = rng.normal(scale=0.3, size=d.shape)
        scale = np.sqrt(np.einsum("ni,nj->nij", np.einsum("nii->ni", d), np.einsum("nii->ni", d)))
        d = d + (noise + np.swapaxes(noise, -1, -2)) * scale
        cs = cauchy_schwarz_ok(envs, d)
        psd = is_psd(dissipator_matrix(envs, d))
        cs_fail = int(np.sum(~cs))
        assert cs_fail > 100
        assert not np.any(~cs & psd)
        info["detail"] = (f"{n_checked} trajectories rechecked, min nu {worst:.12f}; "
                          f"{cs_fail}/2000 perturbed draws fail CS, all fail PSD")


def test_c10_determinism(criterion):
    with criterion(10, "byte-identical outputs at 1, 2 and 3 workers") as info:
        cfg = SamplerConfig(seed=SEED, n_trajectories=30_000, chunk_size=20_000)
        a = run_ensemble(cfg, TRAP, THETA["10 mK"], workers=1)
        b = run_ensemble(replace(cfg, chunk_size=2_500), TRAP, THETA["10 mK"], workers=2)
        c = run_ensemble(replace(cfg, chunk_size=7_000), TRAP, THETA["10 mK"], workers=3)
        outs = [(histogram_csv_text(r.histogram), heatmap_svg(r.histogram, "log"),
                 r.histogram.n_accepted, r.histogram.n_rejected, r.histogram.n_entanglement_events)
                for r in (a, b, c)]
        assert outs[0] == outs[1] == outs[2]
        assert a.histogram.n_accepted > 0
        info["detail"] = f"{a.histogram.n_accepted} accepted; workers 1/2/3 with chunks 20000/2500/7000"
