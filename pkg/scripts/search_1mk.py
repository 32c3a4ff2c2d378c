"""Search for entangling trajectories at 1 mK and replay them at higher temperatures.

    python3 scripts/search_1mk.py [--n 10000000] [--seed 20240601] [--workers 1]

Writes a log-scale heatmap, the histogram CSV and the entangling draws (JSON,
readable by ``penning-ent replay``).
"""

import argparse
import time
from pathlib import Path

from penning_ent.io import render_heatmap_svg, write_draws_json, write_histogram_csv
from penning_ent.mc import SamplerConfig, cross_temperature_replay, run_ensemble
from penning_ent.trap import TrapParameters, temperature_to_dimensionless


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=10_000_000)
    ap.add_argument("--seed", type=int, default=20240601)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default="out/search_1mk")
    args = ap.parse_args()

    out = Path(args.out)
    trap = TrapParameters()
    theta = temperature_to_dimensionless(1e-3)
    cfg = SamplerConfig(seed=args.seed, n_trajectories=args.n, eps_range=(-0.05, 0.5))
    start = time.perf_counter()
    res = run_ensemble(cfg, trap, theta, workers=args.workers)
    h = res.histogram
    print(f"theta={theta:.4f}: {h.n_accepted} accepted of {h.n_trajectories}, "
          f"{h.n_entanglement_events} entanglement events, min eps {res.epsilon_min:.3e} "
          f"({time.perf_counter() - start:.0f} s)")
    print("rejections:", h.n_rejected)

    write_histogram_csv(h, out / "hist_1mK.csv")
    render_heatmap_svg(h, out / "heatmap_1mK_log.svg", scale="log", title="T = 1 mK, log count")
    ent = [s for s in res.summaries if s.entangled]
    write_draws_json([s.env for s in ent], out / "entangling_draws.json", seed=args.seed,
                     source_theta=theta, indices=[s.index for s in ent])

    for kelvin in (1e-2, 1e-1, 1.0):
        counts = cross_temperature_replay([s.env for s in ent], trap,
                                          temperature_to_dimensionless(kelvin), cfg.grid)
        print(f"replay at {kelvin:g} K: {counts['accepted']}/{counts['n_draws']} accepted, "
              f"{counts['entanglement_events']} events")


if __name__ == "__main__":
    main()
