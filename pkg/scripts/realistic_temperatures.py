"""Ensembles at 10 mK, 0.1 K and 1 K with linear-scale heatmaps.

    python3 scripts/realistic_temperatures.py [--n 1000] [--seed 1] [--out out/realistic]

With the default 1000 draws only about 1.3% survive the physicality checks;
pass e.g. ``--n 80000`` for roughly a thousand accepted trajectories per panel.
"""

import argparse
from pathlib import Path

from penning_ent.io import render_heatmap_svg, write_histogram_csv
from penning_ent.mc import SamplerConfig, run_ensemble
from penning_ent.trap import TrapParameters, temperature_to_dimensionless

TEMPERATURES = {"10mK": 1e-2, "100mK": 1e-1, "1K": 1.0}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default="out/realistic")
    args = ap.parse_args()

    out = Path(args.out)
    trap = TrapParameters()
    cfg = SamplerConfig(seed=args.seed, n_trajectories=args.n)
    for tag, kelvin in TEMPERATURES.items():
        theta = temperature_to_dimensionless(kelvin)
        res = run_ensemble(cfg, trap, theta, workers=args.workers)
        h = res.histogram
        write_histogram_csv(h, out / f"hist_{tag}.csv")
        render_heatmap_svg(h, out / f"heatmap_{tag}.svg", title=f"T = {tag} (theta = {theta:.4g})")
        print(f"{tag:>6}: theta={theta:9.3f}  accepted {h.n_accepted:6d}/{h.n_trajectories}  "
              f"events {h.n_entanglement_events}  min eps {res.epsilon_min:.3e}")


if __name__ == "__main__":
    main()
