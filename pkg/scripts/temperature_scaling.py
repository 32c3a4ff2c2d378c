"""Late-time epsilon of matched draws at two temperatures a decade apart.

    python3 scripts/temperature_scaling.py [--n 20000] [--low 0.1] [--high 1.0]

In the high-temperature regime the stationary covariance grows linearly with
theta, so the median ratio should sit close to 10.
"""

import argparse

import numpy as np

from penning_ent.mc import SamplerConfig, run_ensemble
from penning_ent.trap import TrapParameters, temperature_to_dimensionless


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=20_000)
    ap.add_argument("--seed", type=int, default=3)
    ap.add_argument("--low", type=float, default=0.1, help="Kelvin")
    ap.add_argument("--high", type=float, default=1.0, help="Kelvin")
    args = ap.parse_args()

    trap = TrapParameters()
    cfg = SamplerConfig(seed=args.seed, n_trajectories=args.n)
    lo = run_ensemble(cfg, trap, temperature_to_dimensionless(args.low))
    hi = run_ensemble(cfg, trap, temperature_to_dimensionless(args.high))

    rows = {s.index: k for k, s in enumerate(lo.summaries)}
    pairs = [(rows[s.index], k) for k, s in enumerate(hi.summaries) if s.index in rows]
    late = lo.times >= 0.8 * cfg.grid.t_max
    a = lo.epsilon[[p for p, _ in pairs]][:, late]
    b = hi.epsilon[[q for _, q in pairs]][:, late]
    print(f"{len(pairs)} matched draws")
    print(f"median late eps: {np.median(a):.4g} at {args.low:g} K, {np.median(b):.4g} at {args.high:g} K")
    print(f"ratio of medians {np.median(b) / np.median(a):.4f}, "
          f"median per-draw ratio {np.median(b.mean(axis=1) / a.mean(axis=1)):.4f}")


if __name__ == "__main__":
    main()
