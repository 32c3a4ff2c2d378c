"""Command-line front end.

    penning-ent run CONFIG [--seed N] [--temp T ...] [--theta X ...] [--n N] [--out DIR]
    penning-ent replay --draws FILE [--config CONFIG] [--temp T ...] [--out FILE]
    penning-ent validate-config CONFIG
    penning-ent render --input CSV [--output SVG] [--scale linear|log]

Exit codes: 0 success, 2 configuration error, 3 I/O error.
"""

import argparse
import sys
import time
from pathlib import Path

from . import __version__
from .config import ConfigError, RunConfig, load_config, parse_temperature
from .io import (
    OutputError,
    read_draws_json,
    read_histogram_csv,
    render_heatmap_svg,
    write_draws_json,
    write_histogram_csv,
    write_summary_json,
)
from .mc import cross_temperature_replay, run_ensemble

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 2, 3


def _temp_arg(text):
    try:
        return parse_temperature(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _read_config(path):
    try:
        return load_config(path)
    except OSError as exc:
        raise OutputError(f"cannot read {path}: {exc.strerror or exc}") from exc


def _apply_overrides(cfg, args, directory=None):
    return cfg.with_overrides(
        seed=args.seed,
        n_trajectories=args.n,
        directory=directory,
        workers=args.workers,
        temperatures_kelvin=tuple(args.temp) if args.temp else None,
        thetas_given=tuple(args.theta) if args.theta else None,
    )


def run_summary(cfg, results, files, wall_clock):
    """Summary dict for a finished run; everything but ``wall_clock_s`` is deterministic."""
    per_temp = []
    temps = cfg.temperatures_kelvin or (None,) * len(results)
    for k, (res, t_k) in enumerate(zip(results, temps)):
        h = res.histogram
        per_temp.append({
            "temperature_kelvin": t_k,
            "theta": res.theta,
            "n_trajectories": h.n_trajectories,
            "accepted": h.n_accepted,
            "rejected": {name.lower(): n for name, n in h.n_rejected.items()},
            "entanglement_events": h.n_entanglement_events,
            "epsilon_min": res.epsilon_min,
            "epsilon_at_t0_max_abs": res.epsilon_t0_max_abs,
            "files": files[k],
        })
    return {
        "version": __version__,
        "seed": cfg.seed,
        "config": cfg.to_dict(),
        "config_text": cfg.to_text(),
        "results": per_temp,
        "entanglement_events": sum(r["entanglement_events"] for r in per_temp),
        "epsilon_at_t0_max_abs": max((r["epsilon_at_t0_max_abs"] for r in per_temp), default=0.0),
        "wall_clock_s": wall_clock,
    }


def cmd_run(args):
    cfg = _apply_overrides(_read_config(args.config), args, directory=args.out)
    out = Path(cfg.directory)
    sampler = cfg.sampler()
    results, files = [], []
    start = time.perf_counter()
    for k, theta in enumerate(cfg.thetas):
        res = run_ensemble(sampler, cfg.trap, theta, workers=cfg.workers)
        results.append(res)
        tag = f"{k:02d}"
        written = {}
        if "csv" in cfg.formats:
            written["histogram_csv"] = write_histogram_csv(res.histogram, out / f"histogram_{tag}.csv").name
        if "svg" in cfg.formats:
            written["heatmap_svg"] = render_heatmap_svg(
                res.histogram, out / f"heatmap_{tag}.svg", scale=cfg.color_scale,
                title=f"theta = {theta:.6g}").name
        if "json" in cfg.formats:
            ent = [s for s in res.summaries if s.entangled]
            written["entangling_draws"] = write_draws_json(
                [s.env for s in ent], out / f"entangling_draws_{tag}.json",
                seed=cfg.seed, source_theta=theta, indices=[s.index for s in ent]).name
        files.append(written)
        h = res.histogram
        print(f"theta={theta:.6g}: accepted {h.n_accepted}/{h.n_trajectories}, "
              f"entanglement events {h.n_entanglement_events}")
    summary = run_summary(cfg, results, files, time.perf_counter() - start)
    if "json" in cfg.formats:
        write_summary_json(summary, out / "summary.json")
    return EXIT_OK


def cmd_replay(args):
    cfg = _read_config(args.config) if args.config else RunConfig(seed=0, n_trajectories=0)
    cfg = _apply_overrides(cfg, args)
    draws = read_draws_json(args.draws)
    grid = cfg.sampler().grid
    rows = []
    for theta, t_k in zip(cfg.thetas, cfg.temperatures_kelvin or (None,) * len(cfg.thetas)):
        counts = cross_temperature_replay(draws, cfg.trap, theta, grid)
        counts = {k if k in ("n_draws", "accepted", "entanglement_events") else k.lower(): v
                  for k, v in counts.items()}
        rows.append({"temperature_kelvin": t_k, "theta": theta, **counts})
        print(f"theta={theta:.6g}: {counts['accepted']}/{counts['n_draws']} accepted, "
              f"entanglement events {counts['entanglement_events']}")
    if args.out:
        write_summary_json({"draws": str(args.draws), "results": rows}, args.out)
    return EXIT_OK


def cmd_validate(args):
    cfg = _read_config(args.config)
    sys.stdout.write(cfg.to_text())
    sys.stdout.write("# thetas: " + ", ".join(f"{t!r}" for t in cfg.thetas) + "\n")
    return EXIT_OK


def cmd_render(args):
    h = read_histogram_csv(args.input)
    output = args.output or Path(args.input).with_suffix(".svg")
    render_heatmap_svg(h, output, scale=args.scale)
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="penning-ent", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def overrides(sp):
        sp.add_argument("--seed", type=int)
        sp.add_argument("--n", type=int, help="number of trajectories")
        sp.add_argument("--temp", type=_temp_arg, action="append",
                        help="bath temperature, e.g. '10 mK' (repeatable)")
        sp.add_argument("--theta", type=float, action="append",
                        help="dimensionless temperature k_B T / (hbar omega_z) (repeatable)")
        sp.add_argument("--workers", type=int)

    r = sub.add_parser("run", help="run Monte-Carlo ensembles")
    r.add_argument("config")
    overrides(r)
    r.add_argument("--out", help="output directory")
    r.set_defaults(func=cmd_run)

    rp = sub.add_parser("replay", help="re-run stored draws at other temperatures")
    rp.add_argument("--draws", required=True)
    rp.add_argument("--config")
    overrides(rp)
    rp.add_argument("--out", help="write replay counters to this JSON file")
    rp.set_defaults(func=cmd_replay)

    v = sub.add_parser("validate-config", help="check a config and print it fully resolved")
    v.add_argument("config")
    v.set_defaults(func=cmd_validate)

    rd = sub.add_parser("render", help="render a histogram CSV as SVG heatmap")
    rd.add_argument("--input", required=True)
    rd.add_argument("--output")
    rd.add_argument("--scale", choices=("linear", "log"), default="linear")
    rd.set_defaults(func=cmd_render)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OutputError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        # malformed input files (CSV, draws JSON)
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
