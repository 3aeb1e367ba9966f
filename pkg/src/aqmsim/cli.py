"""Command-line entry point: ``aqmsim run|sweep|preset``.

Exit status is 0 on success, 1 for configuration errors and 2 for I/O
errors. Set AQMSIM_LOG (e.g. ``AQMSIM_LOG=INFO``) for progress logging.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from . import config as config_mod
from .aqm import DISCIPLINES
from .errors import ConfigError
from .harness import emit_csv, run_jobs, sweep_jobs
from .presets import PRESETS, preset_jobs

log = logging.getLogger("aqmsim")

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 1, 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aqmsim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one scenario")
    run.add_argument("--config", required=True)
    run.add_argument("--aqm", choices=sorted(DISCIPLINES))
    run.add_argument("--seed", type=int)
    run.add_argument("--out", default="results/run")

    sw = sub.add_parser("sweep", help="one run per value of a numeric key")
    sw.add_argument("--config", required=True)
    sw.add_argument("--axis", required=True, help="e.g. udp_rate, topology.buffer_pkts, aqm.boxtime")
    sw.add_argument("--values", required=True, help="comma separated; k/M/G suffixes allowed")
    sw.add_argument("--out", required=True)
    sw.add_argument("--jobs", type=int, default=1)

    pr = sub.add_parser("preset", help="reproduce a named experiment")
    pr.add_argument("--name", required=True, choices=list(PRESETS))
    pr.add_argument("--out", required=True)
    pr.add_argument("--duration", type=float, help="override simulated seconds per run")
    pr.add_argument("--jobs", type=int, default=1)
    return parser


def _load(path: str):
    try:
        return config_mod.load(path)
    except UnicodeDecodeError as exc:
        raise ConfigError("config", str(exc)) from None


def _run(args) -> list:
    cfg = _load(args.config)
    if args.aqm and args.aqm != cfg.aqm:
        keep = {k: v for k, v in cfg.aqm_params.items() if k in DISCIPLINES[args.aqm].params}
        dropped = sorted(set(cfg.aqm_params) - set(keep))
        if dropped:
            log.warning("ignoring parameters not used by %s: %s", args.aqm, ", ".join(dropped))
        cfg.aqm, cfg.aqm_params = args.aqm, keep
    if args.seed is not None:
        cfg.seed = args.seed
    cfg.validate()
    return run_jobs([(cfg, f"run/{cfg.aqm}", "", "")])


def _sweep(args) -> list:
    cfg = _load(args.config)
    try:
        values = [config_mod.parse_number(v) for v in args.values.split(",") if v.strip()]
    except ValueError:
        raise ConfigError("values", f"not a list of numbers: {args.values!r}") from None
    return run_jobs(sweep_jobs(cfg, args.axis, values), args.jobs)


def _preset(args) -> list:
    return run_jobs(preset_jobs(args.name, args.duration), args.jobs)


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("AQMSIM_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = _build_parser().parse_args(argv)
    handler = {"run": _run, "sweep": _sweep, "preset": _preset}[args.command]
    try:
        results = handler(args)
        paths = emit_csv(results, args.out)
    except (ConfigError, KeyError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    for r in results:
        print(f"{r.run_id}\tutil={r.utilization:.3f}\tjain_tcp={r.jain_tcp:.3f}"
              f"\tudp_share={r.udp_share:.3f}")
    print("wrote " + ", ".join(str(p) for p in paths.values()))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
