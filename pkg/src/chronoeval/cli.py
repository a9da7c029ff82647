"""Command-line interface.

Subcommands run individual pipeline stages against a shared config so runs
are resumable; ``run`` executes everything.  Exit codes: 0 success, 2 config
error, 3 data error, 4 stage failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_STAGE = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chronoeval",
        description="Compare cross-validation and sequential-validation "
                    "performance estimates against out-of-sample gold standards "
                    "on time-ordered sentiment corpora.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config_args(p):
        p.add_argument("--config", required=True, help="INI config file")
        p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="SECTION.KEY=VALUE", help="override a config value")

    p_run = sub.add_parser("run", help="run the full pipeline")
    add_config_args(p_run)

    p_part = sub.add_parser("partition", help="list in-set/out-set pairs")
    p_part.add_argument("--input", help="corpus TSV file")
    p_part.add_argument("--n", type=int, help="corpus size (skip loading a file)")
    p_part.add_argument("--block-size", type=int, default=10_000)

    p_gold = sub.add_parser("gold", help="compute gold-standard results")
    add_config_args(p_gold)

    p_est = sub.add_parser("estimate", help="run the estimation procedures")
    add_config_args(p_est)

    p_ana = sub.add_parser("analyze", help="derive error analyses from gold + estimates")
    add_config_args(p_ana)
    p_ana.add_argument("--errors", help="use an existing errors.csv instead of joining "
                                        "gold.csv and estimates.csv")

    p_rep = sub.add_parser("report", help="render medians into a markdown summary")
    p_rep.add_argument("--output-dir", help="experiment output directory")
    p_rep.add_argument("--config", help="config file (to locate the output directory)")
    return parser


def _load_cfg(args):
    from .config import load_config

    return load_config(args.config, args.overrides)


def _cmd_run(args) -> int:
    from .experiment import run_experiment

    cfg = _load_cfg(args)
    result = run_experiment(cfg)
    print(f"wrote {len(result.gold)} gold rows, "
          f"{len(result.estimates)} estimates, "
          f"{len(result.records)} error records -> {result.output_dir}")
    return EXIT_OK


def _cmd_partition(args) -> int:
    from .corpus import load_corpus, partition, partition_sizes

    if args.n is not None:
        pairs = partition_sizes(args.n, args.block_size)
        n = args.n
    elif args.input:
        corp = load_corpus(args.input)
        pairs = partition(corp, args.block_size)
        n = len(corp)
    else:
        print("error: partition needs --input or --n", file=sys.stderr)
        return EXIT_CONFIG
    print(f"N={n} block_size={args.block_size} pairs={len(pairs)}")
    print("inset_index,in_start,in_stop,out_start,out_stop")
    for p in pairs:
        print(f"{p.inset_index},{p.in_range[0]},{p.in_range[1]},{p.out_range[0]},{p.out_range[1]}")
    return EXIT_OK


def _stage_states(cfg):
    from .experiment import _load_stage

    return _load_stage(cfg)


def _cmd_gold(args) -> int:
    from . import experiment as ex

    cfg = _load_cfg(args)
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    workers = cfg.parallelism if cfg.parallelism > 0 else (os.cpu_count() or 1)
    gold = {}
    for name, ds in _stage_states(cfg).items():
        ex._WORKER.update(ds=ds, cfg=cfg)
        keys = [(p.inset_index, ex.GOLD_TASK) for p in ds.pairs]
        for (k, _), payload in ex._map_tasks(keys, workers):
            gold[(name, k)] = payload
    ex._write_gold_csv(out_dir / "gold.csv", gold)
    print(f"wrote {len(gold)} gold rows -> {out_dir / 'gold.csv'}")
    return EXIT_OK


def _cmd_estimate(args) -> int:
    from . import experiment as ex

    cfg = _load_cfg(args)
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    workers = cfg.parallelism if cfg.parallelism > 0 else (os.cpu_count() or 1)
    estimates = {}
    for name, ds in _stage_states(cfg).items():
        ex._WORKER.update(ds=ds, cfg=cfg)
        keys = [(p.inset_index, proc) for p in ds.pairs for proc in cfg.procedures]
        for (k, proc), payload in ex._map_tasks(keys, workers):
            estimates[(name, k, proc)] = payload
    ex._write_estimates_csv(out_dir / "estimates.csv", estimates, cfg.metrics)
    print(f"wrote {len(estimates)} estimates -> {out_dir / 'estimates.csv'}")
    return EXIT_OK


def _cmd_analyze(args) -> int:
    from . import experiment as ex

    cfg = _load_cfg(args)
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.errors:
        errors_path = Path(args.errors)
        if not errors_path.exists():
            raise FileNotFoundError(f"required file not found: {errors_path}")
        records = ex.read_errors_csv(errors_path)
    else:
        for required in ("gold.csv", "estimates.csv"):
            if not (out_dir / required).exists():
                raise FileNotFoundError(
                    f"required file not found: {out_dir / required} "
                    f"(run the '{required.split('.')[0].rstrip('s')}' stage first)")
        gold = ex.read_gold_csv(out_dir / "gold.csv")
        estimates = ex.read_estimates_csv(out_dir / "estimates.csv")
        records = ex.build_records(gold, estimates, cfg.metrics)
        ex._write_errors_csv(out_dir / "errors.csv", records)
    procedures = [p for p in cfg.procedures if any(r.procedure_id == p for r in records)]
    ex.analyze(records, procedures, list(cfg.metrics), out_dir)
    print(f"analyzed {len(records)} records -> {out_dir}")
    return EXIT_OK


def _cmd_report(args) -> int:
    from .experiment import render_report

    out_dir = args.output_dir
    if out_dir is None:
        if not args.config:
            print("error: report needs --output-dir or --config", file=sys.stderr)
            return EXIT_CONFIG
        from .config import load_config

        out_dir = load_config(args.config).output_dir
    print(render_report(Path(out_dir)))
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    from .config import ConfigError
    from .corpus import CorpusError
    from .experiment import StageFailure

    args = _build_parser().parse_args(argv)
    handlers = {
        "run": _cmd_run,
        "partition": _cmd_partition,
        "gold": _cmd_gold,
        "estimate": _cmd_estimate,
        "analyze": _cmd_analyze,
        "report": _cmd_report,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CorpusError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except StageFailure as exc:
        print(f"stage failure: {exc}", file=sys.stderr)
        return EXIT_STAGE
    except ValueError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
