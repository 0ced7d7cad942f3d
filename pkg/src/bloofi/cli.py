"""``bloofi-bench``: run the experiment grid and write CSV metrics.

Numeric and choice flags accept comma-separated lists; every combination is
run, e.g. ``--num-filters 100,1000 --index all`` yields six rows.
"""

from __future__ import annotations

import argparse
import dataclasses
import itertools
import logging
import sys

from . import bench
from .errors import ParameterError
from .filterio import read_collection, write_collection


def _list_of(conv):
    def parse(text: str):
        try:
            return [conv(v) for v in text.split(",") if v.strip()]
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from exc

    return parse


def _on_off(text: str) -> bool:
    if text not in ("on", "off"):
        raise ValueError(f"expected on or off, got {text!r}")
    return text == "on"


def _choices(*allowed):
    def conv(text: str) -> str:
        if text not in allowed:
            raise ValueError(f"{text!r} is not one of {', '.join(allowed)}")
        return text

    return conv


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bloofi-bench", description=__doc__.split("\n")[0])
    d = bench.ExperimentConfig()
    p.add_argument("--num-filters", type=_list_of(int), default=[d.num_filters], help="N")
    p.add_argument("--order", type=_list_of(int), default=[d.order], help="Bloofi order d")
    p.add_argument("--expected-elements", type=_list_of(int), default=[d.expected_elements])
    p.add_argument("--num-elements", type=_list_of(int), default=[d.num_elements])
    p.add_argument("--fpp", type=_list_of(float), default=[d.fpp])
    p.add_argument("--construction", type=_list_of(_choices(*bench.CONSTRUCTIONS)), default=[d.construction])
    p.add_argument("--metric", type=_list_of(_choices("hamming", "jaccard", "cosine")), default=[d.metric])
    p.add_argument("--distribution", type=_list_of(_choices(*bench.DISTRIBUTIONS)), default=[d.distribution])
    p.add_argument("--index", type=_list_of(_choices(*bench.INDEX_KINDS, "all")), default=[d.index])
    p.add_argument("--heuristic", type=_list_of(_on_off), default=[d.heuristic], help="on|off")
    p.add_argument("--queries", type=_list_of(int), default=[d.queries])
    p.add_argument("--seed", type=_list_of(int), default=[d.seed])
    p.add_argument("--repetitions", type=int, default=d.repetitions)
    p.add_argument("--reported", type=int, default=d.reported, help="average over the last R repetitions")
    p.add_argument("--maintenance-ops", type=int, default=d.maintenance_ops)
    p.add_argument("--after-updates", action="store_true", help="also run the build-half-then-update phase")
    p.add_argument("--output", default="-", help="CSV path, '-' for stdout")
    p.add_argument("--load", help="filter collection file to index instead of generated filters")
    p.add_argument("--save", help="write the generated population of the first config to this file")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


_SWEEP = (
    "num_filters",
    "order",
    "expected_elements",
    "num_elements",
    "fpp",
    "construction",
    "metric",
    "distribution",
    "index",
    "heuristic",
    "queries",
    "seed",
)


def configs_from_args(args) -> list[bench.ExperimentConfig]:
    keys = _SWEEP
    out = []
    for combo in itertools.product(*(getattr(args, k) for k in keys)):
        cfg = bench.ExperimentConfig(
            **dict(zip(keys, combo)),
            repetitions=args.repetitions,
            reported=args.reported,
            maintenance_ops=args.maintenance_ops,
        )
        cfg.validate()
        out.append(cfg)
    return out


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        configs = configs_from_args(args)
    except ParameterError as exc:
        print(f"bloofi-bench: configuration error: {exc}", file=sys.stderr)
        return 2

    loaded = None
    if args.load:
        try:
            loaded = read_collection(args.load)
        except (OSError, ValueError) as exc:
            print(f"bloofi-bench: cannot load {args.load}: {exc}", file=sys.stderr)
            return 1
        if not loaded[1]:
            print(f"bloofi-bench: {args.load} holds no filters", file=sys.stderr)
            return 1

    records = []
    try:
        for i, cfg in enumerate(configs):
            if loaded is not None:
                population = loaded[1]
                cfg = dataclasses.replace(cfg, num_filters=len(population))
                records += bench.run_experiment(cfg, population=population)
                continue
            if args.save and i == 0:
                family = bench.make_family(cfg)
                write_collection(args.save, family, bench.generate_population(cfg, family))
            records += bench.run_experiment(cfg)
            if args.after_updates:
                records += bench.run_update_phase(cfg)
        if args.output == "-":
            bench.emit_csv(records, sys.stdout)
        else:
            bench.emit_csv(records, args.output)
    except OSError as exc:
        print(f"bloofi-bench: I/O error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
