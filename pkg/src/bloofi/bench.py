"""Experiment driver: populations, index construction, timed workloads, CSV output."""

from __future__ import annotations

import csv
import dataclasses
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .bitvector import words_for
from .bloom import BloomFilter, HashFamily, derive_params
from .distance import Metric
from .errors import ParameterError
from .flat import FlatBloofi
from .naive import NaiveIndex
from .tree import BloofiTree

log = logging.getLogger(__name__)

INDEX_KINDS = ("bloofi", "flat", "naive")
CONSTRUCTIONS = ("iterative", "bulk")
DISTRIBUTIONS = ("nonrandom", "random")

# absent query elements are drawn above every generated element
_ABSENT_HIGH = 1 << 63


@dataclass
class ExperimentConfig:
    """One point of the experimental grid; the defaults are the standard benchmark settings."""

    num_filters: int = 1000
    order: int = 2
    expected_elements: int = 10000
    num_elements: int = 100
    fpp: float = 0.01
    construction: str = "iterative"
    metric: str = "hamming"
    distribution: str = "nonrandom"
    index: str = "all"
    heuristic: bool = True
    queries: int = 5000
    seed: int = 0
    repetitions: int = 10
    reported: int = 5
    maintenance_ops: int = 100

    def validate(self) -> None:
        if self.num_filters < 1:
            raise ParameterError("num_filters must be at least 1")
        if self.order < 2:
            raise ParameterError("order must be at least 2")
        if self.num_elements < 1:
            raise ParameterError("num_elements must be at least 1")
        derive_params(self.expected_elements, self.fpp)
        if self.construction not in CONSTRUCTIONS:
            raise ParameterError(f"construction must be one of {CONSTRUCTIONS}")
        if self.metric not in {m.value for m in Metric}:
            raise ParameterError(f"metric must be one of {[m.value for m in Metric]}")
        if self.distribution not in DISTRIBUTIONS:
            raise ParameterError(f"distribution must be one of {DISTRIBUTIONS}")
        if self.index not in INDEX_KINDS + ("all",):
            raise ParameterError(f"index must be one of {INDEX_KINDS + ('all',)}")
        if self.queries < 0 or self.maintenance_ops < 0:
            raise ParameterError("queries and maintenance_ops must be nonnegative")
        if not 1 <= self.reported <= self.repetitions:
            raise ParameterError("need 1 <= reported <= repetitions")

    @property
    def index_kinds(self) -> tuple[str, ...]:
        return INDEX_KINDS if self.index == "all" else (self.index,)


@dataclass
class MetricsRecord:
    config: ExperimentConfig
    index_kind: str
    phase: str = "build"
    search_bf_cost: float = math.nan
    search_time_ms: float = math.nan
    matches_per_query: float = math.nan
    storage_bytes: int = 0
    node_count: int = 0
    build_time_ms: float = math.nan
    insert_bf_cost: float = math.nan
    insert_time_ms: float = math.nan
    delete_bf_cost: float = math.nan
    delete_time_ms: float = math.nan
    update_bf_cost: float = math.nan
    update_time_ms: float = math.nan
    extra: dict = field(default_factory=dict, repr=False)


CONFIG_COLUMNS = [f.name for f in dataclasses.fields(ExperimentConfig)]
METRIC_COLUMNS = [
    f.name for f in dataclasses.fields(MetricsRecord) if f.name not in ("config", "extra")
]


# ----------------------------------------------------------------------
# populations and queries
# ----------------------------------------------------------------------


def make_family(config: ExperimentConfig) -> HashFamily:
    params = derive_params(config.expected_elements, config.fpp)
    return HashFamily.from_params(params, seed=config.seed)


def element_sets(config: ExperimentConfig) -> list[np.ndarray]:
    """Elements of each filter.

    ``nonrandom``: filter ``i`` holds ``[i*n, (i+1)*n)``. ``random``: filter
    ``i`` holds ``n`` distinct integers from a range of width ``2n`` whose start
    is uniform in ``[0, N*n)``.
    """
    n, N = config.num_elements, config.num_filters
    if config.distribution == "nonrandom":
        return [np.arange(i * n, (i + 1) * n, dtype=np.uint64) for i in range(N)]
    rng = np.random.default_rng([config.seed, 1])
    starts = rng.integers(0, N * n, size=N)
    return [
        np.sort(start + rng.choice(2 * n, size=n, replace=False)).astype(np.uint64)
        for start in starts
    ]


def filters_from_sets(family: HashFamily, sets: Sequence[np.ndarray]) -> list[tuple[int, BloomFilter]]:
    return [(i, BloomFilter.from_elements(family, s)) for i, s in enumerate(sets)]


def generate_population(
    config: ExperimentConfig, family: HashFamily | None = None
) -> list[tuple[int, BloomFilter]]:
    family = family or make_family(config)
    return filters_from_sets(family, element_sets(config))


def make_queries(
    config: ExperimentConfig, sets: Sequence[np.ndarray] | None, count: int | None = None
) -> np.ndarray:
    """Half present elements, half absent ones, shuffled with the config seed.

    Without element sets (loaded filters) the "present" half is drawn from
    ``[0, N*n)``, the range populations of this tool occupy.
    """
    count = config.queries if count is None else count
    rng = np.random.default_rng([config.seed, 2])
    n_present = count // 2
    if sets:
        which = rng.integers(0, len(sets), size=n_present)
        present = np.array(
            [sets[w][rng.integers(0, len(sets[w]))] for w in which], dtype=np.uint64
        )
        low = max(int(s.max()) for s in sets if len(s)) + 1
    else:
        hi = max(1, config.num_filters * config.num_elements)
        present = rng.integers(0, hi, size=n_present).astype(np.uint64)
        low = hi + 2 * config.num_elements
    absent = rng.integers(low, _ABSENT_HIGH, size=count - n_present, dtype=np.int64).astype(
        np.uint64
    )
    out = np.concatenate([present, absent])
    rng.shuffle(out)
    return out


# ----------------------------------------------------------------------
# index construction and measurement
# ----------------------------------------------------------------------


def build_index(kind: str, population: Sequence[tuple[int, BloomFilter]], config: ExperimentConfig):
    if kind == "bloofi":
        if config.construction == "bulk":
            return BloofiTree.bulk_build(
                population, order=config.order, metric=config.metric, heuristic=config.heuristic
            )
        tree = BloofiTree(order=config.order, metric=config.metric, heuristic=config.heuristic)
        for fid, bf in population:
            tree.insert(fid, bf)
        tree.reset_cost()
        return tree
    if kind == "flat":
        index = FlatBloofi()
    elif kind == "naive":
        index = NaiveIndex()
    else:
        raise ParameterError(f"unknown index kind {kind!r}")
    for fid, bf in population:
        index.insert(fid, bf)
    return index


def storage_bytes(kind: str, index, m: int) -> int:
    per_filter = 8 * words_for(m)
    if kind == "bloofi":
        return per_filter * index.node_count()
    if kind == "flat":
        return per_filter * index.capacity
    return per_filter * len(index)


def _timed_mean_ms(samples: list[float], reported: int) -> float:
    tail = samples[-reported:]
    return 1e3 * sum(tail) / len(tail)


def measure_search(index, kind: str, family: HashFamily, queries: np.ndarray, config: ExperimentConfig):
    """Return ``(bf_cost, time_ms, matches)`` averaged per query."""
    if len(queries) == 0:
        return math.nan, math.nan, math.nan
    elems = [int(q) for q in queries]
    if kind == "flat":
        args = [family.positions(x) for x in elems]
        search = index.find_matches_positions
    else:
        args = [family.probe(x) for x in elems]
        search = index.find_matches_probe
    samples = []
    matches = 0
    cost = math.nan
    for rep in range(config.repetitions):
        if rep == 0 and kind == "bloofi":
            index.reset_cost()
        t0 = time.perf_counter()
        if rep == 0:
            for a in args:
                matches += len(search(a))
        else:
            for a in args:
                search(a)
        samples.append(time.perf_counter() - t0)
        if rep == 0:
            cost = index.access_counter / len(args) if kind == "bloofi" else float(len(index))
    per_query = _timed_mean_ms(samples, config.reported) / len(args)
    return cost, per_query, matches / len(args)


def _op(index, kind: str, fn, *args) -> tuple[float, float]:
    if kind == "bloofi":
        index.reset_cost()
    t0 = time.perf_counter()
    fn(*args)
    dt = time.perf_counter() - t0
    cost = float(index.access_counter) if kind == "bloofi" else math.nan
    return cost, dt


def measure_maintenance(
    index,
    kind: str,
    population: Sequence[tuple[int, BloomFilter]],
    family: HashFamily,
    config: ExperimentConfig,
    record: MetricsRecord,
) -> None:
    """Delete and reinsert a sample of filters, then grow a sample by one element each."""
    ops = min(config.maintenance_ops, len(population))
    if ops == 0:
        return
    rng = np.random.default_rng([config.seed, 3])
    picks = rng.choice(len(population), size=ops, replace=False)
    by_id = dict(population)
    costs: dict[str, list[float]] = {"insert": [], "delete": [], "update": []}
    times: dict[str, list[float]] = {"insert": [], "delete": [], "update": []}
    ids = [population[i][0] for i in picks]
    for fid in ids:
        c, t = _op(index, kind, index.delete, fid)
        costs["delete"].append(c)
        times["delete"].append(t)
        c, t = _op(index, kind, index.insert, fid, by_id[fid])
        costs["insert"].append(c)
        times["insert"].append(t)
    extra = rng.integers(1 << 62, _ABSENT_HIGH, size=ops, dtype=np.int64)
    for fid, x in zip(ids, extra):
        grown = by_id[fid].copy()
        grown.add(int(x))
        c, t = _op(index, kind, index.update, fid, grown)
        costs["update"].append(c)
        times["update"].append(t)
    for op in ("insert", "delete", "update"):
        setattr(record, f"{op}_bf_cost", float(np.mean(costs[op])))
        setattr(record, f"{op}_time_ms", 1e3 * float(np.mean(times[op])))


def _node_count(kind: str, index) -> int:
    if kind == "bloofi":
        return index.node_count()
    if kind == "flat":
        return index.zeta
    return len(index)


def run_experiment(
    config: ExperimentConfig,
    population: Sequence[tuple[int, BloomFilter]] | None = None,
    sets: Sequence[np.ndarray] | None = None,
    maintenance: bool = True,
) -> list[MetricsRecord]:
    """Build each requested index, measure search, storage and maintenance."""
    config.validate()
    if population is None:
        family = make_family(config)
        sets = element_sets(config)
        population = filters_from_sets(family, sets)
    family = population[0][1].family
    queries = make_queries(config, sets)
    records = []
    for kind in config.index_kinds:
        log.info("building %s index over %d filters", kind, len(population))
        t0 = time.perf_counter()
        index = build_index(kind, population, config)
        build_ms = 1e3 * (time.perf_counter() - t0)
        rec = MetricsRecord(config=config, index_kind=kind, build_time_ms=build_ms)
        rec.search_bf_cost, rec.search_time_ms, rec.matches_per_query = measure_search(
            index, kind, family, queries, config
        )
        rec.storage_bytes = storage_bytes(kind, index, family.m)
        rec.node_count = _node_count(kind, index)
        if maintenance:
            measure_maintenance(index, kind, population, family, config, rec)
        records.append(rec)
    return records


def run_update_phase(config: ExperimentConfig) -> list[MetricsRecord]:
    """Build from the first half of each filter's elements, then update in place to full.

    Search metrics are taken on the updated indexes with the same queries as
    :func:`run_experiment`.
    """
    config.validate()
    family = make_family(config)
    sets = element_sets(config)
    half = filters_from_sets(family, [s[: max(1, len(s) // 2)] for s in sets])
    full = filters_from_sets(family, sets)
    queries = make_queries(config, sets)
    records = []
    for kind in config.index_kinds:
        t0 = time.perf_counter()
        index = build_index(kind, half, config)
        build_ms = 1e3 * (time.perf_counter() - t0)
        costs, times = [], []
        for fid, bf in full:
            c, t = _op(index, kind, index.update, fid, bf)
            costs.append(c)
            times.append(t)
        rec = MetricsRecord(config=config, index_kind=kind, phase="after-updates", build_time_ms=build_ms)
        rec.update_bf_cost = float(np.mean(costs))
        rec.update_time_ms = 1e3 * float(np.mean(times))
        rec.search_bf_cost, rec.search_time_ms, rec.matches_per_query = measure_search(
            index, kind, family, queries, config
        )
        rec.storage_bytes = storage_bytes(kind, index, family.m)
        rec.node_count = _node_count(kind, index)
        rec.extra["index"] = index
        records.append(rec)
    return records


def root_pass_fraction(tree: BloofiTree, elements: Iterable[int]) -> float:
    """Fraction of ``elements`` whose probe matches the root value."""
    elements = list(elements)
    if tree.root is None or not elements:
        return 0.0
    root = tree.root.val
    hits = sum(root.test_probe(tree.family.probe(int(x))) for x in elements)
    return hits / len(elements)


# ----------------------------------------------------------------------
# output
# ----------------------------------------------------------------------


def record_row(record: MetricsRecord) -> list:
    cfg = dataclasses.asdict(record.config)
    return [cfg[c] for c in CONFIG_COLUMNS] + [getattr(record, c) for c in METRIC_COLUMNS]


def emit_csv(records: Iterable[MetricsRecord], path_or_file) -> None:
    """Write one row per record: config columns, then metric columns."""
    if hasattr(path_or_file, "write"):
        _write_rows(records, path_or_file)
        return
    with open(path_or_file, "w", newline="") as fh:
        _write_rows(records, fh)


def _write_rows(records: Iterable[MetricsRecord], fh) -> None:
    writer = csv.writer(fh)
    writer.writerow(CONFIG_COLUMNS + METRIC_COLUMNS)
    for rec in records:
        writer.writerow(record_row(rec))
