"""Traces, synthetic skewed workloads and the stored/query split used for
trace-driven false-positive experiments."""

from __future__ import annotations

import csv
import io
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ParameterError
from .hashing import keys_array
from .variants import FilterSpec

DEFAULT_RATIOS = (1, 3, 5, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100)

RESULT_FIELDS = ["dataset", "filter", "k", "b", "f", "s", "ratio", "trial", "seed", "n",
                 "query_count", "fp_count", "fp_rate", "rebuilds", "dict_accesses"]


@dataclass
class Trace:
    """Records as indices into ``keys``; ``keys`` is in first-occurrence order."""

    codes: np.ndarray
    keys: list[bytes]
    _digests: np.ndarray | None = field(default=None, repr=False, compare=False)

    @classmethod
    def from_records(cls, records) -> "Trace":
        index: dict[bytes, int] = {}
        codes = np.fromiter((index.setdefault(r, len(index)) for r in records), dtype=np.int64)
        return cls(codes, list(index))

    @property
    def records(self) -> list[bytes]:
        return [self.keys[c] for c in self.codes]

    @property
    def unique_count(self) -> int:
        return len(self.keys)

    def __len__(self) -> int:
        return len(self.codes)

    def digests(self) -> np.ndarray:
        """64-bit element keys of ``keys``, cached."""
        if self._digests is None:
            self._digests = keys_array(self.keys)
        return self._digests

    def write(self, fh) -> None:
        for c in self.codes:
            fh.write(self.keys[c] + b"\n")


def parse_trace(stream) -> Trace:
    """One key per line; blank lines and '#' comments are skipped."""
    if isinstance(stream, (str, os.PathLike)):
        with open(stream, "rb") as fh:
            return parse_trace(fh)
    if isinstance(stream, (bytes, bytearray)):
        stream = io.BytesIO(stream)
    records = []
    for raw in stream:
        if isinstance(raw, str):
            raw = raw.encode()
        line = raw.rstrip(b"\r\n")
        if not line.strip() or line.lstrip().startswith(b"#"):
            continue
        records.append(line)
    return Trace.from_records(records)


@dataclass(frozen=True)
class ZipfConfig:
    num_flows: int
    trace_length: int
    exponent: float
    seed: int = 0

    def validate(self) -> None:
        if self.num_flows < 1:
            raise ParameterError("num_flows must be positive")
        if self.trace_length < self.num_flows:
            raise ParameterError("trace_length must be at least num_flows")
        if not self.exponent > 0:
            raise ParameterError("zipf exponent must be positive")


def generate_zipf_trace(cfg: ZipfConfig) -> Trace:
    """Records drawn i.i.d. with P(rank r) proportional to r**-exponent.

    Each rank is bound to a random 64-bit flow id (written as 16 hex digits),
    so first-occurrence order carries no rank information.
    """
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    weights = np.arange(1, cfg.num_flows + 1, dtype=np.float64) ** -cfg.exponent
    ranks = rng.choice(cfg.num_flows, size=cfg.trace_length, p=weights / weights.sum())
    flow_ids = rng.integers(0, 1 << 64, size=cfg.num_flows, dtype=np.uint64)
    while len(np.unique(flow_ids)) < cfg.num_flows:  # 64-bit collision, practically never
        flow_ids = rng.integers(0, 1 << 64, size=cfg.num_flows, dtype=np.uint64)
    labels = np.array([b"%016x" % int(v) for v in flow_ids], dtype=object)
    _, first = np.unique(ranks, return_index=True)
    order = ranks[np.sort(first)]
    remap = np.empty(cfg.num_flows, dtype=np.int64)
    remap[order] = np.arange(len(order))
    return Trace(remap[ranks], list(labels[order]))


@dataclass
class ExperimentPlan:
    ratio: float
    n: int
    stored: np.ndarray  # element keys of S
    queries: np.ndarray  # element keys of the query stream, trace order
    distinct_queries: int
    dataset: str = "trace"


def build_experiment(trace: Trace, ratio: float, dataset: str = "trace") -> ExperimentPlan:
    """S is the first n unique flows, n = unique/(1 + ratio); every other record is a query."""
    if ratio < 0:
        raise ParameterError("ratio must be non-negative")
    n = int(trace.unique_count // (1 + ratio))
    if n < 1:
        raise ParameterError(f"ratio {ratio} leaves no stored flows ({trace.unique_count} unique)")
    digests = trace.digests()
    mask = trace.codes >= n
    queries = digests[trace.codes[mask]]
    if len(queries) == 0:
        raise ParameterError(f"ratio {ratio} leaves no query flows")
    return ExperimentPlan(ratio, n, digests[:n].copy(), queries,
                          trace.unique_count - n, dataset)


def trial_seed(base_seed: int, trial: int) -> int:
    return int(np.random.SeedSequence([base_seed, trial]).generate_state(1, np.uint64)[0])


@dataclass
class ResultRow:
    dataset: str
    filter: str
    k: int
    b: int
    f: int
    s: int
    ratio: float
    trial: int
    seed: int
    n: int
    query_count: int
    fp_count: int
    fp_rate: float
    rebuilds: int
    dict_accesses: int


def run_trial(plan: ExperimentPlan, spec: FilterSpec, trial: int, base_seed: int,
              occupancy: float = 0.95) -> ResultRow:
    seed = trial_seed(base_seed, trial)
    flt = spec.build(plan.n, occupancy, seed)
    if flt.params.n != plan.n:
        raise ParameterError("filter capacity does not match the plan")
    rebuilds = flt.insert_many(plan.stored)
    member = flt.dict.contains_many(plan.queries)
    counts = flt.replay(plan.queries, member)
    return ResultRow(plan.dataset, spec.name, spec.k, spec.b, spec.f, spec.s, plan.ratio, trial,
                     seed, plan.n, counts.queries, counts.false_positives,
                     counts.false_positives / counts.queries, rebuilds + counts.rebuilds,
                     flt.dict.access_counter)


def thread_count() -> int:
    env = os.environ.get("ACF_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ParameterError(f"ACF_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def run_experiment(plan: ExperimentPlan, filter_specs, trials: int, base_seed: int,
                   occupancy: float = 0.95, threads: int | None = None) -> list[ResultRow]:
    """Every (spec, trial) pair on its own filter; all specs share each trial's seed."""
    if plan.n < 1 or len(plan.queries) == 0:
        raise ParameterError("plan has no stored elements or no queries")
    jobs = [(spec, t) for spec in filter_specs for t in range(trials)]
    threads = threads or thread_count()
    if threads == 1 or len(jobs) == 1:
        return [run_trial(plan, spec, t, base_seed, occupancy) for spec, t in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda job: run_trial(plan, job[0], job[1], base_seed, occupancy),
                             jobs))


def mean_fp_rate(rows, filter_name: str, ratio: float | None = None) -> float:
    sel = [r.fp_rate for r in rows
           if r.filter == filter_name and (ratio is None or r.ratio == ratio)]
    if not sel:
        raise KeyError(filter_name)
    return float(np.mean(sel))


def write_results(rows, fh) -> None:
    w = csv.DictWriter(fh, fieldnames=RESULT_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(asdict(r))
