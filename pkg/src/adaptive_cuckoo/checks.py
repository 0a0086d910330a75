"""Randomized operation fuzzing with a no-false-negative check after every step."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConsistencyError
from .variants import Filter, FilterSpec, FilterVariant, audit

FUZZ_ROSTER = (
    FilterSpec("vanilla", FilterVariant.VANILLA, k=4, b=1, f=4),
    FilterSpec("cuckooing", FilterVariant.CUCKOOING, k=4, b=1, f=4),
    FilterSpec("cyclic", FilterVariant.CYCLIC, k=4, b=1, f=3, s=2),
    FilterSpec("swapping", FilterVariant.SWAPPING, k=2, b=4, f=4),
)


@dataclass
class FuzzReport:
    filter: str
    seed: int
    operations: int
    false_negatives: int
    false_positives: int
    rebuilds: int
    audits: int

    @property
    def ok(self) -> bool:
        return self.false_negatives == 0


def fuzz_filter(spec: FilterSpec, seed: int, operations: int, n: int = 192,
                occupancy: float = 0.95, audit_every: int = 1000) -> FuzzReport:
    """Apply ``operations`` random inserts, queries and fixes to a small, dense filter.

    After every operation all stored elements are queried; any Absent answer
    counts as a false negative.  A full :func:`audit` runs every
    ``audit_every`` operations and at the end.
    """
    rng = np.random.default_rng(seed)
    flt: Filter = spec.build(n, occupancy, seed)
    stored = np.empty(0, dtype=np.uint64)
    recent: list[int] = []  # earlier false positives, re-asked to drive repeated fixes
    misses = fps = audits = 0
    for step in range(operations):
        roll = rng.random()
        if roll < 0.15 and len(stored) < n:
            x = int(rng.integers(0, 1 << 64, dtype=np.uint64))
            if not flt.dict.contains_key(x):
                flt.insert(x)
                stored = np.append(stored, np.uint64(x))
        elif roll < 0.3 and recent:
            obs = flt.observe(recent[int(rng.integers(len(recent)))])
            fps += obs.false_positive
        elif roll < 0.4 and len(stored):
            if not flt.observe(int(stored[int(rng.integers(len(stored)))])).present:
                misses += 1
        else:
            q = int(rng.integers(0, 1 << 64, dtype=np.uint64))
            if flt.dict.contains_key(q):
                continue
            obs = flt.observe(q)
            if obs.false_positive:
                fps += 1
                recent.append(q)
                if len(recent) > 64:
                    recent.pop(0)
        if len(stored):
            misses += int(len(stored) - np.count_nonzero(flt.query_many(stored)))
        if audit_every and (step + 1) % audit_every == 0:
            audit(flt)
            audits += 1
    audit(flt)
    return FuzzReport(spec.name, seed, operations, misses, fps, flt.rebuild_count, audits + 1)


def fuzz_suite(seeds, operations_per_run: int, roster=FUZZ_ROSTER) -> list[FuzzReport]:
    """One fuzz run per (filter, seed).  Raises ConsistencyError on a structural fault."""
    return [fuzz_filter(spec, seed, operations_per_run) for spec in roster for seed in seeds]


def summarize(reports) -> str:
    total_ops = sum(r.operations for r in reports)
    fn = sum(r.false_negatives for r in reports)
    fps = sum(r.false_positives for r in reports)
    rebuilds = sum(r.rebuilds for r in reports)
    return (f"{len(reports)} runs, {total_ops} operations, {fn} false negatives, "
            f"{fps} false positives, {rebuilds} rebuilds")


__all__ = ["FUZZ_ROSTER", "FuzzReport", "fuzz_filter", "fuzz_suite", "summarize",
           "ConsistencyError"]
