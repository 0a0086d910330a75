"""The four filter variants: vanilla, cuckooing, cyclic and swapping.

Inserts and queries are shared; each variant differs in which fingerprint
index a slot uses and in how a false positive is fixed:

* vanilla: index 0, never fixes.
* cuckooing: index 0; a colliding element moves to its next table
  (round-robin), evicting as an insert would.
* cyclic: index = the slot's selector alpha; a fix bumps alpha mod 2**s.
* swapping: index = slot position in the bin; a fix swaps the element with
  a random other slot of its bin.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .core import (FilterCore, FilterParams, FilterVariant, InsertResult, Location, Move,
                   derive_params)
from .errors import ConsistencyError, ContractViolation
from .hashing import element_key, keys_array

__all__ = ["Filter", "FilterVariant", "FixReport", "Observation", "InsertResult",
           "make_filter", "audit"]


@dataclass(frozen=True)
class FixReport:
    was_false_positive: bool
    moved: tuple[Move, ...] = ()
    rebuilt: bool = False

    @property
    def segments(self) -> list[tuple[Move, ...]]:
        """Moves grouped per fixed collider, in the order they were processed."""
        groups: dict[int, list[Move]] = {}
        for m in self.moved:
            groups.setdefault(m.segment, []).append(m)
        return [tuple(v) for _, v in sorted(groups.items())]

    @property
    def looped(self) -> bool:
        return any(_repeats(seg) for seg in self.segments)

    @property
    def path_length(self) -> int:
        return len(self.moved)


def _repeats(moves) -> bool:
    ids = [m.element_id for m in moves]
    return len(ids) != len(set(ids))


@dataclass(frozen=True)
class Observation:
    """Harness view of one query: answer, ground truth and any fix applied."""

    present: bool
    false_positive: bool
    report: FixReport | None = None


@dataclass
class ReplayCounts:
    queries: int = 0
    false_positives: int = 0
    fixes: int = 0
    rebuilds: int = 0


class Filter(FilterCore):
    """An adaptive cuckoo filter of one variant, paired with its dictionary."""

    hook = None

    @classmethod
    def create(cls, variant="cuckooing", *, n: int, k: int = 2, b: int = 1, f: int = 8,
               s: int = 0, gamma: float | None = None, occupancy: float | None = None,
               max_kicks: int | None = None, seed=None) -> "Filter":
        if gamma is None and occupancy is None:
            occupancy = 0.95
        params = derive_params(n, k, b, gamma=gamma, occupancy=occupancy, f=f, s=s,
                               max_kicks=max_kicks)
        return cls(params, variant, seed)

    def attach(self, hook) -> None:
        """Install an instrumentation hook (see :mod:`adaptive_cuckoo.instrumentation`)."""
        self.hook = hook

    def detach(self) -> None:
        self.hook = None

    def fix(self, q, query_index: int | None = None) -> FixReport:
        """Fix false positive ``q``; ``q`` must not be stored."""
        self._check_usable()
        key = element_key(q)
        if self.dict.contains_key(key):
            raise ContractViolation(f"{q!r} is stored; only false positives can be fixed")
        pre = self.hook.before_fix(self) if self.hook is not None else None
        status, npath = K.fix(np.uint64(key), self._path, *self._state())
        if status == K.NOT_FP:
            report = FixReport(False)
        else:
            moves = self._moves(npath)
            rebuilt = False
            if status == K.NEEDS_REBUILD:
                self.rebuild()
                rebuilt = True
            report = FixReport(True, moves, rebuilt)
        if self.hook is not None:
            self.hook.after_fix(self, q, report, pre, query_index)
        return report

    def observe(self, q, query_index: int | None = None) -> Observation:
        """Query ``q``; on a positive, consult the dictionary and fix if false."""
        if not self.query(q):
            return Observation(False, False)
        if self.contains(q):
            return Observation(True, False)
        return Observation(True, True, self.fix(q, query_index))

    def replay(self, elements, member: np.ndarray | None = None) -> ReplayCounts:
        """Stream queries in order, fixing every false positive.

        ``member`` marks stream positions holding stored elements; it is
        computed from the dictionary when omitted.  With a hook attached,
        every false positive is routed through :meth:`fix` so the hook sees it.
        """
        keys = keys_array(elements)
        if member is None:
            member = self.dict.contains_many(keys)
        counters = np.zeros(3, dtype=np.int64)
        out = ReplayCounts()
        i = 0
        while i < len(keys):
            self._check_usable()
            status, i = K.replay(keys, member, i, self.hook is not None, counters, self._path,
                                 *self._state())
            if status == K.STOPPED_FP:
                if self.variant is not FilterVariant.VANILLA:
                    counters[2] += 1
                report = self.fix(int(keys[i - 1]), query_index=i - 1)
                out.rebuilds += int(report.rebuilt)
            elif status == K.NEEDS_REBUILD:
                self.rebuild()
                out.rebuilds += 1
        out.queries, out.false_positives, out.fixes = (int(c) for c in counters)
        return out

    def expected_fingerprint(self, x, loc: Location) -> int:
        """Fingerprint ``x`` would have if stored at ``loc`` under the variant rule."""
        if self.variant is FilterVariant.CYCLIC:
            idx = int(self.tables.sel[loc])
        elif self.variant is FilterVariant.SWAPPING:
            idx = loc.slot
        else:
            idx = 0
        return self.family.fingerprint_hash(x, idx)

    def audit(self) -> None:
        audit(self)


def audit(flt: FilterCore) -> None:
    """Full-grid consistency check; raises ConsistencyError on the first problem."""
    t, d = flt.tables, flt.dict
    occ_count = int(t.occ.sum())
    if occ_count != t.occupancy_count:
        raise ConsistencyError(f"occupancy counter {t.occupancy_count} != grid count {occ_count}")
    if not np.array_equal(t.occ, d.owner >= 0):
        raise ConsistencyError("occupancy bits disagree with the location->element map")
    d.check_bijection()
    n = d.count
    if not flt.needs_rebuild and (d.where[:n, 0] < 0).any():
        raise ConsistencyError("a stored element has no slot")
    if occ_count > flt.params.n:
        raise ConsistencyError("more occupied slots than capacity")
    ids = np.nonzero(d.where[:n, 0] >= 0)[0]
    locs = d.where[ids]
    keys = d.keys[ids]
    fam = flt.family
    for beta in range(flt.params.k):
        in_t = locs[:, 0] == beta
        if not np.array_equal(fam.location_hash_many(beta, keys[in_t]), locs[in_t, 1]):
            raise ConsistencyError(f"element stored in table {beta} outside its bin")
    stored = t.fp[locs[:, 0], locs[:, 1], locs[:, 2]]
    sel = t.sel[locs[:, 0], locs[:, 1], locs[:, 2]]
    if flt.variant is FilterVariant.CYCLIC:
        if (sel >= 2 ** flt.params.s).any() or (sel < 0).any():
            raise ConsistencyError("selector out of range")
        index = sel
    elif flt.variant is FilterVariant.SWAPPING:
        index = locs[:, 2]
    else:
        index = np.zeros(len(ids), dtype=np.int64)
    expected = np.empty(len(ids), dtype=np.int64)
    for v in np.unique(index):
        m = index == v
        expected[m] = fam.fingerprint_hash_many(keys[m], int(v))
    if not np.array_equal(stored, expected):
        bad = int(np.nonzero(stored != expected)[0][0])
        raise ConsistencyError(f"fingerprint mismatch at {tuple(locs[bad])}")


def make_filter(variant, *, n: int, k: int, b: int, f: int, s: int = 0,
                occupancy: float | None = None, gamma: float | None = None,
                max_kicks: int | None = None, seed=None) -> Filter:
    return Filter.create(variant, n=n, k=k, b=b, f=f, s=s, occupancy=occupancy, gamma=gamma,
                         max_kicks=max_kicks, seed=seed)


@dataclass
class FilterSpec:
    """A named filter configuration for benchmarks."""

    name: str
    variant: FilterVariant
    k: int
    b: int
    f: int
    s: int = 0
    extra: dict = field(default_factory=dict)

    def build(self, n: int, occupancy: float, seed) -> Filter:
        return Filter.create(self.variant, n=n, k=self.k, b=self.b, f=self.f, s=self.s,
                             occupancy=occupancy, seed=seed, **self.extra)


def equal_space_roster(fbits: int) -> list[FilterSpec]:
    """The six equal-space configurations compared on network traces.

    Cyclic filters give up one fingerprint bit per selector bit.
    """
    roster = [
        FilterSpec("vanilla", FilterVariant.VANILLA, k=4, b=1, f=fbits),
        FilterSpec("cuckooing", FilterVariant.CUCKOOING, k=4, b=1, f=fbits),
    ]
    for s in (1, 2, 3):
        if fbits - s >= 1:
            roster.append(FilterSpec(f"cyclic_s{s}", FilterVariant.CYCLIC, k=4, b=1,
                                     f=fbits - s, s=s))
    roster.append(FilterSpec("swapping", FilterVariant.SWAPPING, k=2, b=4, f=fbits))
    return roster


__all__ += ["FilterSpec", "FilterParams", "equal_space_roster", "ReplayCounts"]
