"""Analysis objects for the cuckooing filter: configuration snapshots, initial
false positives, the potential function, fix paths and loop detection.

Attach a :class:`Instrument` to a filter to record every fix as one
:class:`PathRecord` per fixed collider and to check the suffix property on
each non-looping path as it happens.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .core import Location
from .errors import ConsistencyError, ContractViolation
from .hashing import keys_array


@dataclass(frozen=True)
class ConfigSnapshot:
    """Hash index and slot of every stored element, by element id."""

    locations: np.ndarray
    label: str = "C_t"

    @property
    def beta(self) -> np.ndarray:
        return self.locations[:, 0]

    def __len__(self) -> int:
        return len(self.locations)

    def __eq__(self, other) -> bool:
        return isinstance(other, ConfigSnapshot) and np.array_equal(self.locations, other.locations)

    __hash__ = None

    def location(self, eid: int) -> Location:
        return Location(*map(int, self.locations[eid]))

    def diff(self, other: "ConfigSnapshot") -> np.ndarray:
        """Element ids whose location differs between the two snapshots."""
        if len(self) != len(other):
            raise ConsistencyError("snapshots cover different element sets")
        return np.nonzero((self.locations != other.locations).any(axis=1))[0]


def snapshot_config(flt, label: str = "C_t") -> ConfigSnapshot:
    n = flt.dict.count
    return ConfigSnapshot(flt.dict.where[:n].copy(), label)


def initial_false_positives(flt, queries) -> set[int]:
    """Keys of the queries that are false positives in the filter's current
    configuration.  Pure evaluation: nothing is fixed."""
    keys = np.unique(keys_array(queries))
    outside = keys[~np.isin(keys, flt.dict.stored_keys())]
    present = flt.query_many(outside)
    return set(outside[present].tolist())


@dataclass
class PotentialState:
    c0: ConfigSnapshot
    f0: set[int]
    q_set: set[int]


def colliding_ids(flt, q) -> list[int]:
    """Ids of stored elements colliding with ``q`` in the current configuration."""
    from . import _kernels as K

    found = np.empty((flt.params.k * flt.params.b, 3), dtype=np.int64)
    n = K.colliders(np.uint64(int(q)), found, *flt._state())
    return [int(flt.dict.owner[tuple(found[i])]) for i in range(n)]


def potential(state: PotentialState, flt) -> int:
    """Number of (element, initial false positive) colliding pairs where the
    element still sits at its initial hash index."""
    if flt.dict.count != len(state.c0):
        raise ConsistencyError("filter element set differs from the C0 snapshot")
    beta_now = flt.dict.where[: flt.dict.count, 0]
    beta0 = state.c0.beta
    phi = 0
    for q in state.f0:
        for eid in colliding_ids(flt, q):
            if beta_now[eid] == beta0[eid]:
                phi += 1
    return phi


@dataclass
class PathRecord:
    query_index: int | None
    moved: list[int]
    before: list[Location]
    after: list[Location | None]
    config_label: str = "C_prev"

    @property
    def length(self) -> int:
        return len(self.moved)

    @property
    def looped(self) -> bool:
        return len(set(self.moved)) != len(self.moved)


def check_suffix_property(path: PathRecord, c0: ConfigSnapshot, c_prev: ConfigSnapshot) -> bool:
    """Once a moved element is off its initial hash index, every later one is too."""
    if path.looped:
        raise ContractViolation("the suffix property only applies to non-looping paths")
    off = False
    for eid in path.moved:
        differs = c_prev.beta[eid] != c0.beta[eid]
        if off and not differs:
            return False
        off = off or differs
    return True


@dataclass(frozen=True)
class LoopStats:
    fixes: int
    looped: int

    @property
    def rate(self) -> float:
        return self.looped / self.fixes if self.fixes else 0.0


def loop_rate(paths) -> LoopStats:
    paths = list(paths)
    return LoopStats(len(paths), sum(p.looped for p in paths))


@dataclass
class FixRow:
    query_index: int | None
    was_fp: bool
    path_len: int
    looped: bool
    phi: int | None


@dataclass
class Instrument:
    """Fix-path recorder bound to one filter.

    ``queries`` is the query support Q; its initial false positives are
    evaluated against the configuration at attach time.  A rebuild rehashes
    everything, so the instrument starts a new epoch with a fresh C0 and
    skips suffix checks for the path that triggered it.
    """

    flt: object
    queries: object = ()
    track_phi: bool = False
    keep_c0_clone: bool = False
    paths: list[PathRecord] = field(default_factory=list)
    rows: list[FixRow] = field(default_factory=list)
    violations: list[PathRecord] = field(default_factory=list)
    checked: int = 0
    epoch: int = 0

    def __post_init__(self):
        self.c0 = snapshot_config(self.flt, "C0")
        q_keys = set(keys_array(self.queries).tolist()) if len(self.queries) else set()
        self.state = PotentialState(self.c0, initial_false_positives(self.flt, sorted(q_keys))
                                    if q_keys else set(), q_keys)
        self.phi0 = potential(self.state, self.flt)
        self._c0_filter = self.flt.clone() if self.keep_c0_clone else None
        self.flt.attach(self)

    def before_fix(self, flt):
        return snapshot_config(flt, "C_prev")

    def after_fix(self, flt, q, report, pre: ConfigSnapshot, query_index):
        if not report.was_false_positive:
            return
        beta_seg = pre.locations.copy()
        for seg in report.segments:
            rec = PathRecord(query_index, [m.element_id for m in seg],
                             [m.old for m in seg], [m.new for m in seg])
            self.paths.append(rec)
            if not report.rebuilt and not rec.looped:
                self.checked += 1
                if not check_suffix_property(rec, self.c0, ConfigSnapshot(beta_seg.copy())):
                    self.violations.append(rec)
            for m in seg:
                if m.new is not None:
                    beta_seg[m.element_id] = m.new
        if report.rebuilt:
            self.epoch += 1
            self.c0 = snapshot_config(flt, "C0")
            self.state = PotentialState(self.c0, self.state.f0, self.state.q_set)
        phi = potential(self.state, flt) if self.track_phi else None
        self.rows.append(FixRow(query_index, True, report.path_length, report.looped, phi))

    def path_on_c0(self, q) -> PathRecord:
        """The path fixing ``q`` would take on C0, computed on a copy."""
        if self._c0_filter is None:
            raise ContractViolation("construct the Instrument with keep_c0_clone=True")
        replica = self._c0_filter.clone()
        report = replica.fix(q)
        return PathRecord(None, [m.element_id for m in report.moved],
                          [m.old for m in report.moved], [m.new for m in report.moved], "C0")

    def loop_stats(self) -> LoopStats:
        return loop_rate(self.paths)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["query_index", "was_fp", "path_len", "looped", "phi"])
            for r in self.rows:
                w.writerow([r.query_index, int(r.was_fp), r.path_len, int(r.looped),
                            "" if r.phi is None else r.phi])
