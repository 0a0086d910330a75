"""Exact storage of S with element <-> slot maps.

Stands in for the remote store an adaptive filter consults on a positive
answer.  ``access_counter`` counts reverse lookups and membership checks so
experiments can report remote-access cost.
"""

from __future__ import annotations

import numpy as np

from . import _kernels as K
from .errors import ConsistencyError
from .hashing import element_key


class ReverseDictionary:
    """Element ids index ``keys`` and ``where``; ``owner`` maps slots back to ids.

    ``where`` rows are (table, bin, slot), or -1 while an element is
    registered but not placed (only between a failed eviction chain and the
    rebuild that follows it).
    """

    def __init__(self, capacity: int, k: int, N: int, b: int, stats: np.ndarray | None = None):
        self.capacity = capacity
        self.keys = np.zeros(capacity, dtype=np.uint64)
        self.where = np.full((capacity, 3), -1, dtype=np.int64)
        self.owner = np.full((k, N, b), -1, dtype=np.int64)
        if stats is None:
            stats = np.zeros(K.STATS_LEN, dtype=np.int64)
            stats[K.HOMELESS] = -1
        self._stats = stats
        self._index: dict[int, int] = {}
        self._objects: dict[int, object] = {}

    @property
    def count(self) -> int:
        return int(self._stats[K.COUNT])

    @property
    def access_counter(self) -> int:
        return int(self._stats[K.ACCESSES])

    def __len__(self) -> int:
        return self.count

    # registration (element ids)

    def register(self, key: int, obj=None) -> int:
        eid = self.count
        if eid >= self.capacity:
            raise ConsistencyError("dictionary is full")
        if key in self._index:
            raise ConsistencyError(f"key {key:#x} already registered")
        self.keys[eid] = key
        self._index[key] = eid
        if obj is not None and not isinstance(obj, (int, np.integer)):
            self._objects[eid] = obj
        self._stats[K.COUNT] += 1
        return eid

    def register_many(self, keys: np.ndarray, objs=None) -> None:
        start = self.count
        stop = start + len(keys)
        self.keys[start:stop] = keys
        self._index.update(zip(keys.tolist(), range(start, stop)))
        if objs is not None:
            for eid, obj in zip(range(start, stop), objs):
                if not isinstance(obj, (int, np.integer)):
                    self._objects[eid] = obj
        self._stats[K.COUNT] = stop

    def element_of(self, eid: int):
        return self._objects.get(eid, int(self.keys[eid]))

    def id_of(self, x) -> int | None:
        return self._index.get(element_key(x))

    def stored_keys(self) -> np.ndarray:
        return self.keys[: self.count]

    def contains_key(self, key: int) -> bool:
        return key in self._index

    def contains(self, x) -> bool:
        self._stats[K.ACCESSES] += 1
        return element_key(x) in self._index

    def contains_many(self, keys: np.ndarray) -> np.ndarray:
        self._stats[K.ACCESSES] += len(keys)
        return np.isin(keys, self.stored_keys())

    def location_of(self, x):
        from .core import Location

        eid = self.id_of(x)
        if eid is None or self.where[eid, 0] < 0:
            return None
        return Location(*map(int, self.where[eid]))

    # slot-level operations

    def store(self, x, loc) -> None:
        key = element_key(x)
        if key in self._index:
            raise ConsistencyError(f"{x!r} already stored")
        if self.owner[tuple(loc)] >= 0:
            raise ConsistencyError(f"location {tuple(loc)} already holds an element")
        eid = self.register(key, x)
        self.owner[tuple(loc)] = eid
        self.where[eid] = tuple(loc)

    def element_at(self, loc):
        eid = int(self.owner[tuple(loc)])
        if eid < 0:
            raise LookupError(f"no element stored at {tuple(loc)}")
        self._stats[K.ACCESSES] += 1
        return self.element_of(eid)

    def relocate(self, src, dst) -> None:
        src, dst = tuple(src), tuple(dst)
        eid = int(self.owner[src])
        if eid < 0:
            raise ConsistencyError(f"relocate from empty location {src}")
        if self.owner[dst] >= 0:
            raise ConsistencyError(f"relocate onto occupied location {dst}")
        self.owner[src] = -1
        self.owner[dst] = eid
        self.where[eid] = dst

    def check_bijection(self) -> None:
        """Raise ConsistencyError unless owner and where are mutually inverse."""
        n = self.count
        placed = self.where[:n, 0] >= 0
        ids = np.nonzero(placed)[0]
        locs = self.where[ids]
        if len(ids) and not np.array_equal(self.owner[locs[:, 0], locs[:, 1], locs[:, 2]], ids):
            raise ConsistencyError("element->location map disagrees with location->element map")
        if int((self.owner >= 0).sum()) != len(ids):
            raise ConsistencyError("location->element map has entries with no inverse")
