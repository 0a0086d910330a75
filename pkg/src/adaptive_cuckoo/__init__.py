"""Adaptive cuckoo filters: vanilla, cuckooing, cyclic and swapping variants,
with analysis instrumentation, trace replay and adversarial attacks."""

from .core import FilterParams, FilterVariant, InsertResult, Location, TableSet, derive_params
from .dictionary import ReverseDictionary
from .errors import (BudgetError, CapacityExceeded, ConsistencyError, ConstructionError,
                     ContractViolation, DuplicateElement, ParameterError)
from .hashing import HashFamily, element_key
from .variants import Filter, FilterSpec, FixReport, Observation, audit, equal_space_roster

__version__ = "0.1.0"

__all__ = [
    "BudgetError", "CapacityExceeded", "ConsistencyError", "ConstructionError",
    "ContractViolation", "DuplicateElement", "Filter", "FilterParams", "FilterSpec",
    "FilterVariant", "FixReport", "HashFamily", "InsertResult", "Location", "Observation",
    "ParameterError", "ReverseDictionary", "TableSet", "audit", "derive_params",
    "element_key", "equal_space_roster",
]
