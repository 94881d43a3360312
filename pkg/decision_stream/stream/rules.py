"""Routing rules carried by internal nodes.

A rule maps a feature value to a child slot in ``[0, arity)``. ``route`` returns
None (``route_column`` returns -1) for a category the node never saw in training.
"""
import bisect
from dataclasses import dataclass
from enum import Enum
from typing import ClassVar, Dict, Optional, Tuple

import numpy as np

from ..exceptions import ModelFormatError

UNSEEN = -1


class RuleKind(str, Enum):
    THRESHOLD = "threshold"
    ONE_VS_REST = "one_vs_rest"
    CATEGORY_MAP = "category_map"
    RANGE_PARTITION = "range_partition"


@dataclass(frozen=True)
class SplitRule:
    feature: int

    kind: ClassVar[RuleKind]

    @property
    def arity(self) -> int:
        raise NotImplementedError

    def route(self, value) -> Optional[int]:
        raise NotImplementedError

    def route_column(self, values: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "feature": self.feature}


@dataclass(frozen=True)
class ThresholdRule(SplitRule):
    """Left (slot 0) when the value is <= threshold."""
    value: float

    kind: ClassVar[RuleKind] = RuleKind.THRESHOLD

    @property
    def arity(self) -> int:
        return 2

    def route(self, value) -> Optional[int]:
        return 0 if value <= self.value else 1

    def route_column(self, values: np.ndarray) -> np.ndarray:
        return np.where(values <= self.value, 0, 1)

    def to_dict(self) -> dict:
        return {**super().to_dict(), "value": self.value}


@dataclass(frozen=True)
class OneVsRestRule(SplitRule):
    """Left (slot 0) when the code equals ``category``; ``observed`` lists the codes seen in training."""
    category: int
    observed: Tuple[int, ...]

    kind: ClassVar[RuleKind] = RuleKind.ONE_VS_REST

    @property
    def arity(self) -> int:
        return 2

    def route(self, value) -> Optional[int]:
        value = int(value)
        if value not in self.observed:
            return None
        return 0 if value == self.category else 1

    def route_column(self, values: np.ndarray) -> np.ndarray:
        slots = np.where(values == self.category, 0, 1)
        slots[~np.isin(values, self.observed)] = UNSEEN
        return slots

    def to_dict(self) -> dict:
        return {**super().to_dict(), "category": self.category, "observed": list(self.observed)}


@dataclass(frozen=True)
class CategoryMapRule(SplitRule):
    """One slot per group of codes; ``mapping`` holds sorted (code, slot) pairs."""
    mapping: Tuple[Tuple[int, int], ...]

    kind: ClassVar[RuleKind] = RuleKind.CATEGORY_MAP

    def __post_init__(self):
        slots = sorted({slot for _, slot in self.mapping})
        if len(slots) < 2 or slots != list(range(len(slots))):
            raise ModelFormatError(f"category map slots must be 0..k-1 with k >= 2, got {slots}")

    @classmethod
    def from_dict_mapping(cls, feature: int, mapping: Dict[int, int]) -> "CategoryMapRule":
        return cls(feature, tuple(sorted((int(c), int(s)) for c, s in mapping.items())))

    @property
    def arity(self) -> int:
        return max(slot for _, slot in self.mapping) + 1

    def route(self, value) -> Optional[int]:
        return dict(self.mapping).get(int(value))

    def route_column(self, values: np.ndarray) -> np.ndarray:
        codes = np.asarray(values, dtype=np.int64)
        top = max(code for code, _ in self.mapping)
        lookup = np.full(top + 1, UNSEEN, dtype=np.int64)
        for code, slot in self.mapping:
            lookup[code] = slot
        slots = np.full(len(codes), UNSEEN, dtype=np.int64)
        known = (codes >= 0) & (codes <= top)
        slots[known] = lookup[codes[known]]
        return slots

    def to_dict(self) -> dict:
        return {**super().to_dict(), "mapping": [[code, slot] for code, slot in self.mapping]}


@dataclass(frozen=True)
class RangePartitionRule(SplitRule):
    """Slot i covers [b_i, b_{i+1}) with b_0 = -inf and b_k = +inf."""
    boundaries: Tuple[float, ...]

    kind: ClassVar[RuleKind] = RuleKind.RANGE_PARTITION

    def __post_init__(self):
        if not self.boundaries:
            raise ModelFormatError("range partition needs at least one boundary")
        if any(b >= c for b, c in zip(self.boundaries, self.boundaries[1:])):
            raise ModelFormatError(f"range boundaries must increase strictly: {self.boundaries}")

    @property
    def arity(self) -> int:
        return len(self.boundaries) + 1

    def route(self, value) -> Optional[int]:
        return bisect.bisect_right(self.boundaries, value)

    def route_column(self, values: np.ndarray) -> np.ndarray:
        return np.searchsorted(np.asarray(self.boundaries), values, side="right")

    def to_dict(self) -> dict:
        return {**super().to_dict(), "boundaries": list(self.boundaries)}


def rule_from_dict(document: dict) -> SplitRule:
    try:
        kind = RuleKind(document["kind"])
        feature = int(document["feature"])
        if kind == RuleKind.THRESHOLD:
            return ThresholdRule(feature, float(document["value"]))
        if kind == RuleKind.ONE_VS_REST:
            return OneVsRestRule(feature, int(document["category"]), tuple(int(c) for c in document["observed"]))
        if kind == RuleKind.CATEGORY_MAP:
            return CategoryMapRule(feature, tuple((int(c), int(s)) for c, s in document["mapping"]))
        return RangePartitionRule(feature, tuple(float(b) for b in document["boundaries"]))
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, ModelFormatError):
            raise
        raise ModelFormatError(f"malformed rule {document!r}: {e}") from e
