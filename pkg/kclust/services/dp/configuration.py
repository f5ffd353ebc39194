"""
Quantised state of the portal dynamic program.
"""

import math
from typing import Dict, Iterator, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from core.logging_config import get_logger
from exceptions import ParameterError

logger = get_logger(__name__)

ROUNDING_MODES = ("nearest", "down", "up")


def saturation_index(step: float, cap: float) -> int:
    return int(math.ceil(cap / step))


def key_range(step: float, cap: float) -> int:
    """Number of distinct keys: 0 through saturation, plus the infinite key."""
    return saturation_index(step, cap) + 2


def quantize(value: float, step: float, cap: float, mode: str = "nearest") -> int:
    """
    Index of value on the grid of multiples of step, clamped to
    [0, ceil(cap / step)]. "nearest" rounds ties up; finite values above cap
    map to the saturation index and infinity to the index past it.

    Raises:
        ParameterError: If step is not positive or mode is unknown.
    """
    if not step > 0.0:
        raise ParameterError("step", f"must be positive, got {step}")
    if mode not in ROUNDING_MODES:
        raise ParameterError("mode", f"must be one of {ROUNDING_MODES}, got {mode!r}")
    top = saturation_index(step, cap)
    if math.isinf(value):
        return top + 1
    if value >= cap:
        return top
    ratio = value / step
    if mode == "nearest":
        index = math.floor(ratio + 0.5)
    elif mode == "down":
        index = math.floor(ratio)
    else:
        index = math.ceil(ratio)
    return min(max(int(index), 0), top)


def quantize_rows(values: np.ndarray, step: float, cap: float, mode: str) -> np.ndarray:
    """Vectorised quantize over an array of any shape; returns int64 indices."""
    top = saturation_index(step, cap)
    ratio = np.where(values >= cap, np.inf, values / step)
    if mode == "nearest":
        index = np.floor(ratio + 0.5)
    elif mode == "down":
        index = np.floor(ratio)
    else:
        index = np.ceil(ratio)
    keys = np.clip(np.nan_to_num(index, posinf=top), 0, top).astype(np.int64)
    keys[np.isposinf(values)] = top + 1
    return keys


def cost_buckets(baseline_cost: float, eps: float, n: int) -> List[float]:
    """
    Powers of 1 + eps / log2(n) from baseline_cost / n up to the first value
    at or above (1 + eps) * baseline_cost.

    Raises:
        ParameterError: If baseline_cost is not positive or eps is outside (0, 1).
    """
    if not baseline_cost > 0.0:
        raise ParameterError("baseline_cost", f"must be positive, got {baseline_cost}")
    if not 0.0 < eps < 1.0:
        raise ParameterError("eps", f"must lie in (0, 1), got {eps}")
    n = max(int(n), 2)
    ratio = 1.0 + eps / math.log2(n)
    count = math.ceil(math.log((1.0 + eps) * n) / math.log(ratio)) + 1
    first = baseline_cost / n
    return [first * ratio**i for i in range(count)]


def bucket_of(value: float, buckets: Sequence[float]) -> int:
    """Smallest bucket index whose value is >= value; len(buckets) if none."""
    for index, bound in enumerate(buckets):
        if value <= bound:
            return index
    return len(buckets)


class Configuration(NamedTuple):
    """
    A DP state: node, quantised inside (ell) and outside (s) portal distances,
    far flag and cost bucket.
    """

    node: int
    ell: Tuple[int, ...]
    s: Tuple[int, ...]
    far: bool
    bucket: int


class NodeTable:
    """
    Minimum tilde-cost per (inside profile, outside profile) pair of a node.
    Each inside profile fixes the number of centers opened inside the node.
    """

    def __init__(
        self,
        node: int,
        ell_keys: Sequence[Tuple[int, ...]],
        counts: Sequence[int],
        s_keys: Sequence[Tuple[int, ...]],
        far: Sequence[bool],
        range_count: int = 0,
        portals: int = 0,
    ) -> None:
        self.node = node
        self.range_count = range_count
        self.portals = portals
        self.ell_keys = list(ell_keys)
        self.counts = np.asarray(counts, dtype=np.int64)
        self.s_keys = list(s_keys)
        self.far = list(far)
        self.cost = np.full((len(self.ell_keys), len(self.s_keys)), np.inf)

    @property
    def size(self) -> int:
        """Number of finite entries."""
        return int(np.isfinite(self.cost).sum())

    def min_centers(self, ell: int, s: int, bucket_value: float) -> Optional[int]:
        """
        Fewest centers opened inside among the inside profiles sharing the
        ell key of row `ell` whose cost against outside profile s is at most
        bucket_value; None when no such profile exists.
        """
        key = self.ell_keys[ell]
        rows = [r for r, other in enumerate(self.ell_keys) if other == key]
        within = [int(self.counts[r]) for r in rows if self.cost[r, s] <= bucket_value]
        return min(within) if within else None

    def configurations(self, buckets: Sequence[float]) -> Iterator[Tuple[Configuration, int]]:
        """Finite entries as (configuration, centers inside) pairs."""
        rows, cols = np.nonzero(np.isfinite(self.cost))
        for row, col in zip(rows.tolist(), cols.tolist()):
            yield (
                Configuration(
                    node=self.node,
                    ell=self.ell_keys[row],
                    s=self.s_keys[col],
                    far=bool(self.far[col] and self.counts[row] == 0),
                    bucket=bucket_of(float(self.cost[row, col]), buckets),
                ),
                int(self.counts[row]),
            )


class DPTable:
    """Per-node tables of a solved dynamic program."""

    def __init__(self) -> None:
        self.nodes: Dict[int, NodeTable] = {}

    def __setitem__(self, node: int, table: NodeTable) -> None:
        self.nodes[node] = table

    def __getitem__(self, node: int) -> NodeTable:
        return self.nodes[node]

    def __len__(self) -> int:
        return len(self.nodes)

    def size(self, node: int) -> int:
        return self.nodes[node].size

    def size_bound(self, node: int, buckets: int) -> int:
        """
        Distinct configurations a node can hold: every (ell, s) key pair, the
        far flag and the cost bucket, range_count^(2 portals) * 2 * buckets.
        """
        table = self.nodes[node]
        return table.range_count ** (2 * table.portals) * 2 * max(buckets, 1)
