"""
Portal-respecting dynamic program over the binary split tree.

The program runs in three passes:

1. bottom-up, the reachable inside profiles of every node: the distance from
   each portal to the nearest center opened inside, rounded down onto the
   node's grid, together with the number of centers opened;
2. top-down, the outside profiles: the distance from each portal to the
   nearest center opened outside the node, rounded up;
3. bottom-up, the minimum tilde-cost of every (inside, outside) pair, with
   back-pointers to the child profiles that realise it.

Root entries are ranked by their table value; the best few are re-evaluated
exactly and the cheapest is returned.
"""

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial.distance import cdist

from conf import settings
from core.logging_config import get_logger
from exceptions import InfeasibleError, ParameterError, StructuralError
from schemas.instance import Instance, Relocation, Solution
from schemas.reports import DPResult
from services.dp.binary_tree import BinaryNode, BinarySplitTree
from services.dp.configuration import (
    DPTable,
    NodeTable,
    bucket_of,
    cost_buckets,
    key_range,
    quantize_rows,
)
from services.geometry import power_sum

logger = get_logger(__name__)


@dataclass
class _Profiles:
    keys: np.ndarray
    vecs: np.ndarray
    counts: np.ndarray


def _dedupe(
    vecs: np.ndarray,
    counts: np.ndarray,
    step: float,
    cap: float,
    mode: str,
    limit: int,
    merge_counts: bool,
) -> Tuple[_Profiles, np.ndarray, bool]:
    """
    Group candidate rows by quantised key (and count unless merge_counts).
    The representative of a group is its first row with the fewest centers.
    Infinite distances key past saturation, so "no center" never stands in
    for "far center".
    At most `limit` groups survive, preferring few centers and small keys.

    Returns:
        (profiles, profile index per input row or -1, whether rows were dropped)
    """
    keys = quantize_rows(vecs, step, cap, mode)
    order = np.argsort(counts, kind="stable")
    table = keys if merge_counts else np.column_stack([counts, keys])
    _, first, inverse = np.unique(
        table[order], axis=0, return_index=True, return_inverse=True
    )
    inverse = np.asarray(inverse).reshape(-1)
    rep = order[first]
    remap = np.arange(len(rep))
    dropped = len(rep) > limit
    if dropped:
        priority = np.lexsort((keys[rep].sum(axis=1), counts[rep]))
        keep = np.sort(priority[:limit])
        remap = np.full(len(rep), -1, dtype=np.int64)
        remap[keep] = np.arange(len(keep))
        rep = rep[keep]
    index = np.empty(len(counts), dtype=np.int64)
    index[order] = remap[inverse]
    return _Profiles(keys=keys[rep], vecs=vecs[rep], counts=counts[rep]), index, dropped


def _scatter_min(cost, back, column, rows, values, choices) -> None:
    """cost[r, column] = min of values over entries with rows == r."""
    if len(rows) == 0:
        return
    order = np.argsort(values, kind="stable")
    targets, first = np.unique(rows[order], return_index=True)
    picked = order[first]
    cost[targets, column] = values[picked]
    back[targets, column] = choices[picked]


class _Geometry:
    """
    Per-node portal distances and client aggregates shared by the dynamic
    program and the exact evaluator.
    """

    def __init__(self, btree: BinarySplitTree, instance: Instance, relocation: Relocation) -> None:
        relocation.check_against(instance)
        tree = btree.tree
        self.btree = btree
        self.z = instance.objective_z

        self.location_candidate = np.full(len(tree.locations), -1, dtype=np.int64)
        for c in range(instance.m - 1, -1, -1):
            loc = tree.location_id(instance.candidates[c])
            if loc is None:
                raise StructuralError(f"candidate {c} is not a point of the decomposition")
            self.location_candidate[loc] = c

        shift = np.linalg.norm(instance.clients - relocation.targets, axis=1)
        per_location: Dict[int, List[float]] = {}
        for p, target in enumerate(relocation.targets):
            loc = tree.location_id(target)
            if loc is None:
                raise StructuralError(f"relocated client {p} is not a point of the decomposition")
            per_location.setdefault(loc, []).append(float(shift[p]))
        self.location_shift = {loc: np.asarray(v) for loc, v in per_location.items()}

        size = len(btree.nodes)
        self.client_count = np.zeros(size, dtype=np.int64)
        self.shift_sum = np.zeros(size)
        self.shift_square = np.zeros(size)
        self.down: Dict[int, List[np.ndarray]] = {}
        self.across: Dict[int, np.ndarray] = {}
        self.offset: Dict[int, np.ndarray] = {}
        self.center_offset: Dict[int, np.ndarray] = {}

        for node in btree.postorder():
            if node.is_leaf:
                deltas = self.location_shift.get(node.location, np.empty(0))
                self.client_count[node.id] = len(deltas)
                self.shift_sum[node.id] = math.fsum(deltas)
                self.shift_square[node.id] = math.fsum(deltas * deltas)
                if node.location is not None:
                    point = tree.locations[node.location]
                    self.offset[node.id] = np.linalg.norm(node.portals - point, axis=1)
                continue
            kids = [btree.nodes[c] for c in node.children]
            for child in kids:
                self.client_count[node.id] += self.client_count[child.id]
                self.shift_sum[node.id] += self.shift_sum[child.id]
                self.shift_square[node.id] += self.shift_square[child.id]
            self.down[node.id] = [cdist(node.portals, child.portals) for child in kids]
            if len(kids) == 2:
                self.across[node.id] = cdist(kids[0].portals, kids[1].portals)
            self.center_offset[node.id] = np.linalg.norm(node.portals - node.center, axis=1)

    def leaf_candidate(self, node: BinaryNode) -> int:
        return -1 if node.location is None else int(self.location_candidate[node.location])

    def aggregate(self, node_id: int, reach) -> np.ndarray:
        """
        Sum over the node's clients of (shift + reach)^z, vectorised over reach;
        clients are taken to share one distance reach to the outside.
        """
        reach = np.asarray(reach, dtype=np.float64)
        count = self.client_count[node_id]
        if count == 0:
            return np.zeros_like(reach)
        with np.errstate(invalid="ignore"):
            if self.z == 1:
                total = self.shift_sum[node_id] + count * reach
            else:
                total = (
                    self.shift_square[node_id]
                    + 2.0 * reach * self.shift_sum[node_id]
                    + count * reach * reach
                )
        return np.where(np.isinf(reach), np.inf, total)

    def inside_reach(self, node: BinaryNode, child: int, ell: np.ndarray) -> np.ndarray:
        """Portal distances of node given the inside distances of one child, batched."""
        return (self.down[node.id][child][None, :, :] + ell[:, None, :]).min(axis=2)

    def outside_reach(self, node: BinaryNode, child: int, s: np.ndarray) -> np.ndarray:
        """Outside distances at a child's portals through the node's portals, batched."""
        return (s[:, :, None] + self.down[node.id][child][None, :, :]).min(axis=1)

    def cross_reach(self, node: BinaryNode, target: int, ell_other: np.ndarray) -> np.ndarray:
        """Distances at one child's portals to centers inside its sibling, batched."""
        across = self.across[node.id]
        if target == 1:
            across = across.T
        return (across[None, :, :] + ell_other[:, None, :]).min(axis=2)


def _portal_cost(geometry: _Geometry, centers: Sequence[int], candidates: np.ndarray) -> float:
    btree = geometry.btree
    tree = btree.tree
    opened = {tree.location_id(candidates[c]) for c in centers}
    ell: Dict[int, np.ndarray] = {}
    for node in btree.postorder():
        if node.is_leaf:
            width = len(node.portals)
            ell[node.id] = (
                geometry.offset[node.id] if node.location in opened else np.full(width, np.inf)
            )
            continue
        parts = [
            geometry.inside_reach(node, i, ell[c][None, :])[0]
            for i, c in enumerate(node.children)
        ]
        ell[node.id] = np.minimum.reduce(parts)

    s: Dict[int, np.ndarray] = {btree.root.id: np.full(len(btree.root.portals), np.inf)}
    terms: List[float] = []
    for node in btree.preorder():
        s_v = s[node.id]
        if node.is_leaf:
            deltas = geometry.location_shift.get(node.location)
            if deltas is None:
                continue
            if node.location in opened:
                reach = 0.0
            else:
                reach = float(np.min(geometry.offset[node.id] + s_v))
            terms.extend(np.power(deltas + reach, geometry.z).tolist())
            continue
        for i, c in enumerate(node.children):
            through = geometry.outside_reach(node, i, s_v[None, :])[0]
            if len(node.children) == 2:
                sibling = node.children[1 - i]
                through = np.minimum(
                    through, geometry.cross_reach(node, i, ell[sibling][None, :])[0]
                )
            s[c] = through
    return math.fsum(terms)


def evaluate_portal_cost(
    btree: BinarySplitTree, instance: Instance, relocation: Relocation, solution: Solution
) -> float:
    """
    Exact portal-respecting tilde-cost of a solution: every relocated client
    reaches its nearest opened center along a shortest path that crosses
    node boundaries only at portals.
    """
    solution.check_against(instance)
    geometry = _Geometry(btree, instance, relocation)
    return _portal_cost(geometry, solution.center_indices, instance.candidates)


class PortalDP:
    """
    Tables of the portal dynamic program for one decomposition and one
    relocated client set.
    """

    def __init__(
        self,
        btree: BinarySplitTree,
        instance: Instance,
        relocation: Relocation,
        eps: float,
        k: Optional[int] = None,
        max_states: Optional[int] = None,
        quantum: Optional[float] = None,
    ) -> None:
        if not 0.0 < eps < 1.0:
            raise ParameterError("eps", f"must lie in (0, 1), got {eps}")
        self.btree = btree
        self.instance = instance
        self.eps = eps
        self.k = instance.k if k is None else int(k)
        if self.k < 1:
            raise ParameterError("k", f"must be at least 1, got {self.k}")
        self.max_states = max_states or settings.DP_MAX_STATES
        self.quantum = quantum or settings.DP_QUANTUM
        self.geometry = _Geometry(btree, instance, relocation)
        self.truncated = 0

        size = len(btree.nodes)
        self.inside: List[Optional[_Profiles]] = [None] * size
        self.outside: List[Optional[_Profiles]] = [None] * size
        self.combo: Dict[int, np.ndarray] = {}
        self.s_index: Dict[int, List[np.ndarray]] = {}
        self.cost: Dict[int, np.ndarray] = {}
        self.back: Dict[int, np.ndarray] = {}
        self.far: Dict[int, np.ndarray] = {}

    def _grid(self, node: BinaryNode) -> Tuple[float, float]:
        diameter = node.diameter
        return self.quantum * self.eps * diameter, diameter / self.eps + 1.0

    def _collect(self, node, vecs, counts, mode, merge_counts):
        step, cap = self._grid(node)
        profiles, index, dropped = _dedupe(
            vecs, counts, step, cap, mode, self.max_states, merge_counts
        )
        if dropped:
            self.truncated += 1
        return profiles, index

    # -- pass 1 ------------------------------------------------------------

    def _inside_pass(self) -> None:
        g, k = self.geometry, self.k
        for node in self.btree.postorder():
            width = len(node.portals)
            if node.is_leaf:
                vecs = [np.full(width, np.inf)]
                counts = [0]
                if g.leaf_candidate(node) >= 0:
                    vecs.append(g.offset[node.id])
                    counts.append(1)
                profiles, _ = self._collect(
                    node, np.vstack(vecs), np.asarray(counts, dtype=np.int64), "down", False
                )
                self.inside[node.id] = profiles
                continue
            kids = [self.inside[c] for c in node.children]
            if len(kids) == 1:
                vecs = g.inside_reach(node, 0, kids[0].vecs)
                profiles, index = self._collect(node, vecs, kids[0].counts, "down", False)
                self.combo[node.id] = index
            else:
                a, b = kids
                reach_a = g.inside_reach(node, 0, a.vecs)
                reach_b = g.inside_reach(node, 1, b.vecs)
                ia, ib = np.nonzero(a.counts[:, None] + b.counts[None, :] <= k)
                vecs = np.minimum(reach_a[ia], reach_b[ib])
                counts = a.counts[ia] + b.counts[ib]
                profiles, index = self._collect(node, vecs, counts, "down", False)
                combo = np.full((len(a.counts), len(b.counts)), -1, dtype=np.int64)
                combo[ia, ib] = index
                self.combo[node.id] = combo
            self.inside[node.id] = profiles

    # -- pass 2 ------------------------------------------------------------

    def _outside_pass(self) -> None:
        g, k = self.geometry, self.k
        root = self.btree.root
        step, cap = self._grid(root)
        width = len(root.portals)
        self.outside[root.id] = _Profiles(
            keys=quantize_rows(np.full((1, width), np.inf), step, cap, "up"),
            vecs=np.full((1, width), np.inf),
            counts=np.zeros(1, dtype=np.int64),
        )
        for node in self.btree.preorder():
            if node.is_leaf:
                continue
            out = self.outside[node.id]
            if len(node.children) == 1:
                child = self.btree.nodes[node.children[0]]
                vecs = g.outside_reach(node, 0, out.vecs)
                profiles, index = self._collect(child, vecs, out.counts, "up", True)
                self.outside[child.id] = profiles
                self.s_index[node.id] = [index]
                continue
            indices = []
            for side in (0, 1):
                child = self.btree.nodes[node.children[side]]
                sibling = self.inside[node.children[1 - side]]
                through = g.outside_reach(node, side, out.vecs)
                cross = g.cross_reach(node, side, sibling.vecs)
                sv, ps = np.nonzero(out.counts[:, None] + sibling.counts[None, :] <= k)
                vecs = np.minimum(through[sv], cross[ps])
                counts = out.counts[sv] + sibling.counts[ps]
                profiles, index = self._collect(child, vecs, counts, "up", True)
                table = np.full((len(out.counts), len(sibling.counts)), -1, dtype=np.int64)
                table[sv, ps] = index
                self.outside[child.id] = profiles
                indices.append(table)
            self.s_index[node.id] = indices

    # -- pass 3 ------------------------------------------------------------

    def _cost_pass(self) -> None:
        g, k, z = self.geometry, self.k, self.geometry.z
        for node in self.btree.postorder():
            inside, out = self.inside[node.id], self.outside[node.id]
            rows, cols = len(inside.counts), len(out.counts)
            cost = np.full((rows, cols), np.inf)
            if node.is_leaf:
                self.back[node.id] = np.full((rows, cols), -1, dtype=np.int64)
                self.far[node.id] = np.zeros(cols, dtype=bool)
                deltas = g.location_shift.get(node.location)
                for row, count in enumerate(inside.counts):
                    if deltas is None:
                        cost[row, :] = 0.0
                    elif count:
                        cost[row, :] = power_sum(deltas, z)
                    else:
                        reach = (g.offset[node.id][None, :] + out.vecs).min(axis=1)
                        cost[row, :] = [power_sum(deltas + r, z) for r in reach]
                self.cost[node.id] = cost
                continue

            combo = self.combo[node.id]
            if len(node.children) == 1:
                child = node.children[0]
                c_in, c_cost = self.inside[child], self.cost[child]
                s_index = self.s_index[node.id][0]
                back = np.full((rows, cols), -1, dtype=np.int64)
                for sv in range(cols):
                    sc = s_index[sv]
                    if sc < 0:
                        continue
                    ic = np.nonzero((combo >= 0) & (c_in.counts + out.counts[sv] <= k))[0]
                    _scatter_min(cost, back, sv, combo[ic], c_cost[ic, sc], ic)
            else:
                a, b = node.children
                a_in, b_in = self.inside[a], self.inside[b]
                a_cost, b_cost = self.cost[a], self.cost[b]
                s_for_a, s_for_b = self.s_index[node.id]
                back = np.full((rows, cols, 2), -1, dtype=np.int64)
                pair_counts = a_in.counts[:, None] + b_in.counts[None, :]
                for sv in range(cols):
                    sa, sb = s_for_a[sv], s_for_b[sv]
                    mask = (
                        (combo >= 0)
                        & (pair_counts + out.counts[sv] <= k)
                        & (sb[:, None] >= 0)
                        & (sa[None, :] >= 0)
                    )
                    ia, ib = np.nonzero(mask)
                    values = a_cost[ia, sa[ib]] + b_cost[ib, sb[ia]]
                    _scatter_min(
                        cost, back, sv, combo[ia, ib], values, np.column_stack([ia, ib])
                    )

            # a node with no center inside and every outside center at least
            # D / eps away is charged as if its clients sat at its center; the
            # charge uses the representative's real distances, not the capped key
            nearest = out.vecs.min(axis=1)
            far = np.isfinite(nearest) & (nearest >= node.diameter / self.eps)
            if inside.counts[0] == 0 and far.any():
                reach = (g.center_offset[node.id][None, :] + out.vecs[far]).min(axis=1)
                cost[0, far] = g.aggregate(node.id, reach)
            else:
                far[:] = False
            self.far[node.id] = far
            self.cost[node.id] = cost
            self.back[node.id] = back

    def run(self) -> "PortalDP":
        self._inside_pass()
        self._outside_pass()
        self._cost_pass()
        if self.truncated:
            logger.warning(
                f"{self.truncated} profile sets truncated to {self.max_states} states"
            )
        return self

    def centers_of(self, node_id: int, row: int, column: int) -> List[int]:
        """Candidate indices opened by the table entry, by backtracking."""
        opened: List[int] = []
        stack = [(node_id, row, column)]
        while stack:
            node_id, row, column = stack.pop()
            node = self.btree.nodes[node_id]
            if self.inside[node_id].counts[row] == 0:
                continue
            if node.is_leaf:
                opened.append(self.geometry.leaf_candidate(node))
                continue
            back = self.back[node_id]
            if len(node.children) == 1:
                child_row = int(back[row, column])
                stack.append((node.children[0], child_row, int(self.s_index[node_id][0][column])))
                continue
            ia, ib = (int(v) for v in back[row, column])
            s_for_a, s_for_b = self.s_index[node_id]
            stack.append((node.children[0], ia, int(s_for_a[column, ib])))
            stack.append((node.children[1], ib, int(s_for_b[column, ia])))
        return sorted(opened)

    def table(self) -> DPTable:
        """The passes' results as per-node configuration tables."""
        tables = DPTable()
        for node in self.btree.nodes:
            inside, out = self.inside[node.id], self.outside[node.id]
            entry = NodeTable(
                node=node.id,
                ell_keys=[tuple(int(v) for v in row) for row in inside.keys],
                counts=inside.counts,
                s_keys=[tuple(int(v) for v in row) for row in out.keys],
                far=self.far[node.id],
                range_count=key_range(*self._grid(node)),
                portals=len(node.portals),
            )
            entry.cost = self.cost[node.id]
            tables[node.id] = entry
        return tables

    def root_entries(self) -> List[Tuple[float, int]]:
        """Finite root entries as (table value, inside profile) pairs, best first."""
        values = self.cost[self.btree.root.id][:, 0]
        rows = np.nonzero(np.isfinite(values))[0]
        return sorted((float(values[r]), int(r)) for r in rows)

    def trace(self, buckets: Sequence[float]) -> Tuple[Tuple[int, int, int], ...]:
        lines = []
        for node in self.btree.nodes:
            cost = self.cost[node.id]
            finite = cost[np.isfinite(cost)]
            best = bucket_of(float(finite.min()), buckets) if finite.size else -1
            lines.append((node.id, int(finite.size), best))
        return tuple(lines)


def solve_dp(
    btree: BinarySplitTree,
    instance: Instance,
    relocation: Relocation,
    eps: float,
    baseline_cost: float,
    k: Optional[int] = None,
) -> DPResult:
    """
    Best portal-respecting solution under tilde-cost with at most k centers.

    Args:
        btree: Binary split tree of a quadtree built on instance.all_points().
        instance: Clients, candidates and objective; must be the instance the
            tree was built on.
        relocation: The relocated client set.
        eps: Accuracy parameter in (0, 1).
        baseline_cost: Positive cost of the baseline; fixes the cost buckets.
        k: Center budget, instance.k by default.

    Returns:
        The solution, its exact portal-respecting tilde-cost and the bucket of
        its table value.

    Raises:
        ParameterError: If eps or baseline_cost is out of range.
        InfeasibleError: If no root entry opens at most k centers.
    """
    buckets = cost_buckets(baseline_cost, eps, instance.n)
    dp = PortalDP(btree, instance, relocation, eps, k=k).run()
    entries = dp.root_entries()
    if not entries:
        raise InfeasibleError(f"no root configuration opens at most {dp.k} centers")

    limit = entries[0][0] * (1.0 + eps) ** 2
    shortlist = [e for e in entries if e[0] <= limit][: settings.DP_ROOT_CANDIDATES]
    root = btree.root.id
    best = None
    seen = set()
    for estimate, row in shortlist:
        centers = tuple(dp.centers_of(root, row, 0))
        if not centers or centers in seen:
            continue
        seen.add(centers)
        exact = _portal_cost(dp.geometry, centers, instance.candidates)
        if best is None or (exact, estimate, centers) < best:
            best = (exact, estimate, centers)
    if best is None:
        raise InfeasibleError("no root configuration opens a center")

    exact, estimate, centers = best
    bucket = bucket_of(estimate, buckets)
    if bucket == len(buckets):
        logger.warning(
            f"table value {estimate:.6g} lies above the last cost bucket {buckets[-1]:.6g}"
        )
    logger.debug(
        f"dp: {len(btree.nodes)} nodes, {len(entries)} root entries, "
        f"{len(shortlist)} re-evaluated, cost {exact:.9g}"
    )
    result = DPResult(
        solution=Solution(center_indices=centers),
        tilde_cost_pr=exact,
        estimate=estimate,
        bucket=bucket,
        bucket_count=len(buckets),
        trace=dp.trace(buckets),
    )
    if settings.DP_TRACE_PATH:
        write_trace(result, settings.DP_TRACE_PATH)
    return result


def write_trace(result: DPResult, path: str) -> None:
    """One line per node: node-id table-size best-bucket."""
    with open(path, "w", encoding="utf-8") as fh:
        for node_id, size, best in result.trace:
            fh.write(f"{node_id} {size} {best}\n")
