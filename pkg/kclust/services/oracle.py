"""
Exact oracles: brute-force discrete optimum and the exhaustive
portal-respecting optimum on a fixed decomposition.
"""

from itertools import combinations, islice
from typing import Iterator, Optional, Tuple

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import comb

from conf import settings
from core.logging_config import get_logger
from exceptions import SizeLimitError
from schemas.instance import Instance, Relocation, Solution
from services.geometry import cost
from services.quadtree import ShiftedQuadtree

logger = get_logger(__name__)

_BLOCK = 4096


def subset_count(m: int, k: int) -> int:
    return int(comb(m, k, exact=True))


def _check_cap(m: int, k: int, cap: Optional[int]) -> int:
    cap = settings.BRUTE_FORCE_CAP if cap is None else cap
    count = subset_count(m, k)
    if count > cap:
        raise SizeLimitError(count, cap)
    return count


def _blocks(m: int, k: int) -> Iterator[np.ndarray]:
    subsets = combinations(range(m), k)
    while True:
        block = np.array(list(islice(subsets, _BLOCK)), dtype=np.int64)
        if block.size == 0:
            return
        yield block.reshape(-1, k)


def _enumerate(reach: np.ndarray, k: int, z: int) -> Tuple[Tuple[int, ...], int]:
    """
    Lexicographically first k-subset of columns minimising
    sum_rows min_{c in subset} reach[row, c]^z.
    """
    weights = np.power(reach, z)
    best_value, best_subset, visited = np.inf, None, 0
    for block in _blocks(reach.shape[1], k):
        values = weights[:, block].min(axis=2).sum(axis=0)
        position = int(np.argmin(values))
        # strict comparison keeps the earliest subset on ties
        if values[position] < best_value:
            best_value, best_subset = values[position], tuple(int(c) for c in block[position])
        visited += len(block)
    return best_subset, visited


def brute_force_opt(instance: Instance, cap: Optional[int] = None) -> Tuple[Solution, float]:
    """
    Globally optimal discrete solution by enumerating all k-subsets in
    lexicographic order.

    Args:
        instance: Instance to solve.
        cap: Maximum number of subsets; settings.BRUTE_FORCE_CAP by default.

    Returns:
        The optimal solution (lexicographically smallest on ties) and its cost.

    Raises:
        SizeLimitError: If C(m, k) exceeds the cap.
    """
    _check_cap(instance.m, instance.k, cap)
    reach = cdist(instance.clients, instance.candidates)
    subset, visited = _enumerate(reach, instance.k, instance.objective_z)
    solution = Solution(center_indices=subset)
    value = cost(instance, solution)
    logger.info(f"brute force visited {visited} subsets, optimum {value:.9g}")
    return solution, value


def portal_reach(
    instance: Instance, tree: ShiftedQuadtree, relocation: Relocation
) -> np.ndarray:
    """
    Matrix of dist(p, p~) + portal distance from p~ to each candidate,
    shape (n, m).
    """
    relocation.check_against(instance)
    shift = np.linalg.norm(instance.clients - relocation.targets, axis=1)
    reach = np.empty((instance.n, instance.m))
    for p, target in enumerate(relocation.targets):
        for c, candidate in enumerate(instance.candidates):
            reach[p, c] = shift[p] + tree.portal_distance(target, candidate)
    return reach


def exhaustive_portal_opt(
    instance: Instance,
    tree: ShiftedQuadtree,
    relocation: Relocation,
    k: Optional[int] = None,
    cap: Optional[int] = None,
) -> Tuple[Solution, float]:
    """
    Minimum over all k-subsets of the portal-respecting tilde-cost, routing
    every relocated client along its shortest portal-respecting path.

    Raises:
        SizeLimitError: If n exceeds settings.EXHAUSTIVE_MAX_CLIENTS or C(m, k)
            exceeds the cap.
    """
    k = instance.k if k is None else k
    if instance.n > settings.EXHAUSTIVE_MAX_CLIENTS:
        raise SizeLimitError(instance.n, settings.EXHAUSTIVE_MAX_CLIENTS, what="clients")
    _check_cap(instance.m, k, cap)
    reach = portal_reach(instance, tree, relocation)
    subset, _ = _enumerate(reach, k, instance.objective_z)
    value = float(np.power(reach[:, list(subset)].min(axis=1), instance.objective_z).sum())
    return Solution(center_indices=subset), value
