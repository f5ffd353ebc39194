"""
Constant-factor baseline: greedy D^z seeding followed by single-swap local
search over the candidate set.
"""

import math
from typing import List, Optional, Tuple

import numpy as np
from scipy.spatial.distance import cdist

from core.logging_config import get_logger
from schemas.instance import Instance, Solution
from schemas.params import BaselineParams
from services.geometry import power_sum

logger = get_logger(__name__)


def _seed_centers(
    instance: Instance, count: int, rng: np.random.Generator
) -> List[int]:
    """
    Pick `count` candidates: sample a client with probability proportional to
    its current distance^z, try the candidates nearest to a few such samples
    and keep the one lowering the potential most.
    """
    clients, candidates, z = instance.clients, instance.candidates, instance.objective_z
    local_trials = 2 + int(math.log(count))
    opened: List[int] = []

    first = int(rng.integers(instance.n))
    nearest = int(np.argmin(cdist(clients[first:first + 1], candidates)[0]))
    opened.append(nearest)
    closest = cdist(clients, candidates[nearest:nearest + 1])[:, 0]

    while len(opened) < count:
        weights = np.power(closest, z)
        potential = weights.sum()
        free = np.setdiff1d(np.arange(instance.m), opened)
        if potential <= 0.0:
            opened.append(int(free[0]))
            continue
        samples = np.searchsorted(np.cumsum(weights), rng.random(local_trials) * potential)
        samples = np.clip(samples, 0, instance.n - 1)
        reach = cdist(clients[samples], candidates[free])
        tries = np.unique(free[np.argmin(reach, axis=1)])
        trial_dist = np.minimum(closest[None, :], cdist(candidates[tries], clients))
        best = int(np.argmin(np.power(trial_dist, z).sum(axis=1)))
        opened.append(int(tries[best]))
        closest = trial_dist[best]
    return opened


def _two_nearest(
    clients: np.ndarray, centers: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    block = cdist(clients, centers)
    order = np.argsort(block, axis=1, kind="stable")
    rows = np.arange(len(clients))
    first = block[rows, order[:, 0]]
    second = block[rows, order[:, 1]] if centers.shape[0] > 1 else np.full(len(clients), np.inf)
    return order[:, 0], first, second


def _local_search(
    instance: Instance, opened: List[int], params: BaselineParams
) -> Tuple[List[int], float]:
    """
    Best-improvement single swaps until no swap lowers the cost by the
    relative threshold or the iteration cap is reached.
    """
    clients, candidates, z = instance.clients, instance.candidates, instance.objective_z
    opened = list(opened)
    k = len(opened)
    max_iterations = params.iterations_per_k * k

    slot, first, second = _two_nearest(clients, candidates[opened])
    current = float(np.power(first, z).sum())

    for iteration in range(max_iterations):
        if current <= 0.0:
            break
        closed = np.setdiff1d(np.arange(instance.m), opened)
        best_value, best_swap = current, None
        for candidate in closed:
            reach = cdist(clients, candidates[candidate:candidate + 1])[:, 0]
            keep = np.power(np.minimum(first, reach), z)
            # clients served by the removed center fall back to min(second, reach)
            loss = np.power(np.minimum(second, reach), z) - keep
            values = keep.sum() + np.bincount(slot, weights=loss, minlength=k)
            out = int(np.argmin(values))
            if values[out] < best_value:
                best_value, best_swap = float(values[out]), (out, int(candidate))
        if best_swap is None or best_value > current * (1.0 - params.improvement_threshold):
            break
        out, candidate = best_swap
        opened[out] = candidate
        slot, first, second = _two_nearest(clients, candidates[opened])
        current = float(np.power(first, z).sum())
        logger.debug(f"swap {iteration}: slot {out} -> candidate {candidate}, cost {current:.6g}")

    return opened, current


def baseline_solve(
    instance: Instance,
    params: Optional[BaselineParams] = None,
    rng_seed: int = 0,
) -> Solution:
    """
    Compute a constant-factor solution with exactly min(k, m) centers.

    Args:
        instance: Instance to solve.
        params: Seeding rounds, iteration cap and improvement threshold.
        rng_seed: Seed of the D^z sampling.

    Returns:
        The cheapest locally optimal solution over all seeding rounds.
    """
    params = params or BaselineParams()
    count = min(instance.k, instance.m)
    if count == instance.m:
        return Solution(center_indices=range(instance.m))

    rng = np.random.default_rng(rng_seed)
    best: Optional[Tuple[float, Tuple[int, ...]]] = None
    for round_index in range(params.seeding_rounds):
        seeded = _seed_centers(instance, count, rng)
        opened, _ = _local_search(instance, seeded, params)
        centers = Solution(center_indices=opened)
        value = power_sum(
            cdist(instance.clients, centers.centers(instance)).min(axis=1),
            instance.objective_z,
        )
        if best is None or (value, centers.center_indices) < best:
            best = (value, centers.center_indices)
        logger.debug(f"baseline round {round_index}: cost {value:.6g}")

    logger.info(f"baseline cost {best[0]:.6g} with {count} centers")
    return Solution(center_indices=best[1])
