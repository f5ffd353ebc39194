"""
Distances, clustering costs, normalisation and continuous-to-discrete
candidate generation.
"""

import math
from typing import Optional, Tuple

import numpy as np
from scipy.spatial import ConvexHull, QhullError, cKDTree
from scipy.spatial.distance import cdist, pdist

from core.logging_config import get_logger
from exceptions import DegenerateInstanceError, DomainError, ParameterError, StructuralError
from schemas.instance import Instance, Relocation, Solution, as_point_array
from schemas.reports import NormalizationReport

logger = get_logger(__name__)

# Above this many distinct points the diameter goes through the convex hull.
_EXACT_DIAMETER_LIMIT = 2048


def squared_distance(p, q) -> float:
    """
    Squared Euclidean distance between two points.

    Raises:
        StructuralError: If the dimensions differ.
    """
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise StructuralError(f"dimension mismatch: {p.shape} vs {q.shape}")
    diff = p - q
    return float(np.dot(diff, diff))


def distance(p, q) -> float:
    return math.sqrt(squared_distance(p, q))


def distances_to_centers(points: np.ndarray, centers: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Nearest center of every point.

    Args:
        points: Array of shape (n, d).
        centers: Array of shape (k, d), k >= 1.

    Returns:
        (index, distance) arrays of length n; ties go to the lowest index.

    Raises:
        DomainError: If there is no center.
        StructuralError: On a dimension mismatch.
    """
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    centers = np.atleast_2d(np.asarray(centers, dtype=np.float64))
    if centers.shape[0] == 0 or centers.size == 0:
        raise DomainError("cost of an empty center set is undefined")
    if points.shape[1] != centers.shape[1]:
        raise StructuralError(
            f"dimension mismatch: points have d={points.shape[1]}, centers d={centers.shape[1]}"
        )
    block = cdist(points, centers)
    # argmin returns the first minimum, i.e. the lowest center index
    index = np.argmin(block, axis=1)
    return index, block[np.arange(len(points)), index]


def power_sum(values: np.ndarray, z: int) -> float:
    """Compensated sum of values**z."""
    return math.fsum(np.power(values, z).tolist())


def _opened(instance: Instance, solution: Solution) -> np.ndarray:
    if solution.size == 0:
        raise DomainError("cost of an empty center set is undefined")
    if solution.center_indices[-1] >= instance.m:
        raise StructuralError(
            f"center index {solution.center_indices[-1]} out of range for m={instance.m}"
        )
    return np.asarray(solution.center_indices)


def nearest_center(instance: Instance, solution: Solution) -> Tuple[np.ndarray, np.ndarray]:
    """
    For every client, the candidate index of its closest opened center and the
    distance to it (A(p) and A_p when the solution is the baseline).
    """
    opened = _opened(instance, solution)
    index, dist = distances_to_centers(instance.clients, instance.candidates[opened])
    return opened[index], dist


def cost(instance: Instance, solution: Solution) -> float:
    """
    Sum over clients of the z-th power of the distance to the nearest opened
    center. Any stored assignment is ignored.

    Raises:
        DomainError: If the solution opens no center.
    """
    _, dist = nearest_center(instance, solution)
    return power_sum(dist, instance.objective_z)


def tilde_cost(instance: Instance, relocation: Relocation, solution: Solution) -> float:
    """
    Sum over clients of (dist(p, p~) + dist(p~, S))^z.

    Raises:
        DomainError: If the solution opens no center.
        StructuralError: If the relocation does not match the clients.
    """
    opened = _opened(instance, solution)
    relocation.check_against(instance)
    shift = np.sqrt(np.sum((instance.clients - relocation.targets) ** 2, axis=1))
    _, reach = distances_to_centers(relocation.targets, instance.candidates[opened])
    return power_sum(shift + reach, instance.objective_z)


def assign(instance: Instance, solution: Solution) -> Solution:
    """Copy of the solution carrying the nearest-center assignment."""
    nearest, _ = nearest_center(instance, solution)
    return Solution(
        center_indices=solution.center_indices,
        assignment=tuple(int(c) for c in nearest),
    )


def minimum_distance(points: np.ndarray) -> float:
    """
    Smallest distance between two distinct points.

    Raises:
        DegenerateInstanceError: If fewer than two distinct points exist.
    """
    unique = np.unique(np.asarray(points, dtype=np.float64), axis=0)
    if len(unique) < 2:
        raise DegenerateInstanceError("all points are identical")
    dist, _ = cKDTree(unique).query(unique, k=2)
    return float(dist[:, 1].min())


def diameter(points: np.ndarray) -> float:
    """
    Largest pairwise distance. Large inputs are reduced to their convex hull
    vertices; degenerate hulls fall back to the bounding-box diagonal.
    """
    unique = np.unique(np.asarray(points, dtype=np.float64), axis=0)
    if len(unique) < 2:
        return 0.0
    if len(unique) > _EXACT_DIAMETER_LIMIT and unique.shape[1] > 1:
        try:
            unique = unique[ConvexHull(unique).vertices]
        except QhullError:
            extent = unique.max(axis=0) - unique.min(axis=0)
            return float(np.linalg.norm(extent))
    if unique.shape[1] == 1:
        return float(unique.max() - unique.min())
    return float(pdist(unique).max())


def normalize(instance: Instance) -> Tuple[Instance, NormalizationReport]:
    """
    Scale clients and candidates jointly so that the minimum distance between
    distinct points is exactly 1.

    Returns:
        The scaled instance and a report carrying the scale factor; a cost c
        of the scaled instance corresponds to c / scale**z originally.

    Raises:
        DegenerateInstanceError: If all points coincide.
    """
    points = instance.all_points()
    min_dist = minimum_distance(points)
    scale = 1.0 / min_dist
    if scale == 1.0:
        scaled = instance
    else:
        scaled = Instance(
            dimension=instance.dimension,
            clients=instance.clients * scale,
            candidates=instance.candidates * scale,
            k=instance.k,
            objective_z=instance.objective_z,
        )
    report = NormalizationReport(
        scale=scale,
        min_distance=min_dist,
        diameter=diameter(scaled.all_points()),
    )
    logger.debug(f"normalised with scale {scale:.6g}, diameter {report.diameter:.6g}")
    return scaled, report


def denormalize_cost(value: float, scale: float, z: int) -> float:
    """Map a cost of the scaled instance back to the caller's units."""
    return value / scale**z


def lattice_offsets(dimension: int, radius: float) -> np.ndarray:
    """Integer vectors of Euclidean norm at most radius, shape (count, d)."""
    reach = int(math.floor(radius))
    axis = np.arange(-reach, reach + 1)
    grid = np.stack(np.meshgrid(*([axis] * dimension), indexing="ij"), axis=-1)
    grid = grid.reshape(-1, dimension)
    return grid[np.sum(grid * grid, axis=1) <= radius * radius + 1e-9]


def candidate_count_bound(n: int, dimension: int, eps: float, scales: int) -> int:
    """Upper bound on the size of generate_candidates' output."""
    per_scale = len(lattice_offsets(dimension, math.sqrt(dimension) / eps))
    return n + n * scales * per_scale


def candidate_scales(clients: np.ndarray) -> Tuple[float, int]:
    """
    Base spacing (minimum distinct-client distance) and number of dyadic
    scales used by generate_candidates.
    """
    unique = np.unique(clients, axis=0)
    if len(unique) < 2:
        return 0.0, 0
    base = minimum_distance(unique)
    spread = diameter(unique) / base
    return base, int(math.ceil(math.log2(max(spread, 1.0)))) + 1


def generate_candidates(clients, eps: float, chunk: Optional[int] = None) -> np.ndarray:
    """
    Discretise the continuous problem: every client, plus for each client and
    each scale j an axis-aligned grid of spacing eps * delta * 2^j / sqrt(d)
    clipped to the ball B(p, delta * 2^j), where delta is the minimum distance
    between distinct clients and j runs up to ceil(log2(diameter / delta)).

    Points that fall on the same cell of a grid of side eps * delta / (4 sqrt(d))
    are merged, keeping the first one emitted. Clients are emitted first, so
    they always survive.

    Args:
        clients: Client coordinates, shape (n, d).
        eps: Accuracy parameter in (0, 1).
        chunk: Number of clients expanded per batch.

    Returns:
        Candidate coordinates, shape (m, d).

    Raises:
        ParameterError: If eps is outside (0, 1).
    """
    if not 0.0 < eps < 1.0:
        raise ParameterError("eps", f"must lie in (0, 1), got {eps}")
    pts = as_point_array(clients, "clients")
    n, dim = pts.shape
    base, scales = candidate_scales(pts)
    if scales == 0:
        return pts.copy()

    offsets = lattice_offsets(dim, math.sqrt(dim) / eps).astype(np.float64)
    resolution = eps * base / (4.0 * math.sqrt(dim))
    chunk = chunk or max(1, 200_000 // max(len(offsets), 1))

    blocks = [pts]
    for j in range(scales):
        spacing = eps * base * 2.0**j / math.sqrt(dim)
        for start in range(0, n, chunk):
            batch = pts[start:start + chunk]
            blocks.append((batch[:, None, :] + spacing * offsets[None, :, :]).reshape(-1, dim))
    emitted = np.vstack(blocks)

    keys = np.floor(emitted / resolution + 0.5).astype(np.int64)
    _, first = np.unique(keys, axis=0, return_index=True)
    out = emitted[np.sort(first)]
    logger.info(f"generated {len(out)} candidates for {n} clients over {scales} scales")
    return out
