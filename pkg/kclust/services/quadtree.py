"""
Randomly shifted quadtree with nested portal sets.

Geometry: a level-i cell is an axis-aligned cube of side 2^(i+1)/sqrt(d), so
its diameter is exactly 2^(i+1). The root level L is the smallest level whose
side is at least twice the extent of the point set, and the whole grid
hierarchy is translated by one shift drawn uniformly from [0, side_L / 2)^d.

All cell arithmetic happens in unit coordinates u = (x - origin) / side_L, in
which the cell at depth a = L - i containing x has index floor(u * 2^a).
"""

import math
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial.distance import cdist

from core.logging_config import get_logger
from exceptions import InternalAssertionError, ParameterError, StructuralError
from schemas.instance import as_point_array

logger = get_logger(__name__)

NEVER_CUT = float("-inf")

# Deepest subdivision; unit coordinates times 2^MAX_DEPTH still fit in int64.
MAX_DEPTH = 60

_DEPTHS = np.arange(MAX_DEPTH + 1)
_WIDTHS = 2.0 ** -_DEPTHS
_SCALES = 2.0 ** _DEPTHS


def side_at(level: int, dimension: int) -> float:
    """Side of a level cell: 2^(level+1) / sqrt(d)."""
    return 2.0 ** (level + 1) / math.sqrt(dimension)


def root_level(extent: float, dimension: int) -> int:
    """Smallest level whose cell side is at least 2 * extent."""
    if extent <= 0.0:
        return 0
    level = math.ceil(math.log2(2.0 * extent * math.sqrt(dimension))) - 1
    while side_at(level, dimension) < 2.0 * extent:
        level += 1
    while side_at(level - 1, dimension) >= 2.0 * extent:
        level -= 1
    return level


def portal_divisions(rho: float) -> int:
    """Lattice divisions N = ceil(1/rho) per cell side."""
    return max(1, math.ceil(1.0 / rho - 1e-12))


def boundary_lattice(dimension: int, divisions: int) -> np.ndarray:
    """Integer points of {0..N}^d with at least one coordinate 0 or N."""
    axis = np.arange(divisions + 1, dtype=np.float64)
    grid = np.stack(np.meshgrid(*([axis] * dimension), indexing="ij"), axis=-1)
    grid = grid.reshape(-1, dimension)
    on_boundary = np.any((grid == 0) | (grid == divisions), axis=1)
    return grid[on_boundary]


def portal_bound(dimension: int, rho: float) -> int:
    """Declared per-cell portal bound 2d(ceil(1/rho)+1)^(d-1)."""
    return 2 * dimension * (portal_divisions(rho) + 1) ** (dimension - 1)


class ShiftedGrid:
    """
    The arithmetic part of a decomposition: frame, shift and portal lattice.
    Ball cut levels need nothing more, so Monte-Carlo probes sample grids
    without materialising cells.
    """

    def __init__(
        self,
        dimension: int,
        rho: float,
        top_level: int,
        origin: np.ndarray,
        shift: np.ndarray,
    ) -> None:
        self.dimension = dimension
        self.rho = rho
        self.divisions = portal_divisions(rho)
        self.top_level = top_level
        self.root_side = side_at(top_level, dimension)
        self.origin = np.array(origin, dtype=np.float64)
        self.shift = np.array(shift, dtype=np.float64)
        self.origin.setflags(write=False)
        self.shift.setflags(write=False)
        self._lattice = boundary_lattice(dimension, self.divisions)
        self._portal_cache: Dict[Tuple[int, Tuple[int, ...]], np.ndarray] = {}

    @property
    def portal_count(self) -> int:
        return len(self._lattice)

    def side(self, level: int) -> float:
        return side_at(level, self.dimension)

    def level_of(self, depth: int) -> int:
        return self.top_level - depth

    def unit(self, x) -> np.ndarray:
        return (np.asarray(x, dtype=np.float64) - self.origin) / self.root_side

    def cell_index(self, x, depth: int) -> Tuple[int, ...]:
        """Index of the depth-`depth` cell containing x."""
        return tuple(int(v) for v in np.floor(self.unit(x) * 2.0**depth))

    def cell_of(self, x, level: int) -> Tuple[int, Tuple[int, ...]]:
        """(depth, index) of the level cell containing x."""
        depth = self.top_level - level
        return depth, self.cell_index(x, depth)

    def box(self, depth: int, index: Sequence[int]) -> Tuple[np.ndarray, np.ndarray]:
        """Lower and upper corners of a cell."""
        idx = np.asarray(index, dtype=np.float64)
        width = 2.0**depth
        lo = self.origin + self.root_side * (idx / width)
        hi = self.origin + self.root_side * ((idx + 1.0) / width)
        return lo, hi

    def portal_coordinates(self, depth: int, index: Sequence[int]) -> np.ndarray:
        """
        Boundary lattice of a cell: corner + t * side / N for t in {0..N}^d
        with some t_j in {0, N}. A parent portal lying in a child's closure is
        computed from the same rational, so it is bit-identical to the child's.
        """
        key = (depth, tuple(index))
        cached = self._portal_cache.get(key)
        if cached is not None:
            return cached
        idx = np.asarray(index, dtype=np.float64)
        u = (idx * self.divisions + self._lattice) / (self.divisions * 2.0**depth)
        portals = self.origin + self.root_side * u
        portals.setflags(write=False)
        self._portal_cache[key] = portals
        return portals

    def cut_level_ball(self, x, r: float) -> float:
        """
        Highest level whose grid splits the open ball B(x, r): some grid
        hyperplane of that level lies at distance strictly below r from x.
        Returns NEVER_CUT for r = 0.
        """
        if r <= 0.0:
            return NEVER_CUT
        ux = self.unit(x)
        ur = r / self.root_side
        offset = np.mod(ux[None, :], _WIDTHS[:, None])
        gap = np.minimum(offset, _WIDTHS[:, None] - offset)
        cut = np.any(gap < ur, axis=1)
        if not cut.any():
            return NEVER_CUT
        return float(self.top_level - int(np.argmax(cut)))

    def common_depth(self, p, q) -> int:
        """Deepest depth at which p and q share a cell, -1 if none."""
        ip = np.floor(np.outer(_SCALES, self.unit(p)))
        iq = np.floor(np.outer(_SCALES, self.unit(q)))
        same = np.all(ip == iq, axis=1)
        if same.all():
            return MAX_DEPTH
        return int(np.argmin(same)) - 1


@dataclass(eq=False)
class Cell:
    id: int
    depth: int
    level: int
    index: Tuple[int, ...]
    parent: int
    members: np.ndarray
    children: List[int] = field(default_factory=list)

    @property
    def is_leaf(self) -> bool:
        return not self.children


class ShiftedQuadtree(ShiftedGrid):
    """
    A shifted grid with every non-empty cell materialised down to cells
    holding at most one distinct location. Coincident input points share a
    location and therefore a leaf.
    """

    def __init__(
        self,
        dimension: int,
        rho: float,
        top_level: int,
        origin: np.ndarray,
        shift: np.ndarray,
        points: np.ndarray,
    ) -> None:
        super().__init__(dimension, rho, top_level, origin, shift)
        locations, inverse = np.unique(points, axis=0, return_inverse=True)
        self.locations = locations
        self.point_location = np.asarray(inverse).reshape(-1)
        self.cells: List[Cell] = []
        self._lookup: Dict[Tuple[int, Tuple[int, ...]], int] = {}
        self._location_ids = {
            np.ascontiguousarray(loc).tobytes(): i for i, loc in enumerate(locations)
        }
        self.location_leaf = np.full(len(locations), -1, dtype=np.int64)
        self._materialize()

    def _materialize(self) -> None:
        unit = (self.locations - self.origin) / self.root_side
        root = Cell(
            id=0,
            depth=0,
            level=self.top_level,
            index=(0,) * self.dimension,
            parent=-1,
            members=np.arange(len(self.locations)),
        )
        self.cells.append(root)
        self._lookup[(0, root.index)] = 0
        stack = [0]
        while stack:
            cell = self.cells[stack.pop()]
            if len(cell.members) <= 1:
                if len(cell.members) == 1:
                    self.location_leaf[cell.members[0]] = cell.id
                continue
            depth = cell.depth + 1
            if depth > MAX_DEPTH:
                raise InternalAssertionError(
                    f"locations not separated after {MAX_DEPTH} subdivisions"
                )
            indices = np.floor(unit[cell.members] * 2.0**depth).astype(np.int64)
            keys, inverse = np.unique(indices, axis=0, return_inverse=True)
            inverse = np.asarray(inverse).reshape(-1)
            for group, key in enumerate(keys):
                child = Cell(
                    id=len(self.cells),
                    depth=depth,
                    level=self.top_level - depth,
                    index=tuple(int(v) for v in key),
                    parent=cell.id,
                    members=cell.members[inverse == group],
                )
                self.cells.append(child)
                self._lookup[(depth, child.index)] = child.id
                cell.children.append(child.id)
                stack.append(child.id)

    @property
    def root(self) -> Cell:
        return self.cells[0]

    def cell(self, cell_id: int) -> Cell:
        """
        Raises:
            StructuralError: For an unknown cell id.
        """
        if not isinstance(cell_id, (int, np.integer)) or not 0 <= cell_id < len(self.cells):
            raise StructuralError(f"unknown cell {cell_id!r}")
        return self.cells[int(cell_id)]

    def lookup(self, depth: int, index: Sequence[int]) -> Optional[int]:
        return self._lookup.get((depth, tuple(index)))

    def cell_box(self, cell_id: int) -> Tuple[np.ndarray, np.ndarray]:
        cell = self.cell(cell_id)
        return self.box(cell.depth, cell.index)

    def location_id(self, point) -> Optional[int]:
        """Location index of an exact input point, else None."""
        key = np.ascontiguousarray(point, dtype=np.float64).tobytes()
        return self._location_ids.get(key)

    def deepest_cell(self, x) -> Optional[int]:
        """Deepest materialised cell containing x, None outside the root."""
        if any(self.cell_index(x, 0)):
            return None
        current = self.root
        while current.children:
            child = self.lookup(current.depth + 1, self.cell_index(x, current.depth + 1))
            if child is None:
                break
            current = self.cells[child]
        return current.id

    def leaf_of(self, x) -> Optional[int]:
        cell_id = self.deepest_cell(x)
        if cell_id is None or not self.cells[cell_id].is_leaf:
            return None
        return cell_id

    def chain(self, cell_id: int) -> Iterator[Cell]:
        """The cell and its ancestors up to the root."""
        while cell_id >= 0:
            cell = self.cells[cell_id]
            yield cell
            cell_id = cell.parent

    def portals_of(self, cell_id: int) -> np.ndarray:
        """
        Portal set of a materialised cell.

        Raises:
            StructuralError: For an unknown cell id.
        """
        cell = self.cell(cell_id)
        return self.portal_coordinates(cell.depth, cell.index)

    def on_boundary(self, cell_id: int, x) -> bool:
        lo, hi = self.cell_box(cell_id)
        x = np.asarray(x, dtype=np.float64)
        inside = np.all(x >= lo) and np.all(x <= hi)
        return bool(inside and (np.any(x == lo) or np.any(x == hi)))

    def cut_level_pair(self, p, q) -> float:
        """
        Level of the smallest cell containing both p and q; NEVER_CUT when
        they share a leaf.
        """
        p = np.asarray(p, dtype=np.float64)
        q = np.asarray(q, dtype=np.float64)
        if np.array_equal(p, q):
            return NEVER_CUT
        leaf = self.leaf_of(p)
        if leaf is not None and leaf == self.leaf_of(q):
            return NEVER_CUT
        return float(self.top_level - max(self.common_depth(p, q), 0))

    def _chain_depths(self, x, split: int) -> range:
        deepest = self.deepest_cell(x)
        bottom = self.cells[deepest].depth if deepest is not None else split
        return range(max(bottom, split), split - 1, -1)

    def _crossing_layers(self, p, q, level: float) -> Tuple[List[np.ndarray], List[np.ndarray]]:
        split = self.top_level - int(level) + 1
        outward = [
            (depth, self.cell_index(p, depth)) for depth in self._chain_depths(p, split)
        ]
        inward = [
            (depth, self.cell_index(q, depth)) for depth in self._chain_depths(q, split)
        ]
        return outward, inward[::-1]

    def _exit_point(self, depth: int, index, start: np.ndarray, end: np.ndarray) -> np.ndarray:
        lo, hi = self.box(depth, index)
        direction = end - start
        t_exit = 1.0
        for j in range(self.dimension):
            if direction[j] > 0:
                t_exit = min(t_exit, (hi[j] - start[j]) / direction[j])
            elif direction[j] < 0:
                t_exit = min(t_exit, (lo[j] - start[j]) / direction[j])
        return start + max(t_exit, 0.0) * direction

    def portal_path(self, p, q) -> Tuple[float, np.ndarray]:
        """
        Portal-respecting path from p to q: in every cell of p's chain below
        the separating cell, cross the boundary at the portal nearest to the
        point where segment pq leaves that cell; symmetrically on q's side.

        Returns:
            (length, waypoints) with waypoints[0] = p and waypoints[-1] = q.
        """
        p = np.asarray(p, dtype=np.float64)
        q = np.asarray(q, dtype=np.float64)
        level = self.cut_level_pair(p, q)
        if level == NEVER_CUT:
            path = np.vstack([p, q])
            return float(np.linalg.norm(q - p)), path
        outward, inward = self._crossing_layers(p, q, level)
        waypoints = [p]
        for depth, index in outward:
            crossing = self._exit_point(depth, index, p, q)
            portals = self.portal_coordinates(depth, index)
            waypoints.append(portals[np.argmin(np.linalg.norm(portals - crossing, axis=1))])
        for depth, index in inward:
            crossing = self._exit_point(depth, index, q, p)
            portals = self.portal_coordinates(depth, index)
            waypoints.append(portals[np.argmin(np.linalg.norm(portals - crossing, axis=1))])
        waypoints.append(q)
        path = np.vstack(waypoints)
        length = float(np.sum(np.linalg.norm(np.diff(path, axis=0), axis=1)))
        return length, path

    def portal_distance(self, p, q) -> float:
        """
        Length of the shortest portal-respecting path from p to q: a layered
        shortest path through one portal of every cell of p's chain below the
        separating cell, then one portal of every cell of q's chain.
        """
        p = np.asarray(p, dtype=np.float64)
        q = np.asarray(q, dtype=np.float64)
        level = self.cut_level_pair(p, q)
        if level == NEVER_CUT:
            return float(np.linalg.norm(q - p))
        outward, inward = self._crossing_layers(p, q, level)
        layers = [self.portal_coordinates(d, i) for d, i in outward + inward]
        reach = np.linalg.norm(layers[0] - p, axis=1)
        for previous, current in zip(layers, layers[1:]):
            reach = np.min(reach[:, None] + cdist(previous, current), axis=0)
        return float(np.min(reach + np.linalg.norm(layers[-1] - q, axis=1)))


def _frame(points: np.ndarray, rho: float, rng_seed: int, shift=None):
    if not 0.0 < rho < 1.0:
        raise ParameterError("rho", f"must lie in (0, 1), got {rho}")
    dimension = points.shape[1]
    lo = points.min(axis=0)
    extent = float(np.max(points.max(axis=0) - lo))
    top_level = root_level(extent, dimension)
    half = side_at(top_level, dimension) / 2.0
    if shift is None:
        shift = np.random.default_rng(rng_seed).uniform(0.0, half, size=dimension)
    else:
        shift = np.asarray(shift, dtype=np.float64)
        if shift.shape != (dimension,):
            raise StructuralError(f"shift has shape {shift.shape}, expected ({dimension},)")
        if np.any(shift < 0.0) or np.any(shift >= half):
            raise ParameterError("shift", f"coordinates must lie in [0, {half})")
    return dimension, top_level, lo - shift, shift


def sample_grid(points, rho: float, rng_seed: int, shift=None) -> ShiftedGrid:
    """The shifted frame build() would use, without materialising cells."""
    pts = as_point_array(points)
    dimension, top_level, origin, shift = _frame(pts, rho, rng_seed, shift)
    return ShiftedGrid(dimension, rho, top_level, origin, shift)


def build(points, rho: float, rng_seed: int, shift=None) -> ShiftedQuadtree:
    """
    Build the randomly shifted quadtree of a point set.

    Args:
        points: Coordinates, shape (count, d); duplicates allowed.
        rho: Portal spacing in (0, 1).
        rng_seed: Seed of the shift; equal seeds give identical trees.
        shift: Explicit shift in [0, side_L / 2)^d instead of a random one.

    Raises:
        ParameterError: If rho or the shift is out of range.
    """
    pts = as_point_array(points)
    dimension, top_level, origin, shift = _frame(pts, rho, rng_seed, shift)
    tree = ShiftedQuadtree(dimension, rho, top_level, origin, shift, pts)
    logger.debug(
        f"quadtree: L={top_level}, {len(tree.cells)} cells, "
        f"{len(tree.locations)} locations, {tree.portal_count} portals per cell"
    )
    return tree


def dump_tree(tree: ShiftedQuadtree) -> str:
    """One line per cell: level id parent min-corner side n-points n-portals."""
    lines = []
    for cell in tree.cells:
        lo, _ = tree.box(cell.depth, cell.index)
        corner = " ".join(format(v, ".17g") for v in lo)
        lines.append(
            f"{cell.level} {cell.id} {cell.parent} {corner} "
            f"{format(tree.side(cell.level), '.17g')} {len(cell.members)} {tree.portal_count}"
        )
    return "\n".join(lines) + "\n"
