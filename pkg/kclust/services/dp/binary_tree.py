from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Tuple

import numpy as np

from exceptions import InternalAssertionError
from services.quadtree import Cell, ShiftedQuadtree


@dataclass(eq=False)
class BinaryNode:
    """
    A node of the binarised decomposition. Cell nodes stand for quadtree
    cells; split nodes group the children of one quadtree cell on one side of
    a split hyperplane and carry the union of their portals.
    """

    id: int
    kind: str
    cell: int
    depth: int
    lo: np.ndarray
    hi: np.ndarray
    portals: np.ndarray
    children: List[int] = field(default_factory=list)
    split_dim: Optional[int] = None
    location: Optional[int] = None

    @property
    def is_leaf(self) -> bool:
        return not self.children

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(self.hi - self.lo))

    @property
    def center(self) -> np.ndarray:
        return (self.lo + self.hi) / 2.0


class BinarySplitTree:
    """
    Binary version of a shifted quadtree: the up to 2^d children of a cell are
    separated by successive hyperplanes along axes 0, 1, ..., d-1. A split
    that would leave one side empty is skipped.
    """

    def __init__(self, tree: ShiftedQuadtree) -> None:
        self.tree = tree
        self.nodes: List[BinaryNode] = []
        self.cell_node = np.full(len(tree.cells), -1, dtype=np.int64)
        self.location_node = np.full(len(tree.locations), -1, dtype=np.int64)
        self._add_cell(tree.root, 0)

    @property
    def root(self) -> BinaryNode:
        return self.nodes[0]

    @property
    def depth(self) -> int:
        return max(node.depth for node in self.nodes)

    def postorder(self) -> Iterator[BinaryNode]:
        # children always receive larger ids than their parent
        return reversed(self.nodes)

    def preorder(self) -> Iterator[BinaryNode]:
        return iter(self.nodes)

    def leaves(self) -> Iterator[BinaryNode]:
        return (node for node in self.nodes if node.is_leaf)

    def _new(self, kind: str, cell: Cell, depth: int, lo, hi, portals) -> BinaryNode:
        node = BinaryNode(
            id=len(self.nodes),
            kind=kind,
            cell=cell.id,
            depth=depth,
            lo=lo,
            hi=hi,
            portals=portals,
        )
        self.nodes.append(node)
        return node

    def _add_cell(self, cell: Cell, depth: int) -> int:
        lo, hi = self.tree.box(cell.depth, cell.index)
        node = self._new("cell", cell, depth, lo, hi, self.tree.portals_of(cell.id))
        self.cell_node[cell.id] = node.id
        if cell.is_leaf:
            if len(cell.members):
                node.location = int(cell.members[0])
                self.location_node[node.location] = node.id
            return node.id
        members = [self.tree.cells[c] for c in cell.children]
        node.children, node.split_dim = self._split(cell, members, 0, depth + 1)
        return node.id

    def _add_group(self, cell: Cell, members: List[Cell], axis: int, depth: int) -> int:
        if len(members) == 1:
            return self._add_cell(members[0], depth)
        boxes = [self.tree.box(m.depth, m.index) for m in members]
        lo = np.min([b[0] for b in boxes], axis=0)
        hi = np.max([b[1] for b in boxes], axis=0)
        portals = np.unique(
            np.vstack([self.tree.portals_of(m.id) for m in members]), axis=0
        )
        node = self._new("split", cell, depth, lo, hi, portals)
        node.children, node.split_dim = self._split(cell, members, axis, depth + 1)
        return node.id

    def _split(
        self, cell: Cell, members: List[Cell], axis: int, depth: int
    ) -> Tuple[List[int], Optional[int]]:
        if len(members) == 1:
            return [self._add_cell(members[0], depth)], None
        for dim in range(axis, self.tree.dimension):
            low = [m for m in members if m.index[dim] == 2 * cell.index[dim]]
            high = [m for m in members if m.index[dim] != 2 * cell.index[dim]]
            if low and high:
                return [
                    self._add_group(cell, low, dim + 1, depth),
                    self._add_group(cell, high, dim + 1, depth),
                ], dim
        raise InternalAssertionError(f"children of cell {cell.id} cannot be separated")


def binarize(tree: ShiftedQuadtree) -> BinarySplitTree:
    """Binary split tree of a materialised quadtree."""
    return BinarySplitTree(tree)
