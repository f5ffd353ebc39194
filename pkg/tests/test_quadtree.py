import math

import numpy as np
import pytest

from exceptions import ParameterError, StructuralError
from services.quadtree import (
    NEVER_CUT,
    build,
    dump_tree,
    portal_bound,
    root_level,
    sample_grid,
    side_at,
)


def random_points(seed, count=40, d=2, box=20.0):
    return np.random.default_rng(seed).uniform(0.0, box, size=(count, d))


def scan_cut_level(grid, x, r):
    """Walk the levels top-down and test every axis for a hyperplane within r."""
    x = np.asarray(x, dtype=float)
    for depth in range(0, 50):
        width = grid.root_side / 2.0**depth
        below = np.floor((x - grid.origin - r * (1 - 1e-12)) / width)
        above = np.floor((x - grid.origin + r * (1 - 1e-12)) / width)
        if np.any(below != above):
            return float(grid.top_level - depth)
    return NEVER_CUT


def path_divergence(tree, p, q):
    """Level of the deepest common cell found by walking both leaf chains."""
    chain_p = {(c.depth, c.index) for c in tree.chain(tree.leaf_of(p))}
    chain_q = [(c.depth, c.index) for c in tree.chain(tree.leaf_of(q))]
    depth = max(d for d, i in chain_q if (d, i) in chain_p)
    return float(tree.top_level - depth)


def test_root_level_is_smallest_level_twice_the_extent():
    for d in (1, 2, 3):
        for extent in (0.5, 1.0, 7.3, 1000.0):
            level = root_level(extent, d)
            assert side_at(level, d) >= 2 * extent
            assert side_at(level - 1, d) < 2 * extent


def test_single_point_is_one_leaf():
    tree = build([[1.0, 2.0]], 0.25, 0)
    assert len(tree.cells) == 1
    assert tree.root.is_leaf
    assert tree.cut_level_pair([1.0, 2.0], [1.0, 2.0]) == NEVER_CUT


def test_hand_traced_tree_with_zero_shift():
    points = [[0.25, 0.25], [0.75, 0.75]]
    tree = build(points, 0.5, 0, shift=np.zeros(2))
    assert tree.top_level == 0
    assert len(tree.root.members) == 2
    # one depth-1 cell holds both points and splits into two leaves
    assert len(tree.root.children) == 1
    middle = tree.cells[tree.root.children[0]]
    assert len(middle.children) == 2
    assert len(tree.cells) == 4
    assert tree.cut_level_pair(*np.asarray(points)) == -1.0


def test_sibling_children_of_the_root_are_cut_at_the_top():
    tree = build([[0.0], [1.0]], 0.5, 0, shift=[0.9])
    assert tree.top_level == 0
    assert len(tree.root.children) == 2
    assert tree.cut_level_pair([0.0], [1.0]) == tree.top_level


def test_determinism():
    points = random_points(1)
    assert dump_tree(build(points, 0.2, 5)) == dump_tree(build(points, 0.2, 5))
    assert not np.array_equal(build(points, 0.2, 5).shift, build(points, 0.2, 6).shift)


def test_dump_tree_lists_every_cell():
    tree = build(random_points(2, count=10), 0.25, 3)
    lines = dump_tree(tree).splitlines()
    assert len(lines) == len(tree.cells)
    assert lines[0].split()[:3] == [str(tree.top_level), "0", "-1"]


@pytest.mark.parametrize("rho", [0.0, 1.0, -0.1, 2.0])
def test_rho_out_of_range(rho):
    with pytest.raises(ParameterError):
        build([[0.0, 0.0], [1.0, 1.0]], rho, 0)


def test_shift_out_of_range():
    with pytest.raises(ParameterError):
        build([[0.0], [1.0]], 0.5, 0, shift=[5.0])


def test_cut_level_ball_limits():
    points = random_points(3)
    grid = sample_grid(points, 0.25, 0)
    assert grid.cut_level_ball(points[0], 0.0) == NEVER_CUT
    assert grid.cut_level_ball(points[0], 2.0 ** (grid.top_level + 1)) == grid.top_level


def test_cut_level_ball_agrees_with_level_scan():
    rng = np.random.default_rng(4)
    points = random_points(4, d=3)
    for seed in range(20):
        grid = sample_grid(points, 0.25, seed)
        x = rng.uniform(0.0, 20.0, size=3)
        r = float(rng.uniform(0.01, 5.0))
        assert grid.cut_level_ball(x, r) == scan_cut_level(grid, x, r)


def test_cut_level_pair_agrees_with_path_walk():
    rng = np.random.default_rng(5)
    points = random_points(5)
    tree = build(points, 0.25, 9)
    for _ in range(50):
        i, j = rng.choice(len(points), size=2, replace=False)
        assert tree.cut_level_pair(points[i], points[j]) == path_divergence(
            tree, points[i], points[j]
        )


def test_portal_count_bound():
    tree = build(random_points(6), 0.5, 0)
    assert tree.portal_count <= portal_bound(2, 0.5) == 12
    for cell in tree.cells:
        assert len(tree.portals_of(cell.id)) <= 12


def test_portals_lie_on_the_boundary():
    tree = build(random_points(7, count=15), 0.25, 1)
    for cell in tree.cells:
        for portal in tree.portals_of(cell.id):
            assert tree.on_boundary(cell.id, portal)


def test_child_portals_contain_parent_portals_in_closure():
    for seed in range(3):
        tree = build(random_points(8 + seed, count=20), 0.25, seed)
        for cell in tree.cells[1:]:
            lo, hi = tree.cell_box(cell.id)
            child = tree.portals_of(cell.id)
            for portal in tree.portals_of(cell.parent):
                if np.all(portal >= lo) and np.all(portal <= hi):
                    assert np.any(np.all(np.isclose(child, portal, rtol=0, atol=1e-12), axis=1))


def test_unknown_cell():
    tree = build(random_points(9, count=5), 0.25, 0)
    with pytest.raises(StructuralError):
        tree.cell(len(tree.cells))
    with pytest.raises(StructuralError):
        tree.portals_of(-1)


def test_portal_path_inside_one_leaf():
    d = 2
    shift = np.full(d, side_at(4, d) / 4)
    tree = build([[0.0, 0.0], [8.0, 8.0]], 0.25, 0, shift=shift)
    p, q = np.array([0.0, 0.0]), np.array([0.01, 0.01])
    assert tree.leaf_of(p) == tree.leaf_of(q)
    length, path = tree.portal_path(p, q)
    assert length == pytest.approx(float(np.linalg.norm(q - p)))
    assert len(path) == 2
    assert tree.portal_path(p, p)[0] == 0.0


def test_portal_path_detour_bound():
    rho = 0.25
    points = random_points(10, count=60)
    tree = build(points, rho, 2)
    rng = np.random.default_rng(10)
    for _ in range(400):
        i, j = rng.choice(len(points), size=2, replace=False)
        p, q = points[i], points[j]
        length, path = tree.portal_path(p, q)
        level = tree.cut_level_pair(p, q)
        straight = float(np.linalg.norm(p - q))
        assert np.array_equal(path[0], p) and np.array_equal(path[-1], q)
        assert length - straight <= rho * 2.0 ** (level + 2) + 1e-9
        assert straight - 1e-9 <= tree.portal_distance(p, q) <= length + 1e-9


def test_pair_cut_frequency_small_sweep():
    d, seeds = 2, 400
    counts = {}
    for seed in range(seeds):
        tree = build([[0.0, 0.0], [1.0, 0.0]], 0.25, seed)
        level = tree.cut_level_pair([0.0, 0.0], [1.0, 0.0])
        counts[level] = counts.get(level, 0) + 1
    for level, hits in counts.items():
        freq = hits / seeds
        sigma = math.sqrt(freq * (1 - freq) / seeds)
        assert freq <= d / 2.0**level + 3 * sigma + 1e-12


@pytest.mark.slow
def test_pair_cut_frequency_ten_thousand_seeds():
    d, seeds = 2, 10_000
    counts = {}
    for seed in range(seeds):
        tree = build([[0.0, 0.0], [1.0, 0.0]], 0.25, seed)
        level = tree.cut_level_pair([0.0, 0.0], [1.0, 0.0])
        counts[level] = counts.get(level, 0) + 1
    for level, hits in counts.items():
        freq = hits / seeds
        sigma = math.sqrt(freq * (1 - freq) / seeds)
        assert freq <= d / 2.0**level + 3 * sigma + 1e-12
