import numpy as np
import pytest

from conftest import make_instance, random_instance
from exceptions import ParameterError
from schemas.instance import Solution
from schemas.params import CutParams
from schemas.reports import BadCutReport
from services.badcut import (
    badcut_report,
    budget,
    budgets,
    classify_badly_cut,
    detour,
    relocate,
    relocation_cost,
    tau,
)
from services.baseline import baseline_solve
from services.geometry import nearest_center
from services.quadtree import NEVER_CUT, build, sample_grid


class FixedCut:
    """Decomposition stub cutting every ball of positive radius at one level."""

    def __init__(self, level):
        self.level = level

    def cut_level_ball(self, x, r):
        return NEVER_CUT if r <= 0 else self.level


@pytest.mark.parametrize("d, eps, expected", [(4, 1 / 8, 5.0), (1, 1 / 2, 1.0), (2, 1 / 4, 3.0)])
def test_tau(d, eps, expected):
    assert tau(eps, d) == pytest.approx(expected)


def test_tau_rejects_eps_one():
    with pytest.raises(ParameterError):
        tau(1.0, 1)


def test_classify_badly_cut_threshold():
    params = CutParams(eps=0.25, dimension=2)
    # threshold log2(3) + 3 ~ 4.585
    assert classify_badly_cut(FixedCut(5), np.zeros(2), 1.0, params)
    assert not classify_badly_cut(FixedCut(4), np.zeros(2), 1.0, params)
    assert not classify_badly_cut(FixedCut(99), np.zeros(2), 0.0, params)


def test_threshold_uses_the_ball_built_on_the_distance():
    # A_p = S_p = 1, tau = 3: B(p, 3) is badly cut from log2(3) + 3 ~ 4.585 on,
    # B(p, 6) and B(A(p), 6) from log2(6) + 3 ~ 5.585 on
    instance = make_instance([[0.0, 0.0]], [[1.0, 0.0], [-1.0, 0.0]], k=1)
    params = CutParams(eps=0.25, dimension=2)
    baseline, reference = Solution(center_indices=[0]), Solution(center_indices=[1])

    report = badcut_report(FixedCut(5), instance, baseline, params, reference=reference)
    assert report.point_flags == (True,)
    assert report.center_flags == (False,)
    at_five = budget(FixedCut(5), instance, 0, baseline, reference, params)
    assert at_five.b1 == 0.0
    assert at_five.b2 == pytest.approx(8 * 6 + 64)
    assert at_five.b3 == pytest.approx(8 * 6 + 64)
    assert at_five.flagged

    report = badcut_report(FixedCut(6), instance, baseline, params, reference=reference)
    assert report.center_flags == (True,)
    at_six = budget(FixedCut(6), instance, 0, baseline, reference, params)
    assert at_six.b1 == 0.0
    assert at_six.b2 == pytest.approx(36 * 2 + 16 * 2)
    assert at_six.b3 == 0.0

    report = badcut_report(FixedCut(4), instance, baseline, params)
    assert report.point_flags == (False,)


def test_relocation_flag_patterns():
    instance = random_instance(2, n=8, m=5, k=2)
    baseline = baseline_solve(instance, rng_seed=0)
    anchors, reach = nearest_center(instance, baseline)

    none = relocate(instance, baseline, BadCutReport(point_flags=(False,) * 8))
    assert np.array_equal(none.targets, instance.clients)
    assert relocation_cost(instance, none) == 0.0

    every = relocate(instance, baseline, BadCutReport(point_flags=(True,) * 8))
    assert np.array_equal(every.targets, instance.candidates[anchors])
    assert every.sources == tuple(int(a) for a in anchors)

    flags = (True, False) * 4
    mixed = relocate(instance, baseline, BadCutReport(point_flags=flags))
    expected = sum(r**2 for r, f in zip(reach, flags) if f)
    assert relocation_cost(instance, mixed) == pytest.approx(expected, rel=1e-12)


def test_detour_formula():
    params = CutParams(eps=0.25, dimension=2)
    assert detour(FixedCut(2), np.zeros(2), 3.0, params, 2) == pytest.approx(4.0)
    assert detour(FixedCut(2), np.zeros(2), 3.0, params, 1) == pytest.approx(1.0)
    assert detour(FixedCut(NEVER_CUT), np.zeros(2), 3.0, params, 2) == 0.0


def test_budget_vanishes_at_a_shared_center():
    instance = make_instance([[1.0, 1.0]], [[1.0, 1.0], [4.0, 4.0]], k=1)
    params = CutParams(eps=0.25, dimension=2)
    breakdown = budget(FixedCut(7), instance, 0, Solution(center_indices=[0]),
                       Solution(center_indices=[0]), params)
    assert breakdown.total == 0.0


def test_budget_fallback_branch():
    # A_p = S_p = 1 and every ball badly cut: only the b2 fallback remains
    instance = make_instance([[0.0, 0.0]], [[1.0, 0.0], [-1.0, 0.0]], k=1)
    params = CutParams(eps=0.25, dimension=2)
    breakdown = budget(FixedCut(100), instance, 0, Solution(center_indices=[0]),
                       Solution(center_indices=[1]), params)
    assert breakdown.b1 == 0.0
    assert breakdown.b2 == pytest.approx(36 * 2 + 16 * 2)
    assert breakdown.b3 == 0.0
    assert breakdown.flagged

    params_k_median = CutParams(eps=0.25, dimension=2)
    linear = budget(FixedCut(100), instance, 0, Solution(center_indices=[0]),
                    Solution(center_indices=[1]), params_k_median, z=1)
    assert linear.b2 == pytest.approx(3 + 2)


def test_budget_detour_branches():
    instance = make_instance([[0.0, 0.0]], [[1.0, 0.0], [-1.0, 0.0]], k=1)
    params = CutParams(eps=0.25, dimension=2)
    tree = FixedCut(1)
    breakdown = budget(tree, instance, 0, Solution(center_indices=[0]),
                       Solution(center_indices=[1]), params)
    # b1 on B(p, 3), b2 on B(p, 6), b3 on B(A(p), 6), all cut at level 1
    assert breakdown.b1 == pytest.approx(0.5 * 3 + 0.25)
    assert breakdown.b2 == pytest.approx(0.5 * 6 + 0.25)
    assert breakdown.b3 == pytest.approx(0.5 * 6 + 0.25)
    assert not breakdown.flagged


def test_badcut_report_on_a_real_tree():
    instance = random_instance(3, n=10, m=6, k=2)
    baseline = baseline_solve(instance, rng_seed=0)
    tree = build(instance.all_points(), 0.2, 4)
    params = CutParams(eps=0.3, dimension=2)
    report = badcut_report(tree, instance, baseline, params, reference=baseline)
    assert len(report.point_flags) == instance.n
    assert len(report.center_flags) == baseline.size
    assert 0 <= report.badly_cut_clients <= instance.n
    assert len(budgets(tree, instance, baseline, baseline, params)) == instance.n


@pytest.mark.slow
def test_badly_cut_frequency_is_at_most_eps():
    eps = 0.25
    instance = random_instance(5, n=6, m=4, k=2)
    baseline = baseline_solve(instance, rng_seed=0)
    params = CutParams(eps=eps, dimension=2)
    _, reach = nearest_center(instance, baseline)
    seeds = 10_000
    hits = np.zeros(instance.n)
    for seed in range(seeds):
        grid = sample_grid(instance.all_points(), params.rho, seed)
        for p, a_p in enumerate(reach):
            hits[p] += classify_badly_cut(grid, instance.clients[p], a_p, params)
    freq = hits / seeds
    sigma = np.sqrt(freq * (1 - freq) / seeds)
    assert np.all(freq <= eps + 3 * sigma)
