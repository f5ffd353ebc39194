import numpy as np
import pytest

from conftest import make_instance, random_instance
from exceptions import DomainError, ParameterError
from schemas.instance import Solution
from schemas.params import CutParams, default_rho
from services.baseline import baseline_solve
from services.diagnostics import (
    ROW_FIELDS,
    SUMMARY_FIELDS,
    build_mapping,
    build_optprime,
    build_sstar,
    check_small_distortion,
    monte_carlo,
    monte_carlo_columns,
    run_check,
    seed_range,
)
from services.geometry import cost, normalize
from services.oracle import brute_force_opt
from services.quadtree import NEVER_CUT, build


class StubCut:
    """Cuts balls centred at the listed points at a high level, nothing else."""

    def __init__(self, hot=()):
        self.hot = [np.asarray(h, dtype=float) for h in hot]

    def cut_level_ball(self, x, r):
        if r > 0 and any(np.array_equal(np.asarray(x, dtype=float), h) for h in self.hot):
            return 100.0
        return NEVER_CUT

    def cut_level_pair(self, p, q):
        return NEVER_CUT


@pytest.fixture
def crowded():
    """Two OPT centers next to baseline center 0, none near baseline center 1."""
    return make_instance(
        [[1.0, 0.0], [2.0, 0.0], [100.0, 100.0]],
        [[0.0, 0.0], [100.0, 100.0], [1.0, 0.0], [2.0, 0.0]],
        k=2,
    )


def test_mapping_of_identical_solutions():
    instance = random_instance(0, n=8, m=6, k=3)
    solution = Solution(center_indices=[0, 2, 4])
    mapping = build_mapping(solution, solution, instance)
    assert mapping.psi == {0: (0,), 1: (1,), 2: (2,)}
    assert mapping.a2 == ()
    assert mapping.a0 == ()
    assert mapping.opt2 == ()


def test_mapping_pigeonhole(crowded):
    mapping = build_mapping(Solution(center_indices=[0, 1]), Solution(center_indices=[2, 3]), crowded)
    assert mapping.psi[0] == (0, 1)
    assert mapping.a2 == (0,)
    assert mapping.a0 == (1,)
    # f_l is the OPT center closest to l
    assert mapping.closest == {0: 0}


def test_mapping_cardinality_identity():
    for seed in range(10):
        instance = random_instance(seed, n=10, m=7, k=3)
        baseline = baseline_solve(instance, rng_seed=seed)
        opt, _ = brute_force_opt(instance)
        mapping = build_mapping(baseline, opt, instance)
        assert len(mapping.opt2) == len(mapping.a0) + len(mapping.a2)
        assert len(mapping.opt1) == len(mapping.a1)


def test_mapping_needs_centers(crowded):
    with pytest.raises(DomainError):
        build_mapping(Solution(center_indices=[]), Solution(center_indices=[2]), crowded)


def test_optprime_keeps_opt_when_nothing_can_be_removed(crowded):
    mapping = build_mapping(Solution(center_indices=[0, 1]), Solution(center_indices=[2, 3]), crowded)
    # floor(0.5 * 2 / 2) = 0
    optprime = build_optprime(mapping, crowded, 0.5)
    assert optprime.removed == ()
    assert optprime.solution.center_indices == (2, 3)
    assert optprime.cost == optprime.opt_cost

    same = build_mapping(Solution(center_indices=[2, 3]), Solution(center_indices=[2, 3]), crowded)
    assert build_optprime(same, crowded, 0.9).removed == ()


def test_optprime_removes_from_crowded_groups():
    clients = [[1.0, 0.0], [2.0, 0.0], [3.0, 0.0], [4.0, 0.0], [50, 50], [60, 60], [70, 70]]
    candidates = [[0.0, 0.0], [50, 50], [60, 60], [70, 70], [1.0, 0.0], [2.0, 0.0], [3.0, 0.0], [4.0, 0.0]]
    instance = make_instance(clients, candidates, k=4)
    baseline = Solution(center_indices=[0, 1, 2, 3])
    opt = Solution(center_indices=[4, 5, 6, 7])
    mapping = build_mapping(baseline, opt, instance)
    assert len(mapping.opt2) == 4
    optprime = build_optprime(mapping, instance, 0.5)
    assert len(optprime.removed) == 1
    assert mapping.closest[0] not in optprime.removed
    assert optprime.cost >= optprime.opt_cost
    assert optprime.within_bound


def test_sstar_without_badly_cut_centers(crowded):
    baseline, opt = Solution(center_indices=[0, 1]), Solution(center_indices=[2, 3])
    mapping = build_mapping(baseline, opt, crowded)
    optprime = build_optprime(mapping, crowded, 0.1)
    sstar = build_sstar(optprime, mapping, crowded, StubCut(), CutParams(eps=0.1, dimension=2))
    assert sstar.solution == optprime.solution
    assert sstar.added == () and sstar.replaced == {}


def test_sstar_adds_a_badly_cut_unmatched_center(crowded):
    baseline, opt = Solution(center_indices=[0, 1]), Solution(center_indices=[2, 3])
    mapping = build_mapping(baseline, opt, crowded)
    optprime = build_optprime(mapping, crowded, 0.1)
    tree = StubCut(hot=[[100.0, 100.0]])
    sstar = build_sstar(optprime, mapping, crowded, tree, CutParams(eps=0.1, dimension=2))
    assert sstar.added == (1,)
    assert sstar.size == optprime.solution.size + 1


def test_sstar_swaps_in_a_badly_cut_matched_center(crowded):
    baseline, opt = Solution(center_indices=[0, 1]), Solution(center_indices=[2, 3])
    mapping = build_mapping(baseline, opt, crowded)
    optprime = build_optprime(mapping, crowded, 0.1)
    tree = StubCut(hot=[[0.0, 0.0]])
    sstar = build_sstar(optprime, mapping, crowded, tree, CutParams(eps=0.1, dimension=2))
    assert sstar.replaced == {0: 0}
    assert sstar.solution.center_indices == (0, 3)


def test_small_distortion_trivial_instance():
    instance = make_instance([[1.0, 1.0]], [[1.0, 1.0], [5.0, 5.0]], k=1)
    solution = Solution(center_indices=[0])
    tree = build(instance.all_points(), 0.25, 0)
    report = check_small_distortion(instance, tree, solution, solution, 0.25)
    assert report.passed and report.facts_ok
    assert report.budget_total == 0.0
    assert report.sstar_value == 0.0
    assert report.witnesses[0].source == "S*(p)"


def test_small_distortion_without_cuts_uses_the_nearest_center():
    instance, _ = normalize(random_instance(3, n=8, m=5, k=2))
    baseline = baseline_solve(instance, rng_seed=0)
    opt, _ = brute_force_opt(instance)
    report = check_small_distortion(instance, StubCut(), baseline, opt, 0.25)
    assert report.property3
    assert all(w.source == "S*(p)" for w in report.witnesses)
    assert report.budget_total == 0.0


@pytest.mark.parametrize("z", [1, 2])
def test_distance_facts_hold_on_every_seed(z):
    instance, _ = normalize(random_instance(4, n=9, m=6, k=3, z=z))
    baseline = baseline_solve(instance, rng_seed=1)
    opt, _ = brute_force_opt(instance)
    for seed in range(15):
        tree = build(instance.all_points(), default_rho(0.25), seed)
        report = check_small_distortion(instance, tree, baseline, opt, 0.25)
        assert report.facts_ok
        assert report.objective_z == z
        assert len(report.witnesses) == instance.n


def test_monte_carlo_constant_probes():
    always = monte_carlo(100, lambda seed: True, threads=1)
    assert always.frequency == 1.0 and always.sigma == 0.0
    never = monte_carlo(seed_range(120, start=5), lambda seed: False, threads=2)
    assert never.frequency == 0.0 and never.seeds == 120


def test_monte_carlo_seed_floor():
    with pytest.raises(ParameterError):
        monte_carlo(99, lambda seed: True)
    assert monte_carlo(10, lambda seed: seed % 2 == 0, min_seeds=10).hits == 5


def test_run_check_validation():
    instance = random_instance(5, n=5, m=4, k=2)
    with pytest.raises(ParameterError):
        run_check("nope", instance, 0.3, seed_range(100))
    with pytest.raises(ParameterError):
        run_check("cutprob", instance, 0.3, seed_range(50))
    with pytest.raises(ParameterError):
        run_check("cutprob", instance, 1.5, seed_range(100))


def test_cutprob_stays_below_the_bound():
    instance = random_instance(6, n=6, m=4, k=2)
    rows, summary = run_check("cutprob", instance, 0.3, seed_range(200), threads=1)
    assert len(summary) == 5
    assert len(rows) == 5 * 200
    assert set(rows[0]) == set(ROW_FIELDS)
    for entry in summary:
        assert set(entry) == set(SUMMARY_FIELDS)
        assert entry["frequency"] <= entry["bound"] + 3 * entry["sigma"] + 1e-12


@pytest.mark.parametrize("name", ["badcut", "budget", "smalldist", "detour"])
def test_checks_produce_rows_and_summaries(name):
    instance = random_instance(7, n=6, m=4, k=2)
    rows, summary = run_check(name, instance, 0.3, seed_range(100), threads=2)
    assert rows and summary
    assert all(row["check"] == name for row in rows)
    assert all(entry["check"] == name for entry in summary)
    for entry in summary:
        if entry["frequency"] is not None:
            assert 0.0 <= entry["frequency"] <= 1.0


def test_smalldist_summary_probes():
    instance = random_instance(8, n=6, m=4, k=2)
    _, summary = run_check("smalldist", instance, 0.3, seed_range(100), threads=1)
    probes = {entry["probe"]: entry for entry in summary}
    assert set(probes) == {"property1", "property2", "property3", "facts", "sstar_size", "overall"}
    assert probes["facts"]["frequency"] == 1.0


@pytest.mark.slow
def test_smalldist_overall_frequency_on_ten_thousand_seeds():
    instance = random_instance(9, n=10, m=5, k=2)
    _, summary = run_check("smalldist", instance, 0.3, seed_range(10_000))
    overall = next(e for e in summary if e["probe"] == "overall")
    assert overall["frequency"] >= 2 / 3 - 3 * overall["sigma"]


def test_monte_carlo_columns_split_multi_answer_sweeps():
    columns = monte_carlo_columns(100, lambda seed: (seed % 2 == 0, seed < 25, False), threads=2)
    assert [c.hits for c in columns] == [50, 25, 0]
    assert all(c.seeds == 100 for c in columns)
    assert columns[0].outcomes[:3] == (True, False, True)


@pytest.mark.slow
@pytest.mark.parametrize("z", [1, 2])
def test_halving_eps_shrinks_the_mean_budget(z):
    instance = random_instance(11, n=6, m=4, k=2, z=z)
    _, summary = run_check("budget", instance, 0.3, seed_range(10_000))
    scaling = next(e for e in summary if e["probe"] == "scaling")
    assert 1.5 <= scaling["fitted_constant"] <= 3.0
