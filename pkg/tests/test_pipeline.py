import time
from concurrent.futures import wait

import numpy as np
import pytest

import services.pipeline as pipeline_module
from conftest import make_instance, random_instance
from reporting.aggregator import summarise_bench
from schemas.instance import Solution
from schemas.params import SolverParams
from services.baseline import baseline_solve
from services.geometry import cost, normalize
from services.oracle import brute_force_opt
from services.pipeline import SolverPipeline, evaluate, solve
from utils.generator import generate_instance
from utils.rng import derive_seed


def params(**overrides):
    values = {"eps": 0.3, "trials": 3, "rng_seed": 1, "threads": 1}
    values.update(overrides)
    return SolverParams(**values)


def test_all_candidates_when_k_equals_m():
    instance = random_instance(0, n=10, m=4, k=4)
    solution, report = solve(instance, params())
    assert solution.center_indices == (0, 1, 2, 3)
    _, opt = brute_force_opt(instance)
    assert report.cost == pytest.approx(opt)


def test_zero_cost_when_clients_are_candidates():
    clients = np.array([[0.0, 0.0], [3.0, 1.0], [7.0, 7.0], [3.0, 1.0]])
    candidates = np.vstack([[[5.0, 5.0], [1.0, 9.0]], clients[:3]])
    instance = make_instance(clients, candidates, k=3)
    solution, report = solve(instance, params())
    assert report.cost == 0.0
    assert solution.center_indices == (2, 3, 4)


def test_all_points_identical():
    instance = make_instance([[2.0, 2.0]] * 3, [[2.0, 2.0]] * 4, k=2)
    solution, report = solve(instance, params())
    assert solution.center_indices == (0, 1)
    assert report.cost == 0.0
    assert report.trials == ()


def test_never_worse_than_the_baseline():
    for seed in range(5):
        instance = random_instance(10 + seed, n=12, m=8, k=3)
        p = params(rng_seed=seed)
        solution, report = solve(instance, p)
        normalized, _ = normalize(instance)
        baseline = baseline_solve(normalized, p.baseline, derive_seed(seed, 1))
        assert report.baseline_cost == cost(instance, baseline)
        assert report.cost <= report.baseline_cost
        assert report.cost == evaluate(instance, solution)
        assert solution.size <= instance.k


def test_report_lists_every_trial():
    instance = random_instance(20, n=10, m=6, k=2)
    _, report = solve(instance, params(trials=4))
    assert [t.trial for t in report.trials] == [0, 1, 2, 3]
    assert report.cost <= report.baseline_cost
    assert len({t.seed for t in report.trials}) == 4
    assert report.winner == "baseline" or report.winner.startswith("trial-")
    for trial in report.trials:
        assert trial.cost <= trial.dp_cost * (1 + 1e-9) + 1e-9
        assert trial.seconds >= 0.0


def test_deterministic_across_runs_and_threads():
    instance = random_instance(30, n=12, m=7, k=3, z=1)
    first, report_a = solve(instance, params(threads=1))
    second, report_b = solve(instance, params(threads=3))
    assert first == second
    assert report_a.cost == report_b.cost
    assert report_a.winner == report_b.winner
    assert [t.centers for t in report_a.trials] == [t.centers for t in report_b.trials]


def test_trial_completion_order_does_not_change_the_result(monkeypatch):
    instance = random_instance(35, n=10, m=6, k=2)
    expected, report = solve(instance, params(trials=5, threads=1))

    def reversed_completion(futures):
        done = list(futures)
        wait(done)
        return iter(done[::-1])

    monkeypatch.setattr(pipeline_module, "as_completed", reversed_completion)
    solution, shuffled = solve(instance, params(trials=5, threads=3))
    assert solution == expected
    assert shuffled.cost == report.cost
    assert shuffled.winner == report.winner
    assert [t.trial for t in shuffled.trials] == [0, 1, 2, 3, 4]


def test_objective_override():
    instance = random_instance(40, n=8, m=5, k=2, z=2)
    solution, report = solve(instance, params(objective_z=1))
    assert report.cost == pytest.approx(
        cost(make_instance(instance.clients, instance.candidates, 2, z=1), solution)
    )


def test_pipeline_costs_are_in_original_units():
    instance = random_instance(50, n=9, m=5, k=2, box=0.001)
    pipeline = SolverPipeline(instance, params())
    solution, report = pipeline.run()
    assert report.scale == pipeline.scale > 1.0
    assert report.cost == pytest.approx(cost(instance, solution))


def test_close_to_the_optimum_on_small_instances():
    eps = 0.3
    for seed in range(10):
        instance = random_instance(60 + seed, n=10, m=6, k=2)
        _, report = solve(instance, params(eps=eps, trials=2, rng_seed=seed))
        _, opt = brute_force_opt(instance)
        assert report.cost <= (1 + 5 * eps) * opt


@pytest.mark.slow
def test_approximation_ratio_over_random_instances():
    eps = 0.3
    rng = np.random.default_rng(99)
    ratios = []
    for seed in range(50):
        n, m = int(rng.integers(4, 13)), int(rng.integers(3, 9))
        k = int(rng.integers(1, min(3, m) + 1))
        instance = random_instance(1000 + seed, n=n, m=m, k=k, z=int(rng.integers(1, 3)))
        _, report = solve(instance, SolverParams(eps=eps, trials=7, rng_seed=seed))
        _, opt = brute_force_opt(instance)
        ratios.append(report.cost / opt)
    ratios = np.array(ratios)
    assert np.mean(ratios <= 1 + 5 * eps) >= 0.95
    assert np.median(ratios) <= 1.05


@pytest.mark.slow
def test_doubling_n_at_most_two_and_a_half_times_slower():
    rows = []
    for n in (10_000, 20_000):
        instance = generate_instance(n, 200, 5, 2, 2, 7)
        for run in range(5):
            started = time.perf_counter()
            solve(instance, SolverParams(eps=0.3, trials=1, rng_seed=run))
            rows.append({"size": n, "run": run, "seconds": time.perf_counter() - started, "cost": 0.0})
    summary = summarise_bench(rows)
    assert summary[1]["time_ratio"] <= 2.5
