"""
End-to-end approximation scheme: normalise, compute the baseline once, run
independent decomposition trials and keep the cheapest straight-line
solution, the baseline included.
"""

import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from typing import Dict, List, Optional, Tuple

from core.logging_config import get_logger
from exceptions import DegenerateInstanceError, InfeasibleError
from schemas.instance import Instance, Solution
from schemas.params import SolverParams
from schemas.reports import SolveReport, TrialReport
from services.badcut import badcut_report, relocate, relocation_cost
from services.baseline import baseline_solve
from services.dp import binarize, solve_dp
from services.geometry import cost, denormalize_cost, normalize
from services.quadtree import build
from utils.rng import derive_seed

logger = get_logger(__name__)


def evaluate(instance: Instance, solution: Solution) -> float:
    """Straight-line cost of a solution on the instance."""
    return cost(instance, solution)


class SolverPipeline:
    """
    Runs the trials of one solve. Trials share the normalised instance and
    the baseline and are otherwise independent.
    """

    def __init__(self, instance: Instance, params: SolverParams) -> None:
        self.instance = instance
        self.params = params
        self.normalized: Optional[Instance] = None
        self.scale = 1.0
        self.baseline: Optional[Solution] = None
        self.baseline_cost = 0.0

    def _units(self, value: float) -> float:
        return denormalize_cost(value, self.scale, self.instance.objective_z)

    def _run_trial(self, trial: int) -> Tuple[TrialReport, Solution]:
        params, instance = self.params, self.normalized
        started = time.perf_counter()
        seed = derive_seed(params.rng_seed, 0, trial)
        tree = build(instance.all_points(), params.rho, seed)
        report = badcut_report(tree, instance, self.baseline, params.cut_params(instance.dimension))
        relocation = relocate(instance, self.baseline, report)
        result = solve_dp(binarize(tree), instance, relocation, params.eps, self.baseline_cost)
        straight = cost(instance, result.solution)
        record = TrialReport(
            trial=trial,
            seed=seed,
            badly_cut_clients=report.badly_cut_clients,
            relocation_cost=self._units(relocation_cost(instance, relocation)),
            dp_cost=self._units(result.tilde_cost_pr),
            cost=self._units(straight),
            centers=result.solution.center_indices,
            bucket=result.bucket,
            seconds=time.perf_counter() - started,
        )
        logger.info(
            f"trial {trial}: {record.badly_cut_clients} badly cut, "
            f"dp {record.dp_cost:.6g}, cost {record.cost:.6g} in {record.seconds:.2f}s"
        )
        return record, result.solution

    def _trials(self) -> Dict[int, Tuple[TrialReport, Solution]]:
        trials = self.params.trials
        workers = min(self.params.threads, trials)
        results: Dict[int, Tuple[TrialReport, Solution]] = {}
        if workers <= 1:
            for t in range(trials):
                try:
                    results[t] = self._run_trial(t)
                except InfeasibleError as exc:
                    logger.warning(f"trial {t} dropped: {exc}")
            return results
        with ThreadPoolExecutor(max_workers=workers) as ex:
            futures = {ex.submit(self._run_trial, t): t for t in range(trials)}
            for fut in as_completed(futures):
                t = futures[fut]
                try:
                    results[t] = fut.result()
                except InfeasibleError as exc:
                    logger.warning(f"trial {t} dropped: {exc}")
        return results

    def _trivial(self, solution: Solution) -> Tuple[Solution, SolveReport]:
        value = evaluate(self.instance, solution)
        return solution, SolveReport(
            eps=self.params.eps,
            rho=self.params.rho,
            scale=self.scale,
            baseline_cost=value,
            cost=value,
            winner="baseline",
        )

    def run(self) -> Tuple[Solution, SolveReport]:
        instance, params = self.instance, self.params
        try:
            self.normalized, norm = normalize(instance)
        except DegenerateInstanceError:
            logger.info("all points coincide; opening the first k candidates")
            return self._trivial(Solution(center_indices=range(instance.k)))
        self.scale = norm.scale

        self.baseline = baseline_solve(
            self.normalized, params.baseline, derive_seed(params.rng_seed, 1)
        )
        self.baseline_cost = cost(self.normalized, self.baseline)
        if self.baseline_cost <= 0.0:
            return self._trivial(self.baseline)

        results = self._trials()
        # the baseline wins ties, then the lowest trial index
        pool: List[Tuple[float, int, str, Solution]] = [
            (evaluate(instance, self.baseline), -1, "baseline", self.baseline)
        ]
        for t in sorted(results):
            solution = results[t][1]
            pool.append((evaluate(instance, solution), t, f"trial-{t}", solution))
        value, _, winner, best = min(pool, key=lambda entry: (entry[0], entry[1]))

        report = SolveReport(
            eps=params.eps,
            rho=params.rho,
            scale=self.scale,
            baseline_cost=pool[0][0],
            cost=value,
            winner=winner,
            trials=tuple(results[t][0] for t in sorted(results)),
        )
        logger.info(
            f"solve: baseline {report.baseline_cost:.9g}, best {report.cost:.9g} ({winner})"
        )
        return best, report


def solve(instance: Instance, params: Optional[SolverParams] = None) -> Tuple[Solution, SolveReport]:
    """
    Approximate the discrete k-median (z = 1) or k-means (z = 2) optimum.

    Args:
        instance: Instance to solve.
        params: Accuracy, trial count, master seed and baseline knobs.

    Returns:
        The best solution found and a report whose costs are in the
        instance's own units.
    """
    params = params or SolverParams()
    if params.objective_z is not None and params.objective_z != instance.objective_z:
        instance = Instance(
            dimension=instance.dimension,
            clients=instance.clients,
            candidates=instance.candidates,
            k=instance.k,
            objective_z=params.objective_z,
        )
    return SolverPipeline(instance, params).run()
