"""
Seed-sweep checks exposed by `kclust diagnose`.

Every check returns per-seed rows (ROW_FIELDS) and summary rows
(SUMMARY_FIELDS). Seeds are used directly as decomposition seeds.
"""

from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from conf import settings
from core.logging_config import get_logger
from exceptions import ParameterError
from schemas.instance import Instance, Solution
from schemas.params import CutParams, default_rho
from schemas.reports import MonteCarloEstimate
from services.badcut import budgets, classify_points
from services.baseline import baseline_solve
from services.diagnostics.monte_carlo import (
    estimate,
    monte_carlo_columns,
    require_seeds,
    sweep,
)
from services.diagnostics.structure import check_small_distortion
from services.geometry import cost, normalize
from services.oracle import brute_force_opt
from services.quadtree import build, sample_grid
from utils.rng import derive_seed

logger = get_logger(__name__)

ROW_FIELDS = ["check", "probe", "seed", "outcome", "value", "detail"]
SUMMARY_FIELDS = ["check", "probe", "seeds", "frequency", "sigma", "bound", "fitted_constant"]

Rows = List[Dict[str, Any]]


def _row(check: str, probe: str, seed: int, outcome: bool, value: float, detail: str = "") -> Dict[str, Any]:
    return {
        "check": check,
        "probe": probe,
        "seed": seed,
        "outcome": int(bool(outcome)),
        "value": float(value),
        "detail": detail,
    }


def _summary(
    check: str,
    probe: str,
    result: MonteCarloEstimate,
    bound: Optional[float],
    fitted: Optional[float],
) -> Dict[str, Any]:
    return {
        "check": check,
        "probe": probe,
        "seeds": result.seeds,
        "frequency": result.frequency,
        "sigma": result.sigma,
        "bound": bound,
        "fitted_constant": fitted,
    }


def _prepare(instance: Instance, z: Optional[int]) -> Instance:
    if z is not None and z != instance.objective_z:
        instance = Instance(
            dimension=instance.dimension,
            clients=instance.clients,
            candidates=instance.candidates,
            k=instance.k,
            objective_z=z,
        )
    normalized, _ = normalize(instance)
    return normalized


def _baseline(instance: Instance) -> Solution:
    return baseline_solve(instance, rng_seed=derive_seed(settings.DEFAULT_SEED, 1))


def cut_probes(instance: Instance, rho: float) -> List[Tuple[np.ndarray, float, int]]:
    """
    Five (p, r, i) probes around the first client with d r / 2^i in
    {0.05, 0.1, 0.2}. Levels start two below the root: the shift range is
    half a root side, so only the finer grids are uniformly shifted.
    """
    grid = sample_grid(instance.all_points(), rho, 0)
    top, d = grid.top_level, instance.dimension
    p = instance.clients[0]
    plan = ((top - 2, 0.05), (top - 2, 0.2), (top - 3, 0.05), (top - 3, 0.2), (top - 4, 0.1))
    return [(p, fraction * 2.0**level / d, level) for level, fraction in plan]


def check_cutprob(instance: Instance, eps: float, seeds: Sequence[int], threads=None) -> Tuple[Rows, Rows]:
    """Is B(p, r) cut at exactly level i; bound d r / 2^i."""
    rho = default_rho(eps)
    points = instance.all_points()
    probes = cut_probes(instance, rho)

    def run(seed: int) -> List[bool]:
        grid = sample_grid(points, rho, seed)
        return [grid.cut_level_ball(p, r) == level for p, r, level in probes]

    columns = monte_carlo_columns(seeds, run, threads)
    rows, summary = [], []
    for (_, r, level), result in zip(probes, columns):
        name = f"r={r:.6g},i={level}"
        rows.extend(_row("cutprob", name, s, o, r) for s, o in zip(seeds, result.outcomes))
        bound = instance.dimension * r / 2.0**level
        summary.append(_summary("cutprob", name, result, bound, result.frequency / bound))
    return rows, summary


def check_badcut(instance: Instance, eps: float, seeds: Sequence[int], threads=None) -> Tuple[Rows, Rows]:
    """Per client: is B(p, 3 A_p) badly cut; bound eps."""
    rho = default_rho(eps)
    params = CutParams(eps=eps, dimension=instance.dimension)
    points = instance.all_points()
    baseline = _baseline(instance)

    def run(seed: int) -> List[bool]:
        return classify_points(sample_grid(points, rho, seed), instance, baseline, params)

    columns = monte_carlo_columns(seeds, run, threads)
    rows, summary = [], []
    for p, result in enumerate(columns):
        rows.extend(_row("badcut", f"client-{p}", s, o, 0.0) for s, o in zip(seeds, result.outcomes))
        summary.append(_summary("badcut", f"client-{p}", result, eps, result.frequency / eps))
    return rows, summary


def check_budget(instance: Instance, eps: float, seeds: Sequence[int], threads=None) -> Tuple[Rows, Rows]:
    """
    Total budget / (cost A + cost OPT) at eps and eps / 2, with OPT as the
    reference solution. A seed hits when the total stays within
    C eps (cost A + cost OPT).
    """
    opt, opt_cost = brute_force_opt(instance)
    baseline = _baseline(instance)
    scale = cost(instance, baseline) + opt_cost
    points = instance.all_points()
    rows, summary, means = [], [], []
    for e in (eps, eps / 2.0):
        params = CutParams(eps=e, dimension=instance.dimension)
        rho = default_rho(e)

        def run(seed: int, params=params, rho=rho) -> float:
            grid = sample_grid(points, rho, seed)
            return sum(b.total for b in budgets(grid, instance, baseline, opt, params))

        totals = sweep(seeds, run, threads)
        ratios = [t / scale if scale > 0.0 else 0.0 for t in totals]
        hits = [r <= settings.DIAGNOSTICS_CONSTANT * e for r in ratios]
        name = f"eps={e:.6g}"
        rows.extend(_row("budget", name, s, h, r) for s, h, r in zip(seeds, hits, ratios))
        mean = float(np.mean(ratios))
        means.append(mean)
        summary.append(_summary("budget", name, estimate(hits), 2.0 / 3.0, mean / e))
    summary.append(
        {
            "check": "budget",
            "probe": "scaling",
            "seeds": len(seeds),
            "frequency": None,
            "sigma": None,
            "bound": None,
            "fitted_constant": means[0] / means[1] if means[1] > 0.0 else None,
        }
    )
    return rows, summary


def _distortion_reports(instance, eps, seeds, threads, detour_only):
    opt, _ = brute_force_opt(instance)
    baseline = _baseline(instance)
    rho = default_rho(eps)
    points = instance.all_points()

    def run(seed: int):
        tree = build(points, rho, seed)
        return check_small_distortion(
            instance, tree, baseline, opt, eps, detour_only=detour_only
        )

    return sweep(seeds, run, threads)


def check_smalldist(instance: Instance, eps: float, seeds: Sequence[int], threads=None) -> Tuple[Rows, Rows]:
    """The three small-distortion properties, the distance facts and |S*| <= k per seed."""
    reports = _distortion_reports(instance, eps, seeds, threads, False)
    probes = {
        "property1": (lambda r: r.property1, lambda r: r.budget_constant, 2.0 / 3.0),
        "property2": (lambda r: r.property2, lambda r: r.sstar_constant, 2.0 / 3.0),
        "property3": (
            lambda r: r.property3,
            lambda r: sum(w.passed for w in r.witnesses) / len(r.witnesses),
            2.0 / 3.0,
        ),
        "facts": (lambda r: r.facts_ok, lambda r: float(r.facts_ok), 1.0),
        "sstar_size": (lambda r: r.sstar_size <= r.k, lambda r: r.sstar_size, 0.8),
        "overall": (lambda r: r.passed, lambda r: float(r.passed), 2.0 / 3.0),
    }
    rows, summary = [], []
    for name, (outcome, value, bound) in probes.items():
        hits = [outcome(r) for r in reports]
        values = [value(r) for r in reports]
        rows.extend(_row("smalldist", name, s, h, v) for s, h, v in zip(seeds, hits, values))
        fitted = max(values) if name in ("property1", "property2") else None
        summary.append(_summary("smalldist", name, estimate(hits), bound, fitted))
    return rows, summary


def check_detour(instance: Instance, eps: float, seeds: Sequence[int], threads=None) -> Tuple[Rows, Rows]:
    """Property 3 alone, one row per seed and client with the witness source."""
    reports = _distortion_reports(instance, eps, seeds, threads, True)
    rows = []
    sources: Dict[str, int] = {}
    for seed, report in zip(seeds, reports):
        for w in report.witnesses:
            rows.append(_row("detour", f"client-{w.client}", seed, w.passed, w.lhs, w.source))
            sources[w.source] = sources.get(w.source, 0) + 1
    property3 = estimate([r.property3 for r in reports])
    summary = [_summary("detour", "property3", property3, 2.0 / 3.0, None)]
    total = sum(sources.values())
    for source in sorted(sources):
        summary.append(
            {
                "check": "detour",
                "probe": f"source={source}",
                "seeds": len(seeds),
                "frequency": sources[source] / total,
                "sigma": None,
                "bound": None,
                "fitted_constant": None,
            }
        )
    return rows, summary


CHECKS: Dict[str, Callable[..., Tuple[Rows, Rows]]] = {
    "cutprob": check_cutprob,
    "badcut": check_badcut,
    "budget": check_budget,
    "smalldist": check_smalldist,
    "detour": check_detour,
}


def run_check(
    name: str,
    instance: Instance,
    eps: float,
    seeds: Sequence[int],
    z: Optional[int] = None,
    threads: Optional[int] = None,
) -> Tuple[Rows, Rows]:
    """
    Run one named check over the seed family on the normalised instance.

    Raises:
        ParameterError: For an unknown check, eps outside (0, 1) or fewer
            seeds than settings.MONTE_CARLO_MIN_SEEDS.
    """
    if name not in CHECKS:
        raise ParameterError("check", f"must be one of {sorted(CHECKS)}, got {name!r}")
    if not 0.0 < eps < 1.0:
        raise ParameterError("eps", f"must lie in (0, 1), got {eps}")
    require_seeds(len(seeds))
    prepared = _prepare(instance, z)
    logger.info(f"diagnose {name}: {len(seeds)} seeds, eps={eps}")
    return CHECKS[name](prepared, eps, list(seeds), threads)
