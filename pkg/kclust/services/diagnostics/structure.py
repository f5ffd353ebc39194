"""
Structured near-optimal solutions used to validate a decomposition: the
baseline/OPT center mapping, OPT' and S*, and the small-distortion checks.
"""

import math
from typing import Dict, List, Optional, Sequence

import numpy as np

from conf import settings
from core.logging_config import get_logger
from exceptions import DomainError
from schemas.instance import Instance, Solution
from schemas.params import CutParams
from schemas.reports import (
    CenterMapping,
    OptPrime,
    PointWitness,
    SmallDistortionReport,
    StructuredSolution,
)
from services.badcut import badcut_report, budgets, classify_badly_cut, relocate
from services.geometry import cost, distances_to_centers, power_sum
from services.quadtree import NEVER_CUT

logger = get_logger(__name__)

_TOLERANCE = 1e-9


def _pad(indices: Sequence[int], k: int) -> List[int]:
    indices = list(indices)
    return indices + [indices[-1]] * (k - len(indices))


def _leq(lhs: float, rhs: float) -> bool:
    return lhs <= rhs + _TOLERANCE * max(1.0, abs(rhs))


def _fitted_constant(value: float, opt_cost: float, baseline_cost: float, eps: float) -> float:
    """Smallest C >= 0 with value <= (1 + C eps) OPT + C eps cost(A)."""
    excess = value - opt_cost
    if _leq(value, opt_cost):
        return 0.0
    scale = eps * (opt_cost + baseline_cost)
    return excess / scale if scale > 0.0 else math.inf


def build_mapping(baseline: Solution, opt: Solution, instance: Instance) -> CenterMapping:
    """
    Map every OPT center onto its closest baseline center.

    Both solutions are padded to max(k, sizes) slots by repeating their last
    center; ties go to the lowest baseline slot.

    Raises:
        DomainError: If either solution is empty.
    """
    if baseline.size == 0 or opt.size == 0:
        raise DomainError("the center mapping needs two non-empty solutions")
    k = max(instance.k, baseline.size, opt.size)
    baseline_slots = _pad(baseline.center_indices, k)
    opt_slots = _pad(opt.center_indices, k)
    nearest, reach = distances_to_centers(
        instance.candidates[opt_slots], instance.candidates[baseline_slots]
    )
    psi = {
        slot: tuple(f for f in range(k) if nearest[f] == slot) for slot in range(k)
    }
    closest = {
        slot: min(group, key=lambda f: (reach[f], f)) for slot, group in psi.items() if group
    }
    return CenterMapping(
        baseline_slots=tuple(baseline_slots),
        opt_slots=tuple(opt_slots),
        nearest_baseline=tuple(int(v) for v in nearest),
        psi=psi,
        closest=closest,
    )


def _slot_solution(mapping: CenterMapping, slots: Sequence[int]) -> Solution:
    return Solution(center_indices=[mapping.opt_slots[f] for f in slots])


def build_optprime(mapping: CenterMapping, instance: Instance, eps: float) -> OptPrime:
    """
    OPT' = OPT minus floor(eps |OPT>=2| / 2) centers of OPT>=2, never removing
    the center closest to its baseline center. Centers are removed one at a
    time, each time the one whose removal raises the cost least.
    """
    opt_cost = cost(instance, _slot_solution(mapping, range(mapping.k)))
    baseline_cost = cost(instance, Solution(center_indices=mapping.baseline_slots))
    protected = set(mapping.closest.values())
    removable = [f for f in mapping.opt2 if f not in protected]
    budget = int(math.floor(eps * len(mapping.opt2) / 2.0))

    surviving = list(range(mapping.k))
    removed: List[int] = []
    for _ in range(min(budget, len(removable))):
        trials = []
        for f in removable:
            rest = [g for g in surviving if g != f]
            trials.append((cost(instance, _slot_solution(mapping, rest)), f))
        _, f = min(trials)
        surviving.remove(f)
        removable.remove(f)
        removed.append(f)

    solution = _slot_solution(mapping, surviving)
    value = cost(instance, solution)
    constant = _fitted_constant(value, opt_cost, baseline_cost, eps)
    logger.debug(f"OPT': removed {len(removed)} of {len(mapping.opt2)}, C = {constant:.4g}")
    return OptPrime(
        solution=solution,
        slots=tuple(surviving),
        removed=tuple(sorted(removed)),
        cost=value,
        opt_cost=opt_cost,
        baseline_cost=baseline_cost,
        fitted_constant=constant,
        within_bound=constant <= settings.DIAGNOSTICS_CONSTANT,
    )


def center_flags(
    tree, instance: Instance, mapping: CenterMapping, reference: Solution, params: CutParams
) -> List[bool]:
    """Per baseline slot l: is B(l, 3 dist(l, reference)) badly cut."""
    points = instance.candidates[list(mapping.baseline_slots)]
    _, reach = distances_to_centers(points, reference.centers(instance))
    return [classify_badly_cut(tree, x, r, params) for x, r in zip(points, reach)]


def build_sstar(
    optprime: OptPrime,
    mapping: CenterMapping,
    instance: Instance,
    tree,
    params: CutParams,
) -> StructuredSolution:
    """
    S*: in OPT', replace f_l by l for every badly-cut baseline center l that
    has OPT centers mapped onto it, then add every badly-cut baseline center
    with none.
    """
    flags = center_flags(tree, instance, mapping, optprime.solution, params)
    current: Dict[int, int] = {f: mapping.opt_slots[f] for f in optprime.slots}
    a0 = set(mapping.a0)
    replaced: Dict[int, int] = {}
    added: List[int] = []
    for slot, flagged in enumerate(flags):
        if not flagged:
            continue
        if slot in a0:
            added.append(slot)
            continue
        f = mapping.closest[slot]
        current[f] = mapping.baseline_slots[slot]
        replaced[slot] = f
    indices = set(current.values()) | {mapping.baseline_slots[slot] for slot in added}
    return StructuredSolution(
        solution=Solution(center_indices=indices),
        replaced=replaced,
        added=tuple(added),
        k=mapping.k,
    )


def _witness(
    tree,
    client: int,
    shift: float,
    target: np.ndarray,
    options,
    rhs: float,
    eps: float,
    z: int,
) -> Optional[PointWitness]:
    for source, index, center in options:
        level = tree.cut_level_pair(target, center)
        detour = 0.0 if level == NEVER_CUT else eps * 2.0**level
        lhs = (shift + float(np.linalg.norm(target - center)) + detour) ** z
        if _leq(lhs, rhs):
            return PointWitness(
                client=client, source=source, center=index, level=level, lhs=lhs, rhs=rhs
            )
    return None


def check_small_distortion(
    instance: Instance,
    tree,
    baseline: Solution,
    opt: Solution,
    eps: float,
    z: Optional[int] = None,
    constant: Optional[float] = None,
    detour_only: bool = False,
) -> SmallDistortionReport:
    """
    Evaluate the three small-distortion properties of a decomposition.

    1. the total budget w.r.t. the baseline A and OPT' is at most
       C eps (cost OPT + cost A);
    2. the relocated cost sum (d(p, p~) + d(p~, S*))^z of S* is at most
       (1 + C eps) cost OPT + C eps cost A;
    3. every client has a center s of S*, cut from p~ at level i, with
       (d(p, p~) + d(p~, s) + eps 2^i)^z <= (d(p, p~) + d(p~, S*))^z + b(p).

    Witnesses for 3 are tried in the order S*(p), S*(A(p)), A(p); when all
    fail, every center of S* is tried.

    Args:
        instance: A small instance.
        tree: Decomposition built on instance.all_points().
        baseline: The baseline solution A.
        opt: An optimal solution.
        eps: Accuracy parameter.
        z: Objective exponent overriding the instance's.
        constant: Tolerance C; settings.DIAGNOSTICS_CONSTANT by default.
        detour_only: Judge property 3 alone; properties 1 and 2 are
            reported as passing.
    """
    if z is not None and z != instance.objective_z:
        instance = Instance(
            dimension=instance.dimension,
            clients=instance.clients,
            candidates=instance.candidates,
            k=instance.k,
            objective_z=z,
        )
    z = instance.objective_z
    constant = settings.DIAGNOSTICS_CONSTANT if constant is None else constant
    params = CutParams(eps=eps, dimension=instance.dimension)

    mapping = build_mapping(baseline, opt, instance)
    optprime = build_optprime(mapping, instance, eps)
    sstar = build_sstar(optprime, mapping, instance, tree, params)
    baseline_cost, opt_cost = optprime.baseline_cost, optprime.opt_cost

    relocation = relocate(instance, baseline, badcut_report(tree, instance, baseline, params))
    shift = np.linalg.norm(instance.clients - relocation.targets, axis=1)
    breakdown = budgets(tree, instance, baseline, optprime.solution, params)
    per_client = np.array([b.total for b in breakdown])

    scale = eps * (opt_cost + baseline_cost)
    total = math.fsum(per_client)
    budget_constant = 0.0 if total <= 0.0 else (total / scale if scale > 0.0 else math.inf)

    s_centers = sstar.solution.centers(instance)
    s_index = np.asarray(sstar.solution.center_indices)
    _, reach_s = distances_to_centers(relocation.targets, s_centers)
    sstar_value = power_sum(shift + reach_s, z)
    sstar_constant = _fitted_constant(sstar_value, opt_cost, baseline_cost, eps)

    baseline_centers = baseline.centers(instance)
    anchor, to_baseline = distances_to_centers(instance.clients, baseline_centers)
    _, anchor_to_s = distances_to_centers(baseline_centers, s_centers)
    nearest_to_p, _ = distances_to_centers(instance.clients, s_centers)
    in_sstar = set(sstar.solution.center_indices)

    witnesses = []
    for p in range(instance.n):
        target = relocation.targets[p]
        rhs = (shift[p] + reach_s[p]) ** z + per_client[p]
        a_index = baseline.center_indices[anchor[p]]
        near_anchor = int(
            distances_to_centers(baseline_centers[anchor[p]][None, :], s_centers)[0][0]
        )
        options = [
            ("S*(p)", int(s_index[nearest_to_p[p]]), s_centers[nearest_to_p[p]]),
            ("S*(A(p))", int(s_index[near_anchor]), s_centers[near_anchor]),
        ]
        if a_index in in_sstar:
            options.append(("A(p)", a_index, instance.candidates[a_index]))
        found = _witness(tree, p, shift[p], target, options, rhs, eps, z)
        if found is None:
            everything = [("exhaustive", int(c), instance.candidates[c]) for c in s_index]
            found = _witness(tree, p, shift[p], target, everything, rhs, eps, z)
            logger.info(
                f"client {p}: proof witnesses failed, exhaustive search "
                f"{'found ' + str(found.center) if found else 'found none'}"
            )
        witnesses.append(found or PointWitness(client=p, source="none", rhs=rhs))

    # distance facts every S* satisfies by construction
    _, to_optprime = distances_to_centers(instance.clients, optprime.solution.centers(instance))
    _, to_s = distances_to_centers(instance.clients, s_centers)
    _, anchor_to_optprime = distances_to_centers(
        baseline_centers, optprime.solution.centers(instance)
    )
    facts_ok = (
        all(_leq(a, b) for a, b in zip(to_s, 2.0 * to_optprime + to_baseline))
        and all(_leq(a, b) for a, b in zip(shift + reach_s, 3.0 * to_baseline + 2.0 * to_optprime))
        and all(_leq(a, b) for a, b in zip(anchor_to_s, 2.0 * anchor_to_optprime))
    )
    if not facts_ok:
        logger.warning("S* violates a distance fact")

    if detour_only:
        budget_constant = sstar_constant = 0.0
    return SmallDistortionReport(
        eps=eps,
        objective_z=z,
        constant=constant,
        budget_total=total,
        budget_scale=scale,
        budget_constant=budget_constant,
        sstar_value=sstar_value,
        sstar_constant=sstar_constant,
        sstar_size=sstar.size,
        k=instance.k,
        witnesses=tuple(witnesses),
        facts_ok=facts_ok,
    )
