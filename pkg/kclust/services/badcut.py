"""
Badly-cut balls, the relocated client set and per-client detour budgets.

The ball B(x, 3r) built on a distance r is badly cut when the decomposition
splits it at a level of at least log2(3r) + tau, tau = log2(d) + log2(1/eps).
Comparisons are real valued; thresholds are never rounded to integer levels.
"""

import math
from typing import List, Optional, Sequence

import numpy as np

from core.logging_config import get_logger
from exceptions import ParameterError
from schemas.instance import Instance, Relocation, Solution
from schemas.params import CutParams
from schemas.reports import BadCutReport, BudgetBreakdown
from services.geometry import distances_to_centers, nearest_center, power_sum
from services.quadtree import NEVER_CUT

logger = get_logger(__name__)


def tau(eps: float, dimension: int) -> float:
    """
    log2(d) + log2(1/eps).

    Raises:
        ParameterError: If eps is outside (0, 1) or d < 1.
    """
    if not 0.0 < eps < 1.0:
        raise ParameterError("eps", f"must lie in (0, 1), got {eps}")
    if dimension < 1:
        raise ParameterError("d", f"must be at least 1, got {dimension}")
    return math.log2(dimension) + math.log2(1.0 / eps)


def _threshold(radius: float, params: CutParams) -> float:
    return math.log2(radius) + params.tau if radius > 0.0 else NEVER_CUT


def classify_badly_cut(tree, x, r: float, params: CutParams) -> bool:
    """
    True iff the ball B(x, 3r) is cut at a level of at least log2(3r) + tau,
    where r is the distance the ball is built on; never for r = 0.
    """
    if r <= 0.0:
        return False
    radius = 3.0 * r
    return tree.cut_level_ball(x, radius) >= _threshold(radius, params)


def _detour_branch(tree, x, radius: float, params: CutParams) -> bool:
    """A budget branch charges the detour iff B(x, radius) is cut at most at log2(radius) + tau."""
    return radius <= 0.0 or tree.cut_level_ball(x, radius) <= _threshold(radius, params)


def classify_points(
    tree, instance: Instance, baseline: Solution, params: CutParams
) -> List[bool]:
    """Per client: is B(p, 3 A_p) badly cut."""
    _, reach = nearest_center(instance, baseline)
    return [
        classify_badly_cut(tree, p, a_p, params)
        for p, a_p in zip(instance.clients, reach)
    ]


def classify_centers(
    tree,
    instance: Instance,
    baseline: Solution,
    reference: Solution,
    params: CutParams,
) -> List[bool]:
    """Per baseline center l (ascending index): is B(l, 3 S_l) badly cut."""
    centers = baseline.centers(instance)
    _, reach = distances_to_centers(centers, reference.centers(instance))
    return [
        classify_badly_cut(tree, l, s_l, params)
        for l, s_l in zip(centers, reach)
    ]


def badcut_report(
    tree,
    instance: Instance,
    baseline: Solution,
    params: CutParams,
    reference: Optional[Solution] = None,
) -> BadCutReport:
    """
    Point flags w.r.t. the baseline and, given a reference solution, the
    center flags of the baseline centers.
    """
    point_flags = classify_points(tree, instance, baseline, params)
    center_flags = None
    if reference is not None:
        center_flags = tuple(classify_centers(tree, instance, baseline, reference, params))
    report = BadCutReport(point_flags=tuple(point_flags), center_flags=center_flags)
    logger.debug(
        f"{report.badly_cut_clients} of {instance.n} clients badly cut, "
        f"{report.badly_cut_centers} baseline centers"
    )
    return report


def relocate(instance: Instance, baseline: Solution, report: BadCutReport) -> Relocation:
    """Move every flagged client onto its nearest baseline center."""
    nearest, _ = nearest_center(instance, baseline)
    flags = np.asarray(report.point_flags, dtype=bool)
    targets = np.where(flags[:, None], instance.candidates[nearest], instance.clients)
    sources = tuple(int(c) if f else -1 for c, f in zip(nearest, flags))
    return Relocation(targets=targets, sources=sources)


def relocation_cost(instance: Instance, relocation: Relocation) -> float:
    """Sum of dist(p, p~)^z."""
    relocation.check_against(instance)
    shift = np.linalg.norm(instance.clients - relocation.targets, axis=1)
    return power_sum(shift, instance.objective_z)


def detour(tree, x, r: float, params: CutParams, z: int) -> float:
    """
    Detour of B(x, r) at its cut level l: eps 2^l r + eps^2 2^(2l) for z = 2,
    eps 2^l for z = 1, and 0 when the ball is never cut.
    """
    level = tree.cut_level_ball(x, r)
    if level == NEVER_CUT:
        return 0.0
    scale = params.eps * 2.0**level
    if z == 1:
        return scale
    return scale * r + scale * scale


def budget(
    tree,
    instance: Instance,
    client: int,
    baseline: Solution,
    reference: Solution,
    params: CutParams,
    z: Optional[int] = None,
) -> BudgetBreakdown:
    """
    Budget b1 + b2 + b3 of one client w.r.t. the baseline A and a reference S.

    b1 charges the detour of B(p, 3A_p); b2 the detour of B(p, 3(A_p + S_p)),
    falling back to 36 d A_p^2 + 16 d S_p^2 (3 A_p + 2 S_p for z = 1) when that
    ball is badly cut; b3 the detour of B(A(p), 3 S_A(p)).
    """
    z = instance.objective_z if z is None else z
    d = instance.dimension
    p = instance.clients[client]
    baseline_centers = baseline.centers(instance)
    reference_centers = reference.centers(instance)
    anchor_index, to_baseline = distances_to_centers(p[None, :], baseline_centers)
    _, to_reference = distances_to_centers(p[None, :], reference_centers)
    a_p, s_p = float(to_baseline[0]), float(to_reference[0])
    anchor = baseline_centers[anchor_index[0]]
    _, anchor_reach = distances_to_centers(anchor[None, :], reference_centers)
    s_anchor = float(anchor_reach[0])

    radius = 3.0 * a_p
    b1 = detour(tree, p, radius, params, z) if _detour_branch(tree, p, radius, params) else 0.0

    radius = 3.0 * (a_p + s_p)
    if _detour_branch(tree, p, radius, params):
        b2 = detour(tree, p, radius, params, z)
    elif z == 1:
        b2 = 3.0 * a_p + 2.0 * s_p
    else:
        b2 = 36.0 * d * a_p**2 + 16.0 * d * s_p**2

    radius = 3.0 * s_anchor
    b3 = (
        detour(tree, anchor, radius, params, z)
        if _detour_branch(tree, anchor, radius, params)
        else 0.0
    )
    return BudgetBreakdown(
        client=client,
        b1=b1,
        b2=b2,
        b3=b3,
        objective_z=z,
        flagged=classify_badly_cut(tree, p, a_p, params),
    )


def budgets(
    tree,
    instance: Instance,
    baseline: Solution,
    reference: Solution,
    params: CutParams,
    clients: Optional[Sequence[int]] = None,
) -> List[BudgetBreakdown]:
    """Budgets of all (or the given) clients."""
    indices = range(instance.n) if clients is None else clients
    return [budget(tree, instance, p, baseline, reference, params) for p in indices]
