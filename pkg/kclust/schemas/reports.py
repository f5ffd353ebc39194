from typing import Dict, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from schemas.instance import Solution


class NormalizationReport(BaseModel):
    """
    Outcome of rescaling an instance to unit minimum distance.
    """

    model_config = ConfigDict(frozen=True)

    scale: float = Field(..., gt=0.0, description="Multiplier applied to every coordinate")
    min_distance: float = Field(..., gt=0.0, description="Minimum distance before scaling")
    diameter: float = Field(..., ge=0.0, description="Diameter after scaling")


class BadCutReport(BaseModel):
    """
    Badly-cut flags of the clients (ball B(p, 3A_p)) and, when a reference
    solution is supplied, of the baseline centers (ball B(l, 3S_l)).
    """

    model_config = ConfigDict(frozen=True)

    point_flags: Tuple[bool, ...]
    center_flags: Optional[Tuple[bool, ...]] = None

    @property
    def badly_cut_clients(self) -> int:
        return sum(self.point_flags)

    @property
    def badly_cut_centers(self) -> int:
        return sum(self.center_flags) if self.center_flags is not None else 0


class BudgetBreakdown(BaseModel):
    """
    Per-client detour allowance, in cost units (distance^z).
    """

    model_config = ConfigDict(frozen=True)

    client: int = Field(..., ge=0)
    b1: float = Field(..., ge=0.0)
    b2: float = Field(..., ge=0.0)
    b3: float = Field(..., ge=0.0)
    objective_z: Literal[1, 2]
    flagged: bool = Field(default=False, description="Client ball badly cut")

    @property
    def total(self) -> float:
        return self.b1 + self.b2 + self.b3


class TrialReport(BaseModel):
    """
    Record of a single decomposition trial; costs in caller units.
    """

    model_config = ConfigDict(frozen=True)

    trial: int = Field(..., ge=0)
    seed: int = Field(..., ge=0)
    badly_cut_clients: int = Field(..., ge=0)
    relocation_cost: float = Field(..., ge=0.0)
    dp_cost: float = Field(..., ge=0.0, description="Portal-respecting tilde-cost")
    cost: float = Field(..., ge=0.0, description="Straight-line cost")
    centers: Tuple[int, ...]
    bucket: int
    seconds: float = Field(..., ge=0.0)


class SolveReport(BaseModel):
    """
    Summary of an end-to-end solve.
    """

    model_config = ConfigDict(frozen=True)

    eps: float
    rho: float
    scale: float
    baseline_cost: float = Field(..., ge=0.0)
    cost: float = Field(..., ge=0.0)
    winner: str = Field(..., description="'baseline' or 'trial-<t>'")
    trials: Tuple[TrialReport, ...] = ()


class DPResult(BaseModel):
    """
    Output of the portal dynamic program.
    """

    model_config = ConfigDict(frozen=True)

    solution: Solution
    tilde_cost_pr: float = Field(..., ge=0.0, description="Exact portal-respecting tilde-cost")
    estimate: float = Field(..., ge=0.0, description="Table value of the chosen entry")
    bucket: int = Field(..., ge=0, description="Cost bucket index of the chosen entry")
    bucket_count: int = Field(..., ge=0)
    trace: Tuple[Tuple[int, int, int], ...] = Field(
        default=(), description="(node id, table size, best bucket) per node"
    )


class CenterMapping(BaseModel):
    """
    Correspondence between baseline centers and optimal centers, in slots.

    Both solutions are padded to k slots by repeating their last center, so a
    slot may repeat a candidate index.
    """

    model_config = ConfigDict(frozen=True)

    baseline_slots: Tuple[int, ...]
    opt_slots: Tuple[int, ...]
    nearest_baseline: Tuple[int, ...] = Field(
        ..., description="Per OPT slot, the slot of its closest baseline center"
    )
    psi: Dict[int, Tuple[int, ...]] = Field(
        ..., description="Baseline slot to the OPT slots mapped onto it"
    )
    closest: Dict[int, int] = Field(
        ..., description="Baseline slot to its closest OPT slot in psi"
    )

    @model_validator(mode="after")
    def _check_partition(self) -> "CenterMapping":
        if len(self.baseline_slots) != len(self.opt_slots):
            raise ValueError("baseline and OPT must have the same number of slots")
        seen = sorted(f for group in self.psi.values() for f in group)
        if seen != list(range(len(self.opt_slots))):
            raise ValueError("psi does not partition the OPT slots")
        return self

    @property
    def k(self) -> int:
        return len(self.baseline_slots)

    def _with_size(self, predicate) -> Tuple[int, ...]:
        return tuple(
            slot
            for slot in range(self.k)
            if predicate(len(self.psi.get(slot, ())))
        )

    @property
    def a0(self) -> Tuple[int, ...]:
        return self._with_size(lambda size: size == 0)

    @property
    def a1(self) -> Tuple[int, ...]:
        return self._with_size(lambda size: size == 1)

    @property
    def a2(self) -> Tuple[int, ...]:
        return self._with_size(lambda size: size >= 2)

    @property
    def opt1(self) -> Tuple[int, ...]:
        return tuple(
            f for f in range(self.k)
            if len(self.psi[self.nearest_baseline[f]]) == 1
        )

    @property
    def opt2(self) -> Tuple[int, ...]:
        return tuple(
            f for f in range(self.k)
            if len(self.psi[self.nearest_baseline[f]]) >= 2
        )


class OptPrime(BaseModel):
    """
    OPT with a small set H of removable centers deleted.
    """

    model_config = ConfigDict(frozen=True)

    solution: Solution
    slots: Tuple[int, ...] = Field(..., description="Surviving OPT slots")
    removed: Tuple[int, ...] = Field(..., description="OPT slots forming H")
    cost: float
    opt_cost: float
    baseline_cost: float
    fitted_constant: float = Field(
        ..., description="C with cost = (1 + C eps) OPT + C eps cost(A)"
    )
    within_bound: bool


class StructuredSolution(BaseModel):
    """
    S*: OPT' with badly-cut baseline centers swapped or added in.
    """

    model_config = ConfigDict(frozen=True)

    solution: Solution
    replaced: Dict[int, int] = Field(
        default_factory=dict, description="Baseline slot to the OPT slot it replaced"
    )
    added: Tuple[int, ...] = Field(default=(), description="Baseline slots added")
    k: int

    @property
    def size(self) -> int:
        return self.solution.size

    @property
    def within_k(self) -> bool:
        return self.size <= self.k


class PointWitness(BaseModel):
    """
    Outcome of the detour check for one client.
    """

    model_config = ConfigDict(frozen=True)

    client: int
    source: Literal["S*(p)", "S*(A(p))", "A(p)", "exhaustive", "none"]
    center: Optional[int] = None
    level: float = Field(default=float("-inf"))
    lhs: float = 0.0
    rhs: float = 0.0

    @property
    def passed(self) -> bool:
        return self.source != "none"


class SmallDistortionReport(BaseModel):
    """
    The three small-distortion properties evaluated for one decomposition.
    """

    model_config = ConfigDict(frozen=True)

    eps: float
    objective_z: Literal[1, 2]
    constant: float = Field(..., description="Tolerance C used by properties 1 and 2")
    budget_total: float
    budget_scale: float = Field(..., description="eps * (cost OPT + cost A)")
    budget_constant: float = Field(..., description="budget_total / budget_scale")
    sstar_value: float = Field(..., description="Relocated cost of S*")
    sstar_constant: float
    sstar_size: int
    k: int
    witnesses: Tuple[PointWitness, ...]
    facts_ok: bool

    @property
    def property1(self) -> bool:
        return self.budget_constant <= self.constant

    @property
    def property2(self) -> bool:
        return self.sstar_constant <= self.constant

    @property
    def property3(self) -> bool:
        return all(w.passed for w in self.witnesses)

    @property
    def passed(self) -> bool:
        return self.property1 and self.property2 and self.property3


class MonteCarloEstimate(BaseModel):
    """
    Frequency of a boolean probe over a seed family with binomial sigma.
    """

    model_config = ConfigDict(frozen=True)

    seeds: int = Field(..., ge=1)
    hits: int = Field(..., ge=0)
    outcomes: Tuple[bool, ...] = ()

    @property
    def frequency(self) -> float:
        return self.hits / self.seeds

    @property
    def sigma(self) -> float:
        p = self.frequency
        return (p * (1.0 - p) / self.seeds) ** 0.5
