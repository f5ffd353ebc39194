import math
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from conf import settings


def default_rho(eps: float) -> float:
    """
    Portal spacing eps / log2(1/eps), clamped to at most 1/2.

    Args:
        eps: Accuracy parameter in (0, 1).

    Returns:
        The portal spacing parameter rho.
    """
    return min(0.5, eps / math.log2(1.0 / eps))


class CutParams(BaseModel):
    """
    Parameters of the badly-cut analysis for a given accuracy and dimension.
    """

    model_config = ConfigDict(frozen=True)

    eps: float = Field(..., gt=0.0, lt=1.0, description="Accuracy parameter")
    dimension: int = Field(..., ge=1, description="Dimension d")
    rho: Optional[float] = Field(
        default=None,
        gt=0.0,
        lt=1.0,
        description="Portal spacing; eps/log2(1/eps) when omitted",
    )

    @model_validator(mode="before")
    @classmethod
    def _fill_rho(cls, data):
        if isinstance(data, dict) and data.get("rho") is None and "eps" in data:
            eps = float(data["eps"])
            if 0.0 < eps < 1.0:
                data = {**data, "rho": default_rho(eps)}
        return data

    @property
    def tau(self) -> float:
        """log2(d) + log2(1/eps)."""
        return math.log2(self.dimension) + math.log2(1.0 / self.eps)


class BaselineParams(BaseModel):
    """
    Knobs of the D^z-sampling plus single-swap local search baseline.
    """

    model_config = ConfigDict(frozen=True)

    seeding_rounds: int = Field(
        default_factory=lambda: settings.BASELINE_SEEDING_ROUNDS,
        ge=1,
        description="Independent seedings; the cheapest local optimum is kept",
    )
    iterations_per_k: int = Field(
        default_factory=lambda: settings.BASELINE_ITERATIONS_PER_K,
        ge=1,
        description="Local search stops after iterations_per_k * k improving swaps",
    )
    improvement_threshold: float = Field(
        default_factory=lambda: settings.BASELINE_IMPROVEMENT,
        gt=0.0,
        description="A swap must lower the cost by this relative amount",
    )


class SolverParams(BaseModel):
    """
    Parameters of the end-to-end approximation scheme.
    """

    model_config = ConfigDict(frozen=True)

    eps: float = Field(
        default_factory=lambda: settings.DEFAULT_EPS,
        gt=0.0,
        lt=1.0,
        description="Accuracy parameter",
    )
    trials: int = Field(
        default_factory=lambda: settings.DEFAULT_TRIALS,
        ge=1,
        description="Independent decompositions; the best trial wins",
    )
    rng_seed: int = Field(
        default_factory=lambda: settings.DEFAULT_SEED,
        ge=0,
        description="Master seed; per-trial seeds are derived from it",
    )
    objective_z: Optional[Literal[1, 2]] = Field(
        default=None,
        description="Overrides the instance objective when set",
    )
    baseline: BaselineParams = Field(default_factory=BaselineParams)
    threads: int = Field(
        default_factory=lambda: settings.KCLUST_THREADS,
        ge=1,
        description="Worker threads used for trials",
    )

    @property
    def rho(self) -> float:
        return default_rho(self.eps)

    def cut_params(self, dimension: int) -> CutParams:
        return CutParams(eps=self.eps, dimension=dimension)
