from typing import Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from exceptions import StructuralError

# A point is a 1-D float64 array of length d; point sets are (count, d) arrays.
Point = np.ndarray


def as_point_array(value, name: str = "points") -> np.ndarray:
    """
    Convert nested sequences to a read-only (count, d) float64 array.

    Args:
        value: Array-like of points.
        name: Field name used in error messages.

    Returns:
        A read-only two-dimensional array.

    Raises:
        ValueError: If the array is not two-dimensional or not finite.
    """
    arr = np.array(value, dtype=np.float64, copy=True)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be a two-dimensional array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contain non-finite coordinates")
    arr.setflags(write=False)
    return arr


class Instance(BaseModel):
    """
    A discrete clustering instance: clients P, candidate centers C, the
    number of centers k and the objective exponent z.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    dimension: int = Field(..., ge=1, description="Dimension d of the space")
    clients: np.ndarray = Field(..., description="Client coordinates, shape (n, d)")
    candidates: np.ndarray = Field(
        ..., description="Candidate center coordinates, shape (m, d)"
    )
    k: int = Field(..., ge=1, description="Number of centers to open")
    objective_z: Literal[1, 2] = Field(
        ..., description="1 for k-median, 2 for k-means"
    )

    @field_validator("clients", "candidates", mode="before")
    @classmethod
    def _as_points(cls, value, info):
        return as_point_array(value, info.field_name)

    @model_validator(mode="after")
    def _check_shapes(self) -> "Instance":
        for name, arr in (("clients", self.clients), ("candidates", self.candidates)):
            if arr.shape[0] < 1:
                raise ValueError(f"{name} must not be empty")
            if arr.shape[1] != self.dimension:
                raise ValueError(
                    f"{name} have dimension {arr.shape[1]}, expected {self.dimension}"
                )
        if self.k > self.candidates.shape[0]:
            raise ValueError(
                f"k={self.k} exceeds the number of candidates {self.candidates.shape[0]}"
            )
        return self

    @property
    def n(self) -> int:
        return int(self.clients.shape[0])

    @property
    def m(self) -> int:
        return int(self.candidates.shape[0])

    def all_points(self) -> np.ndarray:
        """Clients followed by candidates, shape (n + m, d)."""
        return np.vstack([self.clients, self.candidates])

    def with_k(self, k: int) -> "Instance":
        """Copy of the instance with a different number of centers."""
        return Instance(
            dimension=self.dimension,
            clients=self.clients,
            candidates=self.candidates,
            k=k,
            objective_z=self.objective_z,
        )

    def with_candidates(self, candidates: np.ndarray) -> "Instance":
        """Copy of the instance with a different candidate set."""
        return Instance(
            dimension=self.dimension,
            clients=self.clients,
            candidates=candidates,
            k=min(self.k, len(candidates)),
            objective_z=self.objective_z,
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Instance):
            return NotImplemented
        return (
            self.dimension == other.dimension
            and self.k == other.k
            and self.objective_z == other.objective_z
            and np.array_equal(self.clients, other.clients)
            and np.array_equal(self.candidates, other.candidates)
        )

    __hash__ = None


class Solution(BaseModel):
    """
    A set of opened candidate indices, optionally with a client assignment.
    """

    model_config = ConfigDict(frozen=True)

    center_indices: Tuple[int, ...] = Field(
        ..., description="Ascending, distinct indices into the candidate set"
    )
    assignment: Optional[Tuple[int, ...]] = Field(
        default=None,
        description="Per client, the candidate index serving it",
    )

    @field_validator("center_indices", mode="before")
    @classmethod
    def _sorted_unique(cls, value):
        indices = sorted({int(i) for i in value})
        if indices and indices[0] < 0:
            raise ValueError("center indices must be non-negative")
        return tuple(indices)

    @model_validator(mode="after")
    def _assignment_in_centers(self) -> "Solution":
        if self.assignment is not None:
            opened = set(self.center_indices)
            stray = [c for c in self.assignment if c not in opened]
            if stray:
                raise ValueError(f"assignment uses unopened centers {sorted(set(stray))}")
        return self

    @property
    def size(self) -> int:
        return len(self.center_indices)

    def check_against(self, instance: Instance) -> None:
        """
        Verify that the solution is feasible for the instance.

        Args:
            instance: Instance the indices refer to.

        Raises:
            StructuralError: If an index is out of range, the solution opens
                more than k centers or the assignment has the wrong length.
        """
        if self.center_indices and self.center_indices[-1] >= instance.m:
            raise StructuralError(
                f"center index {self.center_indices[-1]} out of range for m={instance.m}"
            )
        if self.size > instance.k:
            raise StructuralError(f"{self.size} centers exceed k={instance.k}")
        if self.assignment is not None and len(self.assignment) != instance.n:
            raise StructuralError(
                f"assignment covers {len(self.assignment)} clients, expected {instance.n}"
            )

    def centers(self, instance: Instance) -> np.ndarray:
        """Coordinates of the opened centers, shape (size, d)."""
        return instance.candidates[list(self.center_indices)]


class Relocation(BaseModel):
    """
    The relocated client set P~: each client either stays or moves onto its
    nearest baseline center.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    targets: np.ndarray = Field(..., description="Point p~ per client, shape (n, d)")
    sources: Tuple[int, ...] = Field(
        ...,
        description="Per client, -1 if p~ = p, else the candidate index p~ sits on",
    )

    @field_validator("targets", mode="before")
    @classmethod
    def _as_points(cls, value):
        return as_point_array(value, "targets")

    @model_validator(mode="after")
    def _check_lengths(self) -> "Relocation":
        if len(self.sources) != self.targets.shape[0]:
            raise ValueError("targets and sources must have the same length")
        return self

    @classmethod
    def identity(cls, instance: Instance) -> "Relocation":
        """The relocation leaving every client in place."""
        return cls(targets=instance.clients, sources=(-1,) * instance.n)

    @property
    def moved(self) -> np.ndarray:
        """Boolean mask of relocated clients."""
        return np.asarray(self.sources) >= 0

    def check_against(self, instance: Instance) -> None:
        """
        Raises:
            StructuralError: If the relocation does not cover the clients.
        """
        if self.targets.shape != instance.clients.shape:
            raise StructuralError(
                f"relocation has shape {self.targets.shape}, "
                f"expected {instance.clients.shape}"
            )
