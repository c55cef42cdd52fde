"""Task descriptors shared by every concept family."""

from __future__ import annotations

from dataclasses import dataclass


class TaskError(ValueError):
    """Raised for invalid concepts, assignments, or task configuration."""


_KINDS = ("rectangle", "bimodal", "boolean", "hierarchy")
_LOSSES = ("squared_error", "softmax_cross_entropy")
_PLACEMENTS = ("final_step", "summed")


@dataclass(frozen=True)
class TaskSpec:
    """Static description of one concept family.

    ``loss_placement`` says whether training scores only the student's
    final guess or the sum over every step of the episode.
    """

    kind: str
    concept_dim: int
    example_dim: int
    k_pretrain: int
    k_teach: int
    loss_kind: str
    loss_placement: str
    n_candidates: int | None = None  # discrete families only

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise TaskError(f"unknown task kind {self.kind!r}")
        if self.loss_kind not in _LOSSES:
            raise TaskError(f"unknown loss kind {self.loss_kind!r}")
        if self.loss_placement not in _PLACEMENTS:
            raise TaskError(f"unknown loss placement {self.loss_placement!r}")
        if self.k_pretrain <= 0 or self.k_teach <= 0:
            raise TaskError("episode lengths must be positive")
        checks = {
            "rectangle": self.concept_dim == 4
            and self.example_dim == 2
            and self.n_candidates is None,
            "bimodal": self.concept_dim == 2
            and self.example_dim == 1
            and self.n_candidates is None,
            "boolean": self.concept_dim == 10 and self.n_candidates == 36,
            "hierarchy": self.n_candidates is not None
            and self.n_candidates > 0,
        }
        if not checks[self.kind]:
            raise TaskError(
                f"inconsistent dimensions for {self.kind}: "
                f"concept {self.concept_dim}, example {self.example_dim}, "
                f"candidates {self.n_candidates}"
            )

    @property
    def discrete(self) -> bool:
        return self.n_candidates is not None
