from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Any, Callable

from .geometry import ChartedManifold, FormPair

if TYPE_CHECKING:
    from .groupoid import FoliationSpec, SubmersionGroupoid
    from .hamiltonian import TorusActionSpec


@dataclass(frozen=True)
class Scenario:
    """One example space end to end: chart, forms, and optional symmetry data.

    ``return_map``/``holonomy_point`` describe the first-return map on a
    transversal disk (for holonomy); ``slice_param``/``slice_chart`` describe
    a slice of the zero level of the moment map (for reduction).
    """

    name: str
    manifold: ChartedManifold
    forms: FormPair
    action: "TorusActionSpec | None" = None
    foliation: "FoliationSpec | None" = None
    groupoid: "SubmersionGroupoid | None" = None
    return_map: Callable | None = None
    holonomy_point: Any = None
    slice_param: Callable | None = None
    slice_chart: ChartedManifold | None = None
    clip_box: tuple | None = None
    notes: dict = field(default_factory=dict)

    def __post_init__(self):
        dim = self.manifold.dim
        if self.foliation is not None and self.foliation.dim != dim:
            raise ValueError("foliation dimension does not match the manifold")
        if self.action is not None and self.action.dim != dim:
            raise ValueError("action dimension does not match the manifold")

    @property
    def dim(self) -> int:
        return self.manifold.dim

    def with_grid(self, counts) -> "Scenario":
        return replace(self, manifold=self.manifold.with_counts(counts))

    def replace(self, **changes) -> "Scenario":
        return replace(self, **changes)
