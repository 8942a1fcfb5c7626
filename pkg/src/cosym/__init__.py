"""Numerical checks for precosymplectic manifolds, torus moment maps and foliation groupoids."""

from .constructions import build_scenario, cn_example, mapping_torus, level_set_structure, sphere_mapping_torus
from .geometry import ChartedManifold, FormPair, classify_structure, verify_closed
from .scenario import Scenario
from .tensor_point import PointTensor, SubspaceBasis, kernel_basis, lichnerowicz_matrix

__version__ = "0.1.0"

__all__ = [
    "ChartedManifold",
    "FormPair",
    "PointTensor",
    "Scenario",
    "SubspaceBasis",
    "build_scenario",
    "classify_structure",
    "cn_example",
    "kernel_basis",
    "level_set_structure",
    "lichnerowicz_matrix",
    "mapping_torus",
    "sphere_mapping_torus",
    "verify_closed",
]
