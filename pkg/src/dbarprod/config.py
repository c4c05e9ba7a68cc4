"""Resolution and tolerance knobs shared by the quadrature operators.

All defaults were fixed by doubling studies (see scripts/tolerance_study.py):
each resolution was doubled until the observed change dropped below a tenth
of the tolerance it backs. Rerun the study before changing a default.
"""

from __future__ import annotations

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class SolverConfig:
    # boundary quadrature
    boundary_nodes: int = 512
    nested_boundary_nodes: int = 128

    # area mesh (radial x angular for polar meshes, cells per side for
    # cartesian meshes); "nested"/"deep" apply to transforms appearing
    # inside one/two or more outer area integrals
    area_radial: int = 200
    area_angular: int = 256
    cart_cells: int = 128
    cart_subsample: int = 4
    nested_area_radial: int = 48
    nested_area_angular: int = 64
    deep_area_radial: int = 24
    deep_area_angular: int = 32

    # moving polar patch around the evaluation point
    patch_radial: int = 16
    patch_angular: int = 32
    patch_factor: float = 4.0          # times the largest mesh cell diameter
    patch_boundary_clip: float = 0.9   # times distance to the boundary

    # finite differences and boundary classification
    fd_step_rel: float = 1e-4          # times the domain diameter
    boundary_proximal_tol: float = 1e-6

    # product solver
    max_dimension: int = 3

    def with_overrides(self, **kw) -> "SolverConfig":
        return replace(self, **kw)


DEFAULT = SolverConfig()
