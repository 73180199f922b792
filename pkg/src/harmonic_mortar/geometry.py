"""Annular stator/rotor geometry and structured polar meshes.

The stator ring ``r_gamma < r < r_outer`` and the rotor ring
``r_shaft < r < r_gamma`` are both images of a rectangle in (r, theta)
under the exact polar map, so no polygonal approximation of the air-gap
circle is ever made.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

STATOR = "stator"
ROTOR = "rotor"
SUBDOMAINS = (STATOR, ROTOR)


@dataclass(frozen=True)
class AnnulusGeometry:
    """Radii of the two-ring domain.

    ``r_shaft`` carries the rotor Dirichlet boundary, ``r_gamma`` is the
    sliding interface and ``r_outer`` carries the stator Dirichlet boundary.
    """

    r_shaft: float = 0.02
    r_gamma: float = 0.0447
    r_outer: float = 0.0675

    def __post_init__(self):
        radii = (self.r_shaft, self.r_gamma, self.r_outer)
        if not all(math.isfinite(r) for r in radii):
            raise ValueError(f"radii must be finite, got {radii}")
        if not 0.0 < self.r_shaft < self.r_gamma < self.r_outer:
            raise ValueError(
                "need 0 < r_shaft < r_gamma < r_outer, got "
                f"{self.r_shaft}, {self.r_gamma}, {self.r_outer}"
            )

    def radial_interval(self, subdomain: str) -> tuple[float, float]:
        if subdomain == STATOR:
            return self.r_gamma, self.r_outer
        if subdomain == ROTOR:
            return self.r_shaft, self.r_gamma
        raise ValueError(f"unknown subdomain {subdomain!r}")

    def area(self, subdomain: str) -> float:
        a, b = self.radial_interval(subdomain)
        return math.pi * (b * b - a * a)

    @property
    def interface_length(self) -> float:
        return 2.0 * math.pi * self.r_gamma

    def default_n_r(self, subdomain: str, n_theta: int) -> int:
        """Radial span count giving near-square elements at the interface."""
        a, b = self.radial_interval(subdomain)
        dtheta = 2.0 * math.pi / n_theta
        return max(1, math.ceil((b - a) / (self.r_gamma * dtheta) - 1e-9))


def polar_map(r, theta):
    """Map polar coordinates to Cartesian ``(x, y)``; Jacobian determinant is ``r``."""
    r = np.asarray(r, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if np.any(~(r > 0.0)):
        raise ValueError("polar_map needs r > 0")
    return r * np.cos(theta), r * np.sin(theta)


@dataclass(frozen=True)
class PolarMesh:
    """Uniform tensor mesh of one ring on its reference rectangle.

    Angular spans are periodic and cover ``[0, 2*pi)`` once; radial spans
    are uniform on ``[r_inner, r_outer]`` of the subdomain.
    """

    geometry: AnnulusGeometry
    subdomain: str
    n_theta: int
    n_r: int

    def __post_init__(self):
        if self.subdomain not in SUBDOMAINS:
            raise ValueError(f"unknown subdomain {self.subdomain!r}")
        if int(self.n_theta) != self.n_theta or self.n_theta < 3:
            raise ValueError(f"n_theta must be an integer >= 3, got {self.n_theta}")
        if int(self.n_r) != self.n_r or self.n_r < 1:
            raise ValueError(f"n_r must be an integer >= 1, got {self.n_r}")

    @property
    def r_range(self) -> tuple[float, float]:
        return self.geometry.radial_interval(self.subdomain)

    @property
    def dtheta(self) -> float:
        return 2.0 * math.pi / self.n_theta

    @property
    def dr(self) -> float:
        a, b = self.r_range
        return (b - a) / self.n_r

    @property
    def theta_breaks(self) -> np.ndarray:
        return np.linspace(0.0, 2.0 * math.pi, self.n_theta + 1)

    @property
    def r_breaks(self) -> np.ndarray:
        a, b = self.r_range
        return np.linspace(a, b, self.n_r + 1)

    @property
    def n_elements(self) -> int:
        return self.n_theta * self.n_r

    @property
    def interface_spans(self) -> int:
        return self.n_theta

    def element_areas(self) -> np.ndarray:
        """Exact mapped areas, shape ``(n_r, n_theta)``."""
        rb = self.r_breaks
        ring = 0.5 * (rb[1:] ** 2 - rb[:-1] ** 2)
        return np.outer(ring, np.full(self.n_theta, self.dtheta))

    def refine(self) -> "PolarMesh":
        return replace(self, n_theta=2 * self.n_theta, n_r=2 * self.n_r)


def build_mesh(geom: AnnulusGeometry, subdomain: str, n_theta: int,
               n_r: int | None = None) -> PolarMesh:
    if n_r is None:
        n_r = geom.default_n_r(subdomain, n_theta)
    return PolarMesh(geom, subdomain, n_theta, n_r)


def mesh_at_level(geom: AnnulusGeometry, subdomain: str, base_n_theta: int,
                  level: int, base_n_r: int | None = None) -> PolarMesh:
    """Mesh after ``level - 1`` uniform refinements of the base mesh (level 1 = base)."""
    if level < 1:
        raise ValueError(f"level must be >= 1, got {level}")
    mesh = build_mesh(geom, subdomain, base_n_theta, base_n_r)
    for _ in range(level - 1):
        mesh = mesh.refine()
    return mesh
