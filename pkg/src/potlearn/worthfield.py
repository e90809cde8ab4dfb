"""Ground-truth worth field over a square grid.

The field is a mixture of bivariate Gaussian target signals evaluated at
cell centroids.  Cells are unit squares; the centroid of cell (ix, iy) sits
at (ix + 0.5, iy + 0.5).  Fields are immutable after construction and can be
shared freely across concurrent runs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .rng import make_rng


@dataclass(frozen=True, eq=False)
class GaussianComponent:
    """One weighted bivariate Gaussian signal source."""

    weight: float
    mean: np.ndarray      # (2,)
    cov: np.ndarray       # (2, 2) symmetric positive-definite

    def __post_init__(self) -> None:
        object.__setattr__(self, "mean", np.asarray(self.mean, dtype=float).reshape(2))
        cov = np.asarray(self.cov, dtype=float).reshape(2, 2)
        object.__setattr__(self, "cov", cov)
        if self.weight < 0:
            raise ValueError("component weight must be non-negative")
        if abs(cov[0, 1] - cov[1, 0]) > 1e-12:
            raise ValueError("covariance must be symmetric")
        if np.linalg.det(cov) <= 0 or cov[0, 0] <= 0:
            raise ValueError("covariance must be positive-definite")

    def to_dict(self) -> dict:
        return {
            "weight": float(self.weight),
            "mean": [float(v) for v in self.mean],
            "cov": [[float(v) for v in row] for row in self.cov],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GaussianComponent":
        return cls(weight=d["weight"], mean=d["mean"], cov=d["cov"])


def gaussian_density(points: np.ndarray, mean: np.ndarray, cov: np.ndarray) -> np.ndarray:
    """Bivariate normal density at each row of `points`."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    det = float(np.linalg.det(cov))
    if det <= 0:
        raise ValueError("singular covariance")
    inv = np.linalg.inv(cov)
    diff = pts - np.asarray(mean, dtype=float)
    quad = np.einsum("ni,ij,nj->n", diff, inv, diff)
    return np.exp(-0.5 * quad) / (2.0 * math.pi * math.sqrt(det))


class WorthField:
    """Mixture-of-Gaussians worth over an L x L grid of unit cells."""

    def __init__(self, components: Sequence[GaussianComponent], grid_size: int):
        if grid_size < 1:
            raise ValueError("grid_size must be positive")
        comps = tuple(components)
        if not comps:
            raise ValueError("need at least one component")
        total = sum(c.weight for c in comps)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"component weights sum to {total}, expected 1")
        self.components = comps
        self.grid_size = int(grid_size)
        self._raster: np.ndarray | None = None

    @property
    def n_components(self) -> int:
        return len(self.components)

    def centroids(self) -> np.ndarray:
        """All cell centroids, row-major over (ix, iy), shape (L*L, 2)."""
        L = self.grid_size
        ix, iy = np.meshgrid(np.arange(L), np.arange(L), indexing="ij")
        return np.column_stack([ix.ravel() + 0.5, iy.ravel() + 0.5]).astype(float)

    def density(self, points: np.ndarray) -> np.ndarray:
        """Mixture density at each row of `points`."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.zeros(len(pts))
        for c in self.components:
            out += c.weight * gaussian_density(pts, c.mean, c.cov)
        return out

    def evaluate(self, point: Sequence[float]) -> float:
        """Worth at a single location (normally a cell centroid)."""
        return float(self.density(np.asarray(point, dtype=float).reshape(1, 2))[0])

    def raster(self) -> np.ndarray:
        """Worth at every centroid as an (L, L) array indexed [ix, iy]; cached."""
        if self._raster is None:
            L = self.grid_size
            self._raster = self.density(self.centroids()).reshape(L, L)
            self._raster.setflags(write=False)
        return self._raster

    def total_mass(self) -> float:
        """Sum of worth over all cells (unit cell area)."""
        return float(self.raster().sum())

    def local_gradient(self, point: Sequence[float]) -> float:
        """Magnitude of the finite-difference worth gradient at a centroid.

        Central differences over neighboring centroids, one-sided at grid
        boundaries.
        """
        raster = self.raster()
        L = self.grid_size
        ix = min(max(int(math.floor(point[0])), 0), L - 1)
        iy = min(max(int(math.floor(point[1])), 0), L - 1)

        def axis_slope(i: int, values: np.ndarray) -> float:
            if L == 1:
                return 0.0
            lo, hi = max(i - 1, 0), min(i + 1, L - 1)
            return (float(values[hi]) - float(values[lo])) / float(hi - lo)

        gx = axis_slope(ix, raster[:, iy])
        gy = axis_slope(iy, raster[ix, :])
        return math.hypot(gx, gy)

    def to_dict(self) -> dict:
        return {
            "grid_size": self.grid_size,
            "components": [c.to_dict() for c in self.components],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "WorthField":
        return cls(
            components=[GaussianComponent.from_dict(c) for c in d["components"]],
            grid_size=d["grid_size"],
        )


def generate_scenario(
    seed: int,
    grid_size: int = 40,
    component_range: tuple[int, int] = (1, 5),
) -> WorthField:
    """Random worth field, fully determined by the seed.

    The component count is uniform over the (inclusive) range; means fall in
    the grid interior with a 10% margin so mass leakage past the boundary
    stays small; weights come from a flat Dirichlet; covariances are diagonal
    with per-axis standard deviations uniform in [L/20, L/8].
    """
    if grid_size < 8:
        raise ValueError("grid_size must be at least 8")
    lo, hi = component_range
    if not 1 <= lo <= hi:
        raise ValueError("component_range must satisfy 1 <= lo <= hi")
    rng = make_rng(seed, 0xF1E1D)
    m = int(rng.integers(lo, hi + 1))
    margin = 0.1 * grid_size
    means = rng.uniform(margin, grid_size - margin, size=(m, 2))
    weights = rng.dirichlet(np.ones(m))
    sigmas = rng.uniform(grid_size / 20.0, grid_size / 8.0, size=(m, 2))
    components = [
        GaussianComponent(
            weight=float(weights[j]),
            mean=means[j],
            cov=np.diag(sigmas[j] ** 2),
        )
        for j in range(m)
    ]
    return WorthField(components, grid_size)
