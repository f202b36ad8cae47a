"""Built-in state spaces: Euclidean space, the round sphere, and flat tori.

Each manifold provides geodesics through the exponential map, uniform unit
tangent directions, geodesic distance, cut times, and the metadata consumed
by the convergence-bound calculator (dimension, diameter, Ricci lower bound,
injectivity radius, unit-sphere area of the tangent spaces, total measure).

Points are stored in embedded coordinates: length d+1 unit vectors for the
sphere S^d, plain length-d vectors for Euclidean space and the torus (torus
coordinates live in [0, P) per axis, period P).

A user manifold can be plugged in by subclassing :class:`Manifold`; it must
supply the same operations plus a correct :class:`ManifoldInfo` (there is no
machinery here to derive curvature or diameters automatically).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_NORM_TOL = 1e-12
_INPUT_TOL = 1e-6


def unit_sphere_area(d: int) -> float:
    """Surface area of the unit (d-1)-sphere in R^d: 2 pi^(d/2) / Gamma(d/2)."""
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


@dataclass(frozen=True)
class Point:
    """Manifold element in embedded coordinates."""

    coords: np.ndarray

    def __repr__(self) -> str:  # keep chain dumps readable
        return f"Point({np.array2string(self.coords, precision=6)})"


@dataclass(frozen=True)
class TangentVector:
    """Unit direction attached to a base point."""

    base: Point
    dir: np.ndarray


@dataclass(frozen=True)
class ManifoldInfo:
    """Geometry constants used by the bound calculator.

    ricci_lower is a number zeta with (d-1)*zeta <= Ric everywhere;
    omega_dm1 is the area of the Euclidean unit sphere of the tangent space.
    Infinite diameter / injectivity radius / total measure are allowed.
    """

    dim: int
    diameter: float
    ricci_lower: float
    injectivity_radius: float
    omega_dm1: float
    total_measure: float


@dataclass(frozen=True)
class CutTime:
    """Cut time along a direction; ``is_lower_bound`` marks conservative values."""

    value: float
    is_lower_bound: bool = False


class Manifold:
    """Common interface of the built-in geometries."""

    dim: int
    embedding_dim: int

    # -- construction / validation -------------------------------------------------
    def point(self, coords) -> Point:
        """Validate raw coordinates and return a Point (normalised / wrapped)."""
        raise NotImplementedError

    def tangent(self, x: Point, direction) -> TangentVector:
        """Project ``direction`` onto the tangent space at x and normalise it."""
        d = self.project_tangent(x.coords, np.asarray(direction, dtype=float))
        n = float(np.linalg.norm(d))
        if n < _NORM_TOL:
            raise ValueError("direction has no tangential component at this point")
        return TangentVector(x, d / n)

    def _check_dim(self, arr: np.ndarray, what: str) -> None:
        if arr.shape != (self.embedding_dim,):
            raise ValueError(
                f"{what} has shape {arr.shape}, expected ({self.embedding_dim},) on {self.spec}"
            )

    # -- core operations -----------------------------------------------------------
    def exp_map(self, x: Point, v: TangentVector, theta: float) -> Point:
        """Point reached from x after unit-speed geodesic time theta along v."""
        self._check_dim(x.coords, "point")
        self._check_dim(v.dir, "tangent")
        return Point(self.exp_array(x.coords, v.dir, float(theta)))

    def sample_unit_tangent(self, x: Point, rng: np.random.Generator) -> TangentVector:
        """Uniform unit tangent direction at x.

        A standard Gaussian vector in the embedding is projected onto the
        tangent space and normalised; a vanishing projection is resampled
        (probability zero, guarded against a broken generator).
        """
        return TangentVector(x, self.sample_tangent_array(x.coords, rng))

    def distance(self, x: Point, y: Point) -> float:
        self._check_dim(x.coords, "point")
        self._check_dim(y.coords, "point")
        return self.distance_array(x.coords, y.coords)

    def cut_time(self, x: Point, v: TangentVector) -> CutTime:
        raise NotImplementedError

    @property
    def info(self) -> ManifoldInfo:
        raise NotImplementedError

    @property
    def spec(self) -> str:
        raise NotImplementedError

    # -- array-level fast paths (same math, no wrapper objects) ---------------------
    def exp_array(self, x: np.ndarray, v: np.ndarray, theta: float) -> np.ndarray:
        raise NotImplementedError

    def project_tangent(self, x: np.ndarray, g: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def distance_array(self, x: np.ndarray, y: np.ndarray) -> float:
        raise NotImplementedError

    def sample_tangent_array(self, x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        for _ in range(64):
            g = rng.standard_normal(self.embedding_dim)
            t = self.project_tangent(x, g)
            n = math.sqrt(t @ t)
            if n > _NORM_TOL:
                return t / n
        raise RuntimeError("64 consecutive zero tangent projections; generator broken")

    def uniform_points(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """n draws from the normalised volume measure; only for finite-volume spaces."""
        raise ValueError(f"{self.spec} has infinite measure; no uniform distribution")


class Euclidean(Manifold):
    """Flat R^d with straight-line geodesics."""

    def __init__(self, dim: int):
        if dim < 1:
            raise ValueError("dimension must be >= 1")
        self.dim = dim
        self.embedding_dim = dim

    @property
    def spec(self) -> str:
        return f"euclidean:{self.dim}"

    def point(self, coords) -> Point:
        c = np.asarray(coords, dtype=float)
        self._check_dim(c, "point")
        return Point(c.copy())

    def exp_array(self, x, v, theta):
        return x + theta * v

    def project_tangent(self, x, g):
        return g

    def distance_array(self, x, y):
        return float(np.linalg.norm(x - y))

    def cut_time(self, x: Point, v: TangentVector) -> CutTime:
        return CutTime(math.inf)

    @property
    def info(self) -> ManifoldInfo:
        return ManifoldInfo(
            dim=self.dim,
            diameter=math.inf,
            ricci_lower=0.0,
            injectivity_radius=math.inf,
            omega_dm1=unit_sphere_area(self.dim),
            total_measure=math.inf,
        )


class Sphere(Manifold):
    """Round unit sphere S^d embedded in R^(d+1); geodesics are great circles.

    Points are renormalised after every exponential-map evaluation so that
    long chains cannot drift off the sphere (tolerance 1e-12).
    """

    def __init__(self, dim: int):
        if dim < 1:
            raise ValueError("dimension must be >= 1")
        self.dim = dim
        self.embedding_dim = dim + 1

    @property
    def spec(self) -> str:
        return f"sphere:{self.dim}"

    def point(self, coords) -> Point:
        c = np.asarray(coords, dtype=float)
        self._check_dim(c, "point")
        n = float(np.linalg.norm(c))
        if abs(n - 1.0) > _INPUT_TOL:
            raise ValueError(f"coordinates have norm {n}, not on {self.spec}")
        return Point(c / n)

    def exp_array(self, x, v, theta):
        p = math.cos(theta) * x + math.sin(theta) * v
        return p / math.sqrt(p @ p)

    def project_tangent(self, x, g):
        return g - float(g @ x) * x

    def distance_array(self, x, y):
        return math.acos(min(1.0, max(-1.0, float(x @ y))))

    def cut_time(self, x: Point, v: TangentVector) -> CutTime:
        return CutTime(math.pi)

    @property
    def info(self) -> ManifoldInfo:
        return ManifoldInfo(
            dim=self.dim,
            diameter=math.pi,
            ricci_lower=1.0 if self.dim >= 2 else 0.0,
            injectivity_radius=math.pi,
            omega_dm1=unit_sphere_area(self.dim),
            total_measure=unit_sphere_area(self.dim + 1),
        )

    def uniform_points(self, n, rng):
        g = rng.standard_normal((n, self.embedding_dim))
        return g / np.linalg.norm(g, axis=1, keepdims=True)


class Torus(Manifold):
    """Flat torus (R/PZ)^d with common period P per axis."""

    def __init__(self, dim: int, period: float):
        if dim < 1:
            raise ValueError("dimension must be >= 1")
        if not period > 0:
            raise ValueError("period must be positive")
        self.dim = dim
        self.embedding_dim = dim
        self.period = float(period)

    @property
    def spec(self) -> str:
        return f"torus:{self.dim}:{self.period!r}"

    def point(self, coords) -> Point:
        c = np.asarray(coords, dtype=float)
        self._check_dim(c, "point")
        return Point(np.mod(c, self.period))

    def exp_array(self, x, v, theta):
        return np.mod(x + theta * v, self.period)

    def project_tangent(self, x, g):
        return g

    def distance_array(self, x, y):
        d = np.abs(x - y)
        d = np.minimum(d, self.period - d)
        return float(np.linalg.norm(d))

    def cut_time(self, x: Point, v: TangentVector) -> CutTime:
        """Half the shortest closed geodesic length along v.

        Exact (P/2) when v is an axis direction; for generic directions the
        true cut time needs lattice reduction, so the injectivity radius is
        returned flagged as a lower bound (bound consumers stay conservative).
        """
        axis_aligned = np.sum(np.abs(np.abs(v.dir) - 1.0) < _NORM_TOL) == 1 and (
            np.sum(np.abs(v.dir) > _NORM_TOL) == 1
        )
        return CutTime(self.period / 2.0, is_lower_bound=not axis_aligned)

    @property
    def info(self) -> ManifoldInfo:
        return ManifoldInfo(
            dim=self.dim,
            diameter=self.period * math.sqrt(self.dim) / 2.0,
            ricci_lower=0.0,
            injectivity_radius=self.period / 2.0,
            omega_dm1=unit_sphere_area(self.dim),
            total_measure=self.period**self.dim,
        )

    def uniform_points(self, n, rng):
        return rng.uniform(0.0, self.period, size=(n, self.dim))


def from_spec(spec: str) -> Manifold:
    """Build a manifold from a specification string.

    Formats: ``euclidean:<d>``, ``sphere:<d>``, ``torus:<d>:<period>``.
    """
    parts = spec.strip().lower().split(":")
    kind = parts[0]
    try:
        if kind == "euclidean" and len(parts) == 2:
            return Euclidean(int(parts[1]))
        if kind == "sphere" and len(parts) == 2:
            return Sphere(int(parts[1]))
        if kind == "torus" and len(parts) == 3:
            return Torus(int(parts[1]), float(parts[2]))
    except ValueError as e:
        raise ValueError(f"bad manifold spec {spec!r}: {e}") from None
    raise ValueError(
        f"bad manifold spec {spec!r}; expected euclidean:<d>, sphere:<d> or torus:<d>:<period>"
    )
