"""Unnormalised target densities with level-set structure and exact samplers.

A :class:`Target` bundles a density p >= 0 on one of the built-in manifolds
with the metadata the bound calculator needs: the sup norm of p, the diameter
of the support W = {p > 0}, the worst gap inside geodesic sections of the
superlevel sets (``max_gap``), whether chords of the support along geodesics
have bounded length (``lambda_finite`` / ``lambda_value``), and the level-set
function t -> volume({p > t}).

Superlevel sets are strict throughout ({p > t}, not {p >= t}), matching the
lower semi-continuity convention of the densities.

Presets (all with exact metadata and exact reference samplers):

* ``uniform``        - constant density on a finite-volume manifold
* ``cap``            - uniform on an open spherical cap of given colatitude
* ``vmf``            - von Mises-Fisher density exp(kappa <x, mu>) on a sphere
* ``convex-uniform`` - uniform on an open ball or box in Euclidean space
* ``ball-gauss``     - isotropic Gaussian truncated to an open ball

Connectedness of the support is assumed, not checked; custom densities must
come with correct metadata.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy import special

from . import manifolds
from .manifolds import Manifold, Point, Sphere, Euclidean, Torus


# ---------------------------------------------------------------------------
# geometry helpers
# ---------------------------------------------------------------------------

def _sin_power_integral(d: int, psi: float) -> float:
    """integral_0^psi sin^(d-1)(t) dt via the regularised incomplete beta."""
    if psi <= 0.0:
        return 0.0
    full = special.beta(d / 2.0, 0.5)
    if psi >= math.pi:
        return float(full)
    if psi <= math.pi / 2.0:
        s2 = math.sin(psi) ** 2
        return float(0.5 * full * special.betainc(d / 2.0, 0.5, s2))
    return float(full) - _sin_power_integral(d, math.pi - psi)


def sphere_cap_area(d: int, colatitude: float) -> float:
    """Area of the cap {angle to pole < colatitude} on the unit sphere S^d."""
    return manifolds.unit_sphere_area(d) * _sin_power_integral(d, colatitude)


def ball_volume(d: int, radius: float) -> float:
    return math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0) * radius**d


def _orthonormal_frame(pole: np.ndarray) -> np.ndarray:
    """Deterministic orthonormal basis of the hyperplane orthogonal to pole."""
    dim = pole.shape[0]
    vecs = []
    for i in range(dim):
        e = np.zeros(dim)
        e[i] = 1.0
        e = e - (e @ pole) * pole
        for v in vecs:
            e = e - (e @ v) * v
        n = np.linalg.norm(e)
        if n > 1e-9:
            vecs.append(e / n)
        if len(vecs) == dim - 1:
            break
    return np.array(vecs)


def _unit_orthogonal(pole: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    """n uniform unit vectors orthogonal to pole."""
    g = rng.standard_normal((n, pole.shape[0]))
    g -= np.outer(g @ pole, pole)
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def _bisect_monotone(fn, targets: np.ndarray, lo: float, hi: float, iters: int = 80) -> np.ndarray:
    """Vectorised bisection solve fn(x) = target for increasing fn."""
    lo_v = np.full_like(targets, lo, dtype=float)
    hi_v = np.full_like(targets, hi, dtype=float)
    for _ in range(iters):
        mid = 0.5 * (lo_v + hi_v)
        below = fn(mid) < targets
        lo_v = np.where(below, mid, lo_v)
        hi_v = np.where(below, hi_v, mid)
    return 0.5 * (lo_v + hi_v)


# ---------------------------------------------------------------------------
# level-set functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LevelSetFunction:
    """t -> volume of the strict superlevel set {p > t}.

    ``stderr`` is zero for analytic evaluators; Monte-Carlo evaluators report
    the binomial standard error of the fixed sample they integrate over.
    """

    measure: Callable[[float], float]
    stderr: Callable[[float], float]
    analytic: bool
    n_samples: int = 0

    def __call__(self, t: float) -> float:
        return self.measure(t)


def _analytic_level_fn(measure: Callable[[float], float]) -> LevelSetFunction:
    return LevelSetFunction(measure=measure, stderr=lambda t: 0.0, analytic=True)


def _monte_carlo_level_fn(
    manifold: Manifold, density_batch, n_samples: int, seed: int
) -> LevelSetFunction:
    total = manifold.info.total_measure
    if not math.isfinite(total):
        raise ValueError(
            "Monte-Carlo level-set evaluation needs a finite-volume manifold; "
            "supply an analytic level-set function instead"
        )
    from .rng import make_stream

    # One fixed sample shared across all t keeps the estimate monotone in t.
    pts = manifold.uniform_points(n_samples, make_stream(seed, 0))
    vals = density_batch(pts)

    def measure(t: float) -> float:
        return total * float(np.mean(vals > t))

    def stderr(t: float) -> float:
        f = float(np.mean(vals > t))
        return total * math.sqrt(max(f * (1.0 - f), 1e-300) / n_samples)

    return LevelSetFunction(measure=measure, stderr=stderr, analytic=False, n_samples=n_samples)


# ---------------------------------------------------------------------------
# the target bundle
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Target:
    """Unnormalised density with the metadata used by bounds and harness."""

    manifold: Manifold
    name: str
    spec_string: str
    density: Callable[[np.ndarray], float]
    density_batch: Callable[[np.ndarray], np.ndarray]
    p_max: float
    diam_w: float
    max_gap: Optional[float]          # sup gap inside geodesic superlevel sections
    max_gap_analytic: bool
    lambda_finite: bool
    lambda_value: float               # inf when lambda_finite is False
    support_measure: Optional[float]  # volume of W when known
    level_set: LevelSetFunction
    sampler: Optional[Callable[[int, np.random.Generator], np.ndarray]]
    convex_level_sets: bool = False
    is_uniform: bool = False
    params: dict = field(default_factory=dict)

    @property
    def has_reference_sampler(self) -> bool:
        return self.sampler is not None

    def pdf(self, x: Point) -> float:
        return float(self.density(x.coords))

    def rescaled(self, c: float) -> "Target":
        """Same distribution with density multiplied by c > 0."""
        if not c > 0:
            raise ValueError("scale factor must be positive")
        base_d, base_b = self.density, self.density_batch
        base_level = self.level_set
        level = LevelSetFunction(
            measure=lambda t: base_level.measure(t / c),
            stderr=lambda t: base_level.stderr(t / c),
            analytic=base_level.analytic,
            n_samples=base_level.n_samples,
        )
        return replace(
            self,
            name=f"{self.name}*{c}",
            spec_string=self.spec_string,
            density=lambda x: c * base_d(x),
            density_batch=lambda x: c * base_b(x),
            p_max=c * self.p_max,
            level_set=level,
        )


# ---------------------------------------------------------------------------
# presets
# ---------------------------------------------------------------------------

def uniform_target(manifold: Manifold) -> Target:
    """Constant density 1 on a finite-volume manifold."""
    total = manifold.info.total_measure
    if not math.isfinite(total):
        raise ValueError(f"uniform target needs finite volume; {manifold.spec} has infinite measure")
    dim = manifold.embedding_dim

    def density(x):
        return 1.0

    def density_batch(x):
        return np.ones(x.shape[0])

    level = _analytic_level_fn(lambda t: total if t < 1.0 else 0.0)
    return Target(
        manifold=manifold,
        name="uniform",
        spec_string=f"uniform:{manifold.spec}",
        density=density,
        density_batch=density_batch,
        p_max=1.0,
        diam_w=manifold.info.diameter,
        max_gap=0.0,
        max_gap_analytic=True,
        lambda_finite=False,  # geodesics on compact manifolds wrap through W forever
        lambda_value=math.inf,
        support_measure=total,
        level_set=level,
        sampler=lambda n, rng: manifold.uniform_points(n, rng),
        is_uniform=True,
    )


def cap_target(manifold: Sphere, colatitude: float, pole=None) -> Target:
    """Uniform density on the open cap {angle to pole < colatitude} of S^d."""
    if not isinstance(manifold, Sphere):
        raise ValueError("cap target is defined on spheres")
    if not 0.0 < colatitude <= math.pi:
        raise ValueError(f"cap colatitude must lie in (0, pi], got {colatitude}")
    d = manifold.dim
    pole_arr = (
        np.asarray(pole, dtype=float)
        if pole is not None
        else np.eye(manifold.embedding_dim)[-1]
    )
    pole_arr = pole_arr / np.linalg.norm(pole_arr)
    cos_psi = math.cos(colatitude)
    area = sphere_cap_area(d, colatitude)

    def density(x):
        return 1.0 if float(x @ pole_arr) > cos_psi else 0.0

    def density_batch(x):
        return (x @ pole_arr > cos_psi).astype(float)

    def sampler(n, rng):
        u = rng.random(n)
        if d == 2:
            cos_t = 1.0 - u * (1.0 - cos_psi)
        else:
            cdf = lambda th: np.vectorize(_sin_power_integral, otypes=[float])(d, th)
            tot = _sin_power_integral(d, colatitude)
            theta = _bisect_monotone(lambda th: cdf(th) / tot, u, 0.0, colatitude)
            cos_t = np.cos(theta)
        sin_t = np.sqrt(np.clip(1.0 - cos_t**2, 0.0, None))
        perp = _unit_orthogonal(pole_arr, n, rng)
        return cos_t[:, None] * pole_arr + sin_t[:, None] * perp

    level = _analytic_level_fn(lambda t: area if t < 1.0 else 0.0)
    # Hemispheres and smaller intersect great circles in single arcs inside the
    # cut window -> no gaps.  Larger caps admit a gap of length 2(pi - psi)
    # from sections tangent to the boundary circle.
    gap = 0.0 if colatitude <= math.pi / 2.0 else 2.0 * (math.pi - colatitude)
    return Target(
        manifold=manifold,
        name="cap",
        spec_string=f"cap:{manifold.spec}:psi={colatitude!r}",
        density=density,
        density_batch=density_batch,
        p_max=1.0,
        diam_w=min(2.0 * colatitude, math.pi),
        max_gap=gap,
        max_gap_analytic=True,
        lambda_finite=False,
        lambda_value=math.inf,
        support_measure=area,
        level_set=level,
        sampler=sampler,
        is_uniform=True,
        params={"colatitude": colatitude, "pole": pole_arr},
    )


def vmf_target(manifold: Sphere, concentration: float, mean=None) -> Target:
    """von Mises-Fisher density exp(concentration * <x, mean>) on S^d."""
    if not isinstance(manifold, Sphere):
        raise ValueError("vMF target is defined on spheres")
    if not concentration > 0:
        raise ValueError("concentration must be positive")
    d = manifold.dim
    mu = (
        np.asarray(mean, dtype=float)
        if mean is not None
        else np.eye(manifold.embedding_dim)[-1]
    )
    mu = mu / np.linalg.norm(mu)
    kap = float(concentration)
    total = manifold.info.total_measure

    def density(x):
        return math.exp(kap * float(x @ mu))

    def density_batch(x):
        return np.exp(kap * (x @ mu))

    def level_measure(t: float) -> float:
        if t >= math.exp(kap):
            return 0.0
        c = math.log(t) / kap
        if c <= -1.0:
            return total
        return sphere_cap_area(d, math.acos(min(1.0, c)))

    def sampler(n, rng):
        if d == 2:
            u = rng.random(n)
            w = 1.0 + np.log(u + (1.0 - u) * math.exp(-2.0 * kap)) / kap
        else:
            w = _vmf_cosines(d + 1, kap, n, rng)
        sin_t = np.sqrt(np.clip(1.0 - w**2, 0.0, None))
        perp = _unit_orthogonal(mu, n, rng)
        return w[:, None] * mu + sin_t[:, None] * perp

    mu_str = ",".join(repr(float(c)) for c in mu)
    return Target(
        manifold=manifold,
        name="vmf",
        spec_string=f"vmf:{manifold.spec}:kappa={kap!r}:mu={mu_str}",
        density=density,
        density_batch=density_batch,
        p_max=math.exp(kap),
        diam_w=math.pi,
        # Superlevel caps larger than a hemisphere leave gaps approaching pi.
        max_gap=math.pi,
        max_gap_analytic=True,
        lambda_finite=False,
        lambda_value=math.inf,
        support_measure=total,
        level_set=_analytic_level_fn(level_measure),
        sampler=sampler,
        params={"concentration": kap, "mean": mu},
    )


def _vmf_cosines(embed_dim: int, kap: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """Cosine component of vMF draws on S^(embed_dim-1), rejection scheme."""
    m = embed_dim - 1
    b = m / (math.sqrt(4.0 * kap**2 + m**2) + 2.0 * kap)
    x0 = (1.0 - b) / (1.0 + b)
    c = kap * x0 + m * math.log(1.0 - x0**2)
    out = np.empty(n)
    filled = 0
    while filled < n:
        k = n - filled
        z = rng.beta(m / 2.0, m / 2.0, size=k)
        w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z)
        u = rng.random(k)
        ok = kap * w + m * np.log(1.0 - x0 * w) - c >= np.log(u)
        took = int(np.sum(ok))
        out[filled : filled + took] = w[ok]
        filled += took
    return out


def ball_target(dim: int, radius: float) -> Target:
    """Uniform density on the open Euclidean ball of the given radius."""
    if not radius > 0:
        raise ValueError("radius must be positive")
    man = Euclidean(dim)
    r = float(radius)
    vol = ball_volume(dim, r)

    def density(x):
        return 1.0 if float(x @ x) < r * r else 0.0

    def density_batch(x):
        return (np.einsum("ij,ij->i", x, x) < r * r).astype(float)

    def sampler(n, rng):
        out = np.empty((n, dim))
        filled = 0
        while filled < n:
            cand = rng.uniform(-r, r, size=(2 * (n - filled) + 8, dim))
            good = cand[np.einsum("ij,ij->i", cand, cand) < r * r]
            take = min(len(good), n - filled)
            out[filled : filled + take] = good[:take]
            filled += take
        return out

    return Target(
        manifold=man,
        name="convex-uniform-ball",
        spec_string=f"convex-uniform:ball:{dim}:r={r!r}",
        density=density,
        density_batch=density_batch,
        p_max=1.0,
        diam_w=2.0 * r,
        max_gap=0.0,
        max_gap_analytic=True,
        lambda_finite=True,
        lambda_value=2.0 * r,
        support_measure=vol,
        level_set=_analytic_level_fn(lambda t: vol if t < 1.0 else 0.0),
        sampler=sampler,
        convex_level_sets=True,
        is_uniform=True,
        params={"radius": r},
    )


def box_target(extents) -> Target:
    """Uniform density on an open axis-aligned box centred at the origin."""
    ext = np.asarray(extents, dtype=float)
    if np.any(ext <= 0):
        raise ValueError("box extents must be positive")
    dim = ext.shape[0]
    man = Euclidean(dim)
    half = ext / 2.0
    vol = float(np.prod(ext))
    diam = float(np.linalg.norm(ext))

    def density(x):
        return 1.0 if bool(np.all(np.abs(x) < half)) else 0.0

    def density_batch(x):
        return np.all(np.abs(x) < half, axis=1).astype(float)

    def sampler(n, rng):
        return rng.uniform(-half, half, size=(n, dim))

    ext_str = ",".join(repr(float(e)) for e in ext)
    return Target(
        manifold=man,
        name="convex-uniform-box",
        spec_string=f"convex-uniform:box:{dim}:extents={ext_str}",
        density=density,
        density_batch=density_batch,
        p_max=1.0,
        diam_w=diam,
        max_gap=0.0,
        max_gap_analytic=True,
        lambda_finite=True,
        lambda_value=diam,
        support_measure=vol,
        level_set=_analytic_level_fn(lambda t: vol if t < 1.0 else 0.0),
        sampler=sampler,
        convex_level_sets=True,
        is_uniform=True,
        params={"extents": ext},
    )


def ball_gaussian_target(dim: int, sigma: float, radius: float) -> Target:
    """exp(-|x|^2 / (2 sigma^2)) truncated to the open ball of given radius."""
    if not sigma > 0 or not radius > 0:
        raise ValueError("sigma and radius must be positive")
    man = Euclidean(dim)
    s2 = float(sigma) ** 2
    r = float(radius)
    vol = ball_volume(dim, r)

    def density(x):
        q = float(x @ x)
        return math.exp(-q / (2.0 * s2)) if q < r * r else 0.0

    def density_batch(x):
        q = np.einsum("ij,ij->i", x, x)
        return np.where(q < r * r, np.exp(-q / (2.0 * s2)), 0.0)

    def level_measure(t: float) -> float:
        if t >= 1.0:
            return 0.0
        rad = min(r, math.sqrt(-2.0 * s2 * math.log(t)))
        return ball_volume(dim, rad)

    from scipy import stats

    accept_gauss = float(stats.chi2.cdf(r * r / s2, df=dim))

    def sampler(n, rng):
        out = np.empty((n, dim))
        filled = 0
        while filled < n:
            k = n - filled
            if accept_gauss >= 0.05:
                cand = rng.standard_normal((int(2 * k / max(accept_gauss, 0.05)) + 8, dim)) * math.sqrt(s2)
                good = cand[np.einsum("ij,ij->i", cand, cand) < r * r]
            else:
                # Narrow ball: uniform-ball proposal with density thinning.
                cand = rng.uniform(-r, r, size=(4 * k + 8, dim))
                q = np.einsum("ij,ij->i", cand, cand)
                keep = (q < r * r) & (rng.random(len(cand)) < np.exp(-q / (2.0 * s2)))
                good = cand[keep]
            take = min(len(good), k)
            out[filled : filled + take] = good[:take]
            filled += take
        return out

    return Target(
        manifold=man,
        name="ball-gauss",
        spec_string=f"ball-gauss:{dim}:sigma={float(sigma)!r}:r={r!r}",
        density=density,
        density_batch=density_batch,
        p_max=1.0,
        diam_w=2.0 * r,
        max_gap=0.0,  # superlevel sets are balls, so geodesic sections are intervals
        max_gap_analytic=True,
        lambda_finite=True,
        lambda_value=2.0 * r,
        support_measure=vol,
        level_set=_analytic_level_fn(level_measure),
        sampler=sampler,
        convex_level_sets=True,
        params={"sigma": float(sigma), "radius": r},
    )


def custom_target(
    manifold: Manifold,
    density: Callable[[np.ndarray], float],
    p_max: float,
    diam_w: float,
    *,
    name: str = "custom",
    density_batch=None,
    max_gap: Optional[float] = None,
    lambda_value: float = math.inf,
    support_measure: Optional[float] = None,
    sampler=None,
    level_set: Optional[LevelSetFunction] = None,
    level_samples: int = 200_000,
    level_seed: int = 0,
) -> Target:
    """Wrap a user density; metadata not supplied is estimated or left open.

    Without an analytic level-set function, the level-set measure falls back
    to Monte-Carlo integration over the manifold (finite volume required).
    """
    if density_batch is None:
        density_batch = lambda x: np.array([density(row) for row in x])
    if level_set is None:
        level_set = _monte_carlo_level_fn(manifold, density_batch, level_samples, level_seed)
    return Target(
        manifold=manifold,
        name=name,
        spec_string=f"custom:{name}",
        density=density,
        density_batch=density_batch,
        p_max=float(p_max),
        diam_w=float(diam_w),
        max_gap=max_gap,
        max_gap_analytic=max_gap is not None,
        lambda_finite=math.isfinite(lambda_value),
        lambda_value=float(lambda_value),
        support_measure=support_measure,
        level_set=level_set,
        sampler=sampler,
    )


# ---------------------------------------------------------------------------
# preset dispatch and parsing
# ---------------------------------------------------------------------------

_PRESET_ALIASES = {
    "uniform": "uniform",
    "uniform-manifold": "uniform",
    "cap": "cap",
    "spherical-cap-uniform": "cap",
    "vmf": "vmf",
    "von-mises-fisher": "vmf",
    "convex-uniform": "convex-uniform",
    "ball-gauss": "ball-gauss",
    "ball-truncated-gaussian": "ball-gauss",
}


def make_preset(name: str, **params) -> Target:
    """Build a preset target by canonical or short name."""
    key = _PRESET_ALIASES.get(name)
    if key is None:
        raise ValueError(f"unknown preset {name!r}; known: {sorted(set(_PRESET_ALIASES))}")
    man = params.pop("manifold", None)
    if isinstance(man, str):
        man = manifolds.from_spec(man)
    if key == "uniform":
        return uniform_target(man)
    if key == "cap":
        return cap_target(man, params.pop("colatitude"), params.pop("pole", None))
    if key == "vmf":
        return vmf_target(man, params.pop("concentration"), params.pop("mean", None))
    if key == "convex-uniform":
        shape = params.pop("shape")
        if shape == "ball":
            return ball_target(params.pop("dim"), params.pop("radius"))
        if shape == "box":
            return box_target(params.pop("extents"))
        raise ValueError(f"unknown convex-uniform shape {shape!r}")
    if key == "ball-gauss":
        return ball_gaussian_target(params.pop("dim"), params.pop("sigma"), params.pop("radius"))
    raise AssertionError(key)


def _parse_kv(tokens) -> dict:
    out = {}
    for tok in tokens:
        if "=" not in tok:
            raise ValueError(f"expected key=value, got {tok!r}")
        k, v = tok.split("=", 1)
        out[k] = v
    return out


def from_spec(spec: str) -> Target:
    """Build a target from a specification string.

    Formats::

        uniform:<manifold-spec>                e.g. uniform:sphere:2
        cap:sphere:<d>:psi=<colatitude>[:pole=c0,c1,...]
        vmf:sphere:<d>:kappa=<conc>[:mu=c0,c1,...]
        convex-uniform:ball:<d>:r=<radius>
        convex-uniform:box:<d>:extents=a,b,...
        ball-gauss:<d>:sigma=<s>:r=<radius>
    """
    parts = spec.strip().split(":")
    head = parts[0].lower()
    key = _PRESET_ALIASES.get(head)
    if key is None:
        raise ValueError(f"unknown target preset {head!r} in {spec!r}")
    try:
        if key == "uniform":
            return uniform_target(manifolds.from_spec(":".join(parts[1:])))
        if key == "cap":
            kv = _parse_kv(parts[3:])
            man = manifolds.from_spec(":".join(parts[1:3]))
            pole = np.array([float(c) for c in kv["pole"].split(",")]) if "pole" in kv else None
            return cap_target(man, float(kv["psi"]), pole)
        if key == "vmf":
            kv = _parse_kv(parts[3:])
            man = manifolds.from_spec(":".join(parts[1:3]))
            mu = np.array([float(c) for c in kv["mu"].split(",")]) if "mu" in kv else None
            return vmf_target(man, float(kv["kappa"]), mu)
        if key == "convex-uniform":
            shape = parts[1].lower()
            dim = int(parts[2])
            kv = _parse_kv(parts[3:])
            if shape == "ball":
                return ball_target(dim, float(kv["r"]))
            if shape == "box":
                return box_target([float(c) for c in kv["extents"].split(",")])
            raise ValueError(f"unknown convex-uniform shape {shape!r}")
        if key == "ball-gauss":
            dim = int(parts[1])
            kv = _parse_kv(parts[2:])
            return ball_gaussian_target(dim, float(kv["sigma"]), float(kv["r"]))
    except (KeyError, IndexError) as e:
        raise ValueError(f"bad target spec {spec!r}: missing field {e}") from None
    raise AssertionError(key)


# ---------------------------------------------------------------------------
# level-set operations
# ---------------------------------------------------------------------------

def level_set_measure(target: Target, t: float) -> float:
    """Volume of the strict superlevel set {p > t}; t must be positive."""
    if not t > 0:
        raise ValueError("level must be positive")
    return float(target.level_set(t))


def sup_t_level(target: Target) -> float:
    """sup over t of t * volume({p > t}).

    Uniform presets are exact (p_max times the support volume).  Otherwise a
    1024-point log-uniform grid over (p_max * 1e-6, p_max) locates the peak
    and golden-section refinement sharpens it to 1e-6 relative in t.
    """
    if target.is_uniform:
        return target.p_max * target.support_measure
    pm = target.p_max
    grid = np.geomspace(pm * 1e-6, pm, 1024)
    vals = np.array([t * target.level_set(t) for t in grid])
    i = int(np.argmax(vals))
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, len(grid) - 1)]
    best = _golden_max(lambda t: t * target.level_set(t), lo, hi, rel_tol=1e-6)
    return max(float(vals[i]), best)


def _golden_max(fn, lo: float, hi: float, rel_tol: float) -> float:
    phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - phi * (b - a)
    d = a + phi * (b - a)
    fc, fd = fn(c), fn(d)
    while (b - a) > rel_tol * abs(b):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - phi * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + phi * (b - a)
            fd = fn(d)
    return max(fc, fd)


# ---------------------------------------------------------------------------
# reference sampling
# ---------------------------------------------------------------------------

def reference_samples(target: Target, n: int, rng: np.random.Generator) -> np.ndarray:
    """n exact draws from the normalised target, as a coordinate matrix."""
    if target.sampler is None:
        raise ValueError(f"target {target.name!r} has no reference sampler")
    return target.sampler(n, rng)


def reference_sample(target: Target, rng: np.random.Generator) -> Point:
    """One exact draw from the normalised target."""
    return Point(reference_samples(target, 1, rng)[0])


# ---------------------------------------------------------------------------
# support-gap estimation
# ---------------------------------------------------------------------------

def _geodesic_batch(man: Manifold, x: np.ndarray, v: np.ndarray, thetas: np.ndarray) -> np.ndarray:
    if isinstance(man, Sphere):
        p = np.outer(np.cos(thetas), x) + np.outer(np.sin(thetas), v)
        return p / np.linalg.norm(p, axis=1, keepdims=True)
    if isinstance(man, Torus):
        return np.mod(x + np.outer(thetas, v), man.period)
    return x + np.outer(thetas, v)


def estimate_max_gap(
    target: Target,
    n_geodesics: int,
    n_levels: int,
    rng: np.random.Generator,
    grid: int = 4096,
) -> float:
    """Monte-Carlo estimate of the worst gap inside geodesic superlevel sections.

    For random (point, direction, level) probes the geodesic parameter is
    scanned on a grid over [0, cut time); the returned value is the largest
    observed measure of (convex hull of the section) minus the section.  A
    supremum over an uncountable family cannot be certified by sampling, so
    this is a statistical lower bound of the true constant.
    """
    man = target.manifold
    best = 0.0
    for _ in range(n_geodesics):
        x = _support_draw(target, rng)
        v = man.sample_tangent_array(x, rng)
        cut = man.cut_time(Point(x), manifolds.TangentVector(Point(x), v)).value
        horizon = min(cut, target.diam_w * (1.0 + 1e-9))
        if not math.isfinite(horizon):
            horizon = target.diam_w * (1.0 + 1e-9)
        thetas = np.linspace(0.0, horizon, grid, endpoint=False)
        dens = target.density_batch(_geodesic_batch(man, x, v, thetas))
        px = float(target.density(x))
        step = horizon / grid
        for _ in range(n_levels):
            t = rng.random() * px
            hits = dens > t
            if not hits[0]:
                continue  # grid artefact at the start point; skip probe
            last = int(np.max(np.nonzero(hits)[0]))
            gap = float(np.sum(~hits[: last + 1])) * step
            if gap > best:
                best = gap
    return best


def _support_draw(target: Target, rng: np.random.Generator) -> np.ndarray:
    if target.sampler is not None:
        return target.sampler(1, rng)[0]
    man = target.manifold
    if math.isfinite(man.info.total_measure):
        for _ in range(100_000):
            x = man.uniform_points(1, rng)[0]
            if target.density(x) > 0:
                return x
        raise RuntimeError("rejection sampling from the support failed (support too small?)")
    raise ValueError("target has no reference sampler and the manifold has infinite volume")
