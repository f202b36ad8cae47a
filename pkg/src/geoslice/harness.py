"""Statistical verification of the sampler against its certificate.

* total-variation estimation by binning with *analytic* target masses
  (never two empirical histograms), with bootstrap standard errors and an
  explicit estimate of the positive null bias;
* endpoint-ensemble TV decay checked against the certified rho^n envelope;
* one-step invariance tests (energy-distance permutation test between
  evolved and fresh exact samples), including a deliberately broken
  shrinkage used as a mutation oracle;
* a replayable battery of distributional checks for the stepping-out and
  shrinkage procedures (covering bounds, reflection equivariance, the
  start-point interchange identity, the large-budget limit, and the
  shrinkage mass bound).

Every routine is deterministic given its seed; reports record the seeds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import integrate, stats
from scipy.spatial.distance import cdist
from scipy.special import erf

from . import bounds, kernel, slice1d, targets
from .manifolds import Euclidean, Point, Sphere, Torus
from .rng import make_stream, stream_seed
from .slice1d import StepOutParams
from .targets import Target, _orthonormal_frame

TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# binning with analytic masses
# ---------------------------------------------------------------------------

@dataclass
class Binning:
    """Partition of the support with exact target mass per bin.

    ``assign`` maps a coordinate matrix to bin indices; -1 is the overflow
    bin (zero target mass).  Bins of zero mass are excluded up front.
    """

    scheme: str
    bin_count: int
    masses: np.ndarray
    assign: object
    embedding_dim: int


def _check_masses(masses: np.ndarray) -> np.ndarray:
    s = float(np.sum(masses))
    if abs(s - 1.0) > 1e-8:
        raise AssertionError(f"bin masses sum to {s}, not 1; mass computation wrong")
    return masses / s


def make_binning(target: Target, bins: Optional[int] = None) -> Binning:
    """Binning scheme for the target's manifold with analytic bin masses.

    Circle: equal angles (default 64).  Sphere S^2: equal-area latitude bands
    times longitude sectors aligned with the target's symmetry axis (default
    16 x 32).  Euclidean (d <= 2) and torus: uniform box grid (default 32 per
    axis).  Requires a preset whose bin masses are computable in closed form
    or by deterministic quadrature.
    """
    man = target.manifold
    if isinstance(man, Sphere) and man.dim == 1:
        return _binning_circle(target, bins or 64)
    if isinstance(man, Sphere) and man.dim == 2:
        return _binning_sphere2(target, bins or 512)
    if isinstance(man, Euclidean):
        if man.dim > 2:
            raise ValueError("analytic box-grid masses implemented for dimension <= 2")
        return _binning_box_grid(target, bins)
    if isinstance(man, Torus):
        return _binning_torus(target, bins)
    raise ValueError(f"no binning scheme for manifold {man.spec}")


def _binning_circle(target: Target, n_bins: int) -> Binning:
    edges = np.linspace(0.0, TWO_PI, n_bins + 1)
    dens = target.density

    def angle_density(phi: float) -> float:
        return dens(np.array([math.cos(phi), math.sin(phi)]))

    if target.is_uniform and target.name == "uniform":
        masses = np.full(n_bins, 1.0 / n_bins)
    else:
        raw = np.empty(n_bins)
        for i in range(n_bins):
            raw[i], _ = integrate.quad(angle_density, edges[i], edges[i + 1], limit=200)
        total = float(np.sum(raw))
        if total <= 0:
            raise ValueError("target mass vanished on the circle grid")
        masses = raw / total
    keep = masses > 0
    lookup = -np.ones(n_bins, dtype=int)
    lookup[keep] = np.arange(int(np.sum(keep)))

    def assign(coords: np.ndarray) -> np.ndarray:
        ang = np.mod(np.arctan2(coords[:, 1], coords[:, 0]), TWO_PI)
        idx = np.minimum((ang / TWO_PI * n_bins).astype(int), n_bins - 1)
        return lookup[idx]

    return Binning("circle-equal-angle", int(np.sum(keep)), _check_masses(masses[keep]), assign, 2)


def _binning_sphere2(target: Target, bins: int) -> Binning:
    n_bands = max(int(round(math.sqrt(bins / 2.0))), 2)
    n_sectors = 2 * n_bands
    z_edges = np.linspace(-1.0, 1.0, n_bands + 1)

    pole = target.params.get("pole", target.params.get("mean"))
    if pole is None:
        pole = np.array([0.0, 0.0, 1.0])
    frame = _orthonormal_frame(pole)

    if target.name == "uniform":
        band_mass = np.full(n_bands, 1.0 / n_bands)  # equal z-slices have equal area
    elif target.name == "cap":
        c = math.cos(target.params["colatitude"])
        over = np.clip(z_edges[1:], c, 1.0) - np.clip(z_edges[:-1], c, 1.0)
        band_mass = over / (1.0 - c)
    elif target.name == "vmf":
        k = target.params["concentration"]
        e = np.exp(k * z_edges)
        band_mass = (e[1:] - e[:-1]) / (e[-1] - e[0])
    else:
        raise ValueError(f"no analytic sphere bin masses for target {target.name!r}")
    masses = np.repeat(band_mass / n_sectors, n_sectors)
    keep = masses > 0
    lookup = -np.ones(n_bands * n_sectors, dtype=int)
    lookup[keep] = np.arange(int(np.sum(keep)))

    def assign(coords: np.ndarray) -> np.ndarray:
        z = np.clip(coords @ pole, -1.0, 1.0)
        band = np.minimum(((z + 1.0) / 2.0 * n_bands).astype(int), n_bands - 1)
        az = np.mod(np.arctan2(coords @ frame[1], coords @ frame[0]), TWO_PI)
        sector = np.minimum((az / TWO_PI * n_sectors).astype(int), n_sectors - 1)
        return lookup[band * n_sectors + sector]

    return Binning(
        "sphere2-band-sector", int(np.sum(keep)), _check_masses(masses[keep]), assign, 3
    )


def _disk_cell_area(r: float, x0: float, x1: float, y0: float, y1: float) -> float:
    """Area of [x0,x1] x [y0,y1] intersected with the open disk of radius r."""

    def height(x: float) -> float:
        q = r * r - x * x
        return math.sqrt(q) if q > 0 else 0.0

    def integrand(x: float) -> float:
        h = height(x)
        return max(0.0, min(y1, h) - max(y0, -h))

    cuts = {x0, x1}
    for y in (y0, y1):
        if abs(y) < r:
            xc = math.sqrt(r * r - y * y)
            for s in (xc, -xc):
                if x0 < s < x1:
                    cuts.add(s)
    for s in (-r, r):
        if x0 < s < x1:
            cuts.add(s)
    xs = sorted(cuts)
    total = 0.0
    for a, b in zip(xs, xs[1:]):
        val, _ = integrate.quad(integrand, a, b, limit=100)
        total += val
    return total


def _gauss_disk_cell_mass(r, s2, x0, x1, y0, y1) -> float:
    """Unnormalised Gaussian mass of a cell clipped to the disk (2-D)."""
    c = math.sqrt(2.0 * s2)

    def inner(x: float) -> float:
        q = r * r - x * x
        if q <= 0:
            return 0.0
        h = math.sqrt(q)
        lo, hi = max(y0, -h), min(y1, h)
        if hi <= lo:
            return 0.0
        g = math.sqrt(math.pi * s2 / 2.0)
        return math.exp(-x * x / (2.0 * s2)) * g * (math.erf(hi / c) - math.erf(lo / c))

    cuts = {x0, x1}
    for y in (y0, y1):
        if abs(y) < r:
            xc = math.sqrt(r * r - y * y)
            for s in (xc, -xc):
                if x0 < s < x1:
                    cuts.add(s)
    for s in (-r, r):
        if x0 < s < x1:
            cuts.add(s)
    xs = sorted(cuts)
    total = 0.0
    for a, b in zip(xs, xs[1:]):
        val, _ = integrate.quad(inner, a, b, limit=100)
        total += val
    return total


def _binning_box_grid(target: Target, bins: Optional[int]) -> Binning:
    dim = target.manifold.dim
    per_axis = 32 if bins is None else max(2, int(round(bins ** (1.0 / dim))))
    if target.name == "convex-uniform-ball":
        half = np.full(dim, target.params["radius"])
    elif target.name == "convex-uniform-box":
        half = np.asarray(target.params["extents"]) / 2.0
    elif target.name == "ball-gauss":
        half = np.full(dim, target.params["radius"])
    else:
        raise ValueError(f"no analytic box-grid masses for target {target.name!r}")
    edges = [np.linspace(-h, h, per_axis + 1) for h in half]

    n_cells = per_axis**dim
    raw = np.zeros(n_cells)
    if dim == 1:
        e = edges[0]
        if target.name in ("convex-uniform-ball", "convex-uniform-box"):
            raw = np.diff(e)
        else:
            s2 = target.params["sigma"] ** 2
            c = math.sqrt(2.0 * s2)
            vals = erf(e / c)
            raw = vals[1:] - vals[:-1]
    else:
        ex, ey = edges
        for i in range(per_axis):
            for j in range(per_axis):
                cell = i * per_axis + j
                if target.name == "convex-uniform-ball":
                    raw[cell] = _disk_cell_area(
                        target.params["radius"], ex[i], ex[i + 1], ey[j], ey[j + 1]
                    )
                elif target.name == "convex-uniform-box":
                    raw[cell] = (ex[i + 1] - ex[i]) * (ey[j + 1] - ey[j])
                else:
                    raw[cell] = _gauss_disk_cell_mass(
                        target.params["radius"],
                        target.params["sigma"] ** 2,
                        ex[i], ex[i + 1], ey[j], ey[j + 1],
                    )
    total = float(np.sum(raw))
    masses = raw / total
    keep = masses > 1e-15
    lookup = -np.ones(n_cells, dtype=int)
    lookup[keep] = np.arange(int(np.sum(keep)))
    lo = -half
    widths = 2.0 * half / per_axis

    def assign(coords: np.ndarray) -> np.ndarray:
        rel = (coords - lo) / widths
        cell = np.floor(rel).astype(int)
        inside = np.all((cell >= 0) & (cell < per_axis), axis=1)
        flat = np.zeros(len(coords), dtype=int)
        for d in range(dim):
            flat = flat * per_axis + np.clip(cell[:, d], 0, per_axis - 1)
        out = np.where(inside, lookup[flat], -1)
        return out

    return Binning("box-grid", int(np.sum(keep)), _check_masses(masses[keep]), assign, dim)


def _binning_torus(target: Target, bins: Optional[int]) -> Binning:
    if target.name != "uniform":
        raise ValueError("torus binning implemented for the uniform target")
    man = target.manifold
    dim, period = man.dim, man.period
    per_axis = 32 if bins is None else max(2, int(round(bins ** (1.0 / dim))))
    n_cells = per_axis**dim
    masses = np.full(n_cells, 1.0 / n_cells)

    def assign(coords: np.ndarray) -> np.ndarray:
        cell = np.minimum((coords / period * per_axis).astype(int), per_axis - 1)
        flat = np.zeros(len(coords), dtype=int)
        for d in range(dim):
            flat = flat * per_axis + cell[:, d]
        return flat

    return Binning("torus-grid", n_cells, masses, assign, dim)


# ---------------------------------------------------------------------------
# total-variation estimation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TvEstimate:
    """Half-L1 distance between empirical bin frequencies and analytic masses.

    ``bias`` is the analytic estimate of the estimator's positive null bias,
    of order sqrt(bins / samples); one-sided envelope checks should allow
    ``3 * se + bias``.
    """

    tv: float
    se: float
    bias: float
    n: int


def _as_coords(points) -> np.ndarray:
    if isinstance(points, np.ndarray):
        return points
    return np.stack([p.coords for p in points])


def estimate_tv(
    points,
    binning: Binning,
    rng: Optional[np.random.Generator] = None,
    n_bootstrap: int = 200,
) -> TvEstimate:
    """Estimate the TV distance of a sample to the analytic target masses."""
    coords = _as_coords(points)
    n = len(coords)
    if n < 1000:
        raise ValueError(f"need at least 1000 points for a TV estimate, got {n}")
    if coords.shape[1] != binning.embedding_dim:
        raise ValueError(
            f"points have embedding dimension {coords.shape[1]}, "
            f"binning expects {binning.embedding_dim}"
        )
    if rng is None:
        rng = make_stream(0xB007, 0)
    idx = binning.assign(coords)
    counts = np.bincount(idx + 1, minlength=binning.bin_count + 1).astype(float)

    def tv_of(cnt: np.ndarray) -> float:
        freq = cnt / np.sum(cnt)
        return 0.5 * (float(np.sum(np.abs(freq[1:] - binning.masses))) + freq[0])

    tv = tv_of(counts)
    probs = counts / n
    boots = rng.multinomial(n, probs, size=n_bootstrap).astype(float)
    tvs = np.array([tv_of(b) for b in boots])
    se = float(np.std(tvs, ddof=1))
    bias = 0.5 * float(np.sum(np.sqrt(2.0 * binning.masses * (1.0 - binning.masses) / (math.pi * n))))
    return TvEstimate(tv=tv, se=se, bias=bias, n=n)


# ---------------------------------------------------------------------------
# energy-distance two-sample test
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EnergyTestResult:
    statistic: float
    p_value: float
    p_permutation: float
    n_a: int
    n_b: int
    permutations: int


def energy_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Two-sample energy statistic 2 E|A-B| - E|A-A'| - E|B-B'|."""
    dab = cdist(a, b)
    daa = cdist(a, a)
    dbb = cdist(b, b)
    return 2.0 * float(dab.mean()) - float(daa.mean()) - float(dbb.mean())


def energy_permutation_test(
    a: np.ndarray,
    b: np.ndarray,
    rng: np.random.Generator,
    permutations: int = 500,
    subsample: int = 1500,
) -> EnergyTestResult:
    """Permutation test of distributional equality via the energy statistic.

    Large samples are reduced to a seeded subsample before the O(n^2)
    statistic.  The permutation p-value has resolution 1/(permutations+1);
    when the observed statistic exceeds every permutation, a normal tail
    approximation fitted to the permutation null refines the p-value (this
    is how gross violations can be reported far below the resolution).
    """
    if len(a) > subsample:
        a = a[rng.choice(len(a), subsample, replace=False)]
    if len(b) > subsample:
        b = b[rng.choice(len(b), subsample, replace=False)]
    na, nb = len(a), len(b)
    pool = np.vstack([a, b])
    n = na + nb
    dmat = cdist(pool, pool).astype(np.float32)
    row = dmat.sum(axis=1).astype(np.float64)
    total = float(row.sum())

    def stats_of(zmat: np.ndarray) -> np.ndarray:
        g = dmat @ zmat.T  # (n, B)
        s_aa = np.einsum("bn,nb->b", zmat, g, optimize=True).astype(np.float64)
        s_arow = zmat @ row
        s_ab = s_arow - s_aa
        s_bb = total - 2.0 * s_arow + s_aa
        return 2.0 * s_ab / (na * nb) - s_aa / na**2 - s_bb / nb**2

    z0 = np.zeros((1, n), dtype=np.float32)
    z0[0, :na] = 1.0
    obs = float(stats_of(z0)[0])
    zperm = np.zeros((permutations, n), dtype=np.float32)
    for k in range(permutations):
        zperm[k, rng.permutation(n)[:na]] = 1.0
    null = stats_of(zperm)
    exceed = int(np.sum(null >= obs - 1e-12))
    p_perm = (1 + exceed) / (permutations + 1)
    p = p_perm
    if exceed == 0:
        mu, sd = float(np.mean(null)), float(np.std(null, ddof=1))
        if sd > 0:
            p = min(p_perm, float(stats.norm.sf((obs - mu) / sd)))
    return EnergyTestResult(obs, p, p_perm, na, nb, permutations)


# ---------------------------------------------------------------------------
# uniform-ergodicity verification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TvCurvePoint:
    n: int
    tv: float
    se: float
    envelope: float
    passed: bool


@dataclass
class TvCurve:
    points: list
    rho: float
    bias: float
    certified: bool
    passed: bool
    report: bounds.BoundsReport
    replicates: int
    seed: int

    def csv_rows(self):
        for p in self.points:
            yield p.n, p.tv, p.se, p.envelope, p.passed


def verify_uniform_ergodicity(
    target: Target,
    config: kernel.GssConfig,
    x0: Point,
    n_list: Sequence[int],
    replicates: int,
    threads: int = 1,
    bins: Optional[int] = None,
    epsilon_mode: str = "auto",
) -> TvCurve:
    """Check the TV decay of endpoint ensembles against the rho^n envelope.

    For each n an independent ensemble of ``replicates`` chains is run from
    x0 and its TV distance to the target estimated; the check passes when
    every estimate stays below rho^n + 3 SE + bias.  Only a certified
    covering probability can produce a PASS; with a Monte-Carlo epsilon the
    whole curve is advisory and ``passed`` is always False.
    """
    report = bounds.full_report(
        target, config.m, config.w, epsilon_mode,
        rng=make_stream(config.seed, 41) if epsilon_mode == "monte-carlo" else None,
    )
    if not n_list:
        raise ValueError("n_list must not be empty")
    binning = make_binning(target, bins)
    pts = []
    bias = 0.0
    for n in n_list:
        ens = kernel.endpoint_ensemble(
            x0, n, replicates, config, seed=stream_seed(config.seed, 70_000 + n), threads=threads
        )
        est = estimate_tv(ens, binning, rng=make_stream(config.seed, 90_000 + n))
        bias = est.bias
        env = report.rho**n
        ok = report.certified and est.tv <= env + 3.0 * est.se + est.bias
        pts.append(TvCurvePoint(n=int(n), tv=est.tv, se=est.se, envelope=env, passed=ok))
    return TvCurve(
        points=pts,
        rho=report.rho,
        bias=float(bias),
        certified=report.certified,
        passed=report.certified and all(p.passed for p in pts),
        report=report,
        replicates=replicates,
        seed=config.seed,
    )


def worst_start(target: Target) -> Point:
    """Adversarial start candidate: near the support boundary or density minimum.

    The certificate's sup over starts cannot be probed exhaustively; these
    are the analytic worst candidates for the presets.
    """
    man = target.manifold
    if target.name == "cap":
        pole = target.params["pole"]
        psi = target.params["colatitude"] * (1.0 - 1e-6)
        perp = _orthonormal_frame(pole)[0]
        return man.point(math.cos(psi) * pole + math.sin(psi) * perp)
    if target.name == "vmf":
        return man.point(-target.params["mean"])
    if target.name == "convex-uniform-ball" or target.name == "ball-gauss":
        x = np.zeros(man.dim)
        x[0] = target.params["radius"] * (1.0 - 1e-6)
        return man.point(x)
    if target.name == "convex-uniform-box":
        return man.point(np.asarray(target.params["extents"]) / 2.0 * (1.0 - 1e-6))
    if isinstance(man, Sphere):
        return man.point(np.eye(man.embedding_dim)[0])
    if isinstance(man, Torus):
        return man.point(np.zeros(man.dim))
    raise ValueError(f"no worst-start heuristic for target {target.name!r}")


# ---------------------------------------------------------------------------
# invariance testing
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class InvarianceReport:
    statistic: float
    p_value: float
    passed: bool
    samples: int
    seed: int
    broken_kernel: bool


def _broken_step_array(xa, config, rng):
    """Sabotaged transition: shrinkage acceptance check skipped (mutation oracle)."""
    target, man = config.target, config.target.manifold
    px = float(target.density(xa))
    level = rng.random() * px
    va = man.sample_tangent_array(xa, rng)

    def oracle(theta: float) -> bool:
        return float(target.density(man.exp_array(xa, va, theta))) > level

    itv = slice1d.stepping_out(oracle, config.step_out_params, rng)
    theta = slice1d.unwrap_angle(rng.uniform(0.0, TWO_PI), itv.lo, itv.hi)
    return man.exp_array(xa, va, theta)


def invariance_test(
    target: Target,
    config: kernel.GssConfig,
    samples: int,
    seed: Optional[int] = None,
    broken: bool = False,
    permutations: int = 500,
    subsample: int = 1500,
) -> InvarianceReport:
    """One-step invariance check: evolved exact samples vs fresh exact samples.

    Starts from exact target draws, applies one transition to each, and runs
    the energy permutation test against an independent batch of exact draws.
    PASS means p > 0.001.  With ``broken=True`` the transition skips the
    shrinkage acceptance check; a correct test must fail loudly on it.
    """
    if not target.has_reference_sampler:
        raise ValueError(f"target {target.name!r} has no reference sampler")
    base = config.seed if seed is None else seed
    start = targets.reference_samples(target, samples, make_stream(base, 1))
    rng = make_stream(base, 2)
    stepper = _broken_step_array if broken else (lambda xa, c, r: kernel._step_array(xa, c, r)[0])
    evolved = np.empty_like(start)
    for i in range(samples):
        evolved[i] = stepper(start[i], config, rng)
    fresh = targets.reference_samples(target, samples, make_stream(base, 3))
    res = energy_permutation_test(
        evolved, fresh, make_stream(base, 4), permutations=permutations, subsample=subsample
    )
    return InvarianceReport(
        statistic=res.statistic,
        p_value=res.p_value,
        passed=res.p_value > 0.001,
        samples=samples,
        seed=base,
        broken_kernel=broken,
    )


# ---------------------------------------------------------------------------
# distributional battery for the 1-D procedures
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BatteryCheck:
    name: str
    config: str
    passed: bool
    observed: float
    reference: float
    criterion: str
    seed: int
    details: dict = field(default_factory=dict)


@dataclass
class BatteryReport:
    seed: int
    checks: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def summary_lines(self):
        for c in self.checks:
            status = "PASS" if c.passed else "FAIL"
            yield (
                f"{status} {c.name} [{c.config}] observed={c.observed:.6g} "
                f"ref={c.reference:.6g} ({c.criterion}; seed={c.seed})"
            )


def _shifted_intervals(ivs, shift):
    return [(a + shift, b + shift) for a, b in ivs]


def _reflected_intervals(ivs, alpha):
    return sorted((alpha - b, alpha - a) for a, b in ivs)


def _sample_intervals(set_spec, theta, params, n, rng) -> np.ndarray:
    """n stepping-out draws started at theta, as rows (lo, hi) in absolute coords."""
    oracle = lambda s: slice1d.set_contains(set_spec, theta + s)
    out = np.empty((n, 2))
    for i in range(n):
        itv = slice1d.stepping_out(oracle, params, rng)
        out[i, 0] = theta + itv.lo
        out[i, 1] = theta + itv.hi
    return out


def _random_interval_set(rng, contains: float = 0.0):
    """2-4 disjoint open intervals around ``contains``, one of them covering it."""
    k = int(rng.integers(2, 5))
    edges = np.sort(rng.uniform(-3.0, 3.0, size=2 * k))
    ivs = [(float(edges[2 * i]), float(edges[2 * i + 1])) for i in range(k)]
    if not slice1d.set_contains(ivs, contains):
        # stretch the nearest interval over the required point
        j = int(np.argmin([min(abs(a - contains), abs(b - contains)) for a, b in ivs]))
        a, b = ivs[j]
        ivs[j] = (min(a, contains - 0.05), max(b, contains + 0.05))
        ivs = sorted(ivs)
        merged = [ivs[0]]
        for a, b in ivs[1:]:
            la, lb = merged[-1]
            if a <= lb:
                merged[-1] = (la, max(lb, b))
            else:
                merged.append((a, b))
        ivs = merged
    return ivs


def _covering_checks(seed: int, quick: bool) -> list:
    checks = []
    fixed = [
        ("S=(-1,0.3)u(0.5,1) m=3 w=1", [(-1.0, 0.3), (0.5, 1.0)], 3, 1.0, 200_000),
        ("S=(-0.1,0.1) m=1 w=2", [(-0.1, 0.1)], 1, 2.0, 200_000),
        ("S=(-1,1) m=inf w=0.7", [(-1.0, 1.0)], math.inf, 0.7, 20_000),
    ]
    configs = list(fixed)
    rng_cfg = make_stream(seed, 100)
    made = 0
    while made < 5:
        ivs = _random_interval_set(rng_cfg)
        m = [1, 2, 3, 5, math.inf][int(rng_cfg.integers(0, 5))]
        w = float(rng_cfg.uniform(0.5, 2.5))
        pieces = [(max(a, 0.0), b) for a, b in ivs if b > 0.0]
        b_sup = max(hi for _, hi in pieces)
        gap = b_sup - sum(hi - lo for lo, hi in pieces)
        try:
            slice1d.covering_bound(b_sup, 0.0, gap, m, w)
        except slice1d.ApplicabilityError:
            continue
        configs.append((f"random#{made} m={m} w={w:.3g}", ivs, m, w, 50_000 if not quick else 5_000))
        made += 1
    for i, (label, ivs, m, w, n) in enumerate(configs):
        if quick:
            n = min(n, 5_000)
        sub = stream_seed(seed, 200 + i)
        rng = make_stream(sub, 0)
        pieces = [(max(a, 0.0), b) for a, b in ivs if b > 0.0]
        b_sup = max(hi for _, hi in pieces)
        gap = b_sup - sum(hi - lo for lo, hi in pieces)
        bound = slice1d.covering_bound(b_sup, 0.0, gap, m, w)
        est, se = slice1d.estimate_covering_probability(
            ivs, 0.0, math.inf, StepOutParams(w, m), n, rng
        )
        checks.append(
            BatteryCheck(
                name="stepout-covering",
                config=label,
                passed=est >= bound - 3.0 * se,
                observed=est,
                reference=bound,
                criterion="estimate >= bound - 3*SE",
                seed=sub,
                details={"se": se, "set": ivs, "m": m, "w": w, "n": n},
            )
        )
    return checks


def _shrinkage_checks(seed: int, quick: bool) -> list:
    checks = []
    n = 20_000 if quick else 100_000
    configs = [
        ("S=(-0.1,0.1)u(0.7,0.9) itv=(-0.1,0.9) A=(0.7,0.9)",
         [(-0.1, 0.1), (0.7, 0.9)], (-0.1, 0.9), (0.7, 0.9)),
    ]
    rng_cfg = make_stream(seed, 300)
    for k in range(5):
        lo = float(rng_cfg.uniform(-1.5, -0.1))
        hi = float(rng_cfg.uniform(0.1, 1.5))
        ivs = _random_interval_set(rng_cfg)
        cand = [(max(a, lo), min(b, hi)) for a, b in ivs if min(b, hi) - max(a, lo) > 0.02]
        if not cand:
            cand = [(lo, hi)]
        a0, b0 = cand[int(rng_cfg.integers(0, len(cand)))]
        mid = 0.5 * (a0 + b0)
        width = min((b0 - a0) * 0.8, float(rng_cfg.uniform(0.05, b0 - a0)))
        a_set = (mid - width / 2.0, mid + width / 2.0)
        configs.append((f"random#{k}", ivs, (lo, hi), a_set))
    for i, (label, ivs, (lo, hi), a_set) in enumerate(configs):
        sub = stream_seed(seed, 400 + i)
        rng = make_stream(sub, 0)
        oracle = lambda t: slice1d.set_contains(ivs, t)
        hits = 0
        for _ in range(n):
            res = slice1d.reeled_shrinkage(oracle, lo, hi, rng)
            if a_set[0] < res.theta < a_set[1]:
                hits += 1
        p = hits / n
        se = math.sqrt(max(p * (1 - p), 1e-300) / n)
        mass = _set_mass_in(ivs, max(a_set[0], lo), min(a_set[1], hi))
        diam_s = max(b for _, b in ivs) - min(a for a, _ in ivs)
        bound = slice1d.shrinkage_mass_bound(mass, hi - lo, diam_s)
        checks.append(
            BatteryCheck(
                name="shrinkage-mass",
                config=label,
                passed=p >= bound - 3.0 * se,
                observed=p,
                reference=bound,
                criterion="P(A) >= mass bound - 3*SE",
                seed=sub,
                details={"se": se, "set": ivs, "interval": (lo, hi), "A": a_set, "n": n},
            )
        )
    return checks


def _set_mass_in(ivs, lo, hi) -> float:
    return sum(max(0.0, min(b, hi) - max(a, lo)) for a, b in ivs)


def _reflection_checks(seed: int, quick: bool) -> list:
    checks = []
    n = 20_000 if quick else 100_000
    configs = [("fixed", [(-1.0, 0.3), (0.5, 1.0)], 0.0, 0.4, 3, 1.0)]
    rng_cfg = make_stream(seed, 500)
    for k in range(5):
        ivs = _random_interval_set(rng_cfg)
        theta = 0.0
        alpha = float(rng_cfg.uniform(-1.0, 1.0))
        m = [1, 2, 4, math.inf][int(rng_cfg.integers(0, 4))]
        w = float(rng_cfg.uniform(0.5, 2.0))
        configs.append((f"random#{k}", ivs, theta, alpha, m, w))
    for i, (label, ivs, theta, alpha, m, w) in enumerate(configs):
        sub = stream_seed(seed, 600 + i)
        rng = make_stream(sub, 0)
        params = StepOutParams(w, m)
        refl = _reflected_intervals(ivs, alpha)
        sample_a = _sample_intervals(refl, theta, params, n, rng)
        sample_b = _sample_intervals(ivs, alpha - theta, params, n, rng)
        # reflect the second sample: (lo, hi) -> (alpha - hi, alpha - lo)
        sample_b = np.column_stack([alpha - sample_b[:, 1], alpha - sample_b[:, 0]])
        res = energy_permutation_test(sample_a, sample_b, make_stream(sub, 1))
        checks.append(
            BatteryCheck(
                name="stepout-reflection",
                config=f"{label} alpha={alpha:.3g} m={m} w={w:.3g}",
                passed=res.p_value > 0.001,
                observed=res.p_value,
                reference=0.001,
                criterion="energy permutation p > 0.001",
                seed=sub,
                details={"stat": res.statistic, "n": n},
            )
        )
    return checks


def _interchange_checks(seed: int, quick: bool) -> list:
    checks = []
    configs = [("fixed", [(-1.0, 0.3), (0.5, 1.0)], 0.0, 0.7, 3, 1.0, 200_000 if quick else 1_000_000)]
    rng_cfg = make_stream(seed, 700)
    for k in range(5):
        ivs = _random_interval_set(rng_cfg)
        inside = [iv for iv in ivs if iv[1] - iv[0] > 0.05]
        a0, b0 = inside[int(rng_cfg.integers(0, len(inside)))]
        alpha = float(rng_cfg.uniform(a0, b0))
        m = [1, 2, 4, math.inf][int(rng_cfg.integers(0, 4))]
        w = float(rng_cfg.uniform(0.5, 2.0))
        configs.append((f"random#{k}", ivs, 0.0, alpha, m, w, 20_000 if quick else 100_000))
    for i, (label, ivs, theta, alpha, m, w, n) in enumerate(configs):
        sub = stream_seed(seed, 800 + i)
        rng = make_stream(sub, 0)
        params = StepOutParams(w, m)
        s1 = _sample_intervals(ivs, theta, params, n, rng)
        s2 = _sample_intervals(ivs, alpha, params, n, rng)
        p1 = float(np.mean((s1[:, 0] < alpha) & (alpha < s1[:, 1])))
        p2 = float(np.mean((s2[:, 0] < theta) & (theta < s2[:, 1])))
        se = math.sqrt((p1 * (1 - p1) + p2 * (1 - p2)) / n + 1e-300)
        checks.append(
            BatteryCheck(
                name="stepout-interchange",
                config=f"{label} alpha={alpha:.3g} m={m} w={w:.3g}",
                passed=abs(p1 - p2) <= 3.0 * se,
                observed=p1 - p2,
                reference=0.0,
                criterion="|P(theta covers alpha) - P(alpha covers theta)| <= 3*SE",
                seed=sub,
                details={"p1": p1, "p2": p2, "se": se, "n": n},
            )
        )
    return checks


def _limit_checks(seed: int, quick: bool) -> list:
    """Interval law with a large finite budget approaches the unlimited law."""
    ivs = [(-0.7, 0.2), (0.4, 1.1)]
    w = 0.5
    n = 1_000 if quick else 2_000
    sub = stream_seed(seed, 900)
    rng = make_stream(sub, 0)
    ref = _sample_intervals(ivs, 0.0, StepOutParams(w, math.inf), n, rng)
    dists = {}
    for m in (10, 100, 1000):
        sm = _sample_intervals(ivs, 0.0, StepOutParams(w, m), n, rng)
        dists[m] = (energy_distance(sm, ref), sm)
    res = energy_permutation_test(dists[1000][1], ref, make_stream(sub, 1))
    # the m=1000 distance is pure sampling noise; use it as the slack scale
    slack = max(abs(dists[1000][0]), 1e-4)
    mono = (
        dists[10][0] >= dists[100][0] - slack
        and dists[100][0] >= dists[1000][0] - slack
    )
    checks = [
        BatteryCheck(
            name="stepout-limit-monotone",
            config=f"S={ivs} w={w} m in (10,100,1000) vs inf",
            passed=bool(mono),
            observed=dists[1000][0],
            reference=dists[10][0],
            criterion="energy distance decreases along the budget sequence",
            seed=sub,
            details={m: d for m, (d, _) in dists.items()},
        ),
        BatteryCheck(
            name="stepout-limit-floor",
            config=f"S={ivs} w={w} m=1000 vs inf",
            passed=res.p_value > 0.001,
            observed=res.p_value,
            reference=0.001,
            criterion="m=1000 indistinguishable from unlimited (p > 0.001)",
            seed=sub,
            details={"stat": res.statistic},
        ),
    ]
    return checks


def lemma_suite(seed: int, quick: bool = False) -> BatteryReport:
    """Run the full distributional battery with replayable sub-seeds.

    ``quick`` shrinks the sample sizes (used by smoke tests); the acceptance
    configuration runs with the full sizes.
    """
    checks = []
    checks += _covering_checks(seed, quick)
    checks += _shrinkage_checks(seed, quick)
    checks += _reflection_checks(seed, quick)
    checks += _interchange_checks(seed, quick)
    checks += _limit_checks(seed, quick)
    return BatteryReport(seed=seed, checks=checks)
