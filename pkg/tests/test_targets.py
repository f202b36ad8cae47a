import math

import numpy as np
import pytest
from scipy import stats

import oracles
from geoslice import targets
from geoslice.manifolds import Euclidean, Sphere, from_spec as manifold_from_spec
from geoslice.rng import make_stream
from geoslice.targets import (
    ball_gaussian_target,
    ball_target,
    box_target,
    cap_target,
    custom_target,
    estimate_max_gap,
    level_set_measure,
    reference_samples,
    sup_t_level,
    uniform_target,
    vmf_target,
)


def test_uniform_sphere_metadata():
    t = uniform_target(Sphere(2))
    assert t.p_max == 1.0
    assert t.diam_w == pytest.approx(math.pi)
    assert not t.lambda_finite
    assert t.max_gap == 0.0 and t.max_gap_analytic
    assert t.support_measure == pytest.approx(4 * math.pi)


def test_ball_metadata():
    t = ball_target(2, 1.0)
    assert t.diam_w == 2.0
    assert t.max_gap == 0.0
    assert t.lambda_finite and t.lambda_value == 2.0
    assert t.support_measure == pytest.approx(math.pi)
    assert t.convex_level_sets


def test_cap_diameter_matches_pairwise_oracle():
    t = cap_target(Sphere(2), math.pi / 2)
    assert t.diam_w == pytest.approx(math.pi)
    assert t.max_gap == 0.0
    # brute-force pair maximisation approaches the analytic diameter from below
    assert oracles.cap_max_distance(math.pi / 2) <= t.diam_w + 1e-9
    assert oracles.cap_max_distance(math.pi / 2) > t.diam_w - 0.02
    t3 = cap_target(Sphere(2), math.pi / 3)
    assert t3.diam_w == pytest.approx(2 * math.pi / 3)
    assert oracles.cap_max_distance(math.pi / 3) > t3.diam_w - 0.02


def test_cap_parameter_validation():
    with pytest.raises(ValueError):
        cap_target(Sphere(2), 0.0)
    with pytest.raises(ValueError):
        cap_target(Sphere(2), 3.5)
    with pytest.raises(ValueError):
        vmf_target(Sphere(2), -1.0)
    with pytest.raises(ValueError):
        uniform_target(Euclidean(2))


def test_level_set_measure_uniform_sphere():
    t = uniform_target(Sphere(2))
    assert level_set_measure(t, 0.5) == pytest.approx(4 * math.pi)
    assert level_set_measure(t, 1.5) == 0.0
    with pytest.raises(ValueError):
        level_set_measure(t, 0.0)


def test_level_set_measure_vmf_hemisphere_and_monte_carlo():
    t = vmf_target(Sphere(2), 2.0)
    analytic = level_set_measure(t, 1.0)
    assert analytic == pytest.approx(2 * math.pi, rel=1e-12)
    # cross-check by Monte-Carlo integration over the sphere
    rng = make_stream(5150, 0)
    pts = Sphere(2).uniform_points(1_000_000, rng)
    frac = float(np.mean(t.density_batch(pts) > 1.0))
    se = 4 * math.pi * math.sqrt(frac * (1 - frac) / len(pts))
    assert abs(analytic - 4 * math.pi * frac) <= 3 * se


def test_sup_t_level_uniform_exact():
    assert sup_t_level(uniform_target(Sphere(1))) == pytest.approx(2 * math.pi, rel=1e-12)
    assert sup_t_level(uniform_target(Sphere(2))) == pytest.approx(4 * math.pi, rel=1e-12)


def test_sup_t_level_vmf_matches_dense_grid_oracle():
    t = vmf_target(Sphere(2), 2.0)
    val = sup_t_level(t)
    # dense grid oracle
    ts = np.geomspace(t.p_max * 1e-7, t.p_max, 100_000)
    grid = max(float(s * t.level_set(float(s))) for s in ts)
    assert val == pytest.approx(grid, rel=1e-4)
    # closed form: the peak of t * area(cap(log(t)/kappa)) sits at t = e
    assert val == pytest.approx(math.pi * math.e, rel=1e-6)


def test_sup_t_level_ball_gauss_matches_grid():
    t = ball_gaussian_target(2, 0.5, 1.0)
    val = sup_t_level(t)
    ts = np.geomspace(1e-7, 1.0, 100_000)
    grid = max(float(s * t.level_set(float(s))) for s in ts)
    assert val == pytest.approx(grid, rel=1e-4)


def test_rescaling_invariance_of_normalised_peak():
    base = vmf_target(Sphere(2), 2.0)
    ref = sup_t_level(base) / base.p_max
    for c in (0.1, 7.3):
        t = base.rescaled(c)
        assert sup_t_level(t) / t.p_max == pytest.approx(ref, rel=1e-12)


def test_level_function_nonincreasing():
    for t in [vmf_target(Sphere(2), 2.0), ball_gaussian_target(2, 0.7, 1.5)]:
        ts = np.geomspace(t.p_max * 1e-6, t.p_max, 200)
        vals = [t.level_set(float(s)) for s in ts]
        assert all(a >= b - 1e-12 for a, b in zip(vals, vals[1:]))


def test_level_function_monte_carlo_path():
    man = Sphere(2)
    t = custom_target(
        man,
        density=lambda x: float(np.exp(2.0 * x[2])),
        density_batch=lambda x: np.exp(2.0 * x[:, 2]),
        p_max=math.exp(2.0),
        diam_w=math.pi,
        level_samples=100_000,
    )
    ref = vmf_target(man, 2.0)
    for lev in (0.5, 1.0, 3.0):
        est = t.level_set(float(lev))
        se = t.level_set.stderr(float(lev))
        assert abs(est - ref.level_set(float(lev))) <= 4 * se
    # shared sample across levels keeps the estimate monotone exactly
    ts = np.geomspace(0.2, 7.0, 100)
    vals = [t.level_set(float(s)) for s in ts]
    assert all(a >= b for a, b in zip(vals, vals[1:]))


def test_reference_sampler_uniform_sphere_moments():
    t = uniform_target(Sphere(2))
    pts = reference_samples(t, 100_000, make_stream(61, 0))
    assert np.all(np.abs(pts.mean(axis=0)) < 0.02)


def test_reference_sampler_cap_support_and_gof():
    t = cap_target(Sphere(2), math.pi / 2)
    pts = reference_samples(t, 100_000, make_stream(62, 0))
    pole = t.params["pole"]
    assert np.all(pts @ pole > 0)
    # goodness of fit against the analytic colatitude law: z uniform on (0, 1]
    counts, _ = np.histogram(pts @ pole, bins=20, range=(0.0, 1.0))
    assert stats.chisquare(counts).pvalue > 0.001


def test_reference_sampler_vmf_resultant_length():
    t = vmf_target(Sphere(2), 2.0)
    pts = reference_samples(t, 100_000, make_stream(63, 0))
    r = float(np.linalg.norm(pts.mean(axis=0)))
    expect = 1.0 / math.tanh(2.0) - 0.5
    assert expect == pytest.approx(0.5373, abs=1e-4)
    assert abs(r - expect) < 0.01


def test_reference_sampler_vmf_general_dim_cosine_moment():
    t = vmf_target(Sphere(3), 2.0)
    pts = reference_samples(t, 50_000, make_stream(64, 0))
    mean_cos = float(np.mean(pts @ t.params["mean"]))
    # oracle 1: E[cos] by quadrature of the cosine marginal on S^3 in R^4,
    # density prop to exp(kappa c) (1 - c^2)^((4-3)/2)
    from scipy.integrate import quad
    from scipy.special import iv

    num, _ = quad(lambda c: c * math.exp(2 * c) * math.sqrt(1 - c * c), -1, 1)
    den, _ = quad(lambda c: math.exp(2 * c) * math.sqrt(1 - c * c), -1, 1)
    expect = num / den
    # oracle 2: Bessel-function ratio for the mean resultant length
    assert expect == pytest.approx(float(iv(2.0, 2.0) / iv(1.0, 2.0)), rel=1e-9)
    assert abs(mean_cos - expect) < 0.01


def test_reference_sampler_ball_and_gauss():
    tb = ball_target(2, 1.0)
    pts = reference_samples(tb, 50_000, make_stream(65, 0))
    assert np.all(np.einsum("ij,ij->i", pts, pts) < 1.0)
    assert np.all(np.abs(pts.mean(axis=0)) < 0.02)
    tg = ball_gaussian_target(2, 0.5, 1.0)
    pts = reference_samples(tg, 50_000, make_stream(66, 0))
    q = np.einsum("ij,ij->i", pts, pts)
    assert np.all(q < 1.0)
    # radial CDF oracle: P(|X| <= r) prop to 1 - exp(-r^2 / (2 s^2)) truncated
    s2 = 0.25
    z = 1 - math.exp(-1.0 / (2 * s2))
    for r in (0.3, 0.6, 0.9):
        expect = (1 - math.exp(-r * r / (2 * s2))) / z
        assert abs(float(np.mean(q < r * r)) - expect) < 0.01


def test_reference_sampler_chisquare_against_analytic_masses():
    from geoslice import harness

    for spec in [
        "cap:sphere:2:psi=1.5707963267948966",
        "vmf:sphere:2:kappa=2.0",
        "convex-uniform:ball:2:r=1.0",
        "uniform:sphere:1",
    ]:
        t = targets.from_spec(spec)
        b = harness.make_binning(t)
        pts = reference_samples(t, 100_000, make_stream(hash(spec) & 0xFFFF, 0))
        counts = np.bincount(b.assign(pts), minlength=b.bin_count).astype(float)
        expected = b.masses * len(pts)
        # pool bins with tiny expectation so the chi-square approximation holds
        big = expected >= 10.0
        obs, exp = counts[big], expected[big]
        if not np.all(big):
            obs = np.append(obs, counts[~big].sum())
            exp = np.append(exp, expected[~big].sum())
        res = stats.chisquare(obs, f_exp=exp * obs.sum() / exp.sum())
        assert res.pvalue > 0.001, spec


def test_density_range_invariant():
    rng = make_stream(67, 0)
    for t in [
        uniform_target(Sphere(2)),
        cap_target(Sphere(2), 1.0),
        vmf_target(Sphere(2), 2.0),
        ball_gaussian_target(2, 0.5, 1.0),
    ]:
        if isinstance(t.manifold, Sphere):
            pts = t.manifold.uniform_points(2000, rng)
        else:
            pts = rng.uniform(-1.2, 1.2, size=(2000, t.manifold.dim))
        vals = t.density_batch(pts)
        assert np.all(vals >= 0.0)
        assert np.all(vals <= t.p_max * (1 + 1e-9))


def test_sup_t_level_bounded_by_support_mass():
    for t in [uniform_target(Sphere(2)), vmf_target(Sphere(2), 2.0), ball_target(2, 1.0)]:
        assert sup_t_level(t) / t.p_max <= t.support_measure + 1e-9
        total = t.manifold.info.total_measure
        if math.isfinite(total):
            assert t.support_measure <= total + 1e-9


def test_estimate_max_gap_ball_is_zero():
    t = ball_target(2, 1.0)
    gap = estimate_max_gap(t, 20, 4, make_stream(68, 0))
    assert gap <= 2.0 * 2.0 / 4096 + 1e-12  # within grid resolution


def test_estimate_max_gap_two_interval_line():
    man = Euclidean(1)
    ivs = [(-1.0, -0.15), (0.15, 1.0)]

    def dens(x):
        v = float(x[0])
        return 1.0 if any(a < v < b for a, b in ivs) else 0.0

    def sampler(n, rng):
        picks = rng.integers(0, 2, size=n)
        lo = np.where(picks == 0, -1.0, 0.15)
        hi = np.where(picks == 0, -0.15, 1.0)
        return (lo + rng.random(n) * (hi - lo))[:, None]

    total_len = sum(b - a for a, b in ivs)
    t = custom_target(
        man, dens, p_max=1.0, diam_w=2.0,
        density_batch=lambda x: np.array([dens(r) for r in x]),
        sampler=sampler,
        level_set=targets._analytic_level_fn(lambda lev: total_len if lev < 1.0 else 0.0),
    )
    gap = estimate_max_gap(t, 60, 4, make_stream(69, 0))
    assert gap == pytest.approx(0.3, abs=0.005)


def test_estimate_max_gap_cap_is_zero():
    t = cap_target(Sphere(2), math.pi / 3)
    gap = estimate_max_gap(t, 20, 4, make_stream(70, 0))
    assert gap <= math.pi / 4096 * 2 + 1e-12


def test_spec_strings_round_trip():
    for spec in [
        "uniform:sphere:2",
        "uniform:torus:2:6.0",
        "cap:sphere:2:psi=1.0471975511965976",
        "vmf:sphere:2:kappa=2.0",
        "convex-uniform:ball:2:r=1.0",
        "convex-uniform:box:2:extents=1.0,2.0",
        "ball-gauss:2:sigma=0.5:r=1.0",
    ]:
        t = targets.from_spec(spec)
        t2 = targets.from_spec(t.spec_string)
        assert t2.name == t.name
        assert t2.diam_w == pytest.approx(t.diam_w)
    with pytest.raises(ValueError):
        targets.from_spec("nonsense:sphere:2")
    with pytest.raises(ValueError):
        targets.from_spec("vmf:sphere:2")  # missing kappa


def test_box_target_metadata():
    t = box_target([1.0, 2.0])
    assert t.diam_w == pytest.approx(math.sqrt(5.0))
    assert t.support_measure == pytest.approx(2.0)
    assert t.lambda_value == pytest.approx(math.sqrt(5.0))


def test_make_preset_aliases():
    t = targets.make_preset("von-mises-fisher", manifold="sphere:2", concentration=2.0)
    assert t.name == "vmf"
    t2 = targets.make_preset("spherical-cap-uniform", manifold=Sphere(2), colatitude=1.0)
    assert t2.name == "cap"
    t3 = targets.make_preset("convex-uniform", shape="ball", dim=2, radius=1.0)
    assert t3.name == "convex-uniform-ball"
