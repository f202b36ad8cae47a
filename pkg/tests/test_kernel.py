import io
import json
import math

import numpy as np
import pytest
from scipy import stats

from geoslice import harness, kernel, targets
from geoslice.kernel import ChainRecord, ConfigError, GssConfig, endpoint_ensemble, run_chain, step
from geoslice.rng import make_stream

TWO_PI = 2 * math.pi


def _circle_uniform_config(seed=100):
    t = targets.from_spec("uniform:sphere:1")
    return t, GssConfig(target=t, w=TWO_PI, m=1, seed=seed)


def test_config_rejects_unbounded_budget_on_compact_support():
    t = targets.from_spec("uniform:sphere:2")
    with pytest.raises(ConfigError):
        GssConfig(target=t, w=1.0, m=math.inf, seed=1)
    with pytest.raises(ValueError):
        GssConfig(target=t, w=-1.0, m=1, seed=1)
    with pytest.raises(ValueError):
        GssConfig(target=t, w=1.0, m=0, seed=1)


def test_one_step_circle_uniform_mixes_exactly():
    # one full winding plus symmetric direction: a single step is an exact draw
    t, cfg = _circle_uniform_config()
    x0 = t.manifold.point([1.0, 0.0])
    rng = make_stream(100, 0)
    angles = []
    for _ in range(30_000):
        y = step(x0, cfg, rng)
        angles.append(math.atan2(y.coords[1], y.coords[0]) % TWO_PI)
    counts, _ = np.histogram(angles, bins=64, range=(0.0, TWO_PI))
    assert stats.chisquare(counts).pvalue > 0.001


def test_step_output_always_in_support():
    for spec, m, w in [
        ("cap:sphere:2:psi=1.5707963267948966", 1, TWO_PI),
        ("vmf:sphere:2:kappa=2.0", 1, TWO_PI),
        ("convex-uniform:ball:2:r=1.0", math.inf, 0.5),
    ]:
        t = targets.from_spec(spec)
        cfg = GssConfig(target=t, w=w, m=m, seed=5)
        rng = make_stream(5, 0)
        x = harness.worst_start(t)
        for _ in range(300):
            x = step(x, cfg, rng)
            assert t.pdf(x) > 0.0


def test_ball_chain_stays_inside():
    t = targets.from_spec("convex-uniform:ball:2:r=1.0")
    cfg = GssConfig(target=t, w=0.5, m=math.inf, seed=6)
    rng = make_stream(6, 0)
    x = t.manifold.point([0.3, 0.3])
    for _ in range(500):
        x = step(x, cfg, rng)
        assert float(x.coords @ x.coords) < 1.0


def test_step_failure_carries_diagnostic_context():
    from geoslice.slice1d import ShrinkageCapError

    t = targets.from_spec("cap:sphere:2:psi=0.3")
    cfg = GssConfig(target=t, w=TWO_PI, m=1, seed=16, max_shrink_iters=1)
    x0 = harness.worst_start(t)
    rng = make_stream(16, 0)
    with pytest.raises(ShrinkageCapError) as exc:
        for _ in range(200):  # a single allowed draw fails quickly on a slim cap
            step(x0, cfg, rng)
    msg = str(exc.value)
    assert "state=" in msg and "direction=" in msg and "level=" in msg


def test_step_rejects_zero_density_start():
    t = targets.from_spec("cap:sphere:2:psi=1.0")
    cfg = GssConfig(target=t, w=TWO_PI, m=1, seed=7)
    with pytest.raises(ValueError):
        step(t.manifold.point([0.0, 0.0, -1.0]), cfg, make_stream(7, 0))


def test_run_chain_zero_length_is_valid():
    t, cfg = _circle_uniform_config()
    rec = run_chain(t.manifold.point([1.0, 0.0]), 0, cfg, burn_in=5)
    assert isinstance(rec, ChainRecord)
    assert rec.states == [] and rec.diagnostics == []
    assert rec.config["target"] == "uniform:sphere:1"


def test_run_chain_deterministic_given_seed():
    t, cfg = _circle_uniform_config(seed=2024)
    x0 = t.manifold.point([0.0, 1.0])
    a = run_chain(x0, 50, cfg, burn_in=3, thin=2)
    b = run_chain(x0, 50, cfg, burn_in=3, thin=2)
    for pa, pb in zip(a.states, b.states):
        assert np.array_equal(pa.coords, pb.coords)


def test_run_chain_ball_mean_near_zero():
    t = targets.from_spec("convex-uniform:ball:2:r=1.0")
    cfg = GssConfig(target=t, w=1.0, m=math.inf, seed=8)
    rec = run_chain(t.manifold.point([0.9, 0.0]), 10_000, cfg, burn_in=50)
    xs = np.stack([p.coords for p in rec.states])
    # batch-means standard error absorbs the chain autocorrelation
    batches = xs[: 10_000 // 20 * 20].reshape(20, -1, 2).mean(axis=1)
    se = batches.std(axis=0, ddof=1) / math.sqrt(20)
    assert np.all(np.abs(xs.mean(axis=0)) <= 3 * se)


def test_run_chain_jsonl_sink_format():
    t, cfg = _circle_uniform_config(seed=77)
    buf = io.StringIO()
    run_chain(t.manifold.point([1.0, 0.0]), 5, cfg, burn_in=2, thin=3, sink=buf,
              header_extra={"note": "test"})
    lines = buf.getvalue().strip().split("\n")
    header = json.loads(lines[0])
    assert header["geoslice_chain"]["seed"] == 77
    assert header["note"] == "test"
    assert len(lines) == 6
    recs = [json.loads(line) for line in lines[1:]]
    assert [r["i"] for r in recs] == [5, 8, 11, 14, 17]
    for r in recs:
        assert set(r) == {"i", "x", "t", "w_int", "k_shrink"}
        assert len(r["x"]) == 2
        assert r["t"] > 0 and r["w_int"] > 0 and r["k_shrink"] >= 1


def test_diagnostics_interval_width_capped():
    t = targets.from_spec("vmf:sphere:2:kappa=2.0")
    cfg = GssConfig(target=t, w=2.0, m=3, seed=9)
    rec = run_chain(harness.worst_start(t), 400, cfg)
    for d in rec.diagnostics:
        assert d.interval_width <= 3 * 2.0 * (1 + 1e-12)
        assert d.shrink_iterations >= 1


def test_endpoint_ensemble_zero_steps_copies_start():
    t, cfg = _circle_uniform_config()
    x0 = t.manifold.point([0.0, 1.0])
    ens = endpoint_ensemble(x0, 0, 17, cfg)
    assert len(ens) == 17
    for p in ens:
        assert np.array_equal(p.coords, x0.coords)


def test_endpoint_ensemble_thread_count_invariance():
    t = targets.from_spec("cap:sphere:2:psi=1.5707963267948966")
    cfg = GssConfig(target=t, w=TWO_PI, m=1, seed=11)
    x0 = harness.worst_start(t)
    a = endpoint_ensemble(x0, 3, 64, cfg, threads=1)
    b = endpoint_ensemble(x0, 3, 64, cfg, threads=8)
    for pa, pb in zip(a, b):
        assert np.array_equal(pa.coords, pb.coords)


def test_one_step_circle_ensemble_uniform():
    t, cfg = _circle_uniform_config(seed=12)
    x0 = t.manifold.point([1.0, 0.0])
    ens = endpoint_ensemble(x0, 1, 30_000, cfg)
    coords = np.stack([p.coords for p in ens])
    ang = np.mod(np.arctan2(coords[:, 1], coords[:, 0]), TWO_PI)
    counts, _ = np.histogram(ang, bins=64, range=(0.0, TWO_PI))
    assert stats.chisquare(counts).pvalue > 0.001


def test_vmf_ensemble_matches_analytic_bins():
    t = targets.from_spec("vmf:sphere:2:kappa=2.0")
    cfg = GssConfig(target=t, w=TWO_PI, m=1, seed=13)
    ens = endpoint_ensemble(harness.worst_start(t), 20, 15_000, cfg)
    binning = harness.make_binning(t, bins=128)
    coords = np.stack([p.coords for p in ens])
    idx = binning.assign(coords)
    assert np.all(idx >= 0)
    counts = np.bincount(idx, minlength=binning.bin_count)
    res = stats.chisquare(counts, f_exp=binning.masses * len(coords))
    assert res.pvalue > 0.001


def test_torus_chain_end_to_end():
    t = targets.from_spec("uniform:torus:2:6.283185307179586")
    cfg = GssConfig(target=t, w=3.0, m=2, seed=15)
    x0 = t.manifold.point([0.1, 0.2])
    rec = run_chain(x0, 300, cfg)
    coords = np.stack([p.coords for p in rec.states])
    assert np.all((coords >= 0.0) & (coords < TWO_PI))
    ens = endpoint_ensemble(x0, 4, 20_000, cfg)
    est = harness.estimate_tv(ens, harness.make_binning(t, bins=64))
    assert est.tv <= est.bias + 5 * est.se  # a few steps mix the flat torus


def test_tv_decreases_along_the_chain():
    t = targets.from_spec("cap:sphere:2:psi=1.5707963267948966")
    cfg = GssConfig(target=t, w=TWO_PI, m=1, seed=14)
    x0 = harness.worst_start(t)
    binning = harness.make_binning(t)
    early = harness.estimate_tv(endpoint_ensemble(x0, 1, 20_000, cfg, seed=1), binning)
    late = harness.estimate_tv(endpoint_ensemble(x0, 6, 20_000, cfg, seed=2), binning)
    assert late.tv <= early.tv + 3 * math.hypot(early.se, late.se)
