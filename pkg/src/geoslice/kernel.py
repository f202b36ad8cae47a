"""Geodesic slice sampler: single transitions, chains, and endpoint ensembles.

One transition from x draws a level T uniformly below the density at x, a
uniform unit tangent direction v, runs the stepping-out procedure along the
geodesic through (x, v) on the superlevel oracle, then the reeled shrinkage
on the resulting interval, and moves to the accepted geodesic point.

Chains are reproducible: all randomness flows from a 64-bit seed, and
replicate chains use independent derived streams (seed XOR replicate index
through a 64-bit mixer), so ensembles are bit-identical for any thread count.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import IO, Optional

import numpy as np

from . import slice1d
from .manifolds import Point
from .rng import make_stream, open_uniform
from .targets import Target


class ConfigError(ValueError):
    """Hyperparameters inconsistent with the target."""


@dataclass(frozen=True)
class GssConfig:
    """Sampler configuration: target, interval width w, expansion budget m, seed."""

    target: Target
    w: float
    m: float  # integer >= 1 or math.inf
    seed: int
    max_expansions: int = 1_000_000
    max_shrink_iters: int = 100_000

    def __post_init__(self):
        params = slice1d.StepOutParams(self.w, self.m, self.max_expansions)  # validates w, m
        object.__setattr__(self, "_step_out_params", params)
        if math.isinf(self.m) and not self.target.lambda_finite:
            raise ConfigError(
                "m = inf requires every geodesic to meet the support in a bounded "
                f"parameter set, which fails for target {self.target.name!r} "
                "(unbounded geodesic sections); choose a finite m"
            )

    @property
    def step_out_params(self) -> slice1d.StepOutParams:
        return self._step_out_params

    def describe(self) -> dict:
        return {
            "target": self.target.spec_string,
            "w": self.w,
            "m": "inf" if math.isinf(self.m) else int(self.m),
            "seed": self.seed,
            "max_expansions": self.max_expansions,
            "max_shrink_iters": self.max_shrink_iters,
        }


@dataclass(frozen=True)
class StepDiagnostics:
    level: float
    direction: np.ndarray
    interval_width: float
    shrink_iterations: int
    expansions: int


@dataclass
class ChainRecord:
    """Persisted trajectory with its configuration, seed, and diagnostics."""

    config: dict
    seed: int
    burn_in: int
    thin: int
    states: list = field(default_factory=list)       # list[Point]
    diagnostics: list = field(default_factory=list)  # list[StepDiagnostics]


def _step_array(xa: np.ndarray, config: GssConfig, rng: np.random.Generator):
    """One transition on raw coordinates; returns (new coords, diagnostics)."""
    target, man = config.target, config.target.manifold
    px = float(target.density(xa))
    if not px > 0.0:
        raise ValueError("current state has zero density")
    level = open_uniform(rng, 0.0, 1.0) * px
    va = man.sample_tangent_array(xa, rng)

    def oracle(theta: float) -> bool:
        return float(target.density(man.exp_array(xa, va, theta))) > level

    try:
        itv = slice1d.stepping_out(oracle, config.step_out_params, rng)
        res = slice1d.reeled_shrinkage(oracle, itv.lo, itv.hi, rng, config.max_shrink_iters)
    except (slice1d.ExpansionCapError, slice1d.ShrinkageCapError) as e:
        raise type(e)(
            f"{e} [state={np.array2string(xa, precision=6)}, "
            f"direction={np.array2string(va, precision=6)}, level={level}]"
        ) from e
    ya = man.exp_array(xa, va, res.theta)
    diag = StepDiagnostics(
        level=level,
        direction=va,
        interval_width=itv.width,
        shrink_iterations=res.iterations,
        expansions=itv.expansions_left + itv.expansions_right,
    )
    return ya, diag


def step(x: Point, config: GssConfig, rng: np.random.Generator) -> Point:
    """One transition of the geodesic slice sampler from x."""
    ya, _ = _step_array(x.coords, config, rng)
    return Point(ya)


def step_detailed(x: Point, config: GssConfig, rng: np.random.Generator):
    ya, diag = _step_array(x.coords, config, rng)
    return Point(ya), diag


def run_chain(
    x0: Point,
    n: int,
    config: GssConfig,
    burn_in: int = 0,
    thin: int = 1,
    sink: Optional[IO[str]] = None,
    header_extra: Optional[dict] = None,
) -> ChainRecord:
    """Run a chain and record n states after burn-in, keeping every thin-th step.

    All randomness comes from stream 0 of the config seed, so identical seeds
    reproduce identical trajectories.  When ``sink`` is given, a JSON header
    line with the full configuration is written first and each retained state
    is streamed as one JSON line::

        {"i": <step index>, "x": [...], "t": <level>, "w_int": <interval width>,
         "k_shrink": <shrinkage iterations>}
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    if thin < 1:
        raise ValueError("thin must be >= 1")
    if not config.target.density(x0.coords) > 0:
        raise ValueError("initial state has zero density")
    rng = make_stream(config.seed, 0)
    record = ChainRecord(config=config.describe(), seed=config.seed, burn_in=burn_in, thin=thin)
    if sink is not None:
        header = {"geoslice_chain": dict(record.config)}
        if header_extra:
            header.update(header_extra)
        sink.write(json.dumps(header) + "\n")
    xa = np.array(x0.coords, dtype=float)
    for _ in range(burn_in):
        xa, _ = _step_array(xa, config, rng)
    for k in range(n):
        for _ in range(thin):
            xa, diag = _step_array(xa, config, rng)
        record.states.append(Point(xa))
        record.diagnostics.append(diag)
        if sink is not None:
            sink.write(
                json.dumps(
                    {
                        "i": burn_in + (k + 1) * thin,
                        "x": [float(c) for c in xa],
                        "t": diag.level,
                        "w_int": diag.interval_width,
                        "k_shrink": diag.shrink_iterations,
                    }
                )
                + "\n"
            )
    return record


def endpoint_ensemble(
    x0: Point,
    n_steps: int,
    replicates: int,
    config: GssConfig,
    seed: Optional[int] = None,
    threads: int = 1,
) -> list:
    """Final states of independent replicate chains started at x0.

    Replicate i consumes the derived stream (base seed, i), so the result is
    a deterministic function of (x0, n_steps, replicates, seed) no matter how
    many worker threads are used.
    """
    base = config.seed if seed is None else seed
    x0a = np.array(x0.coords, dtype=float)

    def one(i: int) -> np.ndarray:
        rng = make_stream(base, i)
        xa = x0a
        for _ in range(n_steps):
            xa, _ = _step_array(xa, config, rng)
        return xa

    if threads <= 1:
        finals = [one(i) for i in range(replicates)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            finals = list(pool.map(one, range(replicates)))
    return [Point(a) for a in finals]
