"""Explicit uniform-ergodicity constants for the geodesic slice sampler.

The n-step total-variation distance to the target is bounded by rho^n with

    rho = 1 - epsilon / min(m w, lambda) * 1 / (kappa * omega_{d-1})
            * sup_t t * vol({p > t}) / sup p

where epsilon lower-bounds the stepping-out covering probability, lambda
bounds the geodesic section diameters of the support, kappa is the
Bishop-Gromov volume-comparison constant of the support, and omega_{d-1} is
the area of the unit sphere of the tangent spaces.  This module computes all
of these from target metadata, with an auditable provenance tag on every
input constant, and analyses the hyperparameter dependence of the bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import slice1d, targets
from .manifolds import Euclidean, Point, Sphere, TangentVector
from .slice1d import ApplicabilityError
from .targets import Target

_TWO_PI = 2.0 * math.pi


def volume_comparison_factor(ricci_lower: float, diam_w: float, dim: int) -> float:
    """Bishop-Gromov comparison constant of a support of the given diameter.

    With (d-1) * zeta a global Ricci lower bound, radial volume densities up
    to the cut time are dominated by the model-space profile, whose maximum
    over the support is returned:

        zeta > 0:  zeta^((1-d)/2) * sin^(d-1)(min(sqrt(zeta) diam, pi/2))
        zeta = 0:  diam^(d-1)
        zeta < 0:  |zeta|^((1-d)/2) * sinh^(d-1)(sqrt(|zeta|) diam)

    Positive zeta caps the diameter at pi / sqrt(zeta); in dimension 1 the
    factor is identically 1.
    """
    if not diam_w > 0:
        raise ValueError("support diameter must be positive")
    if dim < 1:
        raise ValueError("dimension must be >= 1")
    z = float(ricci_lower)
    if z > 0:
        if math.sqrt(z) * diam_w > math.pi * (1.0 + 1e-12):
            raise ApplicabilityError(
                f"sqrt(zeta) * diam = {math.sqrt(z) * diam_w} exceeds pi; "
                "no manifold realises these inputs"
            )
        ang = min(math.sqrt(z) * diam_w, math.pi / 2.0)
        return z ** ((1 - dim) / 2.0) * math.sin(ang) ** (dim - 1)
    if z == 0:
        return diam_w ** (dim - 1)
    a = math.sqrt(-z)
    return (-z) ** ((1 - dim) / 2.0) * math.sinh(a * diam_w) ** (dim - 1)


def covering_epsilon(diam_w: float, max_gap: float, m: float, w: float) -> float:
    """Certified stepping-out covering probability from support geometry alone.

    Instantiates the covering lower bound with the support diameter in place
    of the section length and the worst section gap in place of the local gap
    mass:

        epsilon = 1 - diam(W) / (m w) * [m finite] - gap / w * [m >= 2]

    Applicable when diam(W)/m * [m finite] < w - gap * [m >= 2].
    """
    return slice1d.covering_bound(diam_w, 0.0, max_gap, m, w)


def convergence_rate(
    epsilon: float,
    m: float,
    w: float,
    lam: float,
    kappa: float,
    omega_dm1: float,
    sup_tl: float,
    p_max: float,
) -> float:
    """The per-step total-variation contraction factor rho in [0, 1)."""
    if not 0.0 < epsilon <= 1.0:
        raise ValueError(f"epsilon must lie in (0, 1], got {epsilon}")
    mw = m * w
    lam_eff = min(mw, lam)
    if not (lam_eff > 0 and math.isfinite(lam_eff)):
        raise ValueError(
            f"min(m w, lambda) must be positive and finite, got {lam_eff}; "
            "infinite m needs finite lambda"
        )
    for name, v in (("kappa", kappa), ("omega_dm1", omega_dm1), ("sup_tl", sup_tl), ("p_max", p_max)):
        if not v > 0:
            raise ValueError(f"{name} must be positive, got {v}")
    rho = 1.0 - (epsilon / lam_eff) * (1.0 / (kappa * omega_dm1)) * (sup_tl / p_max)
    if not 0.0 <= rho < 1.0:
        raise ValueError(f"rho = {rho} outside [0, 1); inputs are inconsistent")
    return rho


def hit_and_run_rate(vol_c: float, diam_c: float, dim: int) -> float:
    """Contraction rate for the uniform distribution on a convex body.

    With unlimited expansions the sampler on flat space targeting a convex
    body C is the hit-and-run algorithm, and the rate reduces to

        rho = 1 - vol(C) / (omega_{d-1} diam(C)^d).

    The value is cross-checked against the general rate under the convex
    substitution (epsilon = 1, m = inf, lambda = diam, kappa = diam^(d-1)).
    """
    if not (vol_c > 0 and diam_c > 0 and dim >= 1):
        raise ValueError("volume, diameter and dimension must be positive")
    from .manifolds import unit_sphere_area

    omega = unit_sphere_area(dim)
    direct = 1.0 - vol_c / (omega * diam_c**dim)
    general = convergence_rate(
        1.0, math.inf, 1.0, diam_c, diam_c ** (dim - 1), omega, vol_c, 1.0
    )
    if abs(direct - general) > 1e-14 * max(1.0, abs(direct)):
        raise AssertionError(
            f"hit-and-run rate {direct} disagrees with the general rate {general}"
        )
    if not 0.0 <= direct < 1.0:
        raise ValueError(f"rho = {direct} outside [0, 1)")
    return direct


def hyperparameter_gain(m: float, w: float, diam_w: float, max_gap: float, lam: float) -> float:
    """The hyperparameter-dependent factor q(m, w) = epsilon(m, w) / min(m w, lambda).

    rho decreases linearly in q, so maximising q gives the fastest certified
    convergence for fixed target geometry.
    """
    eps = covering_epsilon(diam_w, max_gap, m, w)
    lam_eff = min(m * w, lam)
    if not (lam_eff > 0 and math.isfinite(lam_eff)):
        raise ApplicabilityError(
            f"min(m w, lambda) = {lam_eff}; infinite m needs finite lambda"
        )
    return eps / lam_eff


@dataclass(frozen=True)
class OptimalHyperparameters:
    """argmax of q with the landscape regime.

    ``w`` is None when any width attains the optimum (reported as "any");
    ``attained`` is False when the optimum is only approached as w -> inf.
    Regimes: a: lambda = inf; b: 2 diam < lambda <= 4 diam;
    c: lambda > 4 diam; d: lambda <= 2 diam.
    """

    m: float
    w: Optional[float]
    q: float
    regime: str
    attained: bool
    note: str = ""

    @property
    def w_label(self) -> str:
        if self.w is None:
            return "any"
        if math.isinf(self.w):
            return "inf (limit)"
        return repr(self.w)


def optimal_hyperparameters(diam_w: float, max_gap: float, lam: float) -> OptimalHyperparameters:
    """Best certified hyperparameters (m*, w*, q*) for the given geometry.

    The landscape has two analytic candidates: the interior peak of q(1, .)
    at w = 2 diam(W) and, for finite lambda, the large-w plateau with value
    1/lambda (exactly attained at m = inf for any w when the gap vanishes).
    """
    if not diam_w > 0:
        raise ValueError("support diameter must be positive")
    if max_gap < 0:
        raise ValueError("gap must be nonnegative")
    peak_q = 0.5 / min(2.0 * diam_w, lam)
    if math.isinf(lam):
        note = "ties: every m, w with m*w = 2*diam(W)" if max_gap == 0.0 else ""
        return OptimalHyperparameters(1, 2.0 * diam_w, peak_q, "a", True, note)
    if lam > 4.0 * diam_w:
        regime = "c"
    elif lam > 2.0 * diam_w:
        regime = "b"
    else:
        regime = "d"
    plateau_q = 1.0 / lam
    if peak_q > plateau_q:
        note = "ties: every m, w with m*w = 2*diam(W)" if max_gap == 0.0 else ""
        return OptimalHyperparameters(1, 2.0 * diam_w, peak_q, regime, True, note)
    if peak_q == plateau_q:
        return OptimalHyperparameters(
            1, 2.0 * diam_w, peak_q, regime, True, "ties: large-w plateau reaches the same value"
        )
    if max_gap == 0.0:
        return OptimalHyperparameters(
            math.inf, None, plateau_q, regime, True, "m = inf attains 1/lambda for every w"
        )
    return OptimalHyperparameters(
        math.inf, math.inf, plateau_q, regime, False, "supremum 1/lambda approached as w -> inf"
    )


def isoembolic_lower_bound(inj: float, diam: float, zeta: float, dim: int) -> float:
    """Lower bound on vol(M) / (diam * kappa * omega_{d-1}) when the support is all of M.

    Combines the Berger isoembolic inequality vol(M) >= (inj/pi)^d * omega_d
    with omega_d / omega_{d-1} >= sqrt(2 pi / d):

        zeta > 0:  sqrt(2/pi)  / sqrt(d) * (inj sqrt(zeta) / pi)^d
        zeta = 0:  sqrt(2 pi) / sqrt(d) * (inj / (pi diam))^d
        zeta < 0:  sqrt(2 pi) / sqrt(d) * (inj sqrt(|zeta|) / (pi sinh(sqrt(|zeta|) diam)))^d

    (positive zeta uses the diameter cap sqrt(zeta) diam <= pi).
    """
    if not (0 < inj <= diam * (1.0 + 1e-12)):
        raise ApplicabilityError("need 0 < injectivity radius <= diameter")
    if dim < 1:
        raise ValueError("dimension must be >= 1")
    z = float(zeta)
    if z > 0:
        if math.sqrt(z) * diam > math.pi * (1.0 + 1e-12):
            raise ApplicabilityError("sqrt(zeta) * diam exceeds pi")
        return math.sqrt(2.0 / math.pi) / math.sqrt(dim) * (inj * math.sqrt(z) / math.pi) ** dim
    if z == 0:
        return math.sqrt(_TWO_PI) / math.sqrt(dim) * (inj / (math.pi * diam)) ** dim
    a = math.sqrt(-z)
    return math.sqrt(_TWO_PI) / math.sqrt(dim) * (inj * a / (math.pi * math.sinh(a * diam))) ** dim


# ---------------------------------------------------------------------------
# Monte-Carlo covering probability
# ---------------------------------------------------------------------------

def estimate_epsilon(
    target: Target,
    m: float,
    w: float,
    n_probes: int,
    runs_per_probe: int,
    rng: np.random.Generator,
    grid: int = 4096,
):
    """Statistical lower envelope of the covering probability over random probes.

    Each probe draws a support point, direction and level, scans the geodesic
    section on a grid to locate its supremum before the cut time, and counts
    stepping-out draws whose interval clears it.  Returns (min over probes of
    the per-probe estimate, standard error at the argmin).  An infimum over an
    uncountable family cannot be certified this way: treat the result as
    optimistic.
    """
    man = target.manifold
    params = slice1d.StepOutParams(w, m)
    best = (math.inf, 0.0)
    for _ in range(n_probes):
        xa = targets._support_draw(target, rng)
        va = man.sample_tangent_array(xa, rng)
        cut = man.cut_time(Point(xa), TangentVector(Point(xa), va)).value
        horizon = min(cut, target.diam_w * (1.0 + 1e-9))
        thetas = np.linspace(0.0, horizon, grid, endpoint=False)
        dens = target.density_batch(targets._geodesic_batch(man, xa, va, thetas))
        level = rng.random() * float(target.density(xa))
        hits = np.nonzero(dens > level)[0]
        if len(hits) == 0:
            continue
        b = float(thetas[hits[-1]])

        def oracle(s: float) -> bool:
            return float(target.density(man.exp_array(xa, va, s))) > level

        covered = 0
        for _ in range(runs_per_probe):
            itv = slice1d.stepping_out(oracle, params, rng)
            if itv.hi > b:
                covered += 1
        p = covered / runs_per_probe
        if p < best[0]:
            best = (p, math.sqrt(max(p * (1.0 - p), 1e-300) / runs_per_probe))
    if not math.isfinite(best[0]):
        raise RuntimeError("all probes produced empty sections; target metadata wrong?")
    return best


# ---------------------------------------------------------------------------
# report assembly
# ---------------------------------------------------------------------------

EPSILON_MODES = ("auto", "analytic", "corollary", "monte-carlo")


@dataclass(frozen=True)
class BoundsReport:
    """All constants of the convergence certificate with input provenance."""

    target_spec: str
    dim: int
    m: float
    w: float
    zeta: float
    kappa: float
    epsilon: float
    epsilon_provenance: str
    epsilon_se: Optional[float]
    lambda_value: float
    lambda_eff: float
    sup_t_level: float
    p_max: float
    omega_dm1: float
    diam_w: float
    delta: Optional[float]
    delta_analytic: bool
    rho: float
    q: Optional[float]
    q_note: str
    certified: bool

    def lines(self) -> list:
        """Flat key-value rendering, one constant per line with provenance."""
        def fmt(v):
            if v is None:
                return "n/a"
            if isinstance(v, float) and math.isinf(v):
                return "inf"
            return repr(v)

        gap_tag = "analytic" if self.delta_analytic else "statistical lower bound"
        cert = "certified" if self.certified else "advisory (not certified)"
        out = [
            f"target = {self.target_spec}",
            f"dim = {self.dim}",
            f"m = {'inf' if math.isinf(self.m) else int(self.m)}",
            f"w = {fmt(self.w)}",
            f"diam_W = {fmt(self.diam_w)} [target metadata]",
            f"delta = {fmt(self.delta)} [{gap_tag}]",
            f"lambda = {fmt(self.lambda_value)} [target metadata]",
            f"lambda_eff = {fmt(self.lambda_eff)} [min(m*w, lambda)]",
            f"zeta = {fmt(self.zeta)} [manifold metadata]",
            f"kappa = {fmt(self.kappa)} [volume comparison]",
            f"omega_dm1 = {fmt(self.omega_dm1)} [unit sphere area]",
            f"p_max = {fmt(self.p_max)} [target metadata]",
            f"sup_t_level = {fmt(self.sup_t_level)} [level-set optimiser]",
            f"epsilon = {fmt(self.epsilon)} [{self.epsilon_provenance}]",
        ]
        if self.epsilon_se is not None:
            out.append(f"epsilon_se = {fmt(self.epsilon_se)} [monte-carlo]")
        out.append(f"q = {fmt(self.q)}" + (f" [{self.q_note}]" if self.q_note else ""))
        out.append(f"rho = {fmt(self.rho)} [{cert}]")
        return out

    def to_dict(self) -> dict:
        d = {
            "target": self.target_spec,
            "dim": self.dim,
            "m": "inf" if math.isinf(self.m) else int(self.m),
            "w": self.w,
            "diam_w": self.diam_w,
            "delta": self.delta,
            "delta_analytic": self.delta_analytic,
            "lambda": None if math.isinf(self.lambda_value) else self.lambda_value,
            "lambda_eff": self.lambda_eff,
            "zeta": self.zeta,
            "kappa": self.kappa,
            "omega_dm1": self.omega_dm1,
            "p_max": self.p_max,
            "sup_t_level": self.sup_t_level,
            "epsilon": self.epsilon,
            "epsilon_provenance": self.epsilon_provenance,
            "epsilon_se": self.epsilon_se,
            "q": self.q,
            "rho": self.rho,
            "certified": self.certified,
        }
        return d


def _analytic_epsilon(target: Target, m: float, w: float):
    """Exact epsilon = 1 cases: full-winding sphere intervals, convex sections."""
    if isinstance(target.manifold, Sphere) and m == 1 and abs(w - _TWO_PI) <= 1e-9 * _TWO_PI:
        # A width-2*pi interval wraps the whole great circle, so the geodesic
        # section is always swallowed up to periodicity.
        return 1.0, "analytic: full-winding interval on the sphere"
    if isinstance(target.manifold, Euclidean) and math.isinf(m) and target.convex_level_sets:
        # Unlimited expansion always clears a bounded convex section.
        return 1.0, "analytic: convex geodesic sections, m = inf"
    raise ApplicabilityError(
        "no analytic covering probability for this configuration; "
        "use corollary or monte-carlo mode"
    )


def full_report(
    target: Target,
    m: float,
    w: float,
    epsilon_mode: str = "auto",
    rng: Optional[np.random.Generator] = None,
    mc_probes: int = 64,
    mc_runs: int = 2000,
) -> BoundsReport:
    """Assemble every constant of the certificate for one configuration.

    ``epsilon_mode``: "analytic" uses the exact epsilon = 1 special cases;
    "corollary" derives epsilon from (diam W, gap, m, w); "monte-carlo"
    estimates the covering probability empirically (never certified);
    "auto" picks analytic when applicable, else corollary.
    """
    if epsilon_mode not in EPSILON_MODES:
        raise ValueError(f"epsilon_mode must be one of {EPSILON_MODES}")
    info = target.manifold.info
    kappa = volume_comparison_factor(info.ricci_lower, target.diam_w, info.dim)
    sup_tl = targets.sup_t_level(target)
    gap = target.max_gap

    eps_se = None
    certified = False
    if epsilon_mode == "auto":
        try:
            eps, prov = _analytic_epsilon(target, m, w)
            certified = True
        except ApplicabilityError:
            epsilon_mode = "corollary"
    if epsilon_mode == "analytic":
        eps, prov = _analytic_epsilon(target, m, w)
        certified = True
    if epsilon_mode == "corollary":
        if gap is None:
            raise ApplicabilityError(
                "corollary epsilon needs the section-gap constant; estimate it first "
                "(estimate_max_gap) or use monte-carlo mode"
            )
        eps = covering_epsilon(target.diam_w, gap, m, w)
        if m == 1 or target.max_gap_analytic:
            prov = "corollary formula"
            certified = True
        else:
            prov = "corollary formula with estimated gap (optimistic)"
            certified = False
    if epsilon_mode == "monte-carlo":
        if rng is None:
            raise ValueError("monte-carlo epsilon mode needs an rng")
        eps, eps_se = estimate_epsilon(target, m, w, mc_probes, mc_runs, rng)
        if eps <= 0.0:
            raise ValueError("estimated covering probability is zero; bound vacuous")
        prov = "monte-carlo infimum over probes (statistical, optimistic)"
        certified = False

    rho = convergence_rate(
        eps, m, w, target.lambda_value, kappa, info.omega_dm1, sup_tl, target.p_max
    )
    try:
        q = hyperparameter_gain(m, w, target.diam_w, 0.0 if gap is None else gap, target.lambda_value)
        q_note = "corollary formula"
    except ApplicabilityError as e:
        q, q_note = None, f"inapplicable: {e}"
    return BoundsReport(
        target_spec=target.spec_string,
        dim=info.dim,
        m=m,
        w=w,
        zeta=info.ricci_lower,
        kappa=kappa,
        epsilon=eps,
        epsilon_provenance=prov,
        epsilon_se=eps_se,
        lambda_value=target.lambda_value,
        lambda_eff=min(m * w, target.lambda_value),
        sup_t_level=sup_tl,
        p_max=target.p_max,
        omega_dm1=info.omega_dm1,
        diam_w=target.diam_w,
        delta=gap,
        delta_analytic=target.max_gap_analytic,
        rho=rho,
        q=q,
        q_note=q_note,
        certified=certified,
    )
