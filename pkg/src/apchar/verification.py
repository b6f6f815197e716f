"""Machine checks for every inequality and identity behind the cut-off result.

Each check evaluates a concrete claim on concrete grid weights and returns a
VerificationReport with the worst observed violation:

* ``check_cutoff_monotonicity``: cutting from above never increases the
  per-cube ratio (and hence the characteristic).
* ``check_below_cut``: same for cutting from below, cross-checked through
  the reciprocal/dual-exponent route.
* ``a2_decomposition_residual``: the exact two-part decomposition of the A2
  ratio drop under an upper cut, plus its two sign claims.
* ``phi_eval`` / ``phi_partials``: the two-parameter reduction phi(s, u) of
  the ratio gap, with closed-form partial derivatives validated against
  central finite differences.
* ``convergence_profile``: two-sided truncations never increase the
  characteristic and reach it exactly once they clear the weight's range.
* ``bm_profile``: the bounded rational regularisation family, reported for
  comparison (flagged, never failed: its monotonicity is not checked theory).

Violation metrics are normalised by the natural magnitude of the expressions
involved, so tolerances stay meaningful for weights with huge dynamic range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .characteristic import MeanCache, cube_arrays, cube_ratios, default_policy
from .errors import InvalidExponent, InvalidParameter
from .weights import (
    Exponent,
    ExponentPair,
    GridCube,
    GridWeight,
    cutoff_above,
    cutoff_below,
    partition_stats,
    reciprocal_dual,
    truncate_two_sided,
    bm_regularize,
    _check_positive,
)

__all__ = [
    "TOL_IDENTITY",
    "TOL_INEQUALITY",
    "VerificationReport",
    "check_cutoff_monotonicity",
    "check_below_cut",
    "A2Decomposition",
    "a2_decomposition_residual",
    "PhiParams",
    "phi_eval",
    "phi_partials",
    "phi_from_cutoff",
    "convergence_profile",
    "convergence_report",
    "bm_profile",
    "bm_report",
    "SIGMA_GRID",
    "exponent_pair_grid",
    "finite_pair_grid",
    "random_lognormal_weight",
    "random_cut_level",
    "theorem1_suite",
    "below_cut_suite",
    "a2_identity_suite",
    "phi_suite",
]

TOL_IDENTITY = 1e-12   # pure algebra, relative
TOL_INEQUALITY = 1e-9  # proved inequalities in accurate mode, relative
_FD_STEP = 1e-6        # central-difference step scale
_FD_RTOL = 1e-6        # relative agreement where the derivative is significant
_FD_SMALL = 1e-2       # |derivative| < _FD_SMALL * scale counts as "small"
_FD_ATOL = 1e-8        # scaled absolute agreement in the small-derivative zone

SIGMA_GRID = (0.5, 2.0, 5.0)


@dataclass
class VerificationReport:
    """Structured pass/fail evidence for one claim."""

    claim: str
    params: dict
    trials: int
    max_violation: float | None
    residual_max: float | None
    passed: bool
    seed: int | None = None
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "claim": self.claim,
            "params": self.params,
            "trials": self.trials,
            "max_violation": self.max_violation,
            "residual_max": self.residual_max,
            "pass": self.passed,
            "seed": self.seed,
        }
        if self.details:
            out["details"] = self.details
        return out


def _as_pair(pair) -> ExponentPair:
    return pair if isinstance(pair, ExponentPair) else ExponentPair(*pair)


def _ratio_arrays(w: GridWeight, pair: ExponentPair, lo, hi) -> np.ndarray:
    return cube_ratios(MeanCache(w, pair, "accurate"), lo, hi)


def check_cutoff_monotonicity(w: GridWeight, pair: ExponentPair, a: float,
                              policy: str | None = None) -> VerificationReport:
    """Per-cube check that the upper cut-off never increases the ratio.

    Evaluates ratio(min(w, a), J) - ratio(w, J) over every enumerated cube in
    accurate mode; the violation is normalised by max(1, ratio(w, J)). Also
    reports the global consequence on the characteristic itself.
    """
    pair = _as_pair(pair)
    a = _check_positive(a, "cut level a")
    policy = policy or default_policy(w.dims)
    lo, hi = cube_arrays(w.dims, policy)
    base = _ratio_arrays(w, pair, lo, hi)
    cut = _ratio_arrays(cutoff_above(w, a), pair, lo, hi)
    viol = (cut - base) / np.maximum(1.0, base)
    worst = int(np.argmax(viol))
    norm_w = float(base.max())
    norm_cut = float(cut.max())
    global_gap = (norm_cut - norm_w) / max(1.0, norm_w)
    max_violation = float(viol[worst])
    passed = max_violation <= TOL_INEQUALITY and global_gap <= TOL_INEQUALITY
    return VerificationReport(
        claim="theorem1",
        params={"a": a, "pair": pair.tokens(), "policy": policy, "dims": list(w.dims)},
        trials=int(lo.shape[0]),
        max_violation=max_violation,
        residual_max=None,
        passed=passed,
        details={
            "worst_cube": {"lo": [int(v) for v in lo[worst]], "hi": [int(v) for v in hi[worst]]},
            "norm": norm_w,
            "norm_cutoff": norm_cut,
            "global_gap": global_gap,
        },
    )


def check_below_cut(w: GridWeight, pair: ExponentPair, a: float,
                    policy: str | None = None) -> VerificationReport:
    """Per-cube check for the lower cut, plus the duality cross-check.

    max(w, a) over any cube must not beat w; additionally the characteristic
    of max(w, a) must agree, within identity tolerance, with the value
    obtained from the transformed data (1/w cut above at 1/a, exponents
    (-p2, -p1)).
    """
    pair = _as_pair(pair)
    a = _check_positive(a, "cut level a")
    policy = policy or default_policy(w.dims)
    lo, hi = cube_arrays(w.dims, policy)
    base = _ratio_arrays(w, pair, lo, hi)
    cut = _ratio_arrays(cutoff_below(w, a), pair, lo, hi)
    viol = (cut - base) / np.maximum(1.0, base)
    worst = int(np.argmax(viol))
    norm_w = float(base.max())
    norm_cut = float(cut.max())
    global_gap = (norm_cut - norm_w) / max(1.0, norm_w)

    dual_w, dual_pair = reciprocal_dual(w, pair)
    dual_cut = _ratio_arrays(cutoff_above(dual_w, 1.0 / a), dual_pair, lo, hi)
    norm_dual = float(dual_cut.max())
    duality_residual = abs(norm_cut - norm_dual) / max(1.0, norm_cut)

    max_violation = float(viol[worst])
    passed = (
        max_violation <= TOL_INEQUALITY
        and global_gap <= TOL_INEQUALITY
        and duality_residual <= TOL_IDENTITY
    )
    return VerificationReport(
        claim="below-cut",
        params={"a": a, "pair": pair.tokens(), "policy": policy, "dims": list(w.dims)},
        trials=int(lo.shape[0]),
        max_violation=max_violation,
        residual_max=duality_residual,
        passed=passed,
        details={
            "worst_cube": {"lo": [int(v) for v in lo[worst]], "hi": [int(v) for v in hi[worst]]},
            "norm": norm_w,
            "norm_cutoff": norm_cut,
            "norm_dual_route": norm_dual,
            "global_gap": global_gap,
        },
    )


@dataclass(frozen=True)
class A2Decomposition:
    """Exact decomposition of the A2 ratio drop under an upper cut.

    lhs = <w>_J <1/w>_J - <w_a>_J <1/w_a>_J
    rhs = alpha1*alpha2*cross_term + alpha2^2*tail_term, with
    cross_term = x1*y2 + x2*y1 - y1*a - x1/a and tail_term = x2*y2 - 1.
    ``residual`` is |lhs - rhs| normalised by max(1, <w>_J <1/w>_J); the sign
    fields are None when the corresponding part of the cube is empty.
    """

    lhs: float
    rhs: float
    residual: float
    cross_term: float | None
    tail_term: float | None


def a2_decomposition_residual(w: GridWeight, a: float,
                              cube: GridCube | None = None) -> A2Decomposition:
    """Evaluate both sides of the A2 decomposition identity on one cube."""
    a = _check_positive(a, "cut level a")
    if cube is None:
        cube = w.whole_cube()
    cube.validate_for(w.dims)
    sub = w.samples[cube.slices()].reshape(-1)
    x = float(sub.mean())
    y = float((1.0 / sub).mean())
    cut = np.minimum(sub, a)
    xa = float(cut.mean())
    ya = float((1.0 / cut).mean())
    lhs = x * y - xa * ya

    stats = partition_stats(w, ExponentPair.a2(), cube, a)
    rhs = 0.0
    cross_term = None
    tail_term = None
    if not stats.j2_empty:
        tail_term = stats.x2 * stats.y2 - 1.0
        rhs += stats.alpha2 * stats.alpha2 * tail_term
        if not stats.j1_empty:
            cross_term = (
                stats.x1 * stats.y2 + stats.x2 * stats.y1
                - stats.y1 * a - stats.x1 / a
            )
            rhs += stats.alpha1 * stats.alpha2 * cross_term
    residual = abs(lhs - rhs) / max(1.0, x * y)
    return A2Decomposition(lhs=lhs, rhs=rhs, residual=residual,
                           cross_term=cross_term, tail_term=tail_term)


@dataclass(frozen=True)
class PhiParams:
    """Fixed data of the two-parameter ratio-gap function phi(s, u).

    x1, y1 are the raw moments of w^p1, w^p2 on the low part of the cube,
    alpha1/alpha2 the relative measures of the two parts, a the cut level.
    Both exponents must be finite and nonzero.
    """

    x1: float
    y1: float
    alpha1: float
    alpha2: float
    a: float
    pair: ExponentPair

    def __post_init__(self) -> None:
        object.__setattr__(self, "pair", _as_pair(self.pair))
        if not self.pair.both_finite:
            raise InvalidExponent("phi analysis requires finite nonzero exponents")
        for name in ("x1", "y1", "a"):
            _check_positive(getattr(self, name), name)
        if not (0.0 <= self.alpha1 <= 1.0 and 0.0 <= self.alpha2 <= 1.0):
            raise InvalidParameter("alpha1, alpha2 must lie in [0, 1]")
        if abs(self.alpha1 + self.alpha2 - 1.0) > 1e-12:
            raise InvalidParameter("alpha1 + alpha2 must equal 1")

    @classmethod
    def from_partition(cls, w: GridWeight, pair: ExponentPair, cube: GridCube | None,
                       a: float) -> "PhiParams":
        """Build from a real cube partition; empty low part gets unit moments.

        Checks the per-part Hoelder bound x1^(1/p1) >= y1^(1/p2) that real
        partitions must satisfy.
        """
        pair = _as_pair(pair)
        stats = partition_stats(w, pair, cube, a)
        if stats.j1_empty:
            x1, y1 = 1.0, 1.0
        else:
            x1, y1 = stats.x1, stats.y1
            lhs = x1 ** (1.0 / pair.p1.value)
            rhs = y1 ** (1.0 / pair.p2.value)
            if lhs < rhs * (1.0 - 1e-9):
                raise InvalidParameter("partition moments violate the Hoelder bound")
        return cls(x1=x1, y1=y1, alpha1=stats.alpha1, alpha2=stats.alpha2,
                   a=stats.a, pair=pair)

    def base_value(self) -> float:
        """The subtracted constant: the ratio after replacing the high part by a."""
        p1, p2 = self.pair.p1.value, self.pair.p2.value
        A0 = self.alpha1 * self.x1 + self.alpha2 * self.a ** p1
        B0 = self.alpha1 * self.y1 + self.alpha2 * self.a ** p2
        return A0 ** (1.0 / p1) * B0 ** (-1.0 / p2)


def phi_eval(params: PhiParams, s: float, u: float) -> float:
    """The ratio-gap function of the high-part shape parameters (s, u).

    phi(s, u) = (a1*x1 + a2*s^p1*u^p1)^(1/p1) * (a1*y1 + a2*u^p2)^(-1/p2)
              - (a1*x1 + a2*a^p1)^(1/p1) * (a1*y1 + a2*a^p2)^(-1/p2)

    phi(1, a) = 0 exactly, and phi vanishes identically when alpha2 = 0.
    """
    s = float(s)
    u = float(u)
    if not (s > 0.0 and u > 0.0):
        raise InvalidParameter(f"phi requires s > 0 and u > 0, got s={s!r}, u={u!r}")
    p1, p2 = params.pair.p1.value, params.pair.p2.value
    a1, a2 = params.alpha1, params.alpha2
    A = a1 * params.x1 + a2 * (s ** p1) * (u ** p1)
    B = a1 * params.y1 + a2 * u ** p2
    A0 = a1 * params.x1 + a2 * params.a ** p1
    B0 = a1 * params.y1 + a2 * params.a ** p2
    return A ** (1.0 / p1) * B ** (-1.0 / p2) - A0 ** (1.0 / p1) * B0 ** (-1.0 / p2)


def phi_partials(params: PhiParams, s: float, u: float) -> tuple:
    """Closed-form partial derivatives of phi and the sign bracket.

    Returns (dphi_ds, dphi_du, bracket) with

      dphi_ds = a2 * s^(p1-1) * u^p1 * A^(1/p1-1) * B^(-1/p2)
      dphi_du = a2 / u * A^(1/p1-1) * B^(-1/p2-1) * (s^p1*u^p1*B - u^p2*A)
      bracket = u^p1 * y1 - u^p2 * x1

    dphi_ds is a product of nonnegative factors, hence >= 0 identically. At
    s = 1 the parenthesis in dphi_du reduces to alpha1 * bracket, and the
    bracket is nonnegative whenever u dominates the low part of the weight.
    """
    s = float(s)
    u = float(u)
    if not (s > 0.0 and u > 0.0):
        raise InvalidParameter(f"phi requires s > 0 and u > 0, got s={s!r}, u={u!r}")
    p1, p2 = params.pair.p1.value, params.pair.p2.value
    a1, a2 = params.alpha1, params.alpha2
    A = a1 * params.x1 + a2 * (s ** p1) * (u ** p1)
    B = a1 * params.y1 + a2 * u ** p2
    bracket = (u ** p1) * params.y1 - (u ** p2) * params.x1
    if a2 == 0.0:
        return 0.0, 0.0, bracket
    dphi_ds = a2 * s ** (p1 - 1.0) * u ** p1 * A ** (1.0 / p1 - 1.0) * B ** (-1.0 / p2)
    paren = (s ** p1) * (u ** p1) * B - (u ** p2) * A
    dphi_du = a2 / u * A ** (1.0 / p1 - 1.0) * B ** (-1.0 / p2 - 1.0) * paren
    return dphi_ds, dphi_du, bracket


def phi_from_cutoff(w: GridWeight, pair: ExponentPair, cube: GridCube | None,
                    a: float) -> tuple:
    """PhiParams of a real partition plus the actual (s, u) of its high part.

    phi(s, u) then equals ratio(w, J) - ratio(min(w, a), J) up to floating
    error. When the high part is empty, (s, u) default to (1, a) and phi is
    identically zero.
    """
    pair = _as_pair(pair)
    params = PhiParams.from_partition(w, pair, cube, a)
    stats = partition_stats(w, pair, cube, a)
    if stats.j2_empty:
        return params, 1.0, params.a
    u = stats.y2 ** (1.0 / pair.p2.value)
    su = stats.x2 ** (1.0 / pair.p1.value)
    return params, su / u, u


def convergence_profile(w: GridWeight, pair: ExponentPair, policy: str | None = None,
                        n_list=None) -> list:
    """Characteristic of the two-sided truncation for each clamp level n.

    Default n_list runs through powers of two until the truncation clears the
    weight's range, i.e. n >= ceil(max(max w, 1/min w)).
    """
    from .characteristic import ap_norm

    pair = _as_pair(pair)
    policy = policy or default_policy(w.dims)
    if n_list is None:
        threshold = math.ceil(max(w.max_value, 1.0 / w.min_value))
        n_list = [1]
        while n_list[-1] < threshold:
            n_list.append(n_list[-1] * 2)
    profile = []
    for n in n_list:
        value = ap_norm(truncate_two_sided(w, int(n)), pair, policy, "accurate").value
        profile.append((int(n), value))
    return profile


def convergence_report(w: GridWeight, pair: ExponentPair, policy: str | None = None,
                       n_list=None) -> VerificationReport:
    """Report on the truncation profile: never above, exactly equal past range."""
    from .characteristic import ap_norm

    pair = _as_pair(pair)
    policy = policy or default_policy(w.dims)
    base = ap_norm(w, pair, policy, "accurate").value
    threshold = math.ceil(max(w.max_value, 1.0 / w.min_value))
    profile = convergence_profile(w, pair, policy, n_list)
    max_violation = max((v - base) / max(1.0, base) for _, v in profile)
    exact_past = all(v == base for n, v in profile if n >= threshold)
    reached = any(n >= threshold for n, _ in profile)
    passed = max_violation <= TOL_INEQUALITY and exact_past and reached
    return VerificationReport(
        claim="convergence",
        params={"pair": pair.tokens(), "policy": policy, "dims": list(w.dims)},
        trials=len(profile),
        max_violation=float(max_violation),
        residual_max=None,
        passed=passed,
        details={
            "norm": base,
            "equality_threshold": int(threshold),
            "profile": [[n, v] for n, v in profile],
            "exact_past_threshold": exact_past,
        },
    )


def bm_profile(w: GridWeight, pair: ExponentPair, policy: str | None = None,
               s_list=None) -> list:
    """Characteristic of the rational regularisation for each parameter s."""
    from .characteristic import ap_norm

    pair = _as_pair(pair)
    policy = policy or default_policy(w.dims)
    if s_list is None:
        s_list = [1.0, 0.1, 0.01, 0.001, 1e-4, 1e-5, 1e-6]
    profile = []
    for s in s_list:
        value = ap_norm(bm_regularize(w, float(s)), pair, policy, "accurate").value
        profile.append((float(s), value))
    return profile


def bm_report(w: GridWeight, pair: ExponentPair, policy: str | None = None,
              s_list=None) -> VerificationReport:
    """Report the regularisation profile and its gap to the base value.

    Parameters whose value exceeds the base beyond tolerance are flagged but
    never fail the report: the monotonicity of this family is outside the
    checked theory.
    """
    from .characteristic import ap_norm

    pair = _as_pair(pair)
    policy = policy or default_policy(w.dims)
    base = ap_norm(w, pair, policy, "accurate").value
    profile = bm_profile(w, pair, policy, s_list)
    gaps = [(s, (v - base) / max(1.0, base)) for s, v in profile]
    flagged = [s for s, g in gaps if g > TOL_INEQUALITY]
    return VerificationReport(
        claim="bm",
        params={"pair": pair.tokens(), "policy": policy, "dims": list(w.dims)},
        trials=len(profile),
        max_violation=float(max(g for _, g in gaps)),
        residual_max=None,
        passed=True,
        details={
            "norm": base,
            "profile": [[s, v] for s, v in profile],
            "gaps": [[s, g] for s, g in gaps],
            "flagged_s": flagged,
        },
    )


# --------------------------- randomized suites ---------------------------

def exponent_pair_grid() -> tuple:
    """Exponent pairs spanning every kind combination, plus classic presets."""
    values = (-math.inf, -3.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, math.inf)
    seen = set()
    pairs = []
    for v1 in values:
        for v2 in values:
            if v1 > v2 and (v1, v2) not in seen:
                seen.add((v1, v2))
                pairs.append(ExponentPair(Exponent(v1), Exponent(v2)))
    for preset in (ExponentPair.a2(), ExponentPair.classical_ap(1.5), ExponentPair.classical_ap(3.0)):
        key = (preset.p1.value, preset.p2.value)
        if key not in seen:
            seen.add(key)
            pairs.append(preset)
    return tuple(pairs)


def finite_pair_grid() -> tuple:
    """The finite-nonzero subset of the pair grid (for the phi analysis)."""
    return tuple(p for p in exponent_pair_grid() if p.both_finite)


def random_lognormal_weight(rng: np.random.Generator, dims, sigma: float) -> GridWeight:
    """i.i.d. log-normal samples exp(sigma * Z) on the given grid."""
    dims = tuple(int(n) for n in dims)
    z = rng.standard_normal(math.prod(dims))
    return GridWeight(dims, np.exp(float(sigma) * z))


def random_cut_level(rng: np.random.Generator, w: GridWeight) -> float:
    """Uniform cut level between the 10th and 90th sample percentiles."""
    q10, q90 = np.quantile(w.flat, [0.1, 0.9])
    if q90 <= q10:
        return float(q10)
    return float(rng.uniform(q10, q90))


def _cut_suite(claim: str, seed: int, trials_1d: int, trials_2d: int,
               n_1d: int, dims_2d: tuple, below: bool) -> VerificationReport:
    rng = np.random.default_rng(seed)
    pairs = exponent_pair_grid()
    worst = -math.inf
    worst_info = None
    duality_worst = 0.0
    cube_evals = 0
    plan = [((int(n_1d),), trials_1d), (tuple(int(n) for n in dims_2d), trials_2d)]
    for dims, trials in plan:
        lo, hi = cube_arrays(dims, "exhaustive")
        for _ in range(trials):
            sigma = SIGMA_GRID[rng.integers(len(SIGMA_GRID))]
            w = random_lognormal_weight(rng, dims, sigma)
            pair = pairs[rng.integers(len(pairs))]
            a = random_cut_level(rng, w)
            base = _ratio_arrays(w, pair, lo, hi)
            cut_w = cutoff_below(w, a) if below else cutoff_above(w, a)
            cut = _ratio_arrays(cut_w, pair, lo, hi)
            viol = float(((cut - base) / np.maximum(1.0, base)).max())
            cube_evals += lo.shape[0]
            if viol > worst:
                worst = viol
                worst_info = {"dims": list(dims), "sigma": sigma,
                              "pair": pair.tokens(), "a": a}
            if below:
                dual_w, dual_pair = reciprocal_dual(w, pair)
                dual_cut = _ratio_arrays(cutoff_above(dual_w, 1.0 / a), dual_pair, lo, hi)
                direct = float(cut.max())
                dual = float(dual_cut.max())
                duality_worst = max(duality_worst,
                                    abs(direct - dual) / max(1.0, direct))
    passed = worst <= TOL_INEQUALITY and (not below or duality_worst <= TOL_IDENTITY)
    return VerificationReport(
        claim=claim,
        params={"trials_1d": trials_1d, "trials_2d": trials_2d,
                "n_1d": n_1d, "dims_2d": list(dims_2d),
                "sigmas": list(SIGMA_GRID), "policy": "exhaustive"},
        trials=trials_1d + trials_2d,
        max_violation=float(worst),
        residual_max=(duality_worst if below else None),
        passed=passed,
        seed=seed,
        details={"cube_evaluations": cube_evals, "worst_case": worst_info},
    )


def theorem1_suite(seed: int = 0, trials_1d: int = 1000, trials_2d: int = 100,
                   n_1d: int = 64, dims_2d=(8, 8)) -> VerificationReport:
    """Randomized per-cube check of the upper cut over the exponent grid."""
    return _cut_suite("theorem1", seed, trials_1d, trials_2d, n_1d, tuple(dims_2d), below=False)


def below_cut_suite(seed: int = 0, trials_1d: int = 1000, trials_2d: int = 100,
                    n_1d: int = 64, dims_2d=(8, 8)) -> VerificationReport:
    """Randomized per-cube check of the lower cut plus the duality route."""
    return _cut_suite("below-cut", seed, trials_1d, trials_2d, n_1d, tuple(dims_2d), below=True)


def _random_cube(rng: np.random.Generator, dims: tuple) -> GridCube:
    lo = []
    hi = []
    for n in dims:
        l = int(rng.integers(0, n))
        h = int(rng.integers(l + 1, n + 1))
        lo.append(l)
        hi.append(h)
    return GridCube(tuple(lo), tuple(hi))


def a2_identity_suite(seed: int = 0, trials: int = 10_000,
                      weight: GridWeight | None = None) -> VerificationReport:
    """Randomized sweep of the A2 decomposition identity and its sign claims.

    Cut levels deliberately include both degenerate splits (everything below
    the cut, everything above). Sign violations are normalised by the additive
    magnitude of the terms entering each expression.
    """
    rng = np.random.default_rng(seed)
    residual_max = 0.0
    tail_violation = -math.inf   # -(x2*y2 - 1), normalised
    cross_violation = -math.inf  # -cross_term, normalised
    edge_low = edge_high = 0
    for _ in range(trials):
        if weight is not None:
            w = weight
        else:
            sigma = SIGMA_GRID[rng.integers(len(SIGMA_GRID))]
            if rng.random() < 0.9:
                dims = (int(rng.integers(1, 33)),)
            else:
                dims = (int(rng.integers(1, 7)), int(rng.integers(1, 7)))
            w = random_lognormal_weight(rng, dims, sigma)
        cube = _random_cube(rng, w.dims)
        sub = w.samples[cube.slices()]
        draw = rng.random()
        if draw < 0.1:
            a = float(sub.max()) * 1.5
        elif draw < 0.2:
            a = float(sub.min()) * 0.5
        else:
            q10, q90 = np.quantile(sub.reshape(-1), [0.1, 0.9])
            a = float(rng.uniform(q10, q90)) if q90 > q10 else float(q10)
        dec = a2_decomposition_residual(w, a, cube)
        residual_max = max(residual_max, dec.residual)
        if dec.tail_term is None:
            edge_low += 1
        else:
            stats = partition_stats(w, ExponentPair.a2(), cube, a)
            scale2 = max(1.0, stats.x2 * stats.y2)
            tail_violation = max(tail_violation, -dec.tail_term / scale2)
            if dec.cross_term is None:
                edge_high += 1
            else:
                scale1 = max(1.0, stats.x1 * stats.y2 + stats.x2 * stats.y1)
                cross_violation = max(cross_violation, -dec.cross_term / scale1)
    sign_violation = max(
        (tail_violation if tail_violation > -math.inf else -1.0) - TOL_IDENTITY,
        (cross_violation if cross_violation > -math.inf else -1.0) - TOL_INEQUALITY,
    )
    passed = residual_max <= TOL_IDENTITY and sign_violation <= 0.0
    return VerificationReport(
        claim="a2-identity",
        params={"trials": trials,
                "weight": "provided" if weight is not None else "random"},
        trials=trials,
        max_violation=float(sign_violation),
        residual_max=float(residual_max),
        passed=passed,
        seed=seed,
        details={
            "min_tail_term_normalized": (-tail_violation if tail_violation > -math.inf else None),
            "min_cross_term_normalized": (-cross_violation if cross_violation > -math.inf else None),
            "edge_all_below_cut": edge_low,
            "edge_all_above_cut": edge_high,
        },
    )


def phi_suite(seed: int = 0, n_sets: int = 100, s_points: int = 20,
              u_points: int = 20) -> VerificationReport:
    """Grid validation of the phi calculus on random real partitions.

    Per parameter set: phi(1, a) = 0, dphi/ds >= 0 on the whole (s, u) grid,
    the bracket is nonnegative wherever u exceeds the cut level, and both
    closed-form partials agree with central finite differences. Derivative
    agreement is relative (1e-6) where the derivative is significant against
    the local magnitude of phi's terms, and scaled-absolute in the flat zone,
    where the finite difference itself carries roundoff of order eps/h.
    """
    rng = np.random.default_rng(seed)
    pairs = finite_pair_grid()
    sigmas = (0.5, 2.0)
    s_grid = np.linspace(1.0, 10.0, s_points)
    u_grid = np.linspace(0.5, 10.0, u_points)
    base_zero_max = 0.0
    ds_min = math.inf
    bracket_min = math.inf
    fd_violation = -math.inf
    fd_rel_max = 0.0
    points = 0
    for _ in range(n_sets):
        sigma = sigmas[rng.integers(len(sigmas))]
        w = random_lognormal_weight(rng, (int(rng.integers(4, 33)),), sigma)
        pair = pairs[rng.integers(len(pairs))]
        a = random_cut_level(rng, w)
        params = PhiParams.from_partition(w, pair, None, a)
        t0 = params.base_value()
        base_zero_max = max(base_zero_max, abs(phi_eval(params, 1.0, params.a)) / max(1.0, t0))
        stats = partition_stats(w, pair, None, a)
        for u in u_grid:
            if not stats.j1_empty and u > params.a:
                p1v, p2v = pair.p1.value, pair.p2.value
                term1 = (u ** p1v) * params.y1
                term2 = (u ** p2v) * params.x1
                scale = max(1.0, abs(term1), abs(term2))
                bracket_min = min(bracket_min, (term1 - term2) / scale)
            for s in s_grid:
                points += 1
                ds, du, _ = phi_partials(params, float(s), float(u))
                ds_min = min(ds_min, ds)
                scale = max(1.0, t0 + abs(phi_eval(params, float(s), float(u))))
                hs = _FD_STEP * max(1.0, abs(float(s)))
                hu = _FD_STEP * max(1.0, abs(float(u)))
                fd_ds = (phi_eval(params, s + hs, u) - phi_eval(params, s - hs, u)) / (2 * hs)
                fd_du = (phi_eval(params, s, u + hu) - phi_eval(params, s, u - hu)) / (2 * hu)
                for closed, fd in ((ds, fd_ds), (du, fd_du)):
                    mag = max(abs(closed), abs(fd))
                    if mag >= _FD_SMALL * scale:
                        rel = abs(closed - fd) / mag
                        fd_rel_max = max(fd_rel_max, rel)
                        fd_violation = max(fd_violation, rel - _FD_RTOL)
                    else:
                        fd_violation = max(fd_violation, abs(closed - fd) / scale - _FD_ATOL)
    max_violation = max(
        fd_violation,
        base_zero_max - TOL_IDENTITY,
        -ds_min - TOL_IDENTITY,
        (-bracket_min if bracket_min < math.inf else -1.0) - TOL_IDENTITY,
    )
    passed = max_violation <= 0.0
    return VerificationReport(
        claim="phi",
        params={"n_sets": n_sets, "s_points": s_points, "u_points": u_points,
                "fd_step": _FD_STEP},
        trials=points,
        max_violation=float(max_violation),
        residual_max=float(base_zero_max),
        passed=passed,
        seed=seed,
        details={
            "min_dphi_ds": float(ds_min),
            "min_bracket_normalized": (float(bracket_min) if bracket_min < math.inf else None),
            "max_fd_relative_mismatch": float(fd_rel_max),
        },
    )
