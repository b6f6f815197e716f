"""Claim checks: cut monotonicity, the A2 decomposition, and the phi calculus."""

import math

import numpy as np
import pytest

from apchar import (
    ExponentPair,
    GridCube,
    GridWeight,
    InvalidExponent,
    InvalidParameter,
    PhiParams,
    a2_decomposition_residual,
    a2_identity_suite,
    ap_ratio,
    below_cut_suite,
    bm_profile,
    bm_report,
    check_below_cut,
    check_cutoff_monotonicity,
    convergence_profile,
    convergence_report,
    cutoff_above,
    exponent_pair_grid,
    partition_stats,
    phi_eval,
    phi_from_cutoff,
    phi_partials,
    phi_suite,
    random_lognormal_weight,
    theorem1_suite,
)

A2 = ExponentPair.a2()


def w41():
    return GridWeight((2,), [4.0, 1.0])


# ----------------------------- cut monotonicity -----------------------------

def test_cutoff_check_two_cell_example():
    rep = check_cutoff_monotonicity(w41(), A2, 2.0)
    assert rep.passed
    assert rep.claim == "theorem1"
    assert rep.max_violation <= 0.0
    assert rep.details["norm"] == pytest.approx(1.5625, rel=1e-12)
    assert rep.details["norm_cutoff"] == pytest.approx(1.125, rel=1e-12)
    # whole-cube drop is 1.125 - 1.5625 = -0.4375
    gap = rep.details["norm_cutoff"] - rep.details["norm"]
    assert gap == pytest.approx(-0.4375, rel=1e-12)


def test_cutoff_check_constant_weight():
    rep = check_cutoff_monotonicity(GridWeight.constant((6,), 2.0), A2, 1.0)
    assert rep.passed
    assert rep.max_violation == 0.0


def test_below_cut_check_example():
    rep = check_below_cut(w41(), A2, 2.0)
    assert rep.passed
    assert rep.claim == "below-cut"
    assert rep.details["norm_cutoff"] == pytest.approx(1.125, rel=1e-12)
    assert rep.residual_max <= 1e-12  # duality route agreement


def test_below_cut_noop_when_below_min():
    w = w41()
    rep = check_below_cut(w, A2, 0.5)
    assert rep.passed
    assert rep.details["norm_cutoff"] == rep.details["norm"]


def test_cut_checks_with_limit_exponents():
    w = random_lognormal_weight(np.random.default_rng(4), (32,), 2.0)
    for pair in (ExponentPair("inf", "-inf"), ExponentPair("0", "-1"),
                 ExponentPair("inf", "0"), ExponentPair("2", "-inf")):
        assert check_cutoff_monotonicity(w, pair, 1.5).passed
        assert check_below_cut(w, pair, 0.7).passed


def test_cut_suites_small():
    rep = theorem1_suite(seed=101, trials_1d=40, trials_2d=5)
    assert rep.passed and rep.max_violation <= 1e-9
    assert rep.details["cube_evaluations"] >= 40 * 2080
    rep = below_cut_suite(seed=102, trials_1d=40, trials_2d=5)
    assert rep.passed and rep.residual_max <= 1e-12


def test_pair_grid_covers_every_kind():
    pairs = exponent_pair_grid()
    kinds = {(p.p1.value, p.p2.value) for p in pairs}
    assert (1.0, -1.0) in kinds          # A2 preset
    assert (1.0, -2.0) in kinds          # classical A_p at p = 1.5
    assert (math.inf, -math.inf) in kinds
    assert any(p.p1.is_zero or p.p2.is_zero for p in pairs)
    assert all(p.p1 > p.p2 for p in pairs)


# ----------------------------- A2 decomposition -----------------------------

def test_a2_decomposition_example():
    dec = a2_decomposition_residual(w41(), 2.0)
    assert dec.lhs == pytest.approx(0.4375, rel=1e-12)
    assert dec.rhs == pytest.approx(0.4375, rel=1e-12)
    assert dec.residual <= 1e-15
    assert dec.cross_term == pytest.approx(1.75, rel=1e-12)
    assert dec.tail_term == pytest.approx(0.0, abs=1e-15)


def test_a2_decomposition_degenerate_sides():
    w = w41()
    above = a2_decomposition_residual(w, 5.0)  # cut above the range: no change
    assert above.lhs == 0.0 and above.rhs == 0.0 and above.residual == 0.0
    assert above.cross_term is None and above.tail_term is None
    below = a2_decomposition_residual(w, 0.5)  # whole cube above the cut
    assert below.cross_term is None and below.tail_term is not None
    assert below.residual <= 1e-12


def test_a2_decomposition_random_sweep():
    rng = np.random.default_rng(8)
    for _ in range(300):
        n = int(rng.integers(1, 33))
        w = random_lognormal_weight(rng, (n,), float(rng.choice([0.5, 2.0, 5.0])))
        lo = int(rng.integers(0, n))
        hi = int(rng.integers(lo + 1, n + 1))
        cube = GridCube((lo,), (hi,))
        sub = w.samples[lo:hi]
        a = float(rng.uniform(sub.min() * 0.5, sub.max() * 1.5))
        dec = a2_decomposition_residual(w, a, cube)
        assert dec.residual <= 1e-12
        if dec.tail_term is not None:
            stats = partition_stats(w, A2, cube, a)
            assert dec.tail_term >= -1e-12 * max(1.0, stats.x2 * stats.y2)
            if dec.cross_term is not None:
                scale = max(1.0, stats.x1 * stats.y2 + stats.x2 * stats.y1)
                assert dec.cross_term >= -1e-9 * scale


def test_a2_identity_suite_small():
    rep = a2_identity_suite(seed=9, trials=800)
    assert rep.passed
    assert rep.residual_max <= 1e-12
    assert rep.details["edge_all_below_cut"] > 0
    assert rep.details["edge_all_above_cut"] > 0


# ----------------------------- phi calculus -----------------------------

def params_41():
    return PhiParams(x1=1.0, y1=1.0, alpha1=0.5, alpha2=0.5, a=2.0, pair=A2)


def test_phi_vanishes_at_the_cut_point():
    assert phi_eval(params_41(), 1.0, 2.0) == 0.0
    rng = np.random.default_rng(15)
    for _ in range(25):
        w = random_lognormal_weight(rng, (16,), 2.0)
        a = float(np.quantile(w.flat, 0.5))
        params = PhiParams.from_partition(w, ExponentPair(2.0, -0.5), None, a)
        assert phi_eval(params, 1.0, params.a) == 0.0


def test_phi_two_cell_value_matches_ratio_gap():
    w = w41()
    params, s, u = phi_from_cutoff(w, A2, None, 2.0)
    assert (s, u) == (1.0, 4.0)
    assert phi_eval(params, s, u) == pytest.approx(0.4375, rel=1e-12)
    gap = ap_ratio(w, A2) - ap_ratio(cutoff_above(w, 2.0), A2)
    assert phi_eval(params, s, u) == pytest.approx(gap, rel=1e-12)


def test_phi_ratio_gap_identity_random():
    rng = np.random.default_rng(16)
    for _ in range(30):
        n = int(rng.integers(2, 33))
        w = random_lognormal_weight(rng, (n,), 2.0)
        pair = ExponentPair(2.0, -1.5)
        a = float(np.quantile(w.flat, rng.uniform(0.2, 0.8)))
        params, s, u = phi_from_cutoff(w, pair, None, a)
        gap = ap_ratio(w, pair) - ap_ratio(cutoff_above(w, a), pair)
        assert phi_eval(params, s, u) == pytest.approx(gap, rel=1e-11, abs=1e-13)


def test_phi_absent_high_part():
    params = PhiParams(x1=2.0, y1=1.0, alpha1=1.0, alpha2=0.0, a=3.0, pair=A2)
    for s, u in ((1.0, 3.0), (2.0, 0.5), (5.0, 7.0)):
        assert phi_eval(params, s, u) == 0.0
    ds, du, _ = phi_partials(params, 2.0, 0.5)
    assert ds == 0.0 and du == 0.0


def test_phi_partials_example_bracket():
    ds, du, bracket = phi_partials(params_41(), 1.0, 4.0)
    assert bracket == 3.75  # 4*1 - (1/4)*1
    assert ds >= 0.0 and du >= 0.0


def test_phi_partials_match_finite_differences():
    rng = np.random.default_rng(17)
    h = 1e-6
    for _ in range(20):
        w = random_lognormal_weight(rng, (16,), 0.5)
        pair = ExponentPair(2.0, -0.5)
        a = float(np.quantile(w.flat, 0.6))
        params = PhiParams.from_partition(w, pair, None, a)
        s = float(rng.uniform(1.0, 5.0))
        u = float(rng.uniform(0.5, 5.0))
        ds, du, _ = phi_partials(params, s, u)
        hs = h * max(1.0, s)
        hu = h * max(1.0, u)
        fd_s = (phi_eval(params, s + hs, u) - phi_eval(params, s - hs, u)) / (2 * hs)
        fd_u = (phi_eval(params, s, u + hu) - phi_eval(params, s, u - hu)) / (2 * hu)
        assert ds == pytest.approx(fd_s, rel=1e-6, abs=1e-9)
        assert du == pytest.approx(fd_u, rel=1e-6, abs=1e-9)


def test_phi_s_partial_never_negative():
    rng = np.random.default_rng(18)
    for _ in range(10):
        w = random_lognormal_weight(rng, (16,), 2.0)
        params = PhiParams.from_partition(w, ExponentPair(1.0, -2.0), None,
                                          float(np.quantile(w.flat, 0.5)))
        for s in np.linspace(1.0, 10.0, 7):
            for u in np.linspace(0.5, 10.0, 7):
                ds, _, _ = phi_partials(params, float(s), float(u))
                assert ds >= 0.0


def test_phi_domain_and_validation():
    with pytest.raises(InvalidParameter):
        phi_eval(params_41(), 0.0, 1.0)
    with pytest.raises(InvalidParameter):
        phi_eval(params_41(), 1.0, -2.0)
    with pytest.raises(InvalidExponent):
        PhiParams(x1=1.0, y1=1.0, alpha1=0.5, alpha2=0.5, a=1.0,
                  pair=ExponentPair("inf", "-1"))
    with pytest.raises(InvalidParameter):
        PhiParams(x1=1.0, y1=1.0, alpha1=0.7, alpha2=0.5, a=1.0, pair=A2)
    with pytest.raises(InvalidParameter):
        PhiParams(x1=-1.0, y1=1.0, alpha1=0.5, alpha2=0.5, a=1.0, pair=A2)


def test_phi_suite_small():
    rep = phi_suite(seed=19, n_sets=10)
    assert rep.passed
    assert rep.details["min_dphi_ds"] >= 0.0
    assert rep.details["max_fd_relative_mismatch"] <= 1e-6


def test_bracket_equals_low_part_mean_identity():
    """u^p1*y1 - u^p2*x1 equals the mean of u^p1*w^p2 - u^p2*w^p1 over the low part."""
    rng = np.random.default_rng(20)
    for _ in range(50):
        n = int(rng.integers(1, 40))
        low = np.exp(2.0 * rng.standard_normal(n))
        p1, p2 = 2.0, -1.5
        u = float(rng.uniform(0.1, 10.0))
        x1 = float(np.power(low, p1).mean())
        y1 = float(np.power(low, p2).mean())
        lhs = u ** p1 * y1 - u ** p2 * x1
        rhs = float((u ** p1 * np.power(low, p2) - u ** p2 * np.power(low, p1)).mean())
        scale = max(1.0, abs(u ** p1 * y1), abs(u ** p2 * x1))
        assert abs(lhs - rhs) <= 1e-12 * scale


# ----------------------------- truncation convergence -----------------------------

def test_convergence_profile_two_cell():
    profile = convergence_profile(w41(), A2)
    assert [n for n, _ in profile] == [1, 2, 4]
    values = [v for _, v in profile]
    assert values[0] == 1.0
    assert values[1] == pytest.approx(1.125, rel=1e-12)
    assert values[2] == pytest.approx(1.5625, rel=1e-12)


def test_convergence_report_two_cell():
    rep = convergence_report(w41(), A2)
    assert rep.passed
    assert rep.details["equality_threshold"] == 4
    # bit-level equality once the clamp clears the range
    assert rep.details["profile"][-1][1] == rep.details["norm"]


def test_convergence_constant_weight():
    rep = convergence_report(GridWeight.constant((4,), 1.0), A2)
    assert rep.passed
    assert all(v == 1.0 for _, v in rep.details["profile"])


def test_convergence_random_weights():
    rng = np.random.default_rng(23)
    for _ in range(10):
        w = random_lognormal_weight(rng, (32,), 2.0)
        rep = convergence_report(w, ExponentPair(1.0, -0.5))
        assert rep.passed
        assert rep.max_violation <= 1e-9
        assert rep.details["exact_past_threshold"]


# ----------------------------- regularisation profile -----------------------------

def test_bm_profile_two_cell():
    profile = bm_profile(w41(), A2, s_list=[1.0])
    assert profile[0][1] == pytest.approx(1.0125, rel=1e-12)
    tail = bm_profile(w41(), A2, s_list=[1e-7])[0][1]
    assert tail == pytest.approx(1.5625, rel=1e-4)


def test_bm_report_never_fails_and_flags():
    rep = bm_report(w41(), A2)
    assert rep.passed
    assert rep.claim == "bm"
    assert "flagged_s" in rep.details
    rep = bm_report(GridWeight.constant((3,), 5.0), A2)
    assert all(v == 1.0 for _, v in rep.details["profile"])


# ----------------------------- report plumbing -----------------------------

def test_report_serialisation_schema():
    rep = check_cutoff_monotonicity(w41(), A2, 2.0)
    data = rep.to_dict()
    assert set(data) == {"claim", "params", "trials", "max_violation",
                         "residual_max", "pass", "seed", "details"}
    assert data["pass"] is True
    rep = theorem1_suite(seed=1, trials_1d=2, trials_2d=1)
    assert rep.to_dict()["seed"] == 1
