"""Enumeration policies, mean caches, and the supremum search."""

import numpy as np
import pytest

from apchar import (
    Exponent,
    ExponentPair,
    GridCube,
    GridWeight,
    InvalidParameter,
    MeanCache,
    PolicyError,
    a2_norm,
    ap_norm,
    ap_ratio,
    build_cache,
    cube_arrays,
    cube_ratios,
    default_policy,
    enumerate_cubes,
    power_mean,
    reciprocal,
)

A2 = ExponentPair.a2()


def lognormal(seed, dims, sigma):
    rng = np.random.default_rng(seed)
    return GridWeight(dims, np.exp(sigma * rng.standard_normal(int(np.prod(dims)))))


# ----------------------------- enumeration -----------------------------

def test_exhaustive_1d_count_and_order():
    cubes = list(enumerate_cubes((4,), "exhaustive"))
    assert len(cubes) == 10  # n(n+1)/2
    expected = [(l, h) for l in range(4) for h in range(l + 1, 5)]
    assert [(c.lo[0], c.hi[0]) for c in cubes] == expected


def test_dyadic_1d_count_and_order():
    cubes = [(c.lo[0], c.hi[0]) for c in enumerate_cubes((4,), "dyadic")]
    assert len(cubes) == 7  # 2n - 1
    assert cubes == [(0, 1), (0, 2), (0, 4), (1, 2), (2, 3), (2, 4), (3, 4)]


def test_exhaustive_2d_count():
    cubes = list(enumerate_cubes((2, 2), "exhaustive"))
    assert len(cubes) == 9  # (n(n+1)/2)^2
    keys = [(c.lo, c.hi) for c in cubes]
    assert keys == sorted(keys)  # lo lexicographic, then hi


def test_anchored():
    cubes = list(enumerate_cubes((2, 3), "anchored"))
    assert len(cubes) == 6
    assert all(c.lo == (0, 0) for c in cubes)
    his = [c.hi for c in cubes]
    assert his == sorted(his)


def test_policy_errors():
    with pytest.raises(PolicyError):
        cube_arrays((3,), "dyadic")  # not a power of two
    with pytest.raises(PolicyError):
        cube_arrays((2, 2, 2), "exhaustive")  # d > 2
    with pytest.raises(PolicyError):
        cube_arrays((4,), "sideways")
    assert default_policy((8, 8)) == "exhaustive"
    assert default_policy((4, 4, 4)) == "dyadic"


def test_dyadic_3d_runs():
    lo, hi = cube_arrays((2, 2, 2), "dyadic")
    assert lo.shape == (9, 3)  # level 0 plus 8 cells


def test_dyadic_2d_count():
    lo, hi = cube_arrays((2, 2), "dyadic")
    assert lo.shape == (5, 2)  # whole square plus 4 quadrants


def test_accurate_path_is_independent_of_slab_size(monkeypatch):
    import apchar.characteristic as ch

    w = lognormal(91, (32,), 2.0)
    cache = MeanCache(w, A2, "accurate")
    lo, hi = cube_arrays((32,), "exhaustive")
    full = cube_ratios(cache, lo, hi)
    monkeypatch.setattr(ch, "_SLAB_BUDGET", 64)
    sliced = cube_ratios(MeanCache(w, A2, "accurate"), lo, hi)
    assert np.array_equal(full, sliced)


# ----------------------------- mean cache -----------------------------

def test_cache_reproduces_example_moments():
    w = GridWeight((2,), [4.0, 1.0])
    cache = build_cache(w, A2, "fast")
    whole = w.whole_cube()
    assert cache.moment(1.0, whole) == pytest.approx(2.5, rel=1e-12)
    assert cache.moment(-1.0, whole) == pytest.approx(0.625, rel=1e-12)
    assert cache.power_mean(1.0, whole) == pytest.approx(2.5, rel=1e-12)


def test_cache_constant_weight_ratio_is_exactly_one():
    w = GridWeight.constant((8,), 3.7)
    for mode in ("fast", "accurate"):
        cache = build_cache(w, A2, mode)
        lo, hi = cube_arrays((8,), "exhaustive")
        assert np.all(cube_ratios(cache, lo, hi) == 1.0)
        assert cache.power_mean(1.0, w.whole_cube()) == 3.7


def test_cache_sup_inf_pair():
    w = GridWeight((2,), [4.0, 1.0])
    cache = build_cache(w, ExponentPair("inf", "-inf"), "fast")
    lo, hi = cube_arrays((2,), "exhaustive")
    ratios = cube_ratios(cache, lo, hi)
    assert list(ratios) == [1.0, 4.0, 1.0]
    assert cache.power_mean(Exponent.pos_inf(), w.whole_cube()) == 4.0
    assert cache.power_mean(Exponent.neg_inf(), w.whole_cube()) == 1.0


@pytest.mark.parametrize("dims", [(64,), (8, 8)])
def test_cache_agrees_with_direct_power_mean(dims):
    """1000 random (weight, exponent, cube) queries per mode tolerance."""
    rng = np.random.default_rng(2024)
    exponents = [Exponent(-3.0), Exponent(-1.0), Exponent(-0.5), Exponent.zero(),
                 Exponent(0.5), Exponent(2.0), Exponent.pos_inf(), Exponent.neg_inf()]
    pair_of = {
        -3.0: ExponentPair(1.0, -3.0), -1.0: A2, -0.5: ExponentPair(1.0, -0.5),
        0.0: ExponentPair(1.0, 0.0), 0.5: ExponentPair(1.0, 0.5),
        2.0: ExponentPair(2.0, -1.0), np.inf: ExponentPair("inf", "-1"),
        -np.inf: ExponentPair(1.0, "-inf"),
    }
    for _ in range(25):
        # sigma = 0.5 keeps the documented fast-mode cancellation caveat inert
        w = lognormal(rng.integers(1 << 30), dims, 0.5)
        caches = {m: {} for m in ("fast", "accurate")}
        for _ in range(5):
            lo = tuple(int(rng.integers(0, n)) for n in dims)
            hi = tuple(int(rng.integers(l + 1, n + 1)) for l, n in zip(lo, dims))
            cube = GridCube(lo, hi)
            for p in exponents:
                direct = power_mean(w, p, cube, mode="accurate")
                for mode, tol in (("fast", 1e-9), ("accurate", 1e-12)):
                    key = p.value
                    if key not in caches[mode]:
                        caches[mode][key] = MeanCache(w, pair_of[key], mode)
                    got = caches[mode][key].power_mean(p, cube)
                    assert got == pytest.approx(direct, rel=tol)


def test_cache_rejects_foreign_queries():
    w = GridWeight((4,), [1.0, 2.0, 3.0, 4.0])
    cache = build_cache(w, A2, "fast")
    with pytest.raises(InvalidParameter):
        cache.power_mean(2.0, w.whole_cube())
    with pytest.raises(InvalidParameter):
        cache.moment(Exponent.zero(), w.whole_cube())


# ----------------------------- supremum search -----------------------------

def test_ap_norm_two_cell_example():
    w = GridWeight((2,), [4.0, 1.0])
    res = ap_norm(w, A2, "exhaustive", "accurate")
    assert res.value == pytest.approx(1.5625, rel=1e-12)
    assert res.argmax == GridCube((0,), (2,))
    assert res.cubes_examined == 3
    assert res.to_dict()["pair"] == {"p1": "1", "p2": "-1"}


def test_ap_norm_constant():
    w = GridWeight.constant((5,), 2.0)
    for mode in ("fast", "accurate"):
        res = ap_norm(w, A2, "exhaustive", mode)
        assert res.value == 1.0
        assert res.argmax == GridCube((0,), (1,))  # first enumerated cube


def test_ap_norm_sup_inf_pair():
    res = ap_norm(GridWeight((2,), [4.0, 1.0]), ExponentPair("inf", "-inf"),
                  "exhaustive", "fast")
    assert res.value == 4.0


def test_ap_norm_argmax_tie_breaks_to_first():
    # cubes (0,2) and (1,3) carry the same value multiset {4,1}
    w = GridWeight((3,), [4.0, 1.0, 4.0])
    res = ap_norm(w, A2, "exhaustive", "accurate")
    assert res.argmax == GridCube((0,), (2,))
    assert res.value == pytest.approx(1.5625, rel=1e-12)


def test_search_dominates_every_enumerated_cube_exactly():
    for mode in ("fast", "accurate"):
        w = lognormal(77, (32,), 2.0)
        cache = MeanCache(w, A2, mode)
        res = ap_norm(w, A2, "exhaustive", mode, cache=cache)
        lo, hi = cube_arrays((32,), "exhaustive")
        ratios = cube_ratios(cache, lo, hi)
        rng = np.random.default_rng(3)
        for idx in rng.integers(0, lo.shape[0], size=100):
            assert res.value >= ratios[int(idx)]


def test_dyadic_never_exceeds_exhaustive():
    for seed in range(5):
        w = lognormal(seed, (16,), 2.0)
        full = ap_norm(w, A2, "exhaustive", "accurate").value
        dyadic = ap_norm(w, A2, "dyadic", "accurate").value
        assert dyadic <= full


def test_thread_determinism():
    pair = ExponentPair(2.0, -0.5)
    for mode in ("fast", "accurate"):
        w = lognormal(13, (64,), 2.0)
        results = [ap_norm(w, pair, "exhaustive", mode, threads=t) for t in (1, 2, 4, 8)]
        for r in results[1:]:
            assert r.value == results[0].value
            assert r.argmax == results[0].argmax


def test_fast_1d_shortcut_matches_generic_path():
    w = lognormal(29, (128,), 0.5)
    direct = ap_norm(w, A2, "exhaustive", "fast")            # block-sliced path
    chunked = ap_norm(w, A2, "exhaustive", "fast", threads=3)  # generic gather path
    assert direct.value == chunked.value
    assert direct.argmax == chunked.argmax
    assert direct.cubes_examined == chunked.cubes_examined == 128 * 129 // 2


def test_a2_norm_wraps_ap_norm_bit_for_bit():
    w = lognormal(41, (32,), 2.0)
    via_a2 = a2_norm(w, "exhaustive", "accurate")
    via_ap = ap_norm(w, A2, "exhaustive", "accurate")
    assert via_a2.value == via_ap.value
    assert via_a2.argmax == via_ap.argmax


def test_a2_self_duality():
    w = lognormal(53, (32,), 2.0)
    direct = a2_norm(w, "exhaustive", "accurate").value
    flipped = a2_norm(reciprocal(w), "exhaustive", "accurate").value
    assert flipped == pytest.approx(direct, rel=1e-12)


def test_ap_norm_value_matches_argmax_ratio():
    w = lognormal(61, (32,), 2.0)
    res = ap_norm(w, A2, "exhaustive", "accurate")
    assert res.value == pytest.approx(ap_ratio(w, A2, res.argmax), rel=1e-12)


def test_cache_reuse_guards():
    w = lognormal(71, (16,), 0.5)
    other = lognormal(72, (16,), 0.5)
    cache = build_cache(w, A2, "fast")
    with pytest.raises(InvalidParameter):
        ap_norm(other, A2, "exhaustive", "fast", cache=cache)
    with pytest.raises(InvalidParameter):
        ap_norm(w, A2, "exhaustive", "accurate", cache=cache)
    with pytest.raises(InvalidParameter):
        ap_norm(w, ExponentPair(2.0, -1.0), "exhaustive", "fast", cache=cache)
    res = ap_norm(w, A2, "exhaustive", "fast", cache=cache)
    assert res.value >= 1.0 - 1e-9
