"""Cube enumeration, O(1) mean caches, and the characteristic supremum search.

The characteristic [w]_{p1,p2} is the supremum of the per-cube ratio over an
enumerated family of grid boxes. Enumeration order is deterministic
(increasing lo lexicographically, then increasing hi), argmax ties resolve to
the first cube in that order, and chunked/threaded evaluation reproduces the
single-threaded result bit for bit.

Fast mode answers any box query in O(1) from d-dimensional prefix sums of
globally shifted exponentials (plus doubling tables for the +/-inf cases).
The prefix-difference form can lose the contribution of cells far below the
global maximum, so fast mode is the performance path; accurate mode
re-aggregates each box with its own shift and is the path the verification
harness uses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import Iterator

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import InvalidParameter, PolicyError
from .weights import Exponent, ExponentPair, GridCube, GridWeight, _check_mode

__all__ = [
    "POLICIES",
    "default_policy",
    "cube_arrays",
    "enumerate_cubes",
    "MeanCache",
    "build_cache",
    "cube_ratios",
    "CharacteristicResult",
    "ap_norm",
    "a2_norm",
]

POLICIES = ("exhaustive", "dyadic", "anchored")

_TINY = np.finfo(np.float64).tiny
_SLAB_BUDGET = 1 << 25  # max elements materialised per window slab


def default_policy(dims) -> str:
    """Exhaustive search for d <= 2, dyadic above (cost blows up otherwise)."""
    return "exhaustive" if len(tuple(dims)) <= 2 else "dyadic"


def _exhaustive_arrays(dims: tuple) -> tuple:
    d = len(dims)
    if d == 1:
        n = dims[0]
        lo = np.repeat(np.arange(n, dtype=np.int32), np.arange(n, 0, -1, dtype=np.int64))
        hi = np.concatenate([np.arange(l + 1, n + 1, dtype=np.int32) for l in range(n)])
        return lo[:, None], hi[:, None]
    if d == 2:
        n1, n2 = dims
        los, his = [], []
        for l1 in range(n1):
            h1 = np.arange(l1 + 1, n1 + 1, dtype=np.int32)
            for l2 in range(n2):
                h2 = np.arange(l2 + 1, n2 + 1, dtype=np.int32)
                m = h1.size * h2.size
                lo = np.empty((m, 2), dtype=np.int32)
                lo[:, 0] = l1
                lo[:, 1] = l2
                hi = np.empty((m, 2), dtype=np.int32)
                hi[:, 0] = np.repeat(h1, h2.size)
                hi[:, 1] = np.tile(h2, h1.size)
                los.append(lo)
                his.append(hi)
        return np.concatenate(los), np.concatenate(his)
    raise PolicyError(f"exhaustive enumeration is limited to d <= 2, got d = {d}")


def _anchored_arrays(dims: tuple) -> tuple:
    grids = np.meshgrid(*[np.arange(1, n + 1, dtype=np.int32) for n in dims], indexing="ij")
    hi = np.stack([g.reshape(-1) for g in grids], axis=1)
    lo = np.zeros_like(hi)
    return lo, hi


def _dyadic_arrays(dims: tuple) -> tuple:
    for n in dims:
        if n & (n - 1) != 0:
            raise PolicyError(f"dyadic enumeration requires power-of-two dims, got {dims}")
    max_level = min(n.bit_length() - 1 for n in dims)
    los, his = [], []
    for level in range(max_level + 1):
        steps = [n >> level for n in dims]
        starts = np.meshgrid(
            *[np.arange(0, n, step, dtype=np.int32) for n, step in zip(dims, steps)],
            indexing="ij",
        )
        lo = np.stack([g.reshape(-1) for g in starts], axis=1)
        hi = lo + np.asarray(steps, dtype=np.int32)
        los.append(lo)
        his.append(hi)
    lo = np.concatenate(los)
    hi = np.concatenate(his)
    d = lo.shape[1]
    keys = tuple(hi[:, b] for b in reversed(range(d))) + tuple(lo[:, b] for b in reversed(range(d)))
    order = np.lexsort(keys)
    return lo[order], hi[order]


class _Enumeration:
    __slots__ = ("lo", "hi", "count", "_groups")

    def __init__(self, lo: np.ndarray, hi: np.ndarray) -> None:
        lo.setflags(write=False)
        hi.setflags(write=False)
        self.lo = lo
        self.hi = hi
        self.count = lo.shape[0]
        self._groups = None

    def groups(self):
        if self._groups is None:
            self._groups = _group_by_shape(self.lo, self.hi)
        return self._groups


@lru_cache(maxsize=8)
def _enumeration(dims: tuple, policy: str) -> _Enumeration:
    if policy not in POLICIES:
        raise PolicyError(f"unknown policy {policy!r}; expected one of {POLICIES}")
    if policy == "exhaustive":
        lo, hi = _exhaustive_arrays(dims)
    elif policy == "anchored":
        lo, hi = _anchored_arrays(dims)
    else:
        lo, hi = _dyadic_arrays(dims)
    return _Enumeration(lo, hi)


def cube_arrays(dims, policy: str) -> tuple:
    """(lo, hi) index arrays of shape (m, d) in deterministic enumeration order."""
    enum = _enumeration(tuple(int(n) for n in dims), policy)
    return enum.lo, enum.hi


def enumerate_cubes(dims, policy: str) -> Iterator[GridCube]:
    """Yield GridCubes in enumeration order (lo lexicographic, then hi)."""
    lo, hi = cube_arrays(dims, policy)
    for i in range(lo.shape[0]):
        yield GridCube(tuple(int(v) for v in lo[i]), tuple(int(v) for v in hi[i]))


def _group_by_shape(lo: np.ndarray, hi: np.ndarray):
    """Indices of cubes grouped by box shape, for window-batched evaluation."""
    shapes = hi - lo
    uniq, inverse = np.unique(shapes, axis=0, return_inverse=True)
    order = np.argsort(inverse, kind="stable")
    sorted_inv = inverse[order]
    bounds = np.searchsorted(sorted_inv, np.arange(uniq.shape[0] + 1))
    return [
        (tuple(int(v) for v in uniq[g]), order[bounds[g]:bounds[g + 1]])
        for g in range(uniq.shape[0])
    ]


def _prefix_table(arr: np.ndarray) -> np.ndarray:
    d = arr.ndim
    out = np.zeros(tuple(n + 1 for n in arr.shape))
    out[(slice(1, None),) * d] = arr
    for axis in range(d):
        np.cumsum(out, axis=axis, out=out)
    return out


def _box_sums(prefix: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Inclusion-exclusion box sums over a d-dimensional prefix table."""
    m, d = lo.shape
    total = np.zeros(m)
    for mask in range(1 << d):
        idx = []
        ones = 0
        for b in range(d):
            if (mask >> b) & 1:
                idx.append(hi[:, b])
                ones += 1
            else:
                idx.append(lo[:, b])
        term = prefix[tuple(idx)]
        if (d - ones) % 2 == 0:
            total += term
        else:
            total -= term
    return total


def _build_doubling_table(arr: np.ndarray, op) -> np.ndarray:
    """Doubling (sparse) table for O(1) range max/min in d dimensions.

    Entry [k1..kd, i1..id] aggregates the box prod_a [i_a, i_a + 2^{k_a}).
    Entries whose box would overflow the grid are never queried and stay stale.
    """
    dims = arr.shape
    d = arr.ndim
    levels = tuple(n.bit_length() for n in dims)
    table = np.empty(levels + dims)
    table[(0,) * d] = arr
    for k in product(*map(range, levels)):
        if all(v == 0 for v in k):
            continue
        axis = next(b for b in range(d) if k[b] > 0)
        prev = tuple(v - 1 if b == axis else v for b, v in enumerate(k))
        half = 1 << (k[axis] - 1)
        extent = tuple(dims[b] - (1 << k[b]) + 1 for b in range(d))
        left = tuple(slice(0, extent[b]) for b in range(d))
        right = tuple(
            slice(half, half + extent[b]) if b == axis else slice(0, extent[b])
            for b in range(d)
        )
        table[k][left] = op(table[prev][left], table[prev][right])
    return table


def _doubling_query(table: np.ndarray, lo: np.ndarray, hi: np.ndarray, op) -> np.ndarray:
    d = lo.shape[1]
    lens = (hi - lo).astype(np.float64)
    ks = [np.frexp(lens[:, b])[1].astype(np.intp) - 1 for b in range(d)]
    offs = [np.left_shift(1, ks[b]) for b in range(d)]
    result = None
    for corner in product((0, 1), repeat=d):
        pos = [
            hi[:, b] - offs[b] if corner[b] else lo[:, b].astype(np.intp)
            for b in range(d)
        ]
        vals = table[tuple(ks) + tuple(pos)]
        result = vals if result is None else op(result, vals)
    return result


class _FiniteSlot:
    __slots__ = ("p", "lp", "shift", "prefix")

    def __init__(self, p: float, logs: np.ndarray, fast: bool) -> None:
        self.p = p
        self.lp = p * logs
        self.shift = float(self.lp.max())
        self.prefix = _prefix_table(np.exp(self.lp - self.shift)) if fast else None


class _ZeroSlot:
    __slots__ = ("prefix",)

    def __init__(self, logs: np.ndarray, fast: bool) -> None:
        self.prefix = _prefix_table(logs) if fast else None


class _InfSlot:
    __slots__ = ("table", "op")

    def __init__(self, samples: np.ndarray, positive: bool) -> None:
        self.op = np.maximum if positive else np.minimum
        self.table = _build_doubling_table(samples, self.op)


class MeanCache:
    """Precomputed tables answering per-cube power-mean queries for one weight.

    All tables are read-only after construction and safe to share across
    threads. Fast mode queries cost O(1) per box; accurate mode re-aggregates
    each box with its own log-sum-exp shift (window-batched).
    """

    def __init__(self, weight: GridWeight, pair: ExponentPair, mode: str = "accurate") -> None:
        if not isinstance(pair, ExponentPair):
            pair = ExponentPair(*pair)
        self.mode = _check_mode(mode)
        self.pair = pair
        self.weight = weight
        self.dims = weight.dims
        self.fingerprint = weight.fingerprint
        self.global_const = weight.max_value == weight.min_value
        self._logs = np.log(weight.samples)
        self._logs_flat = self._logs.reshape(-1)
        self._samples_flat = weight.flat
        fast = self.mode == "fast"
        self._slots = {}
        for p in (pair.p1, pair.p2):
            if p.value in self._slots:
                continue
            if p.is_infinite:
                slot = _InfSlot(weight.samples, p.value > 0)
            elif p.is_zero:
                slot = _ZeroSlot(self._logs, fast)
            else:
                slot = _FiniteSlot(p.value, self._logs, fast)
            self._slots[p.value] = slot

    def _slot(self, p: Exponent):
        try:
            return self._slots[p.value]
        except KeyError:
            raise InvalidParameter(
                f"cache was built for pair {self.pair}, not exponent {p}"
            ) from None

    def _flat_starts(self, lo: np.ndarray) -> np.ndarray:
        if len(self.dims) == 1:
            return lo[:, 0].astype(np.intp)
        return np.ravel_multi_index(tuple(lo[:, b] for b in range(len(self.dims))), self.dims)

    def _window_logmeans(self, arr: np.ndarray, lo: np.ndarray, hi: np.ndarray,
                         p: float | None, groups=None):
        """Per-box shifted LSE (finite p) or plain mean (p None) of ``arr``.

        Returns (logmean, const_mask, flat_starts); constant boxes are
        overridden with the shared log-sample so that both exponent slots
        produce bitwise-identical values there.
        """
        m = lo.shape[0]
        out = np.empty(m)
        const = np.zeros(m, dtype=bool)
        starts = self._flat_starts(lo)
        if groups is None:
            groups = _group_by_shape(lo, hi)
        d = lo.shape[1]
        for shape, idx in groups:
            cells = math.prod(shape)
            win = sliding_window_view(arr, shape)
            step = max(1, _SLAB_BUDGET // max(cells, 1))
            for pos in range(0, idx.size, step):
                sel = idx[pos:pos + step]
                corner = tuple(lo[sel, b] for b in range(d))
                wnd = win[corner].reshape(sel.size, cells)
                mx = wnd.max(axis=1)
                mn = wnd.min(axis=1)
                cmask = mx == mn
                if p is None:
                    vals = wnd.sum(axis=1) / cells
                else:
                    sums = np.exp(wnd - mx[:, None]).sum(axis=1)
                    vals = (mx + np.log(sums / cells)) / p
                if cmask.any():
                    vals[cmask] = self._logs_flat[starts[sel][cmask]]
                out[sel] = vals
                const[sel] = cmask
        return out, const, starts

    def _log_means_detail(self, p: Exponent, lo: np.ndarray, hi: np.ndarray, groups=None):
        slot = self._slot(p)
        m = lo.shape[0]
        if self.global_const:
            logm = np.full(m, self._logs_flat[0])
            return logm, np.ones(m, dtype=bool), self._flat_starts(lo)
        if isinstance(slot, _InfSlot):
            vals = _doubling_query(slot.table, lo, hi, slot.op)
            return np.log(vals), None, None
        if self.mode == "fast":
            if lo.shape[1] == 1:
                counts = (hi[:, 0] - lo[:, 0]).astype(np.float64)
            else:
                counts = np.prod((hi - lo).astype(np.float64), axis=1)
            sums = _box_sums(slot.prefix, lo, hi)
            if isinstance(slot, _ZeroSlot):
                sums /= counts
                return sums, None, None
            np.maximum(sums, _TINY, out=sums)
            sums /= counts
            np.log(sums, out=sums)
            sums += slot.shift
            sums /= slot.p
            return sums, None, None
        if isinstance(slot, _ZeroSlot):
            return self._window_logmeans(self._logs, lo, hi, None, groups)
        return self._window_logmeans(slot.lp, lo, hi, slot.p, groups)

    def log_means(self, p: Exponent, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        """Batched log power means for the boxes (lo[i], hi[i])."""
        return self._log_means_detail(p, lo, hi)[0]

    def power_means(self, p: Exponent, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        """Batched power means; exact on boxes detected as constant."""
        p = p if isinstance(p, Exponent) else Exponent(float(p))
        slot = self._slot(p)
        if isinstance(slot, _InfSlot) and not self.global_const:
            return _doubling_query(slot.table, lo, hi, slot.op)
        logm, cmask, starts = self._log_means_detail(p, lo, hi)
        vals = np.exp(logm)
        if cmask is not None and cmask.any():
            vals[cmask] = self._samples_flat[starts[cmask]]
        return vals

    def power_mean(self, p, cube: GridCube) -> float:
        """Single-cube power mean through the cache."""
        p = p if isinstance(p, Exponent) else Exponent(float(p))
        cube.validate_for(self.dims)
        lo = np.asarray([cube.lo], dtype=np.int32)
        hi = np.asarray([cube.hi], dtype=np.int32)
        return float(self.power_means(p, lo, hi)[0])

    def moment(self, p, cube: GridCube) -> float:
        """Raw moment <w^p>_J for finite nonzero p."""
        p = p if isinstance(p, Exponent) else Exponent(float(p))
        if not p.is_finite:
            raise InvalidParameter("raw moments are defined for finite nonzero exponents")
        cube.validate_for(self.dims)
        lo = np.asarray([cube.lo], dtype=np.int32)
        hi = np.asarray([cube.hi], dtype=np.int32)
        logm, cmask, starts = self._log_means_detail(p, lo, hi)
        if cmask is not None and cmask[0]:
            return float(self._samples_flat[starts[0]] ** p.value)
        return float(np.exp(p.value * logm[0]))


def build_cache(w: GridWeight, pair: ExponentPair, mode: str = "accurate") -> MeanCache:
    """Build the O(1)-query mean cache for a weight and exponent pair."""
    return MeanCache(w, pair, mode)


def cube_ratios(cache: MeanCache, lo: np.ndarray, hi: np.ndarray, groups=None) -> np.ndarray:
    """Per-cube characteristic ratios for the boxes (lo[i], hi[i]).

    Computed as exp(log m_{p1} - log m_{p2}); boxes on which the weight is
    constant yield exactly 1.0, and the pure sup/inf pair divides the exact
    range extrema instead of round-tripping through logs.
    """
    p1, p2 = cache.pair.p1, cache.pair.p2
    if cache.global_const:
        return np.ones(lo.shape[0])
    if p1.is_infinite and p2.is_infinite:
        hi_vals = cache.power_means(p1, lo, hi)
        lo_vals = cache.power_means(p2, lo, hi)
        return hi_vals / lo_vals
    lm1 = cache._log_means_detail(p1, lo, hi, groups)[0]
    lm2 = cache._log_means_detail(p2, lo, hi, groups)[0]
    lm1 -= lm2
    return np.exp(lm1, out=lm1)


@dataclass(frozen=True)
class CharacteristicResult:
    """Supremum search outcome: the value with its first argmax cube."""

    value: float
    argmax: GridCube
    pair: ExponentPair
    policy: str
    mode: str
    cubes_examined: int

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "argmax": self.argmax.to_dict(),
            "pair": self.pair.tokens(),
            "policy": self.policy,
            "mode": self.mode,
            "cubes_examined": self.cubes_examined,
        }


def _chunk_bounds(count: int, chunks: int):
    base, extra = divmod(count, chunks)
    bounds = [0]
    for i in range(chunks):
        bounds.append(bounds[-1] + base + (1 if i < extra else 0))
    return bounds


def _fast_exhaustive_1d(cache: MeanCache, n: int) -> tuple:
    """Search all 1-d intervals by left endpoint, without index arrays.

    Per-interval values are bitwise identical to the generic prefix-query
    path (same operations on the same prefix entries), so results agree with
    the chunked/threaded evaluator exactly.
    """
    slots = (cache._slot(cache.pair.p1), cache._slot(cache.pair.p2))
    counts_all = np.arange(1, n + 1, dtype=np.float64)
    best_val = -math.inf
    best_cube = (0, 1)
    for left in range(n):
        cnt = counts_all[: n - left]
        lms = []
        for slot in slots:
            sums = slot.prefix[left + 1:] - slot.prefix[left]
            if isinstance(slot, _ZeroSlot):
                sums /= cnt
            else:
                np.maximum(sums, _TINY, out=sums)
                sums /= cnt
                np.log(sums, out=sums)
                sums += slot.shift
                sums /= slot.p
            lms.append(sums)
        lm1, lm2 = lms
        lm1 -= lm2
        ratios = np.exp(lm1, out=lm1)
        local = int(np.argmax(ratios))
        value = float(ratios[local])
        if value > best_val:
            best_val = value
            best_cube = (left, left + 1 + local)
    return best_val, best_cube


def ap_norm(w: GridWeight, pair: ExponentPair, policy: str | None = None,
            mode: str = "accurate", threads: int = 1,
            cache: MeanCache | None = None) -> CharacteristicResult:
    """Maximise the per-cube ratio over the enumerated family.

    The reported argmax is the first cube attaining the maximum in
    enumeration order (strict > comparison, no tolerance), which makes the
    result independent of the thread count.
    """
    if not isinstance(pair, ExponentPair):
        pair = ExponentPair(*pair)
    _check_mode(mode)
    if policy is None:
        policy = default_policy(w.dims)
    if cache is None:
        cache = MeanCache(w, pair, mode)
    else:
        if cache.fingerprint != w.fingerprint:
            raise InvalidParameter("cache was built for a different weight")
        if cache.pair != pair or cache.mode != mode:
            raise InvalidParameter("cache pair/mode does not match the request")
    threads = max(1, int(threads))
    if (
        threads == 1
        and mode == "fast"
        and policy == "exhaustive"
        and len(w.dims) == 1
        and not cache.global_const
        and not (pair.p1.is_infinite or pair.p2.is_infinite)
    ):
        n = w.dims[0]
        value, (left, right) = _fast_exhaustive_1d(cache, n)
        return CharacteristicResult(
            value=value, argmax=GridCube((left,), (right,)), pair=pair,
            policy=policy, mode=mode, cubes_examined=n * (n + 1) // 2,
        )
    enum = _enumeration(w.dims, policy)
    lo, hi = enum.lo, enum.hi
    threads = min(threads, enum.count)

    def eval_range(start: int, end: int) -> tuple:
        ratios = cube_ratios(cache, lo[start:end], hi[start:end])
        local = int(np.argmax(ratios))
        return float(ratios[local]), start + local

    if threads == 1:
        ratios = cube_ratios(cache, lo, hi, enum.groups() if mode == "accurate" else None)
        best_idx = int(np.argmax(ratios))
        best_val = float(ratios[best_idx])
    else:
        from concurrent.futures import ThreadPoolExecutor

        bounds = _chunk_bounds(enum.count, threads)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(
                lambda se: eval_range(*se),
                zip(bounds[:-1], bounds[1:]),
            ))
        best_val, best_idx = results[0]
        for val, idx in results[1:]:
            if val > best_val:
                best_val, best_idx = val, idx
    argmax = GridCube(tuple(int(v) for v in lo[best_idx]), tuple(int(v) for v in hi[best_idx]))
    return CharacteristicResult(
        value=best_val, argmax=argmax, pair=pair, policy=policy, mode=mode,
        cubes_examined=enum.count,
    )


def a2_norm(w: GridWeight, policy: str | None = None, mode: str = "accurate",
            threads: int = 1) -> CharacteristicResult:
    """The A2 characteristic: ap_norm with the preset pair (1, -1)."""
    return ap_norm(w, ExponentPair.a2(), policy=policy, mode=mode, threads=threads)
