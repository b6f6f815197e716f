"""Grid weights, extended exponents, and per-cube power-mean arithmetic.

A weight is a strictly positive piecewise-constant function on the unit cube
[0,1)^d, stored as a d-dimensional array of cell values. All means over
grid-aligned boxes are exact for such functions (up to floating error), so
every algebraic identity checked by the verification layer is testable at
machine precision.

Exponents are extended reals: finite nonzero p gives the usual power mean
<w^p>_J^(1/p), p = 0 the geometric mean exp(<log w>_J), and p = +/-inf the
max/min over the box. Power sums are evaluated in the log domain with a
shifted log-sum-exp so that large |p| times a wide dynamic range cannot
overflow.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from functools import total_ordering

import numpy as np

from .errors import (
    CubeOutOfRange,
    InvalidExponent,
    InvalidParameter,
    InvalidWeight,
)

__all__ = [
    "Exponent",
    "ExponentPair",
    "GridWeight",
    "GridCube",
    "PartitionStats",
    "power_mean",
    "ap_ratio",
    "cutoff_above",
    "cutoff_below",
    "truncate_two_sided",
    "reciprocal",
    "reciprocal_dual",
    "bm_regularize",
    "partition_stats",
]

_TINY = np.finfo(np.float64).tiny


@total_ordering
@dataclass(frozen=True)
class Exponent:
    """Extended exponent: finite nonzero, zero (geometric mean), or +/-inf.

    The wrapped float carries the kind: 0.0 means the geometric-mean
    convention, +inf/-inf the essential sup/inf conventions, anything else a
    plain finite exponent. NaN is rejected. The natural float order realises
    the extended total order -inf < negatives < 0 < positives < +inf.
    """

    value: float

    def __post_init__(self) -> None:
        v = float(self.value)
        if math.isnan(v):
            raise InvalidExponent("exponent must not be NaN")
        if v == 0.0:
            v = 0.0  # normalise -0.0
        object.__setattr__(self, "value", v)

    @classmethod
    def finite(cls, value: float) -> "Exponent":
        v = float(value)
        if not math.isfinite(v) or v == 0.0:
            raise InvalidExponent(f"finite exponent must be nonzero and finite, got {value!r}")
        return cls(v)

    @classmethod
    def zero(cls) -> "Exponent":
        return cls(0.0)

    @classmethod
    def pos_inf(cls) -> "Exponent":
        return cls(math.inf)

    @classmethod
    def neg_inf(cls) -> "Exponent":
        return cls(-math.inf)

    @classmethod
    def from_token(cls, token: str) -> "Exponent":
        """Parse 'inf', '-inf', '0', or a finite nonzero decimal."""
        tok = str(token).strip().lower()
        if tok in ("inf", "+inf"):
            return cls.pos_inf()
        if tok == "-inf":
            return cls.neg_inf()
        try:
            v = float(tok)
        except ValueError as exc:
            raise InvalidExponent(f"cannot parse exponent token {token!r}") from exc
        if math.isnan(v):
            raise InvalidExponent("exponent token 'nan' is rejected")
        if math.isinf(v):
            raise InvalidExponent(f"exponent token {token!r} overflows; use 'inf'/'-inf'")
        return cls(v)

    @property
    def is_finite(self) -> bool:
        """True for a finite *nonzero* exponent."""
        return self.value != 0.0 and math.isfinite(self.value)

    @property
    def is_zero(self) -> bool:
        return self.value == 0.0

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.value)

    def negated(self) -> "Exponent":
        return Exponent(-self.value)

    def token(self) -> str:
        if self.value == math.inf:
            return "inf"
        if self.value == -math.inf:
            return "-inf"
        s = repr(self.value)
        return s[:-2] if s.endswith(".0") else s

    def __lt__(self, other: "Exponent") -> bool:
        return self.value < other.value

    def __str__(self) -> str:
        return self.token()


def _as_exponent(p) -> Exponent:
    if isinstance(p, Exponent):
        return p
    return Exponent(float(p))


@dataclass(frozen=True)
class ExponentPair:
    """Ordered exponent pair p1 > p2 under the extended order."""

    p1: Exponent
    p2: Exponent

    def __post_init__(self) -> None:
        object.__setattr__(self, "p1", _as_exponent(self.p1))
        object.__setattr__(self, "p2", _as_exponent(self.p2))
        if not self.p1 > self.p2:
            raise InvalidExponent(
                f"exponent pair requires p1 > p2, got ({self.p1}, {self.p2})"
            )

    @classmethod
    def a2(cls) -> "ExponentPair":
        """The A2 pair (1, -1)."""
        return cls(Exponent(1.0), Exponent(-1.0))

    @classmethod
    def classical_ap(cls, p: float) -> "ExponentPair":
        """The classical A_p pair (1, -1/(p-1)) for p > 1."""
        p = float(p)
        if not p > 1.0:
            raise InvalidExponent(f"classical A_p preset requires p > 1, got {p!r}")
        return cls(Exponent(1.0), Exponent(-1.0 / (p - 1.0)))

    def dual(self) -> "ExponentPair":
        """The pair (-p2, -p1) used by the reciprocal-weight transform."""
        return ExponentPair(self.p2.negated(), self.p1.negated())

    @property
    def both_finite(self) -> bool:
        return self.p1.is_finite and self.p2.is_finite

    def tokens(self) -> dict:
        return {"p1": self.p1.token(), "p2": self.p2.token()}

    def __str__(self) -> str:
        return f"({self.p1}, {self.p2})"


class GridWeight:
    """Strictly positive piecewise-constant function on the unit-cube grid.

    ``samples`` is a read-only float64 array of shape ``dims`` (row-major cell
    order); zero samples are an input error because negative exponents make
    them degenerate.
    """

    __slots__ = ("_samples", "_min", "_max", "_fingerprint")

    def __init__(self, dims, samples) -> None:
        try:
            dims = tuple(int(n) for n in dims)
        except (TypeError, ValueError) as exc:
            raise InvalidWeight(f"bad dims {dims!r}") from exc
        if len(dims) == 0 or any(n < 1 for n in dims):
            raise InvalidWeight(f"dims must be a nonempty vector of counts >= 1, got {dims}")
        try:
            arr = np.asarray(samples, dtype=np.float64)
        except (TypeError, ValueError) as exc:
            raise InvalidWeight("samples must be an array of numbers") from exc
        n_total = math.prod(dims)
        if arr.size != n_total:
            raise InvalidWeight(f"expected {n_total} samples for dims {dims}, got {arr.size}")
        arr = arr.reshape(dims).copy(order="C")
        if not np.isfinite(arr).all():
            raise InvalidWeight("samples must be finite")
        if not (arr > 0.0).all():
            raise InvalidWeight("samples must be strictly positive")
        arr.setflags(write=False)
        self._samples = arr
        self._min = None
        self._max = None
        self._fingerprint = None

    @classmethod
    def constant(cls, dims, value: float) -> "GridWeight":
        dims = tuple(int(n) for n in dims)
        return cls(dims, np.full(dims, float(value)))

    @property
    def dims(self) -> tuple:
        return self._samples.shape

    @property
    def ndim(self) -> int:
        return self._samples.ndim

    @property
    def samples(self) -> np.ndarray:
        return self._samples

    @property
    def flat(self) -> np.ndarray:
        return self._samples.reshape(-1)

    @property
    def cell_count(self) -> int:
        return self._samples.size

    @property
    def min_value(self) -> float:
        if self._min is None:
            self._min = float(self._samples.min())
        return self._min

    @property
    def max_value(self) -> float:
        if self._max is None:
            self._max = float(self._samples.max())
        return self._max

    @property
    def fingerprint(self) -> str:
        """Content hash tying caches to exactly this weight."""
        if self._fingerprint is None:
            h = hashlib.sha256()
            h.update(repr(self.dims).encode())
            h.update(self._samples.tobytes())
            self._fingerprint = h.hexdigest()
        return self._fingerprint

    def whole_cube(self) -> "GridCube":
        return GridCube.whole(self.dims)

    def __eq__(self, other) -> bool:
        if not isinstance(other, GridWeight):
            return NotImplemented
        return self.dims == other.dims and np.array_equal(self._samples, other._samples)

    def __repr__(self) -> str:
        return f"GridWeight(dims={self.dims}, cells={self.cell_count})"


@dataclass(frozen=True)
class GridCube:
    """Grid-aligned axis box: per-axis start (inclusive) and end (exclusive)."""

    lo: tuple
    hi: tuple

    def __post_init__(self) -> None:
        lo = tuple(int(v) for v in self.lo)
        hi = tuple(int(v) for v in self.hi)
        if len(lo) != len(hi) or len(lo) == 0:
            raise CubeOutOfRange(f"lo/hi must be nonempty vectors of equal length: {lo}, {hi}")
        for axis, (l, h) in enumerate(zip(lo, hi)):
            if not (0 <= l < h):
                raise CubeOutOfRange(f"axis {axis}: need 0 <= lo < hi, got [{l}, {h})")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def whole(cls, dims) -> "GridCube":
        dims = tuple(int(n) for n in dims)
        return cls((0,) * len(dims), dims)

    @property
    def ndim(self) -> int:
        return len(self.lo)

    @property
    def cell_count(self) -> int:
        return math.prod(h - l for l, h in zip(self.lo, self.hi))

    def slices(self) -> tuple:
        return tuple(slice(l, h) for l, h in zip(self.lo, self.hi))

    def validate_for(self, dims) -> None:
        dims = tuple(int(n) for n in dims)
        if len(dims) != len(self.lo):
            raise CubeOutOfRange(f"cube has {len(self.lo)} axes, grid has {len(dims)}")
        for axis, (h, n) in enumerate(zip(self.hi, dims)):
            if h > n:
                raise CubeOutOfRange(f"axis {axis}: cube end {h} exceeds grid size {n}")

    def to_dict(self) -> dict:
        return {"lo": list(self.lo), "hi": list(self.hi)}


def _check_mode(mode: str) -> str:
    if mode not in ("fast", "accurate"):
        raise InvalidParameter(f"mode must be 'fast' or 'accurate', got {mode!r}")
    return mode


def _check_positive(value: float, name: str) -> float:
    v = float(value)
    if not (math.isfinite(v) and v > 0.0):
        raise InvalidParameter(f"{name} must be a positive finite number, got {value!r}")
    return v


def _cube_values(w: GridWeight, cube: GridCube | None) -> np.ndarray:
    if cube is None:
        return w.samples
    cube.validate_for(w.dims)
    return w.samples[cube.slices()]


def _sub_log_mean(sub: np.ndarray, p: Exponent, w: GridWeight, mode: str) -> float:
    """log of the power mean of the cells ``sub``; assumes sub not constant."""
    if p.is_infinite:
        return math.log(float(sub.max() if p.value > 0 else sub.min()))
    if p.is_zero:
        return float(np.log(sub).mean())
    pv = p.value
    lp = pv * np.log(sub)
    if mode == "fast":
        # global shift mirrors the prefix-table path of the mean cache
        M = pv * math.log(w.max_value if pv > 0 else w.min_value)
    else:
        M = float(lp.max())
    s = float(np.exp(lp - M).sum())
    s = max(s, _TINY)
    return (M + math.log(s / sub.size)) / pv


def power_mean(w: GridWeight, p, cube: GridCube | None = None, mode: str = "accurate") -> float:
    """Power mean <w^p>_J^(1/p) over the cube (whole grid when cube is None).

    p = 0 gives exp(<log w>_J); p = +/-inf gives max/min over the cube. The
    result lies in [min_J w, max_J w] and is exact for cube-constant weights.
    """
    p = _as_exponent(p)
    _check_mode(mode)
    sub = _cube_values(w, cube)
    if p.is_infinite:
        return float(sub.max() if p.value > 0 else sub.min())
    if float(sub.max()) == float(sub.min()):
        return float(sub.reshape(-1)[0])
    return math.exp(_sub_log_mean(sub, p, w, mode))


def ap_ratio(w: GridWeight, pair: ExponentPair, cube: GridCube | None = None,
             mode: str = "accurate") -> float:
    """The Muckenhoupt-type ratio <w^p1>_J^(1/p1) * <w^p2>_J^(-1/p2) >= 1.

    Equals power_mean(w, p1, J) / power_mean(w, p2, J); evaluated in the log
    domain so that neither factor can overflow on its own.
    """
    if not isinstance(pair, ExponentPair):
        pair = ExponentPair(*pair)
    _check_mode(mode)
    sub = _cube_values(w, cube)
    if float(sub.max()) == float(sub.min()):
        return 1.0
    if pair.p1.is_infinite and pair.p2.is_infinite:
        return float(sub.max() / sub.min())
    lm1 = _sub_log_mean(sub, pair.p1, w, mode)
    lm2 = _sub_log_mean(sub, pair.p2, w, mode)
    return math.exp(lm1 - lm2)


def cutoff_above(w: GridWeight, a: float) -> GridWeight:
    """Cut the weight from above: pointwise min(w, a).

    The two usual boundary conventions (replace where w > a or where w >= a)
    coincide with pointwise min, so no ambiguity survives on a grid.
    """
    a = _check_positive(a, "cut level a")
    return GridWeight(w.dims, np.minimum(w.samples, a))


def cutoff_below(w: GridWeight, a: float) -> GridWeight:
    """Cut the weight from below: pointwise max(w, a)."""
    a = _check_positive(a, "cut level a")
    return GridWeight(w.dims, np.maximum(w.samples, a))


def truncate_two_sided(w: GridWeight, n: int) -> GridWeight:
    """Clamp the weight to [1/n, n]; exactly cutoff_below(cutoff_above(w, n), 1/n)."""
    if not isinstance(n, (int, np.integer)):
        raise InvalidParameter(f"truncation level must be an integer, got {n!r}")
    if n < 1:
        raise InvalidParameter(f"truncation level must be >= 1, got {n}")
    return cutoff_below(cutoff_above(w, float(n)), 1.0 / float(n))


def reciprocal(w: GridWeight) -> GridWeight:
    """Pointwise 1/w."""
    return GridWeight(w.dims, 1.0 / w.samples)


def reciprocal_dual(w: GridWeight, pair: ExponentPair) -> tuple:
    """The duality transform (w, (p1, p2)) -> (1/w, (-p2, -p1)).

    The transformed pair again satisfies p1 > p2, and the ratio of the dual
    data over any cube equals the ratio of the original data. Applying the
    transform twice returns the original exponents exactly; the weight is
    reproduced up to one reciprocal rounding per cell.
    """
    if not isinstance(pair, ExponentPair):
        pair = ExponentPair(*pair)
    return reciprocal(w), pair.dual()


def bm_regularize(w: GridWeight, s: float) -> GridWeight:
    """Bounded rational regularisation v = (s + w) / (s^2 + s*w + 1).

    For fixed s > 0 the output is pinned between s/(s^2+1) and 1/s, and
    v -> w pointwise as s -> 0+.
    """
    s = _check_positive(s, "regularization parameter s")
    x = w.samples
    return GridWeight(w.dims, (s + x) / (s * s + s * x + 1.0))


@dataclass(frozen=True)
class PartitionStats:
    """Raw-moment statistics of a cube split at a cut level.

    The cube J is split into the low part {w <= a} and the high part {w > a}.
    x* are means of w^p1, y* means of w^p2 over each part; alpha* the relative
    cell measures. Means on an empty part are None and must not be read
    (check the emptiness flags first).
    """

    x1: float | None
    y1: float | None
    x2: float | None
    y2: float | None
    alpha1: float
    alpha2: float
    n1: int
    n2: int
    a: float
    pair: ExponentPair

    @property
    def j1_empty(self) -> bool:
        return self.n1 == 0

    @property
    def j2_empty(self) -> bool:
        return self.n2 == 0


def partition_stats(w: GridWeight, pair: ExponentPair, cube: GridCube | None,
                    a: float) -> PartitionStats:
    """Split a cube at level a and return per-part raw moments of w^p1, w^p2.

    Requires finite nonzero exponents; the limit conventions are handled by
    the callers via power_mean directly. Recomposition holds within floating
    error: <w^p>_J = alpha1 * x1 + alpha2 * x2 (empty parts contribute 0).
    """
    if not isinstance(pair, ExponentPair):
        pair = ExponentPair(*pair)
    if not pair.both_finite:
        raise InvalidExponent("partition statistics require finite nonzero exponents")
    a = _check_positive(a, "cut level a")
    sub = _cube_values(w, cube).reshape(-1)
    low = sub[sub <= a]
    high = sub[sub > a]
    n1, n2 = low.size, high.size
    n = n1 + n2
    p1, p2 = pair.p1.value, pair.p2.value

    def moments(vals: np.ndarray) -> tuple:
        if vals.size == 0:
            return None, None
        return float(np.power(vals, p1).mean()), float(np.power(vals, p2).mean())

    x1, y1 = moments(low)
    x2, y2 = moments(high)
    return PartitionStats(
        x1=x1, y1=y1, x2=x2, y2=y2,
        alpha1=n1 / n, alpha2=n2 / n, n1=n1, n2=n2, a=a, pair=pair,
    )
