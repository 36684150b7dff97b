"""Fourier analysis of signed-delta functions of bitstring tuples.

A pair of t-tuples ``(x_1..x_t), (x'_1..x'_t)`` induces the integer function
``f = sum_l delta_{x_l} - delta_{x'_l}`` on n-bit strings.  A Z-string ``y``
distinguishes the two tuples exactly when the Fourier coefficient
``f^(y) = 2^-n sum_x p_y(x) f(x)`` is nonzero.  Coefficients are kept as the
exact integers ``2^n f^(y)``.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations_with_replacement
from typing import Iterator, Sequence

import numpy as np

from . import rng as rngmod
from .bits import BitString, as_bitstring, dot_parity, parity_array, sign_matrix
from .errors import CapacityError, DegeneratePairError, InputError
from .stats import wilson_interval

# 2^k entries for the dense transform
DENSE_MAX_QUBITS = 24
DIRECT_MAX_QUBITS = 20
EXHAUSTIVE_MAX_LOG2 = 24


@dataclass(frozen=True)
class TuplePair:
    first: tuple[BitString, ...]
    second: tuple[BitString, ...]
    width: int | None = None  # bit length; only needed when both tuples are empty

    def __post_init__(self):
        if len(self.first) != len(self.second):
            raise InputError("tuples must have equal length")
        ns = {b.n for b in self.first + self.second}
        if self.width is not None:
            ns.add(self.width)
        if len(ns) > 1:
            raise InputError(f"mixed bitstring lengths {sorted(ns)}")
        if self.width is None and ns:
            object.__setattr__(self, "width", ns.pop())

    @classmethod
    def of(cls, first: Sequence, second: Sequence, n: int | None = None) -> "TuplePair":
        """Build from bitstrings, '0101' strings or ints (ints need ``n``)."""
        return cls(tuple(as_bitstring(x, n) for x in first), tuple(as_bitstring(x, n) for x in second), n)

    @property
    def t(self) -> int:
        return len(self.first)

    @property
    def n(self) -> int | None:
        return self.first[0].n if self.first else self.width

    @property
    def r(self) -> int:
        common = Counter(self.first) & Counter(self.second)
        return self.t - sum(common.values())

    def equivalent(self) -> bool:
        """True when the tuples agree up to permutation."""
        return self.r == 0


@dataclass(frozen=True)
class SignedCounter:
    n: int
    entries: dict = field(default_factory=dict)

    def __post_init__(self):
        if any(v == 0 for v in self.entries.values()):
            raise InputError("zero entries must not be stored")

    @property
    def norm2sq(self) -> int:
        return sum(v * v for v in self.entries.values())

    def total(self) -> int:
        return sum(self.entries.values())

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        keys = sorted(self.entries)
        xs = np.array([k.value for k in keys], dtype=np.int64)
        vals = np.array([self.entries[k] for k in keys], dtype=np.int64)
        return xs, vals

    def dense(self) -> np.ndarray:
        if self.n > DENSE_MAX_QUBITS:
            raise CapacityError(f"dense vector needs n <= {DENSE_MAX_QUBITS}")
        out = np.zeros(1 << self.n, dtype=np.int64)
        xs, vals = self.arrays()
        out[xs] = vals
        return out


@dataclass(frozen=True)
class FourierReport:
    n: int
    support_size: int
    coeff_histogram: dict

    @property
    def distinguishing_prob(self) -> Fraction:
        return Fraction(self.support_size, 1 << self.n)

    @property
    def zero_prob(self) -> Fraction:
        return 1 - self.distinguishing_prob


@dataclass(frozen=True)
class ParsevalResult:
    prob: Fraction
    bound: Fraction
    holds: bool


def build_f(pair: TuplePair) -> SignedCounter:
    c: Counter = Counter(pair.first)
    c.subtract(pair.second)
    n = pair.n if pair.n is not None else 1
    return SignedCounter(n, {k: v for k, v in sorted(c.items()) if v != 0})


def reduce_pair(pair: TuplePair) -> TuplePair:
    """Strip strings common to both tuples (multiset-wise), keeping order."""
    common = Counter(pair.first) & Counter(pair.second)

    def strip(seq):
        left = Counter(common)
        out = []
        for b in seq:
            if left[b] > 0:
                left[b] -= 1
            else:
                out.append(b)
        return tuple(out)

    return TuplePair(strip(pair.first), strip(pair.second), pair.n)


def fourier_coefficient(f: SignedCounter, y) -> int:
    """Return ``2^n f^(y)`` exactly."""
    y = as_bitstring(y, f.n)
    return sum(v * (-1 if dot_parity(y.value, k.value) else 1) for k, v in f.entries.items())


def fwht(a: np.ndarray) -> np.ndarray:
    """Unnormalized Walsh-Hadamard transform along the last axis (Sylvester order)."""
    a = np.array(a, copy=True)
    size = a.shape[-1]
    if size & (size - 1):
        raise InputError("transform length must be a power of two")
    lead = a.shape[:-1]
    h = 1
    while h < size:
        v = a.reshape(*lead, size // (2 * h), 2, h)
        lo, hi = v[..., 0, :], v[..., 1, :]
        a = np.stack((lo + hi, lo - hi), axis=-2).reshape(*lead, size)
        h *= 2
    return a


def _histogram(values: np.ndarray, multiplicity: int = 1) -> dict:
    vals, counts = np.unique(values, return_counts=True)
    return {int(v): int(c) * multiplicity for v, c in zip(vals, counts)}


def span_coordinates(xs: Sequence[int]) -> tuple[int, list[int]]:
    """Rank k of span(xs) over GF(2) and k-bit coordinates of each x.

    Coordinates are with respect to a basis chosen among the xs themselves,
    so that ``y . x_i = c_i . z`` with ``z_j = y . b_j``.
    """
    basis: dict[int, tuple[int, int]] = {}  # pivot bit -> (vector, combination mask)
    k = 0
    coords = []
    for x in xs:
        v, m = int(x), 0
        while v:
            top = v.bit_length() - 1
            if top not in basis:
                # x becomes basis element k; v = x ^ (combination m)
                basis[top] = (v, m ^ (1 << k))
                m = 1 << k
                k += 1
                break
            bv, bm = basis[top]
            v ^= bv
            m ^= bm
        coords.append(m)
    return k, coords


def _support_reduced(n: int, xs: np.ndarray, vals: np.ndarray) -> tuple[int, dict]:
    if xs.size == 0:
        return 0, {0: 1 << n}
    k, coords = span_coordinates(xs.tolist())
    if k > DENSE_MAX_QUBITS:
        raise CapacityError(f"support spans {k} dimensions; limit is {DENSE_MAX_QUBITS}")
    g = np.zeros(1 << k, dtype=np.int64)
    np.add.at(g, np.array(coords, dtype=np.int64), vals)
    coef = fwht(g)
    mult = 1 << (n - k)
    return int(np.count_nonzero(coef)) * mult, _histogram(coef, mult)


def _support_direct(n: int, xs: np.ndarray, vals: np.ndarray) -> tuple[int, dict]:
    if n > DIRECT_MAX_QUBITS:
        raise CapacityError(f"direct evaluation needs n <= {DIRECT_MAX_QUBITS}")
    coef = np.zeros(1 << n, dtype=np.int64)
    step = 1 << 16
    for y0 in range(0, 1 << n, step):
        ys = np.arange(y0, min(y0 + step, 1 << n), dtype=np.int64)
        signs = 1 - 2 * parity_array(ys[:, None] & xs[None, :]).astype(np.int64)
        coef[y0:y0 + ys.size] = signs @ vals
    return int(np.count_nonzero(coef)), _histogram(coef)


def _support_dense(n: int, xs: np.ndarray, vals: np.ndarray) -> tuple[int, dict]:
    if n > DENSE_MAX_QUBITS:
        raise CapacityError(f"dense transform needs n <= {DENSE_MAX_QUBITS}")
    g = np.zeros(1 << n, dtype=np.int64)
    g[xs] = vals
    coef = fwht(g)
    return int(np.count_nonzero(coef)), _histogram(coef)


def support_report(f: SignedCounter, method: str = "auto") -> FourierReport:
    """Exact Fourier support and coefficient histogram of ``f``.

    ``method`` is ``"direct"`` (sum over the sparse support for every y),
    ``"dense"`` (fast transform of the dense 2^n vector), ``"reduced"``
    (fast transform on the span of the support), or ``"auto"``.
    """
    if f.n > 30:
        raise CapacityError("n must be <= 30")
    xs, vals = f.arrays()
    if method == "auto":
        method = "dense" if f.n <= 16 else "reduced"
    fn = {"direct": _support_direct, "dense": _support_dense, "reduced": _support_reduced}.get(method)
    if fn is None:
        raise InputError(f"unknown method {method!r}")
    size, hist = fn(f.n, xs, vals)
    return FourierReport(f.n, size, hist)


def parseval_check(pair: TuplePair) -> ParsevalResult:
    r = pair.r
    if r == 0:
        raise DegeneratePairError("pair is permutation-related; f = 0")
    rep = support_report(build_f(pair))
    bound = Fraction(1, 2 * r)
    return ParsevalResult(rep.distinguishing_prob, bound, rep.distinguishing_prob >= bound)


def parity_pair(n: int) -> TuplePair:
    """Even-weight strings vs odd-weight strings, t = 2^(n-1); f equals p_{1...1}."""
    xs = range(1 << n)
    even = [x for x in xs if x.bit_count() % 2 == 0]
    odd = [x for x in xs if x.bit_count() % 2 == 1]
    return TuplePair.of(even, odd, n)


# --- canonical enumeration -------------------------------------------------

@lru_cache(maxsize=32)
def canonical_multisets(n: int, t: int) -> tuple[np.ndarray, np.ndarray]:
    """Sorted t-tuples over 2^n labels as count vectors, with ordered-tuple weights.

    Returns ``(counts, weights)`` where ``counts[k, x]`` is the multiplicity
    of x in multiset k and ``weights[k] = t! / prod counts!`` is the number of
    ordered tuples it represents.
    """
    size = 1 << n
    k = math.comb(size + t - 1, t)
    if k * k > (1 << EXHAUSTIVE_MAX_LOG2):
        raise CapacityError(f"{k}^2 canonical pairs at n={n}, t={t} exceed 2^{EXHAUSTIVE_MAX_LOG2}")
    counts = np.zeros((k, size), dtype=np.int64)
    for i, combo in enumerate(combinations_with_replacement(range(size), t)):
        np.add.at(counts[i], list(combo), 1)
    fact = np.array([math.factorial(c) for c in range(t + 1)], dtype=np.int64)
    weights = math.factorial(t) // np.prod(fact[counts], axis=1)
    counts.setflags(write=False)
    weights.setflags(write=False)
    return counts, weights


@dataclass(frozen=True)
class PairClassBlock:
    """Canonical pairs (A_i, B_j) for a block of first multisets."""

    support: np.ndarray  # (b, K) support sizes
    r: np.ndarray        # (b, K) reduced lengths
    weight: np.ndarray   # (b, K) number of ordered tuple pairs represented


def iter_pair_classes(n: int, t: int) -> Iterator[PairClassBlock]:
    counts, weights = canonical_multisets(n, t)
    k, size = counts.shape
    if n <= 14:
        coef = counts @ sign_matrix(n).astype(np.int64)
    else:
        coef = fwht(counts)
    block = max(1, (1 << 22) // (k * size))
    for i0 in range(0, k, block):
        i1 = min(k, i0 + block)
        diff = coef[i0:i1, None, :] - coef[None, :, :]
        support = np.count_nonzero(diff, axis=2)
        r = np.abs(counts[i0:i1, None, :] - counts[None, :, :]).sum(axis=2) // 2
        yield PairClassBlock(support, r, weights[i0:i1, None] * weights[None, :])


@dataclass(frozen=True)
class ExhaustiveParseval:
    n: int
    t: int
    classes: int
    pairs: int
    violations: int
    min_ratio: Fraction  # min over r >= 1 of prob * 2r (>= 1 means the bound holds)


def parseval_exhaustive(n: int, t: int) -> ExhaustiveParseval:
    """Check ``prob >= 1/(2r)`` for every nontrivial pair by canonical enumeration."""
    size = 1 << n
    classes = pairs = violations = 0
    best = None
    for blk in iter_pair_classes(n, t):
        classes += blk.support.size
        pairs += int(blk.weight.sum())
        nontrivial = blk.r > 0
        lhs = 2 * blk.r * blk.support  # prob * 2r * 2^n
        bad = nontrivial & (lhs < size)
        violations += int(blk.weight[bad].sum())
        if nontrivial.any():
            m = int(lhs[nontrivial].min())
            best = m if best is None else min(best, m)
    return ExhaustiveParseval(n, t, classes, pairs, violations,
                              Fraction(best, size) if best is not None else Fraction(0))


def support_distribution(n: int, t: int) -> dict[int, int]:
    """Exact number of ordered tuple pairs with each Fourier support size."""
    out: dict[int, int] = {}
    for blk in iter_pair_classes(n, t):
        s = blk.support.ravel()
        w = blk.weight.ravel()
        for val in np.unique(s):
            out[int(val)] = out.get(int(val), 0) + int(w[s == val].sum())
    return dict(sorted(out.items()))


# --- sampling ----------------------------------------------------------------

def sample_supports(n: int, t: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """Fourier support sizes of ``count`` uniformly drawn tuple pairs."""
    size = 1 << n
    xs = rng.integers(0, size, size=(count, 2 * t), dtype=np.int64)
    if n <= 16:
        f = np.zeros((count, size), dtype=np.int32)
        rows = np.repeat(np.arange(count), t)
        np.add.at(f, (rows, xs[:, :t].ravel()), 1)
        np.add.at(f, (rows, xs[:, t:].ravel()), -1)
        return np.count_nonzero(fwht(f), axis=1).astype(np.int64)
    out = np.empty(count, dtype=np.int64)
    for i in range(count):
        c: Counter = Counter(xs[i, :t].tolist())
        c.subtract(xs[i, t:].tolist())
        items = [(k, v) for k, v in c.items() if v]
        if not items:
            out[i] = 0
            continue
        keys = np.array([k for k, _ in items], dtype=np.int64)
        vals = np.array([v for _, v in items], dtype=np.int64)
        out[i] = _support_reduced(n, keys, vals)[0]
    return out


def _collect_supports(n, t, trials, seed, stream, workers) -> np.ndarray:
    parts = rngmod.chunked_map(lambda g, c: sample_supports(n, t, c, g), trials, seed, stream, workers)
    return rngmod.concat(parts).astype(np.int64)


def log2_factorial(t: int) -> float:
    return math.log2(math.factorial(t)) if t <= 1000 else math.lgamma(t + 1) / math.log(2)


def _log2_counting_bound(n: int, t: int, A: float) -> float:
    return log2_factorial(t) + (n + 1) * A - n * t


@dataclass(frozen=True)
class LowSupportResult:
    n: int
    t: int
    A: float
    fraction: float
    exact: Fraction | None
    log2_counting_bound: float
    trials: int | None
    seed: int | None
    ci_low: float
    ci_high: float

    @property
    def counting_bound(self) -> float:
        return 2.0 ** self.log2_counting_bound if self.log2_counting_bound < 1000 else math.inf

    @property
    def vacuous(self) -> bool:
        return self.log2_counting_bound >= 0


def low_support_fraction(n: int, t: int, A: float, mode: str = "exhaustive", trials: int = 10_000,
                         seed: int = 0, workers: int = 1) -> LowSupportResult:
    """Fraction of ordered tuple pairs whose Fourier support is below ``A``."""
    log2b = _log2_counting_bound(n, t, A)
    if mode == "exhaustive":
        if 2 * n * t > EXHAUSTIVE_MAX_LOG2:
            raise CapacityError(f"2^(2nt) = 2^{2 * n * t} exceeds 2^{EXHAUSTIVE_MAX_LOG2}")
        dist = support_distribution(n, t)
        low = sum(w for s, w in dist.items() if s < A)
        frac = Fraction(low, 1 << (2 * n * t))
        return LowSupportResult(n, t, A, float(frac), frac, log2b, None, None, float(frac), float(frac))
    if mode == "sampled":
        supports = _collect_supports(n, t, trials, seed, "fourier", workers)
        hits = int(np.count_nonzero(supports < A))
        lo, hi = wilson_interval(hits, trials)
        return LowSupportResult(n, t, A, hits / trials, None, log2b, trials, seed, lo, hi)
    raise InputError(f"unknown mode {mode!r}")


@dataclass(frozen=True)
class ConjectureResult:
    n: int
    t: int
    c: float
    threshold: float
    trials: int
    seed: int
    tail_prob: float
    ci_low: float
    ci_high: float
    support_min: int
    support_median: float
    support_max: int


def conjecture1_estimate(n: int, t: int, c: float, trials: int, seed: int = 0,
                         workers: int = 1) -> ConjectureResult:
    """Estimate ``Pr[|supp f^| < 2^n / n^c]`` over uniformly drawn tuple pairs."""
    if not 1 <= n <= 30:
        raise InputError("n must be in [1, 30]")
    if trials < 1 or t < 1:
        raise InputError("trials and t must be >= 1")
    threshold = 2.0 ** n / float(n) ** c
    supports = _collect_supports(n, t, trials, seed, "conjecture", workers)
    hits = int(np.count_nonzero(supports < threshold))
    lo, hi = wilson_interval(hits, trials)
    return ConjectureResult(n, t, c, threshold, trials, seed, hits / trials, lo, hi,
                            int(supports.min()), float(np.median(supports)), int(supports.max()))
