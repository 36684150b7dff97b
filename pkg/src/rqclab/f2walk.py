"""The CNOT-generated group of reversible circuits and its random walk.

A CNOT circuit permutes computational basis states, ``U|x> = |Mx>`` with
``M`` in GL(n, 2).  Conjugation maps Z-strings linearly:
``U Z^y U^dag = Z^(M^-T y)``.  With this convention conjugation is a group
homomorphism, ``conj(M1 M2, y) = conj(M1, conj(M2, y))``; the property test
in ``tests/test_f2walk.py`` pins it.

Matrix rows are packed into ints with the same bit order as bitstrings:
column j (qubit j+1) is bit ``n-1-j``.
"""
from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from . import rng as rngmod
from .bits import BitString, as_bitstring
from .errors import CapacityError, InputError

GROUP_MAX_QUBITS = 4
EIG_MAX_QUBITS = 3
ORBIT_MAX_QUBITS = 12


def _parity(v: int) -> int:
    return v.bit_count() & 1


@dataclass(frozen=True)
class F2Matrix:
    n: int
    rows: tuple[int, ...]

    def __post_init__(self):
        if len(self.rows) != self.n:
            raise InputError(f"expected {self.n} rows, got {len(self.rows)}")
        if any(not 0 <= r < (1 << self.n) for r in self.rows):
            raise InputError("row mask out of range")
        if _rank(self.rows) != self.n:
            raise InputError("matrix is not invertible over GF(2)")

    @classmethod
    def identity(cls, n: int) -> "F2Matrix":
        return cls(n, tuple(1 << (n - 1 - i) for i in range(n)))

    @classmethod
    def from_lists(cls, m: Sequence[Sequence[int]]) -> "F2Matrix":
        n = len(m)
        return cls(n, tuple(sum((int(b) & 1) << (n - 1 - j) for j, b in enumerate(row)) for row in m))

    @classmethod
    def cnot(cls, n: int, control: int, target: int) -> "F2Matrix":
        """CNOT with 1-based qubit labels: x_target ^= x_control."""
        rows = list(cls.identity(n).rows)
        rows[target - 1] |= 1 << (n - control)
        return cls(n, tuple(rows))

    def entry(self, i: int, j: int) -> int:
        return (self.rows[i] >> (self.n - 1 - j)) & 1

    def to_lists(self) -> list[list[int]]:
        return [[self.entry(i, j) for j in range(self.n)] for i in range(self.n)]

    def apply(self, x: int) -> int:
        out = 0
        for row in self.rows:
            out = (out << 1) | _parity(row & x)
        return out

    def __matmul__(self, other: "F2Matrix") -> "F2Matrix":
        if self.n != other.n:
            raise InputError("dimension mismatch")
        n = self.n
        rows = []
        for row in self.rows:
            acc = 0
            for j in range(n):
                if (row >> (n - 1 - j)) & 1:
                    acc ^= other.rows[j]
            rows.append(acc)
        return F2Matrix(n, tuple(rows))

    def transpose(self) -> "F2Matrix":
        n = self.n
        return F2Matrix(n, tuple(
            sum(self.entry(i, j) << (n - 1 - i) for i in range(n)) for j in range(n)))

    def inverse(self) -> "F2Matrix":
        n = self.n
        a = list(self.rows)
        b = list(F2Matrix.identity(n).rows)
        for col in range(n):
            bit = 1 << (n - 1 - col)
            piv = next(i for i in range(col, n) if a[i] & bit)
            a[col], a[piv] = a[piv], a[col]
            b[col], b[piv] = b[piv], b[col]
            for i in range(n):
                if i != col and a[i] & bit:
                    a[i] ^= a[col]
                    b[i] ^= b[col]
        return F2Matrix(n, tuple(b))

    def permutation(self) -> np.ndarray:
        """``perm[x] = M x`` over all 2^n basis labels."""
        return np.array([self.apply(x) for x in range(1 << self.n)], dtype=np.int64)


def _rank(rows: Iterable[int]) -> int:
    basis: dict[int, int] = {}
    for v in rows:
        while v:
            top = v.bit_length() - 1
            if top not in basis:
                basis[top] = v
                break
            v ^= basis[top]
    return len(basis)


def embed(local: F2Matrix, a: int, b: int, n: int) -> F2Matrix:
    """Embed a 2x2 element acting on qubits (a, b) (0-based, ordered) into GL(n, 2)."""
    if local.n != 2 or a == b:
        raise InputError("need a 2x2 element and two distinct qubits")
    rows = list(F2Matrix.identity(n).rows)
    q = (a, b)
    for i in range(2):
        row = 0
        for j in range(2):
            if local.entry(i, j):
                row |= 1 << (n - 1 - q[j])
        rows[q[i]] = row
    return F2Matrix(n, tuple(rows))


@lru_cache(maxsize=1)
def local_group() -> tuple[F2Matrix, ...]:
    """GL(2, 2): the six reversible two-qubit circuits, identity first."""
    out = []
    for r0 in range(4):
        for r1 in range(4):
            if _rank((r0, r1)) == 2:
                out.append(F2Matrix(2, (r0, r1)))
    out.sort(key=lambda m: (m != F2Matrix.identity(2), m.rows))
    return tuple(out)


def site_qubits(site: int, n: int) -> tuple[int, int]:
    """0-based qubits of periodic site ``site`` (1-based): (i, i+1 mod n)."""
    return site - 1, site % n


@lru_cache(maxsize=8)
def generators(n: int) -> tuple[F2Matrix, ...]:
    """All n*6 equally likely one-step draws of the walk, site-major order."""
    if n < 2:
        raise InputError("the walk needs n >= 2")
    return tuple(embed(g, *site_qubits(s, n), n) for s in range(1, n + 1) for g in local_group())


def sample_sigma_draw(n: int, rng: np.random.Generator) -> tuple[int, int]:
    """(site, local element index) of one uniform draw."""
    return int(rng.integers(1, n + 1)), int(rng.integers(0, 6))


def sample_sigma_step(n: int, rng: np.random.Generator) -> F2Matrix:
    site, g = sample_sigma_draw(n, rng)
    return embed(local_group()[g], *site_qubits(site, n), n)


def conjugate_zstring(m: F2Matrix, y) -> BitString:
    """Z-string y' with ``U Z^y U^dag = Z^y'`` for ``U|x> = |Mx>``; y' = M^-T y."""
    y = as_bitstring(y, m.n)
    return BitString(m.inverse().transpose().apply(y.value), m.n)


def gl2_order(n: int) -> int:
    return math.prod((1 << n) - (1 << j) for j in range(n))


def group_size_bound_log2(n: int) -> int:
    """log2 of the crude size bound 2^(2n^2 + 2n)."""
    return 2 * n * n + 2 * n


def clifford_size_bound(n: int) -> int:
    return 2 ** (n * n + 2 * n) * math.prod(4 ** j - 1 for j in range(1, n + 1))


@dataclass
class GroupTable:
    n: int
    elements: list[F2Matrix]
    index: dict[F2Matrix, int]
    # step[g, s] = index of generators(n)[s] @ elements[g]
    step: np.ndarray
    diameter: int
    product_table: np.ndarray | None = field(default=None, repr=False)

    @property
    def order(self) -> int:
        return len(self.elements)

    def identity_index(self) -> int:
        return self.index[F2Matrix.identity(self.n)]

    def to_json(self) -> str:
        return json.dumps({"n": self.n, "order": self.order, "diameter": self.diameter,
                           "elements": [list(m.rows) for m in self.elements]})

    def transition_matrix(self) -> sp.csr_matrix:
        """Column-stochastic one-step kernel: ``P[h, g] = Pr[g -> h]``."""
        size, ng = self.step.shape
        cols = np.repeat(np.arange(size), ng)
        return sp.csr_matrix((np.full(size * ng, 1.0 / ng), (self.step.ravel(), cols)), shape=(size, size))


def enumerate_group(n: int, with_products: bool | None = None) -> GroupTable:
    """Breadth-first closure of the identity under the embedded local generators."""
    if n > GROUP_MAX_QUBITS:
        raise CapacityError(f"group enumeration limited to n <= {GROUP_MAX_QUBITS}")
    gens = generators(n)
    ident = F2Matrix.identity(n)
    index = {ident: 0}
    elements = [ident]
    depth = [0]
    queue = deque([0])
    while queue:
        g = queue.popleft()
        for s in gens:
            h = s @ elements[g]
            if h not in index:
                index[h] = len(elements)
                elements.append(h)
                depth.append(depth[g] + 1)
                queue.append(index[h])
    step = np.array([[index[s @ g] for s in gens] for g in elements], dtype=np.int64)
    table = GroupTable(n, elements, index, step, max(depth))
    if with_products if with_products is not None else n <= 3:
        table.product_table = np.array([[index[a @ b] for b in elements] for a in elements], dtype=np.int64)
    return table


@dataclass(frozen=True)
class WalkDistribution:
    probs: np.ndarray
    k: int

    def __post_init__(self):
        if np.any(self.probs < -1e-15) or abs(self.probs.sum() - 1.0) > 1e-12:
            raise InputError("not a probability distribution")


def exact_walk_distribution(table: GroupTable, k: int) -> WalkDistribution:
    """Distribution of the walk after k steps from the identity."""
    p = np.zeros(table.order)
    p[table.identity_index()] = 1.0
    if k <= 0:
        return WalkDistribution(p, 0)
    P = table.transition_matrix()
    for _ in range(k):
        q = P @ p
        if np.array_equal(q, p):
            break  # floating-point fixed point: every later step returns the same vector
        p = q
    return WalkDistribution(p, k)


def tv_to_uniform(probs: np.ndarray) -> float:
    return 0.5 * float(np.abs(probs - 1.0 / probs.size).sum())


def log2_lemma1_bound(n: int, k: float) -> float:
    return n * n + n + k * math.log1p(-1.0 / (500 * n ** 5)) / math.log(2)


def lemma1_bound(n: int, k: float) -> float:
    return 2.0 ** log2_lemma1_bound(n, k)


@dataclass(frozen=True)
class TVResult:
    k: int
    tv: float
    bound: float

    @property
    def bound_vacuous(self) -> bool:
        return self.bound >= 1.0

    @property
    def holds(self) -> bool:
        return self.bound_vacuous or self.tv <= self.bound


def tv_distance(dist: WalkDistribution, n: int) -> TVResult:
    return TVResult(dist.k, tv_to_uniform(dist.probs), lemma1_bound(n, dist.k))


def tv_curve(table: GroupTable, ks: Sequence[int]) -> list[TVResult]:
    """TV against the lemma bound at each k, by incremental convolution."""
    P = table.transition_matrix()
    p = np.zeros(table.order)
    p[table.identity_index()] = 1.0
    out, cur = [], 0
    for k in sorted(ks):
        while cur < k:
            p = P @ p
            cur += 1
        out.append(TVResult(k, tv_to_uniform(p), lemma1_bound(table.n, k)))
    return out


def first_nonvacuous_k(n: int) -> int:
    """Smallest k with the lemma bound at most 1."""
    k = math.ceil((n * n + n) * math.log(2) / -math.log1p(-1.0 / (500 * n ** 5)))
    while log2_lemma1_bound(n, k) > 0:
        k += 1
    while k > 0 and log2_lemma1_bound(n, k - 1) <= 0:
        k -= 1
    return k


@dataclass(frozen=True)
class GapResult:
    n: int
    second_eigenvalue: float
    gap: float
    lemma_rate: float
    comparison_rate: float
    symmetric: bool
    doubly_stochastic: bool


def comparison_bound(n: int, diameter: float | None = None) -> float:
    """eta / diam^2 with eta = 1/(6n) and default generator diameter 9 n^2."""
    diam = 9 * n * n if diameter is None else diameter
    return (1.0 / (6 * n)) / diam ** 2


def walk_spectral_gap(table: GroupTable) -> GapResult:
    if table.n > EIG_MAX_QUBITS:
        raise CapacityError(f"dense eigensolve limited to n <= {EIG_MAX_QUBITS}")
    T = table.transition_matrix().toarray()
    symmetric = bool(np.allclose(T, T.T, atol=1e-14))
    doubly = bool(np.allclose(T.sum(axis=0), 1) and np.allclose(T.sum(axis=1), 1))
    sv = np.sort(np.abs(np.linalg.eigvalsh(T)) if symmetric else np.linalg.svd(T, compute_uv=False))[::-1]
    second = float(sv[1]) if sv.size > 1 else 0.0
    second = max(second, 0.0)
    return GapResult(table.n, second, 1.0 - second, 1.0 / (500 * table.n ** 5),
                     comparison_bound(table.n), symmetric, doubly)


@dataclass(frozen=True)
class Lemma1Certificate:
    """Evidence that ``tv(k) <= bound(k)`` for every k where the bound is at most 1.

    ``tv_at_k0`` is exact (matrix power).  Beyond k0 the symmetric walk obeys
    ``tv(k) <= (1/2) sqrt|G| lambda*^k``; if that envelope sits below the
    bound at k0 and decays at least as fast, it stays below for all k >= k0.
    """
    n: int
    k0: int
    tv_at_k0: float
    bound_at_k0: float
    lambda_star: float
    log2_envelope_at_k0: float
    grid: tuple[TVResult, ...]

    @property
    def holds(self) -> bool:
        rate_ok = math.log2(self.lambda_star) <= math.log1p(-1.0 / (500 * self.n ** 5)) / math.log(2) \
            if self.lambda_star > 0 else True
        envelope_ok = self.log2_envelope_at_k0 <= log2_lemma1_bound(self.n, self.k0)
        return (self.tv_at_k0 <= self.bound_at_k0 and rate_ok and envelope_ok
                and all(r.holds for r in self.grid))


def lemma1_certificate(table: GroupTable, grid_points: int = 24) -> Lemma1Certificate:
    n = table.n
    gap = walk_spectral_gap(table)
    if not gap.symmetric:
        raise InputError("the spectral envelope needs a symmetric walk")
    k0 = first_nonvacuous_k(n)
    at_k0 = tv_distance(exact_walk_distribution(table, k0), n)
    lam = gap.second_eigenvalue
    envelope = math.log2(0.5 * math.sqrt(table.order)) + (k0 * math.log2(lam) if lam > 0 else -math.inf)
    ks = sorted(set(int(k) for k in np.geomspace(1, 4 * (table.diameter + 1) ** 2 + 64, grid_points)))
    return Lemma1Certificate(n, k0, at_k0.tv, at_k0.bound, lam, envelope, tuple(tv_curve(table, ks)))


# --- Z-string mixing -----------------------------------------------------------

@lru_cache(maxsize=8)
def _zstring_perms(n: int) -> np.ndarray:
    """perm[s, y] = g_s^-T y for every generator s."""
    ys = np.arange(1 << n, dtype=np.int64)
    out = []
    for g in generators(n):
        m = g.inverse().transpose()
        out.append(np.array([m.apply(int(y)) for y in ys], dtype=np.int64))
    return np.array(out)


@lru_cache(maxsize=1)
def _local_invT_table() -> np.ndarray:
    """tab[g, v] = local_group()[g]^-T v for 2-bit values v."""
    return np.array([[m.inverse().transpose().apply(v) for v in range(4)] for m in local_group()], dtype=np.int64)


@dataclass(frozen=True)
class ZStringMixing:
    n: int
    k: int
    tv: float
    mode: str
    trials: int | None = None
    seed: int | None = None
    # TV(uniform on nonzero strings, uniform on all strings), equals 2^-n
    nonzero_vs_all: float = 0.0


def zstring_distribution(n: int, k: int) -> np.ndarray:
    """Exact law of ``M^-T e_1`` for M ~ sigma^{*k}, over all 2^n strings."""
    if n > ORBIT_MAX_QUBITS:
        raise CapacityError(f"exact Z-string mixing limited to n <= {ORBIT_MAX_QUBITS}")
    perms = _zstring_perms(n)
    p = np.zeros(1 << n)
    p[1 << (n - 1)] = 1.0
    for _ in range(k):
        nxt = np.zeros_like(p)
        for perm in perms:
            nxt[perm] += p
        p = nxt / len(perms)
    return p


def _tv_nonzero(p: np.ndarray) -> float:
    u = np.full(p.size, 1.0 / (p.size - 1))
    u[0] = 0.0
    return 0.5 * float(np.abs(p - u).sum())


def zstring_uniformity(n: int, k: int, mode: str = "exact", trials: int = 10_000, seed: int = 0,
                       workers: int = 1) -> ZStringMixing:
    extra = 2.0 ** -n
    if mode == "exact":
        return ZStringMixing(n, k, _tv_nonzero(zstring_distribution(n, k)), mode, nonzero_vs_all=extra)
    if mode != "sampled":
        raise InputError(f"unknown mode {mode!r}")
    if not 2 <= n <= 30:
        raise InputError("n must be in [2, 30]")
    tab = _local_invT_table()

    def run(g: np.random.Generator, count: int) -> np.ndarray:
        y = np.full(count, 1 << (n - 1), dtype=np.int64)
        for _ in range(k):
            site = g.integers(1, n + 1, size=count)
            elem = g.integers(0, 6, size=count)
            a = n - site            # bit position of qubit `site`
            b = n - 1 - (site % n)  # bit position of the next qubit
            v = (((y >> a) & 1) << 1) | ((y >> b) & 1)
            w = tab[elem, v]
            y = y & ~((1 << a) | (1 << b))
            y = y | (((w >> 1) & 1) << a) | ((w & 1) << b)
        return y

    ys = rngmod.concat(rngmod.chunked_map(run, trials, seed, "zstring", workers)).astype(np.int64)
    vals, counts = np.unique(ys, return_counts=True)
    size = (1 << n) - 1
    emp = counts / trials
    # strings never observed contribute their full uniform mass
    tv = 0.5 * (float(np.abs(emp[vals != 0] - 1.0 / size).sum())
                + float(emp[vals == 0].sum())
                + (size - int(np.count_nonzero(vals))) / size)
    return ZStringMixing(n, k, tv, mode, trials, seed, extra)


def site_histogram(n: int, draws: int, seed: int = 0) -> np.ndarray:
    g = rngmod.generator(seed, "sigma")
    sites = g.integers(1, n + 1, size=draws)
    return np.bincount(sites, minlength=n + 1)[1:]
