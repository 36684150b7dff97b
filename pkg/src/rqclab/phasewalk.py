"""Random walks on phase states ``2^{-n/2} sum_x e^{i theta_x} |x>``.

Two walks act on this family:

* the auxiliary walk: each step picks a periodic site pair (i, i+1) and, with
  probability 1/2 each, applies a uniformly random reversible two-qubit
  circuit (a basis permutation) or ``e^{i phi Z} (x) 1`` on qubit i with
  uniform phi;
* the ideal walk: m rotations ``e^{i phi Z^y}`` with y uniform over all 2^n
  strings (including 0...0, a global phase) and uniform phi.

The ideal walk's moment operator is diagonal in the basis of tuple pairs;
the eigenvalue of a pair is the probability q that a uniform y fails to
distinguish it, so the 2t-th moment after m steps is
``2^{-2nt} sum_pairs q^m``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.stats import binom

from . import rng as rngmod
from .bits import BitString, as_bitstring, parity_array, qubit_signs, sign_matrix
from .errors import InputError
from .f2walk import F2Matrix, embed, local_group, site_qubits
from .fourier import TuplePair, build_f, parity_pair, support_distribution, support_report
from .stats import Estimate, mean_stderr

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class PhaseVector:
    n: int
    phases: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.phases.shape != (1 << self.n,):
            raise InputError(f"expected {1 << self.n} phases, got shape {self.phases.shape}")

    @classmethod
    def plus(cls, n: int) -> "PhaseVector":
        return cls(n, np.zeros(1 << n))

    def amplitudes(self) -> np.ndarray:
        return np.exp(1j * self.phases) / math.sqrt(1 << self.n)

    def reduced(self) -> np.ndarray:
        """Phases mod 2 pi, for serialization only."""
        return np.mod(self.phases, TWO_PI)


@dataclass(frozen=True)
class DiagonalRotation:
    y: BitString
    phi: float


@dataclass(frozen=True)
class AuxStep:
    site: int
    kind: str              # "group" or "rotation"
    element: int | None = None
    phi: float | None = None

    def __post_init__(self):
        if self.kind not in ("group", "rotation"):
            raise InputError(f"unknown step kind {self.kind!r}")

    def as_dict(self, n: int) -> dict:
        y = None
        if self.kind == "rotation":
            y = str(BitString(1 << (n - self.site), n))
        return {"kind": self.kind, "site": self.site, "y": y, "phi": self.phi, "element": self.element}


def monomial_vector(n: int, y: int) -> np.ndarray:
    """``p_y(x)`` for all x."""
    x = np.arange(1 << n, dtype=np.int64)
    return 1 - 2 * parity_array(x & y).astype(np.int64)


def apply_rotation(state: PhaseVector, rot: DiagonalRotation) -> PhaseVector:
    y = as_bitstring(rot.y, state.n)
    return PhaseVector(state.n, state.phases + rot.phi * monomial_vector(state.n, y.value))


def apply_f2_perm(state: PhaseVector, m: F2Matrix) -> PhaseVector:
    """Basis relabelling x -> Mx: ``theta'_{Mx} = theta_x``."""
    if m.n != state.n:
        raise InputError("dimension mismatch")
    out = np.empty_like(state.phases)
    out[m.permutation()] = state.phases
    return PhaseVector(state.n, out)


def plus_overlap(state: PhaseVector) -> complex:
    return complex(np.mean(np.exp(1j * state.phases)))


# --- auxiliary walk ------------------------------------------------------------

def sample_aux_steps(n: int, d: int, rng: np.random.Generator) -> list[AuxStep]:
    if n < 2:
        raise InputError("the auxiliary walk needs n >= 2")
    steps = []
    for _ in range(d):
        site = int(rng.integers(1, n + 1))
        if rng.random() < 0.5:
            steps.append(AuxStep(site, "group", element=int(rng.integers(0, 6))))
        else:
            steps.append(AuxStep(site, "rotation", phi=float(rng.uniform(0.0, TWO_PI))))
    return steps


def run_aux_steps(n: int, steps: list[AuxStep], state: PhaseVector | None = None) -> PhaseVector:
    state = PhaseVector.plus(n) if state is None else state
    for s in steps:
        if s.kind == "group":
            state = apply_f2_perm(state, embed(local_group()[s.element], *site_qubits(s.site, n), n))
        else:
            state = apply_rotation(state, DiagonalRotation(BitString(1 << (n - s.site), n), s.phi))
    return state


def trace_to_json(n: int, steps) -> str:
    out = []
    for s in steps:
        if isinstance(s, AuxStep):
            out.append(s.as_dict(n))
        else:
            out.append({"kind": "rotation", "site": None, "y": str(as_bitstring(s.y, n)), "phi": s.phi})
    return json.dumps(out)


def trace_from_json(n: int, text: str) -> list:
    out = []
    for rec in json.loads(text):
        if rec.get("site") is None:
            out.append(DiagonalRotation(as_bitstring(rec["y"], n), float(rec["phi"])))
        else:
            out.append(AuxStep(int(rec["site"]), rec["kind"], rec.get("element"), rec.get("phi")))
    return out


@lru_cache(maxsize=16)
def _aux_tables(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gather indices ``gather[site, elem, x] = M^-1 x`` and rotation signs per site."""
    gather = np.empty((n + 1, 6, 1 << n), dtype=np.int64)
    signs = np.zeros((n + 1, 1 << n))
    for site in range(1, n + 1):
        for e, g in enumerate(local_group()):
            gather[site, e] = embed(g, *site_qubits(site, n), n).inverse().permutation()
        signs[site] = qubit_signs(n, site)
    return gather, signs


def aux_overlaps(n: int, checkpoints, trials: int, seed: int = 0, workers: int = 1) -> np.ndarray:
    """``<+|U|+>`` after each checkpoint depth, shape (trials, len(checkpoints))."""
    if n < 2:
        raise InputError("the auxiliary walk needs n >= 2")
    checkpoints = sorted(int(c) for c in checkpoints)
    gather, signs = _aux_tables(n)
    ident = np.arange(1 << n)

    def run(g: np.random.Generator, count: int) -> np.ndarray:
        theta = np.zeros((count, 1 << n))
        out = np.empty((count, len(checkpoints)), dtype=complex)
        depth = 0
        for ci, target in enumerate(checkpoints):
            while depth < target:
                site = g.integers(1, n + 1, size=count)
                rot = g.random(count) < 0.5
                elem = g.integers(0, 6, size=count)
                phi = g.uniform(0.0, TWO_PI, size=count)
                idx = np.where(rot[:, None], ident[None, :], gather[site, elem])
                theta = np.take_along_axis(theta, idx, axis=1)
                theta += (rot * phi)[:, None] * signs[site]
                depth += 1
            out[:, ci] = np.exp(1j * theta).mean(axis=1)
        return out

    return np.concatenate(rngmod.chunked_map(run, trials, seed, "aux", workers))


def mc_moment_aux(n: int, d: int, t: int, trials: int, seed: int = 0, workers: int = 1) -> Estimate:
    """Monte Carlo ``E |<+^n|U|+^n>|^{2t}`` over d steps of the auxiliary walk."""
    if d < 0 or t < 1 or trials < 1:
        raise InputError("need d >= 0, t >= 1, trials >= 1")
    ov = aux_overlaps(n, [d], trials, seed, workers)[:, 0]
    return mean_stderr(np.abs(ov) ** (2 * t))


# --- ideal walk ------------------------------------------------------------------

def sample_ideal_trace(n: int, m: int, rng: np.random.Generator) -> list[DiagonalRotation]:
    ys = rng.integers(0, 1 << n, size=m)
    phis = rng.uniform(0.0, TWO_PI, size=m)
    return [DiagonalRotation(BitString(int(y), n), float(p)) for y, p in zip(ys, phis)]


def ideal_overlaps(n: int, checkpoints, trials: int, seed: int = 0, workers: int = 1) -> np.ndarray:
    checkpoints = sorted(int(c) for c in checkpoints)
    S = sign_matrix(n).astype(float)

    def run(g: np.random.Generator, count: int) -> np.ndarray:
        theta = np.zeros((count, 1 << n))
        out = np.empty((count, len(checkpoints)), dtype=complex)
        depth = 0
        for ci, target in enumerate(checkpoints):
            while depth < target:
                y = g.integers(0, 1 << n, size=count)
                phi = g.uniform(0.0, TWO_PI, size=count)
                theta += phi[:, None] * S[y]
                depth += 1
            out[:, ci] = np.exp(1j * theta).mean(axis=1)
        return out

    return np.concatenate(rngmod.chunked_map(run, trials, seed, "ideal", workers))


def mc_moment_ideal(n: int, m: int, t: int, trials: int, seed: int = 0, workers: int = 1) -> Estimate:
    if m < 0 or t < 1 or trials < 1:
        raise InputError("need m >= 0, t >= 1, trials >= 1")
    ov = ideal_overlaps(n, [m], trials, seed, workers)[:, 0]
    return mean_stderr(np.abs(ov) ** (2 * t))


@lru_cache(maxsize=64)
def _zero_count_weights(n: int, t: int) -> tuple[tuple[int, int], ...]:
    """(number of non-distinguishing y, number of ordered pairs) classes."""
    size = 1 << n
    return tuple((size - s, w) for s, w in support_distribution(n, t).items())


def exact_moment_ideal(n: int, m, t: int) -> Fraction:
    """Exact 2t-th moment after m ideal rotations; ``m=math.inf`` gives the limit."""
    size = 1 << n
    total = Fraction(0)
    for zeros, w in _zero_count_weights(n, t):
        if m == math.inf:
            total += w if zeros == size else 0
        else:
            total += w * Fraction(zeros, size) ** int(m)
    return total / (1 << (2 * n * t))


def permutation_floor(n: int, t: int) -> Fraction:
    """2^{-2nt} times the number of permutation-related pairs."""
    return exact_moment_ideal(n, math.inf, t)


@dataclass(frozen=True)
class IdealSpectrum:
    n: int
    t: int
    eigenvalues: dict  # Fraction q -> multiplicity (ordered pairs)
    second_highest: Fraction
    parity_q: Fraction | None

    @property
    def gap(self) -> Fraction:
        return 1 - self.second_highest

    @property
    def achieved_by_parity(self) -> bool:
        return self.parity_q is not None and self.parity_q == self.second_highest


def padded_parity_pair(n: int, t: int) -> TuplePair:
    """Parity pair extended by common all-zero strings up to length t >= 2^(n-1)."""
    base = parity_pair(n)
    if t < base.t:
        raise InputError(f"parity pair needs t >= {base.t}")
    pad = tuple(BitString(0, n) for _ in range(t - base.t))
    return TuplePair(base.first + pad, base.second + pad)


def pair_q(pair: TuplePair) -> Fraction:
    return support_report(build_f(pair)).zero_prob


def ideal_spectrum(n: int, t: int) -> IdealSpectrum:
    size = 1 << n
    eig: dict[Fraction, int] = {}
    for zeros, w in _zero_count_weights(n, t):
        q = Fraction(zeros, size)
        eig[q] = eig.get(q, 0) + w
    eig = dict(sorted(eig.items(), reverse=True))
    nontrivial = [q for q in eig if q < 1]
    second = nontrivial[0] if nontrivial else Fraction(0)
    pq = pair_q(padded_parity_pair(n, t)) if t >= (1 << (n - 1)) else None
    return IdealSpectrum(n, t, eig, second, pq)


# --- blocking step -----------------------------------------------------------------

@dataclass(frozen=True)
class BlockStatistics:
    d: int
    k: int
    n: int
    p_block: float        # Pr[block of 4k draws has >= 1 rotation and >= k group gates]
    p_rotation: float     # Pr[>= 1 rotation in 4k draws]
    p_pair: float         # Pr[left block has a rotation and right block >= k group gates]
    pairs: int            # floor(d / 8k)
    p_half_pairs: float   # exact Pr[at least half of the pairs succeed]
    hoeffding: float      # 1 - exp(-2 (d/8k) (1/2 - 2^-n)^2)
    hoeffding_simplified: float  # 1 - exp(-d/20k)
    claimed_block: float  # 1 - 2^(-n-1)

    @property
    def claim_holds(self) -> bool:
        return 1.0 - self.p_block <= 2.0 ** (-self.n - 1)


def block_statistics(d: int, k: int, n: int) -> BlockStatistics:
    if k < 1 or d < 4 * k:
        raise InputError("need k >= 1 and d >= 4k")
    draws = 4 * k
    # number of group gates in the block ~ Bin(4k, 1/2); need k <= G <= 4k - 1
    p_block = float(binom.cdf(draws - 1, draws, 0.5) - binom.cdf(k - 1, draws, 0.5))
    p_rot = 1.0 - 2.0 ** -draws
    p_group = float(binom.sf(k - 1, draws, 0.5))
    p_pair = p_rot * p_group
    pairs = d // (8 * k)
    p_half = float(binom.sf(math.ceil(pairs / 2) - 1, pairs, p_pair)) if pairs > 0 else 1.0
    hoeff = 1.0 - math.exp(-2.0 * (d / (8 * k)) * (0.5 - 2.0 ** -n) ** 2)
    simple = 1.0 - math.exp(-d / (20 * k))
    return BlockStatistics(d, k, n, p_block, p_rot, p_pair, pairs, p_half, hoeff, simple, 1.0 - 2.0 ** (-n - 1))
