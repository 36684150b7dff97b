"""Dense statevector simulation of local random circuits, plus exact
two-qubit moment operators.

A circuit of d gates draws, at each step, a periodic site pair
(i, i+1 mod n) and a two-qubit gate from one of two measures:

* ``"haar"``: Haar-random SU(4);
* ``"zeta"``: with probability 1/2 a uniformly random reversible circuit
  from GL(2, 2) (a basis permutation), otherwise ``e^{i phi Z} (x) 1`` on the
  first qubit of the pair with uniform phi.

Qubit 1 is the most significant bit of a basis index.  All moments are
functions of ``|<psi|U|init>|`` so the global phase of a gate never matters.

Moment operators ``M(nu, t) = E U^{(x)t} (x) conj(U)^{(x)t}`` on two qubits
are real for both measures used here and are stored as real symmetric
matrices of size ``16^t``.  Index order: the t ket digits first, then the t
bra digits, each digit in 0..3 and the first digit most significant.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy import sparse

from . import rng as rngmod
from .bounds import theorem3_rhs
from .errors import CapacityError, InputError
from .f2walk import local_group, site_qubits
from .phasewalk import AuxStep
from .stats import Estimate, mean_stderr

MAX_QUBITS = 12
MAX_MOMENT_T = 3
UNIT_TOL = 1e-10
PSD_TOL = -1e-8
MEASURES = ("haar", "zeta")


@dataclass(frozen=True)
class StateVector:
    n: int
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not 1 <= self.n <= MAX_QUBITS:
            raise CapacityError(f"dense simulation supports 1 <= n <= {MAX_QUBITS}")
        if self.amplitudes.shape != (1 << self.n,):
            raise InputError(f"expected {1 << self.n} amplitudes")
        if abs(np.linalg.norm(self.amplitudes) - 1.0) > UNIT_TOL:
            raise InputError("state is not normalized")

    @classmethod
    def zero(cls, n: int) -> "StateVector":
        a = np.zeros(1 << n, dtype=complex)
        a[0] = 1.0
        return cls(n, a)

    @classmethod
    def plus(cls, n: int) -> "StateVector":
        return cls(n, np.full(1 << n, (1 << n) ** -0.5, dtype=complex))

    @classmethod
    def basis(cls, n: int, x: int) -> "StateVector":
        a = np.zeros(1 << n, dtype=complex)
        a[x] = 1.0
        return cls(n, a)

    def overlap(self, other: "StateVector") -> complex:
        """<self|other>."""
        return complex(np.vdot(self.amplitudes, other.amplitudes))


@dataclass(frozen=True)
class TwoQubitGate:
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = self.matrix
        if m.shape != (4, 4):
            raise InputError("a two-qubit gate is 4x4")
        if np.max(np.abs(m @ m.conj().T - np.eye(4))) > UNIT_TOL:
            raise InputError("gate is not unitary")


def random_state(n: int, rng: np.random.Generator) -> StateVector:
    """Haar-random pure state."""
    v = rng.standard_normal(1 << n) + 1j * rng.standard_normal(1 << n)
    return StateVector(n, v / np.linalg.norm(v))


def _resolve_state(n: int, spec) -> StateVector:
    if isinstance(spec, StateVector):
        if spec.n != n:
            raise InputError("state dimension mismatch")
        return spec
    if spec in (None, "zero"):
        return StateVector.zero(n)
    if spec == "plus":
        return StateVector.plus(n)
    raise InputError(f"unknown state {spec!r}; use 'zero', 'plus' or a StateVector")


# --- gate sampling ---------------------------------------------------------------

def haar_unitaries(rng: np.random.Generator, count: int, dim: int = 4, special: bool = True) -> np.ndarray:
    """``count`` Haar unitaries of size dim, shape (count, dim, dim).

    QR of a complex Ginibre matrix with the phases of R's diagonal moved into
    Q.  With ``special`` the determinant is divided out (principal root), which
    only changes a global phase.
    """
    z = (rng.standard_normal((count, dim, dim)) + 1j * rng.standard_normal((count, dim, dim))) / math.sqrt(2.0)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r, axis1=1, axis2=2)
    q = q * (diag / np.abs(diag))[:, None, :]
    if special:
        q = q / (np.linalg.det(q) ** (1.0 / dim))[:, None, None]
    return q


def haar_su4(rng: np.random.Generator) -> TwoQubitGate:
    return TwoQubitGate(haar_unitaries(rng, 1)[0])


@lru_cache(maxsize=1)
def _perm_matrices() -> np.ndarray:
    """(6, 4, 4) real permutation matrices ``P[g x, x] = 1`` of GL(2, 2)."""
    out = np.zeros((6, 4, 4))
    for e, g in enumerate(local_group()):
        for x in range(4):
            out[e, g.apply(x), x] = 1.0
    return out


_ROT_SIGNS = np.array([1.0, 1.0, -1.0, -1.0])  # Z on the first qubit of the pair


def zeta_gate(kind: str, element: int | None = None, phi: float | None = None) -> TwoQubitGate:
    if kind == "group":
        return TwoQubitGate(_perm_matrices()[element].astype(complex))
    if kind == "rotation":
        return TwoQubitGate(np.diag(np.exp(1j * phi * _ROT_SIGNS)))
    raise InputError(f"unknown zeta kind {kind!r}")


def zeta_unitaries(rng: np.random.Generator, count: int) -> np.ndarray:
    rot = rng.random(count) < 0.5
    elem = rng.integers(0, 6, size=count)
    phi = rng.uniform(0.0, 2.0 * math.pi, size=count)
    perms = _perm_matrices()[elem].astype(complex)
    diag = np.exp(1j * phi[:, None] * _ROT_SIGNS[None, :])
    rots = diag[:, :, None] * np.eye(4)[None]
    return np.where(rot[:, None, None], rots, perms)


def _sample_gates(measure: str, rng: np.random.Generator, count: int) -> np.ndarray:
    if measure == "haar":
        return haar_unitaries(rng, count)
    if measure == "zeta":
        return zeta_unitaries(rng, count)
    raise InputError(f"unknown measure {measure!r}; choose from {MEASURES}")


# --- application -------------------------------------------------------------------

def apply_two_qubit(states: np.ndarray, gates: np.ndarray, a: int, b: int, n: int) -> np.ndarray:
    """Apply gates (B, 4, 4) to states (B, 2^n) on 0-based qubits (a, b); a is the high bit."""
    batch = states.shape[0]
    psi = states.reshape((batch,) + (2,) * n)
    psi = np.moveaxis(psi, (1 + a, 1 + b), (1, 2))
    shape = psi.shape
    psi = psi.reshape(batch, 4, -1)
    psi = np.matmul(gates, psi).reshape(shape)
    psi = np.moveaxis(psi, (1, 2), (1 + a, 1 + b))
    return psi.reshape(batch, 1 << n)


def _check_n(n: int) -> None:
    if not 2 <= n <= MAX_QUBITS:
        raise CapacityError(f"dense simulation supports 2 <= n <= {MAX_QUBITS}")


@dataclass(frozen=True)
class CircuitGate:
    site: int
    gate: TwoQubitGate


def sample_circuit(n: int, d: int, rng: np.random.Generator, measure: str = "haar") -> list[CircuitGate]:
    _check_n(n)
    sites = rng.integers(1, n + 1, size=d)
    gates = _sample_gates(measure, rng, d) if d else np.empty((0, 4, 4))
    return [CircuitGate(int(s), TwoQubitGate(g)) for s, g in zip(sites, gates)]


def replay(n: int, circuit, initial=None) -> StateVector:
    """Apply a gate list; entries may be ``CircuitGate`` or phase-walk ``AuxStep``."""
    _check_n(n)
    state = _resolve_state(n, initial).amplitudes[None, :].copy()
    for step in circuit:
        if isinstance(step, AuxStep):
            gate = zeta_gate(step.kind, step.element, step.phi)
            site = step.site
        else:
            gate, site = step.gate, step.site
        a, b = site_qubits(site, n)
        state = apply_two_qubit(state, gate.matrix[None], a, b, n)
    return StateVector(n, state[0])


def run_rqc(n: int, d: int, rng: np.random.Generator, measure: str = "haar", initial=None,
            return_circuit: bool = False):
    """``U_d ... U_1 |initial>``; with ``return_circuit`` also the sampled gate list."""
    circuit = sample_circuit(n, d, rng, measure)
    state = replay(n, circuit, initial)
    return (state, circuit) if return_circuit else state


def rqc_overlaps(n: int, checkpoints, trials: int, seed: int = 0, measure: str = "haar",
                 psi=None, initial=None, workers: int = 1) -> np.ndarray:
    """``<psi|U|initial>`` after each checkpoint depth, shape (trials, len(checkpoints))."""
    _check_n(n)
    checkpoints = sorted(int(c) for c in checkpoints)
    if checkpoints and checkpoints[0] < 0:
        raise InputError("depths must be >= 0")
    bra = _resolve_state(n, psi).amplitudes.conj()
    ket = _resolve_state(n, initial).amplitudes
    pairs = [site_qubits(s, n) for s in range(1, n + 1)]

    def run(g: np.random.Generator, count: int) -> np.ndarray:
        state = np.tile(ket, (count, 1))
        out = np.empty((count, len(checkpoints)), dtype=complex)
        depth = 0
        for ci, target in enumerate(checkpoints):
            while depth < target:
                sites = g.integers(1, n + 1, size=count)
                gates = _sample_gates(measure, g, count)
                for s in np.unique(sites):
                    mask = sites == s
                    state[mask] = apply_two_qubit(state[mask], gates[mask], *pairs[s - 1], n)
                depth += 1
            out[:, ci] = state @ bra
        return out

    return np.concatenate(rngmod.chunked_map(run, trials, seed, "rqc", workers))


def mc_moment_rqc(n: int, d: int, t: int, psi=None, trials: int = 1000, seed: int = 0,
                  measure: str = "haar", initial=None, workers: int = 1) -> Estimate:
    """Monte Carlo ``E |<psi|U|initial>|^{2t}`` over depth-d circuits (initial defaults to |0^n>)."""
    if t < 1 or trials < 1:
        raise InputError("need t >= 1 and trials >= 1")
    ov = rqc_overlaps(n, [d], trials, seed, measure, psi, initial, workers)[:, 0]
    return mean_stderr(np.abs(ov) ** (2 * t))


def moment_curve(n: int, depths, ts, trials: int, seed: int = 0, measure: str = "haar",
                 psi=None, initial=None, workers: int = 1) -> list[dict]:
    """One row per (d, t): estimate, stderr and both moment-bound right-hand sides.

    All depths share the same sampled circuits (prefixes), so rows along d are
    correlated but each row is individually unbiased.
    """
    depths = sorted(set(int(d) for d in depths))
    ov = rqc_overlaps(n, depths, trials, seed, measure, psi, initial, workers)
    rows = []
    for t in sorted(set(int(t) for t in ts)):
        for j, d in enumerate(depths):
            est = mean_stderr(np.abs(ov[:, j]) ** (2 * t))
            eq8 = theorem3_rhs(n, d, t, "eq8")
            eq9 = theorem3_rhs(n, d, t, "eq9")
            rows.append({"n": n, "d": d, "t": t, "estimate": est.estimate, "stderr": est.stderr,
                         "rhs_eq8": eq8.value, "rhs_eq9": eq9.value, "vacuous": eq8.vacuous,
                         "consistent": eq8.vacuous or est.estimate <= eq8.value + 3 * est.stderr})
    return rows


# --- exact Haar values -----------------------------------------------------------------------

def haar_exact_moment(N: int, t: int) -> Fraction:
    """``E |<psi|U|0>|^{2t} = 1 / binom(N+t-1, t)`` for Haar U in dimension N."""
    if N < 1 or t < 1:
        raise InputError("need N, t >= 1")
    return Fraction(1, math.comb(N + t - 1, t))


def log_haar_exact_moment(N: float, t: int) -> float:
    return math.lgamma(t + 1) + math.lgamma(N) - math.lgamma(N + t)


def haar_floor_ratio(n: int, t: int) -> float:
    """Ratio of the exact Haar moment to ``t!/2^{nt}``; tends to 1 as n grows."""
    return math.exp(log_haar_exact_moment(2.0 ** n, t) - (math.lgamma(t + 1) - n * t * math.log(2)))


def mc_haar_state_moment(N: int, t: int, trials: int, seed: int = 0) -> Estimate:
    """``|<0|psi>|^{2t}`` for Haar states drawn as normalized complex Gaussians."""
    def run(g, count):
        v = g.standard_normal((count, N)) + 1j * g.standard_normal((count, N))
        return np.abs(v[:, 0]) ** (2 * t) / np.sum(np.abs(v) ** 2, axis=1) ** t

    return mean_stderr(np.concatenate(rngmod.chunked_map(run, trials, seed, "haar")))


# --- moment operators -------------------------------------------------------------------------

@dataclass(frozen=True)
class MomentOperatorMatrix:
    t: int
    measure: str
    matrix: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return 16 ** self.t

    def hermitian_error(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)


def _check_t(t: int) -> None:
    if not 1 <= t <= MAX_MOMENT_T:
        raise CapacityError(f"moment operators are limited to 1 <= t <= {MAX_MOMENT_T} (dimension 16^t)")


def _digits(t: int) -> np.ndarray:
    """(16^t, 2t) base-4 digits of every index, most significant first."""
    idx = np.arange(16 ** t)
    return np.stack([(idx >> (2 * (2 * t - 1 - k))) & 3 for k in range(2 * t)], axis=1)


def _from_digits(dig: np.ndarray) -> np.ndarray:
    out = np.zeros(dig.shape[0], dtype=np.int64)
    for k in range(dig.shape[1]):
        out = (out << 2) | dig[:, k]
    return out


def moment_op_zeta_sparse(t: int) -> sparse.csr_matrix:
    """``M(zeta, t)`` as a sparse matrix.

    The group half averages six permutations of the index set (each digit
    mapped by g).  The rotation half is diagonal: averaging
    ``exp(i phi (sum_ket s - sum_bra s))`` over phi keeps exactly the entries
    where the number of ket digits with first qubit 1 equals that of the bra
    digits.
    """
    _check_t(t)
    dim = 16 ** t
    dig = _digits(t)
    cols = np.arange(dim)
    mat = sparse.csr_matrix((dim, dim))
    for e, g in enumerate(local_group()):
        table = np.array([g.apply(x) for x in range(4)])
        rows = _from_digits(table[dig])
        mat = mat + sparse.csr_matrix((np.full(dim, 1.0 / 12.0), (rows, cols)), shape=(dim, dim))
    high = dig >> 1
    keep = high[:, :t].sum(axis=1) == high[:, t:].sum(axis=1)
    mat = mat + sparse.diags(0.5 * keep.astype(float))
    return mat.tocsr()


def moment_op_zeta(t: int) -> MomentOperatorMatrix:
    return MomentOperatorMatrix(t, "zeta", moment_op_zeta_sparse(t).toarray())


def permutation_vectors(t: int) -> np.ndarray:
    """(16^t, t!) matrix whose columns are the vectorized permutation operators
    ``v_pi[i, j] = prod_l [i_l = j_pi(l)]``."""
    _check_t(t)
    dig = _digits(t)
    cols = []
    for pi in itertools.permutations(range(t)):
        ok = np.ones(dig.shape[0], dtype=bool)
        for l in range(t):
            ok &= dig[:, l] == dig[:, t + pi[l]]
        cols.append(ok.astype(float))
    return np.stack(cols, axis=1)


def moment_op_haar(t: int) -> MomentOperatorMatrix:
    """Orthogonal projector onto span of permutation operators, ``V G^+ V^T``.

    For t < 4 (the local dimension) the fixed space of U^{(x)t,t} is the same
    for U(4) and SU(4), so this is the Haar moment operator of either group.
    """
    v = permutation_vectors(t)
    gram = v.T @ v
    return MomentOperatorMatrix(t, "haar", v @ np.linalg.pinv(gram) @ v.T)


def tensor_power(u: np.ndarray, t: int) -> np.ndarray:
    """``U^{(x)t} (x) conj(U)^{(x)t}``."""
    out = np.ones((1, 1), dtype=complex)
    for _ in range(t):
        out = np.kron(out, u)
    for _ in range(t):
        out = np.kron(out, u.conj())
    return out


def mc_moment_operator(t: int, samples: int, seed: int = 0, measure: str = "haar") -> np.ndarray:
    """Sample average of ``U^{(x)t,t}`` (for cross-checking the exact operators, t <= 2)."""
    _check_t(t)
    total = np.zeros((16 ** t, 16 ** t), dtype=complex)
    for part in rngmod.chunked_map(lambda g, c: _sample_gates(measure, g, c), samples, seed, "haar"):
        for u in part:
            total += tensor_power(u, t)
    return total / samples


@dataclass(frozen=True)
class PSDCheck:
    t: int
    min_eig: float
    holds: bool
    zeta_eig_range: tuple[float, float]
    haar_rank: int
    haar_idempotence_error: float
    absorption_error: float     # max |M_zeta M_haar - M_haar|

    def to_dict(self) -> dict:
        return {"t": self.t, "min_eig": self.min_eig, "holds": self.holds,
                "zeta_eig_min": self.zeta_eig_range[0], "zeta_eig_max": self.zeta_eig_range[1],
                "haar_rank": self.haar_rank, "haar_idempotence_error": self.haar_idempotence_error,
                "absorption_error": self.absorption_error}


def psd_domination_check(t: int) -> PSDCheck:
    """Smallest eigenvalue of ``M(zeta, t) - M(haar, t)`` and projector diagnostics."""
    zs = moment_op_zeta_sparse(t)
    mh = moment_op_haar(t).matrix
    mz = zs.toarray()
    zeta_eigs = np.linalg.eigvalsh(mz)
    mz -= mh
    min_eig = float(np.linalg.eigvalsh(mz)[0])
    del mz
    idem = float(np.max(np.abs(mh @ mh - mh)))
    absorb = float(np.max(np.abs(zs @ mh - mh)))
    rank = int(round(np.trace(mh)))
    return PSDCheck(t, min_eig, min_eig >= PSD_TOL, (float(zeta_eigs[0]), float(zeta_eigs[-1])),
                    rank, idem, absorb)


def export_operator(op: MomentOperatorMatrix, path) -> tuple[Path, Path]:
    """Write ``<path>.bin`` (row-major complex128) and ``<path>.json`` ({t, dim, ...})."""
    base = Path(path)
    bin_path, json_path = base.with_suffix(".bin"), base.with_suffix(".json")
    np.ascontiguousarray(op.matrix, dtype=np.complex128).tofile(bin_path)
    header = {"t": op.t, "dim": op.dim, "measure": op.measure, "dtype": "complex128", "order": "row-major"}
    json_path.write_text(json.dumps(header, sort_keys=True) + "\n")
    return bin_path, json_path


def load_operator(path) -> MomentOperatorMatrix:
    base = Path(path)
    header = json.loads(base.with_suffix(".json").read_text())
    data = np.fromfile(base.with_suffix(".bin"), dtype=np.complex128).reshape(header["dim"], header["dim"])
    return MomentOperatorMatrix(header["t"], header["measure"], data)


# --- consistency checks ----------------------------------------------------------------------------

def untouched_frequency(n: int, d: int, trials: int, seed: int = 0) -> Estimate:
    """Fraction of depth-d site sequences leaving at least one qubit untouched."""
    _check_n(n)
    a = np.array([site_qubits(s, n)[0] for s in range(1, n + 1)])
    b = np.array([site_qubits(s, n)[1] for s in range(1, n + 1)])

    def run(g, count):
        sites = g.integers(0, n, size=(count, d))
        touched = np.zeros((count, n), dtype=bool)
        rows = np.repeat(np.arange(count), d)
        touched[rows, a[sites].ravel()] = True
        touched[rows, b[sites].ravel()] = True
        return (~touched.all(axis=1)).astype(float)

    return mean_stderr(np.concatenate(rngmod.chunked_map(run, trials, seed, "coupon")))


def half_trace_norm(psi: StateVector, phi: StateVector) -> float:
    """``(1/2) || |psi><psi| - |phi><phi| ||_1`` by eigendecomposition."""
    diff = np.outer(psi.amplitudes, psi.amplitudes.conj()) - np.outer(phi.amplitudes, phi.amplitudes.conj())
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(diff))))


@dataclass(frozen=True)
class CauchySchwarzCheck:
    lhs: Estimate
    rhs: Estimate          # E_{2d} |<+|U|+>|^{2t}
    holds: bool


def cauchy_schwarz_check(n: int, d: int, t: int, psi=None, trials: int = 2000, seed: int = 0,
                         measure: str = "zeta") -> CauchySchwarzCheck:
    """``E_d |<psi|U|+>|^{2t} <= sqrt(E_{2d} |<+|U|+>|^{2t})`` up to 3 combined standard errors."""
    lhs = mc_moment_rqc(n, d, t, psi, trials, seed, measure, initial="plus")
    rhs = mc_moment_rqc(n, 2 * d, t, "plus", trials, seed + 1, measure, initial="plus")
    root = math.sqrt(max(rhs.estimate, 0.0))
    err = lhs.stderr + (rhs.stderr / (2 * root) if root > 0 else math.sqrt(rhs.stderr))
    return CauchySchwarzCheck(lhs, rhs, lhs.estimate <= root + 3 * err)
