"""Closed-form moment and complexity bounds.

Every formula is evaluated in natural-log space where overflow is possible;
``log2`` in the formulas is base 2, and ``log`` without a base is
configurable (``log_base``).  The constants K, B, C, C', C_1..C_4 and
lambda_G exist but have no known values; the defaults below are
placeholders, not derived quantities.

Vacuous results (lower bounds <= 0, probability bounds >= 1) are returned
with ``vacuous=True``, never suppressed.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np
from scipy.special import logsumexp
from scipy.stats import binom

from .errors import DomainError, InputError

LN2 = math.log(2.0)
THM1_DELTA_MAX = math.sqrt(1.0 - 2.0 ** -0.5)

# placeholder constants (no values are known)
DEFAULT_K = 1.0
DEFAULT_B = 2.0
DEFAULT_LAMBDA_G = 0.1
THM3_CONSTANTS = (40000.0, 16000.0, 40000.0, 16000.0)


@dataclass(frozen=True)
class BoundParams:
    n: int
    d: float = 1.0
    t: int = 1
    delta: float = 0.1
    K: float = DEFAULT_K
    B: float = DEFAULT_B
    lambda_G: float = DEFAULT_LAMBDA_G
    C1: float = THM3_CONSTANTS[0]
    C2: float = THM3_CONSTANTS[1]
    C3: float = THM3_CONSTANTS[2]
    C4: float = THM3_CONSTANTS[3]
    C: float = 40000.0
    Cprime: float = 200.0
    k_mix: float | None = None
    gateset_size: float = 2.0
    log_base: float = 2.0

    def __post_init__(self):
        if self.n < 1:
            raise DomainError("n must be >= 1")
        consts = (self.K, self.B, self.C1, self.C2, self.C3, self.C4, self.C, self.Cprime, self.gateset_size)
        if any(c <= 0 for c in consts):
            raise DomainError("constants must be strictly positive")
        if not 0.0 < self.lambda_G <= 1.0:
            raise DomainError("lambda_G must lie in (0, 1]")
        if not 0.0 <= self.delta < 1.0:
            raise DomainError("delta must lie in [0, 1)")

    @property
    def k(self) -> float:
        return default_k_mix(self.n) if self.k_mix is None else self.k_mix


def default_k_mix(n: int) -> float:
    return 2000.0 * n ** 7


@dataclass(frozen=True)
class BoundReport:
    formula: str
    inputs: dict
    value: float
    vacuous: bool
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, default=float)


def _exp(logv: float) -> float:
    return math.exp(logv) if logv < 709.0 else math.inf


def _log(x: float, base: float) -> float:
    return math.log(x) / math.log(base)


def log_factorial(t: int) -> float:
    return math.lgamma(t + 1.0)


# --- moment bounds ------------------------------------------------------------

def _log_moment_rhs(n, d, t, floor_log, rate_base, c_exp, c_rate) -> tuple[float, dict]:
    n7 = float(n) ** 7
    log_terms = [floor_log, -d / (c_exp * n7), (d / (c_rate * n7)) * math.log(rate_base)]
    log_root = 0.5 * float(logsumexp(log_terms))
    log_coupon = math.log(n) - d / n
    total = float(np.logaddexp(log_root, log_coupon))
    terms = {"floor": _exp(log_terms[0]), "mixing": _exp(log_terms[1]), "rate": _exp(log_terms[2]),
             "rate_base": rate_base, "coupon": _exp(log_coupon), "log_value": total}
    return total, terms


def cor1_rhs(n: int, d: float, t: int, C1: float, C2: float, C3: float, C4: float) -> tuple[BoundReport, BoundReport]:
    """Both moment upper bounds with constants C_1..C_4 (first: all t; second: t ~ 2^n/2)."""
    if n < 1 or t < 1 or d < 0:
        raise DomainError("need n, t >= 1 and d >= 0")
    if min(C1, C2, C3, C4) <= 0:
        raise DomainError("constants must be positive")
    inputs = {"n": n, "d": d, "t": t, "C1": C1, "C2": C2, "C3": C3, "C4": C4}
    floor_a = log_factorial(t) - n * t * LN2
    base_a = 1.0 - 1.0 / (2 * t) + 3.0 * 2.0 ** -n
    la, ta = _log_moment_rhs(n, d, t, floor_a, base_a, C1, C2)
    floor_b = log_factorial(t) + (2.0 ** n / 2.0 - n * t) * LN2
    base_b = 1.0 - 1.0 / (2 * (n + 1)) + 3.0 * 2.0 ** -n
    lb, tb = _log_moment_rhs(n, d, t, floor_b, base_b, C3, C4)
    return (BoundReport("moment_rhs_all_t", inputs, _exp(la), la >= 0.0, ta),
            BoundReport("moment_rhs_large_t", inputs, _exp(lb), lb >= 0.0, tb))


def theorem3_rhs(n: int, d: float, t: int, variant: str = "eq8") -> BoundReport:
    """Moment bound for Haar random circuits; ``eq8`` for all t, ``eq9`` for t ~ 2^n/2.

    The additive coupon-collector term is ``n e^{-d/n}``.  One display in the
    Markov/union-bound step writes ``n e^{d/n}``; that sign is taken to be a
    typo since every other occurrence decays.
    """
    a, b = cor1_rhs(n, d, t, *THM3_CONSTANTS)
    if variant == "eq8":
        return BoundReport("theorem3_eq8", a.inputs, a.value, a.vacuous, a.extras)
    if variant == "eq9":
        return BoundReport("theorem3_eq9", b.inputs, b.value, b.vacuous, b.extras)
    raise InputError(f"unknown variant {variant!r}")


# --- complexity lower bounds -----------------------------------------------------------

def _bracket_unitary(delta: float) -> float:
    # 1 - 2 log2(1/(1 - delta^2)); exactly 0 at the threshold, not a rounding residue
    b = 1.0 + 2.0 * math.log1p(-delta * delta) / LN2
    return 0.0 if abs(b) < 1e-12 else b


def _tilde_delta(n, d, delta, c):
    # (1 - sqrt(1 - delta^2)) d / (c n^8 2^n), cancellation-free
    return -math.expm1(0.5 * math.log1p(-delta * delta)) * d / (c * float(n) ** 8 * 2.0 ** n)


def _unitary_bound(formula, n, d, delta, const, tilde_const, log_base, log_delta_base):
    if n < 2:
        raise DomainError("n must be >= 2 (log n appears in the denominator)")
    if not 0.0 <= delta <= THM1_DELTA_MAX + 1e-15:
        raise DomainError(f"delta must lie in [0, sqrt(1 - 2^-1/2)] = [0, {THM1_DELTA_MAX:.6f}]")
    if d < 1 or d > 2.0 ** (n / 2.0):
        raise DomainError("need 1 <= d <= 2^(n/2)")
    delta = min(delta, THM1_DELTA_MAX)
    bracket = _bracket_unitary(delta)
    if delta == 0.0:
        value = 0.0
    else:
        denom = const * float(n) ** 9 * _log(n, log_base) * _log(1.0 / delta, log_delta_base)
        value = d / denom * bracket
    inputs = {"n": n, "d": d, "delta": delta, "constant": const, "log_base": log_base}
    extras = {"bracket": bracket, "tilde_delta": _tilde_delta(n, d, delta, tilde_const)}
    return BoundReport(formula, inputs, value, value <= 0.0, extras)


def thm1_unitary_bound(n: int, d: float, delta: float, K: float = DEFAULT_K, log_base: float = 2.0) -> BoundReport:
    """Linear-growth lower bound on the unitary complexity at robustness tilde-delta."""
    return _unitary_bound("thm1_unitary", n, d, delta, K, 40000.0, log_base, log_base)


def _state_bound(formula, n, d, delta, const, const_inner):
    if not 0.0 < delta < 2.0 ** -0.5:
        raise DomainError("delta must lie in (0, 1/sqrt(2))")
    if n < 1 or d < 1 or d > 2.0 ** (n / 2.0):
        raise DomainError("need n >= 1 and 1 <= d <= 2^(n/2)")
    log2_ratio = math.log2(d / delta ** 2)
    bracket = (n - math.log2(math.sqrt(d) / (const_inner * float(n) ** 4))
               + 2.0 * math.log1p(-2.0 * delta * delta) / LN2)
    value = math.sqrt(d) / (const * float(n) ** 4 * log2_ratio) * bracket
    inputs = {"n": n, "d": d, "delta": delta, "constant": const, "inner_constant": const_inner}
    return BoundReport(formula, inputs, value, value <= 0.0, {"bracket": bracket, "log2_d_over_delta2": log2_ratio})


def thm1_state_bound(n: int, d: float, delta: float, K: float = DEFAULT_K) -> BoundReport:
    """Square-root growth lower bound on the state complexity at constant delta."""
    return _state_bound("thm1_state", n, d, delta, K, 200.0)


def thm2_bounds(n: int, d: float, delta: float, C: float, Cprime: float,
                log_base: float = 2.0) -> tuple[BoundReport, BoundReport]:
    """Discrete gate-set versions; one constant C serves both denominator and tilde-delta."""
    u = _unitary_bound("thm2_unitary", n, d, delta, C, C, log_base, log_base)
    s = _state_bound("thm2_state", n, d, delta, C, Cprime)
    return u, s


def intermediate_state_bound(n: int, t: float, gateset_size: float, delta: float) -> float:
    """R >= t / (2 log2|K|) (n - log2 t - log2(1/(1-delta^2)))."""
    return t / (2.0 * math.log2(gateset_size)) * (n - math.log2(t) + math.log1p(-delta * delta) / LN2)


def first_positive_n(d: float, delta: float, K: float = DEFAULT_K, n_max: int = 256) -> int | None:
    """Smallest n with a positive (non-vacuous) state bound at depth d."""
    for n in range(1, n_max + 1):
        if d <= 2.0 ** (n / 2.0) and thm1_state_bound(n, d, delta, K).value > 0:
            return n
    return None


# --- counting argument --------------------------------------------------------------

def markov_union_bound(n: int, t: int, R: float, gateset_size: float, delta: float,
                       moment_value: float) -> BoundReport:
    """``|K|^R * moment / (1 - delta^2)^t``, clipped at 1."""
    if not 0.0 <= moment_value <= 1.0:
        raise DomainError("moment must lie in [0, 1]")
    if gateset_size <= 0 or R < 0 or t < 1 or not 0.0 <= delta < 1.0:
        raise DomainError("invalid parameters")
    inputs = {"n": n, "t": t, "R": R, "gateset_size": gateset_size, "delta": delta, "moment": moment_value}
    if moment_value == 0.0:
        return BoundReport("markov_union", inputs, 0.0, False, {"log2_raw": -math.inf})
    log2_raw = R * math.log2(gateset_size) + math.log2(moment_value) - t * math.log1p(-delta * delta) / LN2
    raw = 2.0 ** log2_raw if log2_raw < 1000 else math.inf
    return BoundReport("markov_union", inputs, min(raw, 1.0), log2_raw >= 0.0, {"log2_raw": log2_raw, "raw": raw})


def deep_moment_proxy(n: int, t: int) -> float:
    """``sqrt(t! 2^-nt + 2^-nt) + 2^-nt``: the moment bound once all decaying terms are below 2^-nt."""
    floor = math.exp(log_factorial(t) - n * t * LN2)
    tail = 2.0 ** (-n * t)
    return math.sqrt(floor + tail) + tail


def log2_markov_shape(n: int, t: int, R: float, gateset_size: float, delta: float) -> float:
    """Exponent dominating the Markov bound at the proxy moment.

    ``sqrt((t!+1) 2^-nt) <= 2^(1/2 - t(n - log2 t)/2)``, so the bound is at
    most ``2^(1/2 + 1 - t(n - log2 t)/2 + t log2(1/(1-delta^2)) + R log2|K|)``
    (the trailing 2^-nt is absorbed by the extra factor 2).
    """
    return (1.5 - 0.5 * t * (n - math.log2(t)) - t * math.log1p(-delta * delta) / LN2
            + R * math.log2(gateset_size))


def log2_markov_shape_uncorrected(n: int, t: int, R: float, gateset_size: float, delta: float) -> float:
    """Uncorrected exponent, missing the square root and using (1 - delta): ``-t(n - log2 t + log2(1/(1-delta))) + R log2|K|``."""
    return -t * (n - math.log2(t) - math.log1p(-delta) / LN2) + R * math.log2(gateset_size)


# --- discretization ---------------------------------------------------------------------

@dataclass(frozen=True)
class EpsNet:
    epsilon: float
    log2_net_size: float
    effective_delta: float

    @property
    def net_size(self) -> float:
        return 2.0 ** self.log2_net_size if self.log2_net_size < 1000 else math.inf


def epsnet_and_accumulation(delta: float, d: float, B: float = DEFAULT_B, log_base: float = math.e) -> EpsNet:
    """eps = delta^2 / 2d, net size B^log(1/eps), robustness sqrt(2) delta."""
    if not 0.0 < delta < 2.0 ** -0.5:
        raise DomainError("delta must lie in (0, 1/sqrt(2))")
    if d < 1 or B <= 0:
        raise DomainError("need d >= 1 and B > 0")
    eps = delta * delta / (2.0 * d)
    return EpsNet(eps, _log(1.0 / eps, log_base) * math.log2(B), math.sqrt(2.0) * delta)


def accumulation_holds(delta: float, d: float, R: float) -> bool:
    """sqrt(1 - delta^2) - eps R >= sqrt(1 - 2 delta^2) with eps = delta^2 / 2d."""
    eps = delta * delta / (2.0 * d)
    return math.sqrt(1.0 - delta * delta) - eps * R >= math.sqrt(1.0 - 2.0 * delta * delta) - 1e-15


def fidelity_tracenorm(delta: float) -> dict:
    """Overlap thresholds for trace distance delta and the operator-norm robustness delta'."""
    if not 0.0 <= delta < 1.0:
        raise DomainError("delta must lie in [0, 1)")
    overlap_sq = 1.0 - delta * delta
    return {"overlap_sq": overlap_sq, "overlap": math.sqrt(overlap_sq),
            "delta_prime": -2.0 * math.expm1(0.5 * math.log1p(-delta * delta))}


# --- deep circuits --------------------------------------------------------------------

def deep_splitting_bound(n: int, d: float, delta: float, k_mix: float | None = None, B: float = DEFAULT_B,
                         log2_gateset: float | None = None) -> BoundReport:
    """Per-block complexity bound from splitting a depth 20 k n 2^n circuit into blocks of d gates.

    ``log2_gateset`` defaults to ``log2(B) * ln(d / delta^2)`` (size of the
    eps-net).  Returns the final line as ``value`` and all three lines in
    ``extras``.
    """
    k = default_k_mix(n) if k_mix is None else float(k_mix)
    if not 0.0 < delta < 1.0:
        raise DomainError("delta must lie in (0, 1)")
    if d < 1:
        raise DomainError("d must be >= 1")
    if d > math.sqrt(20.0 * k * n) * 2.0 ** (n / 2.0):
        raise DomainError("requires d <= sqrt(20 k n) 2^(n/2)")
    L = math.log2(B) * math.log(d / delta ** 2) if log2_gateset is None else float(log2_gateset)
    if L <= 0:
        raise DomainError("gate-set size must exceed 1")
    total = 20.0 * k * n * 2.0 ** n
    blocks = math.floor(total / d)
    bracket = _bracket_unitary(delta)
    head = 2.0 ** n / (8.0 * L) * bracket
    line1 = (head - d) / blocks
    lead = d / (160.0 * k * n * L) * bracket
    line2 = lead - d * d / total
    line3 = lead - 1.0
    extras = {"line1": line1, "line2": line2, "line3": line3, "blocks": blocks, "bracket": bracket,
              "log2_gateset": L, "k_mix": k, "chain_holds": line1 >= line2 - 1e-12 * abs(line2) and line2 >= line3}
    inputs = {"n": n, "d": d, "delta": delta, "k_mix": k, "B": B}
    return BoundReport("deep_splitting", inputs, line3, line3 <= 0.0, extras)


# --- binomial composition ------------------------------------------------------------------

@dataclass(frozen=True)
class BinomialMixing:
    d: int
    lam: float
    value: float
    closed_form: float | None = None
    simplified: float | None = None

    @property
    def holds(self) -> bool:
        return self.simplified is None or self.value <= self.simplified * (1 + 1e-12)


def binomial_mixing(d: int, lam: float, base: Callable[[int], float]) -> BinomialMixing:
    """``sum_j C(d,j) (1-lam)^(d-j) lam^j base(j)``."""
    if not 0.0 <= lam <= 1.0:
        raise DomainError("lambda must lie in [0, 1]")
    if d < 0:
        raise DomainError("d must be >= 0")
    j = np.arange(d + 1)
    weights = binom.pmf(j, d, lam)
    vals = np.array([base(int(x)) for x in j], dtype=float)
    return BinomialMixing(d, lam, math.fsum(weights * vals))


def binomial_mixing_exp(d: int, lam: float, c: float) -> BinomialMixing:
    """Composition for ``base(j) = e^{-j/c}`` with its closed and simplified forms."""
    if c < 1:
        raise DomainError("c must be >= 1 for the convexity step")
    res = binomial_mixing(d, lam, lambda j: math.exp(-j / c))
    closed = (1.0 - lam + math.exp(-1.0 / c) * lam) ** d
    simple = (1.0 - lam / (2.0 * c)) ** d
    return BinomialMixing(d, lam, res.value, closed, simple)


# --- coupon collector --------------------------------------------------------------------------

@dataclass(frozen=True)
class CouponBound:
    n: int
    d: int
    coarse_bound: float       # n (1 - 1/n)^d
    coarse_exp_bound: float   # n e^{-d/n}
    exact_union_bound: float  # n (1 - 2/n)^d
    exact: float | None      # inclusion-exclusion probability that some qubit is untouched


def untouched_probability_exact(n: int, d: int) -> float:
    """Probability that some qubit is in none of d uniformly drawn periodic pairs."""
    if n > 20:
        raise DomainError("inclusion-exclusion limited to n <= 20")
    masks = np.arange(1, 1 << n, dtype=np.int64)
    # pair (i, i+1 mod n) avoids S iff both bits are clear
    free = np.zeros(masks.size, dtype=np.int64)
    for i in range(n):
        j = (i + 1) % n
        free += (((masks >> i) & 1) == 0) & (((masks >> j) & 1) == 0)
    sizes = np.bitwise_count(masks).astype(np.int64)
    terms = np.where(sizes % 2 == 1, 1.0, -1.0) * (free / n) ** d
    return float(math.fsum(terms))


def coupon_collector(n: int, d: int) -> CouponBound:
    if n < 2 or d < 0:
        raise DomainError("need n >= 2 and d >= 0")
    exact = untouched_probability_exact(n, d) if n <= 20 else None
    return CouponBound(n, d, n * (1.0 - 1.0 / n) ** d, n * math.exp(-d / n), n * (1.0 - 2.0 / n) ** d, exact)


# --- dispatcher ---------------------------------------------------------------------------------

FORMULAS = ("thm1_unitary", "thm1_state", "thm2", "theorem3", "cor1", "markov_union", "epsnet",
            "deep_splitting", "binomial_mixing", "coupon", "fidelity")


def evaluate(formula: str, p: BoundParams, **extra) -> list[dict]:
    """Evaluate a named formula; returns JSON-ready records ``{formula, inputs, value, vacuous, ...}``."""
    if formula == "thm1_unitary":
        reps = [thm1_unitary_bound(p.n, p.d, p.delta, p.K, p.log_base)]
    elif formula == "thm1_state":
        reps = [thm1_state_bound(p.n, p.d, p.delta, p.K)]
    elif formula == "thm2":
        reps = list(thm2_bounds(p.n, p.d, p.delta, p.C, p.Cprime, p.log_base))
    elif formula == "theorem3":
        reps = [theorem3_rhs(p.n, p.d, p.t, "eq8"), theorem3_rhs(p.n, p.d, p.t, "eq9")]
    elif formula == "cor1":
        reps = list(cor1_rhs(p.n, p.d, p.t, p.C1, p.C2, p.C3, p.C4))
    elif formula == "markov_union":
        moment = extra.get("moment")
        if moment is None:
            moment = min(1.0, theorem3_rhs(p.n, p.d, p.t).value)
        reps = [markov_union_bound(p.n, p.t, extra.get("R", 0.0), p.gateset_size, p.delta, moment)]
    elif formula == "epsnet":
        e = epsnet_and_accumulation(p.delta, p.d, p.B)
        return [{"formula": "epsnet", "inputs": {"delta": p.delta, "d": p.d, "B": p.B},
                 "value": e.epsilon, "vacuous": False,
                 "extras": {"log2_net_size": e.log2_net_size, "effective_delta": e.effective_delta}}]
    elif formula == "deep_splitting":
        reps = [deep_splitting_bound(p.n, p.d, p.delta, p.k_mix, p.B)]
    elif formula == "binomial_mixing":
        c = extra.get("c", 40000.0 * p.n ** 7)
        r = binomial_mixing_exp(int(p.d), p.lambda_G, c)
        return [{"formula": "binomial_mixing", "inputs": {"d": p.d, "lambda": p.lambda_G, "c": c},
                 "value": r.value, "vacuous": r.value >= 1.0,
                 "extras": {"closed_form": r.closed_form, "simplified": r.simplified, "holds": r.holds}}]
    elif formula == "coupon":
        c = coupon_collector(p.n, int(p.d))
        return [{"formula": "coupon", "inputs": {"n": p.n, "d": p.d}, "value": c.exact_union_bound,
                 "vacuous": c.exact_union_bound >= 1.0,
                 "extras": {"coarse_bound": c.coarse_bound, "coarse_exp_bound": c.coarse_exp_bound, "exact": c.exact}}]
    elif formula == "fidelity":
        f = fidelity_tracenorm(p.delta)
        return [{"formula": "fidelity", "inputs": {"delta": p.delta}, "value": f["overlap_sq"],
                 "vacuous": False, "extras": f}]
    else:
        raise InputError(f"unknown formula {formula!r}; choose from {', '.join(FORMULAS)}")
    return [r.to_dict() for r in reps]
