"""Closed-form predictions for the purification protocols.

Each function returns plain floats (or a GeppParams) so simulations can be
checked against theory directly. ``BoundSet`` collects named predictions
for reports.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .protocols import GeppParams


class BoundError(ValueError):
    pass


def _check_eps(epsilon: float, upper: float = 1.0) -> None:
    if not 0.0 <= epsilon < upper:
        raise BoundError(f"epsilon must lie in [0, {upper}), got {epsilon}")


def absolute_delta(N: int, K: int, M: int, epsilon: float) -> float:
    """Smallest delta any never-failing protocol can guarantee."""
    return (M - K) / M * N / (N - 1) * epsilon


def absolute_upper_bound(N: int, K: int, M: int, epsilon: float) -> float:
    """Best mean output fidelity of a never-failing protocol, 1 - delta_min."""
    if N < 2 or not K <= M <= N * K:
        raise BoundError(f"need N >= 2 and K <= M <= N*K, got N={N}, K={K}, M={M}")
    _check_eps(epsilon)
    return 1.0 - absolute_delta(N, K, M, epsilon)


def absolute_tight_params(N: int, K: int, M: int, epsilon: float) -> GeppParams:
    """Parameters achieved by the random permutation protocol; needs NK/M and M/K integral."""
    if (N * K) % M or M % K:
        raise BoundError(f"NK/M and M/K must be integers (N={N}, K={K}, M={M})")
    return GeppParams(N, K, M, epsilon, absolute_delta(N, K, M, epsilon))


def random_permutation_prediction(N: int, M: int, epsilon: float) -> float:
    """Mean output fidelity on diagonal inputs of fidelity 1 - eps (K = 1)."""
    _check_eps(epsilon)
    return 1.0 - N / (N - 1) * (1 - 1 / M) * epsilon


def mismatch_prediction(N: int, M: int, delta: float) -> float:
    """Probability the two measurement results differ, for off-diagonal weight delta."""
    return (N - M) / (N - 1) * delta


def scramble_fail_factor(N: int, L: int) -> float:
    return N * (L - 1) / (L * (N - 1))


@dataclass(frozen=True)
class ScramblingPrediction:
    success_probability: float
    success_fidelity: float
    published_fidelity_bound: float

    @property
    def fail_probability(self) -> float:
        return 1.0 - self.success_probability


def simple_scrambling_prediction(N: int, L: int, W: int, epsilon: float) -> ScramblingPrediction:
    """Exact success probability and fidelity on diagonal inputs, plus the
    looser 1 - (2W/N) eps bound."""
    if N != W * L:
        raise BoundError(f"N must equal W*L (N={N}, W={W}, L={L})")
    _check_eps(epsilon, 0.5)
    success = 1.0 - epsilon * scramble_fail_factor(N, L)
    return ScramblingPrediction(success, (1.0 - epsilon) / success, 1.0 - 2 * W / N * epsilon)


def simple_scrambling_mixture(N: int, L: int, weights, epsilons) -> ScramblingPrediction:
    """Same quantities for a diagonal ensemble whose members have infidelities eps_i."""
    weights, epsilons = list(weights), list(epsilons)
    c = scramble_fail_factor(N, L)
    succ = sum(p * (1 - c * e) for p, e in zip(weights, epsilons))
    good = sum(p * (1 - e) for p, e in zip(weights, epsilons))
    eps = sum(p * e for p, e in zip(weights, epsilons))
    W = N // L
    return ScramblingPrediction(succ, good / succ, 1.0 - 2 * W / N * eps)


def simple_scrambling_params(N: int, K: int, W: int, epsilon: float) -> GeppParams:
    _check_eps(epsilon, 0.5)
    return GeppParams(N, K, W * K, epsilon, 2 * W / N * epsilon, epsilon)


@dataclass(frozen=True)
class HashComparePrediction:
    fail_bound: float
    diag_fidelity_bound: float
    confidence: float
    mean_lambda1_bound: float


def hash_compare_prediction(S: int, epsilon: float) -> HashComparePrediction:
    """(fail <= eps, F(psi, H^D) >= 1 - 2eps/sqrt(S) with probability >= 1 - 1/sqrt(S))."""
    if S < 1 or S & (S - 1):
        raise BoundError(f"S must be a power of 2, got {S}")
    _check_eps(epsilon, 0.5)
    root = math.sqrt(S)
    return HashComparePrediction(epsilon, 1.0 - 2 * epsilon / root, 1.0 - 1 / root, epsilon / S)


def complete_scrambling_prediction(N: int, W: int, S: int, epsilon: float, K: int = 1) -> GeppParams:
    """delta = (4W/N + 4/sqrt(S)) eps, p = 2 eps + sqrt(2 eps / sqrt(S)), q = 1/sqrt(S)."""
    if S < 1 or S & (S - 1):
        raise BoundError(f"S must be a power of 2, got {S}")
    if N % W:
        raise BoundError(f"W={W} must divide N={N}")
    _check_eps(epsilon, 0.5)
    root = math.sqrt(S)
    delta = (4 * W / N + 4 / root) * epsilon
    p = 2 * epsilon + math.sqrt(2 * epsilon / root)
    return GeppParams(N, S * K, W * K, epsilon, min(delta, 1.0), min(p, 1.0), 1 / root)


def row_delta(t: int, epsilon: float) -> float:
    """The eps / 2^(t-3) column obtained with W/N = 2^-t and S = 2^(2t)."""
    return epsilon / 2 ** (t - 3)


def consistent_with_rows(params: GeppParams, W: int, t: int, tol: float = 1e-12) -> bool:
    """True when W/N = 2^-t, S = 2^(2t) reproduces the tabulated delta, p, q."""
    if W * 2**t != params.N:
        return False
    eps = params.epsilon
    p_row = 2 * eps + math.sqrt(2 * eps / 2**t)
    return (
        abs(params.delta - min(row_delta(t, eps), 1.0)) <= tol
        and abs(params.p - min(p_row, 1.0)) <= tol
        and abs(params.q - 1 / 2**t) <= tol
    )


@dataclass
class BoundSet:
    """Named predictions: id -> {"inputs", "value", "anchor"}."""

    entries: dict = field(default_factory=dict)

    def add(self, name: str, value, anchor: str, **inputs) -> None:
        if isinstance(value, float) and not math.isfinite(value):
            raise BoundError(f"non-finite prediction for {name}")
        self.entries[name] = {"inputs": inputs, "value": value, "anchor": anchor}

    def value(self, name: str):
        return self.entries[name]["value"]

    def to_dict(self) -> dict:
        return self.entries

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.entries, **kwargs)


def predictions_for(protocol: str, epsilon: float, **p) -> BoundSet:
    """The bounds that apply to one protocol configuration."""
    bs = BoundSet()
    if protocol == "random-permutation":
        N, M, K = p["N"], p["M"], p.get("K", 1)
        bs.add("mean_fidelity_upper", absolute_upper_bound(N, K, M, epsilon), "absolute bound", N=N, K=K, M=M, epsilon=epsilon)
        if "delta" in p:
            bs.add("mismatch_probability", mismatch_prediction(N, M // K, p["delta"]), "mismatch probability", N=N, M=M, delta=p["delta"])
    elif protocol == "simple-scrambling":
        pred = simple_scrambling_prediction(p["N"], p["L"], p["W"], epsilon)
        ins = dict(N=p["N"], L=p["L"], W=p["W"], epsilon=epsilon)
        bs.add("fail_probability", pred.fail_probability, "simple scrambling, exact", **ins)
        bs.add("success_fidelity", pred.success_fidelity, "simple scrambling, exact", **ins)
        bs.add("fidelity_lower", pred.published_fidelity_bound, "simple scrambling, 1-(2W/N)eps", **ins)
    elif protocol == "hash-and-compare":
        pred = hash_compare_prediction(p["S"], epsilon)
        ins = dict(S=p["S"], epsilon=epsilon)
        bs.add("fail_upper", pred.fail_bound, "hash-and-compare", **ins)
        bs.add("fidelity_lower", 1.0 - epsilon, "hash-and-compare", **ins)
        bs.add("diag_fidelity_lower", pred.diag_fidelity_bound, "hash-and-compare", **ins)
        bs.add("confidence", pred.confidence, "hash-and-compare", **ins)
        bs.add("mean_lambda1_sq_upper", pred.mean_lambda1_bound, "hash-and-compare", **ins)
    elif protocol == "complete-scrambling":
        gp = complete_scrambling_prediction(p["N"], p["W"], p["S"], epsilon, p.get("K", 1))
        ins = dict(N=p["N"], W=p["W"], S=p["S"], epsilon=epsilon)
        bs.add("fail_upper", gp.p, "complete scrambling", **ins)
        bs.add("fidelity_lower", 1.0 - gp.delta, "complete scrambling", **ins)
        bs.add("good_fraction_lower", 1.0 - gp.q, "complete scrambling", **ins)
    else:
        raise BoundError(f"unknown protocol {protocol!r}")
    return bs
