"""The four purification protocols as exact branch enumerations.

Every protocol returns an ``OutcomeDistribution``: the full list of
non-failing branches (classical transcript, probability, post-state) plus
the aggregated FAIL probability. Classical randomness (the permutation of
the random permutation protocol, the hash vectors r) is either enumerated,
passed explicitly, or drawn from a seeded PCG64 generator. ``sample_runs``
draws independent Monte Carlo runs from the conditional distributions.

Mixed inputs are ensembles; their branches carry a ``component`` key in the
transcript and are weighted by the ensemble probabilities.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.stats import binomtest

from . import qstate
from .qstate import Ensemble, RegisterLayout, SparseState, StateLike
from .scramble import ScramblePerm

PROB_TOL = 1e-9
MAX_ENUM_N = 6
MAX_HASH_ROUNDS = 12


class ProtocolError(ValueError):
    pass


def make_rng(seed, run_index: int | None = None) -> np.random.Generator:
    """PCG64 stream for (seed, run_index); independent of worker count."""
    entropy = [int(seed)] if run_index is None else [int(seed), int(run_index)]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


@dataclass
class Branch:
    transcript: dict
    probability: float
    state: SparseState

    @property
    def fidelity(self) -> float:
        return qstate.fidelity(self.state)


@dataclass
class OutcomeDistribution:
    branches: list[Branch]
    fail_probability: float
    metadata: dict = field(default_factory=dict)
    residue: float = 0.0

    @property
    def success_probability(self) -> float:
        return sum(b.probability for b in self.branches)

    @property
    def total(self) -> float:
        return self.success_probability + self.fail_probability + self.residue

    def mean_fidelity(self, conditional: bool = False) -> float:
        """Fidelity of the (mixed) output, optionally conditioned on success."""
        acc = sum(b.probability * b.fidelity for b in self.branches)
        if conditional:
            succ = self.success_probability
            return acc / succ if succ > 0 else float("nan")
        return acc

    def grouped(self, ignore: Sequence[str] = ("component",)) -> list[tuple[dict, float, float]]:
        """Merge branches whose transcripts agree outside ``ignore``.

        Returns (transcript, probability, fidelity of the merged mixture).
        """
        groups: dict[tuple, list] = {}
        for b in self.branches:
            key_dict = {k: v for k, v in b.transcript.items() if k not in ignore}
            key = _freeze(key_dict)
            slot = groups.setdefault(key, [key_dict, 0.0, 0.0])
            slot[1] += b.probability
            slot[2] += b.probability * b.fidelity
        return [(t, p, f / p if p > 0 else 0.0) for t, p, f in groups.values()]

    def find(self, transcript: dict) -> Branch:
        want = _freeze(transcript)
        for b in self.branches:
            if _freeze(b.transcript) == want:
                return b
        raise KeyError(f"no branch with transcript {transcript}")

    def sample(self, rng: np.random.Generator) -> Branch | None:
        """Draw one outcome; None stands for FAIL."""
        u = rng.random() * self.total
        acc = 0.0
        for b in self.branches:
            acc += b.probability
            if u < acc:
                return b
        return None

    def to_dict(self, include_states: bool = False) -> dict:
        out = {
            "fail_probability": self.fail_probability,
            "success_probability": self.success_probability,
            "residue": self.residue,
            "metadata": self.metadata,
            "branches": [],
        }
        for b in self.branches:
            entry = {"transcript": b.transcript, "probability": b.probability, "fidelity": b.fidelity}
            if include_states:
                entry["state"] = b.state.to_dict()
            out["branches"].append(entry)
        return out


def _freeze(obj):
    if isinstance(obj, dict):
        return tuple(sorted((k, _freeze(v)) for k, v in obj.items()))
    if isinstance(obj, (list, tuple)):
        return tuple(_freeze(v) for v in obj)
    return obj


@dataclass(frozen=True)
class GeppParams:
    N: int
    K: int
    M: int
    epsilon: float
    delta: float
    p: float | None = None
    q: float | None = None

    def __post_init__(self):
        for name in ("epsilon", "delta", "p", "q"):
            v = getattr(self, name)
            if v is not None and not 0.0 <= v <= 1.0:
                raise ProtocolError(f"{name} must lie in [0, 1], got {v}")
        if min(self.N, self.K, self.M) < 1:
            raise ProtocolError("N, K, M must be positive")

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("N", "K", "M", "epsilon", "delta", "p", "q")}


# ---------------------------------------------------------------- helpers


def _over_components(state: StateLike, run: Callable[[SparseState], OutcomeDistribution]) -> OutcomeDistribution:
    if isinstance(state, SparseState):
        return run(state)
    branches, fail, residue, meta = [], 0.0, 0.0, []
    for i, (w, s) in enumerate(state):
        dist = run(s)
        fail += w * dist.fail_probability
        residue += w * dist.residue
        meta.append(dist.metadata)
        for b in dist.branches:
            branches.append(Branch({"component": i, **b.transcript}, w * b.probability, b.state))
    metadata = dict(meta[0])
    metadata["components"] = meta
    metadata["weights"] = list(state.weights)
    return OutcomeDistribution(branches, fail, metadata, residue)


def _single_register(state: SparseState, name: str = "X") -> SparseState:
    return state.with_layout(RegisterLayout.single(state.dim, name))


# ---------------------------------------------------------------- random permutation


def random_permutation_protocol(
    state: StateLike, M: int, K: int = 1, perm: Sequence[int] | None = None, seed=None
) -> OutcomeDistribution:
    """Permute both sides by a shared random pi, measure the low-order
    N/M' part on both sides and compare; on disagreement output |Z, Z>.

    With ``perm`` the distribution is conditioned on that permutation; with
    ``seed`` the permutation is drawn from the seeded generator; otherwise
    all N! permutations are enumerated (N <= 6). For K > 1 the protocol
    produces dimension M' = M / K and appends a fresh Psi_K.
    """
    N = state.dim
    if M % K:
        raise ProtocolError(f"K={K} must divide M={M}")
    M_out = M // K
    if M_out < 1 or N % M_out:
        raise ProtocolError(f"M/K={M_out} must divide N={N}")
    L = N // M_out
    if perm is not None:
        perms = [tuple(int(v) for v in perm)]
    elif seed is not None:
        perms = [tuple(int(v) for v in make_rng(seed).permutation(N))]
    else:
        if N > MAX_ENUM_N:
            raise ProtocolError(f"exact enumeration of all permutations needs N <= {MAX_ENUM_N}")
        perms = list(itertools.permutations(range(N)))
    weight = 1.0 / len(perms)
    layout = RegisterLayout((("M", M_out), ("L", L)))
    aux = qstate.max_entangled(K, [("AUX", K)]) if K > 1 else None

    def finish(s: SparseState) -> SparseState:
        return qstate.tensor(s, aux) if aux is not None else s

    def run(component: SparseState) -> OutcomeDistribution:
        base = component.with_layout(layout)
        branches, residue = [], 0.0
        for pi in perms:
            permuted = qstate.apply_permutation_both(base, pi)
            split = qstate.measure_compare(permuted, "L") if L > 1 else None
            if split is None:
                branches.append(Branch({"perm": list(pi), "result": 0}, weight, finish(permuted)))
                continue
            residue += weight * split.residue
            for g, p, post in split.branches:
                branches.append(Branch({"perm": list(pi), "result": g}, weight * p, finish(post)))
            if split.mismatch_probability > qstate.BRANCH_TOL:
                zero = finish(qstate.basis_state(M_out, layout=[("M", M_out)]))
                branches.append(Branch({"perm": list(pi), "mismatch": True}, weight * split.mismatch_probability, zero))
            else:
                residue += weight * split.mismatch_probability
        meta = {
            "protocol": "random-permutation",
            "N": N,
            "K": K,
            "M": M,
            "L": L,
            "permutations": len(perms),
            "input_fidelity": qstate.fidelity(component),
        }
        return OutcomeDistribution(branches, 0.0, meta, residue)

    dist = _over_components(state, run)
    dist.metadata["input_fidelity"] = qstate.fidelity(state)
    return dist


def mismatch_probability(dist: OutcomeDistribution) -> float:
    return sum(b.probability for b in dist.branches if b.transcript.get("mismatch"))


# ---------------------------------------------------------------- simple scrambling


def simple_scrambling(state: StateLike, perm: ScramblePerm, use_hadamard: bool | None = None) -> OutcomeDistribution:
    """Tensor with Psi_K, scramble both sides, Fourier/Hadamard-measure G,
    keep the H o Y registers when the two results agree."""
    p = perm.params
    if state.dim != p.N:
        raise ProtocolError(f"input dimension {state.dim} does not match scramble N={p.N}")
    aux = qstate.max_entangled(p.K, [("Y", p.K)])

    def run(component: SparseState) -> OutcomeDistribution:
        joint = qstate.tensor(_single_register(component, "X"), aux)
        scrambled = qstate.apply_scramble_both(joint, perm)
        split = qstate.fourier_measure_compare(scrambled, "G", use_hadamard)
        branches = [Branch({"g": g}, prob, post) for g, prob, post in split.branches]
        meta = {
            "protocol": "simple-scrambling",
            "construction": perm.kind,
            "construction_args": dict(perm.args),
            "N": p.N,
            "K": p.K,
            "W": p.W,
            "L": p.L,
            "M": p.W * p.K,
            "hadamard": bool(use_hadamard if use_hadamard is not None else p.L & (p.L - 1) == 0),
            "input_fidelity": qstate.fidelity(component),
        }
        return OutcomeDistribution(branches, split.mismatch_probability, meta, split.residue)

    dist = _over_components(state, run)
    dist.metadata["input_fidelity"] = qstate.fidelity(state)
    return dist


# ---------------------------------------------------------------- hash and compare


def _check_hash_inputs(N: int, r: Sequence[int]) -> None:
    if N < 2 or N & (N - 1):
        raise ProtocolError(f"hash-and-compare needs N a power of 2, got {N}")
    if len(r) > MAX_HASH_ROUNDS:
        raise ProtocolError(f"at most {MAX_HASH_ROUNDS} hash rounds supported")
    for v in r:
        if not 0 <= int(v) < N:
            raise ProtocolError(f"hash vector {v} out of range [0, {N})")


def draw_hash_vectors(N: int, s: int, rng: np.random.Generator) -> list[int]:
    return [int(v) for v in rng.integers(0, N, size=s)]


def hash_syndrome(diff: np.ndarray, r: Sequence[int]) -> np.ndarray:
    """Bit j is the parity (x_A xor x_B) . r_j."""
    syndrome = np.zeros(diff.shape, dtype=np.int64)
    for j, rj in enumerate(r):
        syndrome |= (np.bitwise_count(diff & int(rj)).astype(np.int64) & 1) << j
    return syndrome


MAX_ENUM_HASH = 1 << 20


def enumerate_hash_classes(N: int, s: int) -> list[tuple[tuple[int, ...], int, list[int]]]:
    """Group all N^s hash-vector tuples by their zero-syndrome set.

    Returns (zero set, number of tuples, representative r) per class; the
    protocol outcome depends on r only through the zero set.
    """
    if N**s > MAX_ENUM_HASH:
        raise ProtocolError(f"exact enumeration of {N}^{s} hash tuples is too large")
    xs = np.arange(N)
    # zero[r] = boolean row of x with x . r = 0
    zero = (np.bitwise_count(np.bitwise_and.outer(xs, xs)) & 1) == 0
    if s == 0:
        return [(tuple(range(N)), 1, [])]
    tuples = np.array(list(itertools.product(range(N), repeat=s)), dtype=np.int64)
    masks = np.logical_and.reduce(zero[tuples], axis=1)
    packed = np.packbits(masks, axis=1)
    _, first, counts = np.unique(packed, axis=0, return_index=True, return_counts=True)
    out = []
    for row, count in zip(first, counts):
        zset = tuple(int(x) for x in np.flatnonzero(masks[row]))
        out.append((zset, int(count), [int(v) for v in tuples[row]]))
    return sorted(out)


def hash_compare_split(state: SparseState, r: Sequence[int]) -> tuple[float, float, float, SparseState | None]:
    """(lambda0^2, lambda1^2, lambda2^2, post-state on the all-zero syndrome)."""
    diff = state.a ^ state.b
    zero = hash_syndrome(diff, r) == 0
    weights = np.abs(state.amp) ** 2
    diag = diff == 0
    lam0 = float(weights[diag].sum())
    lam1 = float(weights[zero & ~diag].sum())
    lam2 = float(weights[~zero].sum())
    post = None
    if lam0 + lam1 >= qstate.BRANCH_TOL:
        post = SparseState.from_entries(
            state.layout_a, state.layout_b, state.a[zero], state.b[zero], state.amp[zero], normalize=True
        )
    return lam0, lam1, lam2, post


def _hash_cases(N: int, r, s, seed) -> list[tuple[float, dict, list[int]]]:
    """(weight, transcript key, r) for explicit, seeded, or enumerated hash vectors."""
    if r is not None:
        r = [int(v) for v in r]
        _check_hash_inputs(N, r)
        return [(1.0, {"r": r}, r)]
    if s is None:
        raise ProtocolError("pass explicit hash vectors r or a number of rounds s")
    if seed is not None:
        r = draw_hash_vectors(N, s, make_rng(seed))
        _check_hash_inputs(N, r)
        return [(1.0, {"r": r}, r)]
    _check_hash_inputs(N, [0] * s)
    total = N**s
    return [(count / total, {"zero_set": list(zset)}, rep) for zset, count, rep in enumerate_hash_classes(N, s)]


def hash_and_compare(
    state: StateLike, r: Sequence[int] | None = None, s: int | None = None, seed=None
) -> OutcomeDistribution:
    """Alice hashes x into s ancilla bits via x . r_j, teleports them to Bob,
    Bob xors in his own hashes and measures; any nonzero bit means FAIL.

    Teleportation is ideal and only bookkept: it consumes s EPR pairs of an
    auxiliary Psi_S, S = 2^s. The hash vectors are ``r`` if given, drawn
    from ``seed`` if given, and otherwise enumerated over all N^s choices.
    """
    N = state.dim
    cases = _hash_cases(N, r, s, seed)
    rounds = len(cases[0][2])

    def run(component: SparseState) -> OutcomeDistribution:
        branches, fail, residue = [], 0.0, 0.0
        lam = np.zeros(3)
        for weight, key, rv in cases:
            lam0, lam1, lam2, post = hash_compare_split(component, rv)
            lam += weight * np.array([lam0, lam1, lam2])
            fail += weight * lam2
            if post is not None:
                branches.append(Branch({**key, "syndrome": 0}, weight * (lam0 + lam1), post))
            else:
                residue += weight * (lam0 + lam1)
        meta = {
            "protocol": "hash-and-compare",
            "N": N,
            "s": rounds,
            "S": 1 << rounds,
            "epr_pairs_consumed": rounds,
            "hash_classes": len(cases),
            "lambda_sq": [float(v) for v in lam],
            "input_fidelity": qstate.fidelity(component),
        }
        if len(cases) == 1:
            meta["r"] = list(cases[0][2])
        return OutcomeDistribution(branches, fail, meta, residue)

    dist = _over_components(state, run)
    dist.metadata["input_fidelity"] = qstate.fidelity(state)
    return dist


# ---------------------------------------------------------------- complete scrambling


def complete_scrambling(
    state: StateLike,
    perm: ScramblePerm,
    r: Sequence[int] | None = None,
    s: int | None = None,
    seed=None,
    use_hadamard: bool | None = None,
) -> OutcomeDistribution:
    """Hash and Compare with Psi_S, then Simple Scrambling with Psi_K;
    FAIL if either stage fails. Auxiliary dimension T = S * K."""
    N = state.dim
    if N != perm.params.N:
        raise ProtocolError(f"input dimension {N} does not match scramble N={perm.params.N}")
    cases = _hash_cases(N, r, s, seed)
    rounds = len(cases[0][2])
    S = 1 << rounds

    def run(component: SparseState) -> OutcomeDistribution:
        branches, fail, residue = [], 0.0, 0.0
        lam = np.zeros(3)
        hash_fail = scramble_fail = 0.0
        for weight, key, rv in cases:
            lam0, lam1, lam2, post = hash_compare_split(component, rv)
            lam += weight * np.array([lam0, lam1, lam2])
            hash_fail += weight * lam2
            p_hc = lam0 + lam1
            if post is None:
                residue += weight * p_hc
                continue
            ss = simple_scrambling(post, perm, use_hadamard)
            scramble_fail += weight * p_hc * ss.fail_probability
            residue += weight * p_hc * ss.residue
            for b in ss.branches:
                branches.append(Branch({**key, "g": b.transcript["g"]}, weight * p_hc * b.probability, b.state))
        meta = {
            "protocol": "complete-scrambling",
            "N": N,
            "K": perm.params.K,
            "W": perm.params.W,
            "L": perm.params.L,
            "s": rounds,
            "S": S,
            "T": S * perm.params.K,
            "M": perm.params.W * perm.params.K,
            "construction": perm.kind,
            "construction_args": dict(perm.args),
            "hash_classes": len(cases),
            "lambda_sq": [float(v) for v in lam],
            "hash_fail_probability": hash_fail,
            "scramble_fail_probability": scramble_fail,
            "input_fidelity": qstate.fidelity(component),
        }
        if len(cases) == 1:
            meta["r"] = list(cases[0][2])
        return OutcomeDistribution(branches, hash_fail + scramble_fail, meta, residue)

    dist = _over_components(state, run)
    dist.metadata["input_fidelity"] = qstate.fidelity(state)
    return dist


# ---------------------------------------------------------------- Monte Carlo runs


@dataclass
class RunRecord:
    protocol: str
    seed: int
    run_index: int | None
    randomness: dict
    transcript: dict | None
    outcome: SparseState | None
    diagnostics: dict = field(default_factory=dict)

    @property
    def failed(self) -> bool:
        return self.outcome is None

    @property
    def fidelity(self) -> float | None:
        return None if self.outcome is None else qstate.fidelity(self.outcome)

    def to_dict(self) -> dict:
        return {
            "protocol": self.protocol,
            "seed": self.seed,
            "run_index": self.run_index,
            "randomness": self.randomness,
            "transcript": self.transcript,
            "outcome": "FAIL" if self.outcome is None else self.outcome.to_dict(),
            "fidelity": self.fidelity,
            "diagnostics": self.diagnostics,
        }

    @classmethod
    def from_dict(cls, data: dict) -> RunRecord:
        outcome = data["outcome"]
        return cls(
            protocol=data["protocol"],
            seed=data["seed"],
            run_index=data.get("run_index"),
            randomness=data["randomness"],
            transcript=data["transcript"],
            outcome=None if outcome == "FAIL" else SparseState.from_dict(outcome),
            diagnostics=data.get("diagnostics", {}),
        )


PROTOCOLS = ("random-permutation", "simple-scrambling", "hash-and-compare", "complete-scrambling")


def conditional_distribution(protocol: str, state: StateLike, randomness: dict, **params) -> OutcomeDistribution:
    """Distribution of ``protocol`` given its classical random choices."""
    if protocol == "random-permutation":
        return random_permutation_protocol(state, params["M"], params.get("K", 1), perm=randomness["perm"])
    if protocol == "simple-scrambling":
        return simple_scrambling(state, params["perm"], params.get("use_hadamard"))
    if protocol == "hash-and-compare":
        return hash_and_compare(state, randomness["r"])
    if protocol == "complete-scrambling":
        return complete_scrambling(state, params["perm"], randomness["r"], use_hadamard=params.get("use_hadamard"))
    raise ProtocolError(f"unknown protocol {protocol!r}")


def draw_randomness(protocol: str, state: StateLike, rng: np.random.Generator, **params) -> dict:
    if protocol == "random-permutation":
        return {"perm": [int(v) for v in rng.permutation(state.dim)]}
    if protocol in ("hash-and-compare", "complete-scrambling"):
        return {"r": draw_hash_vectors(state.dim, params["s"], rng)}
    if protocol == "simple-scrambling":
        return {}
    raise ProtocolError(f"unknown protocol {protocol!r}")


def _cache_key(protocol: str, state: StateLike, randomness: dict):
    # hash stages depend on r only through the zero-syndrome set
    if "r" in randomness:
        xs = np.arange(state.dim)
        return tuple(np.flatnonzero(hash_syndrome(xs, randomness["r"]) == 0))
    return _freeze(randomness)


def _diagnostics(dist: OutcomeDistribution, branch: Branch | None) -> dict:
    meta = dist.metadata
    if "components" in meta:
        comp = branch.transcript["component"] if branch is not None else None
        out = {"component": comp}
        if comp is not None and "lambda_sq" in meta["components"][comp]:
            out["lambda_sq"] = meta["components"][comp]["lambda_sq"]
        return out
    return {"lambda_sq": meta["lambda_sq"]} if "lambda_sq" in meta else {}


def _record(protocol, seed, run_index, randomness, dist, branch) -> RunRecord:
    transcript = None if branch is None else _relabel_r(branch.transcript, randomness)
    diagnostics = _diagnostics(dist, branch)
    if branch is None and "r" in randomness:
        diagnostics["fail_stage"] = "hash-or-scramble"
    return RunRecord(protocol, seed, run_index, dict(randomness), transcript, None if branch is None else branch.state, diagnostics)


def _relabel_r(transcript: dict, randomness: dict) -> dict:
    out = dict(transcript)
    if "r" in out:
        out["r"] = list(randomness["r"])
    return out


def _sample_chunk(protocol, state, seed, indices, params) -> list[RunRecord]:
    cache: dict = {}
    records = []
    for i in indices:
        rng = make_rng(seed, i)
        randomness = draw_randomness(protocol, state, rng, **params)
        key = _cache_key(protocol, state, randomness)
        dist = cache.get(key)
        if dist is None:
            dist = cache[key] = conditional_distribution(protocol, state, randomness, **params)
        branch = dist.sample(rng)
        records.append(_record(protocol, seed, i, randomness, dist, branch))
    return records


def sample_runs(
    protocol: str, state: StateLike, runs: int, seed: int, workers: int = 1, **params
) -> list[RunRecord]:
    """``runs`` independent Monte Carlo runs; run i uses the stream (seed, i),
    so the records do not depend on ``workers``."""
    if seed is None:
        raise ProtocolError("sample mode needs a seed")
    if workers <= 1 or runs < 2:
        return _sample_chunk(protocol, state, seed, range(runs), params)
    chunks = [c for c in np.array_split(np.arange(runs), workers) if c.size]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = pool.map(lambda c: _sample_chunk(protocol, state, seed, [int(i) for i in c], params), chunks)
    return [rec for part in parts for rec in part]


def replay(record: RunRecord, state: StateLike, **params) -> RunRecord:
    """Recompute a recorded run from its randomness and transcript."""
    dist = conditional_distribution(record.protocol, state, record.randomness, **params)
    if record.transcript is None:
        branch = None
    else:
        wanted = dict(record.transcript)
        if "r" in wanted:
            wanted["r"] = list(record.randomness["r"])
        branch = dist.find(wanted)
    return _record(record.protocol, record.seed, record.run_index, record.randomness, dist, branch)


# ---------------------------------------------------------------- definition checks


@dataclass
class SampleStats:
    runs: int
    fails: int
    success_fidelities: list[float]

    @classmethod
    def from_records(cls, records: Sequence[RunRecord]) -> SampleStats:
        fids = [r.fidelity for r in records if not r.failed]
        return cls(len(records), len(records) - len(fids), fids)

    @property
    def fail_rate(self) -> float:
        return self.fails / self.runs if self.runs else float("nan")


def wilson_interval(k: int, n: int, z: float = 4.0) -> tuple[float, float]:
    """Wilson score interval at z standard deviations."""
    if n == 0:
        return 0.0, 1.0
    level = math.erf(z / math.sqrt(2))
    ci = binomtest(k, n).proportion_ci(confidence_level=level, method="wilson")
    return float(ci.low), float(ci.high)


@dataclass
class GeppCheck:
    kind: str
    passed: bool
    clauses: dict
    params: GeppParams

    def to_dict(self) -> dict:
        return {"kind": self.kind, "passed": self.passed, "clauses": self.clauses, "params": self.params.to_dict()}


def check_gepp_definition(
    result: OutcomeDistribution | SampleStats, params: GeppParams, kind: str, tol: float = PROB_TOL
) -> GeppCheck:
    """Evaluate the probability clauses of an absolute, deterministic or
    probabilistic success definition.

    Exact distributions: absolute and deterministic use the fidelity of the
    whole (success-conditioned) output mixture; probabilistic uses the
    fidelity of each classical outcome, branches that differ only in the
    ensemble component being merged. Sample statistics are judged with
    4-sigma Wilson intervals (rates) or 4 standard errors (mean fidelity).
    """
    if kind not in ("absolute", "deterministic", "probabilistic"):
        raise ProtocolError(f"unknown definition kind {kind!r}")
    threshold = 1.0 - params.delta
    clauses: dict = {}
    if isinstance(result, SampleStats):
        n, fails = result.runs, result.fails
        succ = n - fails
        good = sum(f >= threshold - tol for f in result.success_fidelities)
        fail_ci = wilson_interval(fails, n)
        good_ci = wilson_interval(good, succ)
        clauses["fail_rate"] = result.fail_rate
        clauses["fail_ci"] = fail_ci
        clauses["good_fraction"] = good / succ if succ else float("nan")
        clauses["good_ci"] = good_ci
        if kind in ("absolute", "deterministic"):
            # the definitions bound the fidelity of the output mixture, i.e. the mean over runs
            fids = np.asarray(result.success_fidelities, dtype=float)
            mean = float(fids.mean()) if succ else float("nan")
            sem = float(fids.std(ddof=1) / math.sqrt(succ)) if succ > 1 else 0.0
            clauses["mean_fidelity"] = mean
            fail_ok = fails == 0 if kind == "absolute" else fail_ci[0] <= (params.p or 0.0)
            good_ok = succ == 0 or mean + 4.0 * sem >= threshold - tol
        else:
            fail_ok = fail_ci[0] <= (params.p or 0.0)
            good_ok = good_ci[1] >= 1.0 - (params.q or 0.0)
        clauses.update(fail_ok=bool(fail_ok), fidelity_ok=bool(good_ok))
        return GeppCheck(kind, bool(fail_ok and good_ok), clauses, params)

    dist = result
    input_fid = dist.metadata.get("input_fidelity")
    clauses["input_fidelity"] = input_fid
    precondition = input_fid is None or input_fid >= 1.0 - params.epsilon - tol
    clauses["precondition_ok"] = bool(precondition)
    clauses["fail_probability"] = dist.fail_probability
    if kind == "absolute":
        fid = dist.mean_fidelity()
        fail_ok = dist.fail_probability <= tol
        good_ok = fid >= threshold - tol
        clauses["output_fidelity"] = fid
    elif kind == "deterministic":
        fid = dist.mean_fidelity(conditional=True)
        fail_ok = dist.fail_probability <= (params.p or 0.0) + tol
        good_ok = fid >= threshold - tol
        clauses["output_fidelity"] = fid
    else:
        succ = dist.success_probability
        good = sum(p for _, p, f in dist.grouped() if f >= threshold - tol)
        frac = good / succ if succ > 0 else float("nan")
        fail_ok = dist.fail_probability <= (params.p or 0.0) + tol
        good_ok = frac >= 1.0 - (params.q or 0.0) - tol
        clauses["good_fraction"] = frac
    clauses.update(fail_ok=bool(fail_ok), fidelity_ok=bool(good_ok))
    return GeppCheck(kind, bool(precondition and fail_ok and good_ok), clauses, params)
