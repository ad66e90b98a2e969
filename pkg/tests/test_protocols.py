import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from epurify import protocols as pr
from epurify import qstate as qs
from epurify.protocols import GeppParams, ProtocolError, SampleStats
from epurify.scramble import make_linear_function, make_multiplication_table
from oracles import dense_fidelity, dense_simple_scrambling


def fail_factor(N, L):
    return N * (L - 1) / (L * (N - 1))


def assert_conserved(dist, tol=1e-9):
    assert abs(dist.total - 1) < tol
    for b in dist.branches:
        assert abs(b.state.norm2 - 1) < tol
        assert b.probability >= 0


# ---------------------------------------------------------------- random permutation


def test_rpp_max_entangled():
    dist = pr.random_permutation_protocol(qs.max_entangled(4), 2)
    assert_conserved(dist)
    assert dist.fail_probability == 0
    assert pr.mismatch_probability(dist) < 1e-12
    assert all(abs(b.fidelity - 1) < 1e-12 and b.state.dim == 2 for b in dist.branches)
    assert dist.metadata["permutations"] == 24


@pytest.mark.parametrize("N,M", [(4, 2), (6, 2), (6, 3), (4, 4), (6, 1)])
@pytest.mark.parametrize("eps", [0.05, 0.2])
def test_rpp_diagonal_formula(N, M, eps):
    s = qs.random_state_near_target(N, eps, diagonal_only=True, seed=N * 10 + M)
    dist = pr.random_permutation_protocol(s, M)
    assert_conserved(dist)
    want = 1 - N / (N - 1) * (1 - 1 / M) * eps
    assert abs(dist.mean_fidelity() - want) < 1e-9


@pytest.mark.parametrize("delta", [0.0, 0.1, 0.5, 1.0])
@pytest.mark.parametrize("N,M", [(4, 2), (6, 2), (6, 3)])
def test_rpp_mismatch_formula(N, M, delta):
    s = qs.random_split_state(N, delta, seed=3)
    dist = pr.random_permutation_protocol(s, M)
    assert abs(pr.mismatch_probability(dist) - (N - M) / (N - 1) * delta) < 1e-9


def test_rpp_mismatch_branch_is_zero_state():
    s = qs.random_split_state(4, 0.5, seed=1)
    dist = pr.random_permutation_protocol(s, 2)
    zeros = [b for b in dist.branches if b.transcript.get("mismatch")]
    assert zeros and all(b.state.amplitude(0, 0) == 1 for b in zeros)
    assert all(abs(b.fidelity - 0.5) < 1e-12 for b in zeros)


@pytest.mark.parametrize("N,K,M", [(4, 1, 2), (4, 2, 4), (6, 2, 6), (6, 3, 6), (6, 1, 3), (4, 2, 2)])
def test_absolute_bound_witness(N, K, M):
    eps = 0.1
    rho = qs.adversarial_state(N, eps)
    assert abs(qs.fidelity(rho) - (1 - eps)) < 1e-12
    bound = 1 - (M - K) / M * N / (N - 1) * eps
    dist = pr.random_permutation_protocol(rho, M, K)
    assert_conserved(dist)
    assert abs(dist.mean_fidelity() - bound) < 1e-9
    # every fixed permutation is itself a never-failing protocol: none beats the bound
    for pi in itertools.islice(itertools.permutations(range(N)), 0, None, 7):
        single = pr.random_permutation_protocol(rho, M, K, perm=pi)
        assert single.mean_fidelity() <= bound + 1e-9


def test_rpp_errors():
    with pytest.raises(ProtocolError):
        pr.random_permutation_protocol(qs.max_entangled(6), 4)
    with pytest.raises(ProtocolError):
        pr.random_permutation_protocol(qs.max_entangled(4), 3, K=2)
    with pytest.raises(ProtocolError):
        pr.random_permutation_protocol(qs.max_entangled(8), 2)


def test_rpp_seeded_single_perm():
    s = qs.random_state_near_target(8, 0.1, seed=2)
    dist = pr.random_permutation_protocol(s, 2, seed=5)
    assert dist.metadata["permutations"] == 1
    assert_conserved(dist)
    again = pr.random_permutation_protocol(s, 2, seed=5)
    assert [b.transcript for b in dist.branches] == [b.transcript for b in again.branches]


# ---------------------------------------------------------------- simple scrambling


SMALL_PERMS = [make_multiplication_table(3, 1), make_multiplication_table(3, 2), make_multiplication_table(2, 1), make_linear_function(1)]


@pytest.mark.parametrize("perm", SMALL_PERMS, ids=lambda p: f"{p.kind}-{p.args}")
@pytest.mark.parametrize("hadamard", [False, True])
@pytest.mark.parametrize("diagonal", [False, True])
def test_simple_scrambling_against_dense_oracle(perm, hadamard, diagonal):
    N = perm.params.N
    s = qs.random_state_near_target(N, 0.25, diagonal_only=diagonal, seed=17)
    dist = pr.simple_scrambling(s, perm, use_hadamard=hadamard)
    assert_conserved(dist)
    fail, branches = dense_simple_scrambling(s.to_dense(), perm, hadamard)
    assert abs(dist.fail_probability - fail) < 1e-9
    assert sorted(b.transcript["g"] for b in dist.branches) == sorted(branches)
    for b in dist.branches:
        prob, mat = branches[b.transcript["g"]]
        assert abs(b.probability - prob) < 1e-9
        assert abs(abs(np.vdot(mat.ravel(), b.state.to_dense().ravel())) - 1) < 1e-9
        assert abs(b.fidelity - dense_fidelity(mat)) < 1e-9


@pytest.mark.parametrize("eps", [0.05, 0.1, 0.3])
@pytest.mark.parametrize("perm", SMALL_PERMS[:3], ids=lambda p: f"{p.kind}-{p.args}")
def test_simple_scrambling_diagonal_formulas(perm, eps):
    p = perm.params
    s = qs.random_state_near_target(p.N, eps, diagonal_only=True, seed=int(eps * 100))
    dist = pr.simple_scrambling(s, perm)
    fail = eps * fail_factor(p.N, p.L)
    assert abs(dist.fail_probability - fail) < 1e-9
    assert abs(dist.mean_fidelity(conditional=True) - (1 - eps) / (1 - fail)) < 1e-9
    assert dist.mean_fidelity(conditional=True) >= 1 - 2 * p.W / p.N * eps - 1e-12
    # every branch carries the same state
    first = dist.branches[0].state
    assert all(qs.same_up_to_phase(first, b.state) for b in dist.branches)


def test_simple_scrambling_concrete_numbers():
    perm = make_multiplication_table(3, 1)
    s = qs.random_state_near_target(8, 0.1, diagonal_only=True, seed=0)
    dist = pr.simple_scrambling(s, perm)
    assert abs(dist.fail_probability - 1 / 17.5) < 1e-12
    assert abs(dist.mean_fidelity(conditional=True) - 0.9 / (1 - 1 / 17.5)) < 1e-12
    assert abs(dist.mean_fidelity(conditional=True) - 0.954545454545) < 1e-11


def test_simple_scrambling_max_entangled():
    perm = make_multiplication_table(3, 1)
    dist = pr.simple_scrambling(qs.max_entangled(8), perm)
    assert dist.fail_probability < 1e-12
    p = perm.params
    for b in dist.branches:
        assert b.state.dim == p.W * p.K
        assert abs(b.fidelity - 1) < 1e-12
    assert dist.metadata["M"] == p.W * p.K


def test_simple_scrambling_ensemble_combination():
    perm = make_multiplication_table(3, 1)
    comps = [qs.random_state_near_target(8, e, diagonal_only=d, seed=i) for i, (e, d) in enumerate([(0.1, True), (0.3, False), (0.2, True)])]
    w = (0.5, 0.3, 0.2)
    ens = qs.Ensemble(w, tuple(comps))
    dist = pr.simple_scrambling(ens, perm)
    assert_conserved(dist)
    singles = [pr.simple_scrambling(c, perm) for c in comps]
    assert abs(dist.fail_probability - sum(p * d.fail_probability for p, d in zip(w, singles))) < 1e-9
    for i, (p, d) in enumerate(zip(w, singles)):
        for b in d.branches:
            mixed = dist.find({"component": i, **b.transcript})
            assert abs(mixed.probability - p * b.probability) < 1e-9
            assert qs.same_up_to_phase(mixed.state, b.state)
    assert abs(dist.mean_fidelity() - sum(p * d.mean_fidelity() for p, d in zip(w, singles))) < 1e-9


def test_simple_scrambling_errors():
    with pytest.raises(ProtocolError):
        pr.simple_scrambling(qs.max_entangled(4), make_multiplication_table(3, 1))


# ---------------------------------------------------------------- hash and compare


def test_hash_diagonal_is_noop():
    s = qs.random_state_near_target(8, 0.3, diagonal_only=True, seed=4)
    dist = pr.hash_and_compare(s, r=[3, 5, 6])
    assert dist.fail_probability == 0
    (b,) = dist.branches
    assert b.probability == pytest.approx(1, abs=1e-12)
    assert qs.same_up_to_phase(b.state, s)
    assert dist.metadata["epr_pairs_consumed"] == 3 and dist.metadata["S"] == 8


@given(st.integers(0, 2**32 - 1), st.sampled_from([4, 8, 16]), st.integers(1, 4), st.floats(0.0, 0.45))
@settings(max_examples=60, deadline=None)
def test_hash_branch_monotone(seed, N, s, eps):
    rng = np.random.default_rng(seed)
    state = qs.random_state_near_target(N, eps, seed=seed)
    r = [int(v) for v in rng.integers(0, N, size=s)]
    dist = pr.hash_and_compare(state, r=r)
    assert_conserved(dist)
    lam = dist.metadata["lambda_sq"]
    assert abs(sum(lam) - 1) < 1e-9
    assert dist.fail_probability <= eps + 1e-9
    for b in dist.branches:
        assert b.fidelity >= qs.fidelity(state) - 1e-9


def test_hash_enumeration_matches_direct_sum():
    N, s = 4, 2
    state = qs.random_state_near_target(N, 0.3, seed=8)
    dist = pr.hash_and_compare(state, s=s)
    fail = lam1 = 0.0
    for r in itertools.product(range(N), repeat=s):
        one = pr.hash_and_compare(state, r=list(r))
        fail += one.fail_probability / N**s
        lam1 += one.metadata["lambda_sq"][1] / N**s
    assert abs(dist.fail_probability - fail) < 1e-12
    assert abs(dist.metadata["lambda_sq"][1] - lam1) < 1e-12
    assert sum(c for _, c, _ in pr.enumerate_hash_classes(N, s)) == N**s


@pytest.mark.parametrize("N,s", [(4, 1), (8, 2), (16, 3), (16, 4)])
def test_hash_mean_lambda1_exact(N, s):
    state = qs.random_state_near_target(N, 0.2, seed=N + s)
    beta2 = 1 - qs.fidelity_with_diagonal(state)
    dist = pr.hash_and_compare(state, s=s)
    # each nonzero difference survives all s parity checks with probability exactly 2^-s
    assert abs(dist.metadata["lambda_sq"][1] - beta2 / 2**s) < 1e-12
    assert dist.metadata["lambda_sq"][1] <= 0.2 / 2**s + 1e-12


def test_hash_errors():
    with pytest.raises(ProtocolError):
        pr.hash_and_compare(qs.max_entangled(6), r=[1])
    with pytest.raises(ProtocolError):
        pr.hash_and_compare(qs.max_entangled(8), r=[8])
    with pytest.raises(ProtocolError):
        pr.hash_and_compare(qs.max_entangled(8))
    with pytest.raises(ProtocolError):
        pr.hash_and_compare(qs.max_entangled(8), r=[1] * 13)


def test_hash_syndrome_bits():
    diff = np.array([0b101, 0b011, 0])
    syn = pr.hash_syndrome(diff, [0b001, 0b110])
    assert list(syn) == [0b11, 0b11, 0]


# ---------------------------------------------------------------- complete scrambling


def test_complete_max_entangled():
    perm = make_multiplication_table(3, 2)
    dist = pr.complete_scrambling(qs.max_entangled(8), perm, s=2)
    assert dist.fail_probability < 1e-12
    assert all(abs(b.fidelity - 1) < 1e-12 and b.state.dim == perm.params.W * perm.params.K for b in dist.branches)
    assert dist.metadata["T"] == 4 * perm.params.K


def test_complete_diagonal_equals_simple():
    perm = make_multiplication_table(3, 1)
    s = qs.random_state_near_target(8, 0.15, diagonal_only=True, seed=6)
    full = pr.complete_scrambling(s, perm, r=[1, 6])
    simple = pr.simple_scrambling(s, perm)
    assert abs(full.fail_probability - simple.fail_probability) < 1e-12
    for b in simple.branches:
        other = full.find({"r": [1, 6], "g": b.transcript["g"]})
        assert abs(other.probability - b.probability) < 1e-12
        assert qs.same_up_to_phase(other.state, b.state)


def test_complete_composition():
    perm = make_multiplication_table(3, 1)
    s = qs.random_state_near_target(8, 0.2, seed=9)
    r = [3, 5]
    full = pr.complete_scrambling(s, perm, r=r)
    hc = pr.hash_and_compare(s, r=r)
    (hb,) = hc.branches
    ss = pr.simple_scrambling(hb.state, perm)
    assert abs(full.fail_probability - (hc.fail_probability + hb.probability * ss.fail_probability)) < 1e-12
    assert_conserved(full)


def test_complete_exact_probabilistic_definition():
    perm = make_multiplication_table(3, 2)
    eps, s = 0.05, 4
    state = qs.random_state_near_target(8, eps, seed=1)
    dist = pr.complete_scrambling(state, perm, s=s)
    assert_conserved(dist)
    from epurify.bounds import complete_scrambling_prediction

    params = complete_scrambling_prediction(8, perm.params.W, 2**s, eps, perm.params.K)
    check = pr.check_gepp_definition(dist, params, "probabilistic")
    assert check.passed, check.clauses


# ---------------------------------------------------------------- definition checks


def test_check_definitions():
    N, M, eps = 4, 2, 0.1
    diag = qs.random_state_near_target(N, eps, diagonal_only=True, seed=3)
    rpp = pr.random_permutation_protocol(diag, M)
    delta = (M - 1) / M * N / (N - 1) * eps
    assert pr.check_gepp_definition(rpp, GeppParams(N, 1, M, eps, delta), "absolute").passed
    assert not pr.check_gepp_definition(rpp, GeppParams(N, 1, M, eps, 0.0), "absolute").passed

    perm = make_multiplication_table(3, 1)
    p = perm.params
    ss = pr.simple_scrambling(qs.random_state_near_target(8, eps, diagonal_only=True, seed=3), perm)
    good = GeppParams(8, p.K, p.W * p.K, eps, 2 * p.W / p.N * eps, eps)
    assert pr.check_gepp_definition(ss, good, "deterministic").passed
    assert not pr.check_gepp_definition(ss, GeppParams(8, p.K, p.W * p.K, eps, 0.0, eps), "deterministic").passed
    # precondition: an input that is worse than 1 - eps is not covered by the definition
    worse = pr.simple_scrambling(qs.random_state_near_target(8, 0.3, diagonal_only=True, seed=3), perm)
    assert not pr.check_gepp_definition(worse, good, "deterministic").clauses["precondition_ok"]
    with pytest.raises(ProtocolError):
        pr.check_gepp_definition(ss, good, "sometimes")


def test_check_definitions_sampled():
    perm = make_multiplication_table(3, 1)
    p = perm.params
    eps = 0.1
    s = qs.random_state_near_target(8, eps, diagonal_only=True, seed=3)
    recs = pr.sample_runs("simple-scrambling", s, 2000, seed=1, perm=perm)
    stats = SampleStats.from_records(recs)
    params = GeppParams(8, p.K, p.W * p.K, eps, 2 * p.W / p.N * eps, eps)
    assert pr.check_gepp_definition(stats, params, "deterministic").passed
    assert not pr.check_gepp_definition(stats, GeppParams(8, p.K, p.W * p.K, eps, 0.0, 0.0), "deterministic").passed


def test_gepp_params_validation():
    with pytest.raises(ProtocolError):
        GeppParams(4, 1, 2, 1.5, 0.1)
    with pytest.raises(ProtocolError):
        GeppParams(0, 1, 2, 0.1, 0.1)


def test_wilson_interval():
    lo, hi = pr.wilson_interval(50, 100, z=4.0)
    assert lo < 0.5 < hi
    assert pr.wilson_interval(0, 0) == (0.0, 1.0)
    z = 4.0
    n, k = 1000, 100
    p = k / n
    center = (p + z * z / (2 * n)) / (1 + z * z / n)
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / (1 + z * z / n)
    assert pr.wilson_interval(k, n, z) == pytest.approx((center - half, center + half), abs=1e-12)


# ---------------------------------------------------------------- sampling


def within_4se(count, n, prob):
    se = math.sqrt(max(prob * (1 - prob), 1e-12) / n)
    return abs(count / n - prob) <= 4 * se + 1e-12


def test_sampled_matches_exact_simple_scrambling():
    perm = make_multiplication_table(3, 2)
    state = qs.random_state_near_target(8, 0.3, seed=12)
    exact = pr.simple_scrambling(state, perm)
    recs = pr.sample_runs("simple-scrambling", state, 10_000, seed=3, perm=perm)
    n = len(recs)
    assert within_4se(sum(r.failed for r in recs), n, exact.fail_probability)
    for b in exact.branches:
        count = sum(1 for r in recs if r.transcript == b.transcript)
        assert within_4se(count, n, b.probability)


def test_sampled_matches_exact_rpp_and_hash():
    state = qs.random_split_state(4, 0.4, seed=2)
    exact = pr.random_permutation_protocol(state, 2)
    recs = pr.sample_runs("random-permutation", state, 10_000, seed=4, M=2)
    count = sum(1 for r in recs if r.transcript.get("mismatch"))
    assert within_4se(count, len(recs), pr.mismatch_probability(exact))

    hstate = qs.random_state_near_target(16, 0.2, seed=5)
    exact = pr.hash_and_compare(hstate, s=2)
    recs = pr.sample_runs("hash-and-compare", hstate, 10_000, seed=6, s=2)
    assert within_4se(sum(r.failed for r in recs), len(recs), exact.fail_probability)


def test_sampling_is_worker_independent_and_replayable():
    perm = make_multiplication_table(3, 1)
    state = qs.random_state_near_target(8, 0.2, seed=7)
    one = pr.sample_runs("complete-scrambling", state, 200, seed=9, perm=perm, s=3)
    four = pr.sample_runs("complete-scrambling", state, 200, seed=9, workers=4, perm=perm, s=3)
    assert [r.to_dict() for r in one] == [r.to_dict() for r in four]
    for rec in one[:50]:
        back = pr.RunRecord.from_dict(rec.to_dict())
        again = pr.replay(back, state, perm=perm, s=3)
        assert again.to_dict() == rec.to_dict()
    other = pr.sample_runs("complete-scrambling", state, 200, seed=10, perm=perm, s=3)
    assert [r.randomness for r in one] != [r.randomness for r in other]


def test_sample_needs_seed():
    with pytest.raises(ProtocolError):
        pr.sample_runs("hash-and-compare", qs.max_entangled(4), 10, None, s=1)
    with pytest.raises(ProtocolError):
        pr.sample_runs("teleport", qs.max_entangled(4), 10, 1)


def test_hash_records_lambda_diagnostics():
    state = qs.random_state_near_target(16, 0.2, seed=1)
    for rec in pr.sample_runs("hash-and-compare", state, 300, seed=2, s=4):
        lam = rec.diagnostics["lambda_sq"]
        assert abs(sum(lam) - 1) < 1e-9
        assert rec.failed or rec.fidelity >= 0.8 - 1e-9


def test_schmidt_rank_never_increases():
    perm = make_multiplication_table(3, 1)
    K = perm.params.K
    # (protocol, params, Schmidt rank of the auxiliary state the protocol adds)
    cases = [
        ("random-permutation", {"M": 2}, 1),
        ("random-permutation", {"M": 4, "K": 2}, 2),
        ("simple-scrambling", {"perm": perm}, K),
        ("hash-and-compare", {"s": 2}, 1),
        ("complete-scrambling", {"perm": perm, "s": 2}, K),
    ]
    trajectories = 0
    for k in range(8):
        state = qs.random_state_near_target(8, 0.3, diagonal_only=bool(k % 2), seed=k)
        rank_in = qs.schmidt_rank(state)
        for j, (protocol, params, aux_rank) in enumerate(cases):
            for rec in pr.sample_runs(protocol, state, 25, seed=100 * k + j, **params):
                trajectories += 1
                if not rec.failed:
                    assert qs.schmidt_rank(rec.outcome) <= rank_in * aux_rank
    assert trajectories == 1000
