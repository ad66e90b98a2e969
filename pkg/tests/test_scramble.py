import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from epurify.gf2n import mul_int
from epurify.scramble import (
    ScrambleParams,
    build,
    collision_counts,
    decode_extended_y,
    encode_extended_y,
    extended_case_table,
    make_extended_linear,
    make_linear_function,
    make_multiplication_table,
    pack_tuple,
    unpack_tuple,
    verify_scrambling,
)

CASES = [("mt", n, l, None) for n in (2, 3, 4) for l in range(1, n)]
CASES += [("linear", n, None, None) for n in (1, 2, 3)]
CASES += [("extended", 1, None, d) for d in (2, 3, 4, 5)] + [("extended", 2, None, d) for d in (2, 3)]


def ids(case):
    return "-".join(str(v) for v in case if v is not None)


# scalar oracles written directly from the defining formulas


def oracle_mt(n, l, y, x):
    prod = mul_int(x, y, n)
    return prod >> (n - l), prod & ((1 << (n - l)) - 1)


def oracle_linear(n, y, x):
    x0, x1 = x >> n, x & ((1 << n) - 1)
    if y is None:
        return x1, x0
    return x0, mul_int(x0, y, n) ^ x1


def oracle_extended(n, d, ys, x):
    xs = unpack_tuple(x, n, d)
    k = len(ys)
    h = [xs[j] ^ mul_int(xs[k], ys[j], n) for j in range(k)] + list(xs[k + 1 :])
    return xs[k], pack_tuple(h, n)


def test_params_examples():
    assert make_multiplication_table(3, 1).params == ScrambleParams(8, 7, 4, 2)
    assert make_linear_function(2).params == ScrambleParams(16, 5, 4, 4)
    assert make_extended_linear(2, 3).params.K == 21
    assert make_extended_linear(1, 4).params == ScrambleParams(16, 15, 8, 2)


def test_params_validation():
    with pytest.raises(ValueError):
        ScrambleParams(8, 7, 3, 2)
    with pytest.raises(ValueError):
        make_multiplication_table(3, 3)
    with pytest.raises(ValueError):
        make_multiplication_table(3, 0)
    with pytest.raises(ValueError):
        make_linear_function(5)
    with pytest.raises(ValueError):
        make_extended_linear(3, 5)
    with pytest.raises(ValueError):
        make_extended_linear(2, 1)
    with pytest.raises(ValueError):
        build("nope", 3)


def test_mt_against_oracle():
    for n in (3, 4):
        for l in range(1, n):
            perm = make_multiplication_table(n, l)
            for yi, x in itertools.product(range(perm.params.K), range(perm.params.N)):
                assert perm.apply(x, yi) == oracle_mt(n, l, yi + 1, x)


def test_mt_identity_row():
    perm = make_multiplication_table(3, 1)
    assert np.array_equal(perm.forward[0], np.arange(8))


def test_linear_against_oracle():
    for n in (1, 2, 3):
        perm = make_linear_function(n)
        for yi, x in itertools.product(range(perm.params.K), range(perm.params.N)):
            y = None if yi == 0 else yi - 1
            assert perm.apply(x, yi) == oracle_linear(n, y, x)


def test_linear_bottom_row():
    perm = make_linear_function(2)
    x0, x1 = 0b10, 0b01
    assert perm.apply((x0 << 2) | x1, 0) == (x1, x0)


@pytest.mark.parametrize("n,d", [(1, 2), (1, 3), (1, 4), (2, 2), (2, 3), (3, 2)])
def test_extended_against_oracle(n, d):
    perm = make_extended_linear(n, d)
    for yi, x in itertools.product(range(perm.params.K), range(perm.params.N)):
        assert perm.apply(x, yi) == oracle_extended(n, d, decode_extended_y(yi, n, d), x)


def test_extended_d4_top_row():
    n, d = 1, 4
    perm = make_extended_linear(n, d)
    for ys in itertools.product(range(2), repeat=3):
        yi = encode_extended_y(ys, n, d)
        for x in range(16):
            x0, x1, x2, x3 = unpack_tuple(x, n, 4)
            g, h = perm.apply(x, yi)
            assert g == x3
            assert unpack_tuple(h, n, 3) == (x0 ^ (x3 & ys[0]), x1 ^ (x3 & ys[1]), x2 ^ (x3 & ys[2]))
    table = extended_case_table(4)
    assert table[3] == {"y": "<y0, y1, y2>", "g": "x3", "h": ["x0 + x3*y0", "x1 + x3*y1", "x2 + x3*y2"]}
    assert table[0]["y"] == "bottom" and table[0]["g"] == "x0"


@pytest.mark.parametrize("n", [1, 2, 3])
def test_extended_d2_equals_linear(n):
    ext, lin = make_extended_linear(n, 2), make_linear_function(n)
    assert ext.params == lin.params
    assert np.array_equal(ext.g, lin.g)
    assert np.array_equal(ext.h, lin.h)


def test_y_encoding_roundtrip():
    for n, d in [(1, 4), (2, 3), (3, 2)]:
        K = make_extended_linear(n, d).params.K
        seen = [decode_extended_y(i, n, d) for i in range(K)]
        assert len(set(seen)) == K
        assert seen[0] == ()
        for i, ys in enumerate(seen):
            assert encode_extended_y(ys, n, d) == i


@pytest.mark.parametrize("case", CASES, ids=ids)
def test_verify_all_constructions(case):
    perm = build(*case)
    report = verify_scrambling(perm)
    p = perm.params
    assert report.all_bijective
    assert report.uniform
    assert report.p_matches
    assert report.p_measured == Fraction(p.L - 1, p.N - 1)
    counts = report.collision_counts
    off = counts[~np.eye(p.N, dtype=bool)]
    assert np.all(off * (p.N - 1) == p.K * (p.L - 1))
    assert p.N <= p.K * p.L
    assert report.passed


def test_mt_3_1_collision_probability():
    report = verify_scrambling(make_multiplication_table(3, 1))
    assert report.p_measured == Fraction(1, 7)
    assert report.collision_histogram == {1: 28}


def test_linear_unique_collision():
    report = verify_scrambling(make_linear_function(2))
    assert report.collision_histogram == {1: 120}
    assert report.p_measured == Fraction(1, 5)


def test_collision_counts_bruteforce():
    perm = make_extended_linear(1, 3)
    h = perm.h
    N = perm.params.N
    brute = np.array([[0 if i == j else int(np.sum(h[:, i] == h[:, j])) for j in range(N)] for i in range(N)])
    assert np.array_equal(collision_counts(h), brute)


def test_corrupted_evaluator_detected():
    perm = make_multiplication_table(3, 1)
    g, h = perm.g.copy(), perm.h.copy()
    # swap the outputs of x=1 and x=2 under one y: still a permutation
    g[2, [1, 2]] = g[2, [2, 1]]
    h[2, [1, 2]] = h[2, [2, 1]]
    report = verify_scrambling(perm.with_tables(g, h, "corrupted"))
    assert report.all_bijective
    assert not report.uniform
    assert not report.passed


def test_non_bijective_detected():
    perm = make_multiplication_table(3, 1)
    g, h = perm.g.copy(), perm.h.copy()
    g[4, 0], h[4, 0] = g[4, 1], h[4, 1]
    report = verify_scrambling(perm.with_tables(g, h))
    assert report.bijective[4] is False
    assert report.to_dict()["non_bijective_y"] == [4]


def test_report_json():
    report = verify_scrambling(make_multiplication_table(3, 2))
    d = report.to_dict()
    assert d["p_measured"] == "3/7"
    assert d["passed"] is True
    assert '"uniform": true' in report.to_json()


def test_extended_near_optimal():
    for n, d in [(1, 2), (1, 3), (1, 4), (1, 6), (2, 2), (2, 3), (3, 2), (4, 3)]:
        p = make_extended_linear(n, d).params
        assert p.N <= p.K * p.L < 2 * p.N
    # K L / N = q (q^d - 1) / ((q - 1) q^d) rises towards q / (q - 1)
    for n in (1, 2, 3):
        q = 1 << n
        ds = [d for d in range(2, 13) if n * d <= 12]
        ratios = [Fraction(p.K * p.L, p.N) for p in (make_extended_linear(n, d).params for d in ds)]
        assert ratios == sorted(ratios)
        assert all(r < Fraction(q, q - 1) for r in ratios)


@given(st.sampled_from([("mt", 4, 1, None), ("mt", 5, 3, None), ("linear", 3, None, None), ("extended", 2, None, 3)]), st.data())
@settings(max_examples=100)
def test_inverse_roundtrip(case, data):
    perm = build(*case)
    x = data.draw(st.integers(0, perm.params.N - 1))
    y = data.draw(st.integers(0, perm.params.K - 1))
    g, h = perm.apply(x, y)
    assert perm.inverse(g * perm.params.W + h, y) == x


def test_inverse_table_exhaustive():
    perm = make_extended_linear(2, 2)
    rows = np.arange(perm.params.K)[:, None]
    assert np.array_equal(perm.inverse_table[rows, perm.forward], np.broadcast_to(np.arange(perm.params.N), perm.forward.shape))
