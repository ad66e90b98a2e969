"""Scrambling permutations: y-indexed families x -> g_y(x) o h_y(x).

Every construction here is materialised as integer lookup tables of shape
(K, N): ``g[y, x]`` and ``h[y, x]``. The joint output g o h is encoded as
``g * W + h``, i.e. G is the high-order part of the string.

Index conventions
-----------------
* Multiplication table: X = GF(2^n) as n-bit values; Y index i is the
  field element i + 1.
* Linear function: x = x0 * 2^n + x1; Y index 0 is the symbol bottom,
  index i + 1 is the field element i.
* Extended linear: tuples are packed little-endian, element j at bit
  offset j * n (so for d = 2 the table coincides with the linear function
  construction). Y indices are grouped by tuple length k = 0 .. d-1; the
  block for length k starts at sum_{j<k} 2^{jn} and the tuple inside it is
  packed little-endian as well.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from .gf2n import mul_table

MAX_VERIFY_N = 1 << 12


@dataclass(frozen=True)
class ScrambleParams:
    N: int
    K: int
    W: int
    L: int

    def __post_init__(self):
        if min(self.N, self.K, self.W, self.L) < 1:
            raise ValueError(f"scramble parameters must be positive: {self}")
        if self.N != self.W * self.L:
            raise ValueError(f"N must equal W*L: {self}")

    @property
    def collision_probability(self) -> Fraction:
        return Fraction(self.L - 1, self.N - 1)

    def satisfies_kl_bound(self) -> bool:
        return self.N <= self.K * self.L


@dataclass(frozen=True, eq=False)
class ScramblePerm:
    params: ScrambleParams
    kind: str
    args: dict
    g: np.ndarray = field(repr=False)
    h: np.ndarray = field(repr=False)

    def __post_init__(self):
        K, N = self.params.K, self.params.N
        if self.g.shape != (K, N) or self.h.shape != (K, N):
            raise ValueError(f"tables must have shape {(K, N)}")
        for table in (self.g, self.h):
            table.setflags(write=False)

    @property
    def forward(self) -> np.ndarray:
        """Table of g_y(x) o h_y(x) as an index into X."""
        return self.g * self.params.W + self.h

    def apply(self, x: int, y: int) -> tuple[int, int]:
        return int(self.g[y, x]), int(self.h[y, x])

    def inverse(self, z: int, y: int) -> int:
        """Recover x from z = g_y(x) o h_y(x)."""
        return int(self.inverse_table[y, z])

    @property
    def inverse_table(self) -> np.ndarray:
        cached = self.__dict__.get("_inverse")
        if cached is None:
            fwd = self.forward
            cached = np.empty_like(fwd)
            rows = np.arange(fwd.shape[0])[:, None]
            cached[rows, fwd] = np.arange(fwd.shape[1])[None, :]
            object.__setattr__(self, "_inverse", cached)
        return cached

    def with_tables(self, g: np.ndarray, h: np.ndarray, kind: str | None = None) -> ScramblePerm:
        return ScramblePerm(self.params, kind or self.kind, dict(self.args), g.copy(), h.copy())


def make_multiplication_table(n: int, l: int) -> ScramblePerm:
    """g_y(x) = top l bits of x*y, h_y(x) = bottom n-l bits, y ranging over GF(2^n)*."""
    if not 1 <= l < n <= 8:
        raise ValueError(f"need 1 <= l < n <= 8, got n={n}, l={l}")
    N = 1 << n
    prod = mul_table(n)[:, 1:].T  # row y-1 <-> field element y
    low = n - l
    g = prod >> low
    h = prod & ((1 << low) - 1)
    params = ScrambleParams(N=N, K=N - 1, W=1 << low, L=1 << l)
    return ScramblePerm(params, "multiplication-table", {"n": n, "l": l}, g.copy(), h.copy())


def make_linear_function(n: int) -> ScramblePerm:
    """X = GF(2^n)^2, h_y(x0, x1) = x0*y + x1 (or x0 when y is bottom)."""
    if not 1 <= n <= 4:
        raise ValueError(f"need 1 <= n <= 4, got n={n}")
    q = 1 << n
    xs = np.arange(q * q)
    x0, x1 = xs >> n, xs & (q - 1)
    table = mul_table(n)
    g = np.empty((q + 1, q * q), dtype=np.int64)
    h = np.empty_like(g)
    g[0], h[0] = x1, x0
    for y in range(q):
        g[y + 1] = x0
        h[y + 1] = table[x0, y] ^ x1
    params = ScrambleParams(N=q * q, K=q + 1, W=q, L=q)
    return ScramblePerm(params, "linear-function", {"n": n}, g, h)


def extended_y_offsets(n: int, d: int) -> list[int]:
    offsets = [0]
    for k in range(d - 1):
        offsets.append(offsets[-1] + (1 << (k * n)))
    return offsets


def decode_extended_y(index: int, n: int, d: int) -> tuple[int, ...]:
    """Y index -> tuple (y_0, ..., y_{k-1}); the empty tuple is bottom."""
    offsets = extended_y_offsets(n, d)
    k = max(i for i, off in enumerate(offsets) if off <= index)
    rel = index - offsets[k]
    mask = (1 << n) - 1
    return tuple((rel >> (j * n)) & mask for j in range(k))


def encode_extended_y(y: tuple[int, ...], n: int, d: int) -> int:
    offsets = extended_y_offsets(n, d)
    return offsets[len(y)] + sum(v << (j * n) for j, v in enumerate(y))


def pack_tuple(values, n: int) -> int:
    return sum(int(v) << (j * n) for j, v in enumerate(values))


def unpack_tuple(x: int, n: int, length: int) -> tuple[int, ...]:
    mask = (1 << n) - 1
    return tuple((x >> (j * n)) & mask for j in range(length))


def make_extended_linear(n: int, d: int) -> ScramblePerm:
    """X = GF(2^n)^d; for y = (y_0..y_{k-1}): g = x_k,
    h = (x_0 + x_k y_0, ..., x_{k-1} + x_k y_{k-1}, x_{k+1}, ..., x_{d-1})."""
    if n < 1 or d < 2 or n * d > 12:
        raise ValueError(f"need n >= 1, d >= 2, n*d <= 12, got n={n}, d={d}")
    q = 1 << n
    N = q**d
    K = (N - 1) // (q - 1)
    mask = q - 1
    table = mul_table(n)
    xs = np.arange(N)
    digits = [(xs >> (j * n)) & mask for j in range(d)]
    g = np.empty((K, N), dtype=np.int64)
    h = np.empty((K, N), dtype=np.int64)
    offsets = extended_y_offsets(n, d)
    for k in range(d):
        xk = digits[k]
        rest = sum(digits[j] << ((j - 1) * n) for j in range(k + 1, d)) if k + 1 < d else 0
        for rel in range(q**k):
            row = offsets[k] + rel
            ys = [(rel >> (j * n)) & mask for j in range(k)]
            low = 0
            for j, yj in enumerate(ys):
                low = low | ((digits[j] ^ table[xk, yj]) << (j * n))
            g[row] = xk
            h[row] = low | rest
    params = ScrambleParams(N=N, K=K, W=q ** (d - 1), L=q)
    return ScramblePerm(params, "extended-linear", {"n": n, "d": d}, g, h)


def extended_case_table(d: int) -> list[dict]:
    """Symbolic g/h rows of the extended construction, one per tuple length k."""
    rows = []
    for k in range(d):
        y = "bottom" if k == 0 else "<" + ", ".join(f"y{j}" for j in range(k)) + ">"
        h = [f"x{j} + x{k}*y{j}" for j in range(k)] + [f"x{j}" for j in range(k + 1, d)]
        rows.append({"y": y, "g": f"x{k}", "h": h})
    return rows


def build(construction: str, n: int, l: int | None = None, d: int | None = None) -> ScramblePerm:
    if construction in ("multiplication-table", "mt"):
        if l is None:
            raise ValueError("multiplication-table needs a split point l")
        return make_multiplication_table(n, l)
    if construction in ("linear-function", "linear"):
        return make_linear_function(n)
    if construction in ("extended-linear", "extended"):
        if d is None:
            raise ValueError("extended-linear needs a tuple length d")
        return make_extended_linear(n, d)
    raise ValueError(f"unknown construction {construction!r}")


@dataclass
class VerificationReport:
    kind: str
    args: dict
    N: int
    K: int
    W: int
    L: int
    bijective: list[bool]
    collision_histogram: dict[int, int]
    uniform: bool
    p_measured: Fraction
    p_min: Fraction
    p_max: Fraction
    p_expected: Fraction
    p_matches: bool
    kl_bound: bool
    collision_counts: np.ndarray | None = field(default=None, repr=False)

    @property
    def all_bijective(self) -> bool:
        return all(self.bijective)

    @property
    def passed(self) -> bool:
        return self.all_bijective and self.uniform and self.p_matches and self.kl_bound

    def to_dict(self) -> dict:
        out = asdict(self)
        out.pop("collision_counts")
        out["bijective"] = self.all_bijective
        out["non_bijective_y"] = [y for y, ok in enumerate(self.bijective) if not ok]
        out["collision_histogram"] = {str(k): v for k, v in sorted(self.collision_histogram.items())}
        for key in ("p_measured", "p_min", "p_max", "p_expected"):
            out[key] = str(getattr(self, key))
        out["passed"] = self.passed
        return out

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def collision_counts(h: np.ndarray) -> np.ndarray:
    """counts[i, j] = #{y : h[y, i] == h[y, j]} for i != j (diagonal zeroed)."""
    K, N = h.shape
    counts = np.zeros((N, N), dtype=np.int64)
    for row in h:
        order = np.argsort(row, kind="stable")
        sorted_h = row[order]
        cuts = np.flatnonzero(np.diff(sorted_h)) + 1
        sizes = np.diff(np.concatenate(([0], cuts, [N])))
        if np.all(sizes == sizes[0]):
            groups = order.reshape(-1, sizes[0])
            counts[groups[:, :, None], groups[:, None, :]] += 1
        else:
            for grp in np.split(order, cuts):
                counts[np.ix_(grp, grp)] += 1
    np.fill_diagonal(counts, 0)
    return counts


def verify_scrambling(perm: ScramblePerm, keep_counts: bool = True) -> VerificationReport:
    """Exhaustively check the permutation and uniform-collision conditions."""
    params = perm.params
    N, K = params.N, params.K
    if N > MAX_VERIFY_N:
        raise ValueError(f"exhaustive verification limited to N <= {MAX_VERIFY_N}")
    fwd = perm.forward
    bijective = [bool(np.array_equal(np.sort(row), np.arange(N))) for row in fwd]
    counts = collision_counts(perm.h)
    upper = counts[np.triu_indices(N, k=1)]
    histogram = Counter(int(c) for c in upper) if N > 1 else Counter()
    lo = int(upper.min()) if upper.size else 0
    hi = int(upper.max()) if upper.size else 0
    pairs = N * (N - 1) // 2
    total = int(upper.sum())
    p_measured = Fraction(total, K * pairs) if pairs else Fraction(0)
    p_expected = params.collision_probability if N > 1 else Fraction(0)
    return VerificationReport(
        kind=perm.kind,
        args=dict(perm.args),
        N=N,
        K=K,
        W=params.W,
        L=params.L,
        bijective=bijective,
        collision_histogram=dict(histogram),
        uniform=len(histogram) <= 1,
        p_measured=p_measured,
        p_min=Fraction(lo, K),
        p_max=Fraction(hi, K),
        p_expected=p_expected,
        # exact integer identity: count * (N-1) == K * (L-1) for every pair
        p_matches=len(histogram) <= 1 and lo * (N - 1) == K * (params.L - 1),
        kl_bound=params.satisfies_kl_bound(),
        collision_counts=counts if keep_counts else None,
    )
