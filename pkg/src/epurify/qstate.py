"""Sparse pure bipartite states, ensembles, and the local operations the
protocols need.

A ``SparseState`` stores only the nonzero amplitudes alpha[a, b] of
sum alpha[a, b] |a>^A |b>^B as three parallel numpy arrays. Each side
carries a ``RegisterLayout``; a global index is the big-endian
concatenation of register digits, so register order matches string
concatenation x o y.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

from .scramble import ScramblePerm

PRUNE_TOL = 1e-12
NORM_TOL = 1e-9
BRANCH_TOL = 1e-15
RANK_TOL = 1e-9


class StateError(ValueError):
    pass


class NormalizationError(StateError):
    pass


class LayoutError(StateError):
    pass


# ---------------------------------------------------------------- layouts


@dataclass(frozen=True)
class RegisterLayout:
    registers: tuple[tuple[str, int], ...] = ()

    def __post_init__(self):
        regs = tuple((str(name), int(dim)) for name, dim in self.registers)
        for name, dim in regs:
            if dim < 1:
                raise LayoutError(f"register {name!r} has dimension {dim}")
        # trivial registers carry no information; only the empty layout has dim 1
        regs = tuple((name, dim) for name, dim in regs if dim > 1)
        names = [name for name, _ in regs]
        if len(set(names)) != len(names):
            raise LayoutError(f"duplicate register names in {names}")
        object.__setattr__(self, "registers", regs)

    @classmethod
    def of(cls, *registers: tuple[str, int]) -> RegisterLayout:
        return cls(tuple(registers))

    @classmethod
    def single(cls, dim: int, name: str = "X") -> RegisterLayout:
        return cls(((name, dim),))

    @property
    def dim(self) -> int:
        return math.prod(d for _, d in self.registers)

    @property
    def names(self) -> list[str]:
        return [name for name, _ in self.registers]

    def __contains__(self, name: str) -> bool:
        return name in self.names

    def dim_of(self, name: str) -> int:
        for reg, dim in self.registers:
            if reg == name:
                return dim
        raise LayoutError(f"no register named {name!r} in {self.names}")

    def split(self, index: np.ndarray) -> dict[str, np.ndarray]:
        """Global index -> per-register digits."""
        digits = {}
        rest = np.asarray(index, dtype=np.int64)
        for name, dim in reversed(self.registers):
            rest, digits[name] = np.divmod(rest, dim)
        return digits

    def join(self, digits: dict[str, np.ndarray]) -> np.ndarray:
        out = np.zeros_like(next(iter(digits.values()), np.zeros(0, dtype=np.int64)))
        for name, dim in self.registers:
            out = out * dim + digits[name]
        return out

    def without(self, name: str) -> RegisterLayout:
        self.dim_of(name)
        return RegisterLayout(tuple(r for r in self.registers if r[0] != name))

    def concat(self, other: RegisterLayout) -> RegisterLayout:
        return RegisterLayout(self.registers + other.registers)

    def to_list(self) -> list[list]:
        return [[name, dim] for name, dim in self.registers]


def _as_layout(layout: RegisterLayout | Sequence | int) -> RegisterLayout:
    if isinstance(layout, RegisterLayout):
        return layout
    if isinstance(layout, (int, np.integer)):
        return RegisterLayout.single(int(layout))
    return RegisterLayout(tuple(tuple(r) for r in layout))


# ---------------------------------------------------------------- states


@dataclass(frozen=True, eq=False)
class SparseState:
    layout_a: RegisterLayout
    layout_b: RegisterLayout
    a: np.ndarray = field(repr=False)
    b: np.ndarray = field(repr=False)
    amp: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.layout_a.dim != self.layout_b.dim:
            raise LayoutError("both sides must have the same dimension")
        for arr in (self.a, self.b, self.amp):
            arr.setflags(write=False)

    @classmethod
    def from_entries(
        cls,
        layout_a,
        layout_b,
        a: Iterable[int],
        b: Iterable[int],
        amp: Iterable[complex],
        normalize: bool = False,
    ) -> SparseState:
        """Build a canonical state: duplicates summed, tiny entries pruned,
        entries sorted by (a, b). Raises NormalizationError unless
        ``normalize`` is set."""
        la, lb = _as_layout(layout_a), _as_layout(layout_b)
        dim = la.dim
        a = np.asarray(a, dtype=np.int64).ravel()
        b = np.asarray(b, dtype=np.int64).ravel()
        amp = np.asarray(amp, dtype=np.complex128).ravel()
        if not (a.shape == b.shape == amp.shape):
            raise StateError("index and amplitude arrays differ in length")
        if a.size and (a.min() < 0 or b.min() < 0 or a.max() >= dim or b.max() >= dim):
            raise StateError(f"index out of range for dimension {dim}")
        key = a * dim + b
        uniq, inv = np.unique(key, return_inverse=True)
        if uniq.size != key.size:
            summed = np.zeros(uniq.size, dtype=np.complex128)
            np.add.at(summed, inv, amp)
            amp = summed
        else:
            amp = amp[np.argsort(key, kind="stable")]
        keep = np.abs(amp) >= PRUNE_TOL
        uniq, amp = uniq[keep], amp[keep]
        norm2 = float(np.sum(np.abs(amp) ** 2))
        if normalize:
            if norm2 <= 0.0:
                raise NormalizationError("cannot normalize the zero vector")
            amp = amp / math.sqrt(norm2)
        elif abs(norm2 - 1.0) > NORM_TOL:
            raise NormalizationError(f"normalization violated: sum |amp|^2 = {norm2!r}")
        return cls(la, lb, uniq // dim, uniq % dim, amp)

    @property
    def dim(self) -> int:
        return self.layout_a.dim

    @property
    def nnz(self) -> int:
        return int(self.amp.size)

    @property
    def norm2(self) -> float:
        return float(np.sum(np.abs(self.amp) ** 2))

    def with_layout(self, layout_a, layout_b=None) -> SparseState:
        la = _as_layout(layout_a)
        lb = la if layout_b is None else _as_layout(layout_b)
        if la.dim != self.dim or lb.dim != self.dim:
            raise LayoutError("relabelled layout must keep the dimension")
        return SparseState(la, lb, self.a, self.b, self.amp)

    def amplitude(self, a: int, b: int) -> complex:
        hit = np.flatnonzero((self.a == a) & (self.b == b))
        return complex(self.amp[hit[0]]) if hit.size else 0j

    def to_dense(self) -> np.ndarray:
        """Amplitude matrix alpha[a, b]."""
        mat = np.zeros((self.dim, self.dim), dtype=np.complex128)
        mat[self.a, self.b] = self.amp
        return mat

    @classmethod
    def from_dense(cls, matrix: np.ndarray, layout_a=None, layout_b=None, normalize=False) -> SparseState:
        matrix = np.asarray(matrix, dtype=np.complex128)
        dim = matrix.shape[0]
        la = _as_layout(dim if layout_a is None else layout_a)
        lb = la if layout_b is None else _as_layout(layout_b)
        a, b = np.nonzero(np.abs(matrix) >= PRUNE_TOL)
        return cls.from_entries(la, lb, a, b, matrix[a, b], normalize=normalize)

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "layout_a": self.layout_a.to_list(),
            "layout_b": self.layout_b.to_list(),
            "amps": [
                [int(a), int(b), float(z.real), float(z.imag)]
                for a, b, z in zip(self.a, self.b, self.amp)
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> SparseState:
        try:
            dim = int(data["dim"])
            la = _as_layout(data.get("layout_a") or dim)
            lb = _as_layout(data.get("layout_b") or la)
            rows = np.asarray(data["amps"], dtype=np.float64).reshape(-1, 4)
        except (KeyError, TypeError, ValueError) as exc:
            raise StateError(f"malformed state document: {exc}") from exc
        if la.dim != dim or lb.dim != dim:
            raise LayoutError(f"layout dimension does not match dim={dim}")
        return cls.from_entries(
            la, lb, rows[:, 0].astype(np.int64), rows[:, 1].astype(np.int64), rows[:, 2] + 1j * rows[:, 3]
        )


@dataclass(frozen=True)
class Ensemble:
    """Mixed state as a probabilistic mixture of pure states."""

    weights: tuple[float, ...]
    states: tuple[SparseState, ...]

    def __post_init__(self):
        weights = tuple(float(p) for p in self.weights)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "states", tuple(self.states))
        if len(weights) != len(self.states) or not weights:
            raise StateError("ensemble needs one weight per state")
        if min(weights) < 0 or abs(sum(weights) - 1.0) > NORM_TOL:
            raise NormalizationError(f"ensemble weights must be a distribution, got {weights}")
        dims = {s.dim for s in self.states}
        if len(dims) != 1:
            raise LayoutError(f"ensemble members have different dimensions {dims}")

    @classmethod
    def of(cls, pairs: Iterable[tuple[float, SparseState]]) -> Ensemble:
        pairs = list(pairs)
        return cls(tuple(p for p, _ in pairs), tuple(s for _, s in pairs))

    @property
    def dim(self) -> int:
        return self.states[0].dim

    def __iter__(self):
        return iter(zip(self.weights, self.states))


StateLike = Union[SparseState, Ensemble]


def as_ensemble(state: StateLike) -> Ensemble:
    return state if isinstance(state, Ensemble) else Ensemble((1.0,), (state,))


# ---------------------------------------------------------------- constructors


def max_entangled(dim: int, layout=None) -> SparseState:
    """Psi_N = N^{-1/2} sum_i |i>|i>."""
    if dim < 1:
        raise StateError("dimension must be positive")
    layout = _as_layout(dim if layout is None else layout)
    idx = np.arange(dim)
    return SparseState.from_entries(layout, layout, idx, idx, np.full(dim, 1 / math.sqrt(dim)))


def basis_state(dim: int, a: int = 0, b: int = 0, layout=None) -> SparseState:
    """|a>^A |b>^B; the default is |Z_N> (x) |Z_N>."""
    layout = _as_layout(dim if layout is None else layout)
    return SparseState.from_entries(layout, layout, [a], [b], [1.0])


def tensor(s1: SparseState, s2: SparseState) -> SparseState:
    """s1 (x) s2 with s2's registers appended (lower-order) on each side."""
    d2 = s2.dim
    a = (s1.a[:, None] * d2 + s2.a[None, :]).ravel()
    b = (s1.b[:, None] * d2 + s2.b[None, :]).ravel()
    amp = (s1.amp[:, None] * s2.amp[None, :]).ravel()
    return SparseState.from_entries(
        s1.layout_a.concat(s2.layout_a), s1.layout_b.concat(s2.layout_b), a, b, amp, normalize=True
    )


def random_state_near_target(
    dim: int, epsilon: float, diagonal_only: bool = False, seed=None, layout=None
) -> SparseState:
    """sqrt(1-eps) Psi_N + sqrt(eps) |noise>, |noise> a random unit vector
    orthogonal to Psi_N (inside the diagonal subspace if requested)."""
    if not 0.0 <= epsilon < 1.0:
        raise StateError(f"epsilon must lie in [0, 1), got {epsilon}")
    if dim == 1 and epsilon > 0:
        raise StateError("no state orthogonal to Psi_1 exists")
    rng = np.random.default_rng(seed)
    target = np.eye(dim, dtype=np.complex128) / math.sqrt(dim)
    if diagonal_only:
        noise = np.diag(rng.normal(size=dim) + 1j * rng.normal(size=dim))
    else:
        noise = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    noise = noise - np.vdot(target, noise) * target
    noise /= np.linalg.norm(noise)
    mat = math.sqrt(1 - epsilon) * target + math.sqrt(epsilon) * noise
    return SparseState.from_dense(mat, layout, normalize=True)


def random_split_state(dim: int, delta: float, seed=None, layout=None) -> SparseState:
    """sqrt(1-delta) |diag> + sqrt(delta) |offdiag> with both parts random unit vectors."""
    if not 0.0 <= delta <= 1.0:
        raise StateError(f"delta must lie in [0, 1], got {delta}")
    rng = np.random.default_rng(seed)
    diag = np.diag(rng.normal(size=dim) + 1j * rng.normal(size=dim))
    off = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    np.fill_diagonal(off, 0)
    mat = math.sqrt(1 - delta) * diag / np.linalg.norm(diag) + math.sqrt(delta) * off / np.linalg.norm(off)
    return SparseState.from_dense(mat, layout, normalize=True)


def adversarial_state(dim: int, epsilon: float) -> Ensemble:
    """(1 - e') Psi_N + e' |Z_N, Z_N> with e' = eps N / (N - 1); fidelity 1 - eps."""
    if dim < 2:
        raise StateError("adversarial mixture needs N >= 2")
    eps_prime = epsilon * dim / (dim - 1)
    if not 0.0 <= eps_prime <= 1.0:
        raise StateError(f"epsilon {epsilon} too large for N={dim}")
    return Ensemble((1 - eps_prime, eps_prime), (max_entangled(dim), basis_state(dim)))


# ---------------------------------------------------------------- measures


def diag_sum(state: SparseState) -> complex:
    on = state.a == state.b
    return complex(state.amp[on].sum())


def fidelity(state: StateLike, dim: int | None = None) -> float:
    """Overlap <Psi_N| rho |Psi_N>; linear over ensembles."""
    if isinstance(state, Ensemble):
        return sum(p * fidelity(s, dim) for p, s in state)
    if dim is not None and dim != state.dim:
        raise LayoutError(f"state has dimension {state.dim}, expected {dim}")
    return abs(diag_sum(state)) ** 2 / state.dim


def fidelity_with_diagonal(state: SparseState) -> float:
    on = state.a == state.b
    return float(np.sum(np.abs(state.amp[on]) ** 2))


def overlap(s1: SparseState, s2: SparseState) -> complex:
    """<s1|s2>."""
    if s1.dim != s2.dim:
        raise LayoutError("states have different dimensions")
    dim = s1.dim
    k1, k2 = s1.a * dim + s1.b, s2.a * dim + s2.b
    _, i1, i2 = np.intersect1d(k1, k2, assume_unique=True, return_indices=True)
    return complex(np.vdot(s1.amp[i1], s2.amp[i2]))


def pure_fidelity(s1: SparseState, s2: SparseState) -> float:
    return abs(overlap(s1, s2)) ** 2


def trace_distance(s1: SparseState, s2: SparseState) -> float:
    """Trace distance of two pure states, sqrt(1 - |<s1|s2>|^2)."""
    return math.sqrt(max(0.0, 1.0 - pure_fidelity(s1, s2)))


def same_up_to_phase(s1: SparseState, s2: SparseState, tol: float = 1e-9) -> bool:
    return s1.dim == s2.dim and abs(abs(overlap(s1, s2)) - 1.0) <= tol


def schmidt_rank(state: SparseState, tol: float = RANK_TOL) -> int:
    rows, ai = np.unique(state.a, return_inverse=True)
    cols, bi = np.unique(state.b, return_inverse=True)
    mat = np.zeros((rows.size, cols.size), dtype=np.complex128)
    mat[ai, bi] = state.amp
    if mat.size == 0:
        return 0
    return int(np.sum(np.linalg.svd(mat, compute_uv=False) > tol))


def _check_norm(state: SparseState) -> SparseState:
    if abs(state.norm2 - 1.0) > NORM_TOL:
        raise NormalizationError(f"normalization violated: {state.norm2!r}")
    return state


# ---------------------------------------------------------------- local unitaries


def _as_bijection(perm, size: int) -> np.ndarray:
    perm = np.asarray(perm, dtype=np.int64)
    if perm.shape != (size,) or not np.array_equal(np.sort(perm), np.arange(size)):
        raise StateError("map is not a bijection on the register")
    return perm


def apply_permutation_both(state: SparseState, perm, register: str | None = None) -> SparseState:
    """|i>^A|j>^B -> |pi(i)>^A|pi(j)>^B, on the whole space or on one register."""
    if register is None:
        pi = _as_bijection(perm, state.dim)
        out = SparseState.from_entries(state.layout_a, state.layout_b, pi[state.a], pi[state.b], state.amp)
        return _check_norm(out)
    pi = _as_bijection(perm, state.layout_a.dim_of(register))
    da, db = state.layout_a.split(state.a), state.layout_b.split(state.b)
    da[register] = pi[da[register]]
    db[register] = pi[db[register]]
    out = SparseState.from_entries(
        state.layout_a, state.layout_b, state.layout_a.join(da), state.layout_b.join(db), state.amp
    )
    return _check_norm(out)


def apply_scramble_both(state: SparseState, perm: ScramblePerm, x: str = "X", y: str = "Y") -> SparseState:
    """|x>|y> -> |g_y(x)>|h_y(x)>|y> applied identically by both parties.

    Each side must have layout (X: N, Y: K); the result has (G: L, H: W, Y: K).
    """
    p = perm.params
    expected = RegisterLayout(((x, p.N), (y, p.K)))
    for layout in (state.layout_a, state.layout_b):
        if layout != expected:
            raise LayoutError(f"expected layout {expected.to_list()}, got {layout.to_list()}")
    out_layout = RegisterLayout((("G", p.L), ("H", p.W), (y, p.K)))
    fwd = perm.forward
    xa, ya = np.divmod(state.a, p.K)
    xb, yb = np.divmod(state.b, p.K)
    # g o h = fwd; (G, H, Y) big-endian equals fwd * K + y
    a = fwd[ya, xa] * p.K + ya
    b = fwd[yb, xb] * p.K + yb
    return _check_norm(SparseState.from_entries(out_layout, out_layout, a, b, state.amp))


# ---------------------------------------------------------------- measurements


@dataclass
class OutcomeSplit:
    """Outcome of a two-sided measure-and-compare on one register.

    ``branches`` holds (result, probability, post-state) for every agreeing
    result; disagreement is aggregated in ``mismatch_probability``.
    """

    register: str
    branches: list[tuple[int, float, SparseState]]
    mismatch_probability: float
    residue: float = 0.0

    @property
    def success_probability(self) -> float:
        return sum(p for _, p, _ in self.branches)


def _group_sum(keys: np.ndarray, values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    uniq, inv = np.unique(keys, return_inverse=True)
    re = np.bincount(inv, weights=values.real, minlength=uniq.size)
    im = np.bincount(inv, weights=values.imag, minlength=uniq.size)
    return uniq, re + 1j * im


def _split_register(state: SparseState, register: str):
    la, lb = state.layout_a, state.layout_b
    ra, rb = la.without(register), lb.without(register)
    da, db = la.split(state.a), lb.split(state.b)
    ga, gb = da.pop(register), db.pop(register)
    rest_a = ra.join(da) if da else np.zeros_like(ga)
    rest_b = rb.join(db) if db else np.zeros_like(gb)
    return ra, rb, ga, gb, rest_a, rest_b


def _finish_branches(register, rest_layouts, rows_a, rows_b, amps_by_outcome, outcomes):
    ra, rb = rest_layouts
    branches, residue = [], 0.0
    for g, col in zip(outcomes, amps_by_outcome):
        prob = float(np.sum(np.abs(col) ** 2))
        if prob < BRANCH_TOL:
            residue += prob
            continue
        post = SparseState.from_entries(ra, rb, rows_a, rows_b, col, normalize=True)
        branches.append((int(g), prob, post))
    return branches, residue


def fourier_measure_compare(state: SparseState, register: str, use_hadamard: bool | None = None) -> OutcomeSplit:
    """Alice applies the Fourier operator (Bob its inverse), or both apply
    Hadamard, to ``register``; both measure it and compare.

    Amplitudes are grouped by the unmeasured labels and by the difference of
    the two register values, so only the L agreeing outcomes are formed.
    """
    L = state.layout_a.dim_of(register)
    if state.layout_b.dim_of(register) != L:
        raise LayoutError("register dimensions differ between the parties")
    if use_hadamard is None:
        use_hadamard = L & (L - 1) == 0
    if use_hadamard and L & (L - 1):
        raise LayoutError(f"Hadamard needs a power-of-2 register, got dimension {L}")
    ra, rb, ga, gb, rest_a, rest_b = _split_register(state, register)
    diff = (ga ^ gb) if use_hadamard else (gb - ga) % L
    pair = rest_a * rb.dim + rest_b
    keys, summed = _group_sum(pair * L + diff, state.amp)
    pair_keys, row = np.unique(keys // L, return_inverse=True)
    coeff = np.zeros((pair_keys.size, L), dtype=np.complex128)
    coeff[row, keys % L] = summed
    d = np.arange(L)
    if use_hadamard:
        parity = np.array([bin(v).count("1") & 1 for v in range(L)])
        phase = np.where(parity[np.bitwise_and.outer(d, d)] == 1, -1.0, 1.0).astype(np.complex128)
    else:
        phase = np.exp(2j * np.pi * (np.outer(d, d) % L) / L)
    amps = coeff @ phase / L  # column g: amplitude of agreeing outcome g
    branches, residue = _finish_branches(
        register, (ra, rb), pair_keys // rb.dim, pair_keys % rb.dim, amps.T, range(L)
    )
    agree = sum(p for _, p, _ in branches) + residue
    return OutcomeSplit(register, branches, max(0.0, 1.0 - agree), residue)


def measure_compare(state: SparseState, register: str) -> OutcomeSplit:
    """Both parties measure ``register`` in the computational basis and compare."""
    ra, rb, ga, gb, rest_a, rest_b = _split_register(state, register)
    L = state.layout_a.dim_of(register)
    same = ga == gb
    branches, residue = [], 0.0
    for g in range(L):
        sel = same & (ga == g)
        prob = float(np.sum(np.abs(state.amp[sel]) ** 2))
        if prob < BRANCH_TOL:
            residue += prob
            continue
        post = SparseState.from_entries(ra, rb, rest_a[sel], rest_b[sel], state.amp[sel], normalize=True)
        branches.append((g, prob, post))
    mismatch = float(np.sum(np.abs(state.amp[~same]) ** 2))
    return OutcomeSplit(register, branches, mismatch, residue)


# ---------------------------------------------------------------- file I/O


def to_document(state: StateLike) -> dict:
    """Pure states use the plain state schema; ensembles wrap a list of members."""
    if isinstance(state, Ensemble):
        return {"ensemble": [{"p": p, "state": s.to_dict()} for p, s in state]}
    return state.to_dict()


def from_document(data: dict) -> StateLike:
    if "ensemble" in data:
        try:
            members = [(float(m["p"]), SparseState.from_dict(m["state"])) for m in data["ensemble"]]
        except (KeyError, TypeError) as exc:
            raise StateError(f"malformed ensemble document: {exc}") from exc
        return Ensemble.of(members)
    return SparseState.from_dict(data)


def save_state(state: StateLike, path) -> None:
    with open(path, "w") as fh:
        json.dump(to_document(state), fh)


def load_state(path) -> StateLike:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise StateError(f"state file is not valid JSON: {exc}") from exc
    return from_document(data)
