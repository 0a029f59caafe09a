"""Truncated full Fock space over C^d and multi-analytic operators.

A multi-analytic operator is stored by its Fourier coefficients: a sparse
map word -> matrix (absent words are zero).  The pairing convention is

    theta x = sum_a  e_{reverse(a)} (x) theta_(a) x,

i.e. the stored coefficient at word a is the coefficient of the basis
vector indexed by the reversed word.  All consumers must go through
realize/extract to avoid double-reversal bugs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import DimMismatch, IndexOutOfRange
from .numlin import Subspace, as_complex, operator_norm
from .rowcon import Word, all_words, reverse_word

DEFAULT_DEGREE = 6


@dataclass(frozen=True)
class FockBasis:
    """Words of length <= N over {1..d} in graded lexicographic order."""

    d: int
    N: int
    words: tuple[Word, ...] = field(init=False)
    index: dict[Word, int] = field(init=False)

    def __post_init__(self):
        if self.d < 1:
            raise DimMismatch("need d >= 1")
        if self.N < 0:
            raise DimMismatch("need N >= 0")
        words = all_words(self.d, self.N)
        object.__setattr__(self, "words", words)
        object.__setattr__(self, "index", {w: i for i, w in enumerate(words)})

    def __len__(self) -> int:
        return len(self.words)

    def __hash__(self):
        return hash((self.d, self.N))

    def __eq__(self, other):
        return isinstance(other, FockBasis) and (self.d, self.N) == (other.d, other.N)


@lru_cache(maxsize=None)
def fock_basis(d: int, N: int) -> FockBasis:
    return FockBasis(d, N)


def creation(basis: FockBasis, side: str, i: int) -> np.ndarray:
    """Matrix of the creation operator: left prepends, right appends the letter.

    Words that would exceed degree N map to 0.
    """
    if not 1 <= i <= basis.d:
        raise IndexOutOfRange(f"letter {i} outside 1..{basis.d}")
    if side not in ("left", "right"):
        raise DimMismatch("side must be 'left' or 'right'")
    n = len(basis)
    m = np.zeros((n, n), dtype=np.complex128)
    for w, j in basis.index.items():
        if len(w) >= basis.N:
            continue
        target = (i,) + w if side == "left" else w + (i,)
        m[basis.index[target], j] = 1.0
    return m


@dataclass(frozen=True)
class MultiAnalyticOp:
    """Gamma_N (x) dom -> Gamma_N (x) cod, given by sparse Fourier coefficients."""

    basis: FockBasis
    dom: Subspace
    cod: Subspace
    coeffs: dict[Word, np.ndarray]

    def __post_init__(self):
        clean: dict[Word, np.ndarray] = {}
        shape = (self.cod.dim, self.dom.dim)
        for w, m in self.coeffs.items():
            m = as_complex(m)
            if len(w) > self.basis.N:
                raise DimMismatch(f"coefficient word {w} exceeds degree {self.basis.N}")
            if m.shape != shape:
                raise DimMismatch(f"coefficient shape {m.shape}, expected {shape}")
            clean[tuple(w)] = m
        object.__setattr__(self, "coeffs", clean)

    def coeff(self, w: Word) -> np.ndarray:
        got = self.coeffs.get(tuple(w))
        if got is not None:
            return got
        return np.zeros((self.cod.dim, self.dom.dim), dtype=np.complex128)

    def ambient_coeff(self, w: Word) -> np.ndarray:
        """Coefficient as a map between the ambient spaces (zero off the subspaces)."""
        return self.cod.basis @ self.coeff(w) @ self.dom.basis.conj().T


def identity_op(basis: FockBasis, space: Subspace) -> MultiAnalyticOp:
    return MultiAnalyticOp(basis, space, space, {(): np.eye(space.dim, dtype=np.complex128)})


def const_op(basis: FockBasis, dom: Subspace, cod: Subspace, matrix) -> MultiAnalyticOp:
    """Ampliation I_Gamma (x) X as a multi-analytic operator."""
    return MultiAnalyticOp(basis, dom, cod, {(): as_complex(matrix)})


def add(m1: MultiAnalyticOp, m2: MultiAnalyticOp) -> MultiAnalyticOp:
    if m1.basis != m2.basis or m1.dom.dim != m2.dom.dim or m1.cod.dim != m2.cod.dim:
        raise DimMismatch("incompatible operands")
    words = set(m1.coeffs) | set(m2.coeffs)
    return MultiAnalyticOp(m1.basis, m1.dom, m1.cod, {w: m1.coeff(w) + m2.coeff(w) for w in words})


def product(m1: MultiAnalyticOp, m2: MultiAnalyticOp) -> MultiAnalyticOp:
    """Composition m1 after m2; exact for all words of length <= N."""
    if m1.basis != m2.basis:
        raise DimMismatch("operands live on different Fock truncations")
    if not m1.dom.same_basis(m2.cod):
        raise DimMismatch("m1.dom must match m2.cod (same ambient space and basis)")
    n = m1.basis.N
    out: dict[Word, np.ndarray] = {}
    for a, pa in m1.coeffs.items():
        for b, qb in m2.coeffs.items():
            if len(a) + len(b) > n:
                continue
            w = a + b
            acc = out.get(w)
            term = pa @ qb
            out[w] = term if acc is None else acc + term
    return MultiAnalyticOp(m1.basis, m2.dom, m1.cod, out)


def block_diag_op(basis: FockBasis, *ops: MultiAnalyticOp) -> MultiAnalyticOp:
    """Direct sum of multi-analytic operators (block diagonal per word)."""
    from .numlin import block_diag, direct_sum

    words = set()
    for op in ops:
        if op.basis != basis:
            raise DimMismatch("operands live on different Fock truncations")
        words |= set(op.coeffs)
    dom = direct_sum(*(op.dom for op in ops))
    cod = direct_sum(*(op.cod for op in ops))
    coeffs = {w: block_diag(*(op.coeff(w) for op in ops)) for w in words}
    return MultiAnalyticOp(basis, dom, cod, coeffs)


def realize(m: MultiAnalyticOp) -> np.ndarray:
    """Matrix on Gamma_N (x) dom -> Gamma_N (x) cod in the graded word order.

    Action rule: e_b (x) x  ->  sum_a e_{b + reverse(a)} (x) theta_(a) x,
    with words longer than N dropped.
    """
    basis = m.basis
    kd, kc = m.dom.dim, m.cod.dim
    nw = len(basis)
    out = np.zeros((nw * kc, nw * kd), dtype=np.complex128)
    for a, mat in m.coeffs.items():
        ra = reverse_word(a)
        la = len(a)
        for b, j in basis.index.items():
            if len(b) + la > basis.N:
                continue
            i = basis.index[b + ra]
            out[i * kc : (i + 1) * kc, j * kd : (j + 1) * kd] += mat
    return out


def extract_coeffs(basis: FockBasis, realized: np.ndarray, k_dom: int, k_cod: int) -> dict[Word, np.ndarray]:
    """Invert realize by reading the vacuum column block against e_{reverse(a)}."""
    nw = len(basis)
    if realized.shape != (nw * k_cod, nw * k_dom):
        raise DimMismatch("realized matrix has unexpected shape")
    out: dict[Word, np.ndarray] = {}
    col = realized[:, 0:k_dom]
    for a in basis.words:
        i = basis.index[reverse_word(a)]
        block = col[i * k_cod : (i + 1) * k_cod, :]
        if operator_norm(block) > 0.0:
            out[a] = block.copy()
    return out


def ampliate(basis: FockBasis, x) -> np.ndarray:
    """Kronecker of the truncated Fock identity with a matrix, word-major order."""
    x = as_complex(x)
    return np.kron(np.eye(len(basis)), x)


def coeff_diff(m1: MultiAnalyticOp, m2: MultiAnalyticOp, up_to: int | None = None) -> float:
    """Max operator-norm deviation of coefficients over words of length <= up_to."""
    if m1.dom.dim != m2.dom.dim or m1.cod.dim != m2.cod.dim:
        raise DimMismatch("coefficient shapes differ")
    if up_to is None:
        up_to = max(m1.basis.N, m2.basis.N)
    words = {w for w in set(m1.coeffs) | set(m2.coeffs) if len(w) <= up_to}
    return max((operator_norm(m1.coeff(w) - m2.coeff(w)) for w in words), default=0.0)


def realized_norm(m: MultiAnalyticOp) -> float:
    """Spectral norm of the truncated realization."""
    r = realize(m)
    if r.size == 0:
        return 0.0
    gram = r.conj().T @ r
    w = np.linalg.eigvalsh((gram + gram.conj().T) / 2.0)
    return float(np.sqrt(max(w[-1], 0.0))) if w.size else 0.0


def intertwining_residual(m: MultiAnalyticOp) -> float:
    """Deviation from commuting with ampliated left creations (0 by construction)."""
    r = realize(m)
    res = 0.0
    for i in range(1, m.basis.d + 1):
        li = creation(m.basis, "left", i)
        lhs = r @ np.kron(li, np.eye(m.dom.dim))
        rhs = np.kron(li, np.eye(m.cod.dim)) @ r
        res = max(res, float(np.max(np.abs(lhs - rhs))) if lhs.size else 0.0)
    return res
