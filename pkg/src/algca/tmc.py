"""Topological Markov chains (1-step shifts of finite type).

A shift is an alphabet plus an edge relation. Words are tuples of symbols;
lexicographic order always means the order of the alphabet as given, not
Python's ordering of the symbols themselves.

Heavy enumerations work on integer index arrays (``word_array``) and are
guarded by an enumeration cap, configurable through the ``ALGCA_ENUM_CAP``
environment variable.
"""
from __future__ import annotations

import functools
import math
import os
from dataclasses import dataclass, field
from functools import cached_property
from typing import Hashable, Iterable, Iterator, Sequence

import numpy as np

from .errors import DepthTooLarge, EmptyShift, NotAllowed, UnknownSymbol

Symbol = Hashable
Word = tuple

DEFAULT_ENUM_CAP = 10**7
DEFAULT_STREAM_CAP = 1 << 28
POWER_TOL = 1e-12
POWER_MAX_ITER = 10**5


def enumeration_cap() -> int:
    """Largest word list materialised at once (env ``ALGCA_ENUM_CAP``)."""
    return int(os.environ.get("ALGCA_ENUM_CAP", DEFAULT_ENUM_CAP))


def stream_cap() -> int:
    """Largest word count scanned chunk by chunk (env ``ALGCA_STREAM_CAP``)."""
    return int(os.environ.get("ALGCA_STREAM_CAP", DEFAULT_STREAM_CAP))


@dataclass(frozen=True)
class Alphabet:
    """Ordered finite set of distinct symbols."""

    symbols: tuple

    def __post_init__(self):
        syms = tuple(self.symbols)
        if not syms:
            raise EmptyShift("alphabet must contain at least one symbol")
        if len(set(syms)) != len(syms):
            raise ValueError(f"duplicate symbols in alphabet {syms!r}")
        object.__setattr__(self, "symbols", syms)

    @cached_property
    def _index(self):
        return {s: i for i, s in enumerate(self.symbols)}

    def index(self, symbol) -> int:
        try:
            return self._index[symbol]
        except KeyError:
            raise UnknownSymbol(f"symbol {symbol!r} not in alphabet") from None

    def __contains__(self, symbol):
        return symbol in self._index

    def __iter__(self):
        return iter(self.symbols)

    def __len__(self):
        return len(self.symbols)

    def __getitem__(self, i):
        return self.symbols[i]


def _as_alphabet(alphabet) -> Alphabet:
    return alphabet if isinstance(alphabet, Alphabet) else Alphabet(tuple(alphabet))


@dataclass(frozen=True)
class MarkovShift:
    """A topological Markov chain; build instances with :func:`build_shift`."""

    alphabet: Alphabet
    edges: frozenset
    pruned: tuple = field(default=(), compare=False)

    @property
    def symbols(self) -> tuple:
        return self.alphabet.symbols

    @property
    def size(self) -> int:
        return len(self.alphabet)

    def index(self, symbol) -> int:
        return self.alphabet.index(symbol)

    @cached_property
    def adjacency(self) -> np.ndarray:
        n = self.size
        A = np.zeros((n, n), dtype=np.int64)
        for a, b in self.edges:
            A[self.index(a), self.index(b)] = 1
        A.setflags(write=False)
        return A

    @cached_property
    def sorted_edges(self) -> tuple:
        return tuple(sorted(self.edges, key=lambda e: (self.index(e[0]), self.index(e[1]))))

    @cached_property
    def followers(self) -> dict:
        out = {s: [] for s in self.symbols}
        for a, b in self.sorted_edges:
            out[a].append(b)
        return {s: frozenset(v) for s, v in out.items()}

    @cached_property
    def predecessors(self) -> dict:
        out = {s: [] for s in self.symbols}
        for a, b in self.sorted_edges:
            out[b].append(a)
        return {s: frozenset(v) for s, v in out.items()}

    @property
    def is_full(self) -> bool:
        return len(self.edges) == self.size**2

    def is_allowed(self, word: Sequence) -> bool:
        if len(word) == 0:
            return False
        if any(s not in self.alphabet for s in word):
            return False
        return all((a, b) in self.edges for a, b in zip(word, word[1:]))

    def encode(self, word: Sequence) -> np.ndarray:
        return np.array([self.index(s) for s in word], dtype=np.int64)

    def decode(self, idx: Iterable[int]) -> Word:
        return tuple(self.symbols[int(i)] for i in idx)

    def to_dict(self) -> dict:
        return {
            "symbols": list(self.symbols),
            "edges": [list(e) for e in self.sorted_edges],
        }


def build_shift(alphabet, edges: Iterable) -> MarkovShift:
    """Construct a Markov shift, pruning symbols that cannot sit in a bi-infinite walk.

    Symbols without an outgoing or without an incoming edge are deleted
    repeatedly until a fixpoint; the deleted symbols are recorded in
    ``MarkovShift.pruned`` (input order).

    Raises
    ------
    UnknownSymbol
        An edge endpoint is not in the alphabet.
    EmptyShift
        No edges were given, or pruning removes every symbol.
    """
    alphabet = _as_alphabet(alphabet)
    edges = {tuple(e) for e in edges}
    if not edges:
        raise EmptyShift("edge set is empty")
    for e in edges:
        if len(e) != 2:
            raise ValueError(f"edge {e!r} is not a pair")
        for s in e:
            if s not in alphabet:
                raise UnknownSymbol(f"edge endpoint {s!r} not in alphabet")
    alive = set(alphabet.symbols)
    while True:
        live_edges = {(a, b) for a, b in edges if a in alive and b in alive}
        sources = {a for a, _ in live_edges}
        targets = {b for _, b in live_edges}
        keep = alive & sources & targets
        if keep == alive:
            break
        alive = keep
    if not alive:
        raise EmptyShift("pruning removed every symbol")
    kept = tuple(s for s in alphabet.symbols if s in alive)
    pruned = tuple(s for s in alphabet.symbols if s not in alive)
    return MarkovShift(Alphabet(kept), frozenset(live_edges), pruned)


def full_shift(symbols) -> MarkovShift:
    alphabet = _as_alphabet(symbols)
    return build_shift(alphabet, [(a, b) for a in alphabet for b in alphabet])


# --- word enumeration -------------------------------------------------------


def count_words(shift: MarkovShift, k: int) -> int:
    """|G_k|, the number of allowed words of length k (exact integer)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    adj = [[int(x) for x in row] for row in shift.adjacency]
    n = shift.size
    counts = [1] * n  # words of the current length ending in each symbol
    for _ in range(k - 1):
        counts = [sum(counts[a] * adj[a][b] for a in range(n)) for b in range(n)]
    return sum(counts)


def _index_dtype(n: int):
    return np.uint8 if n <= 255 else np.int32


@functools.lru_cache(maxsize=32)
def _full_tail(n: int, steps: int) -> np.ndarray:
    return np.indices((n,) * steps, dtype=np.uint8 if n <= 255 else np.int32).reshape(steps, -1).T


def _extend(arr: np.ndarray, steps: int, A: np.ndarray) -> np.ndarray:
    # np.nonzero walks rows in order and columns ascending, so lex order is kept
    mask = A.astype(bool)
    if steps == 0:
        return arr
    if mask.all():
        n = mask.shape[0]
        m, L = arr.shape
        out = np.empty((m, n**steps, L + steps), dtype=arr.dtype)
        out[:, :, :L] = arr[:, None, :]
        tail = _full_tail(n, steps)
        out[:, :, L:] = tail[None, :, :]
        return out.reshape(m * n**steps, L + steps)
    for _ in range(steps):
        rows, syms = np.nonzero(mask[arr[:, -1]])
        arr = np.concatenate([arr[rows], syms[:, None].astype(arr.dtype)], axis=1)
    return arr


def _check_cap(shift: MarkovShift, k: int, cap: int | None) -> int:
    cap = enumeration_cap() if cap is None else cap
    total = count_words(shift, k)
    if total > cap:
        raise DepthTooLarge(
            f"{total} allowed words of length {k} exceed the enumeration cap {cap}",
            first_infeasible=k,
        )
    return total


def word_array(shift: MarkovShift, k: int, cap: int | None = None) -> np.ndarray:
    """All allowed k-words as a (count, k) array of symbol indices, lex ordered."""
    _check_cap(shift, k, cap)
    start = np.arange(shift.size, dtype=_index_dtype(shift.size))[:, None]
    return _extend(start, k - 1, shift.adjacency)


def iter_word_arrays(
    shift: MarkovShift, k: int, chunk: int = 1 << 20, cap: int | None = None
) -> Iterator[np.ndarray]:
    """Yield the allowed k-words in lex order as index arrays of bounded size.

    Only one chunk is held at a time, so the total is checked against
    :func:`stream_cap` (or ``cap`` when given) rather than the materialisation cap.
    """
    total = _check_cap(shift, k, stream_cap() if cap is None else cap)
    if total <= chunk:
        yield word_array(shift, k, cap=total)
        return
    tail = max(1, int(math.log(chunk) / math.log(max(shift.size, 2))))
    prefix_len = max(1, k - tail)
    for prefix in word_array(shift, prefix_len, cap=total):
        yield _extend(prefix[None, :], k - prefix_len, shift.adjacency)


def allowed_words(shift: MarkovShift, k: int, cap: int | None = None) -> list:
    """Allowed words of length k, lexicographically ordered (alphabet order)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return [shift.decode(row) for row in word_array(shift, k, cap=cap)]


def _check_word(shift: MarkovShift, word: Sequence):
    word = tuple(word)
    if not shift.is_allowed(word):
        raise NotAllowed(f"word {word!r} is not allowed in the shift", witness=word)
    return word


def follower_set(shift: MarkovShift, word: Sequence) -> frozenset:
    """Symbols that may follow ``word``; for a TMC only the last symbol matters."""
    word = _check_word(shift, word)
    return shift.followers[word[-1]]


def predecessor_set(shift: MarkovShift, word: Sequence) -> frozenset:
    word = _check_word(shift, word)
    return shift.predecessors[word[0]]


# --- spectral / combinatorial report ----------------------------------------


def _reachability(A: np.ndarray) -> np.ndarray:
    """R[i, j] true iff there is a path of length >= 1 from i to j."""
    R = A.astype(bool)
    while True:
        R2 = R | ((R.astype(np.int64) @ R.astype(np.int64)) > 0)
        if (R2 == R).all():
            return R
        R = R2


def strongly_connected_components(shift: MarkovShift) -> list:
    """Components as lists of symbol indices, in order of first symbol."""
    R = _reachability(shift.adjacency)
    n = shift.size
    seen = [False] * n
    comps = []
    for i in range(n):
        if seen[i]:
            continue
        comp = [j for j in range(n) if j == i or (R[i, j] and R[j, i])]
        for j in comp:
            seen[j] = True
        comps.append(comp)
    return comps


def is_irreducible(shift: MarkovShift) -> bool:
    return bool(_reachability(shift.adjacency).all())


def perron(A: np.ndarray, tol: float = POWER_TOL, max_iter: int = POWER_MAX_ITER):
    """Perron root and right/left eigenvectors of an irreducible nonnegative matrix.

    Power iteration runs on ``A + I``, which is primitive whenever ``A`` is
    irreducible, so periodic chains converge too. Vectors are normalised to
    sum 1; the left vector is then scaled so that ``u @ v == 1``.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    B = A + np.eye(n)

    def iterate(M):
        v = np.full(n, 1.0 / n)
        lam = 0.0
        for _ in range(max_iter):
            w = M @ v
            lam_new = w.sum()
            w /= lam_new
            done = abs(lam_new - lam) <= tol * lam_new and np.abs(w - v).max() <= tol
            v, lam = w, lam_new
            if done:
                break
        return lam - 1.0, v

    lam, v = iterate(B)
    _, u = iterate(B.T)
    u = u / (u @ v)
    return lam, v, u


def spectral_radius(shift: MarkovShift) -> float:
    """Largest Perron root over the strongly connected components."""
    A = shift.adjacency
    best = 0.0
    for comp in strongly_connected_components(shift):
        sub = A[np.ix_(comp, comp)]
        if sub.sum() == 0:
            continue
        best = max(best, perron(sub)[0])
    return best


def entropy(shift: MarkovShift) -> float:
    """Topological entropy (natural log of the spectral radius)."""
    return math.log(spectral_radius(shift))


def mixing_exponent(shift: MarkovShift):
    """Smallest m with all entries of A^m positive, or None if A is not primitive."""
    A = shift.adjacency.astype(bool)
    n = shift.size
    P = A.copy()
    for m in range(1, (n - 1) ** 2 + 2):
        if P.all():
            return m
        P = (P.astype(np.int64) @ A.astype(np.int64)) > 0
    return None


@dataclass(frozen=True)
class ShiftReport:
    irreducible: bool
    mixing: bool
    mixing_constant_q: int | None
    entropy: float
    num_words_by_length: dict
    pruned: tuple = ()

    def to_dict(self) -> dict:
        return {
            "irreducible": self.irreducible,
            "mixing": self.mixing,
            "mixing_constant_q": self.mixing_constant_q,
            "entropy": self.entropy,
            "num_words_by_length": {str(k): v for k, v in self.num_words_by_length.items()},
            "pruned": list(self.pruned),
        }


def shift_report(shift: MarkovShift, depth: int = 6) -> ShiftReport:
    irreducible = is_irreducible(shift)
    q = mixing_exponent(shift) if irreducible else None
    return ShiftReport(
        irreducible=irreducible,
        mixing=q is not None,
        mixing_constant_q=q,
        entropy=entropy(shift),
        num_words_by_length={k: count_words(shift, k) for k in range(1, depth + 1)},
        pruned=shift.pruned,
    )
