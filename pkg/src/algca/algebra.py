"""Finite binary operations given by Cayley tables.

Convention for cancellation, following the permutative-CA reading of a
local rule ``phi(a, b) = a * b``:

* *left cancellable*: the left argument can be recovered, i.e.
  ``x * c == y * c`` implies ``x == y`` (every column is a permutation);
* *right cancellable*: ``a * x == a * y`` implies ``x == y`` (every row is a
  permutation).

So a table is right cancellable exactly when the CA ``id * sigma`` is right
permutative.
"""
from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property, reduce

import numpy as np

from .errors import NotPermutative, SchemaError, StructureViolation, UnknownSymbol
from .tmc import Alphabet, _as_alphabet, build_shift

PSI_ASSOCIATIVE = "psi_associative"
N_SCALING = "n_scaling"
MODES = (PSI_ASSOCIATIVE, N_SCALING)


@dataclass(frozen=True, eq=False)
class CayleyTable:
    """Total binary operation on an alphabet; ``idx[i, j]`` is the index of ``s_i * s_j``."""

    alphabet: Alphabet
    idx: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.idx, dtype=np.int64)
        n = len(self.alphabet)
        if idx.shape != (n, n):
            raise SchemaError(f"table must be {n}x{n}, got shape {idx.shape}")
        if ((idx < 0) | (idx >= n)).any():
            raise SchemaError("table entries must be alphabet indices")
        idx = idx.copy()
        idx.setflags(write=False)
        object.__setattr__(self, "idx", idx)

    @classmethod
    def from_rows(cls, symbols, rows) -> "CayleyTable":
        """Build from nested rows of symbols; row i holds ``symbols[i] * b`` for every b."""
        alphabet = _as_alphabet(symbols)
        rows = [list(r) for r in rows]
        if len(rows) != len(alphabet) or any(len(r) != len(alphabet) for r in rows):
            raise SchemaError(f"table must have {len(alphabet)} rows of {len(alphabet)} entries")
        try:
            idx = [[alphabet.index(s) for s in row] for row in rows]
        except UnknownSymbol as exc:
            raise SchemaError(f"table entry: {exc}") from None
        return cls(alphabet, np.array(idx, dtype=np.int64))

    @classmethod
    def from_function(cls, symbols, fn) -> "CayleyTable":
        alphabet = _as_alphabet(symbols)
        return cls.from_rows(alphabet, [[fn(a, b) for b in alphabet] for a in alphabet])

    @property
    def symbols(self) -> tuple:
        return self.alphabet.symbols

    @property
    def size(self) -> int:
        return len(self.alphabet)

    def __call__(self, a, b):
        return self.symbols[self.idx[self.alphabet.index(a), self.alphabet.index(b)]]

    def __eq__(self, other):
        if not isinstance(other, CayleyTable):
            return NotImplemented
        return self.alphabet == other.alphabet and np.array_equal(self.idx, other.idx)

    def __hash__(self):
        return hash((self.alphabet, self.idx.tobytes()))

    def rows(self) -> list:
        return [[self.symbols[j] for j in row] for row in self.idx]

    def restrict(self, symbols) -> "CayleyTable":
        """Sub-table on a subset closed under the operation."""
        symbols = tuple(s for s in self.symbols if s in set(symbols))
        rows = [[self(a, b) for b in symbols] for a in symbols]
        if any(v not in symbols for row in rows for v in row):
            raise StructureViolation(f"subset {symbols!r} is not closed under the operation")
        return CayleyTable.from_rows(symbols, rows)

    def to_dict(self) -> dict:
        return {"symbols": list(self.symbols), "table": self.rows()}


def group_table(symbols, add) -> CayleyTable:
    return CayleyTable.from_function(symbols, add)


def cyclic_group(n: int, symbols=None) -> CayleyTable:
    """Z_n addition on ``symbols`` (default ``0..n-1``)."""
    symbols = tuple(range(n)) if symbols is None else tuple(symbols)
    return CayleyTable(Alphabet(symbols), np.add.outer(np.arange(n), np.arange(n)) % n)


def right_projection(symbols) -> CayleyTable:
    """``a * b = b``; the CA ``id * sigma`` of this table is the shift map itself."""
    alphabet = _as_alphabet(symbols)
    n = len(alphabet)
    return CayleyTable(alphabet, np.tile(np.arange(n), (n, 1)))


# --- classification ----------------------------------------------------------


@dataclass(frozen=True)
class AlgebraReport:
    left_cancellable: bool
    right_cancellable: bool
    quasigroup: bool
    commutative: bool
    associative: bool
    medial: bool
    witness: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {k: getattr(self, k) for k in
               ("left_cancellable", "right_cancellable", "quasigroup",
                "commutative", "associative", "medial")}
        out["witness"] = {k: list(v) for k, v in self.witness.items()}
        return out


def _first(mask: np.ndarray):
    hits = np.argwhere(mask)
    return None if len(hits) == 0 else tuple(int(i) for i in hits[0])


def _medial_witness(T: np.ndarray):
    n = T.shape[0]
    for a in range(n):
        lhs = T[T[a][:, None, None], T[None, :, :]]   # (a*b)*(c*d) at [b, c, d]
        rhs = T[T[a][None, :, None], T[:, None, :]]   # (a*c)*(b*d) at [b, c, d]
        hit = _first(lhs != rhs)
        if hit is not None:
            return (a,) + hit
    return None


def classify_table(table: CayleyTable) -> AlgebraReport:
    """Exhaustively test the cancellation, commutative, associative and medial laws.

    Each failed property carries a lexicographically first counterexample
    (as symbols): ``left_cancellable`` -> ``(x, y, c)`` with ``x*c == y*c``;
    ``right_cancellable`` -> ``(a, x, y)`` with ``a*x == a*y``;
    ``commutative`` -> ``(a, b)``; ``associative`` -> ``(a, b, c)``;
    ``medial`` -> ``(a, b, c, d)``.
    """
    T = table.idx
    n = table.size
    sym = table.symbols
    witness = {}

    # columns: x*c == y*c for x < y, scanned by c first
    eq_cols = T.T[:, :, None] == T.T[:, None, :]
    upper = np.triu(np.ones((n, n), dtype=bool), 1)
    hit = _first(eq_cols & upper[None])
    if hit is not None:
        c, x, y = hit
        witness["left_cancellable"] = (sym[x], sym[y], sym[c])

    eq_rows = T[:, :, None] == T[:, None, :]
    hit = _first(eq_rows & upper[None])
    if hit is not None:
        a, x, y = hit
        witness["right_cancellable"] = (sym[a], sym[x], sym[y])

    hit = _first((T != T.T) & upper)
    if hit is not None:
        witness["commutative"] = tuple(sym[i] for i in hit)

    ar = np.arange(n)
    assoc_l = T[T[:, :, None], ar[None, None, :]]
    assoc_r = T[ar[:, None, None], T[None, :, :]]
    hit = _first(assoc_l != assoc_r)
    if hit is not None:
        witness["associative"] = tuple(sym[i] for i in hit)

    hit = _medial_witness(T)
    if hit is not None:
        witness["medial"] = tuple(sym[i] for i in hit)

    left = "left_cancellable" not in witness
    right = "right_cancellable" not in witness
    return AlgebraReport(
        left_cancellable=left,
        right_cancellable=right,
        quasigroup=left and right,
        commutative="commutative" not in witness,
        associative="associative" not in witness,
        medial="medial" not in witness,
        witness=witness,
    )


def find_psi(table: CayleyTable):
    """Permutation ``Psi`` with ``(a*b)*c == Psi(a*(b*c))`` for all triples, or None.

    ``Psi`` is forced at every value taken by ``a*(b*c)``; symbols never taken
    are unconstrained and are matched to the unused images in alphabet order.
    If the forced map exists but is not injective a :class:`NotPermutative`
    warning is emitted and None returned.
    """
    T = table.idx
    n = table.size
    ar = np.arange(n)
    lhs = T[T[:, :, None], ar[None, None, :]].ravel()
    rhs = T[ar[:, None, None], T[None, :, :]].ravel()
    psi = np.full(n, -1, dtype=np.int64)
    psi[rhs] = lhs
    if not np.array_equal(psi[rhs], lhs):
        return None
    covered = np.unique(rhs)
    images = psi[covered]
    if len(np.unique(images)) != len(images):
        warnings.warn("the map forced by the Psi identity is not injective", NotPermutative)
        return None
    free_dom = [i for i in range(n) if psi[i] < 0]
    free_img = [i for i in range(n) if i not in set(images.tolist())]
    for i, j in zip(free_dom, free_img):
        psi[i] = j
    sym = table.symbols
    return {sym[i]: sym[int(psi[i])] for i in range(n)}


# --- abelian groups and the affine (Toyoda) form ----------------------------


def group_identity(table: CayleyTable):
    """Index of the two-sided identity, or None."""
    T = table.idx
    ar = np.arange(table.size)
    for e in range(table.size):
        if np.array_equal(T[e], ar) and np.array_equal(T[:, e], ar):
            return e
    return None


def is_abelian_group(table: CayleyTable) -> bool:
    rep = classify_table(table)
    return rep.associative and rep.commutative and rep.quasigroup and group_identity(table) is not None


def element_orders(table: CayleyTable) -> dict:
    """Histogram {order: count} of a finite group; determines an abelian group up to isomorphism."""
    T = table.idx
    e = group_identity(table)
    if e is None:
        raise StructureViolation("table has no identity element")
    hist = {}
    for g in range(table.size):
        k, x = 1, g
        while x != e:
            x = T[x, g]
            k += 1
        hist[k] = hist.get(k, 0) + 1
    return dict(sorted(hist.items()))


def abelian_group_orders(*moduli) -> dict:
    """Order histogram of Z_m1 + ... + Z_mk, by direct enumeration."""
    hist = {}
    for g in itertools.product(*(range(m) for m in moduli)):
        order = reduce(math.lcm, (m // math.gcd(m, x) for x, m in zip(g, moduli)), 1)
        hist[order] = hist.get(order, 0) + 1
    return dict(sorted(hist.items()))


@dataclass(frozen=True)
class ToyodaDecomposition:
    """``a * b == eta(a) + rho(b) + c`` over an abelian group on the same alphabet."""

    group_table: CayleyTable
    eta: dict
    rho: dict
    constant_c: object

    @cached_property
    def zero(self):
        return self.group_table.symbols[group_identity(self.group_table)]

    def reconstruct(self) -> CayleyTable:
        add = self.group_table
        return CayleyTable.from_function(
            add.symbols, lambda a, b: add(add(self.eta[a], self.rho[b]), self.constant_c)
        )

    def to_dict(self) -> dict:
        return {
            "group_table": self.group_table.to_dict(),
            "zero": self.zero,
            "eta": dict(self.eta),
            "rho": dict(self.rho),
            "constant_c": self.constant_c,
        }


def affine_table(group: CayleyTable, eta: dict, rho: dict, c) -> CayleyTable:
    return ToyodaDecomposition(group, eta, rho, c).reconstruct()


def toyoda_obstruction(table: CayleyTable):
    """Why no affine form is attempted: 'not a quasigroup', 'not medial', or None."""
    rep = classify_table(table)
    if not rep.quasigroup:
        return "not a quasigroup"
    if not rep.medial:
        return "not medial"
    return None


def _is_automorphism(f: np.ndarray, add: np.ndarray) -> bool:
    return len(set(f.tolist())) == len(f) and np.array_equal(f[add], add[f[:, None], f[None, :]])


def toyoda_decompose(table: CayleyTable):
    """Affine form of a medial quasigroup, or None when the table is not one.

    Fix ``p = q =`` the first symbol and put ``u + v = R^-1(u) * L^-1(v)`` with
    ``R(x) = x*q`` and ``L(y) = p*y``; for a medial quasigroup this is an
    abelian group with zero ``p*q`` in which ``R`` and ``L`` are affine maps.
    Hence ``eta = R - R(0)``, ``rho = L - L(0)``, ``c = R(0) + L(0)``. The
    construction is deterministic, so absence is certified for every order,
    and every returned value has been checked entry by entry.
    """
    if toyoda_obstruction(table) is not None:
        return None
    T = table.idx
    n = table.size
    p = q = 0
    R = T[:, q]
    L = T[p, :]
    R_inv = np.argsort(R)
    L_inv = np.argsort(L)
    add = T[R_inv[:, None], L_inv[None, :]]
    zero = int(T[p, q])
    ar = np.arange(n)
    if not (np.array_equal(add[zero], ar) and np.array_equal(add, add.T)
            and np.array_equal(add[add[:, :, None], ar[None, None, :]],
                               add[ar[:, None, None], add[None, :, :]])):
        raise StructureViolation("derived addition is not an abelian group")
    neg = np.argmax(add == zero, axis=1)

    def sub(u, v):
        return add[u, neg[v]]

    eta = sub(R, R[zero])
    rho = sub(L, L[zero])
    c = int(add[R[zero], L[zero]])
    rebuilt = add[add[eta[:, None], rho[None, :]], c]
    if not np.array_equal(rebuilt, T):
        raise StructureViolation("affine reconstruction does not match the table")
    if not (_is_automorphism(eta, add) and _is_automorphism(rho, add)
            and np.array_equal(eta[rho], rho[eta])):
        raise StructureViolation("eta/rho are not commuting automorphisms")
    sym = table.symbols
    return ToyodaDecomposition(
        group_table=CayleyTable(table.alphabet, add),
        eta={sym[i]: sym[int(eta[i])] for i in range(n)},
        rho={sym[i]: sym[int(rho[i])] for i in range(n)},
        constant_c=sym[c],
    )


# --- right structure: classes, local identities, s_B ------------------------


@dataclass(frozen=True)
class RightStructure:
    """Row-equality classes, the class operation, ``a -> e_a``, ``B`` and ``s_B``.

    Classes are labelled by their first member (alphabet order).
    """

    mode: str
    classes: tuple
    class_of: dict
    class_table: CayleyTable
    idempotent_map: dict
    identity_set_B: tuple
    s_B: dict

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "classes": {c[0]: list(c) for c in self.classes},
            "class_table": self.class_table.to_dict(),
            "idempotent_map": dict(self.idempotent_map),
            "identity_set_B": list(self.identity_set_B),
            "s_B": dict(self.s_B),
        }


def _closed_transversal(T: np.ndarray, fibers: list):
    """First choice of one element per fiber with ``e''*e'`` in the choice and independent of ``e''``."""
    fiber_of = {}
    for k, f in enumerate(fibers):
        for x in f:
            fiber_of[x] = k
    pick = [None] * len(fibers)

    def consistent():
        chosen = [x for x in pick if x is not None]
        forced = {}
        for e1 in chosen:
            vals = {int(T[e2, e1]) for e2 in chosen}
            if len(vals) > 1:
                return False
            v = vals.pop()
            k = fiber_of[v]
            want = pick[k] if pick[k] is not None else forced.setdefault(k, v)
            if want != v:
                return False
        return True

    def solve(k):
        if k == len(fibers):
            return True
        for x in fibers[k]:
            pick[k] = x
            if consistent() and solve(k + 1):
                return True
        pick[k] = None
        return False

    return list(pick) if solve(0) else None


def right_structure(table: CayleyTable, mode: str = PSI_ASSOCIATIVE) -> RightStructure:
    """Decompose a right-cancellable table into classes and local identities.

    ``psi_associative``: ``e_a`` is the unique ``x`` with ``a*x == a``.
    ``n_scaling``: the column sets ``{x*a}`` must partition the alphabet;
    ``B`` is the first transversal of that partition (alphabet order) closed
    in the sense that ``e''*e'`` lies in ``B`` and does not depend on
    ``e''``; ``e_a`` is the unique element of ``B`` in column ``a``.

    Every identity used downstream is verified here (well-defined class
    operation, ``s_B`` independent of the choice of ``e''`` and a
    permutation of ``B``, ``e_(a*b) == s_B(e_b)``).

    Raises
    ------
    StructureViolation
        With a witness, when any of these checks fails.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    T = table.idx
    n = table.size
    sym = table.symbols

    for a in range(n):
        if len(set(T[a].tolist())) != n:
            raise StructureViolation(f"row of {sym[a]!r} is not a permutation (not right cancellable)",
                                     witness=(sym[a],))

    groups = {}
    for a in range(n):
        groups.setdefault(T[a].tobytes(), []).append(a)
    classes = sorted(groups.values(), key=lambda c: c[0])
    cls = np.empty(n, dtype=np.int64)
    for k, members in enumerate(classes):
        cls[members] = k
    reps = [c[0] for c in classes]
    ktab = cls[T[np.ix_(reps, reps)]]
    full = ktab[cls[:, None], cls[None, :]]
    bad = _first(cls[T] != full)
    if bad is not None:
        raise StructureViolation("class operation is not well defined",
                                 witness=tuple(sym[i] for i in bad))
    labels = [sym[r] for r in reps]
    class_table = CayleyTable(Alphabet(tuple(labels)), ktab)

    if mode == PSI_ASSOCIATIVE:
        if find_psi(table) is None:
            raise StructureViolation("table is not Psi-associative")
        e = np.array([int(np.flatnonzero(T[a] == a)[0]) for a in range(n)])
        B = sorted(set(e.tolist()))
        for a in range(n):
            for b in B:
                if cls[T[a, b]] != cls[a]:
                    raise StructureViolation("a*e is not in the class of a",
                                             witness=(sym[a], sym[b]))
    else:
        cols = [frozenset(T[:, a].tolist()) for a in range(n)]
        fibers = []
        for c in cols:
            if c not in fibers:
                if any(c & f for f in fibers):
                    raise StructureViolation("column sets overlap without coinciding")
                fibers.append(c)
        if set().union(*fibers) != set(range(n)):
            raise StructureViolation("column sets do not cover the alphabet")
        pick = _closed_transversal(T, [sorted(f) for f in fibers])
        if pick is None:
            raise StructureViolation("no closed transversal of the column sets exists")
        B = sorted(pick)
        e = np.empty(n, dtype=np.int64)
        for a in range(n):
            hits = [b for b in B if b in cols[a]]
            if len(hits) != 1:
                raise StructureViolation("e_a is not unique", witness=(sym[a],))
            e[a] = hits[0]

    s = {}
    for e1 in B:
        vals = {int(T[e2, e1]) for e2 in B}
        if len(vals) != 1:
            raise StructureViolation("s_B depends on the choice of e''", witness=(sym[e1],))
        s[e1] = vals.pop()
    if sorted(s.values()) != B:
        raise StructureViolation("s_B is not a permutation of B")
    lhs = e[T]
    rhs = np.array([s[int(x)] for x in e])[None, :].repeat(n, axis=0)
    bad = _first(lhs != rhs)
    if bad is not None:
        raise StructureViolation("e_(a*b) != s_B(e_b)", witness=tuple(sym[i] for i in bad))

    return RightStructure(
        mode=mode,
        classes=tuple(tuple(sym[i] for i in c) for c in classes),
        class_of={sym[a]: labels[cls[a]] for a in range(n)},
        class_table=class_table,
        idempotent_map={sym[a]: sym[int(e[a])] for a in range(n)},
        identity_set_B=tuple(sym[b] for b in B),
        s_B={sym[k]: sym[v] for k, v in s.items()},
    )


# --- structurally compatible edge sets --------------------------------------


def sc_closure(table: CayleyTable, seed_edges) -> frozenset:
    """Least edge set containing ``seed_edges`` closed under componentwise ``*``, then pruned."""
    seed = {tuple(e) for e in seed_edges}
    if not seed:
        raise ValueError("seed edge set must be nonempty")
    E = seed
    while True:
        new = {(table(a, a2), table(b, b2)) for a, b in E for a2, b2 in E}
        if new <= E:
            break
        E = E | new
    return build_shift(table.alphabet, E).edges
