"""Sliding block codes and cellular automata on Markov shifts.

A :class:`BlockCode` stores its local rule as a dict from allowed source
windows (tuples of symbols) to target symbols. For vectorised work the rule
is also compiled into a lookup table indexed by the mixed-radix code of a
window; codes whose table would be too large fall back to dict lookups.

Images of finite words never pad: a word of length L maps to a word of
length ``L - memory - anticipation``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .algebra import CayleyTable, right_projection
from .errors import DepthTooLarge, NotAllowed, NotClosed, StructureViolation, UnknownSymbol
from .tmc import (
    MarkovShift,
    count_words,
    enumeration_cap,
    full_shift,
    iter_word_arrays,
    word_array,
)

LUT_CAP = 1 << 24


@dataclass(frozen=True)
class Check:
    """Outcome of a yes/no analysis; truthy iff ``ok``."""

    ok: bool
    witness: object = None

    def __bool__(self):
        return self.ok


@dataclass(frozen=True, eq=False)
class BlockCode:
    source: MarkovShift
    target: MarkovShift
    memory: int
    anticipation: int
    rule: dict

    @property
    def window(self) -> int:
        return self.memory + self.anticipation + 1

    @cached_property
    def lut(self):
        """Window code -> target index (-1 where undefined), or None if too large."""
        n = self.source.size
        size = n**self.window
        if size > LUT_CAP:
            return None
        table = np.full(size, -1, dtype=np.int16 if self.target.size < 1 << 15 else np.int64)
        src, tgt = self.source.alphabet, self.target.alphabet
        for w, v in self.rule.items():
            code = 0
            for s in w:
                code = code * n + src.index(s)
            table[code] = tgt.index(v) if v in tgt else -1
        return table

    @cached_property
    def _code_dtype(self):
        size = self.source.size**self.window
        return np.int16 if size < 1 << 15 else np.int32 if size < 1 << 31 else np.int64

    def apply_idx(self, words: np.ndarray) -> np.ndarray:
        """Images of a batch of equal-length index words (rows)."""
        words = np.asarray(words)
        W = self.window
        m = words.shape[1] - W + 1
        if m < 1:
            raise ValueError(f"words of length {words.shape[1]} are shorter than the window {W}")
        lut = self.lut
        if lut is not None:
            n = self.source.size
            code = words[:, :m].astype(self._code_dtype)
            for j in range(1, W):
                code *= n
                code += words[:, j:j + m]
            out = lut[code]
            if out.size and out.min() < 0:
                bad = np.argwhere(out < 0)[0]
                raise NotAllowed("window outside the rule's domain",
                                 witness=self.source.decode(words[bad[0], bad[1]:bad[1] + W]))
            return out
        src, tgt = self.source, self.target
        out = np.empty((words.shape[0], m), dtype=np.int64)
        for r, row in enumerate(words):
            w = src.decode(row)
            for j in range(m):
                out[r, j] = tgt.index(self.rule[w[j:j + W]])
        return out

    def apply(self, word) -> tuple:
        word = tuple(word)
        W = self.window
        try:
            return tuple(self.rule[word[j:j + W]] for j in range(len(word) - W + 1))
        except KeyError as exc:
            raise NotAllowed(f"window {exc.args[0]!r} outside the rule's domain") from None

    __call__ = apply

    def to_dict(self) -> dict:
        return {
            "memory": self.memory,
            "anticipation": self.anticipation,
            "rule": [[list(w), v] for w, v in self.rule.items()],
        }


def block_code(source, target, memory, anticipation, rule, validate=True) -> BlockCode:
    """Build a block code and (by default) check it is a well-defined map into ``target``.

    Checks: the rule is defined exactly on the source-allowed windows, every
    value is a target symbol, and consecutive outputs form target edges.
    """
    code = BlockCode(source, target, int(memory), int(anticipation), dict(rule))
    if validate:
        W = code.window
        windows = word_array(source, W)
        expected = {source.decode(r) for r in windows}
        if set(code.rule) != expected:
            missing = sorted(expected - set(code.rule), key=str)
            raise StructureViolation("rule is not total on the allowed windows",
                                     witness=missing[0] if missing else None)
        for v in code.rule.values():
            if v not in target.alphabet:
                raise UnknownSymbol(f"rule value {v!r} is not a target symbol")
        pairs = code.apply_idx(word_array(source, W + 1))
        A = target.adjacency
        bad = np.flatnonzero(A[pairs[:, 0], pairs[:, 1]] == 0)
        if len(bad):
            raise NotClosed("image leaves the target shift",
                            witness=target.decode(pairs[bad[0]]))
    return code


def symbol_code(source: MarkovShift, target: MarkovShift, mapping: dict, validate=True) -> BlockCode:
    """1-block code from a symbol map."""
    return block_code(source, target, 0, 0, {(a,): mapping[a] for a in source.symbols}, validate)


def identity_code(shift: MarkovShift) -> BlockCode:
    return symbol_code(shift, shift, {a: a for a in shift.symbols}, validate=False)


def compose(outer: BlockCode, inner: BlockCode) -> BlockCode:
    """The code ``outer o inner`` (apply ``inner`` first)."""
    memory = outer.memory + inner.memory
    anticipation = outer.anticipation + inner.anticipation
    L = memory + anticipation + 1
    words = word_array(inner.source, L)
    images = outer.apply_idx(inner.apply_idx(words))[:, 0]
    src, tgt = inner.source, outer.target
    rule = {src.decode(w): tgt.symbols[v] for w, v in zip(words, images)}
    return BlockCode(src, tgt, memory, anticipation, rule)


# --- cellular automata -----------------------------------------------------


@dataclass(frozen=True, eq=False)
class CellularAutomaton:
    code: BlockCode
    table: CayleyTable | None
    left_permutative: bool
    right_permutative: bool
    structurally_compatible: bool | None

    @property
    def shift(self) -> MarkovShift:
        return self.code.source

    @property
    def radius(self) -> int:
        return self.code.anticipation

    @property
    def bipermutative(self) -> bool:
        return self.left_permutative and self.right_permutative

    def apply(self, word) -> tuple:
        return self.code.apply(word)

    def flags(self) -> dict:
        return {
            "left_permutative": self.left_permutative,
            "right_permutative": self.right_permutative,
            "bipermutative": self.bipermutative,
            "structurally_compatible": self.structurally_compatible,
        }


def check_sc(shift: MarkovShift, table: CayleyTable) -> Check:
    """Structural compatibility: ``(x0*y0, x1*y1)`` is an edge for every pair of edges.

    For a 1-step shift this is equivalent to closure of the shift under the
    componentwise operation. The witness is ``(x_edge, y_edge, image)``.
    """
    edges = shift.sorted_edges
    for x in edges:
        for y in edges:
            img = (table(x[0], y[0]), table(x[1], y[1]))
            if img not in shift.edges:
                return Check(False, (x, y, img))
    return Check(True)


def _table_permutativity(shift: MarkovShift, table: CayleyTable):
    right = all(len({table(a, g) for g in shift.followers[a]}) == len(shift.followers[a])
                for a in shift.symbols)
    left = all(len({table(g, b) for g in shift.predecessors[b]}) == len(shift.predecessors[b])
               for b in shift.symbols)
    return left, right


def build_ca(shift: MarkovShift, table: CayleyTable, strict: bool = True) -> CellularAutomaton:
    """The radius-1 automaton ``id * sigma`` with local rule ``(a, b) -> a * b``.

    Raises
    ------
    NotClosed
        In strict mode, when the shift is not structurally compatible with the table.
    """
    for s in shift.symbols:
        if s not in table.alphabet:
            raise UnknownSymbol(f"shift symbol {s!r} not in the table's alphabet")
    sc = check_sc(shift, table)
    if not sc and strict:
        raise NotClosed("shift is not structurally compatible with the operation",
                        witness=sc.witness)
    rule = {(a, b): table(a, b) for a, b in shift.sorted_edges}
    code = block_code(shift, shift, 0, 1, rule, validate=sc.ok)
    left, right = _table_permutativity(shift, table)
    return CellularAutomaton(code, table, left, right, sc.ok)


def ca_from_code(code: BlockCode) -> CellularAutomaton:
    """Wrap an explicit-rule code with ``source == target`` as an automaton."""
    if code.source != code.target:
        raise StructureViolation("a cellular automaton needs source == target")
    W = code.window
    shift = code.source
    right = left = True
    if W > 1:
        for w in word_array(shift, W - 1):
            w = shift.decode(w)
            f = shift.followers[w[-1]]
            if len({code.rule[w + (g,)] for g in f}) != len(f):
                right = False
            p = shift.predecessors[w[0]]
            if len({code.rule[(g,) + w] for g in p}) != len(p):
                left = False
    else:
        right = left = len(set(code.rule.values())) == len(code.rule)
    return CellularAutomaton(code, None, left, right, None)


def shift_map(shift: MarkovShift) -> CellularAutomaton:
    """The shift sigma as a radius-1 automaton (rule ``(a, b) -> b``)."""
    return build_ca(shift, right_projection(shift.symbols))


def _iterate_table(T: np.ndarray, words: np.ndarray, n: int) -> np.ndarray:
    for _ in range(n):
        words = T[words[:, :-1], words[:, 1:]]
    return words


def power_rule(ca: CellularAutomaton, n: int) -> BlockCode:
    """Local rule of the n-th iterate, on allowed windows of length ``n*(memory+radius)+1``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    code = ca.code
    memory, anticipation = n * code.memory, n * code.anticipation
    shift = ca.shift
    words = word_array(shift, memory + anticipation + 1)
    images = words
    for _ in range(n):
        images = code.apply_idx(images)
    rule = {shift.decode(w): shift.symbols[v] for w, v in zip(words, images[:, 0])}
    return BlockCode(shift, shift, memory, anticipation, rule)


def check_n_scaling(ca: CellularAutomaton, N: int, full: bool = False) -> Check:
    """Is ``(Phi^N x)_0 == x_0 * x_N`` on every allowed (N+1)-word?

    With ``full=True`` the test runs on the extension of the rule to the full
    shift over the table's alphabet. The witness is the first failing word.
    """
    if ca.table is None or ca.radius != 1 or ca.code.memory != 0:
        raise StructureViolation("N-scaling is defined for radius-1 rules given by a table")
    if N < 2:
        raise ValueError("N must be >= 2")
    table = ca.table
    T = table.idx
    shift = full_shift(table.alphabet) if full else ca.shift
    to_table = np.array([table.alphabet.index(s) for s in shift.symbols])
    for block in iter_word_arrays(shift, N + 1):
        w = to_table[block]
        lhs = _iterate_table(T, w, N)[:, 0]
        rhs = T[w[:, 0], w[:, -1]]
        bad = np.flatnonzero(lhs != rhs)
        if len(bad):
            return Check(False, shift.decode(block[bad[0]]))
    return Check(True)


def preimage_cylinder(code: BlockCode, word, cap: int | None = None) -> list:
    """All source-allowed words of length ``len(word) + memory + anticipation`` mapping onto ``word``."""
    word = tuple(word)
    if not code.target.is_allowed(word):
        raise NotAllowed(f"word {word!r} is not allowed in the target", witness=word)
    target = code.target.encode(word)
    L = len(word) + code.window - 1
    cap = enumeration_cap() if cap is None else cap
    if count_words(code.source, L) > cap:
        raise DepthTooLarge(f"preimage enumeration at length {L} exceeds the cap {cap}",
                            first_infeasible=L)
    out = []
    for block in iter_word_arrays(code.source, L, cap=cap):
        hit = (code.apply_idx(block) == target[None, :]).all(axis=1)
        out.extend(code.source.decode(r) for r in block[hit])
    return out
