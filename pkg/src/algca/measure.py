"""Stationary finite-memory measures on Markov shifts.

A measure of depth ``d`` is a kernel ``mu_w(a)`` over allowed ``d``-word pasts
``w`` plus a stationary law on those pasts. Depth 0 is a Bernoulli measure
(only meaningful on a full shift). Chains with complete connections are
represented only at finite depth, so ``gamma_m`` vanishes for ``m >= d``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .ca import BlockCode, CellularAutomaton
from .errors import NotAllowed, NotIrreducible, NotStationary, SchemaError, StructureViolation
from .tmc import (
    MarkovShift,
    is_irreducible,
    iter_word_arrays,
    perron,
    word_array,
)

ROW_TOL = 1e-12
STATIONARY_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class FiniteMemoryMeasure:
    """Use :func:`finite_memory_measure` (or :func:`parry_measure`, :func:`bernoulli`) to build."""

    shift: MarkovShift
    depth: int
    pasts: tuple
    kernel: np.ndarray   # (len(pasts), shift.size)
    initial: np.ndarray  # (len(pasts),)
    complete_connections: bool = True

    @cached_property
    def past_index(self) -> dict:
        return {w: i for i, w in enumerate(self.pasts)}

    @cached_property
    def _past_lut(self):
        n, d = self.shift.size, self.depth
        lut = np.full(n**d, -1, dtype=np.int64)
        for i, w in enumerate(self.pasts):
            code = 0
            for s in w:
                code = code * n + self.shift.index(s)
            lut[code] = i
        return lut

    def past_codes(self, words: np.ndarray) -> np.ndarray:
        """Past index of each row (rows are length-``depth`` index words)."""
        n = self.shift.size
        code = np.zeros(words.shape[0], dtype=np.int64)
        for j in range(words.shape[1]):
            code = code * n + words[:, j]
        return self._past_lut[code]

    @cached_property
    def next_past(self) -> np.ndarray:
        """Transition of pasts: ``next_past[i, a]`` is the index of ``(w_i + a)[1:]`` or -1."""
        out = np.full((len(self.pasts), self.shift.size), -1, dtype=np.int64)
        for i, w in enumerate(self.pasts):
            for a in range(self.shift.size):
                if self.kernel[i, a] > 0 or self._follows(w, a):
                    nw = (w + (self.shift.symbols[a],))[1:]
                    out[i, a] = self.past_index.get(nw, -1)
        return out

    def _follows(self, w, a) -> bool:
        if not w:
            return True
        return (w[-1], self.shift.symbols[a]) in self.shift.edges

    def conditional(self, past, symbol) -> float:
        past = tuple(past)[len(past) - self.depth:] if self.depth else ()
        return float(self.kernel[self.past_index[past], self.shift.index(symbol)])

    def kernel_dict(self) -> dict:
        sym = self.shift.symbols
        return {w: {sym[a]: float(p) for a, p in enumerate(row) if p > 0}
                for w, row in zip(self.pasts, self.kernel)}

    def to_dict(self) -> dict:
        def key(w):
            return " ".join(str(s) for s in w)
        return {
            "type": "finite_memory",
            "depth": self.depth,
            "kernel": {key(w): {str(k): v for k, v in row.items()}
                       for w, row in self.kernel_dict().items()},
            "initial": {key(w): float(p) for w, p in zip(self.pasts, self.initial)},
        }


def _pasts(shift: MarkovShift, depth: int) -> tuple:
    if depth == 0:
        return ((),)
    return tuple(shift.decode(r) for r in word_array(shift, depth))


def _transition_matrix(shift, depth, pasts, kernel) -> np.ndarray:
    index = {w: i for i, w in enumerate(pasts)}
    Q = np.zeros((len(pasts), len(pasts)))
    for i, w in enumerate(pasts):
        for a, p in enumerate(kernel[i]):
            if p > 0:
                Q[i, index[(w + (shift.symbols[a],))[1:]]] += p
    return Q


def stationary_distribution(Q: np.ndarray, tol: float = STATIONARY_TOL, max_iter: int = 10**5):
    """Stationary row vector of a stochastic matrix by power iteration on the lazy chain."""
    m = Q.shape[0]
    lazy = 0.5 * (Q + np.eye(m))
    pi = np.full(m, 1.0 / m)
    for _ in range(max_iter):
        nxt = pi @ lazy
        nxt /= nxt.sum()
        if np.abs(nxt - pi).max() <= tol * 1e-2:
            return nxt
        pi = nxt
    return pi


def finite_memory_measure(shift: MarkovShift, depth: int, kernel: dict, initial: dict | None = None,
                          require_complete: bool = True) -> FiniteMemoryMeasure:
    """Build and validate a depth-``depth`` measure.

    ``kernel`` maps each allowed past (tuple of ``depth`` symbols; ``()`` for
    depth 0) to ``{symbol: probability}``. Missing symbols have probability 0.
    ``initial`` (law of the pasts) is computed from the kernel when omitted and
    must be stationary when given.

    Raises
    ------
    SchemaError
        Rows not summing to one, mass on forbidden followers, unknown pasts,
        or (with ``require_complete``) a zero on an allowed follower.
    NotStationary
        ``initial`` is not invariant under the kernel.
    """
    if depth < 0:
        raise SchemaError("depth must be >= 0")
    if depth == 0 and not shift.is_full:
        raise SchemaError("a depth-0 (Bernoulli) measure needs a full shift")
    pasts = _pasts(shift, depth)
    n = shift.size
    K = np.zeros((len(pasts), n))
    index = {w: i for i, w in enumerate(pasts)}
    for w, row in kernel.items():
        w = tuple(w)
        if w not in index:
            raise SchemaError(f"kernel past {w!r} is not an allowed {depth}-word")
        for a, p in row.items():
            K[index[w], shift.index(a)] = float(p)
    complete = True
    for i, w in enumerate(pasts):
        allowed = shift.followers[w[-1]] if w else set(shift.symbols)
        for a in range(n):
            s = shift.symbols[a]
            if s in allowed:
                if K[i, a] <= 0:
                    complete = False
            elif K[i, a] != 0:
                raise SchemaError(f"kernel puts mass on forbidden follower {s!r} of {w!r}")
        if abs(K[i].sum() - 1.0) > ROW_TOL:
            raise SchemaError(f"kernel row {w!r} sums to {K[i].sum()!r}")
        if (K[i] < 0).any():
            raise SchemaError(f"negative probability in row {w!r}")
    if require_complete and not complete:
        raise SchemaError("kernel lacks complete connections (zero on an allowed follower)")
    Q = _transition_matrix(shift, depth, pasts, K)
    if initial is None:
        pi = stationary_distribution(Q)
    else:
        pi = np.zeros(len(pasts))
        for w, p in initial.items():
            w = tuple(w)
            if w not in index:
                raise SchemaError(f"initial past {w!r} is not an allowed {depth}-word")
            pi[index[w]] = float(p)
    if abs(pi.sum() - 1.0) > ROW_TOL:
        raise NotStationary(f"initial law sums to {pi.sum()!r}")
    resid = np.abs(pi @ Q - pi).max()
    if resid > STATIONARY_TOL:
        raise NotStationary(f"initial law is not stationary (residual {resid:.3e})")
    K.setflags(write=False)
    pi.setflags(write=False)
    return FiniteMemoryMeasure(shift, depth, pasts, K, pi, complete)


def bernoulli(shift: MarkovShift, probs: dict) -> FiniteMemoryMeasure:
    return finite_memory_measure(shift, 0, {(): probs}, {(): 1.0},
                                 require_complete=all(p > 0 for p in probs.values()))


def markov_measure(shift: MarkovShift, kernel: dict, initial: dict | None = None,
                   require_complete: bool = True) -> FiniteMemoryMeasure:
    """Depth-1 measure from ``{a: {b: P(a -> b)}}``."""
    kernel = {(a,): row for a, row in kernel.items()}
    if initial is not None:
        initial = {(a,): p for a, p in initial.items()}
    return finite_memory_measure(shift, 1, kernel, initial, require_complete)


def random_measure(shift: MarkovShift, depth: int, rng, floor: float = 0.05) -> FiniteMemoryMeasure:
    """Random measure with complete connections; each follower gets mass >= ``floor``/|F|."""
    kernel = {}
    for w in _pasts(shift, depth):
        foll = sorted(shift.followers[w[-1]] if w else shift.symbols, key=shift.index)
        p = rng.dirichlet(np.ones(len(foll)))
        p = (1 - floor) * p + floor / len(foll)
        p /= p.sum()
        kernel[w] = dict(zip(foll, p))
    return finite_memory_measure(shift, depth, kernel)


def parry_measure(shift: MarkovShift) -> FiniteMemoryMeasure:
    """Maximal-entropy Markov measure of an irreducible shift.

    ``P(a -> b) = A_ab v_b / (lambda v_a)`` and ``pi_a ~ u_a v_a`` from the
    Perron root ``lambda`` and right/left eigenvectors ``v``, ``u``.
    """
    if not is_irreducible(shift):
        raise NotIrreducible("the Parry measure needs an irreducible shift")
    A = shift.adjacency.astype(float)
    lam, v, u = perron(A)
    P = A * v[None, :] / (lam * v[:, None])
    P /= P.sum(axis=1, keepdims=True)
    pi = u * v
    pi /= pi.sum()
    # polish against the exact kernel so stationarity holds to round-off
    Q = _transition_matrix(shift, 1, _pasts(shift, 1), P)
    for _ in range(50):
        nxt = pi @ Q
        nxt /= nxt.sum()
        if np.abs(nxt - pi).max() <= 1e-16:
            break
        pi = nxt
    sym = shift.symbols
    kernel = {(sym[a],): {sym[b]: P[a, b] for b in range(len(sym)) if P[a, b] > 0}
              for a in range(len(sym))}
    return finite_memory_measure(shift, 1, kernel, {(sym[a],): pi[a] for a in range(len(sym))})


def entropy_rate(measure: FiniteMemoryMeasure) -> float:
    K = measure.kernel
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(K > 0, -K * np.log(K), 0.0)
    return float(measure.initial @ terms.sum(axis=1))


# --- cylinders ---------------------------------------------------------------


def word_probs(measure: FiniteMemoryMeasure, words: np.ndarray) -> np.ndarray:
    """Cylinder probabilities for rows of ``words`` (indices into ``measure.shift``)."""
    words = np.asarray(words, dtype=np.int64)
    m, L = words.shape
    d = measure.depth
    if L < d:
        full = word_array(measure.shift, d).astype(np.int64)
        probs = measure.initial[measure.past_codes(full)]
        acc = {}
        for row, p in zip(full[:, :L], probs):
            acc[row.tobytes()] = acc.get(row.tobytes(), 0.0) + p
        return np.array([acc.get(r.tobytes(), 0.0) for r in words])
    past = measure.past_codes(words[:, :d])
    ok = past >= 0
    p = np.where(ok, measure.initial[np.where(ok, past, 0)], 0.0)
    for i in range(d, L):
        p = p * measure.kernel[np.where(past >= 0, past, 0), words[:, i]] * (past >= 0)
        if d:
            past = np.where(past >= 0, measure.next_past[np.where(past >= 0, past, 0), words[:, i]], -1)
    return p


def cylinder_prob(measure: FiniteMemoryMeasure, word) -> float:
    word = tuple(word)
    if not measure.shift.is_allowed(word):
        raise NotAllowed(f"word {word!r} is not allowed", witness=word)
    return float(word_probs(measure, measure.shift.encode(word)[None, :])[0])


# --- gamma sequence ---------------------------------------------------------


@dataclass(frozen=True)
class GammaSequence:
    values: tuple

    def __getitem__(self, m):
        """``gamma_m`` for ``m >= 1``."""
        return self.values[m - 1]

    @property
    def total(self) -> float:
        return float(sum(self.values))


def gamma_sequence(measure: FiniteMemoryMeasure, m_max: int) -> GammaSequence:
    """``gamma_1 .. gamma_m_max``: sup of ``|mu_v(a)/mu_w(a) - 1|`` over pasts agreeing on the last m symbols."""
    if m_max < 1:
        raise ValueError("m_max must be >= 1")
    d = measure.depth
    K = measure.kernel
    values = []
    for m in range(1, m_max + 1):
        if m >= d:
            values.append(0.0)
            continue
        groups = {}
        for i, w in enumerate(measure.pasts):
            groups.setdefault(w[d - m:], []).append(i)
        sup = 0.0
        for members in groups.values():
            for a in range(measure.shift.size):
                col = K[members, a]
                if not (col > 0).any():
                    continue
                if (col == 0).any():
                    return GammaSequence(tuple(values) + (math.inf,) * (m_max - len(values)))
                for x in col:
                    for y in col:
                        sup = max(sup, abs(x / y - 1))
        values.append(float(sup))
    return GammaSequence(tuple(values))


# --- pushforward ------------------------------------------------------------


def _source_map(measure: FiniteMemoryMeasure, code: BlockCode) -> np.ndarray:
    src = code.source
    for a, b in measure.shift.edges:
        if (a, b) not in src.edges:
            raise StructureViolation("measure lives outside the code's source shift")
    return np.array([src.index(s) for s in measure.shift.symbols], dtype=np.int64)


def pushforward_distribution(measure: FiniteMemoryMeasure, code: BlockCode, k: int,
                             cap: int | None = None) -> dict:
    """Law of the image k-words: ``{target word: mu(code^-1 [word])}`` (positive entries only)."""
    L = k + code.window - 1
    to_src = _source_map(measure, code)
    n_t = code.target.size
    acc = {}
    for block in iter_word_arrays(measure.shift, L, cap=cap):
        probs = word_probs(measure, block)
        img = code.apply_idx(to_src[block])
        keys = np.zeros(img.shape[0], dtype=np.int64)
        for j in range(k):
            keys = keys * n_t + img[:, j]
        uniq, inv = np.unique(keys, return_inverse=True)
        sums = np.bincount(inv, weights=probs)
        for key, s in zip(uniq.tolist(), sums.tolist()):
            acc[key] = acc.get(key, 0.0) + s
    out = {}
    for key in sorted(acc):
        if acc[key] <= 0:
            continue
        digits, rest = [], key
        for _ in range(k):
            rest, r = divmod(rest, n_t)
            digits.append(r)
        out[code.target.decode(digits[::-1])] = acc[key]
    return out


def cylinder_inverse(code: BlockCode):
    """Inverse (memory 1, anticipation 0) of a 1-block code that is constant on predecessor sets.

    Returns None unless: the code is 1-block; ``theta`` is constant on every
    predecessor set ``P(c)`` (call that value ``kappa(c)``); ``c -> (kappa(c),
    theta(c))`` is injective; every target edge has a preimage; and the
    2-block inverse maps every target 3-word to a source edge.
    """
    if code.window != 1:
        return None
    src, tgt = code.source, code.target
    theta = {a: code.rule[(a,)] for a in src.symbols}
    kappa = {}
    for c in src.symbols:
        vals = {theta[p] for p in src.predecessors[c]}
        if len(vals) != 1:
            return None
        kappa[c] = vals.pop()
    inv = {}
    for c in src.symbols:
        key = (kappa[c], theta[c])
        if key in inv:
            return None
        inv[key] = c
    if set(tgt.edges) - set(inv):
        return None
    rule = {e: inv[e] for e in tgt.sorted_edges}
    for w in word_array(tgt, 3):
        a, b, c = tgt.decode(w)
        if (rule[(a, b)], rule[(b, c)]) not in src.edges:
            return None
    return BlockCode(tgt, src, 1, 0, rule)


def pushforward_cylinder(measure: FiniteMemoryMeasure, code: BlockCode, word,
                         shortcut: bool = False) -> float:
    """``mu(code^-1 [word])``, summed exactly over the preimage words.

    With ``shortcut=True`` and a code accepted by :func:`cylinder_inverse`, a
    word of length >= 2 pulls back to the single cylinder of its inverse
    image, one symbol shorter.
    """
    word = tuple(word)
    if not code.target.is_allowed(word):
        raise NotAllowed(f"word {word!r} is not allowed in the target", witness=word)
    if shortcut and len(word) >= 2:
        inverse = cylinder_inverse(code)
        if inverse is None:
            raise StructureViolation("code does not satisfy the single-cylinder conditions")
        pre = inverse.apply(word)
        return cylinder_prob(measure, pre) if measure.shift.is_allowed(pre) else 0.0
    target = code.target.encode(word)
    L = len(word) + code.window - 1
    to_src = _source_map(measure, code)
    total = 0.0
    for block in iter_word_arrays(measure.shift, L):
        hit = (code.apply_idx(to_src[block]) == target[None, :]).all(axis=1)
        if hit.any():
            total += float(word_probs(measure, block[hit]).sum())
    return total


def pushforward_measure(measure: FiniteMemoryMeasure, code: BlockCode, depth: int,
                        tol: float = 1e-10) -> FiniteMemoryMeasure:
    """The image measure as a depth-``depth`` measure on ``code.target``.

    Built from image cylinder probabilities; the finite-memory claim is
    checked on words of length ``depth + 2``.

    Raises
    ------
    StructureViolation
        The image is not a finite-memory measure of that depth.
    """
    tgt = code.target
    law = pushforward_distribution(measure, code, depth + 1)
    pasts = _pasts(tgt, depth)
    if depth == 0:
        marg = {(): 1.0}
    else:
        marg = pushforward_distribution(measure, code, depth)
    kernel = {}
    for w in pasts:
        mass = marg.get(w, 0.0)
        foll = sorted(tgt.followers[w[-1]] if w else tgt.symbols, key=tgt.index)
        if mass > 0:
            row = {a: law.get(w + (a,), 0.0) / mass for a in foll}
            s = sum(row.values())
            kernel[w] = {a: p / s for a, p in row.items()}
        else:
            kernel[w] = {a: 1.0 / len(foll) for a in foll}
    initial = {w: marg.get(w, 0.0) for w in pasts}
    try:
        out = finite_memory_measure(tgt, depth, kernel, initial, require_complete=False)
    except NotStationary as exc:
        raise StructureViolation(f"pushforward is not a depth-{depth} measure: {exc}") from None
    check = pushforward_distribution(measure, code, depth + 2)
    words = word_array(tgt, depth + 2)
    predicted = word_probs(out, words)
    for w, p in zip(words, predicted):
        if abs(p - check.get(tgt.decode(w), 0.0)) > tol:
            raise StructureViolation(f"pushforward is not a depth-{depth} measure",
                                     witness=tgt.decode(w))
    return out


def relabel_pushforward(measure: FiniteMemoryMeasure, code: BlockCode) -> FiniteMemoryMeasure:
    """Image of ``measure`` under a code accepted by :func:`cylinder_inverse`, by relabelling.

    The image has depth ``d + 1`` and ``mu'_w'(a') = mu_w(a)`` with
    ``w = inverse(w')`` and ``a = inverse(w'_-1, a')``; the kernel entries are
    copied, not recomputed.
    """
    inverse = cylinder_inverse(code)
    if inverse is None:
        raise StructureViolation("code does not satisfy the single-cylinder conditions")
    tgt = code.target
    d = measure.depth
    kernel = {}
    for w2 in _pasts(tgt, d + 1):
        w = inverse.apply(w2)
        row = measure.kernel[measure.past_index[w]]
        kernel[w2] = {a2: row[measure.shift.index(inverse.rule[(w2[-1], a2)])]
                      for a2 in tgt.followers[w2[-1]]}
    initial = pushforward_distribution(measure, code, d + 1)
    initial = {w: initial.get(w, 0.0) for w in _pasts(tgt, d + 1)}
    return finite_memory_measure(tgt, d + 1, kernel, initial,
                                 require_complete=measure.complete_connections)


# --- invariance -------------------------------------------------------------


@dataclass(frozen=True)
class InvarianceResult:
    invariant: bool
    max_deviation: float
    worst_word: tuple | None
    deviations: dict

    def __bool__(self):
        return self.invariant

    def to_dict(self) -> dict:
        return {
            "invariant": self.invariant,
            "max_deviation": self.max_deviation,
            "worst_word": None if self.worst_word is None else list(self.worst_word),
        }


def check_invariance(measure: FiniteMemoryMeasure, ca, depth: int, tol: float = 1e-12) -> InvarianceResult:
    """Compare ``mu(Phi^-1 [w])`` with ``mu[w]`` for every word of length <= ``depth``."""
    code = ca.code if isinstance(ca, CellularAutomaton) else ca
    deviations = {}
    worst, worst_word = 0.0, None
    for k in range(1, depth + 1):
        image = pushforward_distribution(measure, code, k)
        words = [code.target.decode(r) for r in word_array(code.target, k)]
        for w in words:
            base = cylinder_prob(measure, w) if measure.shift.is_allowed(w) else 0.0
            dev = abs(image.get(w, 0.0) - base)
            deviations[w] = dev
            if dev > worst:
                worst, worst_word = dev, w
    return InvarianceResult(worst <= tol, worst, worst_word, deviations)


# --- sampling ---------------------------------------------------------------


def sample_paths(measure: FiniteMemoryMeasure, length: int, count: int, rng) -> np.ndarray:
    """``count`` independent sample words as a (count, length) index array."""
    d = measure.depth
    if length < d:
        raise ValueError("length must be >= depth")
    n = measure.shift.size
    out = np.empty((count, length), dtype=np.int64)
    cum_init = np.cumsum(measure.initial)
    past = np.minimum(np.searchsorted(cum_init, rng.random(count), side="right"), len(cum_init) - 1)
    if d:
        past_arr = np.array([[measure.shift.index(s) for s in w] for w in measure.pasts])
        out[:, :d] = past_arr[past]
    cum = np.cumsum(measure.kernel, axis=1)
    for i in range(d, length):
        u = rng.random(count)
        sym = np.minimum((u[:, None] >= cum[past]).sum(axis=1), n - 1)
        out[:, i] = sym
        if d:
            past = measure.next_past[past, sym]
    return out


def sample_paths_blocked(measure: FiniteMemoryMeasure, length: int, samples: int, seed: int,
                         block: int = 1 << 14) -> np.ndarray:
    """Samples drawn in blocks with per-block generators spawned from ``seed``.

    Blocks are independent, so they may be produced by separate workers;
    concatenating them in block order gives the same array regardless.
    """
    nblocks = -(-samples // block)
    seqs = np.random.SeedSequence(seed).spawn(nblocks)
    parts = []
    for b, ss in enumerate(seqs):
        size = min(block, samples - b * block)
        parts.append(sample_paths(measure, length, size, np.random.default_rng(ss)))
    return np.concatenate(parts, axis=0)


def sample_path(measure: FiniteMemoryMeasure, length: int, seed: int) -> tuple:
    row = sample_paths(measure, length, 1, np.random.default_rng(seed))[0]
    return measure.shift.decode(row)
