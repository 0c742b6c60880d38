"""Product decomposition of right-permutative automata and conjugacy checks.

For a structurally compatible, right-permutative automaton whose table is
Psi-associative (or N-scaling), the symbol map ``u(a) = (class of a, e_a)``
carries the automaton onto a product of an automaton on the row classes
``K`` and a translation ``s_B o sigma`` on the local identities ``B``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .algebra import (
    N_SCALING,
    PSI_ASSOCIATIVE,
    CayleyTable,
    RightStructure,
    right_structure,
)
from .ca import BlockCode, CellularAutomaton, block_code, build_ca, check_n_scaling, symbol_code
from .errors import (
    AlgcaError,
    HypothesisFailed,
    NotBijective,
    ProductFailed,
    SearchExceeded,
)
from .tmc import MarkovShift, build_shift, count_words, entropy, enumeration_cap, full_shift, iter_word_arrays, word_array

DEFAULT_DEPTH = 8


# --- the symbol map u --------------------------------------------------------


def product_table(rs: RightStructure) -> CayleyTable:
    """The operation ``(k1, e1) * (k2, e2) = (k1 o k2, s_B(e2))`` on ``K x B``."""
    labels = [c[0] for c in rs.classes]
    symbols = [(k, e) for k in labels for e in rs.identity_set_B]
    return CayleyTable.from_function(
        symbols, lambda x, y: (rs.class_table(x[0], y[0]), rs.s_B[y[1]]))


def hmm_code(table: CayleyTable, mode: str = PSI_ASSOCIATIVE) -> dict:
    """``u(a) = (class of a, e_a)``, checked to be a bijection onto ``K x B`` and an isomorphism.

    Raises
    ------
    NotBijective
        Two symbols share an image (witness is the pair), or ``u`` is not
        onto ``K x B``.
    StructureViolation
        Propagated from :func:`right_structure`.
    """
    rs = right_structure(table, mode)
    return _hmm_from_structure(table, rs)


def _hmm_from_structure(table: CayleyTable, rs: RightStructure) -> dict:
    u = {a: (rs.class_of[a], rs.idempotent_map[a]) for a in table.symbols}
    seen = {}
    for a, img in u.items():
        if img in seen:
            raise NotBijective(f"u({seen[img]!r}) == u({a!r})", witness=(seen[img], a))
        seen[img] = a
    prod = product_table(rs)
    if set(seen) != set(prod.symbols):
        raise NotBijective("u is not onto K x B")
    for a in table.symbols:
        for c in table.symbols:
            if u[table(a, c)] != prod(u[a], u[c]):
                raise NotBijective("u is not multiplicative", witness=(a, c))
    return u


# --- conjugacy ---------------------------------------------------------------


@dataclass(frozen=True)
class ConjugacyCheck:
    code: BlockCode
    inverse_code: BlockCode | None
    depth: int
    verified: bool
    failure_witness: tuple | None = None
    reason: str | None = None

    def __bool__(self):
        return self.verified

    def to_dict(self) -> dict:
        return {
            "depth": self.depth,
            "verified": self.verified,
            "failure_witness": None if self.failure_witness is None else list(self.failure_witness),
            "reason": self.reason,
        }


def _commutes_at(ca_a, ca_b, code, L):
    """First allowed L-word of A where ``code o Phi_A`` and ``Phi_B o code`` disagree, or None."""
    A, B, T = ca_a.code, ca_b.code, code
    lo1, hi1 = A.memory + T.memory, L - 1 - A.anticipation - T.anticipation
    lo2, hi2 = T.memory + B.memory, L - 1 - T.anticipation - B.anticipation
    lo, hi = max(lo1, lo2), min(hi1, hi2)
    for block in iter_word_arrays(ca_a.shift, L):
        left = T.apply_idx(A.apply_idx(block))[:, lo - lo1:hi - lo1 + 1]
        right = B.apply_idx(T.apply_idx(block))[:, lo - lo2:hi - lo2 + 1]
        bad = np.flatnonzero((left != right).any(axis=1))
        if len(bad):
            return ca_a.shift.decode(block[bad[0]])
    return None


def _injectivity_failure(code: BlockCode, L: int, inverse: BlockCode | None):
    src = code.source
    if inverse is not None:
        m = code.memory + inverse.memory
        for block in iter_word_arrays(src, L):
            back = inverse.apply_idx(code.apply_idx(block))
            want = block[:, m:m + back.shape[1]]
            bad = np.flatnonzero((back != want).any(axis=1))
            if len(bad):
                return src.decode(block[bad[0]])
        return None
    if code.window == 1:
        img = [code.rule[(a,)] for a in src.symbols]
        if len(set(img)) != len(img):
            i = next(j for j, v in enumerate(img) if img.index(v) != j)
            return (src.symbols[img.index(img[i])], src.symbols[i])
        return None
    # finite-depth surrogate: the image of an L-word fixes its central symbol
    centre = L // 2
    block = word_array(src, L)
    keys = _keys(code.apply_idx(block), code.target.size)
    order = np.lexsort((block[:, centre], keys))
    k, c = keys[order], block[order, centre]
    bad = np.flatnonzero((k[1:] == k[:-1]) & (c[1:] != c[:-1]))
    if len(bad):
        return src.decode(block[order[bad[0] + 1]])
    return None


def _keys(words: np.ndarray, n: int) -> np.ndarray:
    keys = words[:, 0].astype(np.int64)
    for j in range(1, words.shape[1]):
        keys *= n
        keys += words[:, j]
    return keys


def _surjectivity_failure(code: BlockCode, L: int):
    tgt = code.target
    if code.window == 1:
        # a 1-block code into a 1-step shift is onto iff edges cover the target edges
        rule = code.rule
        image = {(rule[(a,)], rule[(b,)]) for a, b in code.source.edges}
        missing = sorted(tgt.edges - image, key=lambda e: (tgt.index(e[0]), tgt.index(e[1])))
        return missing[0] if missing else None
    k = L - code.window + 1
    if k < 1:
        return None
    n = tgt.size
    hit = np.zeros(n**k, dtype=bool)
    for block in iter_word_arrays(code.source, L):
        hit[_keys(code.apply_idx(block), n)] = True
    for block in iter_word_arrays(tgt, k):
        miss = np.flatnonzero(~hit[_keys(block.astype(np.int64), n)])
        if len(miss):
            return tgt.decode(block[miss[0]])
    return None


def verify_conjugacy(ca_a: CellularAutomaton, ca_b: CellularAutomaton, code: BlockCode,
                     depth: int = DEFAULT_DEPTH, inverse_code: BlockCode | None = None) -> ConjugacyCheck:
    """Check ``code o Phi_A == Phi_B o code`` and that ``code`` is invertible, up to ``depth``.

    Commutation is scanned by increasing word length so the witness is the
    shortest (then lexicographically first) failing word. Invertibility is
    checked through ``inverse_code`` when given, by symbol injectivity for
    1-block codes, and otherwise by requiring the image of each
    ``depth``-word to determine its central symbol. Surjectivity is checked
    on target words of the image length.
    """
    def fail(witness, reason):
        return ConjugacyCheck(code, inverse_code, depth, False, witness, reason)

    if code.source != ca_a.shift or code.target != ca_b.shift:
        return fail(None, "code does not map the source of A to the source of B")
    A, B = ca_a.code, ca_b.code
    L0 = (code.memory + code.anticipation + max(A.memory, B.memory)
          + max(A.anticipation, B.anticipation) + 1)
    if depth < L0:
        return fail(None, f"depth must be at least {L0}")
    # every allowed word extends to an allowed depth-word, so one scan decides;
    # on failure shorter lengths are rescanned for the shortest witness
    if _commutes_at(ca_a, ca_b, code, depth) is not None:
        for L in range(L0, depth + 1):
            w = _commutes_at(ca_a, ca_b, code, L)
            if w is not None:
                return fail(w, "code does not intertwine the automata")
    L_inj = max(depth, code.window + (inverse_code.window - 1 if inverse_code else 0))
    w = _injectivity_failure(code, L_inj, inverse_code)
    if w is not None:
        return fail(w, "code is not injective")
    w = _surjectivity_failure(code, depth)
    if w is not None:
        return fail(w, "code is not onto the target shift")
    return ConjugacyCheck(code, inverse_code, depth, True)


# --- decomposition -----------------------------------------------------------


@dataclass
class DecompositionCertificate:
    mode: str
    structure: RightStructure
    u: dict
    u_code: BlockCode
    Lambda_shift: MarkovShift
    K_shift: MarkovShift
    B_shift: MarkovShift
    class_ca: CellularAutomaton
    translation: dict
    translation_code: BlockCode
    product_ca: CellularAutomaton
    period_M: int
    exponent_L: int
    product_verified: bool
    conjugacy: ConjugacyCheck | None = None
    scaling_N: int | None = None
    missing_edge: tuple | None = field(default=None)

    def to_dict(self) -> dict:
        def pair(x):
            return [x[0], x[1]]
        return {
            "mode": self.mode,
            "u": {str(a): pair(v) for a, v in self.u.items()},
            "classes": {str(c[0]): list(c) for c in self.structure.classes},
            "K": list(self.K_shift.symbols),
            "K_edges": [list(e) for e in self.K_shift.sorted_edges],
            "class_table": self.structure.class_table.restrict(self.K_shift.symbols).to_dict(),
            "B": list(self.B_shift.symbols),
            "B_edges": [list(e) for e in self.B_shift.sorted_edges],
            "s_B": {str(k): v for k, v in self.translation.items()},
            "period_M": self.period_M,
            "exponent_L": self.exponent_L,
            "scaling_N": self.scaling_N,
            "product_verified": self.product_verified,
            "missing_edge": None if self.missing_edge is None else [pair(x) for x in self.missing_edge],
            "conjugacy": None if self.conjugacy is None else self.conjugacy.to_dict(),
        }


def permutation_cycles(perm: dict) -> list:
    seen, cycles = set(), []
    for x in perm:
        if x in seen:
            continue
        cyc, y = [], x
        while y not in seen:
            seen.add(y)
            cyc.append(y)
            y = perm[y]
        cycles.append(tuple(cyc))
    return cycles


def _perm_order(f: dict) -> int:
    return math.lcm(*(len(c) for c in permutation_cycles(f)))


def right_multiplication_exponent(table: CayleyTable, symbols=None) -> int:
    """lcm over ``a`` of the order of ``k -> k * a`` on ``symbols``.

    Raises
    ------
    HypothesisFailed
        Some right multiplication is not a permutation of ``symbols``.
    """
    symbols = table.symbols if symbols is None else tuple(symbols)
    orders = []
    for a in symbols:
        f = {k: table(k, a) for k in symbols}
        if set(f.values()) != set(symbols):
            raise HypothesisFailed(f"right multiplication by {a!r} is not a permutation", witness=(a,))
        orders.append(_perm_order(f))
    return math.lcm(*orders)


def find_scaling_N(table: CayleyTable, max_N: int = 16) -> int | None:
    """Smallest ``N >= 2`` for which ``id * sigma`` on the full shift is N-scaling (within the cap)."""
    shift = full_shift(table.symbols)
    ca = build_ca(shift, table)
    cap = enumeration_cap()
    for N in range(2, max_N + 1):
        if count_words(shift, N + 1) > cap:
            return None
        if check_n_scaling(ca, N):
            return N
    return None


def decompose(ca: CellularAutomaton, mode: str = PSI_ASSOCIATIVE, depth: int = DEFAULT_DEPTH,
              N: int | None = None) -> DecompositionCertificate:
    """Conjugate ``ca`` through ``u`` to ``Phi_K x g_B`` and certify it.

    Raises
    ------
    HypothesisFailed
        The automaton is not SC / right-permutative, or the table fails the
        mode's hypotheses (the upstream error is chained).
    ProductFailed
        The image shift is not the product of its two projections; the
        partial certificate is attached.
    """
    table = ca.table
    if table is None or ca.code.memory != 0 or ca.radius != 1:
        raise HypothesisFailed("decompose needs a radius-1 automaton given by a table")
    if not ca.structurally_compatible:
        raise HypothesisFailed("automaton is not structurally compatible")
    if not ca.right_permutative:
        raise HypothesisFailed("automaton is not right-permutative")
    scaling_N = None
    if mode == N_SCALING:
        if N is None:
            scaling_N = find_scaling_N(table)
            if scaling_N is None:
                raise HypothesisFailed("no N-scaling found on the full-shift extension")
        else:
            if not check_n_scaling(ca, N, full=True):
                raise HypothesisFailed(f"full-shift extension is not {N}-scaling")
            scaling_N = N
    try:
        rs = right_structure(table, mode)
        u = _hmm_from_structure(table, rs)
    except AlgcaError as exc:
        raise HypothesisFailed(f"{exc.code}: {exc}", witness=exc.witness) from exc

    G = ca.shift
    prod = product_table(rs)
    image_syms = [x for x in prod.symbols if x in {u[a] for a in G.symbols}]
    lam_edges = {(u[a], u[b]) for a, b in G.edges}
    Lam = build_shift(image_syms, lam_edges)
    labels = [c[0] for c in rs.classes]
    K_edges = {(x[0], y[0]) for x, y in lam_edges}
    B_edges = {(x[1], y[1]) for x, y in lam_edges}
    K_shift = build_shift([k for k in labels if any(k == x[0] for x in image_syms)], K_edges)
    B_shift = build_shift([e for e in rs.identity_set_B if any(e == x[1] for x in image_syms)], B_edges)

    missing = None
    for x, y in sorted(itertools.product(K_shift.sorted_edges, B_shift.sorted_edges)):
        edge = ((x[0], y[0]), (x[1], y[1]))
        if edge not in lam_edges:
            missing = edge
            break

    s_B = dict(rs.s_B)
    period_M = _perm_order(s_B)
    exponent_L = right_multiplication_exponent(rs.class_table, K_shift.symbols)
    u_code = symbol_code(G, Lam, u)
    try:
        class_ca = build_ca(K_shift, rs.class_table)
        g_rule = {(e1, e2): s_B[e2] for e1, e2 in B_shift.sorted_edges}
        translation_code = block_code(B_shift, B_shift, 0, 1, g_rule)
        product_ca = build_ca(Lam, prod)
    except AlgcaError as exc:
        raise HypothesisFailed(f"{exc.code}: {exc}", witness=exc.witness) from exc
    cert = DecompositionCertificate(
        mode, rs, u, u_code, Lam, K_shift, B_shift, class_ca, s_B, translation_code,
        product_ca, period_M, exponent_L, missing is None, None, scaling_N, missing)
    if missing is not None:
        raise ProductFailed("image shift is not the product of its projections",
                            witness=missing, certificate=cert)
    cert.conjugacy = verify_conjugacy(ca, product_ca, u_code, depth)
    return cert


def step3_walk(cert: DecompositionCertificate, start, multiplier) -> list:
    """Symbol-level replay of the product argument.

    From ``y = start`` right-multiply by ``multiplier`` ``L`` times, then
    ``M - 1`` rounds of right-multiplying ``y`` by itself ``L`` times. With
    ``start = (c, e')`` and ``multiplier = (a, e)`` the walk ends at ``(c, e)``.
    Returns every intermediate state.
    """
    prod = cert.product_ca.table
    L, M = cert.exponent_L, cert.period_M
    y = start
    states = [y]
    for _ in range(L):
        y = prod(y, multiplier)
        states.append(y)
    for _ in range(M - 1):
        z = y
        for _ in range(L):
            y = prod(y, z)
            states.append(y)
    return states


# --- search ------------------------------------------------------------------


def _edge_iso_ok(assign, A_edges, B_edges, a, syms_a):
    x = assign[a]
    for b in syms_a:
        if b not in assign:
            continue
        y = assign[b]
        if ((a, b) in A_edges) != ((x, y) in B_edges):
            return False
        if ((b, a) in A_edges) != ((y, x) in B_edges):
            return False
    return True


def _rule_ok(assign, ca_a, ca_b):
    ra, rb = ca_a.code.rule, ca_b.code.rule
    for w, v in ra.items():
        if v in assign and all(s in assign for s in w):
            if rb.get(tuple(assign[s] for s in w)) != assign[v]:
                return False
    return True


def search_conjugacy(ca_a: CellularAutomaton, ca_b: CellularAutomaton, max_window: int = 1,
                     budget: int = 10**6) -> BlockCode | None:
    """First conjugacy in canonical order among 1-block, then memory-1 2-block, codes.

    1-block candidates are bijections assigned in alphabet order and pruned
    by edge structure and (for equal rule shapes) the intertwining identity.
    Each complete candidate must pass :func:`verify_conjugacy` at depth
    ``2 * max_window + 4``. Returns None when no candidate exists.

    Raises
    ------
    SearchExceeded
        More than ``budget`` search nodes were visited.
    """
    SA, SB = ca_a.shift, ca_b.shift
    if abs(entropy(SA) - entropy(SB)) > 1e-9:
        return None
    depth = 2 * max_window + 4
    nodes = 0
    same_shape = (ca_a.code.memory, ca_a.code.anticipation) == (ca_b.code.memory, ca_b.code.anticipation)

    if SA.size == SB.size:
        syms_a, syms_b = SA.symbols, SB.symbols
        assign, used = {}, set()

        def rec(i):
            nonlocal nodes
            nodes += 1
            if nodes > budget:
                raise SearchExceeded(f"search budget of {budget} nodes exceeded")
            if i == len(syms_a):
                code = symbol_code(SA, SB, assign, validate=False)
                return code if verify_conjugacy(ca_a, ca_b, code, depth) else None
            a = syms_a[i]
            for x in syms_b:
                if x in used:
                    continue
                assign[a] = x
                used.add(x)
                if _edge_iso_ok(assign, SA.edges, SB.edges, a, syms_a) and (
                        not same_shape or _rule_ok(assign, ca_a, ca_b)):
                    found = rec(i + 1)
                    if found is not None:
                        return found
                del assign[a]
                used.discard(x)
            return None

        found = rec(0)
        if found is not None:
            return found

    if max_window < 2:
        return None
    edges = SA.sorted_edges
    assign = {}

    def ok2(e):
        a, b = e
        x = assign[e]
        for c in SA.followers[b]:
            f = (b, c)
            if f in assign and (x, assign[f]) not in SB.edges:
                return False
        for p in SA.predecessors[a]:
            f = (p, a)
            if f in assign and (assign[f], x) not in SB.edges:
                return False
        return True

    def rec2(i):
        nonlocal nodes
        nodes += 1
        if nodes > budget:
            raise SearchExceeded(f"search budget of {budget} nodes exceeded")
        if i == len(edges):
            code = BlockCode(SA, SB, 1, 0, dict(assign))
            return code if verify_conjugacy(ca_a, ca_b, code, depth) else None
        for x in SB.symbols:
            assign[edges[i]] = x
            if ok2(edges[i]):
                found = rec2(i + 1)
                if found is not None:
                    return found
            del assign[edges[i]]
        return None

    return rec2(0)
