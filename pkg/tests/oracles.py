"""Independent reference implementations used only by the tests."""
import numpy as np

from algca.algebra import CayleyTable, sc_closure
from algca.errors import EmptyShift
from algca.tmc import build_shift


def random_walks(shift, length, count, rng):
    """Uniform random walks on the edge graph, as index arrays."""
    A = shift.adjacency
    out = np.empty((count, length), dtype=np.int64)
    out[:, 0] = rng.integers(0, shift.size, count)
    for j in range(1, length):
        for r in range(count):
            f = np.flatnonzero(A[out[r, j - 1]])
            out[r, j] = f[rng.integers(0, len(f))]
    return out


def sampled_sc(shift, table, rng, samples=1000, length=12):
    """Componentwise image of sampled pairs of allowed words stays allowed."""
    to_t = np.array([table.alphabet.index(s) for s in shift.symbols])
    x = to_t[random_walks(shift, length, samples, rng)]
    y = to_t[random_walks(shift, length, samples, rng)]
    img = table.idx[x, y]
    for row in img:
        word = tuple(table.symbols[i] for i in row)
        if any(s not in shift.alphabet for s in word) or not shift.is_allowed(word):
            return False
    return True


def random_instance(rng):
    """A random (shift, table) pair; about half are closed under the table."""
    while True:
        n = int(rng.integers(2, 5))
        syms = list(range(n))
        table = CayleyTable.from_rows(syms, rng.integers(0, n, (n, n)).tolist())
        edges = [(a, b) for a in syms for b in syms if rng.random() < 0.6]
        if not edges:
            continue
        try:
            if rng.random() < 0.5:
                edges = sc_closure(table, edges)
            shift = build_shift(syms, edges)
        except EmptyShift:
            continue
        if shift.size < n:
            continue
        return shift, table


def _growth_strings(n):
    """Symbol maps on ``0..n-1`` up to relabelling of the image (first occurrence order)."""
    out = [()]
    for _ in range(n):
        out = [t + (v,) for t in out for v in range(max(t, default=-1) + 2)]
    return out


def cylinder_codes(max_n=4):
    """Every 1-block code on an irreducible shift over at most ``max_n`` symbols
    that is constant on predecessor sets and has a memory-1 inverse.

    Brute force: the inverse must exist as a 2-block map on target edges and
    send every target 3-word to a source edge.
    """
    from algca.ca import symbol_code
    from algca.tmc import is_irreducible, word_array

    out = []
    for n in range(2, max_n + 1):
        syms = list(range(n))
        pairs = [(a, b) for a in syms for b in syms]
        maps = _growth_strings(n)
        for mask in range(1, 1 << len(pairs)):
            E = [p for i, p in enumerate(pairs) if mask >> i & 1]
            if len({a for a, _ in E}) < n or len({b for _, b in E}) < n:
                continue
            preds = [[a for a, b in E if b == c] for c in syms]
            X = None
            for th in maps:
                if any(len({th[a] for a in p}) != 1 for p in preds):
                    continue
                inv = {}
                if any(inv.setdefault((th[a], th[b]), b) != b for a, b in E):
                    continue
                if X is None:
                    X = build_shift(syms, E)
                    if not is_irreducible(X):
                        break
                Y = build_shift(sorted(set(th)), {(th[a], th[b]) for a, b in E})
                if all((inv[(p, q)], inv[(q, r)]) in X.edges
                       for p, q, r in (Y.decode(w) for w in word_array(Y, 3))):
                    out.append(symbol_code(X, Y, dict(zip(syms, th)), validate=False))
    return out
