"""Cesaro means of ``mu o Phi^-n`` on cylinders.

Three engines produce the per-step values ``mu(Phi^-n [w])``:

``affine``
    Exact, for automata whose table is a medial quasigroup. With
    ``a * b = eta(a) + rho(b) + c`` the iterate is
    ``(Phi^n x)_j = sum_k C(n,k) eta^(n-k) rho^k (x_(j+k)) + c_n``, so the
    cylinder probability is a sum over paths of the measure that a small
    dynamic program evaluates exactly. Cost grows like ``n^2``, not ``|G|^n``.
``enumeration``
    Exact, for any automaton: sums the measure over all source words of
    length ``n*r + |w|`` whose image is ``w``. Bounded by the enumeration cap.
``monte_carlo``
    Sampled paths iterated on finite words; z = 3 half-widths.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .algebra import toyoda_decompose
from .ca import CellularAutomaton
from .errors import IncompleteCover, StructureViolation
from .measure import FiniteMemoryMeasure, cylinder_prob, parry_measure, sample_paths_blocked, word_probs
from .tmc import MarkovShift, count_words, enumeration_cap, is_irreducible, iter_word_arrays, word_array

Z_SCORE = 3.0
CONVERGED = "CONVERGED"
TRENDING = "TRENDING"
NOT_CONVERGED = "NOT_CONVERGED"
NOT_APPLICABLE = "NOT_APPLICABLE"


@dataclass
class CesaroReport:
    words: list
    N: int
    mode: str
    engines: list
    values: dict
    cesaro: dict
    half_widths: dict | None = None
    samples: int | None = None
    seed: int | None = None
    parry_values: dict | None = None
    final_deviation: float | None = None
    truncated: bool = False
    first_infeasible: int | None = None

    @property
    def steps(self) -> int:
        return len(self.engines)

    def deviation_history(self) -> list:
        """``max_w |Cesaro_n(w) - Parry(w)|`` after each step."""
        if self.parry_values is None:
            return []
        return [max(abs(self.cesaro[w][n] - self.parry_values[w]) for w in self.words)
                for n in range(self.steps)]

    def in_convex_hull(self) -> bool:
        """Each running mean lies between the min and max of the values so far."""
        for w in self.words:
            v, c = np.asarray(self.values[w]), np.asarray(self.cesaro[w])
            lo, hi = np.minimum.accumulate(v), np.maximum.accumulate(v)
            if ((c < lo - 1e-15) | (c > hi + 1e-15)).any():
                return False
        return True

    def to_dict(self) -> dict:
        def key(w):
            return " ".join(str(s) for s in w)
        return {
            "words": [list(w) for w in self.words],
            "N": self.N,
            "steps": self.steps,
            "mode": self.mode,
            "engines": list(self.engines),
            "values": {key(w): self.values[w] for w in self.words},
            "cesaro": {key(w): self.cesaro[w] for w in self.words},
            "half_widths": None if self.half_widths is None
            else {key(w): self.half_widths[w] for w in self.words},
            "samples": self.samples,
            "seed": self.seed,
            "parry_values": None if self.parry_values is None
            else {key(w): self.parry_values[w] for w in self.words},
            "final_deviation": self.final_deviation,
            "truncated": self.truncated,
            "first_infeasible": self.first_infeasible,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["word", "n", "value", "cesaro", "half_width"])
        for w in self.words:
            hw = self.half_widths[w] if self.half_widths else None
            for n in range(self.steps):
                h = "" if hw is None or hw[n] is None else repr(hw[n])
                writer.writerow([" ".join(map(str, w)), n, repr(self.values[w][n]),
                                 repr(self.cesaro[w][n]), h])
        return buf.getvalue()


def _normalise_words(words) -> list:
    if isinstance(words, (str, bytes)):
        return [tuple(words)]
    words = list(words)
    if words and not isinstance(words[0], (tuple, list, str)):
        return [tuple(words)]
    return [tuple(w) for w in words]


def _running_mean(values: list) -> list:
    return (np.cumsum(values) / np.arange(1, len(values) + 1)).tolist()


def _parry_values(shift: MarkovShift, words: list):
    if not is_irreducible(shift):
        return None
    p = parry_measure(shift)
    return {w: cylinder_prob(p, w) if shift.is_allowed(w) else 0.0 for w in words}


def _finish(words, N, mode, engines, values, half_widths, samples, seed, shift,
            truncated=False, first_infeasible=None) -> CesaroReport:
    cesaro = {w: _running_mean(values[w]) for w in words}
    report = CesaroReport(words, N, mode, engines, values, cesaro, half_widths, samples, seed,
                          _parry_values(shift, words), None, truncated, first_infeasible)
    hist = report.deviation_history()
    report.final_deviation = hist[-1] if hist else None
    return report


# --- affine engine ---------------------------------------------------------


class AffineEngine:
    """Exact ``mu(Phi^-n [w])`` for ``Phi`` with a medial-quasigroup rule ``eta(a) + rho(b) + c``."""

    def __init__(self, ca: CellularAutomaton, measure: FiniteMemoryMeasure):
        if ca.table is None or ca.code.memory != 0 or ca.radius != 1:
            raise StructureViolation("affine engine needs a radius-1 table rule")
        dec = toyoda_decompose(ca.table)
        if dec is None:
            raise StructureViolation("table is not a medial quasigroup")
        table = ca.table
        idx = table.alphabet.index
        g = table.size
        self.g = g
        self.add = dec.group_table.idx
        self.zero = idx(dec.zero)
        self.eta = np.array([idx(dec.eta[s]) for s in table.symbols])
        self.rho = np.array([idx(dec.rho[s]) for s in table.symbols])
        self.c = idx(dec.constant_c)
        self.neg = np.argmax(self.add == self.zero, axis=1)
        # sub[s, t] = s - t
        self.sub = self.add[:, self.neg]
        # multiples[m, x] = m * x
        mult = [np.full(g, self.zero)]
        while True:
            nxt = self.add[mult[-1], np.arange(g)]
            if np.array_equal(nxt, mult[0]):
                break
            mult.append(nxt)
        self.mult = np.array(mult)
        self.exponent = len(mult)
        self.measure = measure
        self.to_table = np.array([idx(s) for s in measure.shift.symbols])
        self.past_syms = [np.array([self.to_table[measure.shift.index(s)] for s in w])
                          for w in measure.pasts]

    def _power(self, f, k):
        out = np.arange(self.g)
        for _ in range(k):
            out = f[out]
        return out

    def coefficients(self, n: int) -> list:
        """``t_k`` as symbol -> group element maps, ``k = 0..n``."""
        out = []
        for k in range(n + 1):
            f = self._power(self.eta, n - k)[self._power(self.rho, k)]
            m = math.comb(n, k) % self.exponent
            out.append(self.mult[m][f])
        return out

    def constant(self, n: int) -> int:
        s, term = self.zero, self.c
        for _ in range(n):
            s = self.add[s, term]
            term = self.add[self.eta[term], self.rho[term]]
        return s

    def probability(self, word_idx, n: int) -> float:
        """``mu(Phi^-n [w])`` for ``w`` given as table indices."""
        mu = self.measure
        k = len(word_idx)
        L = n + k
        d = mu.depth
        coef = self.coefficients(n)
        cn = self.constant(n)
        targets = [self.sub[w, cn] for w in word_idx]
        P, g = len(mu.pasts), self.g
        X = mu.initial.copy().reshape(P)
        open_outputs = []  # output index j per trailing axis
        for i in range(L):
            if i < k:
                Y = np.zeros(X.shape + (g,))
                Y[..., self.zero] = X
                X = Y
                open_outputs.append(i)
            if i < d:
                Z = np.empty_like(X)
                for p in range(P):
                    Z[p] = self._add_terms(X[p], open_outputs, coef, i, self.past_syms[p][i], 0)
                X = Z
            else:
                Z = np.zeros_like(X)
                for a_src in range(mu.shift.size):
                    a = self.to_table[a_src]
                    w = mu.kernel[:, a_src]
                    if not w.any():
                        continue
                    Y = X * w.reshape((P,) + (1,) * (X.ndim - 1))
                    Y = self._add_terms(Y, open_outputs, coef, i, a, 1)
                    nxt = mu.next_past[:, a_src] if d else np.zeros(P, dtype=np.int64)
                    ok = (w > 0) & (nxt >= 0)
                    np.add.at(Z, nxt[ok], Y[ok])
                X = Z
            j = i - n
            if 0 <= j < k:
                assert open_outputs[0] == j
                X = np.take(X, targets[j], axis=1)
                open_outputs.pop(0)
        return float(X.sum())

    def _add_terms(self, X, open_outputs, coef, i, a, offset):
        for ax, j in enumerate(open_outputs):
            t = coef[i - j][a]
            X = np.take(X, self.sub[:, t], axis=ax + offset)
        return X


def affine_applicable(ca: CellularAutomaton) -> bool:
    return (ca.table is not None and ca.code.memory == 0 and ca.radius == 1
            and toyoda_decompose(ca.table) is not None)


# --- enumeration engine ----------------------------------------------------


def _to_ca_index(measure: FiniteMemoryMeasure, ca: CellularAutomaton) -> np.ndarray:
    src = ca.shift
    for a, b in measure.shift.edges:
        if (a, b) not in src.edges:
            raise StructureViolation("measure lives outside the automaton's shift")
    return np.array([src.index(s) for s in measure.shift.symbols], dtype=np.int64)


def enumeration_values(measure: FiniteMemoryMeasure, ca: CellularAutomaton, words: list, n: int,
                       cap: int | None = None) -> dict:
    """Exact ``mu(Phi^-n [w])`` for words of one length, by summing over preimage words."""
    k = len(words[0])
    r = ca.code.window - 1
    L = n * r + k
    to_ca = _to_ca_index(measure, ca)
    targets = np.array([ca.shift.encode(w) for w in words])
    out = np.zeros(len(words))
    for block in iter_word_arrays(measure.shift, L, cap=enumeration_cap() if cap is None else cap):
        probs = word_probs(measure, block)
        img = to_ca[block]
        for _ in range(n):
            img = ca.code.apply_idx(img)
        hit = (img[None, :, :] == targets[:, None, :]).all(axis=2)
        out += hit.astype(float) @ probs
    return dict(zip(words, out.tolist()))


def _enumeration_feasible(measure, ca, k, n, cap):
    r = ca.code.window - 1
    return count_words(measure.shift, n * r + k) <= (enumeration_cap() if cap is None else cap)


# --- monte carlo -------------------------------------------------------------


def _mc_series(measure, ca, words, steps, samples, seed):
    """Per-step estimates and z*std/sqrt(S) half-widths for steps ``0..len(steps)-1`` indices."""
    kmax = max(len(w) for w in words)
    r = ca.code.window - 1
    nmax = max(steps)
    length = (nmax + 1) * r + kmax
    paths = sample_paths_blocked(measure, length, samples, seed)
    cur = _to_ca_index(measure, ca)[paths]
    targets = {w: ca.shift.encode(w) for w in words}
    hits = {w: {} for w in words}
    wanted = set(steps)
    for n in range(nmax + 1):
        if n in wanted:
            for w in words:
                hits[w][n] = int((cur[:, :len(w)] == targets[w][None, :]).all(axis=1).sum())
        if n < nmax:
            cur = ca.code.apply_idx(cur)
    est, hw = {w: {} for w in words}, {w: {} for w in words}
    for w in words:
        for n in steps:
            p = hits[w][n] / samples
            std = math.sqrt(samples / (samples - 1) * p * (1 - p))
            est[w][n] = p
            hw[w][n] = Z_SCORE * std / math.sqrt(samples)
    return est, hw


def cesaro_monte_carlo(measure: FiniteMemoryMeasure, ca: CellularAutomaton, words, N: int,
                       samples: int = 10**5, seed: int = 0) -> CesaroReport:
    """Monte Carlo estimates of ``mu(Phi^-n [w])`` for ``n < N`` from one set of sample paths.

    Paths have length ``N*r + max|w|``; the automaton is applied to the
    whole batch and the word is read at the left end after each step.
    Deterministic given ``seed``.
    """
    if samples < 2:
        raise ValueError("samples must be >= 2")
    words = _normalise_words(words)
    steps = list(range(N))
    est, hw = _mc_series(measure, ca, words, steps, samples, seed)
    values = {w: [est[w][n] for n in steps] for w in words}
    half = {w: [hw[w][n] for n in steps] for w in words}
    return _finish(words, N, "monte_carlo", ["monte_carlo"] * N, values, half, samples, seed, ca.shift)


# --- exact / hybrid ----------------------------------------------------------


def cesaro_exact(measure: FiniteMemoryMeasure, ca: CellularAutomaton, words, N: int,
                 engine: str = "auto", strict_exact: bool = False, cap: int | None = None,
                 samples: int = 10**5, seed: int = 0) -> CesaroReport:
    """Exact ``mu(Phi^-n [w])`` for ``n < N`` and their running Cesaro means.

    ``engine="auto"`` uses the affine engine when the rule is a medial
    quasigroup and enumeration otherwise. When enumeration passes the cap
    at step ``n``, the remaining steps are estimated by Monte Carlo
    (``mode="hybrid"``) unless ``strict_exact`` is set, in which case the
    report stops at ``n`` with ``truncated=True`` and ``first_infeasible=n``.
    """
    words = _normalise_words(words)
    if engine not in ("auto", "affine", "enumeration"):
        raise ValueError("engine must be auto, affine or enumeration")
    use_affine = engine == "affine" or (engine == "auto" and affine_applicable(ca))
    values = {w: [] for w in words}
    engines = []
    if use_affine:
        eng = AffineEngine(ca, measure)
        idx = {w: [ca.table.alphabet.index(s) for s in w] for w in words}
        for w in words:
            if not ca.shift.is_allowed(w):
                values[w] = [0.0] * N
            else:
                values[w] = [eng.probability(idx[w], n) for n in range(N)]
        return _finish(words, N, "exact", ["affine"] * N, values, None, None, None, ca.shift)

    by_len = {}
    for w in words:
        by_len.setdefault(len(w), []).append(w)
    first_bad = None
    for n in range(N):
        if not all(_enumeration_feasible(measure, ca, k, n, cap) for k in by_len):
            first_bad = n
            break
        for group in by_len.values():
            for w, v in enumeration_values(measure, ca, group, n, cap).items():
                values[w].append(v)
        engines.append("enumeration")
    if first_bad is None:
        return _finish(words, N, "exact", engines, values, None, None, None, ca.shift)
    if strict_exact or first_bad == 0:
        return _finish(words, N, "exact", engines, values, None, None, None, ca.shift,
                       truncated=True, first_infeasible=first_bad)
    rest = list(range(first_bad, N))
    est, hw = _mc_series(measure, ca, words, rest, samples, seed)
    half = {w: [None] * first_bad + [hw[w][n] for n in rest] for w in words}
    for w in words:
        values[w].extend(est[w][n] for n in rest)
    engines.extend(["monte_carlo"] * len(rest))
    return _finish(words, N, "hybrid", engines, values, half, samples, seed, ca.shift,
                   first_infeasible=first_bad)


def all_words(shift: MarkovShift, k: int) -> list:
    return [shift.decode(r) for r in word_array(shift, k)]


# --- verdicts ----------------------------------------------------------------


@dataclass(frozen=True)
class ParryVerdict:
    verdict: str
    final_deviation: float | None
    tol: float
    k: int | None
    history: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "final_deviation": self.final_deviation,
                "tol": self.tol, "k": self.k}


def compare_to_parry(report: CesaroReport, shift: MarkovShift, tol: float) -> ParryVerdict:
    """Three-valued finite-N evidence of convergence to the Parry measure.

    CONVERGED when the final deviation is at most ``tol``; TRENDING when it
    exceeds ``tol`` but never increased over the second half of the run and
    ended lower than it started there; NOT_CONVERGED otherwise; NOT_APPLICABLE
    on a reducible shift.

    Raises
    ------
    IncompleteCover
        The report's words are not all of one length ``k`` or miss an
        allowed ``k``-word.
    """
    lengths = {len(w) for w in report.words}
    if len(lengths) != 1:
        raise IncompleteCover("report words have mixed lengths")
    k = lengths.pop()
    if not is_irreducible(shift):
        return ParryVerdict(NOT_APPLICABLE, None, tol, k)
    missing = [w for w in all_words(shift, k) if w not in set(report.words)]
    if missing:
        raise IncompleteCover(f"allowed {k}-word {missing[0]!r} is not covered", witness=missing[0])
    p = parry_measure(shift)
    parry = {w: cylinder_prob(p, w) for w in report.words if shift.is_allowed(w)}
    hist = [max(abs(report.cesaro[w][n] - parry.get(w, 0.0)) for w in report.words)
            for n in range(report.steps)]
    final = hist[-1]
    if final <= tol:
        verdict = CONVERGED
    else:
        tail = hist[len(hist) // 2:]
        steady = all(b <= a for a, b in zip(tail, tail[1:])) and len(tail) > 1 and tail[-1] < tail[0]
        verdict = TRENDING if steady else NOT_CONVERGED
    return ParryVerdict(verdict, final, tol, k, hist)
