import json

import numpy as np
import pytest

from algca.algebra import cyclic_group, group_table
from algca.ca import build_ca, shift_map, symbol_code
from algca.cesaro import (
    CONVERGED,
    NOT_APPLICABLE,
    NOT_CONVERGED,
    TRENDING,
    AffineEngine,
    CesaroReport,
    affine_applicable,
    all_words,
    cesaro_exact,
    cesaro_monte_carlo,
    compare_to_parry,
    enumeration_values,
)
from algca.errors import IncompleteCover
from algca.measure import bernoulli, finite_memory_measure, parry_measure, pushforward_measure, random_measure
from algca.tmc import build_shift, full_shift


def oracle(n, p=0.3):
    """Closed form for Bernoulli(p) under x0 + x1 on [1]: the iterate sums 2^s(n) independent bits."""
    s = bin(n).count("1")
    return (1 - (1 - 2 * p) ** (2**s)) / 2


@pytest.fixture(scope="module")
def bern03(full2):
    return bernoulli(full2, {0: 0.7, 1: 0.3})


@pytest.fixture(scope="module")
def exact64(bern03, xor_ca):
    return cesaro_exact(bern03, xor_ca, [(1,)], 64)


def test_oracle_spot_values():
    assert oracle(1) == pytest.approx(0.42)
    assert oracle(3) == pytest.approx(0.4872)


def test_exact_matches_oracle(exact64):
    assert exact64.engines == ["affine"] * 64
    for n, v in enumerate(exact64.values[(1,)]):
        assert v == pytest.approx(oracle(n), abs=1e-12)


def test_exact_deviation(exact64, full2):
    assert exact64.final_deviation <= 0.02
    assert exact64.final_deviation == pytest.approx(abs(np.mean([oracle(n) for n in range(64)]) - 0.5))
    v = compare_to_parry(cesaro_exact(bernoulli(full2, {0: 0.7, 1: 0.3}), build_ca(full2, cyclic_group(2)),
                                      all_words(full2, 1), 64), full2, 0.02)
    assert v.verdict == CONVERGED


def test_engines_agree(bern03, xor_ca):
    words = all_words(xor_ca.shift, 2)
    a = cesaro_exact(bern03, xor_ca, words, 12, engine="affine")
    e = cesaro_exact(bern03, xor_ca, words, 12, engine="enumeration")
    assert e.engines == ["enumeration"] * 12
    for w in words:
        assert np.allclose(a.values[w], e.values[w], atol=1e-14)


def test_affine_on_random_depth_two(latin12):
    shift = full_shift(latin12.symbols)
    ca = build_ca(shift, latin12)
    m = random_measure(shift, 2, np.random.default_rng(0))
    eng = AffineEngine(ca, m)
    words = all_words(shift, 1)
    for n in range(3):
        ref = enumeration_values(m, ca, words, n)
        for w in words[:4]:
            assert eng.probability([latin12.alphabet.index(w[0])], n) == pytest.approx(ref[w], abs=1e-14)


def test_affine_applicability(ca8, xor_ca, latin12):
    assert affine_applicable(xor_ca)
    assert affine_applicable(build_ca(full_shift(latin12.symbols), latin12))
    assert not affine_applicable(ca8)
    assert not affine_applicable(shift_map(full_shift([0, 1])))


def test_uniform_is_fixed(full2, xor_ca):
    uni = bernoulli(full2, {0: 0.5, 1: 0.5})
    r = cesaro_exact(uni, xor_ca, all_words(full2, 1), 20)
    assert all(v == pytest.approx(0.5, abs=1e-15) for v in r.values[(0,)])
    verdict = compare_to_parry(r, full2, 0.02)
    assert verdict.verdict == CONVERGED and verdict.final_deviation == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("group", [cyclic_group(3), group_table([(0, 0), (0, 1), (1, 0), (1, 1)],
                                                                  lambda x, y: ((x[0] + y[0]) % 2, (x[1] + y[1]) % 2))])
def test_bipermutative_uniform_exact(group):
    shift = full_shift(group.symbols)
    ca = build_ca(shift, group)
    uni = bernoulli(shift, {a: 1 / shift.size for a in shift.symbols})
    words = all_words(shift, 2)
    for engine in ("affine", "enumeration"):
        r = cesaro_exact(uni, ca, words, 4, engine=engine)
        for w in words:
            assert max(abs(v - shift.size**-2) for v in r.values[w]) <= 1e-15


def test_point_mass(full2, xor_ca):
    point = finite_memory_measure(full2, 1, {(0,): {0: 1.0}, (1,): {0: 1.0}}, {(0,): 1.0, (1,): 0.0},
                                  require_complete=False)
    r = cesaro_exact(point, xor_ca, all_words(full2, 1), 16)
    assert r.values[(0,)] == [1.0] * 16
    assert compare_to_parry(r, full2, 0.02).verdict == NOT_CONVERGED


def test_monte_carlo_agrees_with_exact(bern03, xor_ca, exact64):
    mc = cesaro_monte_carlo(bern03, xor_ca, [(1,)], 64, samples=10**5, seed=7)
    for n in range(64):
        assert abs(mc.values[(1,)][n] - exact64.values[(1,)][n]) <= mc.half_widths[(1,)][n]


def test_monte_carlo_reproducible(bern03, xor_ca):
    a = cesaro_monte_carlo(bern03, xor_ca, [(1,)], 10, samples=5000, seed=1)
    b = cesaro_monte_carlo(bern03, xor_ca, [(1,)], 10, samples=5000, seed=1)
    assert a.to_json() == b.to_json()


def test_monte_carlo_seeds(bern03, xor_ca):
    a = cesaro_monte_carlo(bern03, xor_ca, [(1,)], 10, samples=10**4, seed=1)
    b = cesaro_monte_carlo(bern03, xor_ca, [(1,)], 10, samples=10**4, seed=2)
    assert a.values != b.values
    for n in range(10):
        va, vb = a.values[(1,)][n], b.values[(1,)][n]
        ha, hb = a.half_widths[(1,)][n], b.half_widths[(1,)][n]
        assert va - ha <= vb + hb and vb - hb <= va + ha


def test_half_width_formula(bern03, xor_ca):
    r = cesaro_monte_carlo(bern03, xor_ca, [(1,)], 2, samples=1000, seed=4)
    p = r.values[(1,)][1]
    std = np.std(np.r_[np.ones(round(p * 1000)), np.zeros(1000 - round(p * 1000))], ddof=1)
    assert r.half_widths[(1,)][1] == pytest.approx(3 * std / np.sqrt(1000))


def test_sigma_keeps_parry(golden):
    p = parry_measure(golden)
    sigma = shift_map(golden)
    words = all_words(golden, 2)
    r = cesaro_exact(p, sigma, words, 8)
    for w in words:
        assert max(abs(v - r.parry_values[w]) for v in r.values[w]) <= 1e-12
    mc = cesaro_monte_carlo(p, sigma, words, 8, samples=20000, seed=3)
    for w in words:
        assert all(abs(v - r.parry_values[w]) <= h + 1e-12 for v, h in zip(mc.values[w], mc.half_widths[w]))


def test_convex_hull(exact64, bern03, ca8):
    assert exact64.in_convex_hull()
    m = random_measure(ca8.shift, 1, np.random.default_rng(1))
    r = cesaro_exact(m, ca8, all_words(ca8.shift, 1), 5)
    assert r.in_convex_hull()
    for w in r.words:
        assert r.cesaro[w][-1] == pytest.approx(np.mean(r.values[w]))
        assert all(0 <= v <= 1 for v in r.values[w])


def test_hybrid_switch(bern03, xor_ca):
    r = cesaro_exact(bern03, xor_ca, [(1,)], 20, engine="enumeration", cap=2**14, samples=20000, seed=5)
    assert r.mode == "hybrid"
    assert r.first_infeasible == 14
    assert r.engines[:14] == ["enumeration"] * 14 and r.engines[14:] == ["monte_carlo"] * 6
    assert r.half_widths[(1,)][13] is None and r.half_widths[(1,)][14] > 0
    s = cesaro_exact(bern03, xor_ca, [(1,)], 20, engine="enumeration", cap=2**14, strict_exact=True)
    assert s.truncated and s.steps == 14 and s.first_infeasible == 14


def test_compare_requires_cover(exact64, full2):
    with pytest.raises(IncompleteCover):
        compare_to_parry(exact64, full2, 0.02)


def test_compare_not_applicable():
    shift = build_shift([0, 1], [(0, 0), (0, 1), (1, 1)])
    r = CesaroReport([(0,), (1,)], 1, "exact", ["affine"], {(0,): [0.5], (1,): [0.5]},
                     {(0,): [0.5], (1,): [0.5]})
    assert compare_to_parry(r, shift, 0.1).verdict == NOT_APPLICABLE


def test_compare_trending(full2):
    # the running mean falls from 1 toward 1/2 but is still 1/14 away at the end
    vals = [1.0] * 4 + [0.0] * 3
    r = CesaroReport([(0,), (1,)], 7, "exact", ["x"] * 7,
                     {(0,): vals, (1,): [1 - v for v in vals]},
                     {(0,): list(np.cumsum(vals) / np.arange(1, 8)),
                      (1,): list(np.cumsum([1 - v for v in vals]) / np.arange(1, 8))})
    assert compare_to_parry(r, full2, 0.01).verdict == TRENDING
    assert compare_to_parry(r, full2, 0.1).verdict == CONVERGED


def test_report_serialisation(exact64):
    d = json.loads(exact64.to_json())
    assert d["N"] == 64 and len(d["values"]["1"]) == 64
    lines = exact64.to_csv().splitlines()
    assert lines[0] == "word,n,value,cesaro,half_width"
    assert len(lines) == 65


def test_klein_factor_pipeline(ca8, cert8):
    probs = dict(zip(ca8.shift.symbols, (0.2, 0.1, 0.15, 0.05, 0.1, 0.1, 0.2, 0.1)))
    mu = bernoulli(ca8.shift, probs)
    project = symbol_code(ca8.shift, cert8.K_shift, cert8.structure.class_of)
    nu = pushforward_measure(mu, project, 0)
    K = cert8.K_shift
    r = cesaro_exact(nu, cert8.class_ca, all_words(K, 1), 64)
    assert compare_to_parry(r, K, 0.03).verdict == CONVERGED
    # the factor series is the class marginal of the series on the full alphabet
    for n in range(4):
        full = enumeration_values(mu, ca8, all_words(ca8.shift, 1), n)
        for k in K.symbols:
            marg = sum(p for w, p in full.items() if cert8.structure.class_of[w[0]] == k)
            assert marg == pytest.approx(r.values[(k,)][n], abs=1e-14)
