import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import random_instance, sampled_sc

from algca.algebra import CayleyTable, right_projection, sc_closure
from algca.ca import (
    block_code,
    build_ca,
    ca_from_code,
    check_n_scaling,
    check_sc,
    compose,
    identity_code,
    power_rule,
    preimage_cylinder,
    shift_map,
    symbol_code,
)
from algca.errors import DepthTooLarge, NotAllowed, NotClosed, StructureViolation
from algca.tmc import allowed_words, build_shift, count_words, full_shift, word_array


def test_group_ca_flags(xor_ca):
    assert xor_ca.bipermutative
    assert xor_ca.structurally_compatible


def test_table8_ca_flags(ca8):
    assert ca8.right_permutative
    assert not ca8.left_permutative
    assert ca8.structurally_compatible


def test_golden_xor_not_sc(golden, z2):
    res = check_sc(golden, z2)
    assert not res
    x, y, img = res.witness
    assert x in golden.edges and y in golden.edges
    assert img == (z2(x[0], y[0]), z2(x[1], y[1]))
    assert img not in golden.edges
    with pytest.raises(NotClosed):
        build_ca(golden, z2)
    lax = build_ca(golden, z2, strict=False)
    assert lax.structurally_compatible is False


def test_full_shift_always_sc(table8, latin12):
    for t in (table8, latin12):
        assert check_sc(full_shift(t.symbols), t)


def test_closure_is_sc(z2):
    edges = sc_closure(z2, [(0, 1)])
    assert check_sc(build_shift([0, 1], edges), z2)


def test_edge_scan_matches_sampled_check():
    rng = np.random.default_rng(2024)
    for _ in range(20):
        shift, table = random_instance(rng)
        assert bool(check_sc(shift, table)) == sampled_sc(shift, table, rng, samples=300)


def _right_cancellable_on_edges(shift, table):
    return all(len({table(a, b) for b in shift.followers[a]}) == len(shift.followers[a])
               for a in shift.symbols)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_right_permutative_iff_right_cancellable_on_edges(seed):
    shift, table = random_instance(np.random.default_rng(seed))
    ca = build_ca(shift, table, strict=False)
    assert ca.right_permutative == _right_cancellable_on_edges(shift, table)


def test_power_rule_xor_two(xor_ca):
    rule = power_rule(xor_ca, 2).rule
    for w in itertools.product([0, 1], repeat=3):
        assert rule[w] == (w[0] + w[2]) % 2


def test_power_rule_one_is_rule(ca8):
    assert power_rule(ca8, 1).rule == ca8.code.rule


def test_power_rule_latin12_spot(latin12):
    ca = build_ca(full_shift(latin12.symbols), latin12)
    a1 = latin12.symbols[0]
    a3 = latin12(a1, a1)
    assert power_rule(ca, 2).rule[(a1, a1, a1)] == latin12(a3, a3)


@pytest.mark.parametrize("a,b", [(1, 1), (1, 2), (2, 1), (2, 2)])
def test_power_rule_composition(a, b):
    t = CayleyTable.from_rows([0, 1, 2], [[0, 2, 1], [2, 1, 0], [1, 0, 2]])
    ca = build_ca(full_shift(t.symbols), t)
    lhs = power_rule(ca, a + b)
    rhs = compose(power_rule(ca, a), power_rule(ca, b))
    assert lhs.rule == rhs.rule


def test_power_rule_commutes_with_shift(ca8):
    code = power_rule(ca8, 2)
    sigma = shift_map(ca8.shift).code
    for w in allowed_words(ca8.shift, code.window + 1)[:4000]:
        assert code.apply(sigma.apply(w)) == sigma.apply(code.apply(w))


def test_n_scaling_xor(xor_ca):
    assert check_n_scaling(xor_ca, 2)
    assert check_n_scaling(xor_ca, 4)
    res = check_n_scaling(xor_ca, 3)
    assert not res
    w = res.witness
    assert power_rule(xor_ca, 3).rule[w] != (w[0] + w[3]) % 2


def test_n_scaling_powers(xor_ca):
    for N in (2, 4, 8):
        assert check_n_scaling(xor_ca, N)


def test_n_scaling_rejects_explicit_rule(full2):
    ca = ca_from_code(block_code(full2, full2, 0, 1, {(a, b): b for a in (0, 1) for b in (0, 1)}))
    with pytest.raises(StructureViolation):
        check_n_scaling(ca, 2)


def test_preimages_xor(xor_ca):
    assert preimage_cylinder(xor_ca.code, (1,)) == [(0, 1), (1, 0)]
    assert preimage_cylinder(xor_ca.code, (1, 1)) == [(0, 1, 0), (1, 0, 1)]


def test_preimage_not_allowed(golden):
    code = identity_code(golden)
    with pytest.raises(NotAllowed):
        preimage_cylinder(code, (1, 1))


def test_preimage_cap(xor_ca):
    with pytest.raises(DepthTooLarge) as exc:
        preimage_cylinder(xor_ca.code, (0,) * 12, cap=100)
    assert exc.value.first_infeasible == 13


def test_preimage_relabelling(full2):
    code = symbol_code(full2, full2, {0: 1, 1: 0})
    assert preimage_cylinder(code, (0, 0, 1)) == [(1, 1, 0)]


def corpus_codes(ca8, xor_ca, golden):
    g_sigma = shift_map(golden)
    return [
        xor_ca.code,
        power_rule(xor_ca, 2),
        ca8.code,
        g_sigma.code,
        identity_code(golden),
        symbol_code(full_shift([0, 1, 2]), full_shift([0, 1, 2]), {0: 1, 1: 2, 2: 0}),
    ]


def test_preimages_partition(ca8, xor_ca, golden):
    for code in corpus_codes(ca8, xor_ca, golden):
        for m in (1, 2, 3):
            if count_words(code.source, m + code.window - 1) > 10**5:
                continue
            total = sum(len(preimage_cylinder(code, w)) for w in allowed_words(code.target, m))
            assert total == count_words(code.source, m + code.window - 1)


def test_block_code_validation(full2, golden):
    with pytest.raises(StructureViolation):
        block_code(full2, full2, 0, 1, {(0, 0): 0})
    with pytest.raises(NotClosed):
        symbol_code(full2, golden, {0: 1, 1: 1})


def test_apply_idx_matches_apply(ca8):
    words = word_array(ca8.shift, 4)[:500]
    out = ca8.code.apply_idx(words)
    for w, o in zip(words, out):
        assert ca8.shift.decode(o) == ca8.apply(ca8.shift.decode(w))


def test_shift_map(golden):
    sigma = shift_map(golden)
    assert sigma.apply((0, 1, 0, 0)) == (1, 0, 0)


def test_ca_from_code_permutativity(full2):
    code = block_code(full2, full2, 0, 1, {(a, b): (a + b) % 2 for a in (0, 1) for b in (0, 1)})
    assert ca_from_code(code).bipermutative
    proj = build_ca(full2, right_projection([0, 1]))
    assert proj.right_permutative and not proj.left_permutative
