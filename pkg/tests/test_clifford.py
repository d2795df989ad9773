import itertools
import random

from fractions import Fraction

import pytest

from cuspedge.clifford import (
    QI,
    I_QI,
    CliffordElement,
    ExteriorElement,
    berezin,
    chirality,
    cl_mul,
    graded_tensor,
    mul_basis_clifford,
    partial_symbol,
    partial_symbol_right,
    split_trace,
    supertrace_even,
    symbol_inverse,
    symbol_map,
    trace_odd,
    volume_element,
)

C = CliffordElement


# --- independent oracle: multiply monomials by moving one index at a time ---

def oracle_mul_basis(I, J):
    """Move each element of J left into sorted position, one swap at a time."""
    sign = 1
    cur = list(I)
    for x in J:
        pos = len(cur)
        # walk left past strictly larger entries, each step a transposition
        while pos > 0 and cur[pos - 1] > x:
            pos -= 1
            sign = -sign
        if pos > 0 and cur[pos - 1] == x:
            # e_x e_x = -1: delete the pair; the walk already counted swaps
            del cur[pos - 1]
            sign = -sign
        else:
            cur.insert(pos, x)
    return sign, tuple(cur)


def random_element(rng, n, terms=4):
    data = {}
    for _ in range(terms):
        size = rng.randrange(0, n + 1)
        idx = tuple(sorted(rng.sample(range(1, n + 1), size)))
        data[idx] = QI(Fraction(rng.randrange(-5, 6), rng.randrange(1, 4)),
                       Fraction(rng.randrange(-5, 6), rng.randrange(1, 4)))
    return C(n, data)


def test_generator_square_is_minus_one():
    e1 = C.generator(3, 1)
    assert cl_mul(e1, e1) == C.scalar(3, -1)


def test_generators_anticommute():
    e1, e2 = C.generator(3, 1), C.generator(3, 2)
    assert cl_mul(e1, e2) == C.basis(3, (1, 2))
    assert cl_mul(e2, e1) == -C.basis(3, (1, 2))


def test_e12_squares_to_minus_one():
    a = C.basis(2, (1, 2))
    sgn, idx = oracle_mul_basis((1, 2), (1, 2))
    assert (sgn, idx) == (-1, ())
    assert cl_mul(a, a) == C.scalar(2, -1)


def test_mul_basis_against_oracle_exhaustive():
    n = 5
    subsets = list(itertools.chain.from_iterable(
        itertools.combinations(range(1, n + 1), r) for r in range(n + 1)))
    for I in subsets:
        for J in subsets:
            assert mul_basis_clifford(I, J) == oracle_mul_basis(I, J)


def test_associativity_random_triples():
    rng = random.Random(7)
    for _ in range(500):
        n = rng.randrange(1, 6)
        a, b, c = (random_element(rng, n, 3) for _ in range(3))
        assert cl_mul(cl_mul(a, b), c) == cl_mul(a, cl_mul(b, c))


def test_dimension_mismatch_rejected():
    with pytest.raises(ValueError):
        cl_mul(C.generator(2, 1), C.generator(3, 1))


def test_volume_element():
    assert volume_element(2) == C.basis(2, (1, 2))
    assert volume_element(1) == C.generator(1, 1)
    g4 = volume_element(4)
    ig4 = g4 * (I_QI ** 2)
    assert cl_mul(ig4, ig4) == C.scalar(4, 1)
    assert cl_mul(chirality(4), chirality(4)) == C.scalar(4, 1)


def test_symbol_map_and_inverse():
    a = C.basis(2, (1, 2))
    assert symbol_map(a) == ExteriorElement.basis(2, (1, 2))
    s = C.scalar(3, QI(3, 1))
    assert symbol_map(s) == ExteriorElement.scalar(3, QI(3, 1))
    rng = random.Random(11)
    for _ in range(100):
        n = rng.randrange(1, 7)
        a = random_element(rng, n)
        assert symbol_inverse(symbol_map(a)) == a


def test_berezin():
    w = ExteriorElement.basis(2, (1, 2))
    assert berezin(w) == QI(1)
    assert berezin(ExteriorElement.basis(3, (1, 2))) == QI(0)
    w = ExteriorElement(2, {(1, 2): QI(2, -1), (1,): QI(7)})
    assert berezin(w) == QI(2, -1)


def test_supertrace_gamma():
    assert supertrace_even(volume_element(2)) == QI(0, -2)
    assert supertrace_even(volume_element(4)) == QI(-4)
    for k in range(1, 6):
        assert supertrace_even(volume_element(2 * k)) == QI(0, -2) ** k


def test_supertrace_vanishes_off_top_exhaustive():
    for n in (2, 4, 6, 8):
        top = tuple(range(1, n + 1))
        for r in range(n + 1):
            for idx in itertools.combinations(range(1, n + 1), r):
                val = supertrace_even(C.basis(n, idx))
                if idx == top:
                    assert val == QI(0, -2) ** (n // 2)
                else:
                    assert val == QI(0)


def test_supertrace_odd_dim_rejected():
    with pytest.raises(ValueError):
        supertrace_even(C.generator(3, 1))


def test_trace_odd_values():
    assert trace_odd(volume_element(3)) == QI(2)
    assert trace_odd(C.generator(3, 1)) == QI(0)
    assert trace_odd(volume_element(1)) == QI(0, 1)
    assert trace_odd(volume_element(1), module="S-") == QI(0, -1)
    with pytest.raises(ValueError):
        trace_odd(C.generator(2, 1))


def test_supertrace_vanishes_on_supercommutators():
    rng = random.Random(3)
    for _ in range(500):
        n = 2 * rng.randrange(1, 5)
        da = rng.randrange(0, n + 1)
        db = rng.randrange(0, n + 1)
        a = C(n, {idx: QI(rng.randrange(-4, 5))
                  for idx in itertools.combinations(range(1, n + 1), da)})
        b = C(n, {idx: QI(rng.randrange(-4, 5))
                  for idx in itertools.combinations(range(1, n + 1), db)})
        sign = (-1) ** (da * db)
        sc = cl_mul(a, b) - sign * cl_mul(b, a)
        assert supertrace_even(sc) == QI(0)


def test_partial_symbol_example():
    # e1 e3 over 2+2 splits as e1 (x) e3
    a = C.basis(4, (1, 3))
    ps = partial_symbol(a, 2)
    assert ps.coeffs == {((1,), (1,)): QI(1)}


def test_partial_symbols_commute_and_compose():
    rng = random.Random(19)
    for _ in range(100):
        n = rng.randrange(0, 4)
        m = rng.randrange(0, 4)
        if n + m == 0:
            continue
        a = random_element(rng, n + m)
        left_then_right = partial_symbol(a, n).right_factor_symbol()
        right_then_left = partial_symbol_right(a, m).left_factor_symbol()
        assert left_then_right == right_then_left
        assert left_then_right.flatten() == symbol_map(a)


def test_partial_symbol_zero_is_identity_embedding():
    a = random_element(random.Random(2), 3)
    ps = partial_symbol(a, 0)
    assert {j: c for (i, j), c in ps.coeffs.items()} == dict(a.coeffs)


def test_split_trace_equals_trace_odd_exhaustive():
    for total in (3, 5, 7):
        for n in range(0, total + 1):
            for r in range(total + 1):
                for idx in itertools.combinations(range(1, total + 1), r):
                    a = C.basis(total, idx)
                    assert split_trace(a, n) == trace_odd(a), (total, n, idx)


def test_split_trace_random_elements():
    rng = random.Random(23)
    for _ in range(100):
        a = random_element(rng, 3)
        assert split_trace(a, 1) == trace_odd(a)
        assert split_trace(a, 2) == trace_odd(a)


def test_split_trace_parity_check():
    with pytest.raises(ValueError):
        split_trace(C.generator(4, 1), 2)


def test_graded_tensor_volumes():
    g1, g2 = volume_element(1), volume_element(2)
    assert graded_tensor(g1, g2) == volume_element(3)
    b = random_element(random.Random(5), 2)
    shifted = graded_tensor(C.scalar(1, 1), b)
    assert shifted.coeffs == {tuple(i + 1 for i in k): v for k, v in b.coeffs.items()}


def test_graded_tensor_associative():
    rng = random.Random(13)
    for _ in range(200):
        dims = [rng.randrange(1, 3) for _ in range(3)]
        a, b, c = (random_element(rng, d, 2) for d in dims)
        assert graded_tensor(graded_tensor(a, b), c) == graded_tensor(a, graded_tensor(b, c))
