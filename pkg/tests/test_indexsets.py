import math
import random
from fractions import Fraction

import pytest

from cuspedge.indexsets import (
    BMapData,
    CompositionUndefined,
    DivergentPushforward,
    IndexFamily,
    IndexSet,
    action_on_function,
    compose_double,
    ext_union,
    family_to_dict,
    inf_set,
    natural_like,
    parse_family_text,
    pullback_family,
    pushforward_family,
    set_sum,
    shift,
)

INF = math.inf


# --- naive enumerator working straight off the definitions on tuple sets ----

def naive_closure(gens, cutoff):
    out = set()
    for (z, p) in gens:
        for q in range(p + 1):
            zz = Fraction(z)
            while zz < cutoff:
                out.add((zz, q))
                zz += 1
    return out


def naive_ext_union(A, B, cutoff):
    out = set(t for t in A if t[0] < cutoff) | set(t for t in B if t[0] < cutoff)
    for (z, p) in A:
        for (z2, p2) in B:
            if z == z2:
                out.add((z, p + p2 + 1))
    return naive_closure(out, cutoff)


def naive_sum(A, B, cutoff):
    if not A or not B:
        return set()
    out = {(z + z2, p + p2) for (z, p) in A for (z2, p2) in B}
    return naive_closure(out, cutoff)


def to_naive(E, cutoff):
    return {(t.re, t.p) for t in E.terms if t.re < cutoff}


def from_naive(S, cutoff):
    return IndexSet(list(S), cutoff) if S else IndexSet.empty()


def random_set(rng, cutoff):
    if rng.random() < 0.2:
        return IndexSet.empty()
    gens = []
    for _ in range(rng.randrange(1, 4)):
        z = Fraction(rng.randrange(-6, 7), rng.choice([1, 2, 3]))
        gens.append((z, rng.randrange(0, 3)))
    return IndexSet(gens, cutoff)


# --- basics ------------------------------------------------------------------

def test_inf_empty_is_infinite():
    assert inf_set(IndexSet.empty()) == INF


def test_inf_basic():
    assert inf_set(IndexSet([(0, 0)], 5)) == 0
    assert inf_set(IndexSet([(Fraction(-3, 2), 1)], 5)) == Fraction(-3, 2)


def test_canonical_closure_materialised():
    E = IndexSet([(0, 1)], 3)
    assert (0, 1) in E and (0, 0) in E
    assert (1, 1) in E and (2, 0) in E
    assert (3, 0) not in E  # at the cutoff, not stored


def test_canonicalisation_idempotent():
    rng = random.Random(0)
    for _ in range(50):
        E = random_set(rng, Fraction(5))
        again = IndexSet(list(E.terms), E.cutoff)
        assert again == E


def test_ext_union_same_exponent_raises_log():
    E = IndexSet([(0, 0)], 5)
    G = ext_union(E, E)
    assert (0, 0) in G and (0, 1) in G
    assert (1, 1) in G  # closure of the raised term
    assert (0, 2) not in G


def test_ext_union_with_empty():
    E = IndexSet([(0, 0)], 5)
    assert ext_union(E, IndexSet.empty()) == E
    assert ext_union(IndexSet.empty(), E) == E


def test_ext_union_commutative_and_contains_union():
    rng = random.Random(1)
    for _ in range(200):
        cut = Fraction(rng.randrange(3, 7))
        E, F = random_set(rng, cut), random_set(rng, cut)
        G1, G2 = ext_union(E, F), ext_union(F, E)
        assert G1 == G2
        assert E.terms <= G1.terms or E.cutoff > G1.cutoff
        # against the enumerator
        naive = naive_ext_union(to_naive(E, cut), to_naive(F, cut), min(E.cutoff, F.cutoff))
        assert to_naive(G1, G1.cutoff) == naive


def test_inf_ext_union_is_min():
    rng = random.Random(2)
    for _ in range(100):
        E, F = random_set(rng, Fraction(5)), random_set(rng, Fraction(5))
        assert inf_set(ext_union(E, F)) == min(inf_set(E), inf_set(F))


def test_sum_examples():
    E = IndexSet([(1, 0)], 8)
    F = IndexSet([(2, 3)], 8)
    S = set_sum(E, F)
    assert (3, 3) in S and (4, 3) in S and (3, 2) in S
    assert set_sum(E, IndexSet.empty()).is_empty()
    Z = IndexSet([(0, 0)], 8)
    assert set_sum(Z, Z).same_terms(Z)


def test_sum_inf_additive_and_matches_enumerator():
    rng = random.Random(3)
    for _ in range(200):
        E, F = random_set(rng, Fraction(6)), random_set(rng, Fraction(6))
        S = set_sum(E, F)
        if E.is_empty() or F.is_empty():
            assert S.is_empty()
            continue
        assert inf_set(S) == inf_set(E) + inf_set(F)
        naive = naive_sum(to_naive(E, E.cutoff), to_naive(F, F.cutoff), S.cutoff)
        assert to_naive(S, S.cutoff) == naive


def test_shift():
    assert shift(IndexSet.empty(), 5).is_empty()
    E = shift(IndexSet([(0, 0)], 4), 3)
    assert (3, 0) in E and inf_set(E) == 3
    rng = random.Random(4)
    for _ in range(50):
        E = random_set(rng, Fraction(5))
        c = Fraction(rng.randrange(-3, 4))
        if E.is_empty():
            continue
        assert inf_set(shift(E, c)) == inf_set(E) + c


# --- pullback / pushforward ---------------------------------------------------

def test_pullback_identity():
    f = BMapData(("a", "b"), ("a", "b"), [[1, 0], [0, 1]])
    E = IndexFamily({"a": IndexSet([(0, 0)], 5), "b": IndexSet([(1, 1)], 5)}, ("a", "b"))
    out = pullback_family(f, E)
    assert out["a"].same_terms(E["a"])
    assert out["b"].same_terms(E["b"])


def test_pullback_zero_row_gives_natural():
    f = BMapData(("a",), ("h",), [[0]])
    E = IndexFamily({"h": IndexSet([(2, 0)], 5)}, ("h",))
    out = pullback_family(f, E)
    assert (0, 0) in out["a"] and (1, 0) in out["a"]
    assert inf_set(out["a"]) == 0


def test_pullback_two_face_sum_vs_enumeration():
    rng = random.Random(5)
    for _ in range(60):
        cut = Fraction(6)
        E1, E2 = random_set(rng, cut), random_set(rng, cut)
        e1, e2 = rng.randrange(1, 3), rng.randrange(1, 3)
        f = BMapData(("g",), ("h1", "h2"), [[e1, e2]])
        fam = IndexFamily({"h1": E1, "h2": E2}, ("h1", "h2"))
        out = pullback_family(f, fam)["g"]
        if E1.is_empty() or E2.is_empty():
            assert out.is_empty()
            continue
        naive = {(e1 * z1 + e2 * z2, p1 + p2)
                 for (z1, p1) in to_naive(E1, cut) for (z2, p2) in to_naive(E2, cut)}
        naive = naive_closure(naive, out.cutoff)
        assert to_naive(out, out.cutoff) == naive


def test_pushforward_single_face():
    f = BMapData(("g",), ("h",), [[1]])
    E = IndexFamily({"g": IndexSet([(2, 1)], 6)}, ("g",))
    out = pushforward_family(f, E)
    assert out["h"].same_terms(E["g"])


def test_pushforward_scaling():
    f = BMapData(("g",), ("h",), [[2]])
    E = IndexFamily({"g": IndexSet([(1, 0)], 6)}, ("g",))
    out = pushforward_family(f, E)["h"]
    assert (Fraction(1, 2), 0) in out
    assert (Fraction(3, 2), 0) in out  # closure applies after scaling


def test_pushforward_two_faces_extended_union():
    rng = random.Random(6)
    for _ in range(60):
        cut = Fraction(6)
        E1, E2 = random_set(rng, cut), random_set(rng, cut)
        f = BMapData(("g1", "g2"), ("h",), [[1], [2]])
        fam = IndexFamily({"g1": E1, "g2": E2}, ("g1", "g2"))
        out = pushforward_family(f, fam)["h"]
        want = ext_union(E1.scale_down(1), E2.scale_down(2))
        assert out == want


def test_pushforward_divergence_detected():
    f = BMapData(("g", "side"), ("h",), [[1], [0]])
    fam = IndexFamily({"g": IndexSet([(1, 0)], 6), "side": IndexSet([(0, 0)], 6)},
                      ("g", "side"))
    with pytest.raises(DivergentPushforward):
        pushforward_family(f, fam)
    ok = IndexFamily({"g": IndexSet([(1, 0)], 6), "side": IndexSet([(Fraction(1, 2), 0)], 6)},
                     ("g", "side"))
    pushforward_family(f, ok)


# --- composition ----------------------------------------------------------------

def small_calculus(cutoff=6):
    return IndexFamily({
        "ff": IndexSet.natural(cutoff),
        "lf": IndexSet.empty(),
        "rf": IndexSet.empty(),
        "bkf": IndexSet.empty(),
    })


def test_small_calculus_closed_under_composition():
    E = small_calculus()
    G = compose_double(E, E, k=3, b=0)
    assert G["ff"].same_terms(IndexSet.natural(G["ff"].cutoff))
    assert G["lf"].is_empty() and G["rf"].is_empty() and G["bkf"].is_empty()


def test_composition_precondition_vacuous_for_empty_rf():
    E = small_calculus()
    F = IndexFamily({
        "ff": IndexSet.natural(6),
        "lf": IndexSet([(-5, 0)], 6),  # would violate were E(rf) nonempty
        "rf": IndexSet.empty(),
        "bkf": IndexSet.empty(),
    })
    compose_double(E, F, k=2, b=1)


def test_composition_precondition_raises():
    E = IndexFamily({
        "ff": IndexSet.natural(6),
        "lf": IndexSet.empty(),
        "rf": IndexSet([(Fraction(-1, 2), 0)], 6),
        "bkf": IndexSet.empty(),
    })
    F = IndexFamily({
        "ff": IndexSet.natural(6),
        "lf": IndexSet([(Fraction(-1, 2), 0)], 6),
        "rf": IndexSet.empty(),
        "bkf": IndexSet.empty(),
    })
    with pytest.raises(CompositionUndefined):
        compose_double(E, F, k=3, b=0)


def naive_compose(E, F, k, b, cutoff):
    """The four face formulas evaluated with the naive tuple-set arithmetic."""
    def ns(face, fam):
        return to_naive(fam[face], cutoff + 20)  # generous slack before re-truncation

    kb1, b1 = k * (b + 1), b + 1
    N = naive_closure({(0, 0)}, cutoff + 20)

    def sh(A, c):
        return {(z + c, p) for (z, p) in A}

    def su(A, B):
        return naive_sum(A, B, cutoff + 20)

    def eu(A, B):
        return naive_ext_union(A, B, cutoff + 20)

    g_ff = eu(eu(su(ns("ff", E), ns("ff", F)), sh(su(ns("lf", E), ns("rf", F)), kb1)),
              sh(su(ns("bkf", E), ns("bkf", F)), (k + 1) * b1))
    g_bkf = eu(eu(eu(sh(su(ns("bkf", E), ns("bkf", F)), b1),
                     su(ns("ff", E), ns("bkf", F))),
                  su(ns("bkf", E), ns("ff", F))),
               su(ns("lf", E), ns("rf", F)))
    g_lf = eu(eu(sh(su(ns("bkf", E), ns("lf", F)), b1),
                 su(ns("ff", E), ns("lf", F))),
              su(ns("lf", E), N))
    g_rf = eu(eu(sh(su(ns("rf", E), ns("bkf", F)), b1),
                 sh(su(ns("rf", E), ns("ff", F)), kb1)),
              su(ns("rf", F), N))
    return {"ff": g_ff, "bkf": g_bkf, "lf": g_lf, "rf": g_rf}


def random_family(rng, cutoff):
    # keep rf/lf infima mild so the precondition usually holds
    def mild():
        if rng.random() < 0.3:
            return IndexSet.empty()
        gens = [(Fraction(rng.randrange(0, 5), rng.choice([1, 2])), rng.randrange(0, 2))
                for _ in range(rng.randrange(1, 3))]
        return IndexSet(gens, cutoff)
    return IndexFamily({"ff": mild(), "lf": mild(), "rf": mild(), "bkf": mild()})


def test_compose_double_against_enumerator():
    rng = random.Random(7)
    checked = 0
    while checked < 200:
        cutoff = Fraction(rng.randrange(4, 7))
        E, F = random_family(rng, cutoff), random_family(rng, cutoff)
        k, b = rng.choice([2, 3]), rng.choice([0, 1])
        try:
            G = compose_double(E, F, k, b)
        except CompositionUndefined:
            continue
        naive = naive_compose(E, F, k, b, cutoff)
        for face in ("ff", "bkf", "lf", "rf"):
            cut = G[face].cutoff
            got = to_naive(G[face], cut)
            want = {t for t in naive[face] if t[0] < cut}
            assert got == want, (face, k, b)
        checked += 1


def test_action_on_function_formula():
    cutoff = Fraction(6)
    E = IndexFamily({
        "ff": IndexSet.empty(),
        "lf": IndexSet.natural(cutoff),
        "rf": IndexSet.empty(),
        "bkf": IndexSet.empty(),
    })
    G = action_on_function(E, IndexSet.natural(cutoff), b=0)
    assert G.same_terms(IndexSet.natural(G.cutoff))


def test_action_on_function_empty_boundary():
    cutoff = Fraction(6)
    E = IndexFamily({
        "ff": IndexSet.natural(cutoff),
        "lf": IndexSet([(2, 0)], cutoff),
        "rf": IndexSet.natural(cutoff),
        "bkf": IndexSet.natural(cutoff),
    })
    G = action_on_function(E, IndexSet.empty(), b=0)
    want = set_sum(E["lf"], natural_like(E["lf"]))
    assert G.same_terms(want)


def test_action_on_function_against_enumerator():
    rng = random.Random(8)
    checked = 0
    while checked < 100:
        cutoff = Fraction(5)
        E = random_family(rng, cutoff)
        Fb = random_set(rng, cutoff)
        b = rng.choice([0, 1])
        try:
            G = action_on_function(E, Fb, b)
        except DivergentPushforward:
            continue
        N = naive_closure({(0, 0)}, cutoff + 20)
        A = naive_sum(to_naive(E["lf"], cutoff + 20), N, cutoff + 20)
        B = {(z + b + 1, p) for (z, p) in
             naive_sum(to_naive(E["bkf"], cutoff + 20), to_naive(Fb, cutoff + 20), cutoff + 20)}
        Cc = naive_sum(to_naive(E["ff"], cutoff + 20), to_naive(Fb, cutoff + 20), cutoff + 20)
        want = naive_ext_union(naive_ext_union(A, B, cutoff + 20), Cc, cutoff + 20)
        got = to_naive(G, G.cutoff)
        assert got == {t for t in want if t[0] < G.cutoff}
        checked += 1


def test_parse_family_text_roundtrip():
    text = """
k = 3
b = 0
cutoff = 6
[E]
ff = N
lf = empty
rf = (0,0) (1/2,1)
bkf = empty
[F]
ff = N
lf = empty
rf = empty
bkf = empty
"""
    E, F, params = parse_family_text(text)
    assert params["k"] == 3 and params["b"] == 0
    assert (Fraction(1, 2), 1) in E["rf"] and (0, 0) in E["rf"]
    assert F["lf"].is_empty()
    d = family_to_dict(compose_double(E, F, params["k"], params["b"]))
    assert set(d) == {"ff", "bkf", "lf", "rf"}
