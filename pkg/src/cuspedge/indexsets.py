"""Arithmetic of truncated polyhomogeneous index sets and families.

An index set is a set of (exponent, log power) pairs closed under lowering the
log power and under integer exponent shifts.  The sets occurring in expansions
are infinite, so every value here is truncated: terms with real part below the
``cutoff`` are authoritative, nothing at or beyond the cutoff is stored, and
each operation computes the best cutoff that its inputs can support.  The
empty set is exact and carries an infinite cutoff.

Exponents are stored as rational pairs (re, im); the imaginary part is carried
through sums and unions but plays no role in ordering or infima.
"""

from __future__ import annotations

import math
import re as _re
from fractions import Fraction
from typing import Dict, Iterable, List, NamedTuple, Sequence, Tuple

INF = math.inf

DOUBLE_FACES = ("lf", "rf", "bkf", "ff")
HEAT_FACES = ("lf", "rf", "bkf", "ff", "tf", "bf")


class DivergentPushforward(ValueError):
    """Pushforward hypothesis violated: an integrated-out face has inf <= 0."""


class CompositionUndefined(ValueError):
    """Composition precondition inf E(rf) + inf F(lf) > -1 violated."""


class IndexTerm(NamedTuple):
    re: Fraction
    im: Fraction
    p: int


def _term(z, p=0, im=0) -> IndexTerm:
    return IndexTerm(Fraction(z), Fraction(im), int(p))


class IndexSet:
    """Canonical truncated index set.

    All closure consequences with exponent real part below the cutoff are
    materialised in ``terms``; construction from generators canonicalises.
    """

    __slots__ = ("terms", "cutoff")

    def __init__(self, generators: Iterable = (), cutoff=INF):
        cutoff = Fraction(cutoff) if cutoff != INF else INF
        gens = []
        for g in generators:
            if isinstance(g, IndexTerm):
                gens.append(g)
            else:
                gens.append(_term(*g) if isinstance(g, tuple) else _term(g))
        if gens and cutoff == INF:
            raise ValueError("nonempty index sets need a finite cutoff")
        best: Dict[Tuple[Fraction, Fraction], int] = {}
        for t in gens:
            if t.p < 0:
                raise ValueError("log power must be nonnegative")
            z = t.re
            while z < cutoff:
                key = (z, t.im)
                if best.get(key, -1) < t.p:
                    best[key] = t.p
                z += 1
        terms = frozenset(IndexTerm(z, im, q)
                          for (z, im), pmax in best.items()
                          for q in range(pmax + 1))
        self.terms = terms
        self.cutoff = cutoff

    # -- constructors --------------------------------------------------------
    @staticmethod
    def empty() -> "IndexSet":
        return IndexSet((), INF)

    @staticmethod
    def natural(cutoff) -> "IndexSet":
        """The smooth set N = {(j, 0) : j >= 0}, truncated."""
        return IndexSet([(0, 0)], cutoff)

    # -- predicates ----------------------------------------------------------
    def is_empty(self) -> bool:
        return not self.terms

    def __contains__(self, t) -> bool:
        return (_term(*t) if isinstance(t, tuple) else t) in self.terms

    def __eq__(self, o):
        return isinstance(o, IndexSet) and self.terms == o.terms and self.cutoff == o.cutoff

    def __hash__(self):
        return hash((self.terms, self.cutoff))

    def same_terms(self, o: "IndexSet") -> bool:
        return self.terms == o.terms

    def __le__(self, o: "IndexSet") -> bool:
        return self.terms <= o.terms

    def __repr__(self):
        if self.is_empty():
            return "IndexSet(empty)"
        shown = sorted(self.terms)[:6]
        body = " ".join(f"({t.re},{t.p})" if t.im == 0 else f"({t.re}+{t.im}i,{t.p})"
                        for t in shown)
        more = "" if len(self.terms) <= 6 else f" ...[{len(self.terms)}]"
        return f"IndexSet[{body}{more} | cutoff {self.cutoff}]"

    # -- basic operations ------------------------------------------------------
    def inf(self):
        """Minimum exponent real part; +inf on the empty set."""
        if not self.terms:
            return INF
        return min(t.re for t in self.terms)

    def shift(self, c) -> "IndexSet":
        if self.is_empty():
            return IndexSet.empty()
        c = Fraction(c)
        return IndexSet([IndexTerm(t.re + c, t.im, t.p) for t in self.terms],
                        self.cutoff + c)

    def scale_down(self, e: int) -> "IndexSet":
        """Divide exponents by a positive integer (pushforward along x = y^e)."""
        if e <= 0:
            raise ValueError("scale factor must be positive")
        if self.is_empty():
            return IndexSet.empty()
        return IndexSet([IndexTerm(t.re / e, t.im / e, t.p) for t in self.terms],
                        Fraction(self.cutoff, e))

    def ext_union(self, o: "IndexSet") -> "IndexSet":
        """Union plus (z, p + p' + 1) for exponents present on both sides."""
        cutoff = min(self.cutoff, o.cutoff)
        gens: List[IndexTerm] = list(self.terms) + list(o.terms)
        mine: Dict[Tuple[Fraction, Fraction], int] = {}
        for t in self.terms:
            key = (t.re, t.im)
            if mine.get(key, -1) < t.p:
                mine[key] = t.p
        for t in o.terms:
            p = mine.get((t.re, t.im))
            if p is not None:
                gens.append(IndexTerm(t.re, t.im, p + t.p + 1))
        if not gens:
            return IndexSet.empty()
        return IndexSet(gens, cutoff)

    def __add__(self, o: "IndexSet") -> "IndexSet":
        """Term-wise sum; empty if either side is empty."""
        if self.is_empty() or o.is_empty():
            return IndexSet.empty()
        cutoff = min(self.cutoff + o.inf(), o.cutoff + self.inf())
        gens = [IndexTerm(s.re + t.re, s.im + t.im, s.p + t.p)
                for s in self.terms for t in o.terms]
        return IndexSet(gens, cutoff)


def inf_set(E: IndexSet):
    return E.inf()


def ext_union(E: IndexSet, F: IndexSet) -> IndexSet:
    return E.ext_union(F)


def set_sum(E: IndexSet, F: IndexSet) -> IndexSet:
    return E + F


def shift(E: IndexSet, c) -> IndexSet:
    return E.shift(c)


def natural_like(*sets: IndexSet) -> IndexSet:
    """An N truncated deep enough to never limit sums with the given sets."""
    cut = INF
    for s in sets:
        if s.is_empty():
            continue
        cut = min(cut, s.cutoff - s.inf()) if cut != INF else s.cutoff - s.inf()
    if cut == INF:
        # summing N with empty sets only: any truncation is sound
        return IndexSet.natural(1)
    return IndexSet.natural(cut)


# ---------------------------------------------------------------------------
# families and b-maps
# ---------------------------------------------------------------------------

class IndexFamily:
    """Index set per boundary face of a fixed face vocabulary."""

    def __init__(self, sets: Dict[str, IndexSet], faces: Sequence[str] = DOUBLE_FACES):
        missing = [f for f in faces if f not in sets]
        if missing:
            raise ValueError(f"faces without index sets: {missing}")
        extra = [f for f in sets if f not in faces]
        if extra:
            raise ValueError(f"unknown faces: {extra}")
        self.faces = tuple(faces)
        self.sets = dict(sets)

    def __getitem__(self, face: str) -> IndexSet:
        return self.sets[face]

    def __eq__(self, o):
        return isinstance(o, IndexFamily) and self.faces == o.faces and self.sets == o.sets

    def __repr__(self):
        body = ", ".join(f"{f}: {self.sets[f]!r}" for f in self.faces)
        return f"IndexFamily({body})"


class BMapData:
    """Exponent matrix of a boundary map: rows domain faces, cols codomain."""

    def __init__(self, domain_faces: Sequence[str], codomain_faces: Sequence[str],
                 exponents: Sequence[Sequence[int]]):
        self.domain_faces = tuple(domain_faces)
        self.codomain_faces = tuple(codomain_faces)
        mat = [tuple(int(x) for x in row) for row in exponents]
        if len(mat) != len(self.domain_faces) or any(len(r) != len(self.codomain_faces) for r in mat):
            raise ValueError("exponent matrix shape does not match face lists")
        if any(x < 0 for row in mat for x in row):
            raise ValueError("exponents must be nonnegative")
        self.exponents = mat

    def e(self, G: str, H: str) -> int:
        return self.exponents[self.domain_faces.index(G)][self.codomain_faces.index(H)]


def pullback_family(f: BMapData, E: IndexFamily) -> IndexFamily:
    """Pullback index family along a b-map.

    A domain face with an all-zero exponent row receives N; otherwise terms
    are sums e(G,H) * z_H over the contributing codomain faces.
    """
    if set(E.faces) != set(f.codomain_faces):
        raise ValueError("family faces do not match the codomain of the b-map")
    out = {}
    for G in f.domain_faces:
        row = [(H, f.e(G, H)) for H in f.codomain_faces if f.e(G, H) != 0]
        if not row:
            cut = min((E[H].cutoff for H in f.codomain_faces
                       if not E[H].is_empty()), default=Fraction(1))
            out[G] = IndexSet.natural(cut if cut != INF else Fraction(1))
            continue
        if any(E[H].is_empty() for H, _ in row):
            out[G] = IndexSet.empty()
            continue
        cut = min(
            e_star * E[H_star].cutoff
            + sum(f.e(G, H) * E[H].inf() for H, _ in row if H != H_star)
            for H_star, e_star in row
        )
        combos = [IndexTerm(Fraction(0), Fraction(0), 0)]
        for H, e in row:
            combos = [IndexTerm(t.re + e * s.re, t.im + e * s.im, t.p + s.p)
                      for t in combos for s in E[H].terms]
        out[G] = IndexSet(combos, cut)
    return IndexFamily(out, f.domain_faces)


def pushforward_family(f: BMapData, E: IndexFamily) -> IndexFamily:
    """Pushforward index family along a b-fibration.

    Faces integrated out (all-zero rows) must have positive infimum, else the
    fibre integral diverges.
    """
    if set(E.faces) != set(f.domain_faces):
        raise ValueError("family faces do not match the domain of the b-map")
    for G in f.domain_faces:
        if all(f.e(G, H) == 0 for H in f.codomain_faces):
            if E[G].inf() <= 0:
                raise DivergentPushforward(
                    f"face {G} integrates out but inf {E[G].inf()} <= 0")
    out = {}
    for H in f.codomain_faces:
        acc = IndexSet.empty()
        for G in f.domain_faces:
            e = f.e(G, H)
            if e > 0:
                acc = acc.ext_union(E[G].scale_down(e))
        out[H] = acc
    return IndexFamily(out, f.codomain_faces)


def compose_double(E: IndexFamily, F: IndexFamily, k: int, b: int) -> IndexFamily:
    """Index family of a composition on the cusp-edge double space.

    Faces are {lf, rf, bkf, ff}; k is the collapse rate and b the base
    dimension.  Requires inf E(rf) + inf F(lf) > -1.
    """
    if E.faces != DOUBLE_FACES or F.faces != DOUBLE_FACES:
        raise ValueError("compose_double expects double-space families")
    if E["rf"].inf() + F["lf"].inf() <= -1:
        raise CompositionUndefined(
            f"inf E(rf) + inf F(lf) = {E['rf'].inf()} + {F['lf'].inf()} <= -1")
    kb1 = k * (b + 1)
    b1 = b + 1
    g_ff = (E["ff"] + F["ff"]) \
        .ext_union((E["lf"] + F["rf"]).shift(kb1)) \
        .ext_union((E["bkf"] + F["bkf"]).shift((k + 1) * b1))
    g_bkf = (E["bkf"] + F["bkf"]).shift(b1) \
        .ext_union(E["ff"] + F["bkf"]) \
        .ext_union(E["bkf"] + F["ff"]) \
        .ext_union(E["lf"] + F["rf"])
    g_lf = (E["bkf"] + F["lf"]).shift(b1) \
        .ext_union(E["ff"] + F["lf"]) \
        .ext_union(E["lf"] + natural_like(E["lf"]))
    g_rf = (E["rf"] + F["bkf"]).shift(b1) \
        .ext_union((E["rf"] + F["ff"]).shift(kb1)) \
        .ext_union(F["rf"] + natural_like(F["rf"]))
    return IndexFamily({"ff": g_ff, "bkf": g_bkf, "lf": g_lf, "rf": g_rf})


def action_on_function(E: IndexFamily, F_boundary: IndexSet, b: int) -> IndexSet:
    """Index set of A f for an operator family E applied to a function.

    Requires inf E(rf) + inf F(boundary) > -1.
    """
    if E.faces != DOUBLE_FACES:
        raise ValueError("action_on_function expects a double-space family")
    if E["rf"].inf() + F_boundary.inf() <= -1:
        raise DivergentPushforward(
            f"inf E(rf) + inf F = {E['rf'].inf()} + {F_boundary.inf()} <= -1")
    return (E["lf"] + natural_like(E["lf"])) \
        .ext_union((E["bkf"] + F_boundary).shift(b + 1)) \
        .ext_union(E["ff"] + F_boundary)


# ---------------------------------------------------------------------------
# text format: face = term list | N | empty
# ---------------------------------------------------------------------------

_TERM_RE = _re.compile(r"\(\s*(-?\d+(?:/\d+)?)\s*,\s*(\d+)\s*\)")


def parse_family_text(text: str):
    """Parse the two families and parameters of a composition scenario.

    Sections [E] and [F] hold ``face = terms`` lines where terms are
    ``(exponent, logpower)`` pairs, the keyword ``N`` or the keyword
    ``empty``.  Top-level ``k``, ``b`` and ``cutoff`` assignments set the
    geometry and the truncation.
    """
    params = {"k": 3, "b": 0, "cutoff": Fraction(6)}
    sections: Dict[str, Dict[str, str]] = {}
    current = None
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            sections[current] = {}
            continue
        if "=" not in line:
            raise ValueError(f"cannot parse line: {raw!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        if current is None:
            if key not in params:
                raise ValueError(f"unknown parameter {key!r}")
            params[key] = Fraction(val) if key == "cutoff" else int(val)
        else:
            sections[current][key] = val
    cutoff = params["cutoff"]

    def build(sec: Dict[str, str]) -> IndexFamily:
        sets = {}
        for face in DOUBLE_FACES:
            if face not in sec:
                raise ValueError(f"face {face!r} missing")
            val = sec[face]
            if val == "empty":
                sets[face] = IndexSet.empty()
            elif val == "N":
                sets[face] = IndexSet.natural(cutoff)
            else:
                terms = [(Fraction(m.group(1)), int(m.group(2)))
                         for m in _TERM_RE.finditer(val)]
                if not terms:
                    raise ValueError(f"no terms parsed from {val!r}")
                sets[face] = IndexSet([(z, p) for z, p in terms], cutoff)
        return build_family(sets)

    def build_family(sets):
        return IndexFamily(sets)

    for name in ("E", "F"):
        if name not in sections:
            raise ValueError(f"section [{name}] missing")
    return build(sections["E"]), build(sections["F"]), params


def family_to_text(fam: IndexFamily) -> str:
    lines = []
    for face in fam.faces:
        s = fam[face]
        if s.is_empty():
            lines.append(f"{face} = empty")
        else:
            body = " ".join(f"({t.re},{t.p})" for t in sorted(s.terms))
            lines.append(f"{face} = {body}  # cutoff {s.cutoff}")
    return "\n".join(lines)


def family_to_dict(fam: IndexFamily) -> dict:
    out = {}
    for face in fam.faces:
        s = fam[face]
        out[face] = {
            "empty": s.is_empty(),
            "cutoff": None if s.cutoff == INF else str(s.cutoff),
            "terms": [[str(t.re), str(t.im), t.p] for t in sorted(s.terms)],
        }
    return out
