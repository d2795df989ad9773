"""Exact complexified Clifford and exterior algebras over an orthonormal space.

Elements are stored in the canonical multi-index basis with Gaussian-rational
coefficients, so every algebraic identity here (products, symbol maps, Berezin
integrals, supertraces) can be checked bit-exactly.  Conventions:

    cl(e_i) cl(e_j) + cl(e_j) cl(e_i) = -2 delta_ij
    gamma_n = e_1 ... e_n
    str(A)  = (-2i)^k T(sigma(A))            n = 2k
    tr(A)   = -(1/2) (-2i)^k T(sigma(A))     n = 2k-1, on the S+ module

The odd trace depends on which irreducible module is used; the S+ choice is
the default and ``module="S-"`` flips the sign.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable


class QI:
    """Gaussian rational: exact complex number with Fraction parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        object.__setattr__(self, "re", Fraction(re))
        object.__setattr__(self, "im", Fraction(im))

    def __setattr__(self, *a):
        raise AttributeError("QI is immutable")

    @staticmethod
    def coerce(x) -> "QI":
        if isinstance(x, QI):
            return x
        if isinstance(x, complex):
            return QI(Fraction(x.real), Fraction(x.imag))
        return QI(x)

    def __add__(self, o):
        o = QI.coerce(o)
        return QI(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __neg__(self):
        return QI(-self.re, -self.im)

    def __sub__(self, o):
        return self + (-QI.coerce(o))

    def __rsub__(self, o):
        return QI.coerce(o) + (-self)

    def __mul__(self, o):
        o = QI.coerce(o)
        return QI(self.re * o.re - self.im * o.im,
                  self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, o):
        o = QI.coerce(o)
        d = o.re * o.re + o.im * o.im
        if d == 0:
            raise ZeroDivisionError("division by zero QI")
        return QI((self.re * o.re + self.im * o.im) / d,
                  (self.im * o.re - self.re * o.im) / d)

    def __pow__(self, n: int):
        if n < 0:
            return QI(1) / self.__pow__(-n)
        out = QI(1)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def __eq__(self, o):
        o = QI.coerce(o)
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __bool__(self):
        return self.re != 0 or self.im != 0

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        if self.im == 0:
            return f"{self.re}"
        return f"({self.re}{'+' if self.im >= 0 else ''}{self.im}i)"


I_QI = QI(0, 1)


def _check_index(idx: tuple, n: int):
    last = 0
    for j in idx:
        if not (isinstance(j, int) and 1 <= j <= n):
            raise ValueError(f"index {j} outside 1..{n}")
        if j <= last:
            raise ValueError(f"multi-index {idx} not strictly increasing")
        last = j


def mul_basis_clifford(I: tuple, J: tuple) -> tuple:
    """Product sign and multi-index of e_I e_J under e_i e_i = -1.

    Sorts the concatenation counting transpositions, then contracts adjacent
    equal pairs with a factor -1 each.
    """
    arr = list(I) + list(J)
    sign = 1
    for i in range(1, len(arr)):
        j = i
        while j > 0 and arr[j - 1] > arr[j]:
            arr[j - 1], arr[j] = arr[j], arr[j - 1]
            sign = -sign
            j -= 1
    out = []
    i = 0
    while i < len(arr):
        if i + 1 < len(arr) and arr[i] == arr[i + 1]:
            sign = -sign
            i += 2
        else:
            out.append(arr[i])
            i += 1
    return sign, tuple(out)


def mul_basis_wedge(I: tuple, J: tuple) -> tuple:
    """Product sign and multi-index of e_I ^ e_J; zero on repeated indices."""
    if set(I) & set(J):
        return 0, ()
    arr = list(I) + list(J)
    sign = 1
    for i in range(1, len(arr)):
        j = i
        while j > 0 and arr[j - 1] > arr[j]:
            arr[j - 1], arr[j] = arr[j], arr[j - 1]
            sign = -sign
            j -= 1
    return sign, tuple(arr)


class _GradedElement:
    """Shared storage for Clifford / exterior elements: dim + sparse coeffs."""

    _mul_basis = None  # set by subclass

    def __init__(self, n: int, coeffs=None):
        if n < 0:
            raise ValueError("dimension must be nonnegative")
        self.n = n
        data = {}
        if coeffs:
            for idx, c in coeffs.items():
                idx = tuple(idx)
                _check_index(idx, n)
                c = QI.coerce(c)
                if c:
                    data[idx] = data.get(idx, QI(0)) + c
            data = {k: v for k, v in data.items() if v}
        self.coeffs = data

    # -- constructors ------------------------------------------------------
    @classmethod
    def scalar(cls, n: int, c):
        return cls(n, {(): QI.coerce(c)})

    @classmethod
    def basis(cls, n: int, idx: Iterable[int], c=1):
        return cls(n, {tuple(idx): QI.coerce(c)})

    @classmethod
    def generator(cls, n: int, i: int):
        return cls(n, {(i,): QI(1)})

    # -- ring structure ----------------------------------------------------
    def _like(self, coeffs):
        out = object.__new__(type(self))
        out.n = self.n
        out.coeffs = {k: v for k, v in coeffs.items() if v}
        return out

    def __add__(self, o):
        if not isinstance(o, _GradedElement):
            o = type(self).scalar(self.n, o)
        if type(o) is not type(self) or o.n != self.n:
            raise ValueError("algebra mismatch in addition")
        data = dict(self.coeffs)
        for k, v in o.coeffs.items():
            data[k] = data.get(k, QI(0)) + v
        return self._like(data)

    __radd__ = __add__

    def __neg__(self):
        return self._like({k: -v for k, v in self.coeffs.items()})

    def __sub__(self, o):
        if not isinstance(o, _GradedElement):
            o = type(self).scalar(self.n, o)
        return self + (-o)

    def __mul__(self, o):
        if not isinstance(o, _GradedElement):
            c = QI.coerce(o)
            return self._like({k: v * c for k, v in self.coeffs.items()})
        if type(o) is not type(self) or o.n != self.n:
            raise ValueError("algebra mismatch in product")
        data = {}
        mul = type(self)._mul_basis
        for I, a in self.coeffs.items():
            for J, b in o.coeffs.items():
                sgn, K = mul(I, J)
                if sgn == 0:
                    continue
                data[K] = data.get(K, QI(0)) + a * b * sgn
        return self._like(data)

    def __rmul__(self, o):
        # scalars commute; elements only hit __mul__
        return self.__mul__(o)

    def __eq__(self, o):
        if not isinstance(o, _GradedElement):
            return self == type(self).scalar(self.n, o)
        return type(self) is type(o) and self.n == o.n and self.coeffs == o.coeffs

    def __hash__(self):
        return hash((type(self).__name__, self.n, frozenset(self.coeffs.items())))

    # -- inspection --------------------------------------------------------
    def coefficient(self, idx) -> QI:
        return self.coeffs.get(tuple(idx), QI(0))

    def is_zero(self) -> bool:
        return not self.coeffs

    def degrees(self):
        return sorted({len(k) for k in self.coeffs})

    def homogeneous_part(self, d: int):
        return self._like({k: v for k, v in self.coeffs.items() if len(k) == d})

    def is_homogeneous(self):
        return len({len(k) % 2 for k in self.coeffs}) <= 1

    def parity(self) -> int:
        """0 even / 1 odd; raises on mixed parity."""
        ps = {len(k) % 2 for k in self.coeffs}
        if len(ps) > 1:
            raise ValueError("element has mixed parity")
        return ps.pop() if ps else 0

    def __repr__(self):
        if not self.coeffs:
            return "0"
        parts = []
        for k in sorted(self.coeffs, key=lambda t: (len(t), t)):
            name = "1" if not k else "e" + "".join(str(i) for i in k)
            parts.append(f"{self.coeffs[k]}*{name}")
        return " + ".join(parts)


class CliffordElement(_GradedElement):
    """Element of the complexified Clifford algebra Cl(n), orthonormal metric."""

    _mul_basis = staticmethod(mul_basis_clifford)


class ExteriorElement(_GradedElement):
    """Element of the complexified exterior algebra over n dimensions."""

    _mul_basis = staticmethod(mul_basis_wedge)


# ---------------------------------------------------------------------------
# symbol maps, Berezin integral and traces
# ---------------------------------------------------------------------------

def cl_mul(a: CliffordElement, b: CliffordElement) -> CliffordElement:
    """Clifford product; rejects dimension mismatch."""
    return a * b


def volume_element(n: int) -> CliffordElement:
    """gamma_n = e_1 ... e_n."""
    if n < 1:
        raise ValueError("volume element needs n >= 1")
    return CliffordElement.basis(n, tuple(range(1, n + 1)))


def chirality(n: int) -> CliffordElement:
    """Normalised volume element i^k gamma_2k; squares to 1."""
    if n % 2:
        raise ValueError("chirality defined for even n")
    return volume_element(n) * (I_QI ** (n // 2))


def symbol_map(a: CliffordElement) -> ExteriorElement:
    """Coefficient-preserving vector space isomorphism Cl(n) -> Lambda(n)."""
    return ExteriorElement(a.n, dict(a.coeffs))


def symbol_inverse(w: ExteriorElement) -> CliffordElement:
    return CliffordElement(w.n, dict(w.coeffs))


def berezin(w: ExteriorElement) -> QI:
    """Top-degree coefficient; zero on anything of lower degree."""
    return w.coefficient(tuple(range(1, w.n + 1)))


def supertrace_even(a: CliffordElement) -> QI:
    """Spinor supertrace for even n: (-2i)^{n/2} times the Berezin symbol."""
    if a.n % 2:
        raise ValueError("supertrace_even needs even dimension")
    k = a.n // 2
    return (QI(0, -2) ** k) * berezin(symbol_map(a))


def trace_odd(a: CliffordElement, module: str = "S+") -> QI:
    """Top-degree part of the trace on an irreducible odd module.

    Vanishes on every basis monomial except gamma_n; in particular it is the
    matrix trace minus the scalar contribution dim(S) * coeff_1(a).
    """
    if a.n % 2 == 0:
        raise ValueError("trace_odd needs odd dimension")
    if module not in ("S+", "S-"):
        raise ValueError("module must be 'S+' or 'S-'")
    k = (a.n + 1) // 2
    val = QI(Fraction(-1, 2)) * (QI(0, -2) ** k) * berezin(symbol_map(a))
    return val if module == "S+" else -val


class GradedSplit:
    """Element of A(n) (x) B(m) under Cl(n+m) ~ Cl(n) (x) Cl(m).

    Each factor is either Clifford or exterior depending on which partial
    symbols have been applied.  Keys are pairs (I, J) with I over 1..n and J
    over 1..m.
    """

    def __init__(self, n: int, m: int, left_exterior: bool, right_exterior: bool, coeffs):
        self.n = n
        self.m = m
        self.left_exterior = left_exterior
        self.right_exterior = right_exterior
        self.coeffs = {k: v for k, v in coeffs.items() if v}

    def left_factor_symbol(self) -> "GradedSplit":
        return GradedSplit(self.n, self.m, True, self.right_exterior, self.coeffs)

    def right_factor_symbol(self) -> "GradedSplit":
        return GradedSplit(self.n, self.m, self.left_exterior, True, self.coeffs)

    def flatten(self) -> ExteriorElement:
        """Total symbol, defined once both factors are exterior."""
        if not (self.left_exterior and self.right_exterior):
            raise ValueError("flatten needs both factors in exterior form")
        data = {}
        for (I, J), c in self.coeffs.items():
            K = tuple(list(I) + [j + self.n for j in J])
            data[K] = data.get(K, QI(0)) + c
        return ExteriorElement(self.n + self.m, data)

    def __eq__(self, o):
        return (isinstance(o, GradedSplit) and (self.n, self.m) == (o.n, o.m)
                and self.left_exterior == o.left_exterior
                and self.right_exterior == o.right_exterior
                and self.coeffs == o.coeffs)


def _split_keys(a: CliffordElement, n: int):
    if not (0 <= n <= a.n):
        raise ValueError(f"split point {n} outside 0..{a.n}")
    for K, c in a.coeffs.items():
        I = tuple(i for i in K if i <= n)
        J = tuple(i - n for i in K if i > n)
        yield (I, J), c


def partial_symbol(a: CliffordElement, n: int) -> GradedSplit:
    """Symbol map on the first n generators only: Lambda(n) (x) Cl(m)."""
    data = {}
    for key, c in _split_keys(a, n):
        data[key] = data.get(key, QI(0)) + c
    return GradedSplit(n, a.n - n, True, False, data)


def partial_symbol_right(a: CliffordElement, m: int) -> GradedSplit:
    """Symbol map on the last m generators only: Cl(n) (x) Lambda(m)."""
    n = a.n - m
    data = {}
    for key, c in _split_keys(a, n):
        data[key] = data.get(key, QI(0)) + c
    return GradedSplit(n, m, False, True, data)


def split_trace(a: CliffordElement, n: int, module: str = "S+") -> QI:
    """Odd trace computed through the split Cl(n+m) ~ Cl(n) (x) Cl(m).

    For n even the Cl(m) factor contributes its odd trace, for n odd its
    supertrace; the Berezin integral acts on the Lambda(n) factor.  Total
    dimension must be odd.
    """
    total = a.n
    m = total - n
    if total % 2 == 0:
        raise ValueError("split_trace needs odd total dimension")
    ps = partial_symbol(a, n)
    acc = {}
    for (I, J), c in ps.coeffs.items():
        ej = CliffordElement.basis(m, J) if m else CliffordElement.scalar(0, 1)
        if n % 2 == 0:
            t = trace_odd(ej, module=module)
        else:
            t = supertrace_even(ej)
        if t:
            acc[I] = acc.get(I, QI(0)) + c * t
    top = acc.get(tuple(range(1, n + 1)), QI(0))
    if n % 2 == 0:
        # module flag already applied inside the odd Cl(m)-factor trace
        pref = QI(0, -2) ** (n // 2)
    else:
        pref = QI(Fraction(-1, 2)) * (QI(0, -2) ** ((n + 1) // 2))
        if module == "S-":
            pref = -pref
    return pref * top


def graded_tensor(a: CliffordElement, b: CliffordElement) -> CliffordElement:
    """Embedding Cl(n) (x) Cl(m) -> Cl(n+m) shifting the second factor.

    On basis monomials the concatenation needs no sign; Koszul signs of the
    graded product are then automatic from the Clifford relations.  Identifies
    gamma_n (x) gamma_m with gamma_{n+m}.
    """
    n, m = a.n, b.n
    out = CliffordElement(n + m, {})
    data = {}
    for I, ca in a.coeffs.items():
        for J, cb in b.coeffs.items():
            K = tuple(list(I) + [j + n for j in J])
            data[K] = data.get(K, QI(0)) + ca * cb
    out.coeffs = {k: v for k, v in data.items() if v}
    return out


def to_complex(a: _GradedElement) -> dict:
    """Float view for numeric modules: multi-index -> python complex."""
    return {k: complex(v) for k, v in a.coeffs.items()}
