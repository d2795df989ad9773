"""Matrix spinor representations and the relative supertrace.

The even representation is the usual Pauli tensor construction on (C^2)^{(x)k},
with generators squaring to -1.  Entries are Gaussian integers, so products of
generators and the grading are exact in complex128.  Odd dimensions are
represented on the positive chirality half of the next even representation.
"""

from __future__ import annotations

import numpy as np

from .clifford import CliffordElement, chirality

MAX_DIM = 12  # 2^6 = 64-dim matrices at most; larger blows up memory/time

_SX = np.array([[0, 1], [1, 0]], dtype=complex)
_SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
_SZ = np.array([[1, 0], [0, -1]], dtype=complex)
_ID = np.eye(2, dtype=complex)


class SpinorRep:
    """Irreducible Cl(2k) module with grading; n = 2k even."""

    def __init__(self, n: int):
        if n % 2 or n < 2:
            raise ValueError("SpinorRep needs even n >= 2")
        if n > MAX_DIM:
            raise ValueError(f"n={n} exceeds the matrix representation cap {MAX_DIM}")
        k = n // 2
        self.n = n
        self.k = k
        self.dim = 2 ** k
        gens = []
        for j in range(1, k + 1):
            pre = [_SZ] * (j - 1)
            post = [_ID] * (k - j)
            gens.append(_kron(pre + [1j * _SX] + post))
            gens.append(_kron(pre + [1j * _SY] + post))
        self.generators = gens
        g = np.eye(self.dim, dtype=complex)
        for M in gens:
            g = g @ M
        self.grading = (1j ** k) * g

    def represent(self, a: CliffordElement) -> np.ndarray:
        if a.n != self.n:
            raise ValueError("dimension mismatch")
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for idx, c in a.coeffs.items():
            M = np.eye(self.dim, dtype=complex)
            for i in idx:
                M = M @ self.generators[i - 1]
            out += complex(c) * M
        return out

    def matrix_supertrace(self, a: CliffordElement) -> complex:
        return complex(np.trace(self.grading @ self.represent(a)))


class OddSpinorRep:
    """Cl(n) for odd n acting on S+ of Cl(n+1), via e_i -> -e_0 e_i.

    The generator matrices are the restrictions to the +1 chirality eigenspace;
    they are computed numerically, so identities hold to float precision.
    """

    def __init__(self, n: int, module: str = "S+"):
        if n % 2 == 0 or n < 1:
            raise ValueError("OddSpinorRep needs odd n")
        if n + 1 > MAX_DIM:
            raise ValueError(f"n={n} exceeds the matrix representation cap")
        big = SpinorRep(n + 1)
        w, V = np.linalg.eigh(big.grading)
        sign = 1.0 if module == "S+" else -1.0
        cols = [i for i in range(len(w)) if abs(w[i] - sign) < 1e-9]
        P = V[:, cols]  # isometry onto the chosen chirality eigenspace
        e0 = big.generators[0]
        self.n = n
        self.dim = P.shape[1]
        self.generators = [P.conj().T @ (-(e0 @ big.generators[i])) @ P
                           for i in range(1, n + 1)]

    def represent(self, a: CliffordElement) -> np.ndarray:
        if a.n != self.n:
            raise ValueError("dimension mismatch")
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for idx, c in a.coeffs.items():
            M = np.eye(self.dim, dtype=complex)
            for i in idx:
                M = M @ self.generators[i - 1]
            out += complex(c) * M
        return out

    def matrix_trace(self, a: CliffordElement) -> complex:
        return complex(np.trace(self.represent(a)))


def _kron(mats):
    out = mats[0]
    for M in mats[1:]:
        out = np.kron(out, M)
    return out


def spinor_rep(n: int) -> SpinorRep:
    return SpinorRep(n)


def relative_supertrace(rep: SpinorRep, w_grading: np.ndarray, A: np.ndarray,
                        tol: float = 1e-10) -> complex:
    """str'(A) = 2^{-k} tr(R' A) on S (x) W, with R' = (chirality) (x) (W grading).

    A must commute with every represented generator acting as g (x) Id_W;
    violations beyond tol are rejected.
    """
    w_grading = np.asarray(w_grading, dtype=complex)
    dw = w_grading.shape[0]
    A = np.asarray(A, dtype=complex)
    if A.shape != (rep.dim * dw, rep.dim * dw):
        raise ValueError("operator shape does not match S (x) W")
    idw = np.eye(dw)
    for g in rep.generators:
        G = np.kron(g, idw)
        defect = np.max(np.abs(G @ A - A @ G))
        if defect > tol * max(1.0, np.max(np.abs(A))):
            raise ValueError(f"operator does not commute with the Clifford action "
                             f"(defect {defect:.2e})")
    Rp = np.kron(np.eye(rep.dim), w_grading)
    return complex(np.trace(Rp @ A)) / rep.dim
