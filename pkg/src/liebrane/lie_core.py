"""Concrete su(n): basis, structure constants, invariant form and roots.

Conventions
-----------
The basis is ``T_a = -(i/2) lambda_a`` where ``lambda_a`` runs over the
generalised Gell-Mann matrices (normalised by ``tr(lambda_a lambda_b) =
2 delta_ab``).  With this choice

* every ``T_a`` is anti-Hermitian and traceless,
* ``[T_a, T_b] = f_ab^c T_c`` with real ``f``,
* the invariant form ``kappa_ab = -2 tr(T_a T_b)`` is the identity.

Indices are zero-based throughout the package, so the mathematician's
``T_1, T_2, T_3`` of su(2) are ``basis[0], basis[1], basis[2]``.
"""
from __future__ import annotations

import json
from functools import lru_cache
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

__all__ = [
    "MAX_RANK",
    "EXACT_TOL",
    "RESIDUAL_TOL",
    "DomainError",
    "LieAlgebraData",
    "RootSystemData",
    "build_su",
    "structure_constants",
    "jacobi_residual",
    "build_root_system",
    "decompose",
    "killing_form",
    "bracket",
    "algebra_to_json",
    "exact_structure_constants",
]

MAX_RANK = 8
EXACT_TOL = 1e-12
RESIDUAL_TOL = 1e-10

# structure constants below this are construction noise
_F_CLEAN = 1e-14


class DomainError(ValueError):
    """An argument lies outside the domain an operation is defined on."""


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class LieAlgebraData:
    """su(n) in the fundamental representation.

    Attributes
    ----------
    n : int
        Rank parameter of su(n).
    basis : ndarray, shape (dim, d, d)
        Anti-Hermitian traceless basis matrices ``T_a``.
    f : ndarray, shape (dim, dim, dim)
        ``f[a, b, c]`` is the structure constant ``f_ab^c``.
    metric, metric_inv : ndarray, shape (dim, dim)
        ``kappa_ab = -2 tr(T_a T_b)`` and its inverse.
    """

    n: int
    basis: np.ndarray
    f: np.ndarray
    metric: np.ndarray
    metric_inv: np.ndarray
    labels: tuple = field(default=())

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def d(self) -> int:
        return self.basis.shape[1]

    def matrix(self, coeffs) -> np.ndarray:
        """Matrix ``sum_a coeffs[a] T_a``."""
        coeffs = np.asarray(coeffs)
        if coeffs.shape != (self.dim,):
            raise DomainError(f"expected {self.dim} coefficients, got shape {coeffs.shape}")
        return np.tensordot(coeffs, self.basis, axes=1)

    def lower(self, f=None) -> np.ndarray:
        """Structure constants with the upper index lowered: ``f_abc``."""
        f = self.f if f is None else f
        return np.einsum("abe,ec->abc", f, self.metric)


def _gell_mann(n: int) -> tuple[list[np.ndarray], list[str]]:
    # ordering reproduces the Pauli matrices for n=2 and the standard
    # Gell-Mann list for n=3
    mats, labels = [], []
    for k in range(1, n):
        for j in range(k):
            s = np.zeros((n, n), dtype=complex)
            s[j, k] = s[k, j] = 1.0
            mats.append(s)
            labels.append(f"sym({j},{k})")
            a = np.zeros((n, n), dtype=complex)
            a[j, k] = -1j
            a[k, j] = 1j
            mats.append(a)
            labels.append(f"asym({j},{k})")
        diag = np.zeros(n)
        diag[:k] = 1.0
        diag[k] = -k
        mats.append(np.diag(diag * np.sqrt(2.0 / (k * (k + 1)))).astype(complex))
        labels.append(f"diag({k})")
    return mats, labels


def build_su(n: int, max_n: int = MAX_RANK) -> LieAlgebraData:
    """Build su(n) in the fundamental representation.

    The output is deterministic: two calls with the same ``n`` return
    bit-identical arrays.

    Raises
    ------
    DomainError
        If ``n < 2`` or ``n > max_n``.
    """
    if not isinstance(n, (int, np.integer)) or n < 2 or n > max_n:
        raise DomainError(f"su(n) needs 2 <= n <= {max_n}, got n={n!r}")
    n = int(n)
    lams, labels = _gell_mann(n)
    basis = np.array([-0.5j * lam for lam in lams])
    dim = basis.shape[0]

    metric = -2.0 * np.einsum("aij,bji->ab", basis, basis).real
    metric[np.abs(metric) < _F_CLEAN] = 0.0
    metric_inv = np.linalg.inv(metric)

    f = np.zeros((dim, dim, dim))
    for a, b in combinations(range(dim), 2):
        comm = basis[a] @ basis[b] - basis[b] @ basis[a]
        # f_ab^c = kappa^{ce} (-2 tr(comm T_e))
        low = -2.0 * np.einsum("ij,eji->e", comm, basis).real
        row = metric_inv @ low
        row[np.abs(row) < _F_CLEAN] = 0.0
        f[a, b] = row
        f[b, a] = -row
    return LieAlgebraData(
        n=n,
        basis=_readonly(basis),
        f=_readonly(f),
        metric=_readonly(metric),
        metric_inv=_readonly(metric_inv),
        labels=tuple(labels),
    )


@lru_cache(maxsize=None)
def exact_structure_constants(n: int) -> dict:
    """Nonzero ``f_ab^c`` of ``build_su(n)`` as sympy algebraic numbers.

    Same basis and ordering as the floating construction; used where
    rounding would blur an exact identity.
    """
    import sympy

    if n < 2 or n > MAX_RANK:
        raise DomainError(f"su(n) needs 2 <= n <= {MAX_RANK}, got n={n!r}")
    half_i = -sympy.I / 2
    mats = []
    for k in range(1, n):
        for j in range(k):
            s = sympy.zeros(n, n)
            s[j, k] = s[k, j] = 1
            a = sympy.zeros(n, n)
            a[j, k], a[k, j] = -sympy.I, sympy.I
            mats += [s, a]
        dg = [1] * k + [-k] + [0] * (n - k - 1)
        mats.append(sympy.diag(*dg) * sympy.sqrt(sympy.Rational(2, k * (k + 1))))
    basis = [half_i * m for m in mats]
    out = {}
    for a, b in combinations(range(len(basis)), 2):
        comm = basis[a] * basis[b] - basis[b] * basis[a]
        if comm.is_zero_matrix:
            continue
        for c, t in enumerate(basis):
            # kappa is the identity in this basis
            val = sympy.nsimplify(sympy.expand(-2 * (comm * t).trace()))
            if val != 0:
                out[a, b, c] = val
                out[b, a, c] = -val
    return out


def structure_constants(g: LieAlgebraData, a: int, b: int, c: int) -> float:
    """Return ``f_ab^c``."""
    for idx in (a, b, c):
        if not 0 <= idx < g.dim:
            raise DomainError(f"basis index {idx} out of range 0..{g.dim - 1}")
    return float(g.f[a, b, c])


def jacobi_residual(g) -> float:
    """Max-norm of the Jacobi identity over all index quadruples.

    Accepts a ``LieAlgebraData`` or a bare ``(dim, dim, dim)`` tensor.
    """
    f = g.f if isinstance(g, LieAlgebraData) else np.asarray(g)
    t1 = np.einsum("abd,dce->abce", f, f)
    # cyclic images of the first term over (a, b, c)
    res = t1 + t1.transpose(1, 2, 0, 3) + t1.transpose(2, 0, 1, 3)
    return float(np.max(np.abs(res)))


def killing_form(g: LieAlgebraData, x: np.ndarray, y: np.ndarray) -> complex:
    """Invariant form ``<X, Y> = -2 tr(X Y)`` on matrices."""
    return complex(-2.0 * np.trace(x @ y))


def bracket(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return x @ y - y @ x


def decompose(g: LieAlgebraData, m) -> tuple[np.ndarray, complex, np.ndarray]:
    """Split a d x d matrix into basis, trace and residual parts.

    ``m = sum_a coeffs[a] T_a + trace_part * I / d + residual``.  The
    coefficients are complex in general (the complexified algebra spans all
    traceless matrices); they are real whenever ``m`` is anti-Hermitian.
    The residual is what is left after orthogonal projection and is zero up
    to rounding in the fundamental representation.
    """
    m = np.asarray(m)
    d = g.d
    if m.ndim != 2 or m.shape != (d, d):
        raise DomainError(f"expected a {d}x{d} matrix, got shape {m.shape}")
    trace_part = complex(np.trace(m))
    # coefficient a is kappa^{ab} <T_b, m> with the bilinear form -2 tr(T_b m)
    low = -2.0 * np.einsum("bij,ji->b", g.basis, m)
    coeffs = g.metric_inv @ low
    residual = m - np.tensordot(coeffs, g.basis, axes=1) - trace_part * np.eye(d) / d
    return coeffs, trace_part, residual


@dataclass(frozen=True, eq=False)
class RootSystemData:
    """Roots of su(n) with their Chevalley-style generators.

    Roots are integer tuples in the orthonormal ``e_j`` basis of R^n.
    ``raising[alpha]`` is ``e_alpha`` and ``lowering[alpha]`` is
    ``e_{-alpha}`` for each positive root ``alpha``; ``cartan`` is keyed by
    simple roots.
    """

    n: int
    simple_roots: tuple
    positive_roots: tuple
    raising: dict
    lowering: dict
    cartan: dict

    @staticmethod
    def endpoints(root) -> tuple[int, int]:
        """Brane indices ``(j, k)`` of the root ``e_j - e_k``."""
        j = int(np.flatnonzero(np.asarray(root) == 1)[0])
        k = int(np.flatnonzero(np.asarray(root) == -1)[0])
        return j, k


def _root(n: int, j: int, k: int) -> tuple:
    v = [0] * n
    v[j] = 1
    v[k] = -1
    return tuple(v)


def _unit(n: int, j: int, k: int) -> np.ndarray:
    e = np.zeros((n, n), dtype=complex)
    e[j, k] = 1.0
    return e


def build_root_system(g: LieAlgebraData) -> RootSystemData:
    n = g.n
    simple = tuple(_root(n, j, j + 1) for j in range(n - 1))
    positive = tuple(_root(n, j, k) for j, k in combinations(range(n), 2))
    raising, lowering, cartan = {}, {}, {}
    for j, k in combinations(range(n), 2):
        r = _root(n, j, k)
        raising[r] = _readonly(_unit(n, j, k))
        lowering[r] = _readonly(_unit(n, k, j))
    for r in simple:
        cartan[r] = _readonly(raising[r] @ lowering[r] - lowering[r] @ raising[r])
    return RootSystemData(
        n=n,
        simple_roots=simple,
        positive_roots=positive,
        raising=raising,
        lowering=lowering,
        cartan=cartan,
    )


def algebra_to_json(g: LieAlgebraData) -> dict:
    """Serialisable dump of the algebra (sparse structure constants)."""
    basis = [[[[float(z.real), float(z.imag)] for z in row] for row in t] for t in g.basis]
    triples = [
        [int(a), int(b), int(c), float(g.f[a, b, c])]
        for a, b, c in zip(*np.nonzero(g.f))
    ]
    metric = "identity" if np.allclose(g.metric, np.eye(g.dim), atol=EXACT_TOL) else g.metric.tolist()
    return {"n": g.n, "dim": g.dim, "basis": basis, "f": triples, "metric": metric}


def dumps(g: LieAlgebraData) -> str:
    return json.dumps(algebra_to_json(g), indent=1)
