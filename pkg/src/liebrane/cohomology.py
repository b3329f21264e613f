"""Odd cocycles of su(n) and the multibrackets they define.

A cocycle of order ``k = 2j + 1`` is stored sparsely over strictly
increasing index tuples; lookups with any ordering of the indices return
the stored value times the sign of the sorting permutation.  The
multibracket obtained by raising the last index with the inverse metric
has arity ``2j``.

Bracket evaluation avoids the dense ``dim**(2j+1)`` tensor: for a sorted
support tuple ``S`` and an output index ``b`` in ``S`` the antisymmetrised
sum over the remaining ``2j`` indices is the determinant of the
``2j x 2j`` minor of the argument matrix restricted to ``S \\ {b}``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations, permutations
from math import factorial

import numpy as np

from .lie_core import EXACT_TOL, DomainError, LieAlgebraData

__all__ = [
    "Cocycle",
    "MultibracketTensor",
    "build_cocycle",
    "multibracket_tensor",
    "lie_multibracket",
    "gji_residual",
    "gji_sum",
    "coboundary_residual",
    "permutation_sign",
    "valid_orders",
]

# 3-cocycle raw value is -(3/2) f_abc for tr(T_a T_b) = -delta_ab / 2
_OMEGA3_NORM = -2.0 / 3.0
_NONZERO = 1e-8


def permutation_sign(seq) -> int:
    """Sign of the permutation sorting ``seq``; 0 if it has repeats."""
    seq = list(seq)
    if len(set(seq)) != len(seq):
        return 0
    sign = 1
    # count inversions by cycle decomposition of the argsort
    order = sorted(range(len(seq)), key=seq.__getitem__)
    seen = [False] * len(seq)
    for i in range(len(seq)):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = order[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def valid_orders(n: int) -> list[int]:
    return list(range(3, 2 * n, 2))


@dataclass(frozen=True, eq=False)
class Cocycle:
    """Fully antisymmetric form of odd order on the algebra."""

    order: int
    entries: dict
    algebra: LieAlgebraData = field(repr=False)

    def __call__(self, *indices) -> float:
        return self.lookup(indices)

    def lookup(self, indices) -> float:
        if len(indices) != self.order:
            raise DomainError(f"cocycle of order {self.order} got {len(indices)} indices")
        sign = permutation_sign(indices)
        if sign == 0:
            return 0.0
        return sign * self.entries.get(tuple(sorted(indices)), 0.0)

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Support tuples (m, order) and values (m,) in sorted key order."""
        keys = sorted(self.entries)
        if not keys:
            return np.zeros((0, self.order), dtype=int), np.zeros(0)
        return np.array(keys, dtype=int), np.array([self.entries[k] for k in keys])

    def evaluate(self, vectors) -> complex:
        """``omega(Y_1, ..., Y_k)`` for coefficient vectors ``Y_i``."""
        y = np.asarray(vectors)
        tuples, values = self.arrays()
        if len(values) == 0:
            return 0.0
        minors = np.transpose(y[:, tuples], (1, 0, 2))
        return complex(values @ np.linalg.det(minors))

    def with_entry(self, indices, value: float) -> "Cocycle":
        """Copy with one stored entry replaced (used for corruption tests)."""
        key = tuple(sorted(indices))
        entries = dict(self.entries)
        entries[key] = permutation_sign(indices) * value
        return Cocycle(self.order, entries, self.algebra)


@dataclass(frozen=True, eq=False)
class MultibracketTensor:
    """``C_{a_1..a_2j}^b = omega_{a_1..a_2j c} kappa^{cb}``, kept implicit."""

    cocycle: Cocycle

    def __post_init__(self):
        tuples, values = self.cocycle.arrays()
        k = self.cocycle.order
        # (position p moved to the end) -> sign, remaining columns
        plan = []
        for p in range(k):
            rest = [q for q in range(k) if q != p]
            plan.append(((-1) ** (k - 1 - p), tuples[:, p], tuples[:, rest]))
        object.__setattr__(self, "_values", values)
        object.__setattr__(self, "_plan", plan)

    @property
    def arity(self) -> int:
        return self.cocycle.order - 1

    @property
    def algebra(self) -> LieAlgebraData:
        return self.cocycle.algebra

    def lookup(self, lower, b: int) -> float:
        """Component ``C_{lower}^b``."""
        g = self.algebra
        return float(sum(
            self.cocycle.lookup(tuple(lower) + (c,)) * g.metric_inv[c, b]
            for c in range(g.dim)
            if g.metric_inv[c, b] != 0.0
        ))

    def dense(self) -> np.ndarray:
        """Dense ``(dim,)*arity + (dim,)`` array; small algebras only."""
        g = self.algebra
        out = np.zeros((g.dim,) * (self.arity + 1))
        for key, val in self.cocycle.entries.items():
            for perm in permutations(range(len(key))):
                idx = tuple(key[i] for i in perm)
                out[idx] = permutation_sign(perm) * val
        return np.einsum("...c,cb->...b", out, g.metric_inv)

    def lowered(self, xs: np.ndarray) -> np.ndarray:
        """``omega(X_1, .., X_2j, e_c)`` for every basis index ``c``."""
        dim = self.algebra.dim
        dtype = np.result_type(xs.dtype, float)
        out = np.zeros(dim, dtype=dtype)
        if len(self._values) == 0:
            return out
        for sign, last, rest in self._plan:
            minors = np.transpose(xs[:, rest], (1, 0, 2))
            contrib = sign * self._values * np.linalg.det(minors)
            np.add.at(out, last, contrib)
        return out

    def __call__(self, *xs) -> np.ndarray:
        return lie_multibracket(self, *xs)


def _standard_polynomials(mats: np.ndarray, size: int):
    """Memoised ``S(b_1..b_m) = sum_sigma sgn T_{b_sigma(1)} .. T_{b_sigma(m)}``."""
    d = mats.shape[1]
    memo = {(): np.eye(d, dtype=complex)}

    def std(idx: tuple) -> np.ndarray:
        hit = memo.get(idx)
        if hit is not None:
            return hit
        acc = np.zeros((d, d), dtype=complex)
        for p, b in enumerate(idx):
            term = mats[b] @ std(idx[:p] + idx[p + 1:])
            acc = acc + term if p % 2 == 0 else acc - term
        memo[idx] = acc
        return acc

    return std


def build_cocycle(g: LieAlgebraData, order: int) -> Cocycle:
    """Antisymmetrised-trace cocycle of the given odd order.

    ``omega(a_1..a_k) = N * sum_sigma sgn(sigma) tr(T_{a_sigma(1)} ... )``.
    Order 3 is scaled to match ``f_ab^e kappa_ec``; higher orders are scaled
    so that the largest-magnitude entry equals +1.
    """
    valid = valid_orders(g.n)
    if order not in valid:
        raise DomainError(f"cocycle order for su({g.n}) must be one of {valid}, got {order}")
    std = _standard_polynomials(g.basis, order - 1)
    raw = {}
    for key in combinations(range(g.dim), order):
        # trace cyclicity: an odd-length cycle is an even permutation
        val = order * np.trace(g.basis[key[0]] @ std(key[1:]))
        raw[key] = complex(val)
    scale_ref = max((abs(v) for v in raw.values()), default=0.0)
    if scale_ref < _NONZERO:
        raise ArithmeticError(f"antisymmetrised trace of order {order} vanishes for su({g.n})")
    if order == 3:
        norm = _OMEGA3_NORM
    else:
        # first key (sorted order) attaining the max within rounding
        pivot = next(k for k in sorted(raw) if abs(raw[k]) >= scale_ref * (1 - 1e-9))
        norm = 1.0 / raw[pivot]
    entries = {}
    for key, val in raw.items():
        v = val * norm
        if abs(v.imag) > 1e-9 * max(1.0, abs(v)):
            raise ArithmeticError(f"cocycle entry {key} is not real after normalisation: {v}")
        if abs(v.real) > EXACT_TOL:
            entries[key] = float(v.real)
    return Cocycle(order=order, entries=entries, algebra=g)


def multibracket_tensor(c: Cocycle) -> MultibracketTensor:
    return MultibracketTensor(c)


def lie_multibracket(t: MultibracketTensor, *xs) -> np.ndarray:
    """Evaluate ``[X_1, ..., X_2j]`` on coefficient vectors.

    The result is a coefficient vector over the basis; it is complex only
    if an argument is.
    """
    g = t.algebra
    if len(xs) != t.arity:
        raise DomainError(f"bracket of arity {t.arity} got {len(xs)} arguments")
    arr = np.asarray(xs)
    if arr.ndim != 2 or arr.shape[1] != g.dim:
        raise DomainError(f"arguments must be length-{g.dim} coefficient vectors")
    low = t.lowered(arr)
    return low @ g.metric_inv


def _shuffles(total: int, first: int):
    for block in combinations(range(total), first):
        rest = tuple(i for i in range(total) if i not in block)
        yield block, rest, permutation_sign(block + rest)


def gji_sum(t: MultibracketTensor, xs, full: bool = False) -> np.ndarray:
    """Generalised Jacobi sum for ``4j - 1`` arguments.

    With ``full=False`` the sum runs over shuffles (increasing within both
    blocks).  With ``full=True`` it runs over all of ``S_{4j-1}`` and is
    divided by ``(2j)! (2j-1)!``; the two agree by antisymmetry.
    """
    m = t.arity
    xs = np.asarray(xs)
    if xs.shape[0] != 2 * m - 1:
        raise DomainError(f"GJI for arity {m} needs {2 * m - 1} arguments")
    total = np.zeros(t.algebra.dim, dtype=np.result_type(xs.dtype, float))
    if not full:
        for block, rest, sign in _shuffles(2 * m - 1, m):
            inner = lie_multibracket(t, *xs[list(block)])
            total += sign * lie_multibracket(t, inner, *xs[list(rest)])
        return total
    for perm in permutations(range(2 * m - 1)):
        inner = lie_multibracket(t, *xs[list(perm[:m])])
        total += permutation_sign(perm) * lie_multibracket(t, inner, *xs[list(perm[m:])])
    return total / (factorial(m) * factorial(m - 1))


def _unit_vectors(rng: np.random.Generator, count: int, dim: int) -> np.ndarray:
    v = rng.standard_normal((count, dim))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def gji_residual(t: MultibracketTensor, trials: int = 20, seed: int = 42) -> float:
    """Max-norm of the shuffle GJI sum over random unit-norm arguments."""
    if trials < 1:
        raise DomainError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        xs = _unit_vectors(rng, 2 * t.arity - 1, t.algebra.dim)
        worst = max(worst, float(np.max(np.abs(gji_sum(t, xs)))))
    return worst


def coboundary_residual(c: Cocycle, trials: int = 50, seed: int = 42) -> float:
    """Chevalley-Eilenberg differential of ``c`` on random arguments.

    ``(d omega)(X_0..X_k) = sum_{i<j} (-1)^{i+j} omega([X_i, X_j], X_0, ..^i..^j.., X_k)``
    with trivial coefficients.  Returns the max absolute value over trials.
    """
    g = c.algebra
    k = c.order
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        xs = _unit_vectors(rng, k + 1, g.dim)
        total = 0.0
        for i, j in combinations(range(k + 1), 2):
            br = np.einsum("a,b,abc->c", xs[i], xs[j], g.f)
            others = [xs[q] for q in range(k + 1) if q not in (i, j)]
            total += (-1) ** (i + j) * c.evaluate([br] + others)
        worst = max(worst, abs(total))
    return worst
