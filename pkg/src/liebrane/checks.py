"""Seeded property checks shared by the command line and the test suite.

Each check returns a ``CheckResult`` carrying the worst residual, the
tolerance it was held to and whether it passed.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cohomology import build_cocycle, gji_residual, multibracket_tensor, valid_orders
from .enveloping import (
    PBWEngine,
    Polynomial,
    UEAElement,
    gutt_star,
    kirillov_bracket,
    normal_form,
)
from .lie_core import LieAlgebraData, jacobi_residual

__all__ = [
    "CheckResult",
    "random_polynomial",
    "random_word",
    "corrupt_structure_constants",
    "corrupt_cocycle",
    "check_jacobi",
    "check_gji",
    "check_pbw",
    "check_pbw_exact",
    "check_star_assoc",
    "check_correspondence",
    "CHECKS",
]


@dataclass
class CheckResult:
    name: str
    residual: float
    tol: float
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.residual) and self.residual < self.tol)

    def to_json(self) -> dict:
        return {"name": self.name, "residual": self.residual, "tol": self.tol,
                "passed": self.passed, "details": self.details}


def random_polynomial(rng: np.random.Generator, nvars: int, max_degree: int = 3, max_terms: int = 4) -> Polynomial:
    """Sum of up to ``max_terms`` monomials with normal real coefficients."""
    terms = {}
    for _ in range(int(rng.integers(1, max_terms + 1))):
        deg = int(rng.integers(0, max_degree + 1))
        exps = [0] * nvars
        for v in rng.integers(0, nvars, size=deg):
            exps[v] += 1
        key = (tuple(exps), 0)
        terms[key] = terms.get(key, 0.0) + complex(rng.standard_normal())
    return Polynomial(nvars, terms)


def random_word(rng: np.random.Generator, dim: int, max_len: int = 5, min_len: int = 1) -> tuple:
    n = int(rng.integers(min_len, max_len + 1))
    return tuple(int(a) for a in rng.integers(0, dim, size=n))


def corrupt_structure_constants(g: LieAlgebraData) -> np.ndarray:
    """``f`` with ``f_01^2`` negated in one antisymmetric slot only."""
    f = g.f.copy()
    f[0, 1, 2] = -f[0, 1, 2]
    return f


def corrupt_cocycle(c):
    """Copy of ``c`` with its first largest entry set to zero."""
    key = max(sorted(c.entries), key=lambda k: abs(c.entries[k]))
    return c.with_entry(key, 0.0)


def check_jacobi(g: LieAlgebraData, corrupt: bool = False, tol: float = 1e-10, **_) -> CheckResult:
    f = corrupt_structure_constants(g) if corrupt else g
    return CheckResult("jacobi", jacobi_residual(f), tol, {"n": g.n, "corrupted": corrupt})


def check_gji(g: LieAlgebraData, orders=None, trials: int = 20, seed: int = 42, corrupt: bool = False,
              tol: float = 1e-8, **_) -> CheckResult:
    orders = valid_orders(g.n) if orders is None else list(orders)
    per = {}
    for order in orders:
        c = build_cocycle(g, order)
        if corrupt:
            c = corrupt_cocycle(c)
        per[str(order)] = gji_residual(multibracket_tensor(c), trials, seed)
    return CheckResult("gji", max(per.values()), tol,
                       {"n": g.n, "per_order": per, "trials": trials, "seed": seed, "corrupted": corrupt})


def check_pbw(g: LieAlgebraData, count: int = 200, max_len: int = 5, seed: int = 42, tol: float = 1e-12,
              **_) -> CheckResult:
    """Leftmost vs rightmost rewriting on random unordered words.

    ``details["identical"]`` counts words whose two normal forms agree
    bit for bit.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    same = 0
    for _ in range(count):
        w = random_word(rng, g.dim, max_len)
        e = UEAElement.from_words(g, [(1.0, w)])
        left, right = normal_form(e, "leftmost"), normal_form(e, "rightmost")
        worst = max(worst, left.max_abs_diff(right))
        same += left == right
    return CheckResult("pbw", worst, tol,
                       {"n": g.n, "words": count, "max_len": max_len, "seed": seed, "identical": same})


def check_pbw_exact(g: LieAlgebraData, count: int = 200, max_len: int = 5, seed: int = 42, **_) -> CheckResult:
    """Confluence in exact arithmetic: the residual is the number of words
    whose leftmost and rightmost normal forms differ at all.

    ``details["float_vs_exact"]`` is the largest deviation of the floating
    engine from the exact normal form over the same words.
    """
    rng = np.random.default_rng(seed)
    eng = PBWEngine(g, False, exact=True)
    mismatches = 0
    dev = 0.0
    for _ in range(count):
        w = random_word(rng, g.dim, max_len)
        left = eng.rewrite_normal_form(w, "leftmost")
        right = eng.rewrite_normal_form(w, "rightmost")
        mismatches += left != right
        num = normal_form(UEAElement.from_words(g, [(1.0, w)])).terms
        for key in set(num) | set(left):
            dev = max(dev, abs(complex(left.get(key, 0)) - num.get(key, 0.0)))
    return CheckResult("pbw-exact", float(mismatches), 0.5,
                       {"n": g.n, "words": count, "max_len": max_len, "seed": seed, "float_vs_exact": dev})


def _rel(p: Polynomial, q: Polynomial) -> float:
    scale = max([1.0] + [abs(v) for r in (p, q) for v in r.terms.values()])
    return p.max_abs_diff(q) / scale


def check_star_assoc(g: LieAlgebraData, count: int = 100, max_degree: int = 3, seed: int = 42,
                     tol: float = 1e-12, **_) -> CheckResult:
    """``(f*g)*h == f*(g*h)`` coefficientwise (absolute residual)."""
    rng = np.random.default_rng(seed)
    worst = worst_rel = 0.0
    for _ in range(count):
        a, b, c = (random_polynomial(rng, g.dim, max_degree) for _ in range(3))
        left = gutt_star(gutt_star(a, b, g), c, g)
        right = gutt_star(a, gutt_star(b, c, g), g)
        worst = max(worst, left.max_abs_diff(right))
        worst_rel = max(worst_rel, _rel(left, right))
    return CheckResult("star-assoc", worst, tol,
                       {"n": g.n, "triples": count, "seed": seed, "relative": worst_rel})


def check_correspondence(g: LieAlgebraData, count: int = 100, max_degree: int = 3, seed: int = 42,
                         tol: float = 1e-12, **_) -> CheckResult:
    """hbar^0 of f*g is f g; hbar^1 of the star commutator is i {f, g}."""
    rng = np.random.default_rng(seed)
    r0 = r1 = 0.0
    for _ in range(count):
        a, b = (random_polynomial(rng, g.dim, max_degree) for _ in range(2))
        ab, ba = gutt_star(a, b, g), gutt_star(b, a, g)
        r0 = max(r0, ab.hbar_part(0).max_abs_diff(a * b))
        r1 = max(r1, (ab - ba).hbar_part(1).max_abs_diff(kirillov_bracket(a, b, g).scale(1j)))
    return CheckResult("correspondence", max(r0, r1), tol,
                       {"n": g.n, "pairs": count, "seed": seed, "hbar0": r0, "hbar1": r1})


CHECKS = {
    "jacobi": check_jacobi,
    "gji": check_gji,
    "pbw": check_pbw,
    "pbw-exact": check_pbw_exact,
    "star-assoc": check_star_assoc,
    "correspondence": check_correspondence,
}
