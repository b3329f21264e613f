"""Universal enveloping algebra, polynomial symbols and star products.

Two coupled realisations are provided:

* ``UEAElement`` -- PBW-ordered generator words with coefficients that are
  polynomials in a formal ``hbar``.  With ``quantum=False`` the rewriting
  relation is ``X_a X_b - X_b X_a = f_ab^c X_c``; with ``quantum=True`` it
  is ``X_a X_b - X_b X_a = i hbar f_ab^c X_c``.
* ``Polynomial`` / ``PolyMatrix`` -- polynomials on g* (one variable per
  basis element) and d x d matrices of them.

The star product on polynomials is the PBW-symmetrisation product:
``f * g = unsym(sym(f) sym(g))`` in the quantum algebra.  It is exactly
associative, reduces to the pointwise product at ``hbar^0`` and its
commutator is ``i hbar`` times the Kirillov bracket to first order.

Coefficients are stored flat: a term key is ``(word_or_exponents, k)``
for the monomial times ``hbar**k``.
"""
from __future__ import annotations

from functools import lru_cache
from itertools import product as iproduct
from math import factorial

import numpy as np

from .lie_core import DomainError, LieAlgebraData, exact_structure_constants

__all__ = [
    "MAX_DEGREE",
    "ZERO_TOL",
    "DegreeOverflowError",
    "Polynomial",
    "UEAElement",
    "PolyMatrix",
    "PBWEngine",
    "get_engine",
    "generator",
    "unit",
    "normal_form",
    "uea_multiply",
    "symmetrize",
    "unsymmetrize",
    "gutt_star",
    "kirillov_bracket",
    "moyal_star",
    "poly_matrix_multiply",
    "realize",
    "realize_star",
    "represent",
    "parse_polynomial",
]

MAX_DEGREE = 12
# coefficients below this are treated as exact zeros
ZERO_TOL = 1e-14


class DegreeOverflowError(ArithmeticError):
    """A word or polynomial exceeded the configured degree cap."""


def _acc(target: dict, key, value) -> None:
    # no 0.0 seed, so exact (sympy) values stay exact
    target[key] = target[key] + value if key in target else value


def _prune(terms: dict) -> dict:
    return {k: v for k, v in terms.items() if abs(v) > ZERO_TOL}


# ---------------------------------------------------------------- polynomials


class Polynomial:
    """Sparse polynomial in ``x^1..x^nvars`` with complex hbar-polynomial coefficients.

    ``terms`` maps ``(exponents, k)`` to the complex coefficient of
    ``hbar**k * prod x_i**exponents[i]``.
    """

    __slots__ = ("nvars", "terms")

    def __init__(self, nvars: int, terms=None):
        self.nvars = int(nvars)
        self.terms = _prune(dict(terms)) if terms else {}
        for exps, _ in self.terms:
            if len(exps) != self.nvars:
                raise DomainError(f"exponent tuple {exps} does not have {self.nvars} entries")

    @classmethod
    def constant(cls, nvars: int, value=1.0) -> "Polynomial":
        return cls(nvars, {((0,) * nvars, 0): complex(value)})

    @classmethod
    def variable(cls, nvars: int, i: int, coeff=1.0) -> "Polynomial":
        exps = [0] * nvars
        exps[i] = 1
        return cls(nvars, {(tuple(exps), 0): complex(coeff)})

    @classmethod
    def monomial(cls, exps, coeff=1.0, hbar: int = 0) -> "Polynomial":
        exps = tuple(int(e) for e in exps)
        return cls(len(exps), {(exps, hbar): complex(coeff)})

    def copy(self) -> "Polynomial":
        out = Polynomial(self.nvars)
        out.terms = dict(self.terms)
        return out

    def _check(self, other: "Polynomial") -> None:
        if not isinstance(other, Polynomial):
            raise TypeError(f"expected Polynomial, got {type(other).__name__}")
        if other.nvars != self.nvars:
            raise DomainError(f"variable count mismatch: {self.nvars} vs {other.nvars}")

    def __add__(self, other):
        if not isinstance(other, Polynomial):
            other = Polynomial.constant(self.nvars, other)
        self._check(other)
        out = dict(self.terms)
        for key, val in other.terms.items():
            _acc(out, key, val)
        return Polynomial(self.nvars, out)

    __radd__ = __add__

    def __neg__(self):
        out = Polynomial(self.nvars)
        out.terms = {k: -v for k, v in self.terms.items()}
        return out

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            return self.scale(other)
        self._check(other)
        out = {}
        for (ea, ka), va in self.terms.items():
            for (eb, kb), vb in other.terms.items():
                _acc(out, (tuple(x + y for x, y in zip(ea, eb)), ka + kb), va * vb)
        return Polynomial(self.nvars, out)

    def __rmul__(self, other):
        return self.scale(other)

    def scale(self, c) -> "Polynomial":
        c = complex(c)
        return Polynomial(self.nvars, {k: v * c for k, v in self.terms.items()})

    def __eq__(self, other):
        return isinstance(other, Polynomial) and self.nvars == other.nvars and self.terms == other.terms

    def __bool__(self):
        return bool(self.terms)

    def __repr__(self):
        return f"Polynomial({self.to_text()!r})"

    @property
    def degree(self) -> int:
        """Polynomial degree in the x variables (-1 for zero)."""
        return max((sum(e) for e, _ in self.terms), default=-1)

    @property
    def hbar_degree(self) -> int:
        return max((k for _, k in self.terms), default=-1)

    def hbar_part(self, k: int) -> "Polynomial":
        """Coefficient of ``hbar**k`` (as an hbar-free polynomial)."""
        return Polynomial(self.nvars, {(e, 0): v for (e, kk), v in self.terms.items() if kk == k})

    def truncate(self, max_hbar: int | None) -> "Polynomial":
        if max_hbar is None:
            return self
        return Polynomial(self.nvars, {key: v for key, v in self.terms.items() if key[1] <= max_hbar})

    def shift_hbar(self, k: int) -> "Polynomial":
        return Polynomial(self.nvars, {(e, kk + k): v for (e, kk), v in self.terms.items()})

    def derivative(self, i: int) -> "Polynomial":
        out = {}
        for (e, k), v in self.terms.items():
            if e[i]:
                ne = list(e)
                ne[i] -= 1
                _acc(out, (tuple(ne), k), v * e[i])
        return Polynomial(self.nvars, out)

    def evaluate(self, x, hbar: complex = 0.0) -> complex:
        x = np.asarray(x, dtype=complex)
        total = 0.0
        for (e, k), v in self.terms.items():
            total += v * np.prod(x ** np.asarray(e)) * hbar ** k
        return complex(total)

    def max_abs_diff(self, other: "Polynomial") -> float:
        self._check(other)
        keys = set(self.terms) | set(other.terms)
        return max((abs(self.terms.get(k, 0.0) - other.terms.get(k, 0.0)) for k in keys), default=0.0)

    def to_text(self) -> str:
        """Canonical text: ``coeff * hbar^k * x1^e1 ... xm^em`` joined by `` + ``."""
        if not self.terms:
            return "0"
        parts = []
        for (e, k) in sorted(self.terms, key=lambda key: (sum(key[0]), key[1], key[0])):
            v = complex(self.terms[(e, k)]) + 0.0  # drops signed zeros
            fields = [repr(v.real) if v.imag == 0 else repr(v)]
            if k:
                fields.append(f"hbar^{k}")
            fields.extend(f"x{i + 1}^{p}" for i, p in enumerate(e) if p)
            parts.append(" * ".join(fields))
        return " + ".join(parts)


def parse_polynomial(text: str, nvars: int) -> Polynomial:
    """Inverse of ``Polynomial.to_text``.  A term without a leading
    numeric coefficient (``x1^2 * x3``) has coefficient 1."""
    text = text.strip()
    if text == "0":
        return Polynomial(nvars)
    terms = {}
    # complex reprs contain '+' only inside parentheses
    depth, start, chunks = 0, 0, []
    for pos, ch in enumerate(text):
        depth += ch == "("
        depth -= ch == ")"
        if depth == 0 and text.startswith(" + ", pos):
            chunks.append(text[start:pos])
            start = pos + 3
    chunks.append(text[start:])
    for chunk in chunks:
        fields = [s.strip() for s in chunk.split("*")]
        if fields[0] == "hbar" or fields[0].startswith(("x", "hbar^")):
            fields.insert(0, "1")
        coeff = complex(fields[0])
        k, exps = 0, [0] * nvars
        for fld in fields[1:]:
            name, _, power = fld.partition("^")
            p = int(power) if power else 1
            if name == "hbar":
                k += p
            elif name.startswith("x"):
                i = int(name[1:]) - 1
                if not 0 <= i < nvars:
                    raise DomainError(f"variable {name} outside x1..x{nvars}")
                exps[i] += p
            else:
                raise ValueError(f"cannot parse factor {fld!r}")
        _acc(terms, (tuple(exps), k), coeff)
    return Polynomial(nvars, terms)


# ---------------------------------------------------------------- PBW engine


class PBWEngine:
    """Memoised PBW arithmetic for one algebra and one rewriting relation.

    Parameters
    ----------
    g : LieAlgebraData
    quantum : bool
        Use the ``i hbar``-scaled relation.
    max_hbar : int or None
        Drop every term with a higher power of hbar (exact truncation,
        rewriting only ever raises the hbar power).
    max_degree : int
        Word-length cap; longer words raise ``DegreeOverflowError``.
    exact : bool
        Carry sympy algebraic numbers instead of floats (structure
        constants from ``lie_core.exact_structure_constants``).  Slow; meant
        for verifying rewriting properties without rounding.
    """

    def __init__(self, g: LieAlgebraData, quantum: bool, max_hbar=None, max_degree=MAX_DEGREE,
                 exact: bool = False):
        self.g = g
        self.quantum = bool(quantum)
        self.max_hbar = max_hbar
        self.max_degree = max_degree
        self.exact = exact
        dim = g.dim
        if exact:
            import sympy

            self._one = sympy.Integer(1)
            self._scale = sympy.I if self.quantum else self._one
            f = exact_structure_constants(g.n)
            self.comm = [
                [tuple((c, f[b, a, c]) for c in range(dim) if (b, a, c) in f) for a in range(dim)]
                for b in range(dim)
            ]
        else:
            self._one = 1.0
            self._scale = 1j if self.quantum else 1.0
            # comm[b][a]: [X_b, X_a] = sum_c f_ba^c X_c, stored as (c, value) pairs
            self.comm = [
                [tuple((int(c), float(g.f[b, a, c])) for c in np.flatnonzero(g.f[b, a])) for a in range(dim)]
                for b in range(dim)
            ]
        self._step = 1 if self.quantum else 0
        self._gen_memo: dict = {}
        self._sym_memo: dict = {(): {((), 0): self._one}}
        self._nf_memo: dict = {}

    def _keep(self, k: int) -> bool:
        return self.max_hbar is None or k <= self.max_hbar

    def _check_degree(self, length: int) -> None:
        if length > self.max_degree:
            raise DegreeOverflowError(f"word degree {length} exceeds cap {self.max_degree}")

    def gen_times(self, i: int, word: tuple) -> dict:
        """``X_i * X_word`` in PBW form for a sorted ``word``."""
        key = (i, word)
        hit = self._gen_memo.get(key)
        if hit is not None:
            return hit
        self._check_degree(len(word) + 1)
        if not word or i <= word[0]:
            out = {((i,) + word, 0): self._one}
        else:
            first, rest = word[0], word[1:]
            out = {}
            # X_i X_first rest = X_first (X_i rest) + [X_i, X_first] rest
            for (w, k), c in self.gen_times(i, rest).items():
                for (w2, k2), c2 in self.gen_times(first, w).items():
                    if self._keep(k + k2):
                        _acc(out, (w2, k + k2), c * c2)
            if self._keep(self._step):
                for cc, val in self.comm[i][first]:
                    for (w, k), c in self.gen_times(cc, rest).items():
                        kk = k + self._step
                        if self._keep(kk):
                            _acc(out, (w, kk), self._scale * val * c)
            out = _prune(out)
        self._gen_memo[key] = out
        return out

    def left_multiply_word(self, u: tuple, terms: dict) -> dict:
        """``X_u * element`` for an arbitrary (unsorted) word ``u``."""
        cur = terms
        for letter in reversed(u):
            nxt = {}
            for (w, k), c in cur.items():
                for (w2, k2), c2 in self.gen_times(letter, w).items():
                    if self._keep(k + k2):
                        _acc(nxt, (w2, k + k2), c * c2)
            cur = _prune(nxt)
        return cur

    def multiply(self, a: dict, b: dict) -> dict:
        out = {}
        for (u, ku), cu in a.items():
            for (w, k), c in self.left_multiply_word(u, b).items():
                if self._keep(k + ku):
                    _acc(out, (w, k + ku), cu * c)
        return _prune(out)

    def rewrite_normal_form(self, word: tuple, strategy: str = "leftmost") -> dict:
        """Normal form of one word by adjacent-pair rewriting.

        ``strategy`` picks the leftmost or rightmost descending pair at each
        step; both reach the same result (confluence).
        """
        key = (word, strategy)
        hit = self._nf_memo.get(key)
        if hit is not None:
            return hit
        self._check_degree(len(word))
        descents = [p for p in range(len(word) - 1) if word[p] > word[p + 1]]
        if not descents:
            out = {(word, 0): self._one}
        else:
            if strategy == "leftmost":
                p = descents[0]
            elif strategy == "rightmost":
                p = descents[-1]
            else:
                raise DomainError(f"unknown strategy {strategy!r}")
            b, a = word[p], word[p + 1]
            out = dict(self.rewrite_normal_form(word[:p] + (a, b) + word[p + 2:], strategy))
            if self._keep(self._step):
                for c, val in self.comm[b][a]:
                    sub = self.rewrite_normal_form(word[:p] + (c,) + word[p + 2:], strategy)
                    for (w, k), cv in sub.items():
                        kk = k + self._step
                        if self._keep(kk):
                            _acc(out, (w, kk), self._scale * val * cv)
            out = _prune(out)
        self._nf_memo[key] = out
        return out

    def sym(self, word: tuple) -> dict:
        """PBW form of the symmetrised product of a sorted multiset ``word``.

        Uses ``sym(a_1..a_k) = (1/k) sum_i X_{a_i} sym(a_1..^i..a_k)``.
        """
        hit = self._sym_memo.get(word)
        if hit is not None:
            return hit
        self._check_degree(len(word))
        out = {}
        seen = set()
        for p, letter in enumerate(word):
            if letter in seen:
                continue
            seen.add(letter)
            mult = word.count(letter)
            sub = self.sym(word[:p] + word[p + 1:])
            for (w, k), c in sub.items():
                for (w2, k2), c2 in self.gen_times(letter, w).items():
                    if self._keep(k + k2):
                        _acc(out, (w2, k + k2), mult * c * c2)
        n = len(word)
        out = _prune({key: v / n for key, v in out.items()})
        # the leading word is exactly X_word with unit coefficient
        out[(word, 0)] = self._one
        self._sym_memo[word] = out
        return out

    def unsym(self, terms: dict) -> dict:
        """Invert ``sym`` degree by degree; returns ``{(word, k): c}`` with
        each word read as a monomial."""
        work = dict(terms)
        result = {}
        while work:
            top = max(len(w) for w, _ in work)
            layer = [(key, v) for key, v in work.items() if len(key[0]) == top]
            for key, _ in layer:
                del work[key]
            for (w, k), c in layer:
                _acc(result, (w, k), c)
                for (w2, k2), c2 in self.sym(w).items():
                    if len(w2) == top or not self._keep(k + k2):
                        continue
                    _acc(work, (w2, k + k2), -c * c2)
            work = _prune(work)
        return _prune(result)


@lru_cache(maxsize=64)
def get_engine(g: LieAlgebraData, quantum: bool, max_hbar=None, max_degree: int = MAX_DEGREE) -> PBWEngine:
    return PBWEngine(g, quantum, max_hbar, max_degree)


# ---------------------------------------------------------------- UEA elements


class UEAElement:
    """Element of U(g) in PBW normal form.

    ``terms`` maps ``(word, k)`` to the coefficient of ``hbar**k X_word``.
    Construct unordered input with ``UEAElement.from_words`` and call
    ``normal_form``.
    """

    __slots__ = ("algebra", "quantum", "terms")

    def __init__(self, algebra: LieAlgebraData, terms=None, quantum: bool = False):
        self.algebra = algebra
        self.quantum = bool(quantum)
        self.terms = _prune(dict(terms)) if terms else {}

    @classmethod
    def from_words(cls, algebra, words, quantum=False) -> "UEAElement":
        """Build from ``[(coeff, word), ...]`` or ``[(coeff, word, k), ...]``
        without reordering; pass through ``normal_form`` before use."""
        out = {}
        for item in words:
            coeff, word = item[0], tuple(int(a) for a in item[1])
            k = item[2] if len(item) > 2 else 0
            _acc(out, (word, k), complex(coeff))
        return cls(algebra, out, quantum)

    @classmethod
    def from_vector(cls, algebra, coeffs, quantum=False) -> "UEAElement":
        return cls(algebra, {((a,), 0): complex(c) for a, c in enumerate(coeffs) if c != 0}, quantum)

    @property
    def flag(self) -> str:
        return "quantum" if self.quantum else "classical"

    def is_normal(self) -> bool:
        return all(list(w) == sorted(w) for w, _ in self.terms)

    def _like(self, terms) -> "UEAElement":
        return UEAElement(self.algebra, terms, self.quantum)

    def _check(self, other: "UEAElement") -> None:
        if not isinstance(other, UEAElement):
            raise TypeError(f"expected UEAElement, got {type(other).__name__}")
        if other.algebra is not self.algebra:
            raise DomainError("elements belong to different algebras")
        if other.quantum != self.quantum:
            raise DomainError(f"deformation mismatch: {self.flag} vs {other.flag}")

    def __add__(self, other):
        self._check(other)
        out = dict(self.terms)
        for key, v in other.terms.items():
            _acc(out, key, v)
        return self._like(out)

    def __neg__(self):
        return self._like({k: -v for k, v in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "UEAElement":
        return self._like({k: v * complex(c) for k, v in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, UEAElement):
            return uea_multiply(self, other)
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def __eq__(self, other):
        return (
            isinstance(other, UEAElement)
            and other.algebra is self.algebra
            and other.quantum == self.quantum
            and other.terms == self.terms
        )

    def __repr__(self):
        body = " + ".join(
            f"({v:.6g})" + (f"*hbar^{k}" if k else "") + "*X" + "X".join(map(str, w)) if w else f"({v:.6g})"
            for (w, k), v in sorted(self.terms.items())
        )
        return f"UEAElement[{self.flag}]({body or '0'})"

    @property
    def degree(self) -> int:
        return max((len(w) for w, _ in self.terms), default=-1)

    def max_abs_diff(self, other: "UEAElement") -> float:
        keys = set(self.terms) | set(other.terms)
        return max((abs(self.terms.get(k, 0.0) - other.terms.get(k, 0.0)) for k in keys), default=0.0)

    def hbar_part(self, k: int) -> "UEAElement":
        return self._like({(w, 0): v for (w, kk), v in self.terms.items() if kk == k})


def generator(g: LieAlgebraData, a: int, quantum: bool = False) -> UEAElement:
    return UEAElement(g, {((a,), 0): 1.0}, quantum)


def unit(g: LieAlgebraData, quantum: bool = False) -> UEAElement:
    return UEAElement(g, {((), 0): 1.0}, quantum)


def normal_form(e: UEAElement, strategy: str = "leftmost", max_degree: int = MAX_DEGREE) -> UEAElement:
    """Rewrite every word into non-decreasing order."""
    eng = get_engine(e.algebra, e.quantum, None, max_degree)
    out = {}
    for (w, k), c in e.terms.items():
        for (w2, k2), c2 in eng.rewrite_normal_form(w, strategy).items():
            _acc(out, (w2, k + k2), c * c2)
    return e._like(out)


def uea_multiply(a: UEAElement, b: UEAElement, max_degree: int = MAX_DEGREE) -> UEAElement:
    a._check(b)
    eng = get_engine(a.algebra, a.quantum, None, max_degree)
    return a._like(eng.multiply(a.terms, _normal_terms(b, eng)))


def _normal_terms(e: UEAElement, eng: PBWEngine) -> dict:
    if e.is_normal():
        return e.terms
    out = {}
    for (w, k), c in e.terms.items():
        for (w2, k2), c2 in eng.left_multiply_word(w, {((), 0): 1.0}).items():
            _acc(out, (w2, k + k2), c * c2)
    return _prune(out)


def _word_of(exps) -> tuple:
    return tuple(i for i, p in enumerate(exps) for _ in range(p))


def _exps_of(word, nvars) -> tuple:
    e = [0] * nvars
    for a in word:
        e[a] += 1
    return tuple(e)


def symmetrize(p: Polynomial, g: LieAlgebraData, quantum: bool = True, max_degree: int = MAX_DEGREE) -> UEAElement:
    """Map ``x^{a_1}..x^{a_k}`` to the average of all orderings of ``X_{a_1}..X_{a_k}``."""
    if p.nvars != g.dim:
        raise DomainError(f"polynomial has {p.nvars} variables, algebra has dim {g.dim}")
    eng = get_engine(g, quantum, None, max_degree)
    out = {}
    for (e, k), c in p.terms.items():
        for (w, k2), c2 in eng.sym(_word_of(e)).items():
            _acc(out, (w, k + k2), c * c2)
    return UEAElement(g, out, quantum)


def unsymmetrize(e: UEAElement, max_degree: int = MAX_DEGREE) -> Polynomial:
    """Two-sided inverse of ``symmetrize``."""
    eng = get_engine(e.algebra, e.quantum, None, max_degree)
    terms = eng.unsym(e.terms)
    dim = e.algebra.dim
    return Polynomial(dim, {(_exps_of(w, dim), k): c for (w, k), c in terms.items()})


def kirillov_bracket(f: Polynomial, h: Polynomial, g: LieAlgebraData) -> Polynomial:
    """``{f, h}(x) = sum f^{jm}_k x^k d_j f d_m h`` (indices raised with kappa^-1)."""
    f._check(h)
    if f.nvars != g.dim:
        raise DomainError(f"polynomials have {f.nvars} variables, algebra has dim {g.dim}")
    dim = g.dim
    # f^{jm}_k = kappa^{ja} kappa^{mb} f_ab^k
    omega = np.einsum("ja,mb,abk->jmk", g.metric_inv, g.metric_inv, g.f)
    df = [f.derivative(j) for j in range(dim)]
    dh = [h.derivative(m) for m in range(dim)]
    out = Polynomial(dim)
    for j in range(dim):
        if not df[j]:
            continue
        for m in range(dim):
            if not dh[m]:
                continue
            lin = {}
            for k in np.flatnonzero(omega[j, m]):
                exps = [0] * dim
                exps[k] = 1
                lin[(tuple(exps), 0)] = complex(omega[j, m, k])
            if lin:
                out = out + Polynomial(dim, lin) * (df[j] * dh[m])
    return out


def gutt_star(
    f: Polynomial,
    h: Polynomial,
    g: LieAlgebraData,
    max_hbar: int | None = None,
    max_degree: int = MAX_DEGREE,
) -> Polynomial:
    """Exact PBW-symmetrisation star product on g*.

    With ``max_hbar`` set, every term above that power of hbar is dropped.
    Orders 0 and 1 use the closed form ``f h + (i hbar / 2) {f, h}``, which
    is what the PBW route yields modulo ``hbar^2``.
    """
    f._check(h)
    if f.nvars != g.dim:
        raise DomainError(f"polynomials have {f.nvars} variables, algebra has dim {g.dim}")
    if max_hbar == 0:
        return (f * h).truncate(0)
    if max_hbar == 1:
        return (f * h + kirillov_bracket(f, h, g).scale(0.5j).shift_hbar(1)).truncate(1)
    eng = get_engine(g, True, max_hbar, max_degree)
    sf = _sym_terms(f, eng)
    sh = _sym_terms(h, eng)
    prod = eng.multiply(sf, sh)
    terms = eng.unsym(prod)
    return Polynomial(g.dim, {(_exps_of(w, g.dim), k): c for (w, k), c in terms.items()})


def _sym_terms(p: Polynomial, eng: PBWEngine) -> dict:
    out = {}
    for (e, k), c in p.terms.items():
        for (w, k2), c2 in eng.sym(_word_of(e)).items():
            if eng._keep(k + k2):
                _acc(out, (w, k + k2), c * c2)
    return _prune(out)


def moyal_star(f: Polynomial, h: Polynomial, omega) -> Polynomial:
    """Moyal product ``f exp(i hbar <-d_j Omega^{jm} ->d_m) h`` for constant ``Omega``.

    With ``Omega = [[0, 1], [-1, 0]]`` the commutator ``x*p - p*x`` is
    ``2 i hbar``; pass ``Omega / 2`` for the convention giving ``i hbar``.
    """
    f._check(h)
    omega = np.asarray(omega, dtype=float)
    if omega.shape != (f.nvars, f.nvars):
        raise DomainError(f"Omega must be {f.nvars}x{f.nvars}, got {omega.shape}")
    if not np.allclose(omega, -omega.T, atol=1e-14):
        raise DomainError("Omega must be antisymmetric")
    pairs = [(j, m, omega[j, m]) for j in range(f.nvars) for m in range(f.nvars) if omega[j, m] != 0]
    # bilinear terms kept as (left poly, right poly) lists per order
    level = [(f, h)]
    out = f * h
    order = 0
    while level:
        order += 1
        nxt = []
        for a, b in level:
            for j, m, w in pairs:
                da, db = a.derivative(j), b.derivative(m)
                if da and db:
                    nxt.append((da.scale(w), db))
        if not nxt:
            break
        coeff = (1j) ** order / factorial(order)
        acc = Polynomial(f.nvars)
        for a, b in nxt:
            acc = acc + a * b
        out = out + acc.scale(coeff).shift_hbar(order)
        level = nxt
    return out


# ---------------------------------------------------------------- poly matrices


class PolyMatrix:
    """d x d matrix with ``Polynomial`` entries."""

    __slots__ = ("entries", "nvars")

    def __init__(self, entries, nvars: int | None = None):
        rows = [list(r) for r in entries]
        if not rows or any(len(r) != len(rows) for r in rows):
            raise DomainError("PolyMatrix must be square and non-empty")
        self.nvars = nvars if nvars is not None else rows[0][0].nvars
        for r in rows:
            for p in r:
                if p.nvars != self.nvars:
                    raise DomainError("entries disagree on the variable count")
        self.entries = rows

    @classmethod
    def zeros(cls, d: int, nvars: int) -> "PolyMatrix":
        return cls([[Polynomial(nvars) for _ in range(d)] for _ in range(d)], nvars)

    @classmethod
    def identity(cls, d: int, nvars: int) -> "PolyMatrix":
        return cls.from_numeric(np.eye(d), nvars)

    @classmethod
    def from_numeric(cls, m, nvars: int) -> "PolyMatrix":
        m = np.asarray(m, dtype=complex)
        zero = (0,) * nvars
        return cls([[Polynomial(nvars, {(zero, 0): m[j, k]}) for k in range(m.shape[1])] for j in range(m.shape[0])], nvars)

    @property
    def d(self) -> int:
        return len(self.entries)

    def __getitem__(self, jk) -> Polynomial:
        j, k = jk
        return self.entries[j][k]

    def map(self, fn) -> "PolyMatrix":
        return PolyMatrix([[fn(p) for p in row] for row in self.entries], self.nvars)

    def __add__(self, other: "PolyMatrix") -> "PolyMatrix":
        self._check(other)
        return PolyMatrix([[a + b for a, b in zip(ra, rb)] for ra, rb in zip(self.entries, other.entries)], self.nvars)

    def __sub__(self, other: "PolyMatrix") -> "PolyMatrix":
        self._check(other)
        return PolyMatrix([[a - b for a, b in zip(ra, rb)] for ra, rb in zip(self.entries, other.entries)], self.nvars)

    def __neg__(self):
        return self.map(lambda p: -p)

    def scale(self, c) -> "PolyMatrix":
        return self.map(lambda p: p.scale(c))

    def _check(self, other: "PolyMatrix") -> None:
        if not isinstance(other, PolyMatrix):
            raise TypeError(f"expected PolyMatrix, got {type(other).__name__}")
        if other.d != self.d or other.nvars != self.nvars:
            raise DomainError(f"shape mismatch: {self.d}x{self.d}/{self.nvars} vs {other.d}x{other.d}/{other.nvars}")

    def __eq__(self, other):
        return isinstance(other, PolyMatrix) and self.entries == other.entries

    def evaluate(self, x, hbar: complex = 0.0) -> np.ndarray:
        return np.array([[p.evaluate(x, hbar) for p in row] for row in self.entries])

    def hbar_part(self, k: int) -> "PolyMatrix":
        return self.map(lambda p: p.hbar_part(k))

    def truncate(self, max_hbar) -> "PolyMatrix":
        return self.map(lambda p: p.truncate(max_hbar))

    @property
    def degree(self) -> int:
        return max(p.degree for row in self.entries for p in row)

    def max_abs_diff(self, other: "PolyMatrix") -> float:
        self._check(other)
        return max(a.max_abs_diff(b) for ra, rb in zip(self.entries, other.entries) for a, b in zip(ra, rb))

    def constant_part(self) -> np.ndarray:
        """Numeric matrix of the ``x^0 hbar^0`` coefficients."""
        zero = ((0,) * self.nvars, 0)
        return np.array([[p.terms.get(zero, 0.0) for p in row] for row in self.entries], dtype=complex)

    def __repr__(self):
        return f"PolyMatrix(d={self.d}, nvars={self.nvars}, degree={self.degree})"


def poly_matrix_multiply(
    F: PolyMatrix,
    G: PolyMatrix,
    mode: str = "pointwise",
    algebra: LieAlgebraData | None = None,
    max_hbar: int | None = None,
    max_degree: int = MAX_DEGREE,
) -> PolyMatrix:
    """``(F o G)_jk = sum_m F_jm o G_mk`` with o the pointwise or star product."""
    F._check(G)
    d = F.d
    if mode == "pointwise":
        def mult(a, b):
            return (a * b).truncate(max_hbar)
    elif mode == "star":
        if algebra is None:
            raise DomainError("star mode needs the algebra")
        def mult(a, b):
            return gutt_star(a, b, algebra, max_hbar, max_degree)
    else:
        raise DomainError(f"unknown mode {mode!r}")
    rows = []
    for j in range(d):
        row = []
        for k in range(d):
            acc = Polynomial(F.nvars)
            for m in range(d):
                a, b = F.entries[j][m], G.entries[m][k]
                if a and b:
                    acc = acc + mult(a, b)
            row.append(acc)
        rows.append(row)
    return PolyMatrix(rows, F.nvars)


def represent(g: LieAlgebraData, e: UEAElement) -> np.ndarray:
    """Numeric image of a classical element under the fundamental representation."""
    if e.quantum:
        raise DomainError("the fundamental representation is defined on classical elements")
    d = g.d
    out = np.zeros((d, d), dtype=complex)
    for (w, k), c in e.terms.items():
        if k:
            raise DomainError("classical element carries hbar terms")
        m = np.eye(d, dtype=complex)
        for a in w:
            m = m @ g.basis[a]
        out += c * m
    return out


def realize(g: LieAlgebraData, e: UEAElement) -> PolyMatrix:
    """Polynomial-matrix image: ``X_a -> x^a T_a``, words by pointwise products."""
    if e.quantum:
        raise DomainError("realize takes classical elements; use realize_star for quantum words")
    dim, d = g.dim, g.d
    acc = [[{} for _ in range(d)] for _ in range(d)]
    for (w, k), c in e.terms.items():
        m = np.eye(d, dtype=complex)
        for a in w:
            m = m @ g.basis[a]
        exps = _exps_of(w, dim)
        for j, l in iproduct(range(d), range(d)):
            if m[j, l] != 0:
                _acc(acc[j][l], (exps, k), c * m[j, l])
    return PolyMatrix([[Polynomial(dim, acc[j][l]) for l in range(d)] for j in range(d)], dim)


def realize_star(g: LieAlgebraData, e: UEAElement, max_hbar: int | None = None, max_degree: int = MAX_DEGREE) -> PolyMatrix:
    """Image of a word sum with star-mode products of the generator images."""
    dim, d = g.dim, g.d
    gens = [realize(g, generator(g, a)) for a in range(dim)]
    total = PolyMatrix.zeros(d, dim)
    for (w, k), c in sorted(e.terms.items()):
        m = PolyMatrix.identity(d, dim)
        for a in w:
            m = poly_matrix_multiply(m, gens[a], "star", g, max_hbar, max_degree)
        total = total + m.map(lambda p: p.scale(c).shift_hbar(k).truncate(max_hbar))
    return total
