"""Leibniz-extended multibrackets and the evolution equations they drive.

The bracket ``{F, H_2, ..., H_2j}`` is expanded slot by slot with the
derivation rule: a word ``P X Q`` in a slot contributes ``P {.., X, ..} Q``.
Slots are expanded in a fixed nesting order (slot 1 outermost by default),
so for two words in slots 1 and 2 the term with letters ``X`` and ``Y`` is
``P1 P2 {X, Y} Q2 Q1``.  ``nesting="symmetric"`` averages over every order
of the slots instead.

For the matrix dynamics the observable ``F`` enters through its projection
onto the algebra (``lie_core.decompose``); the identity part is killed by
the derivation and any residual is reported with a warning.  The bracket is
linear in ``F`` for fixed Hamiltonians, so it is assembled once per
Hamiltonian list as a ``BracketOperator`` and the RK4 integrator only
applies that operator.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from itertools import permutations, product
from math import factorial

import numpy as np

from .cohomology import MultibracketTensor, lie_multibracket
from .enveloping import (
    MAX_DEGREE,
    DegreeOverflowError,
    PolyMatrix,
    Polynomial,
    UEAElement,
    generator,
    get_engine,
    poly_matrix_multiply,
    realize,
    represent,
)
from .lie_core import DomainError, LieAlgebraData, decompose

__all__ = [
    "RESIDUAL_WARN",
    "HamiltonianSlot",
    "FlowState",
    "PolyFlowState",
    "BracketOperator",
    "IntegrationAborted",
    "ProjectionResidualWarning",
    "make_slot",
    "leibniz_multibracket",
    "binary_bracket_matrix",
    "bracket_operator",
    "multibracket_matrix",
    "multibracket_polymatrix",
    "evolve_classical",
    "evolve_polymatrix",
    "evolve_quantum",
]

RESIDUAL_WARN = 1e-8


class ProjectionResidualWarning(UserWarning):
    """Part of F lies outside span(basis) + identity and was discarded."""


class IntegrationAborted(RuntimeError):
    """Non-finite values appeared; ``state`` holds the trajectory up to the last good step."""

    def __init__(self, message: str, state=None):
        super().__init__(message)
        self.state = state


@dataclass(frozen=True, eq=False)
class HamiltonianSlot:
    word: UEAElement
    matrix: np.ndarray
    label: str = ""


def make_slot(g: LieAlgebraData, word: UEAElement, label: str = "") -> HamiltonianSlot:
    """Slot whose matrix is the representation image of ``word``."""
    if word.quantum:
        raise DomainError("Hamiltonian words are classical elements")
    m = represent(g, word)
    m.setflags(write=False)
    return HamiltonianSlot(word=word, matrix=m, label=label)


def _as_element(g, slot, quantum) -> UEAElement:
    if isinstance(slot, UEAElement):
        if slot.algebra is not g:
            raise DomainError("slot element belongs to another algebra")
        return slot
    if isinstance(slot, HamiltonianSlot):
        return slot.word
    vec = np.asarray(slot)
    if vec.shape != (g.dim,):
        raise DomainError(f"slot vectors must have length {g.dim}")
    return UEAElement.from_vector(g, vec, quantum)


def _expansions(e: UEAElement):
    """``(coeff, k, prefix, letter, suffix)`` for every letter of every word."""
    out = []
    for (w, k), c in sorted(e.terms.items()):
        for p in range(len(w)):
            out.append((c, k, w[:p], w[p], w[p + 1:]))
    return out


def _nesting_orders(m: int, nesting) -> list[tuple]:
    if nesting == "canonical":
        return [tuple(range(m))]
    if nesting == "symmetric":
        return list(permutations(range(m)))
    order = tuple(nesting)
    if sorted(order) != list(range(m)):
        raise DomainError(f"nesting must be a permutation of range({m})")
    return [order]


def leibniz_multibracket(t: MultibracketTensor, slots, quantum: bool | None = None, nesting="canonical") -> UEAElement:
    """Multibracket of enveloping-algebra arguments.

    Each slot is a coefficient vector, a ``UEAElement`` or a
    ``HamiltonianSlot``.  Words are expanded by the derivation rule down to
    single letters, where the cocycle bracket applies.
    """
    g = t.algebra
    if len(slots) != t.arity:
        raise DomainError(f"bracket of arity {t.arity} got {len(slots)} slots")
    if quantum is None:
        quantum = any(isinstance(s, UEAElement) and s.quantum for s in slots)
    elems = [_as_element(g, s, quantum) for s in slots]
    for e in elems:
        if e.quantum != quantum:
            raise DomainError("slots mix classical and quantum elements")
    eng = get_engine(g, quantum)
    dim = g.dim
    eye = np.eye(dim)
    base_cache: dict = {}
    exps = [_expansions(e) for e in elems]
    orders = _nesting_orders(t.arity, nesting)
    out: dict = {}
    for order in orders:
        for combo in product(*exps):
            coeff = 1.0
            kk = 0
            for c, k, *_ in combo:
                coeff *= c
                kk += k
            letters = tuple(item[3] for item in combo)
            base = base_cache.get(letters)
            if base is None:
                base = lie_multibracket(t, *eye[list(letters)])
                base_cache[letters] = base
            pre = sum((combo[s][2] for s in order), ())
            suf = sum((combo[s][4] for s in reversed(order)), ())
            for e_idx in np.flatnonzero(np.abs(base) > 0):
                word = pre + (int(e_idx),) + suf
                for (w, k2), c2 in eng.left_multiply_word(word, {((), 0): 1.0}).items():
                    key = (w, kk + k2)
                    out[key] = out.get(key, 0.0) + coeff * base[e_idx] * c2 / len(orders)
    return UEAElement(g, out, quantum)


def binary_bracket_matrix(F, H) -> np.ndarray:
    """``F H - H F``.

    The Leibniz extension of the arity-2 bracket is the commutator on all of
    U(g), so this is the exact representation image of the binary bracket.
    """
    hm = H.matrix if isinstance(H, HamiltonianSlot) else np.asarray(H)
    F = np.asarray(F)
    if F.shape != hm.shape or F.ndim != 2:
        raise DomainError(f"shape mismatch: {F.shape} vs {hm.shape}")
    return F @ hm - hm @ F


def _word_matrix(g: LieAlgebraData, word: tuple, cache: dict) -> np.ndarray:
    m = cache.get(word)
    if m is None:
        m = np.eye(g.d, dtype=complex)
        for a in word:
            m = m @ g.basis[a]
        cache[word] = m
    return m


@dataclass(frozen=True, eq=False)
class BracketOperator:
    """``F -> {proj F, H_2, .., H_2j}`` as a linear map on d x d matrices.

    ``images[a]`` is the bracket with the basis element ``T_a`` in the first
    slot.
    """

    algebra: LieAlgebraData
    images: np.ndarray
    labels: tuple = field(default=())

    @property
    def matrix(self) -> np.ndarray:
        """Matrix acting on row-major ``vec(F)`` (size d^2 x d^2)."""
        g = self.algebra
        d = g.d
        # coefficient a of F is  -2 kappa^{ab} tr(T_b F)
        func = -2.0 * np.einsum("ab,bij->aji", g.metric_inv, g.basis).reshape(g.dim, d * d)
        return self.images.reshape(g.dim, d * d).T @ func

    def __call__(self, F) -> np.ndarray:
        coeffs, _, residual = decompose(self.algebra, F)
        res = float(np.max(np.abs(residual)))
        if res > RESIDUAL_WARN:
            warnings.warn(f"projection residual {res:.3g} discarded", ProjectionResidualWarning, stacklevel=2)
        return np.tensordot(coeffs, self.images, axes=1)


def bracket_operator(t: MultibracketTensor, hams, nesting="canonical") -> BracketOperator:
    """Assemble the linear map ``F -> {F, hams...}`` through the representation."""
    g = t.algebra
    if len(hams) != t.arity - 1:
        raise DomainError(f"bracket of arity {t.arity} needs {t.arity - 1} Hamiltonians, got {len(hams)}")
    d, dim = g.d, g.dim
    words = [_as_element(g, h, False) for h in hams]
    cache: dict = {}
    # per slot and letter: superoperator sum_c c P (x) Q^T on row-major vec
    sup = []
    for w in words:
        table: dict = {}
        for c, k, pre, letter, suf in _expansions(w):
            if k:
                raise DomainError("Hamiltonian words must be classical")
            op = c * np.kron(_word_matrix(g, pre, cache), _word_matrix(g, suf, cache).T)
            table[letter] = table.get(letter, 0.0) + op
        sup.append(table)
    eye = np.eye(dim)
    vec_basis = g.basis.reshape(dim, d * d)
    orders = _nesting_orders(len(words), nesting)
    images = np.zeros((dim, d * d), dtype=complex)
    letter_sets = [sorted(tab) for tab in sup]
    for a in range(dim):
        for letters in product(*letter_sets):
            base = lie_multibracket(t, eye[a], *eye[list(letters)])
            if not np.any(base):
                continue
            vec = base @ vec_basis
            for order in orders:
                v = vec
                # innermost slot acts first
                for s in reversed(order):
                    v = sup[s][letters[s]] @ v
                images[a] += v / len(orders)
    labels = tuple(getattr(h, "label", "") for h in hams)
    return BracketOperator(g, images.reshape(dim, d, d), labels)


def multibracket_matrix(t: MultibracketTensor, F, hams, nesting="canonical") -> np.ndarray:
    """``{F, H_2, ..., H_2j}`` on a numeric matrix ``F``.

    Warns with ``ProjectionResidualWarning`` when ``F`` has a component
    outside span(basis) + identity above 1e-8.
    """
    F = np.asarray(F)
    g = t.algebra
    if F.shape != (g.d, g.d):
        raise DomainError(f"F must be {g.d}x{g.d}")
    return bracket_operator(t, hams, nesting)(F)


# ---------------------------------------------------------------- integrators


@dataclass
class FlowState:
    """Result of a matrix flow.

    ``F``/``t`` are the final observable and time; ``states``/``times`` the
    whole trajectory.  Every monitor series has ``steps + 1`` entries.
    """

    F: np.ndarray
    t: float
    step: float
    times: np.ndarray
    states: np.ndarray
    monitors: dict
    residual_warnings: int = 0
    hamiltonian_states: dict = field(default_factory=dict)

    @property
    def steps(self) -> int:
        return len(self.times) - 1


def _rk4_step(L: np.ndarray, y: np.ndarray, h: float) -> np.ndarray:
    k1 = L @ y
    k2 = L @ (y + 0.5 * h * k1)
    k3 = L @ (y + 0.5 * h * k2)
    k4 = L @ (y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _step_count(T: float, h: float) -> tuple[int, float]:
    if not h > 0:
        raise DomainError(f"step must be positive, got {h}")
    if not T >= h * (1 - 1e-12):
        raise DomainError(f"duration {T} shorter than one step {h}")
    n = max(1, int(round(T / h)))
    return n, T / n


def _sorted_eigs(m: np.ndarray) -> np.ndarray:
    ev = np.linalg.eigvals(m)
    return ev[np.lexsort((np.round(ev.imag, 12), np.round(ev.real, 12)))]


def evolve_classical(
    t: MultibracketTensor,
    F0,
    hams,
    T: float,
    h: float,
    nesting="canonical",
    reverse: bool = False,
    track_hamiltonians: bool = True,
    operator: BracketOperator | None = None,
) -> FlowState:
    """Fixed-step RK4 for ``dF/dt = {F, H_2, .., H_2j}``.

    ``T`` is rounded to a whole number of steps (the step is adjusted by at
    most half a step).  With ``reverse=True`` the flow runs backwards from
    ``t = T`` to 0 starting at ``F0``.  Each Hamiltonian matrix is evolved
    alongside ``F`` to monitor its drift.

    Raises
    ------
    IntegrationAborted
        When a non-finite value appears; ``exc.state`` holds everything up
        to the last good step.
    """
    g = t.algebra
    d = g.d
    F0 = np.asarray(F0, dtype=complex)
    if F0.shape != (d, d):
        raise DomainError(f"F0 must be {d}x{d}")
    n, dt = _step_count(T, h)
    op = operator if operator is not None else bracket_operator(t, hams, nesting)
    L = op.matrix
    sign = -1.0 if reverse else 1.0
    slots = [h_ for h_ in hams if isinstance(h_, HamiltonianSlot)] if track_hamiltonians else []
    labels = [s.label or f"H{i + 2}" for i, s in enumerate(slots)]
    y = np.column_stack([F0.reshape(-1)] + [s.matrix.reshape(-1).astype(complex) for s in slots])
    y0 = y.copy()

    states = np.empty((n + 1, d, d), dtype=complex)
    ham_states = {lab: np.empty((n + 1, d, d), dtype=complex) for lab in labels}
    times = np.empty(n + 1)
    mon = {"trace": [], "norm": [], "eigenvalues": []}
    for lab in labels:
        mon[f"overlap[{lab}]"] = []
        mon[f"drift[{lab}]"] = []
    warnings_count = 0
    t0 = T if reverse else 0.0

    def record(i, yv):
        nonlocal warnings_count
        F = yv[:, 0].reshape(d, d)
        states[i] = F
        times[i] = t0 + sign * i * dt
        mon["trace"].append(complex(np.trace(F)))
        mon["norm"].append(float(np.linalg.norm(F)))
        mon["eigenvalues"].append(_sorted_eigs(F))
        for col, (lab, s) in enumerate(zip(labels, slots), start=1):
            Hi = yv[:, col].reshape(d, d)
            ham_states[lab][i] = Hi
            mon[f"overlap[{lab}]"].append(complex(np.trace(s.matrix.conj().T @ F)))
            mon[f"drift[{lab}]"].append(float(np.max(np.abs(yv[:, col] - y0[:, col]))))
        res = decompose(g, F)[2]
        if np.max(np.abs(res)) > RESIDUAL_WARN:
            warnings_count += 1

    def snapshot(last):
        sl = slice(0, last + 1)
        return FlowState(
            F=states[last].copy(),
            t=float(times[last]),
            step=dt,
            times=times[sl].copy(),
            states=states[sl].copy(),
            monitors={k: np.array(v[: last + 1]) for k, v in mon.items()},
            residual_warnings=warnings_count,
            hamiltonian_states={k: v[sl].copy() for k, v in ham_states.items()},
        )

    record(0, y)
    for i in range(1, n + 1):
        y_new = _rk4_step(L, y, sign * dt)
        if not np.all(np.isfinite(y_new)):
            raise IntegrationAborted(f"non-finite state at step {i}, t={t0 + sign * i * dt:g}", snapshot(i - 1))
        y = y_new
        record(i, y)
    return snapshot(n)


# ---------------------------------------------------------------- polynomial matrices


def _poly_coefficients(g: LieAlgebraData, F: PolyMatrix) -> list[Polynomial]:
    """``c_a = -2 kappa^{ab} tr(T_b F)`` with polynomial entries."""
    d = g.d
    func = -2.0 * np.einsum("ab,bij->aji", g.metric_inv, g.basis)
    out = []
    for a in range(g.dim):
        acc = Polynomial(F.nvars)
        for j in range(d):
            for i in range(d):
                w = func[a, j, i]
                if w != 0 and F.entries[j][i]:
                    acc = acc + F.entries[j][i].scale(w)
        out.append(acc)
    return out


@dataclass
class PolyFlowState:
    """Trajectory of a polynomial-matrix flow."""

    F: PolyMatrix
    t: float
    step: float
    times: np.ndarray
    states: list
    mode: str
    hbar_truncation: int | None
    max_degrees: list = field(default_factory=list)


def multibracket_polymatrix(
    t: MultibracketTensor,
    F: PolyMatrix,
    hams,
    mode: str = "pointwise",
    hbar_truncation: int | None = None,
    max_degree: int = MAX_DEGREE,
    nesting="canonical",
    _cache: dict | None = None,
) -> PolyMatrix:
    """Bracket on a polynomial-matrix observable.

    Same expansion as ``multibracket_matrix``; the prefix and suffix words
    left over by the derivation rule are realised as products of the
    generator images ``x^a T_a`` and every product uses
    ``poly_matrix_multiply`` in ``mode`` ("pointwise" or "star").
    """
    g = t.algebra
    if F.d != g.d or F.nvars != g.dim:
        raise DomainError("F must be a d x d PolyMatrix over the algebra's coordinates")
    cache = _cache if _cache is not None else {}
    K = hbar_truncation
    words = [_as_element(g, h, False) for h in hams]
    if len(words) != t.arity - 1:
        raise DomainError(f"bracket of arity {t.arity} needs {t.arity - 1} Hamiltonians")
    coeffs = _poly_coefficients(g, F)
    eye = np.eye(g.dim)
    gens = cache.setdefault("gens", [realize(g, generator(g, a)) for a in range(g.dim)])

    def mult(A, B):
        return poly_matrix_multiply(A, B, mode, g, K, max_degree)

    def word_image(word):
        key = ("word", mode, K, word)
        hit = cache.get(key)
        if hit is None:
            hit = PolyMatrix.identity(g.d, g.dim)
            for a in word:
                hit = mult(hit, gens[a])
            cache[key] = hit
        return hit

    def base_image(letters):
        key = ("base", letters)
        tens = cache.get(key)
        if tens is None:
            # rows a: bracket of T_a with the letters, as a coefficient vector
            tens = np.array([lie_multibracket(t, eye[a], *eye[list(letters)]) for a in range(g.dim)])
            cache[key] = tens
        if not np.any(tens):
            return None
        mats = np.einsum("ae,eij->aij", tens, g.basis)
        rows = []
        for j in range(g.d):
            row = []
            for k in range(g.d):
                acc = Polynomial(g.dim)
                for a in range(g.dim):
                    w = mats[a, j, k]
                    if w != 0 and coeffs[a]:
                        acc = acc + coeffs[a].scale(w)
                row.append(acc)
            rows.append(row)
        return PolyMatrix(rows, g.dim)

    # collect (prefix, letters, suffix) -> coefficient, in a fixed order
    grouped: dict = {}
    orders = _nesting_orders(len(words), nesting)
    exps = [_expansions(w) for w in words]
    for order in orders:
        for combo in product(*exps):
            coeff = np.prod([c for c, *_ in combo]) / len(orders)
            letters = tuple(item[3] for item in combo)
            pre = sum((combo[s][2] for s in order), ())
            suf = sum((combo[s][4] for s in reversed(order)), ())
            key = (pre, letters, suf)
            grouped[key] = grouped.get(key, 0.0) + coeff
    out = PolyMatrix.zeros(g.d, g.dim)
    for (pre, letters, suf) in sorted(grouped):
        coeff = grouped[(pre, letters, suf)]
        if coeff == 0:
            continue
        base = base_image(letters)
        if base is None:
            continue
        term = base
        if pre:
            term = mult(word_image(pre), term)
        if suf:
            term = mult(term, word_image(suf))
        out = out + term.scale(coeff)
    return out.truncate(K)


def evolve_polymatrix(
    t: MultibracketTensor,
    F0: PolyMatrix,
    hams,
    T: float,
    h: float,
    mode: str = "pointwise",
    hbar_truncation: int | None = None,
    max_degree: int = MAX_DEGREE,
    nesting="canonical",
) -> PolyFlowState:
    """RK4 on a polynomial-matrix observable.

    Raises ``DegreeOverflowError`` naming the step and degree when an entry
    of the state exceeds ``max_degree``.
    """
    n, dt = _step_count(T, h)
    K = hbar_truncation
    cache: dict = {}

    def rhs(F):
        return multibracket_polymatrix(t, F, hams, mode, K, max_degree, nesting, cache)

    F = F0.truncate(K)
    states, times, degs = [F], [0.0], [F.degree]
    for i in range(1, n + 1):
        k1 = rhs(F)
        k2 = rhs(F + k1.scale(0.5 * dt))
        k3 = rhs(F + k2.scale(0.5 * dt))
        k4 = rhs(F + k3.scale(dt))
        F = (F + (k1 + k2.scale(2.0) + k3.scale(2.0) + k4).scale(dt / 6.0)).truncate(K)
        deg = F.degree
        if deg > max_degree:
            raise DegreeOverflowError(f"step {i}: polynomial degree {deg} exceeds cap {max_degree}")
        states.append(F)
        times.append(i * dt)
        degs.append(deg)
    return PolyFlowState(F=F, t=times[-1], step=dt, times=np.array(times), states=states,
                         mode=mode, hbar_truncation=K, max_degrees=degs)


def evolve_quantum(
    t: MultibracketTensor,
    F0: PolyMatrix,
    hams,
    T: float,
    h: float,
    hbar_truncation: int = 2,
    max_degree: int = MAX_DEGREE,
    nesting="canonical",
) -> PolyFlowState:
    """Star-product flow truncated at ``hbar**hbar_truncation`` each step.

    The ``hbar^0`` channel coincides with ``evolve_polymatrix`` in pointwise
    mode, i.e. the classical flow of the same polynomial matrix.
    """
    if hbar_truncation is None or hbar_truncation < 0:
        raise DomainError("hbar truncation order must be a non-negative integer")
    return evolve_polymatrix(t, F0, hams, T, h, "star", hbar_truncation, max_degree, nesting)
