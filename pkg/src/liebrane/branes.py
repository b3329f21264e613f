"""Stacks of parallel branes on top of su(n).

Brane ``j`` sits at a point of the transverse space; the root ``e_j - e_k``
labels the string between branes ``j`` and ``k`` (0-based).  Coincident
branes leave the corresponding root generators unbroken, separated ones
stretch the string and remove ``e_{+-alpha}`` from the gauge algebra.

The Hamiltonians ``H_j^(+-) = 1/2 sum_{l<=j} (e_l e_{-l} +- e_{-l} e_l)`` over
simple roots ``alpha_l`` are built as explicit enveloping-algebra words,
so the Leibniz expansion of the flows can see their product structure.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .cohomology import MultibracketTensor, build_cocycle, multibracket_tensor, valid_orders
from .dynamics import FlowState, HamiltonianSlot, PolyFlowState, evolve_classical, evolve_quantum, make_slot
from .enveloping import MAX_DEGREE, PolyMatrix, UEAElement, uea_multiply
from .lie_core import DomainError, LieAlgebraData, RootSystemData, build_root_system, build_su, decompose

__all__ = [
    "POSITION_TOL",
    "BraneStack",
    "HamiltonianFamily",
    "SymmetryReport",
    "StringRecord",
    "OrientationFlow",
    "element_of_matrix",
    "build_hamiltonians",
    "orientation_flows",
    "separate_brane",
    "symmetry_report",
    "string_spectrum",
    "transverse_lagrangian",
]

# branes closer than this count as coincident
POSITION_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class BraneStack:
    n: int
    positions: np.ndarray
    algebra: LieAlgebraData = field(repr=False)

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float)
        if pos.ndim != 2 or pos.shape[0] != self.n:
            raise DomainError(f"need {self.n} position vectors of equal length, got shape {pos.shape}")
        if not np.all(np.isfinite(pos)):
            raise DomainError("positions must be finite")
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)

    @classmethod
    def coincident(cls, n: int, transverse: int = 1, algebra: LieAlgebraData | None = None) -> "BraneStack":
        g = algebra if algebra is not None else build_su(n)
        return cls(n, np.zeros((n, transverse)), g)

    @property
    def transverse(self) -> int:
        return self.positions.shape[1]

    def matrices(self) -> list[np.ndarray]:
        """``X_t = diag(x_t,1, .., x_t,n)`` for each transverse direction."""
        return [np.diag(self.positions[:, t]).astype(complex) for t in range(self.transverse)]

    def clusters(self, tol: float = POSITION_TOL) -> list[tuple]:
        """Groups of coincident branes, ordered by their first member."""
        groups: list[list] = []
        for j in range(self.n):
            for grp in groups:
                if np.linalg.norm(self.positions[grp[0]] - self.positions[j]) <= tol:
                    grp.append(j)
                    break
            else:
                groups.append([j])
        return [tuple(grp) for grp in groups]


@dataclass(frozen=True)
class StringRecord:
    root: tuple
    endpoints: tuple
    length: float
    stretched: bool
    orientation: int = 1


@dataclass(frozen=True)
class SymmetryReport:
    """Gauge algebra left unbroken by a brane configuration.

    ``u1_count`` excludes the overall centre-of-mass u(1), so a fully
    separated stack of ``n`` branes reports ``n - 1``.
    """

    unbroken_roots: tuple
    broken_roots: tuple
    removed_generators: tuple
    retained_cartans: tuple
    su_factors: tuple
    u1_count: int
    unbroken_dim: int
    centralizer_dim: int

    def summary(self) -> str:
        parts = [f"su({m})" for m in self.su_factors]
        if self.u1_count:
            parts.append("u(1)" if self.u1_count == 1 else f"u(1)^{self.u1_count}")
        return " + ".join(parts) if parts else "0"

    def to_json(self) -> dict:
        return {
            "unbroken": self.summary(),
            "su_factors": list(self.su_factors),
            "u1_count": self.u1_count,
            "u1_excludes_centre": True,
            "unbroken_dim": self.unbroken_dim,
            "centralizer_dim": self.centralizer_dim,
            "unbroken_roots": [list(r) for r in self.unbroken_roots],
            "broken_roots": [list(r) for r in self.broken_roots],
            "removed_generators": list(self.removed_generators),
            "retained_cartans": [list(r) for r in self.retained_cartans],
        }


def _root_label(root) -> str:
    j, k = RootSystemData.endpoints(root)
    return f"e({j},{k})"


def _centralizer_dim(g: LieAlgebraData, mats, tol: float = 1e-9) -> int:
    """Dimension of the subalgebra of g commuting with every matrix."""
    if not mats:
        return g.dim
    rows = []
    for X in mats:
        cols = [decompose(g, X @ T - T @ X)[0] for T in g.basis]
        rows.append(np.array(cols).T)
    ad = np.vstack(rows)
    sv = np.linalg.svd(ad, compute_uv=False)
    scale = max(1.0, float(sv[0]) if len(sv) else 1.0)
    return g.dim - int(np.sum(sv > tol * scale))


def symmetry_report(stack: BraneStack, rs: RootSystemData | None = None) -> SymmetryReport:
    g = stack.algebra
    rs = rs if rs is not None else build_root_system(g)
    unbroken, broken = [], []
    for r in rs.positive_roots:
        j, k = rs.endpoints(r)
        if np.linalg.norm(stack.positions[j] - stack.positions[k]) <= POSITION_TOL:
            unbroken.append(r)
        else:
            broken.append(r)
    removed = []
    for r in broken:
        removed.extend([f"+{_root_label(r)}", f"-{_root_label(r)}"])
    clusters = stack.clusters()
    factors = tuple(sorted((len(c) for c in clusters if len(c) > 1), reverse=True))
    u1 = len(clusters) - 1
    dim = 2 * len(unbroken) + (stack.n - 1)
    return SymmetryReport(
        unbroken_roots=tuple(unbroken),
        broken_roots=tuple(broken),
        removed_generators=tuple(removed),
        retained_cartans=tuple(rs.simple_roots),
        su_factors=factors,
        u1_count=u1,
        unbroken_dim=dim,
        centralizer_dim=_centralizer_dim(g, stack.matrices()),
    )


def separate_brane(stack: BraneStack, k, displacement) -> tuple[BraneStack, SymmetryReport]:
    """Displace brane ``k`` (or every brane in the list ``k``) and report the symmetry left.

    Brane indices are 0-based.
    """
    idx = [k] if np.isscalar(k) else list(k)
    if not idx:
        raise DomainError("no brane selected")
    for j in idx:
        if not isinstance(j, (int, np.integer)) or not 0 <= j < stack.n:
            raise DomainError(f"brane index {j!r} out of range 0..{stack.n - 1}")
    disp = np.asarray(displacement, dtype=float)
    if disp.shape != (stack.transverse,):
        raise DomainError(f"displacement must have length {stack.transverse}")
    if not np.any(disp):
        raise DomainError("displacement must be nonzero")
    pos = stack.positions.copy()
    pos[idx] += disp
    new = BraneStack(stack.n, pos, stack.algebra)
    return new, symmetry_report(new)


def string_spectrum(stack: BraneStack, include_negative: bool = False) -> list[StringRecord]:
    """One record per positive root; negative roots follow as reversed strings on request."""
    out = []
    rs = build_root_system(stack.algebra)
    for r in rs.positive_roots:
        j, k = rs.endpoints(r)
        length = float(np.linalg.norm(stack.positions[j] - stack.positions[k]))
        out.append(StringRecord(r, (j, k), length, length > POSITION_TOL, 1))
    if include_negative:
        out += [
            StringRecord(tuple(-x for x in s.root), s.endpoints[::-1], s.length, s.stretched, -1)
            for s in list(out)
        ]
    return out


# ---------------------------------------------------------------- Hamiltonians


def element_of_matrix(g: LieAlgebraData, m) -> UEAElement:
    """Degree-1 element with ``represent == m`` for a traceless ``m``."""
    coeffs, tr, res = decompose(g, m)
    if abs(tr) > 1e-12 or np.max(np.abs(res)) > 1e-12:
        raise DomainError("matrix is not in the complexified algebra")
    coeffs = np.where(np.abs(coeffs) < 1e-15, 0.0, coeffs)
    return UEAElement.from_vector(g, coeffs)


@dataclass(frozen=True, eq=False)
class HamiltonianFamily:
    slots: tuple

    def __len__(self) -> int:
        return len(self.slots)

    def __iter__(self):
        return iter(self.slots)

    def __getitem__(self, label: str) -> HamiltonianSlot:
        for s in self.slots:
            if s.label == label:
                return s
        raise KeyError(label)

    @property
    def labels(self) -> tuple:
        return tuple(s.label for s in self.slots)

    def gram(self) -> np.ndarray:
        """``tr(A^dagger B)`` over the family matrices."""
        mats = [s.matrix for s in self.slots]
        return np.array([[np.trace(a.conj().T @ b) for b in mats] for a in mats])

    def gram_rank(self, tol: float = 1e-10) -> tuple[int, float]:
        sv = np.linalg.svd(self.gram(), compute_uv=False)
        rank = int(np.sum(sv > tol * sv[0]))
        cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else float("inf")
        return rank, cond

    def word_rank(self) -> int:
        """Rank of the words as vectors in U(g) (PBW coefficients)."""
        keys = sorted({k for s in self.slots for k in s.word.terms})
        mat = np.array([[s.word.terms.get(k, 0.0) for k in keys] for s in self.slots])
        return int(np.linalg.matrix_rank(mat))


def build_hamiltonians(g: LieAlgebraData, rs: RootSystemData | None = None) -> HamiltonianFamily:
    """``H_1^+, H_1^-, .., H_{n-1}^+, H_{n-1}^-`` as words and matrices."""
    rs = rs if rs is not None else build_root_system(g)
    slots = []
    plus = minus = None
    for j, alpha in enumerate(rs.simple_roots, start=1):
        up = element_of_matrix(g, rs.raising[alpha])
        down = element_of_matrix(g, rs.lowering[alpha])
        ud, du = uea_multiply(up, down), uea_multiply(down, up)
        p, m = (ud + du).scale(0.5), (ud - du).scale(0.5)
        plus = p if plus is None else plus + p
        minus = m if minus is None else minus + m
        slots.append(make_slot(g, plus, f"H_{j}^+"))
        slots.append(make_slot(g, minus, f"H_{j}^-"))
    return HamiltonianFamily(tuple(slots))


@dataclass(frozen=True, eq=False)
class OrientationFlow:
    """Top-cocycle flow ``dF/dt = {F, H_1^+, H_1^-, .., H_{n-1}^(+-)}``."""

    orientation: str
    tensor: MultibracketTensor
    hamiltonians: tuple
    nesting: object = "canonical"

    @property
    def labels(self) -> tuple:
        return tuple(h.label for h in self.hamiltonians)

    def classical(self, F0, T: float, h: float, **kw) -> FlowState:
        kw.setdefault("nesting", self.nesting)
        return evolve_classical(self.tensor, F0, list(self.hamiltonians), T, h, **kw)

    def quantum(self, F0: PolyMatrix, T: float, h: float, hbar_truncation: int = 2,
                max_degree: int = MAX_DEGREE) -> PolyFlowState:
        return evolve_quantum(self.tensor, F0, list(self.hamiltonians), T, h,
                              hbar_truncation, max_degree, self.nesting)


def orientation_flows(g: LieAlgebraData, rs: RootSystemData | None = None, orientation: str = "plus",
                      family: HamiltonianFamily | None = None, nesting="canonical",
                      tensor: MultibracketTensor | None = None) -> OrientationFlow:
    if orientation not in ("plus", "minus"):
        raise DomainError(f"orientation must be 'plus' or 'minus', got {orientation!r}")
    top = 2 * g.n - 1
    if top not in valid_orders(g.n):
        raise DomainError(f"no cocycle of order {top} for su({g.n})")
    fam = family if family is not None else build_hamiltonians(g, rs)
    n = g.n
    labels = [f"H_{j}^{s}" for j in range(1, n - 1) for s in "+-"]
    labels.append(f"H_{n - 1}^{'+' if orientation == 'plus' else '-'}")
    t = tensor if tensor is not None else multibracket_tensor(build_cocycle(g, top))
    if t.arity != 2 * n - 2:
        raise DomainError(f"tensor arity {t.arity} does not match the top cocycle of su({n})")
    return OrientationFlow(orientation, t, tuple(fam[lab] for lab in labels), nesting)


# ---------------------------------------------------------------- lagrangian


def _comm(a, b):
    return a @ b - b @ a


def transverse_lagrangian(A, X, grid_spacing: float) -> float:
    """Discretised transverse action on a periodic 1-d longitudinal grid.

    ``A[p]`` is the gauge matrix and ``X[p]`` the list of transverse matrices
    at grid point ``p``.  Returns

        spacing * sum_p [ sum_t tr(D X_t^dag D X_t)
                          + 1/2 sum_{t != t'} tr([X_t, X_t']^dag [X_t, X_t']) ]

    with ``D X = dX + i[A, X]`` and ``dX`` the central periodic difference.
    """
    if not grid_spacing > 0:
        raise DomainError("grid spacing must be positive")
    npts = len(X)
    if npts == 0 or len(A) != npts:
        raise DomainError(f"grid mismatch: {len(A)} gauge matrices for {npts} points")
    A = [np.asarray(a, dtype=complex) for a in A]
    X = [[np.asarray(x, dtype=complex) for x in xs] for xs in X]
    ntr = len(X[0])
    d = A[0].shape[0]
    for a, xs in zip(A, X):
        if a.shape != (d, d) or len(xs) != ntr or any(x.shape != (d, d) for x in xs):
            raise DomainError("inconsistent matrix sizes or transverse counts across the grid")
    total = 0.0
    for p in range(npts):
        nxt, prv = X[(p + 1) % npts], X[(p - 1) % npts]
        for t in range(ntr):
            dx = (nxt[t] - prv[t]) / (2.0 * grid_spacing) + 1j * _comm(A[p], X[p][t])
            total += np.trace(dx.conj().T @ dx).real
        for t, u in combinations(range(ntr), 2):
            c = _comm(X[p][t], X[p][u])
            # both orders (t, u) and (u, t) give the same term
            total += np.trace(c.conj().T @ c).real
    return float(grid_spacing * total)
