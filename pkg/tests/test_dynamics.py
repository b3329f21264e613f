import warnings

import numpy as np
import pytest
from scipy.linalg import expm

from liebrane import build_cocycle, build_su, multibracket_tensor
from liebrane.dynamics import (
    IntegrationAborted,
    ProjectionResidualWarning,
    binary_bracket_matrix,
    bracket_operator,
    evolve_classical,
    evolve_polymatrix,
    evolve_quantum,
    leibniz_multibracket,
    make_slot,
    multibracket_matrix,
)
from liebrane.enveloping import (
    DegreeOverflowError,
    PolyMatrix,
    UEAElement,
    generator,
    realize,
    represent,
    uea_multiply,
)
from liebrane.lie_core import DomainError


@pytest.fixture(scope="module")
def t2():
    return multibracket_tensor(build_cocycle(build_su(2), 3))


@pytest.fixture(scope="module")
def t3_5():
    return multibracket_tensor(build_cocycle(build_su(3), 5))


def W(g, *words):
    return UEAElement.from_words(g, [(1.0, w) for w in words])


def rand_herm_traceless(rng, d):
    a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    a = a + a.conj().T
    return a - np.trace(a) / d * np.eye(d)


# ---------------------------------------------------------------- word-level bracket


def test_arity2_is_commutator_on_words(t2):
    # the derivation extension of the Lie bracket is the UEA commutator
    g = t2.algebra
    rng = np.random.default_rng(3)
    for _ in range(30):
        a = W(g, tuple(int(x) for x in rng.integers(0, 3, rng.integers(1, 4))))
        b = W(g, tuple(int(x) for x in rng.integers(0, 3, rng.integers(1, 4))))
        comm = uea_multiply(a, b) - uea_multiply(b, a)
        assert leibniz_multibracket(t2, [a, b]).max_abs_diff(comm) < 1e-12


def test_leibniz_example(t2):
    g = t2.algebra
    # {X1 X2, X3} = X1 {X2, X3} + {X1, X3} X2 = X1 X1 - X2 X2
    res = leibniz_multibracket(t2, [W(g, (0, 1)), generator(g, 2)])
    assert res.max_abs_diff(W(g, (0, 0)) - W(g, (1, 1))) < 1e-12


def test_leibniz_quantum_matches_classical_image(t2):
    g = t2.algebra
    a = UEAElement.from_words(g, [(1.0, (0, 1))], quantum=True)
    b = generator(g, 2, quantum=True)
    res = leibniz_multibracket(t2, [a, b])
    assert res.quantum
    cl = leibniz_multibracket(t2, [W(g, (0, 1)), generator(g, 2)])
    # both words are already ordered, so no hbar corrections appear
    assert {w: c for (w, k), c in res.terms.items()} == {w: c for (w, _), c in cl.terms.items()}
    assert all(k == 0 for (_, k) in res.terms)


def test_repeated_slot_word_level(t3_5):
    g = t3_5.algebra
    h = W(g, (0, 3))
    x = generator(g, 7)
    res = leibniz_multibracket(t3_5, [x, h, h, generator(g, 2)])
    assert res.max_abs_diff(UEAElement(g, {}, False)) < 1e-12
    hq = UEAElement.from_words(g, [(1.0, (0, 3))], quantum=True)
    resq = leibniz_multibracket(t3_5, [generator(g, 7, True), hq, hq, generator(g, 2, True)])
    assert max(abs(v) for v in resq.terms.values()) < 1e-12 if resq.terms else True


def test_slot_count(t2):
    g = t2.algebra
    with pytest.raises(DomainError):
        leibniz_multibracket(t2, [generator(g, 0)])
    with pytest.raises(DomainError):
        bracket_operator(t2, [])


def test_symmetric_nesting_linear(t3_5):
    g = t3_5.algebra
    hams = [make_slot(g, W(g, (0,))), make_slot(g, W(g, (1, 2))), make_slot(g, W(g, (3,)))]
    F = rand_herm_traceless(np.random.default_rng(0), 3)
    for nesting in ("canonical", "symmetric", (2, 1, 0)):
        op = bracket_operator(t3_5, hams, nesting)
        vec = op.matrix @ F.reshape(-1)
        assert np.allclose(vec.reshape(3, 3), op(F), atol=1e-13)


def test_operator_matches_word_bracket(t3_5):
    # bracket of a basis observable through the representation equals the
    # image of the word-level bracket
    g = t3_5.algebra
    h = [W(g, (0, 1)), W(g, (2,)), W(g, (3, 4))]
    slots = [make_slot(g, w) for w in h]
    for a in range(8):
        word_img = represent(g, leibniz_multibracket(t3_5, [generator(g, a)] + h))
        assert np.allclose(multibracket_matrix(t3_5, g.basis[a], slots), word_img, atol=1e-12)


# ---------------------------------------------------------------- matrix flows


def test_binary_matrix_is_commutator(t2):
    g = t2.algebra
    rng = np.random.default_rng(1)
    F = rand_herm_traceless(rng, 2)
    H = make_slot(g, generator(g, 2))
    assert np.allclose(multibracket_matrix(t2, F, [H]), binary_bracket_matrix(F, H), atol=1e-14)


def _rotation(t2, T=1.0, h=1e-3, reverse=False):
    g = t2.algebra
    return evolve_classical(t2, g.basis[0], [make_slot(g, generator(g, 2), "T3")], T, h, reverse=reverse)


def test_rotation_closed_form(t2):
    g = t2.algebra
    st = _rotation(t2, T=2.0)
    for tt, F in zip(st.times[::100], st.states[::100]):
        # dF/dt = [F, T3]  =>  F(t) = exp(-t T3) F0 exp(t T3)
        ref = expm(-tt * g.basis[2]) @ g.basis[0] @ expm(tt * g.basis[2])
        assert np.max(np.abs(F - ref)) < 1e-10
        assert np.max(np.abs(F - (np.cos(tt) * g.basis[0] - np.sin(tt) * g.basis[1]))) < 1e-10


def test_rotation_order(t2):
    g = t2.algebra
    ref = np.cos(1.0) * g.basis[0] - np.sin(1.0) * g.basis[1]
    errs = [np.max(np.abs(_rotation(t2, 1.0, h).F - ref)) for h in (0.1, 0.05)]
    assert 14 < errs[0] / errs[1] < 18


def test_reverse(t2):
    fwd = _rotation(t2, 1.0)
    back = _rotation(t2, 1.0, reverse=True)
    assert back.times[0] == 1.0 and back.times[-1] == pytest.approx(0.0)
    g = t2.algebra
    assert np.allclose(back.F, np.cos(1.0) * g.basis[0] + np.sin(1.0) * g.basis[1], atol=1e-10)
    again = evolve_classical(t2, fwd.F, [make_slot(g, generator(g, 2))], 1.0, 1e-3, reverse=True)
    assert np.allclose(again.F, g.basis[0], atol=1e-10)


def test_identity_is_stationary(t2):
    g = t2.algebra
    st = evolve_classical(t2, np.eye(2), [make_slot(g, generator(g, 0))], 1.0, 0.1)
    assert np.array_equal(st.F, np.eye(2))


def test_monitors_and_isospectral(t2):
    g = t2.algebra
    rng = np.random.default_rng(5)
    F0 = rand_herm_traceless(rng, 2)
    H = make_slot(g, W(g, (0,)) + W(g, (2,)), "H")
    st = evolve_classical(t2, F0, [H], 3.0, 0.01)
    n = st.steps + 1
    assert all(len(v) == n for v in st.monitors.values())
    ev = st.monitors["eigenvalues"]
    assert np.max(np.abs(ev - ev[0])) < 1e-9
    assert np.max(np.abs(st.monitors["trace"])) < 1e-12
    assert st.monitors["drift[H]"].max() < 1e-12


def test_step_rounding(t2):
    st = _rotation(t2, 1.0, 0.3)
    assert st.steps == 3 and st.step == pytest.approx(1.0 / 3)
    with pytest.raises(DomainError):
        _rotation(t2, 1.0, 0.0)
    with pytest.raises(DomainError):
        _rotation(t2, 0.01, 0.1)


def test_determinism(t3_5):
    g = t3_5.algebra
    hams = [make_slot(g, W(g, (0, 1))), make_slot(g, W(g, (2,))), make_slot(g, W(g, (3, 3)))]
    F0 = rand_herm_traceless(np.random.default_rng(9), 3)
    a = evolve_classical(t3_5, F0, hams, 1.0, 0.05)
    b = evolve_classical(t3_5, F0, hams, 1.0, 0.05)
    assert np.array_equal(a.states, b.states)


def test_residual_is_structurally_zero(t2):
    # span(T) + identity is all of gl(d) over C, so no real input warns
    g = t2.algebra
    F = 1e12 * rand_herm_traceless(np.random.default_rng(2), 2) + np.pi * np.eye(2)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        multibracket_matrix(t2, F, [make_slot(g, generator(g, 0))])
    assert evolve_classical(t2, F, [make_slot(g, generator(g, 0))], 0.2, 0.1).residual_warnings == 0


def test_residual_warning_reported(t2, monkeypatch):
    import liebrane.dynamics as dyn

    real = dyn.decompose

    def lossy(g, m):
        c, tr, res = real(g, m)
        return c, tr, res + 1e-6
    monkeypatch.setattr(dyn, "decompose", lossy)
    g = t2.algebra
    with pytest.warns(ProjectionResidualWarning, match="residual"):
        multibracket_matrix(t2, g.basis[1], [make_slot(g, generator(g, 0))])
    st = evolve_classical(t2, g.basis[1], [make_slot(g, generator(g, 0))], 0.2, 0.1)
    assert st.residual_warnings == st.steps + 1


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_abort_keeps_partial_state(t2):
    g = t2.algebra
    H = make_slot(g, W(g, (2,)).scale(1e200))
    with pytest.raises(IntegrationAborted) as exc:
        evolve_classical(t2, g.basis[0], [H], 1.0, 0.1)
    part = exc.value.state
    assert part is not None and part.steps < 10 and np.all(np.isfinite(part.states))


# ---------------------------------------------------------------- polynomial flows


def test_quantum_k0_equals_pointwise(t2):
    g = t2.algebra
    F0 = realize(g, generator(g, 0))
    hams = [W(g, (2,))]
    a = evolve_quantum(t2, F0, hams, 0.5, 0.1, hbar_truncation=0)
    b = evolve_polymatrix(t2, F0, hams, 0.5, 0.1, "pointwise")
    assert a.F == b.F


def test_quantum_k1_hbar0_channel(t2):
    g = t2.algebra
    F0 = realize(g, generator(g, 0))
    hams = [W(g, (2,))]
    a = evolve_quantum(t2, F0, hams, 0.5, 0.1, hbar_truncation=1)
    b = evolve_polymatrix(t2, F0, hams, 0.5, 0.1, "pointwise")
    assert a.F.hbar_part(0).max_abs_diff(b.F) < 1e-8


def test_pointwise_flow_at_unit_point_matches_matrix_flow(t2):
    # with degree-1 Hamiltonians the realised flow evaluated at x = 1 is the matrix flow
    g = t2.algebra
    F0 = realize(g, generator(g, 0))
    pf = evolve_polymatrix(t2, F0, [W(g, (2,))], 0.5, 0.1)
    mf = evolve_classical(t2, g.basis[0], [make_slot(g, generator(g, 2))], 0.5, 0.1)
    assert np.allclose(pf.F.evaluate(np.ones(3)), mf.F, atol=1e-12)


def test_degree_overflow(t2):
    g = t2.algebra
    F0 = realize(g, generator(g, 0))
    with pytest.raises(DegreeOverflowError, match="step 1"):
        evolve_polymatrix(t2, F0, [W(g, (2, 2, 2))], 0.3, 0.1, max_degree=2)


def test_quantum_rejects_negative_order(t2):
    g = t2.algebra
    with pytest.raises(DomainError):
        evolve_quantum(t2, PolyMatrix.identity(2, 3), [W(g, (2,))], 0.1, 0.1, hbar_truncation=-1)
