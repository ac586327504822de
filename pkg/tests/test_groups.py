import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from ymhflow.embedding import check_tangency, induce_representation, ymh_intrinsic
from ymhflow.errors import GridError, InvalidDescriptor, NotInSubalgebra
from ymhflow.groups import (
    GROUP_NAMES,
    adjoint_rep,
    descriptor,
    inclusion_rep,
    split_field,
    symplectic_form,
)
from ymhflow.higgs import HiggsPair, higgs_residual, ymh
from ymhflow.torus import Kind, MatrixField, make_grid

E12 = np.array([[0, 1], [0, 0]], dtype=complex)


def unit(n, i, j):
    e = np.zeros((n, n), complex)
    e[i, j] = 1
    return e


def matrix_basis(n):
    return [unit(n, i, j) for i in range(n) for j in range(n)]


def frob(a, b):
    return np.trace(a @ b.conj().T)


def random_group_pair(grid, G, seed, with_phi=True, scale=0.5):
    rng = np.random.default_rng(seed)
    a = G.project(oracles.random_field(rng, grid.N, G.n, 4, scale))
    f = G.project(oracles.random_field(rng, grid.N, G.n, 4, scale)) if with_phi else np.zeros_like(a)
    return HiggsPair.from_arrays(grid, a, f, G)


ALL = [("GL", 2), ("GL", 3), ("SL", 2), ("SL", 3), ("SO", 3), ("SO", 4), ("SP", 2), ("SP", 4)]


@pytest.mark.parametrize("name,n", ALL)
def test_descriptor_invariants(name, n):
    G = descriptor(name, n)
    for e in matrix_basis(n):
        pe = G.project(e)
        np.testing.assert_allclose(G.project(pe), pe, atol=1e-14)
        np.testing.assert_allclose(G.project(e.conj().T), pe.conj().T, atol=1e-14)
        for f in matrix_basis(n):
            assert abs(frob(pe, f - G.project(f))) < 1e-14
    T = G.basis
    for a in T:
        for b in T:
            br = a @ b - b @ a
            np.testing.assert_allclose(G.project(br), br, atol=1e-13)
    gram = np.array([[frob(a, b) for b in T] for a in T])
    np.testing.assert_allclose(gram, np.eye(len(T)), atol=1e-13)
    for a in T:
        np.testing.assert_allclose(a, a.conj().T, atol=1e-15)


@pytest.mark.parametrize("name,n,dim", [("GL", 3, 9), ("SL", 2, 3), ("SL", 3, 8), ("SO", 3, 3),
                                        ("SO", 4, 6), ("SP", 2, 3), ("SP", 4, 10)])
def test_dimensions(name, n, dim):
    G = descriptor(name, n)
    assert G.dim == dim
    assert round(np.trace(G.projector_matrix()).real) == dim


def test_projector_formulas():
    X = np.arange(9).reshape(3, 3) + 1j * np.arange(9).reshape(3, 3) ** 2
    np.testing.assert_allclose(descriptor("GL", 3).project(X), X)
    np.testing.assert_allclose(descriptor("SL", 3).project(X), X - np.trace(X) / 3 * np.eye(3))
    np.testing.assert_allclose(descriptor("SO", 3).project(X), (X - X.T) / 2)
    J = symplectic_form(2)
    np.testing.assert_allclose(J @ J, -np.eye(2))
    Y = X[:2, :2]
    np.testing.assert_allclose(descriptor("SP", 2).project(Y), (Y + J @ Y.T @ J) / 2)


def test_descriptor_examples():
    assert np.max(np.abs(descriptor("SL", 2).project(np.eye(2)))) == 0
    np.testing.assert_allclose(descriptor("SO", 3).project(unit(3, 0, 1)), (unit(3, 0, 1) - unit(3, 1, 0)) / 2)
    assert descriptor("SP", 2).dim == 3
    assert not descriptor("GL", 2).is_proper and descriptor("SO", 3).is_proper


@pytest.mark.parametrize("name,n", [("SP", 3), ("XX", 2), ("SL", 1), ("GL", 0), ("SO", 2.5)])
def test_descriptor_rejects(name, n):
    with pytest.raises(InvalidDescriptor):
        descriptor(name, n)


def test_group_names():
    assert GROUP_NAMES == ("GL", "SL", "SO", "SP")
    assert descriptor("sl", 2) == descriptor("SL", 2)


def test_split_field_examples():
    g = make_grid(8)
    SL2 = descriptor("SL", 2)
    f = MatrixField.constant(g, np.array([[1, 2], [3, -1]]))
    t, n = split_field(f, SL2)
    np.testing.assert_array_equal(t.data, f.data)
    assert np.max(np.abs(n.data)) == 0
    t, n = split_field(MatrixField.constant(g, np.eye(2)), SL2)
    assert np.max(np.abs(t.data)) < 1e-15
    np.testing.assert_allclose(n.data, MatrixField.constant(g, np.eye(2)).data)
    with pytest.raises(GridError):
        split_field(MatrixField.zeros(g, 3), SL2)


@pytest.mark.parametrize("name,n", [("SL", 3), ("SO", 3), ("SP", 4)])
def test_split_field_random(name, n):
    g = make_grid(16)
    G = descriptor(name, n)
    f = MatrixField.random(g, n, rng=np.random.default_rng(11))
    t, m = split_field(f, G)
    assert np.max(np.abs(t.data + m.data - f.data)) < 1e-13
    assert abs(oracles.inner(t.data, m.data)) < 1e-13


def test_isometry_of_inner_product():
    """For h-valued fields the intrinsic (coefficient) inner product equals the ambient one."""
    g = make_grid(16)
    rng = np.random.default_rng(12)
    for name, n in [("SO", 3), ("SP", 2), ("SL", 3)]:
        G = descriptor(name, n)
        u = G.project(oracles.random_field(rng, 16, n))
        v = G.project(oracles.random_field(rng, 16, n))
        cu, cv = G.coefficients(u), G.coefficients(v)
        intrinsic = np.sum(cu * cv.conj()) / g.sites
        assert abs(intrinsic - oracles.inner(u, v)) < 1e-14 * abs(oracles.inner(u, v)) + 1e-15


def test_inclusion_rep_is_identity_and_linear():
    g = make_grid(16)
    G = descriptor("SO", 3)
    x = random_group_pair(g, G, 1)
    v = random_group_pair(g, G, 2)
    rep = inclusion_rep(G)
    fx = induce_representation(x, rep)
    np.testing.assert_allclose(fx.alpha.data, x.alpha.data, atol=1e-15)
    np.testing.assert_allclose(fx.phi.data, x.phi.data, atol=1e-15)
    t = 0.37
    lhs = induce_representation(x + v.scaled(t), rep)
    fv = induce_representation(v, rep)
    assert np.max(np.abs(lhs.alpha.data - fx.alpha.data - t * fv.alpha.data)) < 1e-14
    assert np.max(np.abs(lhs.phi.data - fx.phi.data - t * fv.phi.data)) < 1e-14


def test_adjoint_rep_sl2():
    G = descriptor("SL", 2)
    rep = adjoint_rep(G)
    assert rep.dim == 3
    assert rep.bracket_defect() < 1e-12
    g = make_grid(8)
    a = 0.7
    pair = HiggsPair.constant(g, G, phi=a * np.diag([1.0, -1.0]))
    ind = induce_representation(pair, rep)
    assert ind.group.name == "GL" and ind.n == 3
    ev = np.sort(np.linalg.eigvals(ind.phi.data[0, 0]).real)
    np.testing.assert_allclose(ev, [-2 * a, 0, 2 * a], atol=1e-14)


def test_adjoint_rep_so3_structure_constants():
    rep = adjoint_rep(descriptor("SO", 3))
    f = rep.structure_constants()
    assert rep.dim == 3
    np.testing.assert_allclose(f, -np.swapaxes(f, 0, 1), atol=1e-15)
    np.testing.assert_allclose(f, -np.swapaxes(f, 1, 2), atol=1e-15)
    mags = np.abs(f[np.abs(f) > 1e-12])
    assert len(mags) == 6
    np.testing.assert_allclose(mags, 1 / np.sqrt(2), atol=1e-14)


@pytest.mark.parametrize("name,n,c", [("SL", 2, 4.0), ("SL", 3, 6.0), ("SO", 3, 1.0), ("SP", 2, 4.0)])
def test_killing_form(name, n, c):
    """tr(ad X ad Y) is a positive multiple of the Gram matrix of the basis."""
    rep = adjoint_rep(descriptor(name, n))
    R = np.stack(rep.images)
    K = np.einsum("aij,bji->ab", R, R)
    np.testing.assert_allclose(K, c * np.eye(rep.dim), atol=1e-12)


def test_adjoint_rep_rejects_gl():
    with pytest.raises(InvalidDescriptor):
        adjoint_rep(descriptor("GL", 2))


def test_induced_higgs_pair_stays_higgs():
    g = make_grid(16)
    G = descriptor("SL", 2)
    c = 0.4 + 0.3j
    pair = HiggsPair.constant(g, G, alpha=c * E12, phi=0.8 * E12)
    assert higgs_residual(pair) == 0
    ind = induce_representation(pair, adjoint_rep(G))
    assert higgs_residual(ind) < 1e-10
    assert higgs_residual(induce_representation(pair, inclusion_rep(G))) < 1e-10


def test_induce_rejects_mismatched_rep():
    g = make_grid(8)
    pair = HiggsPair.zero(g, descriptor("SL", 2))
    with pytest.raises(InvalidDescriptor):
        induce_representation(pair, adjoint_rep(descriptor("SO", 3)))


def test_tangency_examples():
    g = make_grid(16)
    assert check_tangency(random_group_pair(g, descriptor("GL", 2), 3)) == 0
    assert check_tangency(random_group_pair(g, descriptor("SL", 2), 4)) < 1e-12
    so3 = random_group_pair(g, descriptor("SO", 3), 5)
    assert np.sqrt(oracles.inner(so3.phi.data, so3.phi.data).real) > 0.1
    assert check_tangency(so3) < 1e-12


def test_tangency_precondition():
    g = make_grid(16)
    G = descriptor("SL", 2)
    p = random_group_pair(g, G, 6)
    bad = p.replace(alpha=p.alpha.data + 1e-10 * np.eye(2))  # accepted by HiggsPair, rejected here
    with pytest.raises(NotInSubalgebra):
        check_tangency(bad)


def test_ymh_intrinsic_equals_ambient():
    g = make_grid(16)
    for name, n in [("SL", 2), ("SO", 3), ("SP", 4)]:
        p = random_group_pair(g, descriptor(name, n), 7)
        amb = oracles.ymh(p.alpha.data, p.phi.data)
        assert abs(ymh_intrinsic(p) - amb) < 1e-14 * amb
        assert abs(ymh(p) - amb) < 1e-13 * amb


@settings(max_examples=20, deadline=None)
@given(st.sampled_from([("SL", 2), ("SO", 3), ("SP", 2), ("SL", 3)]), st.integers(0, 2**32 - 1))
def test_tangency_property(group, seed):
    g = make_grid(8)
    assert check_tangency(random_group_pair(g, descriptor(*group), seed)) < 1e-12
