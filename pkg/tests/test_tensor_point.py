import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cosym.errors import FrameTooSmall, ShapeMismatch
from cosym.tensor_point import (
    PointTensor,
    Relation,
    SubspaceBasis,
    intersect,
    kernel_basis,
    lichnerowicz_matrix,
    span,
    subspace_relation,
    wedge_top_value,
)
from strategies import KINDS, corpus, random_point_tensor

STD3 = PointTensor.of([[0, 1, 0], [-1, 0, 0], [0, 0, 0]], [0, 0, 1])


def expanded_wedge(pt, r, frame):
    """eta ^ omega^r by expanding both forms in basis covectors and taking minors.

    e^{a_1} ^ ... ^ e^{a_k} (v_1, ..., v_k) = det[v_q[a_p]], and
    omega = sum_{i<j} Omega_ij e^i ^ e^j.  Independent of the permutation sum.
    """
    k = 2 * r + 1
    V = np.asarray(frame, float)[:k].T
    pairs = [(i, j) for i in range(pt.dim) for j in range(i + 1, pt.dim)]
    total = 0.0
    for a in range(pt.dim):
        if pt.eta[a] == 0:
            continue
        for choice in itertools.product(pairs, repeat=r):
            idx = [a] + [c for pair in choice for c in pair]
            if len(set(idx)) < k:
                continue
            coef = pt.eta[a] * np.prod([pt.omega[i, j] for i, j in choice])
            if coef:
                total += coef * np.linalg.det(V[idx, :])
    return total


# --- lichnerowicz_matrix ----------------------------------------------------


def test_flat_matrix_one_dimensional():
    assert np.array_equal(lichnerowicz_matrix(PointTensor.of([[0]], [1])), [[1.0]])


def test_flat_matrix_standard_r3():
    L = lichnerowicz_matrix(STD3)
    assert np.array_equal(L, [[0, -1, 0], [1, 0, 0], [0, 0, 1]])


def test_flat_matrix_applied_to_basis_vectors():
    # flat(e_i) has components omega(e_i, e_j) + eta_i eta_j
    L = lichnerowicz_matrix(STD3)
    for i in range(3):
        covector = STD3.omega[i, :] + STD3.eta[i] * STD3.eta
        assert np.allclose(L @ np.eye(3)[i], covector)


def test_flat_matrix_without_eta():
    L = lichnerowicz_matrix(PointTensor.of([[0, 1], [-1, 0]], [0, 0]))
    assert np.array_equal(L, [[0, -1], [1, 0]])


def test_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        PointTensor.of(np.zeros((2, 2)), [1, 0, 0])
    with pytest.raises(ShapeMismatch):
        PointTensor(3, np.zeros((2, 2)), np.zeros(3))


def test_non_antisymmetric_rejected():
    with pytest.raises(ShapeMismatch):
        PointTensor.of([[0, 1], [1, 0]], [1, 0])


@given(st.integers(1, 7), st.integers(0, 10_000))
@settings(max_examples=60, deadline=None)
def test_flat_minus_eta_eta_is_antisymmetric(dim, seed):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(dim, dim)) * rng.uniform(0.01, 100)
    pt = PointTensor.of(A - A.T, rng.normal(size=dim))
    B = lichnerowicz_matrix(pt) - np.outer(pt.eta, pt.eta)
    assert np.max(np.abs(B + B.T), initial=0) <= 1e-12


# --- kernel_basis -----------------------------------------------------------


def test_kernel_of_identity_is_empty():
    assert kernel_basis(np.eye(3), 1e-9).rank == 0


def test_kernel_of_zero_is_everything():
    K = kernel_basis(np.zeros((2, 2)), 1e-9)
    assert K.rank == 2
    assert np.allclose(K.vectors.T @ K.vectors, np.eye(2))


def test_standard_flat_is_invertible():
    L = lichnerowicz_matrix(STD3)
    assert abs(np.linalg.det(L) - 1) < 1e-12
    assert kernel_basis(L, 1e-9).rank == 0


def test_kernel_tolerance_is_relative():
    A = np.diag([1.0, 1e-12, 0.0])
    assert kernel_basis(A, 1e-9).rank == 2
    assert kernel_basis(1e8 * A, 1e-9).rank == 2


@given(st.integers(1, 7), st.integers(0, 3), st.integers(0, 10_000))
@settings(max_examples=60, deadline=None)
def test_kernel_basis_is_orthonormal_and_annihilated(n, drop, seed):
    rng = np.random.default_rng(seed)
    r = max(0, n - drop)
    A = rng.normal(size=(n, r)) @ rng.normal(size=(r, n))
    K = kernel_basis(A, 1e-9)
    assert K.rank == n - np.linalg.matrix_rank(A)
    assert np.allclose(K.vectors.T @ K.vectors, np.eye(K.rank), atol=1e-10)
    assert np.max(np.abs(A @ K.vectors), initial=0) < 1e-9 * max(1.0, np.abs(A).max())


# --- subspace_relation ------------------------------------------------------


def test_relations_on_coordinate_subspaces():
    e = lambda *idx: SubspaceBasis.standard(3, list(idx))  # noqa: E731
    assert subspace_relation(e(0), e(0, 1), 1e-8) is Relation.U_IN_V
    assert subspace_relation(e(0, 1), e(0), 1e-8) is Relation.V_IN_U
    assert subspace_relation(e(2), e(2), 1e-8) is Relation.EQUAL
    assert subspace_relation(e(0), e(1), 1e-8) is Relation.INCOMPARABLE
    assert Relation.U_IN_V.value == "UcontainedInV_strict"


def test_relation_dimension_mismatch():
    with pytest.raises(ShapeMismatch):
        subspace_relation(SubspaceBasis.zero(2), SubspaceBasis.zero(3))


def test_equal_for_different_bases_of_same_plane():
    U = span(np.array([[1.0, 1.0], [1.0, -1.0], [0.0, 0.0]]))
    V = SubspaceBasis.standard(3, [0, 1])
    assert subspace_relation(U, V) is Relation.EQUAL


def test_zero_subspace_is_contained_everywhere():
    assert subspace_relation(SubspaceBasis.zero(3), SubspaceBasis.standard(3, [1])) is Relation.U_IN_V
    assert subspace_relation(SubspaceBasis.zero(3), SubspaceBasis.zero(3)) is Relation.EQUAL


def test_non_orthonormal_basis_rejected():
    with pytest.raises(ValueError):
        SubspaceBasis(2, np.array([[1.0, 1.0], [0.0, 1.0]]))


@given(st.integers(2, 7), st.integers(0, 10_000))
@settings(max_examples=60, deadline=None)
def test_intersection_contained_in_both(n, seed):
    rng = np.random.default_rng(seed)
    common = rng.normal(size=(n, 1))
    U = span(np.hstack([common, rng.normal(size=(n, rng.integers(0, n - 1)))]))
    V = span(np.hstack([common, rng.normal(size=(n, rng.integers(0, n - 1)))]))
    W = intersect(U, V)
    assert W.rank >= 1
    assert subspace_relation(W, U) in (Relation.EQUAL, Relation.U_IN_V)
    assert subspace_relation(W, V) in (Relation.EQUAL, Relation.U_IN_V)
    # dimension formula for subspaces in general position
    assert W.rank == U.rank + V.rank - np.linalg.matrix_rank(np.hstack([U.vectors, V.vectors]))


# --- wedge_top_value --------------------------------------------------------


def test_wedge_on_permuted_standard_frame():
    frame = [np.eye(3)[2], np.eye(3)[0], np.eye(3)[1]]
    assert wedge_top_value(STD3, 1, frame) == pytest.approx(1.0, abs=1e-15)


def test_wedge_with_zero_eta_is_zero():
    pt = PointTensor.of(np.array([[0, 2.0], [-2.0, 0]]), [0, 0])
    rng = np.random.default_rng(1)
    assert wedge_top_value(pt, 0, rng.normal(size=(2, 2))) == 0.0


def test_wedge_with_zero_omega_is_zero():
    pt = PointTensor.of(np.zeros((3, 3)), [0, 0, 1])
    rng = np.random.default_rng(2)
    for _ in range(5):
        assert wedge_top_value(pt, 1, rng.normal(size=(3, 3))) == 0.0


def test_wedge_frame_too_small():
    with pytest.raises(FrameTooSmall):
        wedge_top_value(STD3, 2, np.eye(3))
    with pytest.raises(FrameTooSmall):
        wedge_top_value(STD3, 1, np.eye(3)[:2])


def test_wedge_top_power_counts_orderings():
    # omega = dx1^dy1 + dx2^dy2: (dt ^ omega^2)(dt, dx1, dy1, dx2, dy2) = 2! under the determinant convention
    O = np.zeros((5, 5))
    O[1, 2], O[2, 1], O[3, 4], O[4, 3] = 1, -1, 1, -1
    pt = PointTensor.of(O, np.eye(5)[0])
    assert wedge_top_value(pt, 2, np.eye(5)) == pytest.approx(2.0)


@given(st.integers(0, 3), st.integers(0, 10_000))
@settings(max_examples=40, deadline=None)
def test_wedge_matches_basis_expansion(r, seed):
    rng = np.random.default_rng(seed)
    dim = 2 * r + 1 + int(rng.integers(0, 7 - 2 * r))
    A = rng.normal(size=(dim, dim))
    pt = PointTensor.of(A - A.T, rng.normal(size=dim))
    frame = rng.normal(size=(dim, dim))
    got = wedge_top_value(pt, r, frame)
    want = expanded_wedge(pt, r, frame)
    assert got == pytest.approx(want, rel=1e-9, abs=1e-9)


@given(st.integers(0, 10_000))
@settings(max_examples=30, deadline=None)
def test_wedge_is_alternating_in_frame(seed):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(5, 5))
    pt = PointTensor.of(A - A.T, rng.normal(size=5))
    frame = rng.normal(size=(5, 5))
    swapped = frame[[1, 0, 2, 3, 4]]
    assert wedge_top_value(pt, 2, swapped) == pytest.approx(-wedge_top_value(pt, 2, frame), rel=1e-9, abs=1e-12)


# --- kernels of the flat map ------------------------------------------------


@pytest.mark.parametrize("kind", KINDS)
def test_kernel_of_flat_is_intersection(kind):
    rng = np.random.default_rng(7)
    for dim in range(1, 8):
        for _ in range(10):
            k = "generic" if kind == "degenerate" and dim < 3 else kind
            pt, _, _ = random_point_tensor(rng, dim, k)
            kflat = kernel_basis(lichnerowicz_matrix(pt))
            both = intersect(kernel_basis(pt.omega), kernel_basis(pt.eta[None, :]))
            assert subspace_relation(kflat, both, 1e-8) is Relation.EQUAL


def test_rigged_tensors_have_expected_kernels():
    for kind, pt, kflat, komega in corpus(seed=3, per_dim=12):
        if kflat is None:
            continue
        assert kernel_basis(lichnerowicz_matrix(pt)).rank == kflat
        assert kernel_basis(pt.omega).rank == komega


def test_invertibility_tracks_odd_dim_and_volume_form():
    for kind, pt, _, _ in corpus(seed=4, per_dim=12):
        if kind not in ("cosymplectic", "degenerate", "precosymplectic"):
            continue
        invertible = kernel_basis(lichnerowicz_matrix(pt)).rank == 0
        if pt.dim % 2:
            vol = abs(wedge_top_value(pt, pt.dim // 2, np.eye(pt.dim))) > 1e-10
        else:
            vol = False
        assert invertible == vol, (kind, pt.dim)


def test_generic_even_dimension_flat_is_invertible():
    # det(-Omega + eta eta^T) = det(-Omega) when Omega is invertible and antisymmetric
    rng = np.random.default_rng(5)
    A = rng.normal(size=(4, 4))
    pt = PointTensor.of(A - A.T, rng.normal(size=4))
    assert np.linalg.det(lichnerowicz_matrix(pt)) == pytest.approx(np.linalg.det(-pt.omega))
