"""Pointwise linear algebra for a pair (omega, eta) at a single point.

Conventions used throughout the package:

* ``omega`` is stored as the antisymmetric matrix ``Omega[i, j] = omega(e_i, e_j)``.
* The contraction ``iota_v omega`` has components ``omega(v, e_j) = (-Omega @ v)[j]``.
* The Lichnerowicz map ``v -> iota_v omega + eta(v) eta`` is therefore the matrix
  ``L = -Omega + outer(eta, eta)`` acting on column vectors.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass

import numpy as np

from .errors import FrameTooSmall, ShapeMismatch

DEFAULT_TOL_RANK = 1e-9
ANTISYMMETRY_TOL = 1e-12
ORTHONORMAL_TOL = 1e-10


@dataclass(frozen=True)
class PointTensor:
    """Values of omega and eta at one point, in chart components."""

    dim: int
    omega: np.ndarray
    eta: np.ndarray

    def __post_init__(self):
        omega = np.asarray(self.omega, dtype=float)
        eta = np.asarray(self.eta, dtype=float).reshape(-1)
        if omega.shape != (self.dim, self.dim) or eta.shape != (self.dim,):
            raise ShapeMismatch(
                f"omega {omega.shape} / eta {eta.shape} do not match dim={self.dim}")
        if np.max(np.abs(omega + omega.T), initial=0.0) > ANTISYMMETRY_TOL:
            raise ShapeMismatch("omega is not antisymmetric")
        if not np.all(np.isfinite(eta)):
            raise ValueError("eta has non-finite entries")
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "eta", eta)

    @classmethod
    def of(cls, omega, eta):
        eta = np.asarray(eta, dtype=float).reshape(-1)
        omega = np.asarray(omega, dtype=float)
        if omega.shape != (eta.size, eta.size):
            raise ShapeMismatch(f"omega {omega.shape} vs eta {eta.shape}")
        return cls(eta.size, omega, eta)


@dataclass(frozen=True)
class SubspaceBasis:
    """Orthonormal basis of a linear subspace of R^dim, stored as columns."""

    dim: int
    vectors: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=float).reshape(self.dim, -1)
        if v.shape[1] > self.dim:
            raise ShapeMismatch("more basis vectors than the ambient dimension")
        gram = v.T @ v
        if np.max(np.abs(gram - np.eye(v.shape[1])), initial=0.0) > ORTHONORMAL_TOL:
            raise ValueError("basis vectors are not orthonormal")
        object.__setattr__(self, "vectors", v)

    @property
    def rank(self) -> int:
        return self.vectors.shape[1]

    def projector(self) -> np.ndarray:
        return self.vectors @ self.vectors.T

    def __len__(self):
        return self.rank

    @classmethod
    def zero(cls, dim):
        return cls(dim, np.zeros((dim, 0)))

    @classmethod
    def standard(cls, dim, indices):
        return cls(dim, np.eye(dim)[:, list(indices)])


class Relation(enum.Enum):
    EQUAL = "Equal"
    U_IN_V = "UcontainedInV_strict"
    V_IN_U = "VcontainedInU_strict"
    INCOMPARABLE = "Incomparable"


def lichnerowicz_matrix(pt: PointTensor) -> np.ndarray:
    """Matrix of v -> iota_v omega + eta(v) eta."""
    return -pt.omega + np.outer(pt.eta, pt.eta)


def kernel_basis(A, tol_rank: float = DEFAULT_TOL_RANK) -> SubspaceBasis:
    """Right null space of ``A``; singular values <= tol_rank * sigma_max count as zero."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = A.shape[1]
    if A.size == 0:
        return SubspaceBasis(n, np.eye(n))
    _, s, vh = np.linalg.svd(A, full_matrices=True)
    smax = s[0] if s.size else 0.0
    if smax == 0.0:
        return SubspaceBasis(n, np.eye(n))
    rank = int(np.sum(s > tol_rank * smax))
    return SubspaceBasis(n, vh[rank:].T.copy())


def matrix_rank(A, tol_rank: float = DEFAULT_TOL_RANK) -> int:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    return A.shape[1] - kernel_basis(A, tol_rank).rank


def span(vectors, dim: int | None = None, tol: float = 1e-9, atol: float = 1e-12) -> SubspaceBasis:
    """Orthonormal basis for the span of the given column vectors.

    Directions with singular value below ``max(tol * sigma_max, atol)`` are
    dropped, so vanishing fields contribute nothing.
    """
    V = np.asarray(vectors, dtype=float)
    if dim is None:
        dim = V.shape[0]
    V = V.reshape(dim, -1)
    if V.shape[1] == 0:
        return SubspaceBasis.zero(dim)
    u, s, _ = np.linalg.svd(V, full_matrices=False)
    if s.size == 0 or s[0] <= atol:
        return SubspaceBasis.zero(dim)
    r = int(np.sum(s > max(tol * s[0], atol)))
    return SubspaceBasis(dim, u[:, :r].copy())


def subspace_sum(U: SubspaceBasis, V: SubspaceBasis, tol: float = 1e-9) -> SubspaceBasis:
    _check_same_dim(U, V)
    return span(np.hstack([U.vectors, V.vectors]), U.dim, tol)


def intersect(U: SubspaceBasis, V: SubspaceBasis, tol: float = 1e-8) -> SubspaceBasis:
    """Intersection of two subspaces.

    A unit vector ``U c`` lies in V when ``(I - P_V) U c`` vanishes; the
    singular values of ``(I - P_V) U`` are sines of principal angles, so an
    absolute threshold is the right notion here.
    """
    _check_same_dim(U, V)
    if U.rank == 0 or V.rank == 0:
        return SubspaceBasis.zero(U.dim)
    R = U.vectors - V.vectors @ (V.vectors.T @ U.vectors)
    _, s, vh = np.linalg.svd(R, full_matrices=True)
    k = int(np.sum(s > tol))
    coeffs = vh[k:].T
    return span(U.vectors @ coeffs, U.dim)


def _check_same_dim(U, V):
    if U.dim != V.dim:
        raise ShapeMismatch(f"ambient dims differ: {U.dim} vs {V.dim}")


def contains(V: SubspaceBasis, U: SubspaceBasis, tol: float) -> bool:
    """True when every basis vector of U lies within ``tol`` of V."""
    if U.rank == 0:
        return True
    residual = U.vectors - V.vectors @ (V.vectors.T @ U.vectors)
    return bool(np.max(np.linalg.norm(residual, axis=0)) <= tol)


def subspace_relation(U: SubspaceBasis, V: SubspaceBasis, tol: float = 1e-8) -> Relation:
    _check_same_dim(U, V)
    u_in_v = contains(V, U, tol)
    v_in_u = contains(U, V, tol)
    if u_in_v and v_in_u:
        return Relation.EQUAL
    if u_in_v and U.rank < V.rank:
        return Relation.U_IN_V
    if v_in_u and V.rank < U.rank:
        return Relation.V_IN_U
    return Relation.INCOMPARABLE


def _perm_sign(p):
    sign = 1
    p = list(p)
    for i in range(len(p)):
        while p[i] != i:
            j = p[i]
            p[i], p[j] = p[j], p[i]
            sign = -sign
    return sign


def wedge_top_value(pt: PointTensor, r: int, frame) -> float:
    """Evaluate ``(eta ^ omega^r)(f_1, ..., f_{2r+1})`` by a permutation sum.

    Uses the determinant normalisation, so ``(dx ^ dy)(d_x, d_y) = 1`` and
    ``omega^n`` is ``n!`` times the Liouville volume for a standard omega.
    The cost is (2r+1)!, which is why dimensions are capped at 7.
    """
    if r < 0:
        raise ValueError("r must be nonnegative")
    k = 2 * r + 1
    # frame is a sequence of vectors; work with them as columns
    F = np.asarray(frame, dtype=float).reshape(-1, pt.dim).T
    if k > pt.dim or F.shape[1] < k:
        raise FrameTooSmall(f"need {k} frame vectors in dimension {pt.dim}")
    if pt.dim > 7:
        raise ValueError("wedge_top_value is limited to dim <= 7")
    F = F[:, :k]
    eta_vals = pt.eta @ F
    gram = F.T @ pt.omega @ F
    total = 0.0
    for p in itertools.permutations(range(k)):
        term = eta_vals[p[0]]
        if term == 0.0:
            continue
        for i in range(r):
            term *= gram[p[1 + 2 * i], p[2 + 2 * i]]
        total += _perm_sign(p) * term
    return total / (2 ** r)

