"""Charted manifolds carrying a pair of forms, and the checks that live on them."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import EtaVanishes, NoSolution, NotBasic, NotClosed, SingularFlat, StepTooLarge
from .tensor_point import (
    DEFAULT_TOL_RANK,
    PointTensor,
    Relation,
    SubspaceBasis,
    intersect,
    kernel_basis,
    lichnerowicz_matrix,
    matrix_rank,
    subspace_relation,
)

DEFAULT_TOL_CLOSED = 1e-4
ETA_FLOOR = 1e-10


@dataclass(frozen=True)
class ChartedManifold:
    """A single coordinate box; periodic axes are identified mod (upper - lower).

    Grid points on periodic axes cover the circle uniformly starting at
    ``lower``; on the other axes they sit strictly inside the box so central
    differences never leave it.
    """

    dim: int
    lower: tuple
    upper: tuple
    periodic: tuple
    grid_counts: tuple
    names: tuple = ()

    def __post_init__(self):
        for attr in ("lower", "upper", "periodic", "grid_counts"):
            val = tuple(getattr(self, attr))
            if len(val) != self.dim:
                raise ValueError(f"{attr} has length {len(val)}, expected {self.dim}")
            object.__setattr__(self, attr, val)
        if any(lo >= hi for lo, hi in zip(self.lower, self.upper)):
            raise ValueError("lower must be < upper on every axis")
        if any(int(c) < 3 for c in self.grid_counts):
            raise ValueError("grid counts must be >= 3")
        names = tuple(self.names) or tuple(f"u{i}" for i in range(self.dim))
        object.__setattr__(self, "names", names)

    @property
    def span(self) -> np.ndarray:
        return np.asarray(self.upper, float) - np.asarray(self.lower, float)

    @property
    def spacing(self) -> np.ndarray:
        counts = np.asarray(self.grid_counts, float)
        return np.where(self.periodic, self.span / counts, self.span / (counts + 1))

    def axes(self) -> list[np.ndarray]:
        out = []
        for lo, hi, per, n in zip(self.lower, self.upper, self.periodic, self.grid_counts):
            if per:
                out.append(lo + (hi - lo) * np.arange(n) / n)
            else:
                out.append(lo + (hi - lo) * np.arange(1, n + 1) / (n + 1))
        return out

    def grid(self) -> np.ndarray:
        """All grid points, shape (N, dim), in C order of the axis indices."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([m.reshape(-1) for m in mesh], axis=1)

    @property
    def grid_shape(self) -> tuple:
        return tuple(int(c) for c in self.grid_counts)

    def default_step(self) -> np.ndarray:
        return 1e-5 * self.span

    def wrap(self, x) -> np.ndarray:
        x = np.array(x, dtype=float)
        lo = np.asarray(self.lower, float)
        per = np.asarray(self.periodic, bool)
        x[per] = lo[per] + np.mod(x[per] - lo[per], self.span[per])
        return x

    def displacement(self, a, b) -> np.ndarray:
        """``a - b``, taking the short way round periodic axes."""
        d = np.asarray(a, float) - np.asarray(b, float)
        per = np.asarray(self.periodic, bool)
        P = self.span
        d[..., per] = np.mod(d[..., per] + P[per] / 2, P[per]) - P[per] / 2
        return d

    def contains(self, x, margin: float = 0.0) -> bool:
        x = np.asarray(x, float)
        per = np.asarray(self.periodic, bool)
        lo = np.asarray(self.lower, float) + margin
        hi = np.asarray(self.upper, float) - margin
        inside = (x >= lo) & (x <= hi)
        return bool(np.all(inside | per))

    def sample(self, rng: np.random.Generator, n: int, margin_frac: float = 0.05) -> np.ndarray:
        lo = np.asarray(self.lower, float)
        hi = np.asarray(self.upper, float)
        per = np.asarray(self.periodic, bool)
        margin = np.where(per, 0.0, margin_frac * self.span)
        return rng.uniform(lo + margin, hi - margin, size=(n, self.dim))

    def with_counts(self, counts) -> "ChartedManifold":
        return ChartedManifold(self.dim, self.lower, self.upper, self.periodic, tuple(counts), self.names)

    def describe(self) -> dict:
        return {
            "dim": self.dim,
            "names": list(self.names),
            "lower": [float(v) for v in self.lower],
            "upper": [float(v) for v in self.upper],
            "periodic": [bool(v) for v in self.periodic],
            "grid_counts": [int(v) for v in self.grid_counts],
        }


@dataclass(frozen=True)
class FormPair:
    """Callables returning ``Omega(x)`` (antisymmetric matrix) and ``eta(x)`` (covector)."""

    omega_at: Callable
    eta_at: Callable
    declared_closed: bool = True

    def at(self, x) -> PointTensor:
        return PointTensor.of(self.omega_at(x), self.eta_at(x))

    def flat_at(self, x) -> np.ndarray:
        return lichnerowicz_matrix(self.at(x))

    @classmethod
    def constant(cls, omega, eta) -> "FormPair":
        omega = np.array(omega, dtype=float)
        eta = np.array(eta, dtype=float)
        return cls(lambda x: omega, lambda x: eta)


@dataclass(frozen=True)
class StructureClassification:
    kind: str
    degree: int | None
    rank_of_flat: int | None
    residuals: dict = field(default_factory=dict)
    reason: str | None = None
    kernel_dim: int | None = None

    @property
    def verdict(self) -> str:
        if self.kind == "Degenerate":
            return f'Degenerate("{self.reason}")'
        return f"{self.kind}({self.degree})"

    @property
    def is_degenerate(self) -> bool:
        return self.kind == "Degenerate"

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "kind": self.kind,
            "degree": self.degree,
            "reason": self.reason,
            "rank_of_flat": self.rank_of_flat,
            "kernel_dim": self.kernel_dim,
            "residuals": dict(self.residuals),
        }


# ---------------------------------------------------------------------------
# finite differences


def _steps(M: ChartedManifold, h) -> np.ndarray:
    if h is None:
        return M.default_step()
    return np.broadcast_to(np.asarray(h, float), (M.dim,)).copy()


def gradient(M: ChartedManifold, f: Callable, x, h=None) -> np.ndarray:
    """Central-difference differential of a scalar function at x."""
    x = np.asarray(x, float)
    hs = _steps(M, h)
    g = np.empty(M.dim)
    for i in range(M.dim):
        e = np.zeros(M.dim)
        e[i] = hs[i]
        g[i] = (f(x + e) - f(x - e)) / (2 * hs[i])
    return g


def jacobian(M: ChartedManifold, fmap: Callable, x, h=None, target: ChartedManifold | None = None) -> np.ndarray:
    """Central-difference Jacobian of a chart map; columns are d fmap / d x_i.

    ``target`` supplies periodic identifications on the image side so that
    the difference across a seam is taken the short way.
    """
    x = np.asarray(x, float)
    hs = _steps(M, h)
    cols = []
    for i in range(M.dim):
        e = np.zeros(M.dim)
        e[i] = hs[i]
        plus = np.asarray(fmap(x + e), float)
        minus = np.asarray(fmap(x - e), float)
        d = target.displacement(plus, minus) if target is not None else plus - minus
        cols.append(d / (2 * hs[i]))
    return np.stack(cols, axis=1)


def hessian(M: ChartedManifold, f: Callable, x, h=None) -> np.ndarray:
    x = np.asarray(x, float)
    hs = 1e-3 * M.span if h is None else _steps(M, h)
    n = M.dim
    H = np.empty((n, n))
    f0 = f(x)
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = hs[i]
        H[i, i] = (f(x + ei) - 2 * f0 + f(x - ei)) / hs[i] ** 2
        for j in range(i + 1, n):
            ej = np.zeros(n)
            ej[j] = hs[j]
            val = (f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)) / (4 * hs[i] * hs[j])
            H[i, j] = H[j, i] = val
    return H


def _check_step(M: ChartedManifold, hs: np.ndarray):
    if np.any(hs <= 0):
        raise StepTooLarge("finite-difference step must be positive")
    bad = hs >= 0.5 * M.spacing
    if np.any(bad):
        raise StepTooLarge(f"step {hs[bad]} is not below half the grid spacing {M.spacing[bad]}")


def closedness_residuals_at(M: ChartedManifold, F: FormPair, x, hs) -> tuple[float, float]:
    n = M.dim
    d_omega = np.empty((n, n, n))
    d_eta = np.empty((n, n))
    for i in range(n):
        e = np.zeros(n)
        e[i] = hs[i]
        d_omega[i] = (np.asarray(F.omega_at(x + e)) - np.asarray(F.omega_at(x - e))) / (2 * hs[i])
        d_eta[i] = (np.asarray(F.eta_at(x + e)) - np.asarray(F.eta_at(x - e))) / (2 * hs[i])
    res_eta = float(np.max(np.abs(d_eta - d_eta.T), initial=0.0))
    # cyclic sum d_i O_jk + d_j O_ki + d_k O_ij
    cyc = d_omega + np.transpose(d_omega, (1, 2, 0)) + np.transpose(d_omega, (2, 0, 1))
    res_omega = float(np.max(np.abs(cyc), initial=0.0)) if n >= 3 else 0.0
    return res_omega, res_eta


def verify_closed(M: ChartedManifold, F: FormPair, h=None, points=None) -> dict:
    """Max central-difference residuals of d(omega) and d(eta) over the grid."""
    hs = _steps(M, h)
    _check_step(M, hs)
    pts = M.grid() if points is None else np.atleast_2d(points)
    worst_o = worst_e = 0.0
    for x in pts:
        ro, re = closedness_residuals_at(M, F, x, hs)
        worst_o = max(worst_o, ro)
        worst_e = max(worst_e, re)
    return {"omega": worst_o, "eta": worst_e}


# ---------------------------------------------------------------------------
# classification


def classify_structure(
    M: ChartedManifold,
    F: FormPair,
    tol_rank: float = DEFAULT_TOL_RANK,
    tol_closed: float = DEFAULT_TOL_CLOSED,
    h=None,
    points=None,
) -> StructureClassification:
    """Decide whether (M, omega, eta) is cosymplectic, precosymplectic or neither.

    Raises NotClosed when either form fails the closedness test and
    EtaVanishes at the first grid point where eta is (numerically) zero.
    """
    residuals = verify_closed(M, F, h, points)
    for name in ("omega", "eta"):
        if residuals[name] > tol_closed:
            raise NotClosed(name, residuals[name])

    pts = M.grid() if points is None else np.atleast_2d(points)
    flat_ranks = np.empty(len(pts), dtype=int)
    omega_ranks = np.empty(len(pts), dtype=int)
    for idx, x in enumerate(pts):
        pt = F.at(x)
        if np.linalg.norm(pt.eta) <= ETA_FLOOR:
            raise EtaVanishes(x)
        flat_ranks[idx] = matrix_rank(lichnerowicz_matrix(pt), tol_rank)
        omega_ranks[idx] = matrix_rank(pt.omega, tol_rank) if np.any(pt.omega) else 0

    def degenerate(reason, rank=None):
        return StructureClassification("Degenerate", None, rank, residuals, reason)

    if flat_ranks.min() != flat_ranks.max():
        return degenerate("rank of flat not constant")
    if omega_ranks.min() != omega_ranks.max():
        return degenerate("rank of omega not constant")
    rank = int(flat_ranks[0])
    rank_omega = int(omega_ranks[0])
    kdim = M.dim - rank

    # spot check ker(flat) == ker(omega) cap ker(eta) on a spread of grid points
    for x in pts[:: max(1, len(pts) // 16)]:
        pt = F.at(x)
        k_flat = kernel_basis(lichnerowicz_matrix(pt), tol_rank)
        k_common = intersect(kernel_basis(pt.omega, tol_rank), kernel_basis(pt.eta[None, :], tol_rank))
        if subspace_relation(k_flat, k_common, 1e-8) is not Relation.EQUAL:
            return degenerate("ker(flat) != ker(omega) & ker(eta)", rank)

    # ker(flat) is strictly inside ker(omega) iff rank(flat) > rank(omega)
    if rank <= rank_omega:
        return StructureClassification(
            "Degenerate", None, rank, residuals, "ker(flat)=ker(omega)", kdim)
    if rank == M.dim:
        if M.dim % 2 == 1:
            return StructureClassification("Cosymplectic", (M.dim - 1) // 2, rank, residuals, None, 0)
        return degenerate("ker(flat)=ker(omega)", rank)
    return StructureClassification("Precosymplectic", rank_omega // 2, rank, residuals, None, kdim)


def flat_kernel(F: FormPair, x, tol_rank: float = DEFAULT_TOL_RANK) -> SubspaceBasis:
    return kernel_basis(F.flat_at(x), tol_rank)


def reeb_field(M: ChartedManifold, F: FormPair, x, tol_rank: float = DEFAULT_TOL_RANK) -> np.ndarray:
    """Solve ``flat(v) = eta``; requires an invertible Lichnerowicz matrix at x."""
    pt = F.at(x)
    L = lichnerowicz_matrix(pt)
    if kernel_basis(L, tol_rank).rank:
        raise SingularFlat(f"Lichnerowicz matrix is singular at {list(np.asarray(x))}")
    v = np.linalg.solve(L, pt.eta)
    if np.linalg.norm(pt.omega @ v) > 1e-9 or abs(pt.eta @ v - 1) > 1e-9:
        raise SingularFlat("Reeb conditions not met to 1e-9; flat is too ill-conditioned")
    return v


def basicness_check(M: ChartedManifold, F: FormPair, f: Callable, x, tol: float = 1e-6,
                    h=None, tol_rank: float = DEFAULT_TOL_RANK) -> bool:
    """True when df annihilates every direction of ker(flat) at x."""
    K = flat_kernel(F, x, tol_rank)
    if K.rank == 0:
        return True
    df = gradient(M, f, x, h)
    return bool(np.max(np.abs(df @ K.vectors)) <= tol)


@dataclass(frozen=True)
class BracketTerms:
    """Pieces of a bracket evaluation.

    ``value`` is omega(v_f, v_g).  ``lie_derivative`` is df(v_g).  Under the
    convention L = -Omega + eta eta^T the exact identity
    ``df(v_g) = omega(v_f, v_g) + eta(v_f) eta(v_g)`` holds, so the two agree
    precisely when one of the functions is invariant under the Reeb direction.
    """

    value: float
    lie_derivative: float
    eta_term: float
    v_f: np.ndarray
    v_g: np.ndarray

    @property
    def discrepancy(self) -> float:
        return self.lie_derivative - self.value

    @property
    def identity_residual(self) -> float:
        return self.lie_derivative - self.value - self.eta_term


def hamiltonian_vector(F: FormPair, df, x, tol_rank: float = DEFAULT_TOL_RANK, tol: float = 1e-8) -> np.ndarray:
    """Minimum-norm solution of ``flat(v) = df``."""
    L = F.flat_at(x)
    v = np.linalg.pinv(L, rcond=tol_rank) @ df
    if np.linalg.norm(L @ v - df) > tol * max(1.0, np.linalg.norm(df)):
        raise NoSolution("df is not in the range of the Lichnerowicz map")
    return v


def bracket_terms(M: ChartedManifold, F: FormPair, f: Callable, g: Callable, x, h=None,
                  tol_basic: float = 1e-6, tol_rank: float = DEFAULT_TOL_RANK) -> BracketTerms:
    x = np.asarray(x, float)
    for name, fn in (("f", f), ("g", g)):
        if not basicness_check(M, F, fn, x, tol_basic, h, tol_rank):
            raise NotBasic(f"{name} is not constant along ker(flat) at {list(x)}")
    df = gradient(M, f, x, h)
    dg = gradient(M, g, x, h)
    v_f = hamiltonian_vector(F, df, x, tol_rank)
    v_g = hamiltonian_vector(F, dg, x, tol_rank)
    pt = F.at(x)
    return BracketTerms(
        value=float(v_f @ pt.omega @ v_g),
        lie_derivative=float(df @ v_g),
        eta_term=float((pt.eta @ v_f) * (pt.eta @ v_g)),
        v_f=v_f,
        v_g=v_g,
    )


def poisson_bracket(M: ChartedManifold, F: FormPair, f: Callable, g: Callable, x, h=None,
                    tol_basic: float = 1e-6, tol_rank: float = DEFAULT_TOL_RANK) -> float:
    """{f, g}(x) = omega(v_f, v_g) with flat(v_f) = df, flat(v_g) = dg."""
    return bracket_terms(M, F, f, g, x, h, tol_basic, tol_rank).value


def permute_axes(M: ChartedManifold, F: FormPair, perm: Sequence[int]) -> tuple[ChartedManifold, FormPair]:
    """Relabel chart axes: new axis i is old axis perm[i]."""
    perm = list(perm)
    inv = np.argsort(perm)
    M2 = ChartedManifold(
        M.dim,
        tuple(M.lower[p] for p in perm),
        tuple(M.upper[p] for p in perm),
        tuple(M.periodic[p] for p in perm),
        tuple(M.grid_counts[p] for p in perm),
        tuple(M.names[p] for p in perm),
    )

    def old(y):
        return np.asarray(y, float)[inv]

    F2 = FormPair(
        lambda y: np.asarray(F.omega_at(old(y)))[np.ix_(perm, perm)],
        lambda y: np.asarray(F.eta_at(old(y)))[perm],
        F.declared_closed,
    )
    return M2, F2


def grid_neighbors(shape: tuple, periodic: tuple, index: tuple):
    """Axis-adjacent grid indices, wrapping along periodic axes."""
    for axis, step in itertools.product(range(len(shape)), (-1, 1)):
        j = list(index)
        j[axis] += step
        if 0 <= j[axis] < shape[axis]:
            yield tuple(j)
        elif periodic[axis] and shape[axis] > 2:
            j[axis] %= shape[axis]
            yield tuple(j)
