"""Torus actions, moment maps, moment bodies, Morse-Bott analysis and reduction."""

from __future__ import annotations

import csv
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, HalfspaceIntersection

from .errors import (
    EmptyImage,
    NoAction,
    NoMomentMap,
    NotClassified,
    NotInLevelSet,
    NotRegularValue,
    SliceNotTransverse,
)
from .geometry import (
    ChartedManifold,
    FormPair,
    StructureClassification,
    classify_structure,
    flat_kernel,
    gradient,
    grid_neighbors,
    hessian,
    jacobian,
)
from .scenario import Scenario
from .tensor_point import (
    DEFAULT_TOL_RANK,
    Relation,
    intersect,
    kernel_basis,
    matrix_rank,
    span,
    subspace_relation,
)

TWO_PI = 2 * np.pi


@dataclass(frozen=True)
class TorusActionSpec:
    """Action of the n-torus on a chart, with fundamental fields and moment map.

    ``moment_map`` returns the m = n - k components dual to the rows of
    ``moment_generators`` (by default the standard generators not used by
    ``subtorus``), i.e. coordinates on the annihilator of the subtorus.
    """

    dim: int
    torus_rank: int
    act: Callable
    fundamental_fields: tuple
    moment_map: Callable | None = None
    subtorus: np.ndarray | None = None
    moment_generators: np.ndarray | None = None
    proper_declared: bool = True

    def __post_init__(self):
        n = self.torus_rank
        if len(self.fundamental_fields) != n:
            raise ValueError("need one fundamental field per torus generator")
        sub = np.zeros((0, n)) if self.subtorus is None else np.atleast_2d(np.asarray(self.subtorus, float))
        if sub.size == 0:
            sub = np.zeros((0, n))
        object.__setattr__(self, "subtorus", sub)
        gens = self.moment_generators
        if gens is None:
            gens = complement_generators(sub, n)
        gens = np.asarray(gens, float).reshape(-1, n)
        object.__setattr__(self, "moment_generators", gens)
        object.__setattr__(self, "fundamental_fields", tuple(self.fundamental_fields))

    @property
    def moment_dim(self) -> int:
        return self.moment_generators.shape[0]

    def fields_matrix(self, x) -> np.ndarray:
        """Columns are the fundamental fields of the standard generators at x."""
        return np.stack([np.asarray(f(x), float) for f in self.fundamental_fields], axis=1)

    def field(self, xi, x) -> np.ndarray:
        return self.fields_matrix(x) @ np.asarray(xi, float)

    def full_moment(self, x) -> np.ndarray:
        """Moment map as an element of the full dual Lie algebra R^n."""
        return self.moment_generators.T @ np.asarray(self.moment_map(x), float)

    def component(self, xi) -> Callable:
        xi = np.asarray(xi, float)
        return lambda x: float(self.full_moment(x) @ xi)


def complement_generators(subtorus: np.ndarray, n: int) -> np.ndarray:
    """Standard basis vectors completing the rows of ``subtorus`` to a basis."""
    rows = [r for r in np.atleast_2d(subtorus) if r.size]
    chosen = []
    for i in range(n):
        e = np.eye(n)[i]
        if matrix_rank(np.array(rows + chosen + [e]), 1e-9) > len(rows) + len(chosen):
            chosen.append(e)
    return np.array(chosen).reshape(-1, n)


def _require_action(S: Scenario) -> TorusActionSpec:
    if S.action is None:
        raise NoAction(f"scenario {S.name!r} has no torus action")
    return S.action


def _require_moment(S: Scenario) -> TorusActionSpec:
    A = _require_action(S)
    if A.moment_map is None:
        raise NoMomentMap(f"scenario {S.name!r} has no moment map")
    return A


def _pick_points(S: Scenario, points, max_points: int, seed: int = 0) -> np.ndarray:
    if points is not None:
        return np.atleast_2d(np.asarray(points, float))
    grid = S.manifold.grid()
    if len(grid) <= max_points:
        return grid
    rng = np.random.default_rng(seed)
    return grid[np.sort(rng.choice(len(grid), max_points, replace=False))]


@dataclass(frozen=True)
class CheckReport:
    """Named residuals plus the tolerance they were judged against."""

    passed: bool
    residuals: dict
    tol: float
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"passed": self.passed, "tol": self.tol, "residuals": dict(self.residuals),
                **({"details": dict(self.details)} if self.details else {})}


def action_axiom_residuals(S: Scenario, rng: np.random.Generator, samples: int = 10) -> dict:
    """Residuals of act(0,x)=x, the group law, and the fundamental-field derivative."""
    A = _require_action(S)
    M = S.manifold
    pts = M.sample(rng, samples)
    thetas = rng.uniform(0, TWO_PI, size=(samples, 2, A.torus_rank))
    identity = composition = derivative = 0.0
    h = 1e-5
    for x, (t1, t2) in zip(pts, thetas):
        identity = max(identity, np.max(np.abs(M.displacement(A.act(np.zeros(A.torus_rank), x), x))))
        lhs = A.act(t1, A.act(t2, x))
        rhs = A.act(np.mod(t1 + t2, TWO_PI), x)
        composition = max(composition, np.max(np.abs(M.displacement(lhs, rhs))))
        for i in range(A.torus_rank):
            e = np.zeros(A.torus_rank)
            e[i] = h
            fd = M.displacement(A.act(e, x), A.act(-e, x)) / (2 * h)
            derivative = max(derivative, np.max(np.abs(fd - A.fundamental_fields[i](x))))
    return {"identity": float(identity), "composition": float(composition), "derivative": float(derivative)}


def verify_precosymplectic_action(S: Scenario, group_samples: Sequence, tol: float = 1e-6,
                                  points=None, max_points: int = 64, seed: int = 0) -> CheckReport:
    """Check k*omega = omega and k*eta = eta for sampled group elements."""
    A = _require_action(S)
    M, F = S.manifold, S.forms
    pts = _pick_points(S, points, max_points, seed)
    res_omega = res_eta = 0.0
    for theta in group_samples:
        theta = np.asarray(theta, float)
        for x in pts:
            y = A.act(theta, x)
            J = jacobian(M, lambda z: A.act(theta, z), x, target=M)
            Oy = np.asarray(F.omega_at(y))
            res_omega = max(res_omega, float(np.max(np.abs(J.T @ Oy @ J - F.omega_at(x)))))
            res_eta = max(res_eta, float(np.max(np.abs(J.T @ F.eta_at(y) - F.eta_at(x)))))
    passed = res_omega <= tol and res_eta <= tol
    return CheckReport(passed, {"omega_pullback": res_omega, "eta_pullback": res_eta}, tol,
                       {"group_samples": len(group_samples), "points": len(pts)})


def verify_moment_map(S: Scenario, tol: float = 1e-6, points=None, max_points: int = 256,
                      group_samples: Sequence | None = None, seed: int = 0, h=None) -> CheckReport:
    """Check eta(xi_M) = 0, d mu^xi = iota_{xi_M} omega and torus invariance of mu.

    Moment components are checked against their generators; subtorus
    generators must have ``iota_{xi_M} omega = 0`` since mu pairs trivially
    with them.
    """
    A = _require_moment(S)
    M, F = S.manifold, S.forms
    pts = _pick_points(S, points, max_points, seed)
    if group_samples is None:
        rng = np.random.default_rng(seed + 1)
        group_samples = rng.uniform(0, TWO_PI, size=(4, A.torus_rank))
    res_eta = res_moment = res_null = res_inv = 0.0
    gens = A.moment_generators
    for x in pts:
        Xi = A.fields_matrix(x)
        O = np.asarray(F.omega_at(x))
        res_eta = max(res_eta, float(np.max(np.abs(F.eta_at(x) @ Xi), initial=0.0)))
        for c, xi in enumerate(gens):
            dmu = gradient(M, lambda z: float(np.asarray(A.moment_map(z), float)[c]), x, h)
            res_moment = max(res_moment, float(np.max(np.abs(dmu - (-O @ (Xi @ xi))))))
        for xi in A.subtorus:
            res_null = max(res_null, float(np.max(np.abs(O @ (Xi @ xi)))))
        mu0 = np.asarray(A.moment_map(x), float)
        for theta in group_samples:
            res_inv = max(res_inv, float(np.max(np.abs(np.asarray(A.moment_map(A.act(np.asarray(theta), x))) - mu0))))
    residuals = {"eta_of_orbit": res_eta, "moment_equation": res_moment,
                 "null_generators": res_null, "invariance": res_inv}
    return CheckReport(all(v <= tol for v in residuals.values()), residuals, tol, {"points": len(pts)})


def null_ideal(S: Scenario, points=None, max_points: int = 256, tol_rank: float = 1e-8,
               atol: float = 1e-9, seed: int = 0) -> np.ndarray:
    """Rows spanning {xi : iota_{xi_M} omega = 0 at every sampled point}."""
    A = _require_action(S)
    pts = _pick_points(S, points, max_points, seed)
    blocks = [np.asarray(S.forms.omega_at(x)) @ A.fields_matrix(x) for x in pts]
    stacked = np.vstack(blocks)
    if np.max(np.abs(stacked), initial=0.0) <= atol:
        return np.eye(A.torus_rank)
    return kernel_basis(stacked, tol_rank).vectors.T


@dataclass(frozen=True)
class CleanResult:
    equal: bool
    orbit_dim: int
    null_orbit_dim: int
    leaf_dim: int
    intersection_dim: int
    declared_null_ok: bool
    extra_null_dim: int


def clean_action_details(S: Scenario, x, tol: float = 1e-8, null_rows=None,
                         classification: StructureClassification | None = None,
                         tol_rank: float = DEFAULT_TOL_RANK) -> CleanResult:
    A = _require_action(S)
    if classification is not None and classification.is_degenerate:
        raise NotClassified(f"scenario {S.name!r} is {classification.verdict}")
    if null_rows is None:
        null_rows = null_ideal(S)
    null_rows = np.atleast_2d(null_rows).reshape(-1, A.torus_rank)
    declared = A.subtorus
    declared_ok = True
    if declared.size:
        null_span = span(null_rows.T, A.torus_rank)
        declared_ok = subspace_relation(span(declared.T, A.torus_rank), null_span, 1e-8) in (
            Relation.EQUAL, Relation.U_IN_V)
    declared_rank = matrix_rank(declared, 1e-9) if declared.size else 0
    x = np.asarray(x, float)
    Xi = A.fields_matrix(x)
    T_orbit = span(Xi, S.dim)
    T_null = span(Xi @ null_rows.T, S.dim) if null_rows.size else span(np.zeros((S.dim, 0)), S.dim)
    T_leaf = flat_kernel(S.forms, x, tol_rank)
    inter = intersect(T_orbit, T_leaf, tol)
    equal = subspace_relation(T_null, inter, tol) is Relation.EQUAL
    return CleanResult(equal, T_orbit.rank, T_null.rank, T_leaf.rank, inter.rank,
                       declared_ok, int(null_rows.shape[0]) - declared_rank)


def clean_action_check(S: Scenario, x, tol: float = 1e-8, null_rows=None,
                       classification: StructureClassification | None = None) -> bool:
    """T_x(N.x) == T_x(K.x) & ker(flat_x)."""
    return clean_action_details(S, x, tol, null_rows, classification).equal


# ---------------------------------------------------------------------------
# moment bodies


@dataclass(frozen=True)
class Halfspace:
    """``normal . y <= offset`` with a unit normal."""

    normal: np.ndarray
    offset: float
    kind: str = "facet"  # facet | box | affine

    @property
    def clipping(self) -> bool:
        return self.kind != "facet"

    def to_dict(self) -> dict:
        return {"normal": [float(v) for v in self.normal], "offset": float(self.offset),
                "kind": self.kind, "clipping": self.clipping}


@dataclass(frozen=True)
class MomentBody:
    samples: np.ndarray
    vertices: np.ndarray
    halfspaces: tuple
    clip_box: np.ndarray

    @property
    def dim(self) -> int:
        return self.samples.shape[1]

    @property
    def facets(self) -> list[Halfspace]:
        """Halfspaces that are not artifacts of the clip box."""
        return [h for h in self.halfspaces if not h.clipping]

    def in_box(self, tol: float = 0.0) -> np.ndarray:
        lo, hi = self.clip_box[:, 0], self.clip_box[:, 1]
        return np.all((self.samples >= lo - tol) & (self.samples <= hi + tol), axis=1)

    def violation(self, y) -> float:
        y = np.asarray(y, float)
        return max((float(h.normal @ y - h.offset) for h in self.halfspaces), default=0.0)

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "clip_box": self.clip_box.tolist(),
            "n_samples": int(len(self.samples)),
            "vertices": self.vertices.tolist(),
            "halfspaces": [h.to_dict() for h in self.halfspaces],
        }

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([f"mu_{i + 1}" for i in range(self.dim)])
            for v in self.vertices:
                w.writerow([f"{float(c):.12g}" for c in v])


def _box_halfspaces(box: np.ndarray) -> list[Halfspace]:
    out = []
    for i, (lo, hi) in enumerate(box):
        e = np.eye(len(box))[i]
        out.append(Halfspace(e, float(hi), "box"))
        out.append(Halfspace(-e, float(-lo), "box"))
    return out


def _dedupe(halfspaces: list[Halfspace], tol: float = 1e-9) -> list[Halfspace]:
    out: list[Halfspace] = []
    for h in halfspaces:
        if not any(np.allclose(h.normal, g.normal, atol=tol) and abs(h.offset - g.offset) <= tol for g in out):
            out.append(h)
    return out


def _flag_box(h: Halfspace, box: np.ndarray, tol: float = 1e-9) -> Halfspace:
    for i, (lo, hi) in enumerate(box):
        e = np.eye(len(box))[i]
        if np.allclose(h.normal, e, atol=tol) and abs(h.offset - hi) <= tol:
            return Halfspace(h.normal, h.offset, "box")
        if np.allclose(h.normal, -e, atol=tol) and abs(h.offset + lo) <= tol:
            return Halfspace(h.normal, h.offset, "box")
    return h


def _clean(v: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    v = np.where(np.abs(v) < tol, 0.0, v)
    return v + 0.0


def _hull_full(samples: np.ndarray, box: np.ndarray):
    m = samples.shape[1]
    if m == 1:
        lo = max(samples.min(), box[0, 0])
        hi = min(samples.max(), box[0, 1])
        if lo > hi:
            raise EmptyImage("moment image misses the clip box")
        hs = [_flag_box(Halfspace(np.array([1.0]), float(hi)), box),
              _flag_box(Halfspace(np.array([-1.0]), float(-lo)), box)]
        return np.array([[lo], [hi]]) if hi > lo else np.array([[lo]]), hs
    hull = ConvexHull(samples)
    eqs = hull.equations  # n . y + c <= 0
    A = np.vstack([eqs[:, :m], np.eye(m), -np.eye(m)])
    b = np.concatenate([-eqs[:, m], box[:, 1], -box[:, 0]])
    norms = np.linalg.norm(A, axis=1)
    # Chebyshev centre as interior point for the halfspace intersection
    res = linprog(np.r_[np.zeros(m), -1.0], A_ub=np.c_[A, norms], b_ub=b,
                  bounds=[(None, None)] * m + [(0, None)], method="highs")
    if not res.success or res.x[-1] <= 1e-12:
        raise EmptyImage("moment image has empty interior inside the clip box")
    interior = res.x[:m]
    hsi = HalfspaceIntersection(np.c_[A, -b], interior)
    verts = hsi.intersections
    clipped = ConvexHull(verts)
    vertices = verts[clipped.vertices]
    hs = []
    for eq in clipped.equations:
        n, c = eq[:m], eq[m]
        scale = np.linalg.norm(n)
        hs.append(_flag_box(Halfspace(_clean(n / scale), float(-c / scale)), box))
    return vertices, _dedupe(hs)


def moment_body(S: Scenario, clip_box=None, points=None) -> MomentBody:
    """Convex hull of the sampled moment image, clipped to a box.

    Emits vertices and facet halfspaces; facets lying on the clip box are
    flagged as clipping artifacts.
    """
    A = _require_moment(S)
    pts = S.manifold.grid() if points is None else np.atleast_2d(points)
    samples = np.array([np.asarray(A.moment_map(x), float).reshape(-1) for x in pts])
    if samples.size == 0:
        raise EmptyImage("no samples")
    m = samples.shape[1]
    if clip_box is None:
        clip_box = S.clip_box
    if clip_box is None:
        lo, hi = samples.min(axis=0), samples.max(axis=0)
        pad = 0.1 * np.maximum(hi - lo, 1.0)
        box = np.stack([lo - pad, hi + pad], axis=1)
    else:
        box = np.asarray(clip_box, float).reshape(m, 2)

    centre = samples.mean(axis=0)
    _, s, vh = np.linalg.svd(samples - centre, full_matrices=True)
    scale = max(1.0, float(np.max(np.abs(samples))))
    arank = int(np.sum(s > 1e-9 * scale))
    if arank == m:
        vertices, hs = _hull_full(samples, box)
    else:
        inside = np.all((samples >= box[:, 0]) & (samples <= box[:, 1]), axis=1)
        if not inside.any():
            raise EmptyImage("moment image misses the clip box")
        B = vh[:arank].T  # directions spanned by the image
        W = vh[arank:].T  # directions along which the image is constant
        hs = []
        for w in W.T:
            hs.append(Halfspace(w, float(w @ centre), "affine"))
            hs.append(Halfspace(-w, float(-w @ centre), "affine"))
        if arank == 0:
            vertices = centre[None, :]
        else:
            coords = (samples[inside] - centre) @ B
            sub_box = np.stack([coords.min(axis=0) - 1, coords.max(axis=0) + 1], axis=1)
            sub_verts, sub_hs = _hull_full(coords, sub_box)
            vertices = centre + sub_verts @ B.T
            for h in sub_hs:
                n = B @ h.normal
                hs.append(Halfspace(n, float(h.offset + n @ centre)))
    return MomentBody(samples, np.asarray(vertices, float), tuple(hs), box)


def convexity_certificate(body: MomentBody, rng: np.random.Generator, pairs: int = 1000,
                          tol: float = 1e-7) -> tuple[bool, float]:
    """Midpoints of random sample pairs (inside the box) must satisfy every halfspace."""
    pool = body.samples[body.in_box()]
    if len(pool) == 0:
        return False, float("inf")
    i = rng.integers(0, len(pool), size=pairs)
    j = rng.integers(0, len(pool), size=pairs)
    mids = 0.5 * (pool[i] + pool[j])
    worst = max(body.violation(p) for p in mids)
    return worst <= tol, float(worst)


# ---------------------------------------------------------------------------
# Morse-Bott analysis


@dataclass(frozen=True)
class CriticalComponent:
    representative: np.ndarray
    size: int
    tangent_dim: int
    index: int
    nullity: int
    hessian_nullity: int
    normal_eigenvalues: np.ndarray

    @property
    def nondegenerate(self) -> bool:
        return self.nullity == 0 and self.hessian_nullity == self.tangent_dim

    def to_dict(self) -> dict:
        return {
            "representative": [float(v) for v in self.representative],
            "size": self.size,
            "tangent_dim": self.tangent_dim,
            "index": self.index,
            "nullity": self.nullity,
            "hessian_nullity": self.hessian_nullity,
            "nondegenerate": self.nondegenerate,
            "normal_eigenvalues": [float(v) for v in self.normal_eigenvalues],
        }


@dataclass(frozen=True)
class MorseBottReport:
    function_id: str
    components: tuple
    tol_crit: float

    @property
    def no_critical_points(self) -> bool:
        return not self.components

    @property
    def all_even(self) -> bool:
        return all(c.index % 2 == 0 for c in self.components)

    @property
    def all_nondegenerate(self) -> bool:
        return all(c.nondegenerate for c in self.components)

    def to_dict(self) -> dict:
        return {
            "function_id": self.function_id,
            "no_critical_points": self.no_critical_points,
            "all_even": self.all_even,
            "all_nondegenerate": self.all_nondegenerate,
            "tol_crit": self.tol_crit,
            "components": [c.to_dict() for c in self.components],
        }


def _grid_components(flags: np.ndarray, periodic: tuple) -> list[list[tuple]]:
    shape = flags.shape
    seen = set()
    comps = []
    for start in map(tuple, np.argwhere(flags)):
        if start in seen:
            continue
        seen.add(start)
        queue = deque([start])
        comp = []
        while queue:
            idx = queue.popleft()
            comp.append(idx)
            for nb in grid_neighbors(shape, periodic, idx):
                if flags[nb] and nb not in seen:
                    seen.add(nb)
                    queue.append(nb)
        comps.append(sorted(comp))
    return comps


def morse_bott_analysis(S: Scenario, xi, tol_crit_rel: float = 1e-4, tol_eig_rel: float = 1e-6,
                        tangent_frac: float = 0.1, h=None, h_hess=None) -> MorseBottReport:
    """Locate critical sets of mu^xi on the grid and compute their transverse index."""
    A = _require_moment(S)
    M = S.manifold
    f = A.component(xi)
    grid = M.grid()
    shape = M.grid_shape
    norms = np.array([np.linalg.norm(gradient(M, f, x, h)) for x in grid])
    tol_crit = tol_crit_rel * float(norms.max()) if norms.max() > 0 else 0.0
    fid = "mu^" + "(" + ",".join(f"{float(v):g}" for v in np.asarray(xi, float)) + ")"
    if norms.max() == 0:
        return MorseBottReport(fid, (), tol_crit)
    flags = (norms <= tol_crit).reshape(shape)
    comps = []
    for comp in _grid_components(flags, M.periodic):
        flat_idx = [np.ravel_multi_index(c, shape) for c in comp]
        cloud = grid[flat_idx]
        rep = cloud[int(np.argmin(norms[flat_idx]))]
        if len(cloud) > 1:
            disp = M.displacement(cloud, rep)
            disp = disp - disp.mean(axis=0)
            _, s, vh = np.linalg.svd(disp, full_matrices=True)
            tdim = int(np.sum(s > tangent_frac * s[0])) if s[0] > 0 else 0
        else:
            vh = np.eye(M.dim)
            tdim = 0
        normal = vh[tdim:].T
        hh = 1e-3 * M.span if h_hess is None else np.broadcast_to(np.asarray(h_hess, float), (M.dim,))
        H = hessian(M, f, rep, hh / 2)
        lam_all = np.linalg.eigvalsh(H)
        # halving the step exposes truncation error; eigenvalues below it are not trusted
        trunc = float(np.max(np.abs(lam_all - np.linalg.eigvalsh(hessian(M, f, rep, hh)))))
        tol_eig = max(tol_eig_rel * max(float(np.max(np.abs(lam_all))), 1e-300), 2 * trunc)
        lam = np.linalg.eigvalsh(normal.T @ H @ normal) if normal.size else np.zeros(0)
        comps.append(CriticalComponent(
            representative=rep,
            size=len(cloud),
            tangent_dim=tdim,
            index=int(np.sum(lam < -tol_eig)),
            nullity=int(np.sum(np.abs(lam) <= tol_eig)),
            hessian_nullity=int(np.sum(np.abs(lam_all) <= tol_eig)),
            normal_eigenvalues=lam,
        ))
    return MorseBottReport(fid, tuple(comps), tol_crit)


# ---------------------------------------------------------------------------
# reduction


@dataclass(frozen=True)
class ReductionResult:
    scenario: Scenario
    classification: StructureClassification
    level_residual: float
    eta_min_norm: float

    def to_dict(self) -> dict:
        return {
            "classification": self.classification.to_dict(),
            "level_residual": self.level_residual,
            "eta_min_norm": self.eta_min_norm,
            "reduced_dim": self.scenario.dim,
        }


def pullback_forms(F: FormPair, param: Callable, chart: ChartedManifold, target: ChartedManifold) -> FormPair:
    """Forms pulled back through a chart map, with a finite-difference Jacobian."""

    def omega(u):
        J = jacobian(chart, param, u, target=target)
        return J.T @ np.asarray(F.omega_at(param(u))) @ J

    def eta(u):
        J = jacobian(chart, param, u, target=target)
        return J.T @ np.asarray(F.eta_at(param(u)))

    return FormPair(omega, eta, F.declared_closed)


def reduce_at_zero(S: Scenario, slice_param: Callable | None = None, slice_chart: ChartedManifold | None = None,
                   tol: float = 1e-8, tol_rank: float = DEFAULT_TOL_RANK) -> ReductionResult:
    """Reduced space mu^{-1}(0)/K presented by a slice through the zero level."""
    A = _require_moment(S)
    slice_param = slice_param or S.slice_param
    slice_chart = slice_chart or S.slice_chart
    if slice_param is None or slice_chart is None:
        raise NotRegularValue(f"scenario {S.name!r} has no slice of the zero level")
    M = S.manifold
    m = A.moment_dim
    worst = 0.0
    for u in slice_chart.grid():
        x = np.asarray(slice_param(u), float)
        val = float(np.max(np.abs(A.moment_map(x)), initial=0.0))
        worst = max(worst, val)
        if val > tol:
            raise NotInLevelSet(u, val)
        dmu = np.stack([gradient(M, lambda z, c=c: float(np.asarray(A.moment_map(z))[c]), x) for c in range(m)])
        if matrix_rank(dmu, 1e-8) < m:
            raise NotRegularValue(f"d(mu) has rank < {m} at {list(x)}")
        Js = jacobian(slice_chart, slice_param, u, target=M)
        orbit = span(A.fields_matrix(x), M.dim)
        both = matrix_rank(np.hstack([Js, orbit.vectors]), 1e-8)
        if both < slice_chart.dim + orbit.rank:
            raise SliceNotTransverse(f"slice meets the orbit directions at {list(x)}")
        if slice_chart.dim + orbit.rank != M.dim - m:
            raise SliceNotTransverse(
                f"slice dim {slice_chart.dim} + orbit dim {orbit.rank} != dim of zero level {M.dim - m}")
    forms = pullback_forms(S.forms, slice_param, slice_chart, M)
    reduced = Scenario(name=f"{S.name}/reduced", manifold=slice_chart, forms=forms)
    cls = classify_structure(slice_chart, forms, tol_rank)
    eta_min = min(float(np.linalg.norm(forms.eta_at(u))) for u in slice_chart.grid())
    return ReductionResult(reduced, cls, worst, eta_min)
