"""Foliation-groupoid checks: quasi-isomorphism, basic forms, arrow space, holonomy."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import FlowLeftChart, NoFoliation, NotSubmersionGroupoidShape, OriginNotFixed
from .geometry import ChartedManifold, _steps, flat_kernel, gradient, jacobian, verify_closed
from .hamiltonian import CheckReport, _pick_points
from .scenario import Scenario
from .tensor_point import (
    DEFAULT_TOL_RANK,
    Relation,
    kernel_basis,
    lichnerowicz_matrix,
    PointTensor,
    span,
    subspace_relation,
    subspace_sum,
)


@dataclass(frozen=True)
class FoliationSpec:
    """Vector fields spanning the image of the anchor, one per algebroid generator."""

    dim: int
    rank: int
    spanning_fields: tuple
    leaf_flow: Callable | None = None
    variant: str = "flat"

    def __post_init__(self):
        object.__setattr__(self, "spanning_fields", tuple(self.spanning_fields))
        if len(self.spanning_fields) != self.rank:
            raise ValueError("rank must equal the number of spanning fields")

    def vectors(self, x) -> np.ndarray:
        if self.rank == 0:
            return np.zeros((self.dim, 0))
        return np.stack([np.asarray(v(x), float) for v in self.spanning_fields], axis=1)


def _require_foliation(S: Scenario) -> FoliationSpec:
    if S.foliation is None:
        raise NoFoliation(f"scenario {S.name!r} has no foliation")
    return S.foliation


def quasi_iso_details(S: Scenario, x, tol: float = 1e-8, tol_rank: float = DEFAULT_TOL_RANK) -> dict:
    Fol = _require_foliation(S)
    V = Fol.vectors(x)
    image = span(V, S.dim)
    injective = image.rank == Fol.rank
    K = flat_kernel(S.forms, x, tol_rank)
    rel = subspace_relation(image, K, tol)
    return {"anchor_injective": injective, "image_dim": image.rank, "kernel_dim": K.rank,
            "relation": rel.value, "passed": bool(injective and rel is Relation.EQUAL)}


def quasi_iso_check(S: Scenario, x, tol: float = 1e-8, tol_rank: float = DEFAULT_TOL_RANK) -> bool:
    """Anchor injective at x and ker(flat_x) == im(rho_x)."""
    return quasi_iso_details(S, x, tol, tol_rank)["passed"]


def basic_form_check(S: Scenario, tol: float = 1e-6, points=None, max_points: int = 256,
                     h=None, seed: int = 0) -> CheckReport:
    """Horizontality and infinitesimal invariance of (omega, eta) along the foliation.

    Invariance uses Cartan's formula: with closed forms, L_v omega = d(iota_v omega)
    and L_v eta = d(eta(v)); the closedness residuals are reported alongside.
    """
    Fol = _require_foliation(S)
    M, F = S.manifold, S.forms
    pts = _pick_points(S, points, max_points, seed)
    closed = verify_closed(M, F, h, pts) if Fol.rank else {"omega": 0.0, "eta": 0.0}
    hor_o = hor_e = inv_o = inv_e = 0.0
    hs = _steps(M, h)
    for x in pts:
        V = Fol.vectors(x)
        if V.shape[1] == 0:
            continue
        O = np.asarray(F.omega_at(x))
        hor_o = max(hor_o, float(np.max(np.abs(O @ V))))
        hor_e = max(hor_e, float(np.max(np.abs(F.eta_at(x) @ V))))
        for a in range(Fol.rank):
            def contracted(z, a=a):
                return -np.asarray(F.omega_at(z)) @ np.asarray(Fol.spanning_fields[a](z), float)

            # d of the 1-form iota_v omega, antisymmetrised central differences
            D = np.empty((M.dim, M.dim))
            for i in range(M.dim):
                e = np.zeros(M.dim)
                e[i] = hs[i]
                D[i] = (contracted(x + e) - contracted(x - e)) / (2 * hs[i])
            inv_o = max(inv_o, float(np.max(np.abs(D - D.T))))
            g = gradient(M, lambda z, a=a: float(F.eta_at(z) @ Fol.spanning_fields[a](z)), x, h)
            inv_e = max(inv_e, float(np.max(np.abs(g))))
    residuals = {
        "horizontal_omega": hor_o,
        "horizontal_eta": hor_e,
        "invariant_omega": inv_o,
        "invariant_eta": inv_e,
        "closed_omega": closed["omega"],
        "closed_eta": closed["eta"],
    }
    return CheckReport(all(v <= tol for v in residuals.values()), residuals, tol,
                       {"variant": Fol.variant, "points": len(pts)})


def _rk4_flow(M: ChartedManifold, vf: Callable, x, t: float, dt: float) -> np.ndarray:
    n = max(1, math.ceil(abs(t) / dt))
    step = t / n
    y = np.asarray(x, float)
    for _ in range(n):
        k1 = vf(y)
        k2 = vf(y + 0.5 * step * k1)
        k3 = vf(y + 0.5 * step * k2)
        k4 = vf(y + step * k3)
        y = M.wrap(y + step / 6 * (k1 + 2 * k2 + 2 * k3 + k4))
        if not M.contains(y):
            raise FlowLeftChart(f"leaf flow left the chart at {list(y)}")
    return y


def leaf_points(S: Scenario, x, steps: int = 10, seed: int = 0, dt: float = 1e-2,
                total_time: float = 1.0) -> np.ndarray:
    """Points reached from x along a random word in the spanning fields."""
    Fol = _require_foliation(S)
    M = S.manifold
    rng = np.random.default_rng(seed)
    y = np.asarray(x, float)
    out = []
    seg = total_time / max(steps, 1)
    for _ in range(steps):
        if Fol.rank:
            a = int(rng.integers(Fol.rank))
            t = float(rng.uniform(-seg, seg))
            if Fol.leaf_flow is not None:
                y = M.wrap(Fol.leaf_flow(a, t, y))
                if not M.contains(y):
                    raise FlowLeftChart(f"leaf flow left the chart at {list(y)}")
            else:
                vf = Fol.spanning_fields[a]
                y = _rk4_flow(M, lambda z: np.asarray(vf(z), float), y, t, dt)
        out.append(y.copy())
    return np.array(out).reshape(-1, M.dim)


def orbit_invariance_check(S: Scenario, x, steps: int = 10, tol: float = 1e-8, seed: int = 0) -> bool:
    """The quasi-isomorphism condition holds at every sampled point of the leaf through x."""
    if not quasi_iso_check(S, x, tol):
        return False
    return all(quasi_iso_check(S, y, tol) for y in leaf_points(S, x, steps, seed))


# ---------------------------------------------------------------------------
# arrow space of a submersion groupoid


@dataclass(frozen=True)
class SubmersionGroupoid:
    """Explicit chart for the arrows of a submersion groupoid G => M.

    ``omega_tilde``/``eta_tilde`` override the pulled-back forms on arrows;
    by default they are built as s*omega and s*eta.
    """

    arrows: ChartedManifold
    source: Callable
    target: Callable
    omega_tilde: Callable | None = None
    eta_tilde: Callable | None = None
    notes: dict = field(default_factory=dict)


def arrow_space_check(S: Scenario, tol: float = 1e-9, n_points: int = 50, seed: int = 0,
                      tol_rank: float = DEFAULT_TOL_RANK) -> CheckReport:
    """Check s*omega = t*omega and ker(flat~) == ker(ds) + ker(dt) on arrows."""
    G = S.groupoid
    if G is None:
        raise NotSubmersionGroupoidShape(f"scenario {S.name!r} has no arrow chart")
    A, M, F = G.arrows, S.manifold, S.forms
    rng = np.random.default_rng(seed)
    pts = A.sample(rng, n_points)
    pull_res = eta_res = override_res = 0.0
    mismatches = 0
    for g in pts:
        sg, tg = np.asarray(G.source(g), float), np.asarray(G.target(g), float)
        if sg.shape != (M.dim,) or tg.shape != (M.dim,):
            raise NotSubmersionGroupoidShape("source/target do not land in the object chart")
        Js = jacobian(A, G.source, g, target=M)
        Jt = jacobian(A, G.target, g, target=M)
        if np.linalg.matrix_rank(Js) < M.dim or np.linalg.matrix_rank(Jt) < M.dim:
            raise NotSubmersionGroupoidShape("source or target is not a submersion")
        s_omega = Js.T @ np.asarray(F.omega_at(sg)) @ Js
        t_omega = Jt.T @ np.asarray(F.omega_at(tg)) @ Jt
        s_eta = Js.T @ np.asarray(F.eta_at(sg))
        t_eta = Jt.T @ np.asarray(F.eta_at(tg))
        pull_res = max(pull_res, float(np.max(np.abs(s_omega - t_omega))))
        eta_res = max(eta_res, float(np.max(np.abs(s_eta - t_eta))))
        omega_t = s_omega if G.omega_tilde is None else np.asarray(G.omega_tilde(g))
        eta_t = s_eta if G.eta_tilde is None else np.asarray(G.eta_tilde(g))
        override_res = max(override_res, float(np.max(np.abs(omega_t - s_omega))),
                           float(np.max(np.abs(eta_t - s_eta))))
        L = lichnerowicz_matrix(PointTensor.of(omega_t, eta_t))
        k_flat = kernel_basis(L, tol_rank)
        k_sum = subspace_sum(kernel_basis(Js, tol_rank), kernel_basis(Jt, tol_rank))
        if subspace_relation(k_flat, k_sum, 1e-8) is not Relation.EQUAL:
            mismatches += 1
    residuals = {"s_omega_minus_t_omega": pull_res, "s_eta_minus_t_eta": eta_res,
                 "tilde_minus_s_pullback": override_res}
    basic_ok = all(v <= tol for v in residuals.values())
    return CheckReport(basic_ok and mismatches == 0, residuals, tol,
                       {"points": n_points, "kernel_mismatches": mismatches, "pullbacks_agree": basic_ok})


# ---------------------------------------------------------------------------
# holonomy


@dataclass(frozen=True)
class HolonomyResult:
    descriptor: str  # Trivial | CyclicFinite | InfiniteCyclic
    order: int | None
    generator_angle: float | None
    iterations_used: int
    n_max: int

    @property
    def label(self) -> str:
        if self.descriptor == "CyclicFinite":
            return f"CyclicFinite({self.order})"
        if self.descriptor == "InfiniteCyclic":
            return f"InfiniteCyclic(N_max={self.n_max})"
        return "Trivial"

    def to_dict(self) -> dict:
        return {"descriptor": self.label, "order": self.order, "generator_angle": self.generator_angle,
                "iterations_used": self.iterations_used, "n_max": self.n_max}


def mapping_torus_holonomy(return_map: Callable, test_point, n_max: int = 10_000,
                           tol: float = 1e-8) -> HolonomyResult:
    """Classify the cyclic group generated by a first-return map fixing the origin."""
    z0 = np.asarray(test_point, float)
    origin = np.zeros_like(z0)
    if np.linalg.norm(np.asarray(return_map(origin), float)) > tol:
        raise OriginNotFixed("return map does not fix the origin of the transversal")
    if np.linalg.norm(z0) == 0:
        raise ValueError("test point must differ from the origin")
    z1 = np.asarray(return_map(z0), float)
    angle = None
    if z0.size == 2:
        angle = float(np.angle(complex(*z1) / complex(*z0)))
    z = z0
    for q in range(1, n_max + 1):
        z = np.asarray(return_map(z), float)
        if np.linalg.norm(z - z0) <= tol:
            if q == 1:
                return HolonomyResult("Trivial", 1, angle, q, n_max)
            return HolonomyResult("CyclicFinite", q, angle, q, n_max)
    return HolonomyResult("InfiniteCyclic", None, angle, n_max, n_max)
