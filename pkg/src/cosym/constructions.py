"""Builders for the example spaces: mapping tori, level sets, C^n x S^1, S^2 x S^1.

Complex factors are real pairs (x_j, y_j) with omega_j = dx_j ^ dy_j and
moment components |z_j|^2 - 1.  With that normalisation the moment equation
d mu = iota_{xi_M} omega forces the generator of the j-th circle to be
xi_j = 2 (y_j d/dx_j - x_j d/dy_j), i.e. the circle acts by z -> exp(-2 i t) z.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from .errors import NotInLevelSet, NotSymplectomorphism, OddBaseDim, OutOfRange, ParamNotImmersion, UnknownScenario
from .geometry import ChartedManifold, FormPair, jacobian
from .groupoid import FoliationSpec, SubmersionGroupoid
from .hamiltonian import TorusActionSpec, complement_generators, pullback_forms
from .scenario import Scenario

TWO_PI = 2 * math.pi
DISK_HALF_WIDTH = 3.0  # complex factors are charted on [-3, 3]^2
DISK_COUNT = 5
ANGLE_COUNT = 4
THETA_COUNT = 3
CLIP = (-1.5, 3.5)
GOLDEN = (math.sqrt(5) - 1) / 2
SYMPLECTO_TOL = 1e-8


def rot2(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])


def standard_omega(pairs: list[tuple[int, int]], dim: int) -> np.ndarray:
    O = np.zeros((dim, dim))
    for i, j in pairs:
        O[i, j] = 1.0
        O[j, i] = -1.0
    return O


def unit(dim: int, i: int) -> np.ndarray:
    e = np.zeros(dim)
    e[i] = 1.0
    return e


def _constant_field(v: np.ndarray) -> Callable:
    return lambda x: v


# ---------------------------------------------------------------------------
# mapping tori


@dataclass(frozen=True)
class MappingTorusSpec:
    base_dim: int
    omega_S: Callable
    phi: Callable
    base_chart: ChartedManifold
    phi_checked: bool = False


def symplecto_residual(spec: MappingTorusSpec) -> float:
    M = spec.base_chart
    worst = 0.0
    for x in M.grid():
        J = jacobian(M, spec.phi, x)
        pulled = J.T @ np.asarray(spec.omega_S(spec.phi(x))) @ J
        worst = max(worst, float(np.max(np.abs(pulled - np.asarray(spec.omega_S(x))))))
    return worst


def lift_action(base: TorusActionSpec, extra: int = 1) -> TorusActionSpec:
    """Extend a base action trivially over ``extra`` trailing coordinates."""
    d = base.dim

    def act(t, p):
        p = np.asarray(p, float)
        return np.concatenate([np.asarray(base.act(t, p[:d]), float), p[d:]])

    def pad(f):
        return lambda p: np.concatenate([np.asarray(f(np.asarray(p)[:d]), float), np.zeros(extra)])

    mm = None if base.moment_map is None else (lambda p: base.moment_map(np.asarray(p)[:d]))
    return TorusActionSpec(d + extra, base.torus_rank, act, tuple(pad(f) for f in base.fundamental_fields),
                           mm, base.subtorus, base.moment_generators, base.proper_declared)


def mapping_torus(spec: MappingTorusSpec, name: str = "mapping_torus", base_action: TorusActionSpec | None = None,
                  theta_count: int = THETA_COUNT, **extra) -> Scenario:
    """Cosymplectic structure on S x [0,1) with the seam (x, 1) ~ (phi(x), 0).

    omega is the base form (constant along the circle) and eta = d(theta).
    The action, if given, must commute with phi; it is extended trivially.
    """
    if spec.base_dim % 2:
        raise OddBaseDim(f"base dimension {spec.base_dim} is odd")
    residual = symplecto_residual(spec)
    if residual > SYMPLECTO_TOL:
        raise NotSymplectomorphism(residual)
    B = spec.base_chart
    d = spec.base_dim
    chart = ChartedManifold(
        d + 1,
        B.lower + (0.0,),
        B.upper + (1.0,),
        B.periodic + (True,),
        B.grid_counts + (theta_count,),
        B.names + ("theta",),
    )

    def omega(p):
        O = np.zeros((d + 1, d + 1))
        O[:d, :d] = spec.omega_S(np.asarray(p)[:d])
        return O

    eta_vec = unit(d + 1, d)
    forms = FormPair(omega, lambda p: eta_vec)
    seam = seam_residual(spec)
    action = lift_action(base_action) if base_action is not None else None
    notes = {"symplecto_residual": residual, "seam_residual": seam, "phi_checked": True}
    notes.update(extra.pop("notes", {}))
    return Scenario(name=name, manifold=chart, forms=forms, action=action,
                    foliation=FoliationSpec(d + 1, 0, ()), notes=notes, **extra)


def seam_residual(spec: MappingTorusSpec) -> float:
    """omega at (x, 1-) against the phi-pullback of omega at (phi(x), 0+)."""
    M = spec.base_chart
    worst = 0.0
    for x in M.grid():
        J = jacobian(M, spec.phi, x)
        upstairs = np.asarray(spec.omega_S(x))
        across = J.T @ np.asarray(spec.omega_S(spec.phi(x))) @ J
        worst = max(worst, float(np.max(np.abs(upstairs - across))))
    return worst


def complex_chart(n: int, names=None, count: int = DISK_COUNT) -> ChartedManifold:
    w = DISK_HALF_WIDTH
    names = names or tuple(f"{c}{j + 1}" for j in range(n) for c in ("x", "y"))
    return ChartedManifold(2 * n, (-w,) * (2 * n), (w,) * (2 * n), (False,) * (2 * n), (count,) * (2 * n), names)


def complex_torus_action(n: int) -> TorusActionSpec:
    """T^n rotating each complex factor of C^n, moment map (|z_j|^2 - 1)_j."""
    dim = 2 * n

    def act(t, p):
        p = np.array(p, float)
        for j in range(n):
            p[2 * j:2 * j + 2] = rot2(-2 * t[j]) @ p[2 * j:2 * j + 2]
        return p

    def field(j):
        def f(p):
            v = np.zeros(dim)
            v[2 * j] = 2 * p[2 * j + 1]
            v[2 * j + 1] = -2 * p[2 * j]
            return v
        return f

    def mu(p):
        p = np.asarray(p, float)
        return np.array([p[2 * j] ** 2 + p[2 * j + 1] ** 2 - 1 for j in range(n)])

    return TorusActionSpec(dim, n, act, tuple(field(j) for j in range(n)), mu)


def complex_omega(n: int) -> Callable:
    O = standard_omega([(2 * j, 2 * j + 1) for j in range(n)], 2 * n)
    return lambda x: O


def mapping_torus_cn(n: int, phi: Callable, name: str, return_map=None, holonomy_point=None) -> Scenario:
    spec = MappingTorusSpec(2 * n, complex_omega(n), phi, complex_chart(n))
    ones = np.tile([1.0, 0.0], n)
    slice_chart = ChartedManifold(1, (0.0,), (1.0,), (True,), (5,), ("theta",))
    clip = tuple((CLIP[0], CLIP[1]) for _ in range(n))
    return mapping_torus(
        spec, name, complex_torus_action(n),
        return_map=return_map, holonomy_point=holonomy_point,
        slice_param=lambda u: np.concatenate([ones, [u[0]]]), slice_chart=slice_chart,
        clip_box=clip,
    )


def mapping_torus_id(n: int = 2) -> Scenario:
    """C^n x S^1 (trivial mapping torus) with its T^n action."""
    return mapping_torus_cn(n, lambda x: np.asarray(x, float), "mapping_torus_id",
                            return_map=lambda z: np.asarray(z, float), holonomy_point=np.array([0.1, 0.05]))


def mapping_torus_rot(angle: float, name: str) -> Scenario:
    """Mapping torus of C rotated by ``angle``; the rotation commutes with the circle action."""
    R = rot2(angle)
    return mapping_torus_cn(1, lambda x: R @ np.asarray(x, float), name,
                            return_map=lambda z: R @ np.asarray(z, float), holonomy_point=np.array([0.1, 0.05]))


# ---------------------------------------------------------------------------
# level sets of the moment map


def level_set_structure(ambient: Scenario, subtorus_inclusion, param: Callable, chart: ChartedManifold,
                        param_inverse: Callable | None = None, name: str | None = None,
                        tol: float = 1e-8, **extra) -> Scenario:
    """Restrict (omega, eta) and the action to the zero level of the subtorus moment map.

    ``param`` maps the new chart into the ambient chart.  The restricted moment
    map keeps the components dual to generators complementary to the subtorus.
    """
    A = ambient.action
    if A is None or A.moment_map is None:
        raise ValueError("ambient scenario needs a torus action with moment map")
    n = A.torus_rank
    inc = np.asarray(subtorus_inclusion, float).reshape(-1, n)
    Mamb = ambient.manifold
    for u in chart.grid():
        x = np.asarray(param(u), float)
        full = A.full_moment(x)
        val = float(np.max(np.abs(inc @ full), initial=0.0))
        if val > tol:
            raise NotInLevelSet(u, val)
        J = jacobian(chart, param, u, target=Mamb)
        if np.linalg.matrix_rank(J, tol=1e-8) < chart.dim:
            raise ParamNotImmersion(u)

    forms = pullback_forms(ambient.forms, param, chart, Mamb)
    comp = complement_generators(inc, n)

    def mu(u):
        return comp @ A.full_moment(param(u))

    def lifted(i):
        def f(u):
            J = jacobian(chart, param, u, target=Mamb)
            w, *_ = np.linalg.lstsq(J, A.fundamental_fields[i](param(u)), rcond=None)
            return w
        return f

    fields = tuple(lifted(i) for i in range(n))
    if param_inverse is not None:
        def act(t, u):
            return chart.wrap(param_inverse(A.act(t, param(u))))
    else:
        def act(t, u):
            # torus fields commute, so the action is the time-1 flow of sum t_i xi_i
            from .groupoid import _rk4_flow
            t = np.asarray(t, float)
            return _rk4_flow(chart, lambda z: sum(ti * f(z) for ti, f in zip(t, fields)), u, 1.0, 1e-3)

    action = TorusActionSpec(chart.dim, n, act, fields, mu, inc, comp, A.proper_declared)
    foliation = FoliationSpec(chart.dim, inc.shape[0], tuple(action_field(action, row) for row in inc))
    return Scenario(name=name or f"{ambient.name}/level", manifold=chart, forms=forms, action=action,
                    foliation=foliation, **extra)


def action_field(action: TorusActionSpec, xi) -> Callable:
    xi = np.asarray(xi, float)
    return lambda x: action.field(xi, x)


def y0_halfturn() -> Scenario:
    """Zero level of |z1|^2 - 1 in the mapping torus of (z1, z2) -> (z1, -z2)."""
    ambient = mapping_torus_cn(2, lambda x: np.asarray(x, float) * np.array([1, 1, -1, -1]), "c2_halfturn")
    w = DISK_HALF_WIDTH
    chart = ChartedManifold(4, (0.0, -w, -w, 0.0), (TWO_PI, w, w, 1.0), (True, False, False, True),
                            (ANGLE_COUNT, DISK_COUNT, DISK_COUNT, THETA_COUNT), ("alpha1", "x2", "y2", "theta"))

    def param(u):
        return np.array([math.cos(u[0]), math.sin(u[0]), u[1], u[2], u[3]])

    def inverse(p):
        return np.array([math.atan2(p[1], p[0]) % TWO_PI, p[2], p[3], p[4]])

    return level_set_structure(
        ambient, [[1, 0]], param, chart, inverse, name="y0_halfturn",
        return_map=lambda z: -np.asarray(z, float), holonomy_point=np.array([0.1, 0.05]),
        clip_box=((CLIP[0], CLIP[1]),),
        notes={"monodromy": "(z1, z2) -> (z1, -z2)"},
    )


# ---------------------------------------------------------------------------
# C^n x S^1 level sets and their holonomy groupoid


def cn_example(n: int, k: int, foliation: str = "flat") -> Scenario:
    """X_0 = {|z_j| = 1, j <= k} inside C^n x S^1, charted as T^k x C^(n-k) x S^1.

    ``foliation`` selects the algebroid: "flat" spans d/d alpha_1..k (the
    kernel of the Lichnerowicz map); "displayed" adds d/d theta.
    """
    if not (1 <= n <= 3) or not (0 <= k < n):
        raise OutOfRange(f"need 1 <= n <= 3 and 0 <= k < n, got n={n}, k={k}")
    if foliation not in ("flat", "displayed"):
        raise ValueError("foliation must be 'flat' or 'displayed'")
    m = n - k
    dim = k + 2 * m + 1
    w = DISK_HALF_WIDTH
    names = tuple(f"alpha{j + 1}" for j in range(k)) + tuple(
        f"{c}{j + 1}" for j in range(k, n) for c in ("x", "y")) + ("theta",)
    chart = ChartedManifold(
        dim,
        (0.0,) * k + (-w,) * (2 * m) + (0.0,),
        (TWO_PI,) * k + (w,) * (2 * m) + (1.0,),
        (True,) * k + (False,) * (2 * m) + (True,),
        (ANGLE_COUNT,) * k + (DISK_COUNT,) * (2 * m) + (THETA_COUNT,),
        names,
    )
    O = standard_omega([(k + 2 * j, k + 2 * j + 1) for j in range(m)], dim)
    forms = FormPair.constant(O, unit(dim, dim - 1))

    def act(t, p):
        p = np.array(p, float)
        t = np.asarray(t, float)
        for j in range(k):
            p[j] = (p[j] - 2 * t[j]) % TWO_PI
        for j in range(m):
            s = k + 2 * j
            p[s:s + 2] = rot2(-2 * t[k + j]) @ p[s:s + 2]
        return p

    def field(j):
        if j < k:
            return _constant_field(-2 * unit(dim, j))

        def f(p):
            s = k + 2 * (j - k)
            v = np.zeros(dim)
            v[s] = 2 * p[s + 1]
            v[s + 1] = -2 * p[s]
            return v
        return f

    def mu(p):
        p = np.asarray(p, float)
        return np.array([p[k + 2 * j] ** 2 + p[k + 2 * j + 1] ** 2 - 1 for j in range(m)])

    subtorus = np.eye(n)[:k]
    action = TorusActionSpec(dim, n, act, tuple(field(j) for j in range(n)), mu, subtorus)

    spanning = [_constant_field(unit(dim, j)) for j in range(k)]
    if foliation == "displayed":
        spanning.append(_constant_field(unit(dim, dim - 1)))

    def leaf_flow(a, t, p):
        p = np.array(p, float)
        axis = a if a < k else dim - 1
        p[axis] += t
        return p

    fol = FoliationSpec(dim, len(spanning), tuple(spanning), leaf_flow, foliation)

    # holonomy groupoid T^k x T^k x C^m x S^1 => T^k x C^m x S^1
    arrows = ChartedManifold(
        dim + k,
        (0.0,) * k + chart.lower,
        (TWO_PI,) * k + chart.upper,
        (True,) * k + chart.periodic,
        (ANGLE_COUNT,) * k + chart.grid_counts,
        tuple(f"{a}_left" for a in names[:k]) + tuple(f"{a}_right" for a in names[:k]) + names[k:],
    )

    def source(g):
        g = np.asarray(g, float)
        return g[k:]

    def target(g):
        g = np.asarray(g, float)
        return np.concatenate([g[:k], g[2 * k:]])

    groupoid = SubmersionGroupoid(arrows, source, target, notes={"shape": f"T^{k} x T^{k} x C^{m} x S^1"})

    extra = {}
    if k == 0:
        slice_chart = ChartedManifold(1, (0.0,), (1.0,), (True,), (5,), ("theta",))
        ones = np.tile([1.0, 0.0], m)
        extra = dict(slice_param=lambda u: np.concatenate([ones, [u[0]]]), slice_chart=slice_chart)
    return Scenario(
        name=f"cn({n},{k})", manifold=chart, forms=forms, action=action, foliation=fol,
        groupoid=groupoid, return_map=lambda z: np.asarray(z, float), holonomy_point=np.array([0.1, 0.05]),
        clip_box=tuple((CLIP[0], CLIP[1]) for _ in range(m)),
        notes={"foliation_variant": foliation,
               "chart_truncation": f"complex factors charted on [-{w:g},{w:g}]^2"},
        **extra,
    )


# ---------------------------------------------------------------------------
# S^2 x S^1


def sphere_mapping_torus(radius_grid=(8, 7, 3)) -> Scenario:
    """S^2 x S^1 in the cylindrical chart (azimuth, height, theta); poles are not covered."""
    chart = ChartedManifold(3, (0.0, -1.0, 0.0), (TWO_PI, 1.0, 1.0), (True, False, True),
                            tuple(radius_grid), ("phi", "z", "theta"))
    forms = FormPair.constant(standard_omega([(0, 1)], 3), unit(3, 2))

    def act(t, p):
        p = np.array(p, float)
        p[0] = (p[0] + t[0]) % TWO_PI
        return p

    action = TorusActionSpec(3, 1, act, (_constant_field(unit(3, 0)),), lambda p: np.array([p[1]]))
    return Scenario(name="sphere_s1", manifold=chart, forms=forms, action=action,
                    foliation=FoliationSpec(3, 0, ()), clip_box=((-1.5, 1.5),),
                    notes={"chart": "cylindrical; poles excluded"})


def sphere_pole_chart(pole: str, half_width: float = 0.5, count: int = 7) -> Scenario:
    """Chart (u, v, theta) around a pole of S^2 x S^1, with z = +-sqrt(1 - u^2 - v^2).

    The area form becomes du ^ dv / z and the rotation generator is
    -v d/du + u d/dv, so the height is still the moment map.
    """
    if pole not in ("north", "south"):
        raise ValueError("pole must be 'north' or 'south'")
    sign = 1.0 if pole == "north" else -1.0
    a = half_width
    chart = ChartedManifold(3, (-a, -a, 0.0), (a, a, 1.0), (False, False, True), (count, count, THETA_COUNT),
                            ("u", "v", "theta"))

    def height(p):
        return sign * math.sqrt(1.0 - p[0] ** 2 - p[1] ** 2)

    def omega(p):
        c = 1.0 / height(p)
        return np.array([[0.0, c, 0.0], [-c, 0.0, 0.0], [0.0, 0.0, 0.0]])

    forms = FormPair(omega, lambda p: unit(3, 2))

    def act(t, p):
        p = np.array(p, float)
        p[:2] = rot2(t[0]) @ p[:2]
        return p

    def field(p):
        return np.array([-p[1], p[0], 0.0])

    action = TorusActionSpec(3, 1, act, (field,), lambda p: np.array([height(p)]))
    return Scenario(name=f"sphere_s1_{pole}", manifold=chart, forms=forms, action=action,
                    foliation=FoliationSpec(3, 0, ()), clip_box=((-1.5, 1.5),),
                    notes={"chart": f"{pole} pole disk of half-width {a:g}"})


# ---------------------------------------------------------------------------
# flat model spaces


def r3_standard() -> Scenario:
    chart = ChartedManifold(3, (-1.0,) * 3, (1.0,) * 3, (False,) * 3, (5,) * 3, ("x", "y", "z"))
    return Scenario("r3_standard", chart, FormPair.constant(standard_omega([(0, 1)], 3), unit(3, 2)),
                    foliation=FoliationSpec(3, 0, ()))


def r4_standard() -> Scenario:
    chart = ChartedManifold(4, (-1.0,) * 4, (1.0,) * 4, (False,) * 4, (5,) * 4, ("x", "y", "z", "w"))
    fol = FoliationSpec(4, 1, (_constant_field(unit(4, 3)),))
    return Scenario("r4_standard", chart, FormPair.constant(standard_omega([(0, 1)], 4), unit(4, 2)),
                    foliation=fol)


# ---------------------------------------------------------------------------
# registry

_PATTERNS: list[tuple[str, re.Pattern, Callable, str]] = [
    ("r3_standard", re.compile(r"r3_standard"), lambda m: r3_standard(), "R^3 with dx^dy, dz (cosymplectic)"),
    ("r4_standard", re.compile(r"r4_standard"), lambda m: r4_standard(), "R^4 with dx^dy, dz (precosymplectic)"),
    ("mapping_torus_id", re.compile(r"mapping_torus_id"), lambda m: mapping_torus_id(2),
     "C^2 x S^1 with T^2 action"),
    ("mapping_torus_rot(p/q)", re.compile(r"mapping_torus_rot\((-?\d+)/(\d+)\)"), lambda m: _rot_from_fraction(m),
     "mapping torus of C under rotation by 2 pi p/q"),
    ("mapping_torus_rot(golden)", re.compile(r"mapping_torus_rot\(golden\)"),
     lambda m: mapping_torus_rot(TWO_PI * GOLDEN, "mapping_torus_rot(golden)"),
     "mapping torus of C under rotation by 2 pi (sqrt5 - 1)/2"),
    ("cn(n,k)", re.compile(r"cn\((\d+),(\d+)\)"), lambda m: cn_example(int(m.group(1)), int(m.group(2))),
     "T^k x C^(n-k) x S^1 level set with the kernel foliation"),
    ("cn(n,k)/displayed", re.compile(r"cn\((\d+),(\d+)\)/displayed"),
     lambda m: _renamed(cn_example(int(m.group(1)), int(m.group(2)), "displayed"), m.group(0)),
     "same space, foliation with the extra d/dtheta direction"),
    ("sphere_s1", re.compile(r"sphere_s1"), lambda m: sphere_mapping_torus(), "S^2 x S^1, cylindrical chart"),
    ("sphere_s1_north|south", re.compile(r"sphere_s1_(north|south)"), lambda m: sphere_pole_chart(m.group(1)),
     "S^2 x S^1, disk chart around a pole"),
    ("y0_halfturn", re.compile(r"y0_halfturn"), lambda m: y0_halfturn(),
     "level set in the mapping torus of (z1, z2) -> (z1, -z2)"),
]


def _renamed(S: Scenario, name: str) -> Scenario:
    return S.replace(name=name)


def _rot_from_fraction(m) -> Scenario:
    p, q = int(m.group(1)), int(m.group(2))
    if q <= 0:
        raise UnknownScenario("q must be positive")
    fr = Fraction(p, q)
    return mapping_torus_rot(TWO_PI * p / q, f"mapping_torus_rot({fr.numerator}/{fr.denominator})")


def build_scenario(name: str) -> Scenario:
    key = name.replace(" ", "")
    for _, pattern, builder, _ in _PATTERNS:
        m = pattern.fullmatch(key)
        if m:
            return builder(m)
    raise UnknownScenario(f"unknown scenario {name!r}")


def registry() -> list[tuple[str, str]]:
    return [(name, desc) for name, _, _, desc in _PATTERNS]
