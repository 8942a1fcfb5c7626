import math

import numpy as np
import pytest

from cosym.constructions import build_scenario, cn_example, complex_torus_action, lift_action, rot2
from cosym.errors import EmptyImage, NoAction, NoMomentMap, NotClassified, NotInLevelSet, NotRegularValue, SliceNotTransverse
from cosym.geometry import ChartedManifold, FormPair, classify_structure, flat_kernel, gradient
from cosym.hamiltonian import (
    TorusActionSpec,
    action_axiom_residuals,
    clean_action_check,
    clean_action_details,
    complement_generators,
    convexity_certificate,
    moment_body,
    morse_bott_analysis,
    null_ideal,
    reduce_at_zero,
    verify_moment_map,
    verify_precosymplectic_action,
)
from cosym.scenario import Scenario

TWO_PI = 2 * math.pi
DISK_S1 = ChartedManifold(3, (-1.0, -1.0, 0.0), (1.0, 1.0, 1.0), (False, False, True), (5, 5, 3))


def _with_omega(omega, action=None):
    return Scenario("custom", DISK_S1, FormPair(omega, lambda x: np.array([0, 0, 1.0])),
                    action=action or lift_action(complex_torus_action(1)))


def _spiral_scenario():
    """R^2 x [-1,1] x S^1 with dx^dy, dz and a circle rotating (x, y) while translating w.

    At x = y = 0 the orbit direction d/dw lies in ker(flat), yet no generator
    has iota_{xi_M} omega = 0 everywhere, so the action is not clean there.
    """
    M = ChartedManifold(4, (-1.0, -1.0, -1.0, 0.0), (1.0, 1.0, 1.0, TWO_PI), (False, False, False, True),
                        (5, 5, 3, 4), ("x", "y", "z", "w"))
    O = np.zeros((4, 4))
    O[0, 1], O[1, 0] = 1, -1
    forms = FormPair.constant(O, [0, 0, 1, 0])

    def act(t, p):
        p = np.array(p, float)
        p[:2] = rot2(-2 * t[0]) @ p[:2]
        p[3] = (p[3] + t[0]) % TWO_PI
        return p

    def field(p):
        return np.array([2 * p[1], -2 * p[0], 0.0, 1.0])

    action = TorusActionSpec(4, 1, act, (field,), lambda p: np.array([p[0] ** 2 + p[1] ** 2 - 1]))
    return Scenario("spiral", M, forms, action=action)


# --- action axioms ----------------------------------------------------------


@pytest.mark.parametrize("name", ["cn(1,0)", "cn(2,1)", "cn(3,1)", "mapping_torus_id", "sphere_s1",
                                  "sphere_s1_north", "y0_halfturn"])
def test_action_axioms(name):
    S = build_scenario(name)
    res = action_axiom_residuals(S, np.random.default_rng(0), samples=6)
    assert res["identity"] <= 1e-12
    assert res["composition"] <= 1e-9
    assert res["derivative"] <= 1e-6


def test_rotations_preserve_forms_on_cn21():
    S = cn_example(2, 1)
    thetas = np.random.default_rng(1).uniform(0, TWO_PI, size=(20, 2))
    r = verify_precosymplectic_action(S, thetas)
    assert r.passed and max(r.residuals.values()) < 1e-9


def test_identity_element_has_negligible_residual():
    S = cn_example(2, 1)
    r = verify_precosymplectic_action(S, [np.zeros(2)])
    # the finite-difference Jacobian of the identity is exact up to rounding
    assert max(r.residuals.values()) <= 1e-10


def test_non_invariant_area_form_fails():
    S = _with_omega(lambda x: (1 + x[0]) * np.array([[0, 1.0, 0], [-1.0, 0, 0], [0, 0, 0]]))
    r = verify_precosymplectic_action(S, [[0.7], [2.0]])
    assert not r.passed
    # pullback of (1+x) dx^dy under a rotation R is (1 + (R p)_x) dx^dy: defect |(R p)_x - x|
    assert r.residuals["omega_pullback"] > 0.1
    assert r.residuals["eta_pullback"] < 1e-9


def test_action_checks_need_an_action():
    S = build_scenario("r3_standard")
    with pytest.raises(NoAction):
        verify_precosymplectic_action(S, [[0.0]])
    with pytest.raises(NoAction):
        verify_moment_map(S)
    C = cn_example(1, 0)
    bare = TorusActionSpec(3, 1, C.action.act, C.action.fundamental_fields)
    with pytest.raises(NoMomentMap):
        verify_moment_map(C.replace(action=bare))


# --- moment maps ------------------------------------------------------------


def test_moment_map_on_trivial_mapping_torus():
    r = verify_moment_map(build_scenario("mapping_torus_id"), tol=1e-6)
    assert r.passed, r.residuals


def test_moment_map_on_cn31():
    r = verify_moment_map(cn_example(3, 1), tol=1e-6)
    assert r.passed, r.residuals


def test_doubled_moment_map_fails_by_its_differential():
    S = cn_example(3, 1)
    A = S.action
    doubled = TorusActionSpec(A.dim, A.torus_rank, A.act, A.fundamental_fields,
                              lambda x: 2 * A.moment_map(x), A.subtorus)
    r = verify_moment_map(S.replace(action=doubled))
    assert not r.passed
    # residual is max |d mu| over the sampled points: d(|z|^2) = 2 (x, y)
    pts = S.manifold.grid()
    expected = max(float(np.max(np.abs(2 * x[1:5]))) for x in pts)
    assert r.residuals["moment_equation"] == pytest.approx(expected, rel=1e-6)


@pytest.mark.parametrize("name", ["cn(3,1)", "cn(2,1)", "y0_halfturn", "r4_spiral"])
def test_moment_map_constant_along_kernel(name):
    S = _spiral_scenario() if name == "r4_spiral" else build_scenario(name)
    A = S.action
    for x in S.manifold.grid()[::17]:
        K = flat_kernel(S.forms, x)
        for c in range(A.moment_dim):
            dmu = gradient(S.manifold, lambda z: float(A.moment_map(z)[c]), x)
            assert np.max(np.abs(dmu @ K.vectors), initial=0) <= 1e-6
        assert np.max(np.abs(S.forms.eta_at(x) @ A.fields_matrix(x))) <= 1e-8


def test_null_ideal():
    assert np.allclose(np.abs(null_ideal(cn_example(3, 1))), [[1, 0, 0]])
    assert null_ideal(cn_example(2, 0)).shape == (0, 2)
    assert null_ideal(_spiral_scenario()).shape == (0, 1)


def test_complement_generators():
    assert np.array_equal(complement_generators(np.array([[1.0, 0, 0]]), 3), [[0, 1, 0], [0, 0, 1]])
    assert np.array_equal(complement_generators(np.array([[1.0, 1.0]]), 2), [[1, 0]])


# --- clean actions ----------------------------------------------------------


def test_clean_at_generic_point_of_cn31():
    S = cn_example(3, 1)
    x = np.array([0.3, 0.5, -0.4, 1.2, 0.7, 0.2])
    d = clean_action_details(S, x)
    assert d.equal and d.null_orbit_dim == 1 and d.intersection_dim == 1 and d.declared_null_ok


def test_clean_where_complex_orbits_collapse():
    S = cn_example(3, 1)
    x = np.array([0.3, 0.0, 0.0, 0.0, 0.0, 0.2])
    d = clean_action_details(S, x)
    assert d.equal and d.orbit_dim == 1


def test_clean_on_cosymplectic_sphere():
    S = build_scenario("sphere_s1")
    assert clean_action_check(S, np.array([1.0, 0.3, 0.5]))


def test_spiral_action_is_not_clean_on_its_axis():
    S = _spiral_scenario()
    assert clean_action_check(S, np.array([0.5, 0.2, 0.0, 1.0]))
    d = clean_action_details(S, np.array([0.0, 0.0, 0.0, 1.0]))
    assert not d.equal
    assert (d.null_orbit_dim, d.intersection_dim) == (0, 1)


def test_clean_needs_a_classified_structure():
    S = cn_example(3, 1)
    bad = classify_structure(S.manifold, FormPair.constant(np.zeros((6, 6)) + _dxdy(6, 0, 1), np.eye(6)[0]))
    assert bad.is_degenerate
    with pytest.raises(NotClassified):
        clean_action_check(S, np.zeros(6), classification=bad)


def _dxdy(n, i, j):
    O = np.zeros((n, n))
    O[i, j], O[j, i] = 1, -1
    return O


# --- moment bodies ----------------------------------------------------------


def test_cn31_body_has_two_true_facets():
    S = cn_example(3, 1)
    body = moment_body(S, [[-1.5, 3.5], [-1.5, 3.5]])
    facets = sorted((tuple(h.normal), h.offset) for h in body.facets)
    assert len(facets) == 2
    for (normal, offset), want in zip(facets, [(-1.0, 0.0), (0.0, -1.0)]):
        assert np.allclose(normal, want, atol=1e-6) and offset == pytest.approx(1.0, abs=1e-6)
    assert all(h.kind == "box" for h in body.halfspaces if h.clipping)


def test_body_halfspaces_contain_samples_and_vertices_are_accounted_for():
    S = cn_example(3, 1)
    body = moment_body(S)
    inside = body.samples[body.in_box()]
    assert max(body.violation(y) for y in inside) <= 1e-7
    box = body.clip_box
    for v in body.vertices:
        on_box = np.any(np.isclose(v, box[:, 0]) | np.isclose(v, box[:, 1]))
        is_sample = np.any(np.all(np.isclose(inside, v), axis=1))
        assert on_box or is_sample


def test_sphere_body_is_an_interval_inside_unit_interval():
    S = build_scenario("sphere_s1")
    body = moment_body(S)
    lo, hi = body.vertices[:, 0].min(), body.vertices[:, 0].max()
    assert -1 < lo < -0.7 and 0.7 < hi < 1
    assert lo == pytest.approx(-hi)


def test_constant_moment_map_gives_a_point():
    S = cn_example(1, 0)
    A = S.action
    const = TorusActionSpec(A.dim, 1, A.act, A.fundamental_fields, lambda x: np.array([0.5]))
    body = moment_body(S.replace(action=const), [[-1.0, 1.0]])
    assert body.vertices.shape == (1, 1) and body.vertices[0, 0] == pytest.approx(0.5)


def test_constant_two_dimensional_moment_map_gives_a_point():
    S = cn_example(3, 1)
    A = S.action
    const = TorusActionSpec(A.dim, 3, A.act, A.fundamental_fields, lambda x: np.array([0.5, -0.25]), A.subtorus)
    body = moment_body(S.replace(action=const))
    assert np.allclose(body.vertices, [[0.5, -0.25]])
    assert all(h.kind == "affine" for h in body.halfspaces)


def test_image_outside_box_is_empty():
    with pytest.raises(EmptyImage):
        moment_body(cn_example(1, 0), [[10.0, 11.0]])
    with pytest.raises(EmptyImage):
        moment_body(cn_example(3, 1), [[10.0, 11.0], [10.0, 11.0]])


def test_convexity_certificate():
    body = moment_body(cn_example(3, 1))
    ok, worst = convexity_certificate(body, np.random.default_rng(0), pairs=1000, tol=1e-7)
    assert ok and worst <= 1e-7


def test_body_csv(tmp_path):
    body = moment_body(cn_example(3, 1))
    p = tmp_path / "v.csv"
    body.write_csv(p)
    lines = p.read_text().splitlines()
    assert lines[0] == "mu_1,mu_2"
    assert len(lines) == 1 + len(body.vertices)


# --- Morse-Bott -------------------------------------------------------------


def test_morse_bott_on_c_times_circle():
    rep = morse_bott_analysis(cn_example(1, 0), [1.0])
    assert len(rep.components) == 1
    c = rep.components[0]
    assert c.tangent_dim == 1 and c.index == 0 and c.nullity == 0 and c.nondegenerate
    assert np.allclose(c.representative[:2], 0)
    # Hessian of |z|^2 - 1 on the normal plane is 2 * identity
    assert np.allclose(c.normal_eigenvalues, [2, 2], atol=1e-6)


@pytest.mark.parametrize("pole,index,eig", [("north", 2, -1.0), ("south", 0, 1.0)])
def test_morse_bott_at_the_poles(pole, index, eig):
    rep = morse_bott_analysis(build_scenario(f"sphere_s1_{pole}"), [1.0])
    assert len(rep.components) == 1
    c = rep.components[0]
    assert c.index == index and c.tangent_dim == 1 and c.nondegenerate
    # z = +-sqrt(1 - u^2 - v^2) has Hessian -+ identity at the pole
    assert np.allclose(c.normal_eigenvalues, [eig, eig], atol=1e-5)


def test_height_on_cylindrical_chart_has_no_critical_points():
    rep = morse_bott_analysis(build_scenario("sphere_s1"), [1.0])
    assert rep.no_critical_points and rep.all_even


@pytest.mark.parametrize("xi", [[0, 1, 0], [0, 0, 1], [0, 1, 1], [0, 1, -1]])
def test_even_indices_on_cn31(xi):
    rep = morse_bott_analysis(cn_example(3, 1), xi)
    assert rep.components
    assert rep.all_even and rep.all_nondegenerate


def test_index_of_a_saddle_combination():
    # mu_2 - mu_3 has a critical set z2 = z3 = 0 with index 2
    rep = morse_bott_analysis(cn_example(3, 1), [0, 1, -1])
    assert [c.index for c in rep.components] == [2]
    assert rep.components[0].tangent_dim == 2  # alpha and theta directions


def test_flat_critical_set_is_degenerate():
    S = cn_example(1, 0)
    A = S.action
    quartic = TorusActionSpec(A.dim, 1, A.act, A.fundamental_fields,
                              lambda x: np.array([(x[0] ** 2 + x[1] ** 2) ** 2]))
    rep = morse_bott_analysis(S.replace(action=quartic), [1.0])
    assert rep.components and not rep.all_nondegenerate


# --- reduction --------------------------------------------------------------


def test_reduction_of_c_times_circle():
    r = reduce_at_zero(cn_example(1, 0))
    assert r.classification.verdict == "Cosymplectic(0)"
    assert r.level_residual <= 1e-8
    for u in r.scenario.manifold.grid():
        assert np.allclose(r.scenario.forms.omega_at(u), 0, atol=1e-12)
        assert r.scenario.forms.eta_at(u) == pytest.approx([1.0], abs=1e-8)


def test_reduction_invariant_under_rotated_slice():
    S = cn_example(1, 0)
    base = reduce_at_zero(S)
    for theta0 in (0.4, 2.0, 5.5):
        rotated = lambda u, t=theta0: S.action.act([t], S.slice_param(u))  # noqa: E731
        r = reduce_at_zero(S, rotated, S.slice_chart)
        assert r.classification.verdict == base.classification.verdict
        for u in S.slice_chart.grid():
            assert np.allclose(r.scenario.forms.eta_at(u), base.scenario.forms.eta_at(u), atol=1e-7)


def test_reduction_of_trivial_mapping_torus():
    assert reduce_at_zero(build_scenario("mapping_torus_id")).classification.verdict == "Cosymplectic(0)"


def test_slice_off_the_level_set():
    S = cn_example(1, 0)
    with pytest.raises(NotInLevelSet):
        reduce_at_zero(S, lambda u: np.array([1.2, 0.0, u[0]]), S.slice_chart)


def test_slice_along_the_orbit():
    S = cn_example(1, 0)
    chart = ChartedManifold(1, (0.0,), (TWO_PI,), (True,), (5,))
    with pytest.raises(SliceNotTransverse):
        reduce_at_zero(S, lambda u: np.array([math.cos(u[0]), math.sin(u[0]), 0.3]), chart)


def test_reduction_needs_a_slice():
    with pytest.raises(NotRegularValue):
        reduce_at_zero(cn_example(3, 1))
