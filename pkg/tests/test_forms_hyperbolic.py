import itertools
import math

import numpy as np
import pytest

from conftest import random_simple_polytope
from shapecone.builtins import check_angles, polygon_normals
from shapecone.config import VectorConfiguration, enumerate_circuits, gale_dual
from shapecone.cones import seed_chamber
from shapecone.errors import BadAngles, HypothesisFail, NotTimelike, WrongSignature
from shapecone.forms import (BodySpec, mixed_volume, positivity_witness, q_form, q_value,
                             weighted_area_form)
from shapecone.hyperbolic import (MinkowskiSpace, boundary_right_angle_check, build_cell,
                                  build_shape_complex, facet_projection, hyperbolic_distance,
                                  ideal_ray_is_segment, interior_cone_angle, orthoscheme_angles)
from shapecone.polytope import normal_fan, solve_polytope, volume

CUBE_V = np.vstack([np.eye(3), -np.eye(3)])


def _box(a):
    return solve_polytope(CUBE_V, np.r_[a, np.zeros(3)])


# --- mixed volumes -----------------------------------------------------------


def test_mixed_volume_of_boxes():
    a, b, c = np.array([1.0, 2, 3]), np.array([2.0, 1, 1]), np.array([0.5, 4, 1])
    expected = sum(a[p[0]] * b[p[1]] * c[p[2]] for p in itertools.permutations(range(3))) / 6
    for method in ("polarization", "grid"):
        assert mixed_volume([_box(a), _box(b), _box(c)], method=method) == pytest.approx(expected, rel=1e-9)


def test_mixed_volume_diagonal_is_volume(rng):
    _, _, P = random_simple_polytope(rng, 7)
    assert mixed_volume([P, P, P]) == pytest.approx(volume(P), rel=1e-9)


def test_mixed_volume_vanishes_for_parallel_segments():
    seg = np.array([[0.0, 0, 0], [1, 0, 0]])
    assert mixed_volume([seg, seg, _box([1, 1, 1])]) == pytest.approx(0, abs=1e-12)
    assert not positivity_witness([seg, seg, _box([1, 1, 1])])
    assert positivity_witness([_box([1, 1, 1])] * 3)


def test_ball_value_is_area_over_three(rng):
    cfg, h, P = random_simple_polytope(rng, 6)
    assert q_value(cfg.Vf, h, [BodySpec.ball()]) == pytest.approx(P.surface_area / 3)


def test_weighted_area_form_matches_mixed_form(G_bipyramid):
    # sum_i h0_i area_i(h) = 3 vol(P(h), P(h), P(h0))
    G = G_bipyramid
    tc = seed_chamber(G)
    h0 = G.lift(tc.cone.interior_point())
    w = weighted_area_form(G, h0, fan=tc.fan)
    body = BodySpec.of(solve_polytope(G.config.Vf, h0))
    q = q_form(tc.fan, [body], G, tc=tc)
    assert np.abs(w.gram - 3 * q.gram).max() <= 1e-5 * np.abs(w.gram).max()
    assert w.signature.as_tuple() == (1, 0, 2)


def test_polygon_form_is_lorentzian():
    for n in (5, 6, 7):
        alpha = [2 * math.pi / n] * n
        G = gale_dual(VectorConfiguration.from_rows(polygon_normals(alpha), exact=False))
        tc = seed_chamber(G)
        q = q_form(tc.fan, [], G, tc=tc)
        assert q.signature.as_tuple() == (1, 0, n - 3)


# --- Minkowski space ---------------------------------------------------------


@pytest.fixture(scope="module")
def pentagon_cell(G_pentagon):
    tc = seed_chamber(G_pentagon)
    return build_cell(tc, q_form(tc.fan, [], G_pentagon, tc=tc), G=G_pentagon)


def test_wrong_signature_rejected(G_pentagon):
    tc = seed_chamber(G_pentagon)
    q = q_form(tc.fan, [], G_pentagon, tc=tc)
    q.signature = type(q.signature)(2, 0, 0)
    with pytest.raises(WrongSignature):
        MinkowskiSpace.from_form(q, np.ones(2))


def test_hyperboloid_and_distance(pentagon_cell, rng):
    S = pentagon_cell.space
    pts = [S.to_hyperboloid(r) for r in pentagon_cell.vertices("finite")]
    for p in pts:
        assert S.q(p) == pytest.approx(1.0) and S.future(p)
    for p, q_, r in itertools.permutations(pts, 3):
        d = hyperbolic_distance
        assert d(S, p, q_) == pytest.approx(d(S, q_, p))
        assert d(S, p, r) <= d(S, p, q_) + d(S, q_, r) + 1e-12
    with pytest.raises(NotTimelike):
        S.to_hyperboloid(pentagon_cell.facet_normals[0])


def test_facet_projection_lies_on_facet(pentagon_cell):
    S = pentagon_cell.space
    I = S.to_hyperboloid(pentagon_cell.type_cone.cone.interior_point())
    for u in pentagon_cell.facet_normals:
        p = facet_projection(S, I, u)
        assert abs(S.inner(p, u)) <= 1e-12
        # the projection is the nearest point of the facet hyperplane
        assert S.q(p) > 0


def test_orthoscheme_matches_cells(rng):
    for trial in range(10):
        n = 5 + trial % 3
        a = rng.uniform(0.7, 1.4, n)
        a *= 2 * math.pi / a.sum()
        try:
            check_angles(a)
        except BadAngles:
            continue
        table = orthoscheme_angles(a)
        G = gale_dual(VectorConfiguration.from_rows(polygon_normals(a), exact=False))
        tc = seed_chamber(G)
        cell = build_cell(tc, q_form(tc.fan, [], G, tc=tc), G=G)
        edge = [min(tc.walls[tc.facets[j][0]]) for j in range(cell.n_facets)]
        for (j, k), e in cell.angles.items():
            ref = table[tuple(sorted((edge[j], edge[k])))]
            assert ref.kind == e.kind
            if e.kind == "angle":
                assert ref.value == pytest.approx(e.value, abs=1e-9)


def test_orthoscheme_needs_five():
    with pytest.raises(BadAngles):
        orthoscheme_angles([math.pi / 2] * 4)


def test_box_ideal_rays_are_segments(G_box):
    tc = seed_chamber(G_box)
    cell = build_cell(tc, q_form(tc.fan, [BodySpec.ball()], G_box, tc=tc), G=G_box)
    assert all(ideal_ray_is_segment(cell, k, G_box) for k in range(3))


# --- shape complex -----------------------------------------------------------


def test_bipyramid_cells_and_gluings(G_bipyramid):
    sc = build_shape_complex(G_bipyramid)
    assert len(sc.cells) == 6
    for cell in sc.cells:
        kinds = sorted(round(e.value, 9) for e in cell.angles.values() if e.kind == "angle" and e.adjacent)
        assert kinds == [round(math.pi / 3, 9)] + [round(math.pi / 2, 9)] * 3
    (key,) = sc.cone_angles
    ca = interior_cone_angle(sc, key)
    assert ca.total == pytest.approx(2 * math.pi) and ca.flat


def test_right_angle_check_rejects_bad_input(G_bipyramid):
    sc = build_shape_complex(G_bipyramid)
    cs = enumerate_circuits(G_bipyramid.config, G_bipyramid)
    pos = next(c for c in cs if c.kind == "positive")
    hyp = next(c for c in cs if c.kind == "hyperbolic")
    with pytest.raises(HypothesisFail):
        boundary_right_angle_check(sc, pos, hyp)
    with pytest.raises(HypothesisFail):
        boundary_right_angle_check(sc, hyp, hyp)


def test_prism_apex_is_ideal():
    from shapecone.builtins import prism
    G = gale_dual(prism([2 * math.pi / 5] * 5))
    tc = seed_chamber(G)
    cell = build_cell(tc, q_form(tc.fan, [BodySpec.ball()], G, tc=tc), G=G)
    k = cell.ray_kinds.index("ideal")
    P = solve_polytope(G.config.Vf, G.lift(tc.cone.rays[k]))
    assert P.dim == 1                     # the degenerate prism is a segment
    assert normal_fan(solve_polytope(G.config.Vf, G.lift(tc.cone.interior_point()))) == tc.fan
