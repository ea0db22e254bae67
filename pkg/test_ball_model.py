import json
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from atiyah_core import atiyah_matrix, is_singular
from ball_model import (
    BallIsometry,
    Configuration,
    coplanarity_test,
    endpoint_oracle,
    geodesic_configuration,
    hull_membership,
    hyperbolic_distance,
    ideal_endpoint,
    mobius_translate,
    random_ball_point,
    root_system,
    theorem_case,
)
from conftest import TETRAHEDRON_DIRECTIONS, klein_plane, tetrahedron
from enums import TheoremCase
from errors import DistinctPointsError, InvalidInputError, NotCoplanarError
from points import BallPoint, IdealPoint
from riemann_sphere import boundary_action, proj_distance

coordinate = st.floats(min_value=-0.5, max_value=0.5, allow_nan=False)
ball_points = st.tuples(coordinate, coordinate, coordinate).map(lambda c: BallPoint(list(c)))


def random_configuration(rng, radius=0.6):
    while True:
        try:
            return Configuration(tuple(random_ball_point(rng, radius) for _ in range(4)), min_sep=0.05)
        except DistinctPointsError:
            continue


def tetrahedral_rotations():
    generators = [np.diag([-1.0, -1.0, 1.0]), np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]])]
    group = [np.eye(3)]
    frontier = [np.eye(3)]
    while frontier:
        element = frontier.pop()
        for g in generators:
            candidate = g @ element
            if not any(np.allclose(candidate, known) for known in group):
                group.append(candidate)
                frontier.append(candidate)
    return group


# ball translation


def test_translate_by_origin_is_identity():
    x = BallPoint([0.1, -0.4, 0.3])
    assert mobius_translate(BallPoint([0, 0, 0]), x).isclose(x)


def test_translate_sends_center_to_origin():
    a = BallPoint([0.5, 0.0, 0.0])
    assert np.allclose(mobius_translate(a, a).coords, 0.0, atol=1e-15)


def test_translate_keeps_ideal_points_on_sphere():
    moved = mobius_translate(BallPoint([0.3, 0.2, -0.1]), IdealPoint([0.0, 0.6, 0.8]))
    assert isinstance(moved, IdealPoint)
    assert abs(np.linalg.norm(moved.coords) - 1.0) < 1e-12


@settings(max_examples=300, deadline=None)
@given(ball_points, ball_points)
def test_translate_round_trip(a, x):
    back = mobius_translate(BallPoint(-a.coords), mobius_translate(a, x))
    assert np.linalg.norm(back.coords - x.coords) < 1e-12


# distance


def test_distance_radial_closed_form():
    assert hyperbolic_distance(BallPoint([0, 0, 0]), BallPoint([0.5, 0, 0])) == pytest.approx(np.log(3.0), abs=1e-14)


@settings(max_examples=300, deadline=None)
@given(ball_points, ball_points)
def test_distance_symmetric(x, y):
    assert abs(hyperbolic_distance(x, y) - hyperbolic_distance(y, x)) < 1e-12
    assert hyperbolic_distance(x, x) == 0.0


# endpoints


def test_endpoint_from_origin_is_euclidean_ray():
    t = ideal_endpoint(BallPoint([0, 0, 0]), BallPoint([0.3, 0, 0]))
    assert np.allclose(t.coords, [1, 0, 0], atol=1e-15)


def test_endpoint_along_diameter_both_ways():
    p, q = BallPoint([0.3, 0, 0]), BallPoint([-0.3, 0, 0])
    assert np.allclose(ideal_endpoint(p, q).coords, [-1, 0, 0], atol=1e-12)
    assert np.allclose(ideal_endpoint(q, p).coords, [1, 0, 0], atol=1e-12)


def test_endpoint_rejects_coincident_points():
    with pytest.raises(DistinctPointsError):
        ideal_endpoint(BallPoint([0.1, 0, 0]), BallPoint([0.1, 0, 0]))


def test_oracle_straight_line_branch_matches():
    p, q = BallPoint([0.2, 0.0, 0.0]), BallPoint([0.6, 0.0, 0.0])
    assert np.linalg.norm(endpoint_oracle(p, q).coords - ideal_endpoint(p, q).coords) < 1e-15


def test_oracle_swap_symmetry():
    forward = endpoint_oracle(BallPoint([0.2, 0, 0]), BallPoint([0, 0.2, 0])).coords
    backward = endpoint_oracle(BallPoint([0, 0.2, 0]), BallPoint([0.2, 0, 0])).coords
    assert np.allclose(backward, forward[[1, 0, 2]], atol=1e-12)


def test_oracle_agrees_with_translation(rng):
    worst = 0.0
    for _ in range(1000):
        p = BallPoint(random_ball_point(rng, 0.99))
        q = BallPoint(random_ball_point(rng, 0.99))
        if hyperbolic_distance(p, q) < 1e-4:
            continue
        t = ideal_endpoint(p, q)
        assert abs(np.linalg.norm(t.coords) - 1.0) < 1e-12
        worst = max(worst, np.linalg.norm(t.coords - endpoint_oracle(p, q).coords))
    assert worst < 1e-9


@pytest.mark.slow
def test_oracle_agreement_full_run():
    rng = np.random.default_rng(1)
    worst, count = 0.0, 0
    while count < 10_000:
        p = BallPoint(random_ball_point(rng, 0.99))
        q = BallPoint(random_ball_point(rng, 0.99))
        if hyperbolic_distance(p, q) < 1e-4:
            continue
        count += 1
        worst = max(worst, np.linalg.norm(ideal_endpoint(p, q).coords - endpoint_oracle(p, q).coords))
    assert worst < 1e-9


def test_endpoint_isometry_equivariance(rng):
    for _ in range(50):
        g = BallIsometry.random(rng, 0.4)
        p, q = BallPoint(random_ball_point(rng, 0.6)), BallPoint(random_ball_point(rng, 0.6))
        moved = ideal_endpoint(g.apply(p), g.apply(q)).coords
        assert np.linalg.norm(moved - g.apply(ideal_endpoint(p, q)).coords) < 1e-9


def test_endpoint_euclidean_limit():
    xi, xj = np.array([0.3, 0.1, -0.2]), np.array([-0.1, 0.4, 0.2])
    chord = (xj - xi) / np.linalg.norm(xj - xi)
    errors = [
        np.linalg.norm(ideal_endpoint(BallPoint(eps * xi), BallPoint(eps * xj)).coords - chord) for eps in (1e-2, 1e-3)
    ]
    assert 7.0 < errors[0] / errors[1] < 13.0


# isometries


def test_isometry_inverse_and_compose(rng):
    g, h = BallIsometry.random(rng), BallIsometry.random(rng)
    x = BallPoint(random_ball_point(rng, 0.7))
    assert g.inverse().apply(g.apply(x)).isclose(x, 1e-10)
    assert g.compose(h).apply(x).isclose(g.apply(h.apply(x)), 1e-10)


def test_isometry_rejects_reflection():
    with pytest.raises(InvalidInputError):
        BallIsometry(np.diag([1.0, 1.0, -1.0]), BallPoint([0, 0, 0]))


def test_isometry_preserves_distance(rng):
    g = BallIsometry.random(rng)
    x, y = BallPoint(random_ball_point(rng, 0.6)), BallPoint(random_ball_point(rng, 0.6))
    assert hyperbolic_distance(g.apply(x), g.apply(y)) == pytest.approx(hyperbolic_distance(x, y), rel=1e-10)


# configurations


def test_configuration_validation():
    with pytest.raises(InvalidInputError):
        Configuration(([0, 0, 0], [0.1, 0, 0], [0, 0.1, 0]))
    with pytest.raises(InvalidInputError):
        Configuration(([1.5, 0, 0], [0.1, 0, 0], [0, 0.1, 0], [0, 0, 0.1]))
    with pytest.raises(DistinctPointsError):
        Configuration(([0, 0, 0], [0, 0, 0], [0, 0.1, 0], [0, 0, 0.1]))
    with pytest.raises(InvalidInputError):
        Configuration.from_json({"pts": []})
    with pytest.raises(InvalidInputError):
        Configuration.loads("{not json")


def test_configuration_json_round_trip(regular_tetrahedron):
    text = json.dumps(regular_tetrahedron.to_json())
    assert np.array_equal(Configuration.loads(text).coords, regular_tetrahedron.coords)


# root system


def test_root_system_on_shared_geodesic():
    rs = root_system(geodesic_configuration([-0.6, -0.2, 0.2, 0.6]))
    for i, j in product(range(4), repeat=2):
        if i != j:
            expected = [1, 0, 0] if j > i else [-1, 0, 0]
            assert np.allclose(rs.ideal[i][j].coords, expected, atol=1e-12)


def test_root_system_boundary_equivariance(rng):
    for _ in range(20):
        config = random_configuration(rng)
        g = BallIsometry.random(rng, 0.4)
        moved = root_system(g.apply_configuration(config))
        original = root_system(config)
        action = boundary_action(g)
        for i, j, w in original.items():
            assert proj_distance(moved.root(i, j), action(w)) < 1e-8


def test_root_system_tetrahedral_symmetry(regular_tetrahedron):
    rotations = tetrahedral_rotations()
    assert len(rotations) == 12
    roots = [w for _, _, w in root_system(regular_tetrahedron).items()]
    for rotation in rotations:
        moved = BallIsometry.from_rotation(rotation).apply_configuration(regular_tetrahedron)
        for _, _, w in root_system(moved).items():
            assert min(proj_distance(w, r) for r in roots) < 1e-9


# coplanarity and hulls


def test_equatorial_points_are_coplanar(coplanar_convex):
    coplanar, residual = coplanarity_test(coplanar_convex)
    assert coplanar and residual < 1e-15


def test_tetrahedron_is_not_coplanar(regular_tetrahedron):
    coplanar, residual = coplanarity_test(regular_tetrahedron)
    assert not coplanar and residual > 0.1


def test_hull_membership_centroid_case():
    config = klein_plane([(-0.5, 0.0), (0.0, 0.0), (0.5, 0.0), (0.0, 0.5)])
    # (0, 0) lies on the edge between (-0.5, 0) and (0.5, 0), which counts as inside
    assert hull_membership(config) == 1
    inner = klein_plane([(-0.5, -0.1), (0.5, -0.1), (0.0, 0.5), (0.0, 0.05)])
    assert hull_membership(inner) == 3


def test_hull_membership_convex_position(coplanar_convex):
    assert hull_membership(coplanar_convex) is None
    assert theorem_case(coplanar_convex) is TheoremCase.CoplanarOther


def test_hull_membership_needs_coplanar(regular_tetrahedron):
    with pytest.raises(NotCoplanarError):
        hull_membership(regular_tetrahedron)


def test_theorem_cases(regular_tetrahedron, coplanar_hull):
    assert theorem_case(regular_tetrahedron) is TheoremCase.NonCoplanar
    assert theorem_case(coplanar_hull) is TheoremCase.CoplanarHull


def test_case_verdicts_isometry_invariant(rng, coplanar_hull, coplanar_convex):
    for _ in range(100):
        g = BallIsometry.random(rng, 0.3)
        assert hull_membership(g.apply_configuration(coplanar_hull)) == 3
        assert hull_membership(g.apply_configuration(coplanar_convex)) is None
        assert not coplanarity_test(g.apply_configuration(tetrahedron()))[0]


def test_tetrahedron_directions_are_regular():
    gram = TETRAHEDRON_DIRECTIONS @ TETRAHEDRON_DIRECTIONS.T
    assert np.allclose(gram[~np.eye(4, dtype=bool)], -1.0 / 3.0)


@pytest.mark.slow
def test_boundary_equivariance_full_run():
    rng = np.random.default_rng(2)
    for _ in range(1000):
        config = random_configuration(rng)
        g = BallIsometry.random(rng, 0.4)
        moved = g.apply_configuration(config)
        action = boundary_action(g)
        moved_roots = root_system(moved)
        for i, j, w in root_system(config).items():
            assert proj_distance(moved_roots.root(i, j), action(w)) < 1e-8
        assert is_singular(atiyah_matrix(config)) == is_singular(atiyah_matrix(moved))
