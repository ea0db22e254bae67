from itertools import permutations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from atiyah_core import (
    STANDARD_RELATIONS,
    AtiyahMatrix,
    RelationVector,
    atiyah_matrix,
    atiyah_polynomial,
    classify_scenario,
    complete_triplet,
    cubic_coefficients,
    cubic_roots,
    cubic_value,
    evaluate_relation,
    independence_measure,
    is_singular,
    matrix_from_root_system,
    normalize_relation,
    plant_root_system,
    polarize,
    relation_from_cubic,
    relation_nullvector,
    relation_row,
    sym_elem,
    transport_relation,
    trilinear_eval,
)
from ball_model import BallIsometry, root_system
from config import Tolerances
from conftest import tetrahedron
from enums import ScenarioTag
from errors import IndeterminateError, InvalidInputError
from riemann_sphere import INFINITY, ONE, ZERO, MobiusMap, ProjPoint, RootSystem, proj_distance, random_mobius, random_proj_point

finite = st.floats(min_value=-10, max_value=10, allow_nan=False)
affine_points = st.builds(lambda x, y: ProjPoint.from_affine(complex(x, y)), finite, finite)
relations = st.lists(st.tuples(finite, finite), min_size=4, max_size=4).filter(
    lambda c: any(abs(x) + abs(y) > 1e-3 for x, y in c)
).map(lambda c: RelationVector([complex(x, y) for x, y in c]))


def t(value):
    return ProjPoint.from_affine(value)


# polynomials and the matrix


def test_sym_elem_examples():
    assert np.allclose(sym_elem(ZERO, ZERO, ZERO), (1, 0, 0, 0))
    assert np.allclose(sym_elem(ONE, ONE, ONE), (1, 3, 3, 1))


def test_sym_elem_at_infinity_is_limit_of_large_roots():
    w2, w3 = t(0.5 - 1j), t(2.0)
    limit = np.array(sym_elem(INFINITY, w2, w3))
    near = np.array(sym_elem(t(1e8), w2, w3))
    assert np.linalg.norm(limit - near) < 1e-7


def test_atiyah_polynomial_examples():
    rs = RootSystem.from_triplets(
        [[ZERO, ZERO, ZERO], [INFINITY, INFINITY, INFINITY], [ZERO, ONE, INFINITY], [ONE, ONE, ONE]]
    )
    assert np.allclose(atiyah_polynomial(0, rs), [1, 0, 0, 0])
    assert np.allclose(atiyah_polynomial(1, rs), [0, 0, 0, 1])
    assert np.allclose(atiyah_polynomial(2, rs), np.array([0, 1, -1, 0]) / np.sqrt(2))


def test_collinear_matrix_is_signed_antidiagonal(collinear):
    m = atiyah_matrix(collinear)
    assert np.allclose(np.abs(m.entries), np.fliplr(np.eye(4)), atol=1e-12)
    assert independence_measure(m) == pytest.approx(1.0, abs=1e-12)


def test_columns_have_unit_norm(regular_tetrahedron):
    m = atiyah_matrix(regular_tetrahedron)
    assert np.allclose(np.linalg.norm(m.entries, axis=0), 1.0)
    for column in m.entries.T:
        lead = next(x for x in column if abs(x) > 1e-12)
        assert lead.real > 0 and abs(lead.imag) < 1e-15


def test_independence_measure_extremes():
    assert independence_measure(AtiyahMatrix(np.eye(4, dtype=complex), np.ones(4))) == pytest.approx(1.0)
    repeated = np.eye(4, dtype=complex)
    repeated[:, 3] = repeated[:, 2]
    assert independence_measure(AtiyahMatrix(repeated, np.ones(4))) == 0.0


def test_measure_invariant_under_relabeling(regular_tetrahedron, rng):
    config = BallIsometry.random(rng, 0.3).apply_configuration(regular_tetrahedron)
    base = independence_measure(atiyah_matrix(config))
    for order in permutations(range(4)):
        assert independence_measure(atiyah_matrix(config.permuted(order))) == pytest.approx(base, abs=1e-12)


def test_rank_is_isometry_invariant(regular_tetrahedron, rng):
    _, residual = relation_nullvector(atiyah_matrix(regular_tetrahedron))
    for _ in range(20):
        moved = BallIsometry.random(rng, 0.4).apply_configuration(regular_tetrahedron)
        _, moved_residual = relation_nullvector(atiyah_matrix(moved))
        assert (moved_residual < 1e-8) == (residual < 1e-8)
    assert not is_singular(atiyah_matrix(regular_tetrahedron))


def test_row_bridge_to_relation(regular_tetrahedron, rng):
    rs = root_system(regular_tetrahedron)
    m = matrix_from_root_system(rs)
    for _ in range(10):
        c = RelationVector(rng.normal(size=4) + 1j * rng.normal(size=4))
        row = relation_row(c) @ m.entries
        for j, triplet in enumerate(rs.triplets()):
            expected = evaluate_relation(c, *triplet) * m.column_scales[j]
            assert abs(row[j] - expected) <= 1e-12 * max(1.0, abs(expected))


# relations


def test_nullvector_of_identity_has_unit_residual():
    c, residual = relation_nullvector(AtiyahMatrix(np.eye(4, dtype=complex), np.ones(4)))
    assert residual == pytest.approx(1.0)
    assert np.linalg.norm(c.c) == pytest.approx(1.0)


def test_relation_vector_validation():
    with pytest.raises(InvalidInputError):
        RelationVector([0, 0, 0, 0])
    with pytest.raises(InvalidInputError):
        RelationVector([1, 2, 3])
    c = RelationVector([0, 2j, 0, -6j])
    assert c.angle_to(RelationVector.standard(ScenarioTag.ThreeDistinct)) < 1e-12


def test_evaluate_relation_standard_forms():
    # t1 t2 + t2 t3 + t3 t1 = 3
    assert abs(evaluate_relation(STANDARD_RELATIONS[ScenarioTag.ThreeDistinct], t(1.0), t(1.0), t(1.0))) < 1e-15
    # (t1 + t2 + t3) / 3 = 1
    assert abs(evaluate_relation(STANDARD_RELATIONS[ScenarioTag.DoubleRoot], t(3.0), t(0.0), t(0.0))) < 1e-15
    # t1 t2 t3 = 0
    assert abs(evaluate_relation(STANDARD_RELATIONS[ScenarioTag.TripleRoot], t(0.0), t(2.0), t(1j))) < 1e-15


def test_complete_triplet_examples():
    assert complete_triplet([1, 0, 0, 0], t(2.0), t(-1j)).equals(ZERO)
    assert complete_triplet([0, 0, 1.0 / 3.0, -1], t(0.0), t(1.0)).equals(t(2.0))


def test_complete_triplet_indeterminate():
    with pytest.raises(IndeterminateError):
        complete_triplet([1, 0, 0, 0], ZERO, ZERO)


@settings(max_examples=300, deadline=None)
@given(relations, affine_points, affine_points)
def test_complete_triplet_plugs_back(c, t1, t2):
    try:
        t3 = complete_triplet(c, t1, t2)
    except IndeterminateError:
        return
    assert abs(evaluate_relation(c, t1, t2, t3)) < 1e-10


def test_standard_relations_hold_on_completed_triplets(rng):
    for tag, c in STANDARD_RELATIONS.items():
        for _ in range(100):
            t1, t2 = random_proj_point(rng), random_proj_point(rng)
            t3 = complete_triplet(c, t1, t2)
            s0, s1, s2, s3 = sym_elem(t1, t2, t3)
            residual = {
                ScenarioTag.ThreeDistinct: s2 - 3 * s0,
                ScenarioTag.DoubleRoot: s1 - 3 * s0,
                ScenarioTag.TripleRoot: s3,
            }[tag]
            assert abs(residual) < 1e-12


# polarization


@settings(max_examples=300, deadline=None)
@given(relations, affine_points)
def test_polarization_identity(c, w):
    value = cubic_value(cubic_coefficients(c), w)
    scale = sum(abs(x) for x in cubic_coefficients(c)) * max(abs(w.u), abs(w.v)) ** 3
    assert abs(trilinear_eval(c, w, w, w) - value) <= 1e-14 * scale


@settings(max_examples=200, deadline=None)
@given(relations, affine_points, affine_points, affine_points)
def test_trilinear_form_is_symmetric(c, w1, w2, w3):
    base = trilinear_eval(c, w1, w2, w3)
    for order in permutations((w1, w2, w3)):
        assert abs(trilinear_eval(c, *order) - base) <= 1e-14 * max(1.0, abs(base)) * 1e2


@pytest.mark.slow
def test_polarization_on_ten_thousand_seeded_relations():
    rng = np.random.default_rng(31)
    for _ in range(10_000):
        c = RelationVector(rng.normal(size=4) + 1j * rng.normal(size=4))
        w1, w2, w3 = (ProjPoint.from_affine(complex(*rng.normal(size=2))) for _ in range(3))
        value = cubic_value(cubic_coefficients(c), w1)
        scale = sum(abs(x) for x in cubic_coefficients(c)) * max(abs(w1.u), abs(w1.v)) ** 3
        assert abs(trilinear_eval(c, w1, w1, w1) - value) <= 1e-13 * scale
        base = trilinear_eval(c, w1, w2, w3)
        assert abs(trilinear_eval(c, w3, w1, w2) - base) <= 1e-12 * max(1.0, abs(base))


def test_polarize_standard_forms():
    a = polarize(STANDARD_RELATIONS[ScenarioTag.ThreeDistinct])
    assert a.multiplicities == (1, 1, 1)
    for target in (INFINITY, ONE, t(-1.0)):
        assert min(proj_distance(w, target) for w in a.roots) < 1e-12

    b = polarize(STANDARD_RELATIONS[ScenarioTag.DoubleRoot])
    assert b.multiplicities == (2, 1)
    assert b.roots[0].is_infinite() and b.roots[1].equals(ONE)

    c = polarize(STANDARD_RELATIONS[ScenarioTag.TripleRoot])
    assert c.multiplicities == (3,) and c.roots[0].equals(ZERO)


def test_cubic_roots_are_roots(rng):
    for _ in range(200):
        coefficients = rng.normal(size=4) + 1j * rng.normal(size=4)
        coefficients[0] *= 1e-6
        for w in cubic_roots(coefficients):
            assert abs(cubic_value(coefficients, w)) < 1e-8 * np.linalg.norm(coefficients)


def test_perturbed_double_root_tolerance_contract():
    # roots infinity and +-1e-12: g = u (v^2 - 1e-24 u^2)
    c = [0.0, 1.0 / 3.0, 0.0, -1e-24]
    assert classify_scenario(c).tag is ScenarioTag.DoubleRoot
    assert polarize(c, Tolerances(tol_scen=1e-30)).multiplicities == (1, 1, 1)


def test_root_cluster_wider_than_tolerance_is_not_triple():
    # roots 0, 1e-5, 2e-5
    clustered = relation_from_cubic([1.0, -3e-5, 2e-10, 0.0])
    assert polarize(clustered).multiplicities == (2, 1)
    assert polarize(clustered, Tolerances(tol_root=1e-4)).multiplicities == (3,)


def test_triple_root_away_from_zero():
    scenario = classify_scenario(relation_from_cubic([1.0, -3.0, 3.0, -1.0]))
    assert scenario.tag is ScenarioTag.TripleRoot
    assert scenario.cubic.roots[0].equals(ONE, 1e-9)
    assert scenario.normalizer(ONE).equals(ZERO, 1e-9)


def test_root_near_infinity_uses_twisted_chart():
    cubic = polarize(RelationVector([1e-6, 1.0 / 3.0, 0.0, -1.0]))
    assert cubic.multiplicities == (1, 1, 1)
    for w in cubic.roots:
        assert abs(cubic.value(w)) < 1e-10
    assert classify_scenario(RelationVector([1e-6, 1.0 / 3.0, 0.0, -1.0])).tag is ScenarioTag.ThreeDistinct


@pytest.mark.parametrize("tag", list(ScenarioTag))
def test_transport_under_identity_and_sparse_maps(tag):
    c = RelationVector.standard(tag)
    assert transport_relation(c, MobiusMap.identity()).angle_to(c) < 1e-14
    swap = MobiusMap(np.array([[0.0, 1.0], [-1.0, 0.0]]))
    back = transport_relation(transport_relation(c, swap), swap.inverse())
    assert back.angle_to(c) < 1e-12


# scenarios


@pytest.mark.parametrize("tag", list(ScenarioTag))
def test_standard_relation_has_identity_normalizer(tag):
    scenario = classify_scenario(STANDARD_RELATIONS[tag])
    assert scenario.tag is tag
    assert scenario.normalizer.isclose(MobiusMap.identity(), 1e-9)


def test_classify_rejects_zero():
    with pytest.raises(InvalidInputError):
        classify_scenario([0, 0, 0, 0])


@pytest.mark.parametrize("tag", list(ScenarioTag))
def test_scenario_is_mobius_equivariant(tag):
    rng = np.random.default_rng(7)
    for _ in range(25):
        m = gentle_mobius(rng)
        moved = transport_relation(STANDARD_RELATIONS[tag], m)
        assert classify_scenario(moved).tag is tag


@pytest.mark.parametrize("tag", list(ScenarioTag))
def test_normalize_relation_recovers_standard_form(tag):
    rng = np.random.default_rng(11)
    for _ in range(25):
        moved = transport_relation(STANDARD_RELATIONS[tag], gentle_mobius(rng))
        scenario, normalized = normalize_relation(moved)
        assert scenario.tag is tag
        assert normalized.angle_to(RelationVector.standard(tag)) < 1e-7


def gentle_mobius(rng):
    """A random Moebius map with entries of order one."""
    while True:
        m = random_mobius(rng)
        if np.linalg.norm(m.entries) < 3.0:
            return m


@pytest.mark.parametrize("tag", list(ScenarioTag))
def test_planted_round_trip(tag):
    rng = np.random.default_rng(5)
    planted = RelationVector.standard(tag)
    for _ in range(100):
        m = matrix_from_root_system(plant_root_system(planted, rng))
        recovered, residual = relation_nullvector(m)
        assert residual < 1e-10
        assert recovered.angle_to(planted) < 1e-6
        assert classify_scenario(recovered).tag is tag
        assert is_singular(m)


@pytest.mark.slow
def test_planted_round_trip_transported():
    rng = np.random.default_rng(9)
    for k in range(1000):
        tag = list(ScenarioTag)[k % 3]
        planted = transport_relation(STANDARD_RELATIONS[tag], gentle_mobius(rng))
        recovered, residual = relation_nullvector(matrix_from_root_system(plant_root_system(planted, rng)))
        assert residual < 1e-10
        assert recovered.angle_to(planted) < 1e-6


def test_planted_system_satisfies_relation(rng):
    c = RelationVector(rng.normal(size=4) + 1j * rng.normal(size=4))
    rs = plant_root_system(c, rng)
    for triplet in rs.triplets():
        assert abs(evaluate_relation(c, *triplet)) < 1e-10


def test_tetrahedron_is_independent():
    m = atiyah_matrix(tetrahedron())
    assert independence_measure(m) > 1e-3
