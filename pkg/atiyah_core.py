"""
Atiyah polynomials of a four-point configuration and the linear relation between them.

Column j of the matrix M holds the coefficients of p_j in the basis (v^3, v^2 u, v u^2, u^3).
For the triplet w_1, w_2, w_3 of p_j these are (s0, -s1, s2, -s3), with s_k the
multihomogeneous elementary symmetric polynomials. A left null vector of M is a relation

    G(w1, w2, w3) = c0 s3 + c1 s2 + c2 s1 + c3 s0 = 0

holding on all four triplets. Row vector and relation are tied by relation_row(c) = (c3, -c2, c1, -c0).
"""

import logging
from dataclasses import dataclass, field
from itertools import permutations
from typing import List, Sequence, Tuple, Union

import numpy as np
from numpy.polynomial import polynomial as P

from ball_model import Configuration, root_system
from config import DEFAULT_TOLERANCES, Tolerances
from enums import ScenarioTag
from errors import IndeterminateError, InvalidInputError
from riemann_sphere import (
    INFINITY,
    ONE,
    ZERO,
    MobiusMap,
    ProjPoint,
    RootSystem,
    apply_mobius,
    mobius_from_three_points,
    proj_distance,
    random_proj_point,
)

logger = logging.getLogger(__name__)

SIGNS = np.array([1.0, -1.0, 1.0, -1.0])
PHASE_FLOOR = 1e-12
INDETERMINATE_FLOOR = 1e-14
# below this relative leading coefficient the identity chart would put a root near infinity
TWIST_MIN = 1e-3
# rounding at the null-vector level leaves a relative Hessian around 1e-13 on a true triple root
HESSIAN_NOISE = 1e-11
_TWISTS = None

STANDARD_RELATIONS = {
    ScenarioTag.ThreeDistinct: (0.0, 1.0 / 3.0, 0.0, -1.0),
    ScenarioTag.DoubleRoot: (0.0, 0.0, 1.0 / 3.0, -1.0),
    ScenarioTag.TripleRoot: (1.0, 0.0, 0.0, 0.0),
}

_REFERENCE_POOL = (
    ZERO,
    ONE,
    INFINITY,
    ProjPoint.from_affine(-1.0),
    ProjPoint.from_affine(1j),
    ProjPoint.from_affine(-1j),
    ProjPoint.from_affine(2.0),
)


def _fix_phase(vector: np.ndarray) -> Tuple[np.ndarray, complex]:
    """Unit norm with the first non-negligible entry real positive; returns (vector, factor applied)."""
    norm = np.linalg.norm(vector)
    unit = vector / norm
    lead = next(x for x in unit if abs(x) > PHASE_FLOOR)
    phase = abs(lead) / lead
    return unit * phase, phase / norm


@dataclass(frozen=True, eq=False)
class RelationVector:
    """(c0, c1, c2, c3), unit norm, defined up to a complex scale."""

    c: np.ndarray

    def __post_init__(self):
        try:
            c = np.array(self.c, dtype=complex).reshape(4)
        except (TypeError, ValueError) as exc:
            raise InvalidInputError(f"a relation has four complex coefficients, got {self.c!r}") from exc
        if not np.all(np.isfinite(c)) or np.linalg.norm(c) == 0:
            raise InvalidInputError("a relation vector must be finite and non-zero")
        c, _ = _fix_phase(c)
        c.setflags(write=False)
        object.__setattr__(self, "c", c)

    def angle_to(self, other: "RelationVector") -> float:
        """Angle between the two complex lines, 0 when they agree up to phase."""
        overlap = np.vdot(self.c, other.c)
        # arctan2 keeps small angles exact where arccos(overlap) would not
        return float(np.arctan2(np.linalg.norm(other.c - overlap * self.c), abs(overlap)))

    def to_json(self) -> List[List[float]]:
        return [[z.real, z.imag] for z in self.c]

    @classmethod
    def standard(cls, tag: ScenarioTag) -> "RelationVector":
        return cls(STANDARD_RELATIONS[tag])


RelationLike = Union[RelationVector, Sequence[complex], np.ndarray]


def _as_relation(c: RelationLike) -> RelationVector:
    return c if isinstance(c, RelationVector) else RelationVector(c)


def sym_elem(w1: ProjPoint, w2: ProjPoint, w3: ProjPoint) -> Tuple[complex, complex, complex, complex]:
    """s_k as the sum over k-subsets of the product of v over the subset and u over the rest."""
    u1, v1, u2, v2, u3, v3 = w1.u, w1.v, w2.u, w2.v, w3.u, w3.v
    return (
        u1 * u2 * u3,
        v1 * u2 * u3 + u1 * v2 * u3 + u1 * u2 * v3,
        v1 * v2 * u3 + v1 * u2 * v3 + u1 * v2 * v3,
        v1 * v2 * v3,
    )


def _raw_polynomial(triplet: Sequence[ProjPoint]) -> np.ndarray:
    return SIGNS * np.array(sym_elem(*triplet), dtype=complex)


def atiyah_polynomial(i: int, rs: RootSystem) -> np.ndarray:
    """Coefficients of prod_{j != i} (u_ij v - v_ij u), unit norm, leading entry real positive."""
    column, _ = _fix_phase(_raw_polynomial(rs.triplet(i)))
    return column


@dataclass(frozen=True, eq=False)
class AtiyahMatrix:
    """
    entries[:, j] = column_scales[j] * (s0, -s1, s2, -s3) of triplet j.

    column_scales records the free per-column factor fixed by the normalization.
    """

    entries: np.ndarray
    column_scales: np.ndarray

    @property
    def singular_values(self) -> np.ndarray:
        return np.linalg.svd(self.entries, compute_uv=False)

    @property
    def determinant(self) -> complex:
        return complex(np.linalg.det(self.entries))

    def to_json(self) -> List[List[List[float]]]:
        return [[[z.real, z.imag] for z in row] for row in self.entries]


def matrix_from_root_system(rs: RootSystem) -> AtiyahMatrix:
    columns, scales = zip(*(_fix_phase(_raw_polynomial(t)) for t in rs.triplets()))
    entries = np.column_stack(columns)
    entries.setflags(write=False)
    return AtiyahMatrix(entries, np.array(scales))


def atiyah_matrix(config: Configuration) -> AtiyahMatrix:
    return matrix_from_root_system(root_system(config))


def independence_measure(m: AtiyahMatrix) -> float:
    """|det M| of the unit-column matrix; Hadamard's inequality keeps it in [0, 1]."""
    return float(min(abs(np.linalg.det(m.entries)), 1.0))


def relation_row(c: RelationLike) -> np.ndarray:
    c0, c1, c2, c3 = _as_relation(c).c
    return np.array([c3, -c2, c1, -c0])


def relation_nullvector(m: AtiyahMatrix) -> Tuple[RelationVector, float]:
    """
    Left singular direction of the smallest singular value, read as a relation.

    residual = s_min / s_max; the relation is meaningful only when it is small.
    """
    u, s, _ = np.linalg.svd(m.entries)
    row = np.conj(u[:, -1])
    c = RelationVector(np.array([-row[3], row[2], -row[1], row[0]]))
    return c, float(s[-1] / s[0])


def evaluate_relation(c: RelationLike, w1: ProjPoint, w2: ProjPoint, w3: ProjPoint) -> complex:
    c0, c1, c2, c3 = _as_relation(c).c
    s0, s1, s2, s3 = sym_elem(w1, w2, w3)
    return c0 * s3 + c1 * s2 + c2 * s1 + c3 * s0


def trilinear_eval(c: RelationLike, w1: ProjPoint, w2: ProjPoint, w3: ProjPoint) -> complex:
    """The symmetric trilinear form G; it is the relation itself."""
    return evaluate_relation(c, w1, w2, w3)


def complete_triplet(c: RelationLike, t1: ProjPoint, t2: ProjPoint) -> ProjPoint:
    """The t3 with G(t1, t2, t3) = 0, from G = v3 * A + u3 * B."""
    c0, c1, c2, c3 = _as_relation(c).c
    mixed = t1.v * t2.u + t1.u * t2.v
    a = c0 * t1.v * t2.v + c1 * mixed + c2 * t1.u * t2.u
    b = c1 * t1.v * t2.v + c2 * mixed + c3 * t1.u * t2.u
    if max(abs(a), abs(b)) < INDETERMINATE_FLOOR:
        raise IndeterminateError("the relation leaves the third root undetermined")
    return ProjPoint(a, -b)


def cubic_coefficients(c: RelationLike) -> np.ndarray:
    """g = G(w, w, w) in the basis (v^3, v^2 u, v u^2, u^3)."""
    c0, c1, c2, c3 = _as_relation(c).c
    return np.array([c0, 3.0 * c1, 3.0 * c2, c3])


def relation_from_cubic(coefficients: np.ndarray) -> RelationVector:
    a, b, c, d = coefficients
    return RelationVector([a, b / 3.0, c / 3.0, d])


def cubic_value(coefficients: np.ndarray, w: ProjPoint) -> complex:
    a, b, c, d = coefficients
    return a * w.v**3 + b * w.v**2 * w.u + c * w.v * w.u**2 + d * w.u**3


def substitute(coefficients: np.ndarray, homogeneous: np.ndarray) -> np.ndarray:
    """Coefficients of w -> g(L w) for a 2x2 matrix L acting on (u, v)."""
    a, b, c, d = coefficients
    pu = homogeneous[0]
    pv = homogeneous[1]
    # ascending powers of t = v/u in the chart u = 1
    terms = (
        a * P.polypow(pv, 3),
        b * P.polymul(P.polypow(pv, 2), pu),
        c * P.polymul(pv, P.polypow(pu, 2)),
        d * P.polypow(pu, 3),
    )
    expanded = sum(_padded(term) for term in terms)
    return expanded[::-1]


def _padded(series: np.ndarray) -> np.ndarray:
    # numpy.polynomial trims trailing zeros
    series = np.asarray(series, dtype=complex)
    return np.pad(series, (0, 4 - len(series)))


def discriminant(coefficients: np.ndarray) -> complex:
    a, b, c, d = coefficients
    return b * b * c * c - 4 * a * c**3 - 4 * b**3 * d - 27 * a * a * d * d + 18 * a * b * c * d


def hessian(coefficients: np.ndarray) -> np.ndarray:
    """Hessian covariant (v^2, v u, u^2 coefficients); it vanishes iff g is a perfect cube."""
    a, b, c, d = coefficients
    return np.array([b * b - 3 * a * c, b * c - 9 * a * d, c * c - 3 * b * d])


def _twists() -> List[MobiusMap]:
    global _TWISTS
    if _TWISTS is None:
        rng = np.random.default_rng(20240229)
        _TWISTS = [MobiusMap.identity()]
        while len(_TWISTS) < 16:
            m = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
            if abs(np.linalg.det(m)) > 0.1:
                _TWISTS.append(MobiusMap(m))
    return _TWISTS


def cubic_roots(coefficients: np.ndarray) -> List[ProjPoint]:
    """
    The three roots of a binary cubic, with repetition.

    Exact zero leading coefficients mean roots at infinity and are deflated. When the
    leading coefficient is merely small, the cubic is first pulled back by a Moebius
    twist that keeps every root away from infinity, solved there, and pushed forward.
    """
    scale = np.linalg.norm(coefficients)
    trimmed = np.trim_zeros(coefficients, "f")
    if abs(trimmed[0]) >= TWIST_MIN * scale:
        finite = [ProjPoint(1.0, t) for t in np.roots(trimmed)]
        return finite + [INFINITY] * (3 - len(finite))

    def leading_ratio(m: MobiusMap) -> float:
        pulled = substitute(coefficients, m.homogeneous)
        return abs(pulled[0]) / np.linalg.norm(pulled)

    twist = max(_twists(), key=leading_ratio)
    logger.debug(f"cubic roots solved in a twisted chart (leading ratio {leading_ratio(twist):.3e})")
    pulled = substitute(coefficients, twist.homogeneous)
    return [apply_mobius(twist, ProjPoint(1.0, t)) for t in np.roots(pulled)]


@dataclass(frozen=True, eq=False)
class RelationCubic:
    """g(u, v) = c0 v^3 + 3 c1 v^2 u + 3 c2 v u^2 + c3 u^3 with its distinct roots and multiplicities."""

    coefficients: np.ndarray
    roots: Tuple[ProjPoint, ...]
    multiplicities: Tuple[int, ...]
    raw_roots: Tuple[ProjPoint, ...] = field(default=())
    discriminant: float = 0.0
    hessian: float = 0.0

    def value(self, w: ProjPoint) -> complex:
        return cubic_value(self.coefficients, w)

    def to_json(self) -> dict:
        return {
            "coefficients": [[z.real, z.imag] for z in self.coefficients],
            "roots": [w.to_json() for w in self.roots],
            "multiplicities": list(self.multiplicities),
            "relative_discriminant": self.discriminant,
            "relative_hessian": self.hessian,
        }


def _double_root(h: np.ndarray) -> ProjPoint:
    h0, h1, h2 = h
    if abs(h0) >= abs(h2):
        return ProjPoint(1.0, -h1 / (2 * h0))
    return ProjPoint(-h1 / (2 * h2), 1.0)


def _triple_root(coefficients: np.ndarray) -> ProjPoint:
    a, b, c, d = coefficients
    if abs(a) >= abs(d):
        return ProjPoint(1.0, -b / (3 * a))
    return ProjPoint(-c / (3 * d), 1.0)


def polarize(c: RelationLike, tolerances: Tolerances = DEFAULT_TOLERANCES) -> RelationCubic:
    """
    The cubic g(w) = G(w, w, w) and its roots.

    Multiplicity is decided on coefficient-level invariants, which stay accurate where
    clustering computed roots would not: a relative discriminant above tol_scen means three
    distinct roots. Otherwise the roots are mutually within sqrt(relative Hessian), and a triple
    root needs that spread at or below tol_root. A recovered triple root carries rounding noise
    in its Hessian up to HESSIAN_NOISE, so that is the floor of the test.
    """
    coefficients = cubic_coefficients(c)
    scale = np.linalg.norm(coefficients)
    raw = tuple(cubic_roots(coefficients))
    disc = float(abs(discriminant(coefficients)) / scale**4)
    hess_vector = hessian(coefficients)
    hess = float(np.linalg.norm(hess_vector) / scale**2)

    if disc > tolerances.tol_scen:
        roots, multiplicities = raw, (1, 1, 1)
    elif hess <= max(tolerances.tol_root**2, HESSIAN_NOISE):
        roots, multiplicities = (_triple_root(coefficients),), (3,)
    else:
        double = _double_root(hess_vector)
        simple = max(raw, key=lambda w: proj_distance(w, double))
        roots, multiplicities = (double, simple), (2, 1)
    return RelationCubic(coefficients, roots, multiplicities, raw, disc, hess)


@dataclass(frozen=True, eq=False)
class Scenario:
    """Root pattern of the relation cubic and the Moebius map carrying it to standard form."""

    tag: ScenarioTag
    normalizer: MobiusMap
    cubic: RelationCubic

    def to_json(self) -> dict:
        return {"tag": self.tag.value, "normalizer": self.normalizer.to_json(), "cubic": self.cubic.to_json()}


def _distance_to_identity(m: MobiusMap) -> float:
    return min(np.linalg.norm(m.entries - np.eye(2)), np.linalg.norm(m.entries + np.eye(2)))


def _references(avoid: Sequence[ProjPoint], count: int) -> List[ProjPoint]:
    chosen: List[ProjPoint] = []
    for candidate in _REFERENCE_POOL:
        if all(proj_distance(candidate, w) > 0.1 for w in list(avoid) + chosen):
            chosen.append(candidate)
        if len(chosen) == count:
            return chosen
    raise IndeterminateError("no reference point available for the normalizer")


def classify_scenario(c: RelationLike, tolerances: Tolerances = DEFAULT_TOLERANCES) -> Scenario:
    """
    Tag the relation a), b) or c) and build its normalizer:
    three distinct roots -> (inf, 1, -1); double root -> inf with the simple root -> 1;
    triple root -> 0. Remaining freedom is fixed by reference points so that an already
    standard relation gets the identity.
    """
    cubic = polarize(c, tolerances)
    if cubic.multiplicities == (1, 1, 1):
        targets = (INFINITY, ONE, ProjPoint.from_affine(-1.0))
        candidates = [mobius_from_three_points(*cubic.roots, *order) for order in permutations(targets)]
        normalizer = min(candidates, key=_distance_to_identity)
        tag = ScenarioTag.ThreeDistinct
    elif cubic.multiplicities == (2, 1):
        double, simple = cubic.roots
        (reference,) = _references([double, simple], 1)
        normalizer = mobius_from_three_points(double, simple, reference, INFINITY, ONE, ZERO)
        tag = ScenarioTag.DoubleRoot
    else:
        (triple,) = cubic.roots
        first, second = _references([triple, ZERO], 2)
        normalizer = mobius_from_three_points(triple, first, second, ZERO, first, second)
        tag = ScenarioTag.TripleRoot
    logger.debug(f"relation classified as {tag.value} (disc {cubic.discriminant:.3e}, hessian {cubic.hessian:.3e})")
    return Scenario(tag, normalizer, cubic)


def transport_relation(c: RelationLike, m: MobiusMap) -> RelationVector:
    """The relation satisfied by m-transported triplets: g o m^{-1}, whose roots are m(roots of g)."""
    return relation_from_cubic(substitute(cubic_coefficients(c), m.inverse().homogeneous))


def normalize_relation(c: RelationLike, tolerances: Tolerances = DEFAULT_TOLERANCES) -> Tuple[Scenario, RelationVector]:
    scenario = classify_scenario(c, tolerances)
    return scenario, transport_relation(c, scenario.normalizer)


def plant_root_system(c: RelationLike, rng: np.random.Generator, size: int = 4) -> RootSystem:
    """A synthetic root system whose triplets all satisfy the relation c."""
    relation = _as_relation(c)
    triplets = []
    while len(triplets) < size:
        t1, t2 = random_proj_point(rng), random_proj_point(rng)
        try:
            t3 = complete_triplet(relation, t1, t2)
        except IndeterminateError:
            continue
        triplets.append((t1, t2, t3))
    return RootSystem.from_triplets(triplets)


def is_singular(m: AtiyahMatrix, tolerances: Tolerances = DEFAULT_TOLERANCES) -> bool:
    """Genuine rank collapse needs both a tiny residual and a tiny measure."""
    _, residual = relation_nullvector(m)
    return residual < tolerances.tol_residual and independence_measure(m) < tolerances.tol_measure
