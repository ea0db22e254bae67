"""
Checkers that replay the obstruction arguments on one configuration at a time.

Two families live here. Face circles are spherical: each face of the tetrahedron spans a
hyperbolic plane whose boundary is a circle on the sphere at infinity, written as the cap
plane <p, N> = h. Everything else is planar and works in an affine chart of CP^1: convex
hulls, separating axes, transversal lines, circular domains and derivative roots. A planar
verdict is only meaningful together with its chart, so every section records the one used.
"""

import logging
from dataclasses import dataclass
from itertools import chain, combinations
from typing import Iterator, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import polynomial as P

from atiyah_core import (
    RelationLike,
    RelationVector,
    Scenario,
    classify_scenario,
    independence_measure,
    matrix_from_root_system,
    plant_root_system,
    relation_nullvector,
    sym_elem,
)
from ball_model import N_POINTS, Configuration, coplanarity_test, endpoint_oracle, root_system, theorem_case
from config import DEFAULT_TOLERANCES, Tolerances
from enums import Chart, CheckStatus, DomainKind, FaceForm, RelationSource, ScenarioTag, StabVerdict
from errors import DegenerateFaceError, InvalidInputError, PreconditionError
from riemann_sphere import MobiusMap, ProjPoint, RootSystem, inverse_stereographic, proj_distance
from reports import (
    CertificateReport,
    Check,
    CoplanarAuditSection,
    DomainReport,
    DomainWitnessSection,
    FaceReport,
    HullSection,
    IncidenceSection,
    RelationSection,
    ScenarioCheckSection,
    SignatureSection,
    StabSection,
    check,
    not_applicable,
    overall,
)

logger = logging.getLogger(__name__)

FACES: Tuple[Tuple[int, int, int], ...] = tuple(combinations(range(N_POINTS), 3))
FACE_RANK_TOL = 1e-10
PLANE_FORM_TOL = 1e-9
INTERSECTION_TOL = 1e-7
MARGINAL_FACTOR = 1e3
IDENTITY_TOL = 1e-8
HULL_MARGIN = 1e-9
ORACLE_TOL = 1e-7
PRETWIST_LIMIT = 1e6
STAB_RESOLUTION = 4096
STAB_REFINEMENTS = 2
ENCLOSE_SLACK = 1e-14
NORTH = np.array([0.0, 0.0, 1.0])

Triplet = Tuple[Optional[complex], ...]


def _complex_json(z: Optional[complex]) -> Optional[List[float]]:
    return None if z is None else [float(z.real), float(z.imag)]


def _ideal_coords(rs: RootSystem, i: int, j: int) -> np.ndarray:
    if rs.ideal is not None:
        return rs.ideal[i][j].coords
    return inverse_stereographic(rs.root(i, j)).coords


# ---------------------------------------------------------------------------
# face circles


@dataclass(frozen=True, eq=False)
class FaceCircle:
    """
    Boundary circle of a face plane, as the cap plane <p, N> = h with (N, h) a unit vector.

    h != 0 is the sphere form: center N/h, orthogonal to the unit sphere. h = 0 is the plane
    form through the origin. chart holds (alpha, b1, b2, delta) of the circle
    alpha |v|^2 + 2 b1 Re(v conj u) + 2 b2 Im(v conj u) + delta |u|^2 = 0, fitted through
    three face roots independently of (N, h).
    """

    face: Tuple[int, int, int]
    normal: np.ndarray
    offset: float
    chart: np.ndarray
    radius: Optional[float]
    agreement: float

    @property
    def form(self) -> FaceForm:
        return FaceForm.Plane if abs(self.offset) <= PLANE_FORM_TOL else FaceForm.Sphere

    @property
    def center(self) -> Optional[np.ndarray]:
        return None if self.form is FaceForm.Plane else self.normal / self.offset

    def side_value(self, x: np.ndarray) -> float:
        """h (1 + |x|^2) - 2 <x, N>: zero on the face plane, its sign tells the side."""
        return float(self.offset * (1.0 + x @ x) - 2.0 * (x @ self.normal))

    def plane_distance(self, p: np.ndarray) -> float:
        """Euclidean distance from a point of the unit sphere to the cap plane."""
        return float(abs(p @ self.normal - self.offset) / np.linalg.norm(self.normal))

    def chart_value(self, w: ProjPoint) -> float:
        alpha, b1, b2, delta = self.chart
        vu = w.v * w.u.conjugate()
        return float(alpha * abs(w.v) ** 2 + 2 * b1 * vu.real + 2 * b2 * vu.imag + delta * abs(w.u) ** 2)

    def derived_chart(self) -> np.ndarray:
        """The chart circle implied by the cap plane; proportional to chart when both are right."""
        n1, n2, n3 = self.normal
        derived = np.array([n3 - self.offset, n1, n2, -n3 - self.offset])
        return derived / np.linalg.norm(derived)


def _chart_row(w: ProjPoint) -> List[float]:
    vu = w.v * w.u.conjugate()
    return [abs(w.v) ** 2, 2 * vu.real, 2 * vu.imag, abs(w.u) ** 2]


def face_circle(
    config: Configuration,
    face: Sequence[int],
    tolerances: Tolerances = DEFAULT_TOLERANCES,
    rs: Optional[RootSystem] = None,
) -> FaceCircle:
    """Circle at infinity of the face through the points with (0-based) indices face."""
    face = tuple(sorted(face))
    if len(face) != 3 or len(set(face)) != 3 or not all(0 <= k < N_POINTS for k in face):
        raise InvalidInputError(f"a face is three distinct point indices, got {face!r}")
    rs = rs or root_system(config)
    points = [config.points[k].coords for k in face]
    # 2 <x, N> - h (1 + |x|^2) = 0 for the three points
    rows = np.array([[*(2.0 * x), -(1.0 + x @ x)] for x in points])
    _, singular, vt = np.linalg.svd(rows)
    if singular[2] < FACE_RANK_TOL * singular[0]:
        raise DegenerateFaceError(f"points {[k + 1 for k in face]} lie on one geodesic")
    null = vt[-1]
    if null[3] < 0 or (abs(null[3]) <= PLANE_FORM_TOL and null[np.argmax(np.abs(null[:3]))] < 0):
        null = -null
    normal, offset = null[:3], float(null[3])

    radius = None
    if abs(offset) > PLANE_FORM_TOL:
        center = normal / offset
        radius = float(np.mean([np.linalg.norm(x - center) for x in points]))

    i, j, k = face
    cycle = [rs.root(i, j), rs.root(j, k), rs.root(k, i)]
    _, _, chart_vt = np.linalg.svd(np.array([_chart_row(w) for w in cycle]))
    chart = chart_vt[-1]

    circle = FaceCircle(face, normal, offset, chart, radius, 0.0)
    derived = circle.derived_chart()
    # both are unit vectors, defined up to sign
    chart_gap = min(np.linalg.norm(derived - chart), np.linalg.norm(derived + chart))
    agreement = max(
        chart_gap,
        *(
            max(circle.plane_distance(_ideal_coords(rs, a, b)), abs(circle.chart_value(rs.root(a, b))))
            for a in face
            for b in face
            if a != b
        ),
    )
    if agreement > tolerances.tol_incidence:
        logger.warning(f"face {[k + 1 for k in face]}: sphere and chart forms disagree by {agreement:.3e}")
    return FaceCircle(face, normal, offset, chart, radius, float(agreement))


def circle_intersections(first: FaceCircle, second: FaceCircle) -> Tuple[np.ndarray, np.ndarray]:
    """The two points where the cap planes of two face circles cut the unit sphere."""
    direction = np.cross(first.normal, second.normal)
    system = np.vstack([first.normal, second.normal, direction])
    base = np.linalg.solve(system, np.array([first.offset, second.offset, 0.0]))
    a = direction @ direction
    b = 2.0 * base @ direction
    c = base @ base - 1.0
    disc = b * b - 4.0 * a * c
    if disc < 0:
        logger.debug(f"face circles {first.face} and {second.face} are tangent or apart (disc {disc:.3e})")
        disc = 0.0
    root = np.sqrt(disc)
    return base + (-b + root) / (2 * a) * direction, base + (-b - root) / (2 * a) * direction


def _opposite(face: Tuple[int, ...]) -> int:
    (vertex,) = set(range(N_POINTS)) - set(face)
    return vertex


def _face_report(config: Configuration, circle: FaceCircle, rs: RootSystem, tol: float) -> FaceReport:
    vertex = _opposite(circle.face)
    vertex_sign = np.sign(circle.side_value(config.points[vertex].coords))
    scale = np.linalg.norm(circle.normal)

    counts = []
    for m in range(N_POINTS):
        vertex_side = on = far = 0
        for j in range(N_POINTS):
            if j == m:
                continue
            s = circle.offset - _ideal_coords(rs, m, j) @ circle.normal
            if abs(s) / scale <= tol:
                on += 1
            elif np.sign(s) == vertex_sign:
                vertex_side += 1
            else:
                far += 1
        counts.append([vertex_side, on, far])

    expected = [[0, 0, 3] if m == vertex else [1, 2, 0] for m in range(N_POINTS)]
    north = circle.offset - NORTH @ circle.normal
    if abs(north) / scale <= tol:
        bit = 0
    else:
        bit = -1 if np.sign(north) == vertex_sign else 1

    center = circle.center
    return FaceReport(
        face=[k + 1 for k in circle.face],
        opposite=vertex + 1,
        form=circle.form,
        normal=[float(x) for x in circle.normal],
        offset=circle.offset,
        center=None if center is None else [float(x) for x in center],
        radius=circle.radius,
        orientation_bit=bit,
        side_counts=counts,
        pattern_ok=counts == expected,
    )


def incidence_audit(
    config: Configuration, tolerances: Tolerances = DEFAULT_TOLERANCES, rs: Optional[RootSystem] = None
) -> IncidenceSection:
    """
    Each t_ij lies on exactly the two face circles through the edge {i, j}, any two circles
    meet exactly in the two roots of their common edge, and every circle splits the triplets
    three against one. Failures are recorded, never raised.
    """
    coplanar, residual = coplanarity_test(config, tolerances.tol_cop)
    if coplanar:
        return IncidenceSection(
            status=CheckStatus.NotApplicable,
            reason=f"coplanar configuration (residual {residual:.3e}): the four face circles coincide",
        )
    rs = rs or root_system(config)
    tol = tolerances.tol_incidence
    circles = [face_circle(config, face, tolerances, rs) for face in FACES]

    worst_on, worst_off, marginal = 0.0, np.inf, []
    for i, j, _ in rs.items():
        for circle in circles:
            distance = circle.plane_distance(_ideal_coords(rs, i, j))
            if i in circle.face and j in circle.face:
                worst_on = max(worst_on, distance)
            else:
                worst_off = min(worst_off, distance)
                if distance <= MARGINAL_FACTOR * tol:
                    marginal.append(
                        f"t{i + 1}{j + 1} is {distance:.3e} from face {[k + 1 for k in circle.face]}"
                    )

    worst_meet = 0.0
    for first, second in combinations(circles, 2):
        a, b = sorted(set(first.face) & set(second.face))
        hit0, hit1 = circle_intersections(first, second)
        e0, e1 = _ideal_coords(rs, a, b), _ideal_coords(rs, b, a)
        miss = min(
            max(np.linalg.norm(hit0 - e0), np.linalg.norm(hit1 - e1)),
            max(np.linalg.norm(hit0 - e1), np.linalg.norm(hit1 - e0)),
        )
        worst_meet = max(worst_meet, float(miss))

    faces = [_face_report(config, circle, rs, tol) for circle in circles]
    agreement = max(circle.agreement for circle in circles)
    checks = [
        check("roots_on_own_circles", worst_on <= tol, worst_on),
        check("roots_off_other_circles", worst_off > tol, worst_off),
        check("chart_form_agreement", agreement <= tol, agreement),
        check("pairwise_intersections", worst_meet <= INTERSECTION_TOL, worst_meet),
        check("side_count_pattern", all(f.pattern_ok for f in faces)),
    ]
    if marginal:
        logger.info(f"incidence audit: {len(marginal)} marginal incidences")
    return IncidenceSection(status=overall(checks), faces=faces, checks=checks, marginal=marginal)


# ---------------------------------------------------------------------------
# planar hulls


def _cross(a: complex, b: complex) -> float:
    return a.real * b.imag - a.imag * b.real


def _segment_distance(z: complex, a: complex, b: complex) -> float:
    span = b - a
    length2 = abs(span) ** 2
    if length2 == 0:
        return abs(z - a)
    t = min(1.0, max(0.0, ((z - a) * span.conjugate()).real / length2))
    return abs(z - (a + t * span))


@dataclass(frozen=True, eq=False)
class Polygon:
    """Closed convex polygon, vertices counter-clockwise; one vertex is a point and two a segment."""

    vertices: Tuple[complex, ...]

    @property
    def is_degenerate(self) -> bool:
        return len(self.vertices) < 3

    def edges(self) -> List[Tuple[complex, complex]]:
        v = self.vertices
        if len(v) == 1:
            return []
        if len(v) == 2:
            return [(v[0], v[1])]
        return [(v[k], v[(k + 1) % len(v)]) for k in range(len(v))]

    def project(self, direction: complex) -> Tuple[float, float]:
        dots = [(z * direction.conjugate()).real for z in self.vertices]
        return min(dots), max(dots)

    def signed_distance(self, z: complex) -> float:
        """Distance to the polygon, negated inside a polygon with area."""
        z = complex(z)
        if len(self.vertices) == 1:
            return abs(z - self.vertices[0])
        distance = min(_segment_distance(z, a, b) for a, b in self.edges())
        if self.is_degenerate:
            return distance
        inside = all(_cross(b - a, z - a) >= 0 for a, b in self.edges())
        return -distance if inside else distance

    def contains(self, z: complex, tol: float = DEFAULT_TOLERANCES.tol_geo) -> bool:
        return self.signed_distance(z) <= tol


def convex_hull(points: Sequence[complex]) -> Polygon:
    """Andrew's monotone chain; collinear input gives the segment between its extremes."""
    values = [complex(z) for z in points]
    if not values:
        raise InvalidInputError("the convex hull of nothing is undefined")
    if not all(np.isfinite(z) for z in values):
        raise InvalidInputError("hull points must be finite; roots at infinity need a chart change")
    ordered = sorted(set(values), key=lambda z: (z.real, z.imag))
    if len(ordered) <= 2:
        return Polygon(tuple(ordered))

    def half(sequence):
        chain_: List[complex] = []
        for z in sequence:
            while len(chain_) >= 2 and _cross(chain_[-1] - chain_[-2], z - chain_[-2]) <= 0:
                chain_.pop()
            chain_.append(z)
        return chain_

    lower, upper = half(ordered), half(reversed(ordered))
    return Polygon(tuple(lower[:-1] + upper[:-1]))


class Separation(NamedTuple):
    axis: complex
    near: float
    far: float


def _candidate_axes(first: Polygon, second: Polygon) -> Iterator[complex]:
    for polygon in (first, second):
        for a, b in polygon.edges():
            if b != a:
                yield (b - a) * 1j
                yield b - a
    for a in first.vertices:
        for b in second.vertices:
            if b != a:
                yield b - a


def separating_axis(first: Polygon, second: Polygon, tol: float = DEFAULT_TOLERANCES.tol_geo) -> Optional[Separation]:
    """Unit axis with max(first) + tol < min(second) along it, or None for overlapping hulls."""
    for axis in _candidate_axes(first, second):
        n = axis / abs(axis)
        lo1, hi1 = first.project(n)
        lo2, hi2 = second.project(n)
        if hi1 + tol < lo2:
            return Separation(n, hi1, lo2)
        if hi2 + tol < lo1:
            return Separation(-n, -lo1, -hi2)
    return None


def hulls_disjoint(first: Polygon, second: Polygon, tol: float = DEFAULT_TOLERANCES.tol_geo) -> bool:
    """Closed hulls: touching counts as intersecting."""
    return separating_axis(first, second, tol) is not None


@dataclass(frozen=True)
class StabResult:
    """A line {z : Re(z exp(-i angle)) = offset} meeting every hull, or the best gap found."""

    verdict: StabVerdict
    angle: Optional[float]
    offset: Optional[float]
    gap: float
    verified: bool

    def to_section(self) -> StabSection:
        return StabSection(
            verdict=self.verdict, angle=self.angle, offset=self.offset, gap=self.gap, verified=self.verified
        )


def line_meets_hull(hull: Polygon, angle: float, offset: float, tol: float = DEFAULT_TOLERANCES.tol_geo) -> bool:
    lo, hi = hull.project(np.exp(1j * angle))
    return lo - tol <= offset <= hi + tol


def _stab_gaps(hulls: Sequence[Polygon], angles: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    rotation = np.exp(-1j * angles)[:, None]
    lows, highs = [], []
    for hull in hulls:
        dots = (np.array(hull.vertices)[None, :] * rotation).real
        lows.append(dots.min(axis=1))
        highs.append(dots.max(axis=1))
    lo, hi = np.max(lows, axis=0), np.min(highs, axis=0)
    return lo - hi, lo, hi


def line_stabs_all(
    hulls: Sequence[Polygon],
    tol: float = DEFAULT_TOLERANCES.tol_geo,
    resolution: int = STAB_RESOLUTION,
    refinements: int = STAB_REFINEMENTS,
) -> StabResult:
    """
    Sweep line directions for a common transversal.

    For a fixed normal direction a line meets every hull iff max(lo_k) <= min(hi_k) over the
    projection intervals, so the sweep minimizes that gap over a grid and refines around the best
    direction. A miss is reported as none-within-resolution, never as a proof of absence.
    """
    if not hulls:
        raise InvalidInputError("line stabbing needs at least one hull")
    angles = np.linspace(0.0, np.pi, resolution, endpoint=False)
    gaps, _, _ = _stab_gaps(hulls, angles)
    angle = float(angles[np.argmin(gaps)])
    step = np.pi / resolution
    for _ in range(refinements):
        local = angle + np.linspace(-step, step, 65)
        local_gaps, _, _ = _stab_gaps(hulls, local)
        angle = float(local[np.argmin(local_gaps)])
        step /= 32.0
    angle = float(np.mod(angle, np.pi))
    gap, lo, hi = (float(x[0]) for x in _stab_gaps(hulls, np.array([angle])))

    if gap > tol:
        return StabResult(StabVerdict.NoneWithinResolution, None, None, gap, False)
    offset = 0.5 * (lo + hi)
    verified = all(line_meets_hull(hull, angle, offset, tol) for hull in hulls)
    if not verified:
        logger.warning(f"transversal witness at angle {angle:.6f} failed re-verification")
    return StabResult(StabVerdict.WitnessFound, angle, offset, gap, verified)


# ---------------------------------------------------------------------------
# circular domains


@dataclass(frozen=True)
class CircularDomain:
    """
    A closed circular domain of the extended plane.

    Half-planes are {z : Re(z conj(normal)) <= offset}. The point at infinity (None) belongs to
    half-planes, disk complements and the plane, never to disks or points.
    """

    kind: DomainKind
    center: complex = 0j
    radius: float = 0.0
    normal: complex = 1 + 0j
    offset: float = 0.0

    @classmethod
    def disk(cls, center: complex, radius: float) -> "CircularDomain":
        return cls(DomainKind.Disk, center=complex(center), radius=float(radius))

    @classmethod
    def half_plane(cls, normal: complex, offset: float) -> "CircularDomain":
        normal = complex(normal)
        if normal == 0:
            raise InvalidInputError("a half-plane needs a non-zero normal")
        scale = abs(normal)
        return cls(DomainKind.HalfPlane, normal=normal / scale, offset=float(offset) / scale)

    @classmethod
    def complement(cls, center: complex, radius: float) -> "CircularDomain":
        return cls(DomainKind.DiskComplement, center=complex(center), radius=float(radius))

    @classmethod
    def plane(cls) -> "CircularDomain":
        return cls(DomainKind.Plane)

    @classmethod
    def point(cls, z: complex) -> "CircularDomain":
        return cls(DomainKind.Point, center=complex(z))

    def contains(self, z: Optional[complex], tol: float = DEFAULT_TOLERANCES.tol_geo) -> bool:
        if z is None:
            return self.kind in (DomainKind.HalfPlane, DomainKind.DiskComplement, DomainKind.Plane)
        if self.kind is DomainKind.Disk:
            return abs(z - self.center) <= self.radius + tol
        if self.kind is DomainKind.HalfPlane:
            return (z * self.normal.conjugate()).real <= self.offset + tol
        if self.kind is DomainKind.DiskComplement:
            return abs(z - self.center) >= self.radius - tol
        if self.kind is DomainKind.Point:
            return abs(z - self.center) <= tol
        return True

    def to_report(self) -> DomainReport:
        if self.kind is DomainKind.HalfPlane:
            return DomainReport(kind=self.kind, normal=_complex_json(self.normal), offset=self.offset)
        if self.kind is DomainKind.Plane:
            return DomainReport(kind=self.kind)
        radius = None if self.kind is DomainKind.Point else self.radius
        return DomainReport(kind=self.kind, center=_complex_json(self.center), radius=radius)


def domains_disjoint(first: CircularDomain, second: CircularDomain, tol: float = DEFAULT_TOLERANCES.tol_geo) -> bool:
    if DomainKind.Plane in (first.kind, second.kind):
        return False
    if first.kind is DomainKind.Point:
        return not second.contains(first.center, tol)
    if second.kind is DomainKind.Point:
        return not first.contains(second.center, tol)
    if first.kind is not DomainKind.Disk and second.kind is not DomainKind.Disk:
        # both contain infinity
        return False
    disk, other = (first, second) if first.kind is DomainKind.Disk else (second, first)
    if other.kind is DomainKind.Disk:
        return abs(disk.center - other.center) > disk.radius + other.radius + tol
    if other.kind is DomainKind.HalfPlane:
        return (disk.center * other.normal.conjugate()).real - disk.radius > other.offset + tol
    return abs(disk.center - other.center) + disk.radius < other.radius - tol


def _covers(disk: Tuple[complex, float], z: complex) -> bool:
    center, radius = disk
    return abs(z - center) <= radius + ENCLOSE_SLACK * max(1.0, radius)


def _diameter(a: complex, b: complex) -> Tuple[complex, float]:
    center = 0.5 * (a + b)
    return center, max(abs(center - a), abs(center - b))


def _circumcircle(a: complex, b: complex, c: complex) -> Optional[Tuple[complex, float]]:
    ab, ac = b - a, c - a
    cross = _cross(ab, ac)
    if cross == 0:
        return None
    center = a + (abs(ab) ** 2 * ac - abs(ac) ** 2 * ab) / (2j * cross)
    return center, max(abs(center - a), abs(center - b), abs(center - c))


def _disk_two_points(points: Sequence[complex], p: complex, q: complex) -> Tuple[complex, float]:
    circle = _diameter(p, q)
    left = right = None
    for r in points:
        if _covers(circle, r):
            continue
        side = _cross(q - p, r - p)
        candidate = _circumcircle(p, q, r)
        if candidate is None:
            continue
        reach = _cross(q - p, candidate[0] - p)
        if side > 0 and (left is None or reach > _cross(q - p, left[0] - p)):
            left = candidate
        elif side < 0 and (right is None or reach < _cross(q - p, right[0] - p)):
            right = candidate
    if left is None and right is None:
        return circle
    if left is None:
        return right
    if right is None:
        return left
    return left if left[1] <= right[1] else right


def _disk_one_point(points: Sequence[complex], p: complex) -> Tuple[complex, float]:
    circle = (p, 0.0)
    for i, q in enumerate(points):
        if not _covers(circle, q):
            circle = _diameter(p, q) if circle[1] == 0.0 else _disk_two_points(points[: i + 1], p, q)
    return circle


def smallest_enclosing_disk(points: Sequence[complex]) -> CircularDomain:
    """Welzl's incremental minimal disk, in input order so the result is reproducible."""
    values = [complex(z) for z in points]
    if not values:
        raise InvalidInputError("the enclosing disk of nothing is undefined")
    circle = None
    for i, p in enumerate(values):
        if circle is None or not _covers(circle, p):
            circle = _disk_one_point(values[: i + 1], p)
    return CircularDomain.disk(*circle)


@dataclass(frozen=True)
class DomainWitness:
    triplets: Tuple[int, int, int]
    domains: Tuple[CircularDomain, CircularDomain, CircularDomain]

    def to_section(self, verified: bool) -> DomainWitnessSection:
        return DomainWitnessSection(
            found=True,
            triplets=[k + 1 for k in self.triplets],
            domains=[d.to_report() for d in self.domains],
            verified=verified,
        )


def _finite(triplet: Triplet) -> List[complex]:
    return [z for z in triplet if z is not None]


def _disk_witnesses(triplets: Sequence[Triplet], tol: float) -> Iterator[DomainWitness]:
    disks = {k: smallest_enclosing_disk(t) for k, t in enumerate(triplets) if None not in t}
    for combo in combinations(sorted(disks), 3):
        domains = tuple(disks[k] for k in combo)
        if all(domains_disjoint(a, b, tol) for a, b in combinations(domains, 2)):
            yield DomainWitness(combo, domains)


def _half_plane_witnesses(triplets: Sequence[Triplet], tol: float) -> Iterator[DomainWitness]:
    """One triplet in a half-plane, the other two in their minimal disks."""
    for combo in combinations(range(len(triplets)), 3):
        for lone in combo:
            rest = [k for k in combo if k != lone]
            points = _finite(triplets[lone])
            if not points or any(None in triplets[k] for k in rest):
                continue
            disks = [smallest_enclosing_disk(triplets[k]) for k in rest]
            if not domains_disjoint(*disks, tol):
                continue
            hull = convex_hull(points)
            anchor = sum(points) / len(points)
            axes = [d.center - z for d in disks for z in points] + [d.center - anchor for d in disks]
            axes += [(b - a) * 1j for a, b in hull.edges()] + [(a - b) * 1j for a, b in hull.edges()]
            for axis in axes:
                if axis == 0:
                    continue
                n = axis / abs(axis)
                _, near = hull.project(n)
                far = min((d.center * n.conjugate()).real - d.radius for d in disks)
                if far - near > 2 * tol:
                    half = CircularDomain.half_plane(n, 0.5 * (near + far))
                    domains = {lone: half, rest[0]: disks[0], rest[1]: disks[1]}
                    yield DomainWitness(combo, tuple(domains[k] for k in combo))
                    break


def _invert_disk(disk: CircularDomain, origin: complex) -> CircularDomain:
    """Image of a disk of the chart w = 1/(z - origin), back in the z chart."""
    c, r = disk.center, disk.radius
    power = abs(c) ** 2 - r * r
    if abs(power) <= 1e-12 * max(abs(c) ** 2, 1e-300):
        # boundary through w = 0: a line in z
        normal = -c.conjugate() / abs(c)
        return CircularDomain.half_plane(normal, -0.5 / abs(c) + (origin * normal.conjugate()).real)
    center = origin + c.conjugate() / power
    if power > 0:
        return CircularDomain.disk(center, r / power)
    return CircularDomain.complement(center, r / -power)


def _inverted_witnesses(triplets: Sequence[Triplet], tol: float) -> Iterator[DomainWitness]:
    finite = [z for t in triplets for z in _finite(t)]
    scale = max([1.0] + [abs(z) for z in finite])
    origins = [sum(_finite(t)) / len(_finite(t)) for t in triplets if _finite(t)] + [0j]
    for origin in origins:
        if any(abs(z - origin) <= 1e-6 * scale for z in finite):
            continue
        inverted = [tuple(0j if z is None else 1.0 / (z - origin) for z in t) for t in triplets]
        for witness in _disk_witnesses(inverted, tol):
            yield DomainWitness(witness.triplets, tuple(_invert_disk(d, origin) for d in witness.domains))


def verify_domains(triplets: Sequence[Triplet], witness: DomainWitness, tol: float) -> bool:
    members = all(
        domain.contains(z, tol) for k, domain in zip(witness.triplets, witness.domains) for z in triplets[k]
    )
    apart = all(domains_disjoint(a, b, tol) for a, b in combinations(witness.domains, 2))
    return members and apart


def three_disjoint_domains(
    triplets: Sequence[Triplet], tol: float = DEFAULT_TOLERANCES.tol_geo
) -> Optional[DomainWitness]:
    """
    Three pairwise disjoint closed circular domains, each holding a different triplet.

    Minimal disks are tried first, then one half-plane against two disks, then minimal disks
    in inverted charts mapped back (the only source of disk complements). Every candidate
    passes a membership and disjointness re-check before it is returned. None is not a proof
    that no witness exists.
    """
    candidates = chain(
        _disk_witnesses(triplets, tol), _half_plane_witnesses(triplets, tol), _inverted_witnesses(triplets, tol)
    )
    for witness in candidates:
        if verify_domains(triplets, witness, tol):
            return witness
    return None


def derivative_roots(roots: Sequence[complex]) -> List[complex]:
    """
    Roots of P' for P = prod (t - r).

    Exactly repeated roots are factored out first: with multiplicities m_k,
    P' = prod (t - r_k)^(m_k - 1) * sum_k m_k prod_{j != k} (t - r_j).
    """
    values = [complex(z) for z in roots]
    distinct = list(dict.fromkeys(values))
    multiplicity = [values.count(r) for r in distinct]
    repeated = [r for r, m in zip(distinct, multiplicity) for _ in range(m - 1)]
    q = np.zeros(1, dtype=complex)
    for k, m in enumerate(multiplicity):
        others = distinct[:k] + distinct[k + 1 :]
        q = P.polyadd(q, m * (P.polyfromroots(others) if others else np.ones(1)))
    q = np.trim_zeros(q, "b")
    if len(q) <= 1:
        return repeated
    return repeated + list(np.roots(q[::-1]))


def gauss_lucas_check(roots: Sequence[complex], tol: float = DEFAULT_TOLERANCES.tol_geo) -> Tuple[bool, float]:
    """Signed distance of the worst derivative root to the hull of the roots; negative is inside."""
    if len(roots) < 2:
        raise PreconditionError("Gauss-Lucas needs at least two roots")
    hull = convex_hull(roots)
    critical = derivative_roots(roots)
    margin = max(hull.signed_distance(z) for z in critical)
    return bool(margin <= tol), float(margin)


def geometric_mean_witness(
    z: Sequence[complex], domain: CircularDomain, tol: float = DEFAULT_TOLERANCES.tol_geo
) -> Optional[complex]:
    """An n-th root of z_1 ... z_n lying in the closed disk or half-plane holding every z_k."""
    if domain.kind not in (DomainKind.Disk, DomainKind.HalfPlane):
        raise InvalidInputError(f"geometric mean witness needs a disk or half-plane, got {domain.kind.value}")
    values = [complex(x) for x in z]
    if not values:
        raise PreconditionError("geometric mean of nothing")
    slack = tol * max([1.0] + [abs(x) for x in values])
    if not all(domain.contains(x, slack) for x in values):
        raise PreconditionError("every point must lie in the domain")
    n = len(values)
    product = np.prod(values)
    modulus = abs(product) ** (1.0 / n)
    base = np.angle(product) / n
    for k in range(n):
        candidate = modulus * np.exp(1j * (base + 2 * np.pi * k / n))
        if domain.contains(candidate, slack):
            return complex(candidate)
    return None


# ---------------------------------------------------------------------------
# charts


@dataclass(frozen=True, eq=False)
class ChartedTriplets:
    """The four triplets as affine values (None at infinity) after applying mobius to the roots."""

    chart: Chart
    triplets: Tuple[Triplet, ...]
    mobius: Optional[MobiusMap] = None

    def finite(self) -> List[Tuple[int, Tuple[complex, ...]]]:
        return [(k, t) for k, t in enumerate(self.triplets) if None not in t]


def _affine(w: ProjPoint, tol: float) -> Optional[complex]:
    return None if w.is_infinite(tol) else complex(w.affine)


def chart_triplets(rs: RootSystem, chart: Chart, mobius: Optional[MobiusMap], tol: float) -> ChartedTriplets:
    moved = rs if mobius is None else rs.transported(mobius)
    triplets = tuple(tuple(_affine(w, tol) for w in t) for t in moved.triplets())
    return ChartedTriplets(chart, triplets, mobius)


def pretwist(rs: RootSystem) -> MobiusMap:
    """t -> 1/(t - a), with a kept as far from every root as a fixed candidate set allows."""
    roots = [w for _, _, w in rs.items()]
    candidates = [0j] + [rho * np.exp(2j * np.pi * k / 12) for rho in (0.5, 1.0, 2.0) for k in range(12)]
    a = max(candidates, key=lambda z: min(proj_distance(ProjPoint.from_affine(z), w) for w in roots))
    return MobiusMap(np.array([[0.0, 1.0], [1.0, -a]]))


def exploration_chart(rs: RootSystem, tolerances: Tolerances = DEFAULT_TOLERANCES) -> ChartedTriplets:
    """Raw stereographic chart, pre-twisted when a root sits at or near infinity."""
    raw = chart_triplets(rs, Chart.Stereographic, None, tolerances.tol_proj)
    if all(z is not None and abs(z) <= PRETWIST_LIMIT for t in raw.triplets for z in t):
        return raw
    twist = pretwist(rs)
    logger.debug(f"pre-twisting the exploration chart by {twist.to_json()}")
    return chart_triplets(rs, Chart.PreTwisted, twist, tolerances.tol_proj)


def _disjoint_pairs(charted: ChartedTriplets, tol: float) -> List[List[int]]:
    hulls = {k: convex_hull(t) for k, t in charted.finite()}
    return [[a + 1, b + 1] for a, b in combinations(sorted(hulls), 2) if hulls_disjoint(hulls[a], hulls[b], tol)]


def hull_section(rs: RootSystem, tolerances: Tolerances = DEFAULT_TOLERANCES) -> HullSection:
    charted = exploration_chart(rs, tolerances)
    finite = charted.finite()
    hulls = [convex_hull(t) for _, t in finite]
    witness = three_disjoint_domains(charted.triplets, tolerances.tol_geo)
    return HullSection(
        chart=charted.chart,
        pretwist=None if charted.mobius is None else charted.mobius.to_json(),
        excluded_triplets=[k + 1 for k, t in enumerate(charted.triplets) if None in t],
        disjoint_pairs=_disjoint_pairs(charted, tolerances.tol_geo),
        transversal=line_stabs_all(hulls, tolerances.tol_geo).to_section() if hulls else None,
        domains=DomainWitnessSection(found=False) if witness is None else witness.to_section(True),
    )


# ---------------------------------------------------------------------------
# type signature and coplanar audit


def _any_three_disjoint_disks(charted: ChartedTriplets, tol: float) -> bool:
    return next(_disk_witnesses(charted.triplets, tol), None) is not None


def type_signature(
    config: Configuration, tolerances: Tolerances = DEFAULT_TOLERANCES, rs: Optional[RootSystem] = None
) -> SignatureSection:
    """
    Provisional four-way type of a non-coplanar configuration.

    The count table is chart-free. The orientation bits and the class depend on which point of
    the sphere is infinity: k = number of vertex caps holding infinity (always 1, 2 or 3),
    A for odd k and B for k = 2; suffix 1 when three triplets have pairwise disjoint minimal
    disks in the stereographic chart, 2 otherwise.
    """
    coplanar, residual = coplanarity_test(config, tolerances.tol_cop)
    if coplanar:
        return SignatureSection(
            status=CheckStatus.NotApplicable, reason=f"coplanar configuration (residual {residual:.3e})"
        )
    rs = rs or root_system(config)
    faces = [_face_report(config, face_circle(config, f, tolerances, rs), rs, tolerances.tol_incidence) for f in FACES]
    bits = sorted(f.orientation_bit for f in faces)
    table = sorted(sorted(f.side_counts) for f in faces)
    raw = chart_triplets(rs, Chart.Stereographic, None, tolerances.tol_proj)
    disjoint = _any_three_disjoint_disks(raw, tolerances.tol_geo)

    if 0 in bits:
        return SignatureSection(
            status=CheckStatus.Pass,
            reason="a face circle passes through infinity; class left open in this chart",
            orientation_bits=bits,
            count_table=table,
            disks_disjoint=disjoint,
        )
    k = bits.count(-1)
    name = ("A" if k % 2 else "B") + ("1" if disjoint else "2")
    return SignatureSection(
        status=CheckStatus.Pass,
        orientation_bits=bits,
        caps_containing_infinity=k,
        count_table=table,
        disks_disjoint=disjoint,
        class_name=name,
    )


def coplanar_audit(
    config: Configuration, tolerances: Tolerances = DEFAULT_TOLERANCES, rs: Optional[RootSystem] = None
) -> CoplanarAuditSection:
    """All twelve roots on the one circle of the common plane, plus the hull picture of the triplets."""
    coplanar, residual = coplanarity_test(config, tolerances.tol_cop)
    if not coplanar:
        return CoplanarAuditSection(
            status=CheckStatus.NotApplicable,
            reason=f"non-coplanar configuration (residual {residual:.3e}): see the incidence audit",
        )
    rs = rs or root_system(config)
    rows = np.array([[*(2.0 * x), -(1.0 + x @ x)] for x in config.coords])
    null = np.linalg.svd(rows)[2][-1]
    normal, offset = null[:3], null[3]
    worst = max(
        float(abs(_ideal_coords(rs, i, j) @ normal - offset) / np.linalg.norm(normal)) for i, j, _ in rs.items()
    )
    charted = exploration_chart(rs, tolerances)
    checks = [check("all_roots_on_common_circle", worst <= tolerances.tol_incidence, worst)]
    return CoplanarAuditSection(
        status=overall(checks),
        checks=checks,
        chart=charted.chart,
        disjoint_pairs=_disjoint_pairs(charted, tolerances.tol_geo),
    )


# ---------------------------------------------------------------------------
# scenario checkers


def _relative(a: complex, b: complex) -> float:
    scale = abs(a) + abs(b)
    return 0.0 if scale == 0 else float(abs(a - b) / scale)


def _normalized(c: RelationLike, rs: RootSystem, tag: ScenarioTag, tolerances: Tolerances):
    scenario = classify_scenario(c, tolerances)
    if scenario.tag is not tag:
        raise PreconditionError(f"checker for {tag.value} called on a {scenario.tag.value} relation")
    normalized = rs.transported(scenario.normalizer)
    charted = chart_triplets(rs, Chart.Normalized, scenario.normalizer, tolerances.tol_proj)
    return scenario, normalized, charted


def scenario_a_checker(
    c: RelationLike, rs: RootSystem, tolerances: Tolerances = DEFAULT_TOLERANCES
) -> ScenarioCheckSection:
    """
    Three distinct roots, normalized so that s2 = 3 on every triplet.

    Then P'(t) = 3 (t^2 - (2/3) s1 t + 1), so its roots r1 r2 = 1 lie in the triplet hull and the
    segment between them crosses the real axis: the real line stabs every hull, and a circular
    domain holding a triplet must hold 1 or -1.
    """
    _, normalized, charted = _normalized(c, rs, ScenarioTag.ThreeDistinct, tolerances)
    tol = tolerances.tol_geo
    checks: List[Check] = []
    identities = True
    for index, (triplet, values) in enumerate(zip(normalized.triplets(), charted.triplets), start=1):
        s0, _, s2, _ = sym_elem(*triplet)
        identity = _relative(s2, 3 * s0)
        identities &= identity <= IDENTITY_TOL
        checks.append(check(f"triplet_{index}_s2_equals_3", identity <= IDENTITY_TOL, identity))
        if None in values:
            checks.append(not_applicable(f"triplet_{index}_derivative_roots", "a root lies at infinity in this chart"))
            continue
        r1, r2 = np.roots([1.0, -2.0 * sum(values) / 3.0, 1.0])
        hull = convex_hull(values)
        product = abs(r1 * r2 - 1.0)
        margin = max(hull.signed_distance(r1), hull.signed_distance(r2))
        crossing = float(r1.imag * r2.imag)
        checks.append(check(f"triplet_{index}_r1r2_equals_1", product <= 1e-10, product))
        checks.append(check(f"triplet_{index}_roots_in_hull", margin <= HULL_MARGIN, margin))
        checks.append(check(f"triplet_{index}_segment_meets_real_axis", crossing <= tol, crossing))

    hulls = [convex_hull(t) for _, t in charted.finite()]
    transversal = line_stabs_all(hulls, tol) if hulls else None
    if hulls:
        real_line = all(line_meets_hull(h, np.pi / 2, 0.0, HULL_MARGIN) for h in hulls)
        checks.append(check("real_line_stabs_all_hulls", real_line))
        if real_line:
            checks.append(check("sweep_finds_transversal", transversal.verdict is StabVerdict.WitnessFound))

    witness = three_disjoint_domains(charted.triplets, tol)
    convex_witness = False
    if witness is None:
        checks.append(not_applicable("domains_contain_unit", "no three disjoint circular domains found"))
    else:
        convex_witness = all(d.kind is not DomainKind.DiskComplement for d in witness.domains)
        for k, domain in zip(witness.triplets, witness.domains):
            name = f"triplet_{k + 1}_domain_contains_unit"
            if domain.kind is DomainKind.DiskComplement:
                checks.append(not_applicable(name, "disk complements need the full-degree form"))
            else:
                checks.append(check(name, domain.contains(1.0, HULL_MARGIN) or domain.contains(-1.0, HULL_MARGIN)))

    no_transversal = transversal is not None and transversal.verdict is StabVerdict.NoneWithinResolution
    return ScenarioCheckSection(
        tag=ScenarioTag.ThreeDistinct,
        status=overall(checks),
        chart=Chart.Normalized,
        checks=checks,
        contradiction_certified=bool(no_transversal or convex_witness),
        transversal=None if transversal is None else transversal.to_section(),
        domains=DomainWitnessSection(found=False) if witness is None else witness.to_section(True),
        reason="" if identities else "the relation does not hold on these triplets",
    )


def scenario_b_checker(
    c: RelationLike, rs: RootSystem, tolerances: Tolerances = DEFAULT_TOLERANCES
) -> ScenarioCheckSection:
    """Double root, normalized so that the mean of every triplet is 1, which then lies in every hull."""
    _, normalized, charted = _normalized(c, rs, ScenarioTag.DoubleRoot, tolerances)
    checks: List[Check] = []
    identities = True
    for index, (triplet, values) in enumerate(zip(normalized.triplets(), charted.triplets), start=1):
        s0, s1, _, _ = sym_elem(*triplet)
        identity = _relative(s1, 3 * s0)
        identities &= identity <= IDENTITY_TOL
        checks.append(check(f"triplet_{index}_s1_equals_3", identity <= IDENTITY_TOL, identity))
        if None in values:
            checks.append(not_applicable(f"triplet_{index}_hull_contains_one", "a root lies at infinity in this chart"))
            continue
        margin = convex_hull(values).signed_distance(1.0)
        checks.append(check(f"triplet_{index}_hull_contains_one", margin <= HULL_MARGIN, margin))

    pairs = _disjoint_pairs(charted, tolerances.tol_geo)
    return ScenarioCheckSection(
        tag=ScenarioTag.DoubleRoot,
        status=overall(checks),
        chart=Chart.Normalized,
        checks=checks,
        disjoint_pairs=pairs,
        contradiction_certified=bool(pairs),
        reason="" if identities else "the relation does not hold on these triplets",
    )


def scenario_c_checker(
    config: Optional[Configuration],
    rs: Optional[RootSystem],
    p: ProjPoint,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> ScenarioCheckSection:
    """
    Triple root p: the relation says every triplet contains p.

    t_ij = p exactly when x_j lies on the ray from x_i towards the ideal point of p, and a
    chain of such rays always ends at a point whose triplet avoids p.
    """
    if rs is None:
        if config is None:
            raise InvalidInputError("scenario c needs a configuration or a root system")
        rs = root_system(config)
    incidence = sorted((i, j) for i, j, w in rs.items() if proj_distance(w, p) <= tolerances.tol_proj)
    avoiding = [i for i in range(rs.size) if all(a != i for a, _ in incidence)]
    if config is None:
        # a planted system satisfies the relation, so every triplet must meet p
        checks = [check(f"triplet_{i + 1}_contains_p", i not in avoiding) for i in range(rs.size)]
        checks.append(not_applicable("ray_agreement", "synthetic root system without ball points"))
    else:
        checks = [check("chain_ends_off_p", bool(avoiding), detail=f"{len(avoiding)} triplets avoid p")]
        target = inverse_stereographic(p).coords
        rays = sorted(
            (i, j)
            for i in range(N_POINTS)
            for j in range(N_POINTS)
            if i != j
            and np.linalg.norm(endpoint_oracle(config.points[i], config.points[j], config.min_sep).coords - target)
            <= ORACLE_TOL
        )
        checks.append(check("ray_agreement", rays == incidence, detail=f"{len(rays)} rays end at p"))
    return ScenarioCheckSection(
        tag=ScenarioTag.TripleRoot,
        status=overall(checks),
        chart=Chart.Stereographic,
        checks=checks,
        contradiction_certified=bool(avoiding),
        incidence_set=[[i + 1, j + 1] for i, j in incidence],
        avoiding_triplets=[i + 1 for i in avoiding],
    )


# ---------------------------------------------------------------------------
# full report


def _relation_section(
    relation: RelationVector, scenario: Scenario, source: RelationSource, residual: Optional[float]
) -> RelationSection:
    cubic = scenario.cubic
    return RelationSection(
        source=source,
        relation=relation.to_json(),
        residual=residual,
        scenario=scenario.tag,
        normalizer=scenario.normalizer.to_json(),
        relative_discriminant=cubic.discriminant,
        relative_hessian=cubic.hessian,
        roots=[_complex_json(w.affine) for w in cubic.roots],
        multiplicities=list(cubic.multiplicities),
    )


def run_scenario_checker(
    scenario: Scenario,
    relation: RelationVector,
    config: Optional[Configuration],
    rs: RootSystem,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> ScenarioCheckSection:
    if scenario.tag is ScenarioTag.ThreeDistinct:
        return scenario_a_checker(relation, rs, tolerances)
    if scenario.tag is ScenarioTag.DoubleRoot:
        return scenario_b_checker(relation, rs, tolerances)
    return scenario_c_checker(config, rs, scenario.cubic.roots[0], tolerances)


def certify(
    config: Configuration,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
    planted_c: Optional[RelationLike] = None,
    seed: int = 0,
) -> CertificateReport:
    """
    Every predicate on one configuration.

    Without planted_c the relation is the null direction of M and the scenario checker runs on
    the configuration's own roots; with it, the checker replays on a root system planted with
    that relation (seeded), while the geometric sections still describe the configuration.
    """
    rs = root_system(config)
    _, cop_residual = coplanarity_test(config, tolerances.tol_cop)
    matrix = matrix_from_root_system(rs)
    null, residual = relation_nullvector(matrix)

    if planted_c is None:
        relation, source, replay, replay_config = null, RelationSource.NullVector, rs, config
    else:
        relation = planted_c if isinstance(planted_c, RelationVector) else RelationVector(planted_c)
        source, replay_config = RelationSource.Planted, None
        replay = plant_root_system(relation, np.random.default_rng(seed))
    scenario = classify_scenario(relation, tolerances)
    scenario_check = run_scenario_checker(scenario, relation, replay_config, replay, tolerances)
    scenario_check.source = source

    return CertificateReport(
        theorem_case=theorem_case(config, tolerances),
        coplanarity_residual=cop_residual,
        measure=independence_measure(matrix),
        residual=residual,
        relation=_relation_section(relation, scenario, source, residual if planted_c is None else None),
        incidence=incidence_audit(config, tolerances, rs),
        coplanar_audit=coplanar_audit(config, tolerances, rs),
        signature=type_signature(config, tolerances, rs),
        hulls=hull_section(rs, tolerances),
        scenario_check=scenario_check,
    )
