"""
Hyperbolic 3-space in the Poincare open ball.

The basic isometry is the ball translation

    phi_a(x) = ((1 - |a|^2)(x - a) - |x - a|^2 a) / (1 - 2<a, x> + |a|^2 |x|^2)

which sends a to the origin, has phi_{-a} as inverse and extends to the unit sphere.
"""

import json
import logging
from dataclasses import dataclass
from itertools import combinations
from typing import Callable, List, Optional, Sequence, Tuple, TypeVar, Union

import numpy as np
from scipy.spatial.transform import Rotation

from config import DEFAULT_TOLERANCES, Tolerances
from enums import TheoremCase
from errors import (
    ConsistencyError,
    DegenerateInputError,
    DistinctPointsError,
    InvalidInputError,
    NotCoplanarError,
)
from points import BallPoint, IdealPoint
from riemann_sphere import RootSystem, stereographic

logger = logging.getLogger(__name__)

DENOMINATOR_MIN = 1e-300
ROTATION_TOL = 1e-12
# below this relative cross product the oracle treats x_i, x_j and the origin as one line
ORACLE_COLLINEAR = 1e-12
N_POINTS = 4

AnyPoint = TypeVar("AnyPoint", BallPoint, IdealPoint)


def _translate(a: np.ndarray, x: np.ndarray) -> np.ndarray:
    diff = x - a
    aa = a @ a
    # both terms are non-negative: 1 - 2<a,x> + |a|^2|x|^2 = |x-a|^2 + (1-|a|^2)(1-|x|^2)
    denominator = diff @ diff + (1.0 - aa) * (1.0 - x @ x)
    if denominator < DENOMINATOR_MIN:
        raise DegenerateInputError(f"ball translation denominator vanished ({denominator:.3e})")
    return ((1.0 - aa) * diff - (diff @ diff) * a) / denominator


def _rewrap(like: Union[BallPoint, IdealPoint], coords: np.ndarray):
    return IdealPoint(coords) if isinstance(like, IdealPoint) else BallPoint(coords)


def mobius_translate(a: BallPoint, x: AnyPoint) -> AnyPoint:
    """phi_a(x); ball points stay in the ball and ideal points stay on the sphere."""
    return _rewrap(x, _translate(a.coords, x.coords))


def hyperbolic_distance(x: BallPoint, y: BallPoint) -> float:
    """arcosh(1 + 2|x-y|^2 / ((1-|x|^2)(1-|y|^2))), written with asinh to keep short distances exact."""
    diff = x.coords - y.coords
    ratio = (diff @ diff) / ((1.0 - x.coords @ x.coords) * (1.0 - y.coords @ y.coords))
    return float(2.0 * np.arcsinh(np.sqrt(ratio)))


@dataclass(frozen=True, eq=False)
class BallIsometry:
    """Orientation-preserving isometry x -> phi_a(R x)."""

    rotation: np.ndarray
    translation_center: BallPoint

    def __post_init__(self):
        try:
            rotation = np.array(self.rotation, dtype=float).reshape(3, 3)
        except (TypeError, ValueError) as exc:
            raise InvalidInputError("BallIsometry rotation must be a 3x3 real matrix") from exc
        defect = np.linalg.norm(rotation.T @ rotation - np.eye(3))
        if defect >= ROTATION_TOL or np.linalg.det(rotation) <= 0:
            raise InvalidInputError(f"rotation is not in SO(3): |R^T R - I| = {defect:.3e}")
        rotation.setflags(write=False)
        object.__setattr__(self, "rotation", rotation)
        if not isinstance(self.translation_center, BallPoint):
            object.__setattr__(self, "translation_center", BallPoint(self.translation_center))

    @classmethod
    def identity(cls) -> "BallIsometry":
        return cls(np.eye(3), BallPoint(np.zeros(3)))

    @classmethod
    def from_rotation(cls, rotation: np.ndarray) -> "BallIsometry":
        return cls(rotation, BallPoint(np.zeros(3)))

    @classmethod
    def from_action(cls, action: Callable[[np.ndarray], np.ndarray]) -> "BallIsometry":
        """
        Recover (R, a) from any isometry given as a map on closed-ball coordinates.

        a = -action(0), and phi_{-a} o action fixes the origin, so it is the rotation R,
        read off from the boundary images of the axes and projected back onto SO(3).
        """
        center = -action(np.zeros(3))
        columns = [_translate(-center, action(axis)) for axis in np.eye(3)]
        u, _, vt = np.linalg.svd(np.column_stack(columns))
        rotation = u @ vt
        if np.linalg.det(rotation) < 0:
            raise ConsistencyError("reconstructed isometry reverses orientation")
        return cls(rotation, BallPoint(center))

    @classmethod
    def random(cls, rng: np.random.Generator, max_shift: float = 0.5) -> "BallIsometry":
        rotation = Rotation.random(1, rng).as_matrix()[0]
        return cls(rotation, BallPoint(random_ball_point(rng, max_shift)))

    def _act(self, coords: np.ndarray) -> np.ndarray:
        return _translate(self.translation_center.coords, self.rotation @ coords)

    def apply(self, x: AnyPoint) -> AnyPoint:
        return _rewrap(x, self._act(x.coords))

    def apply_configuration(self, config: "Configuration") -> "Configuration":
        return config.replace_points([self.apply(p) for p in config.points])

    def compose(self, other: "BallIsometry") -> "BallIsometry":
        """self after other."""
        return BallIsometry.from_action(lambda x: self._act(other._act(x)))

    def inverse(self) -> "BallIsometry":
        center = self.translation_center.coords
        return BallIsometry.from_action(lambda x: self.rotation.T @ _translate(-center, x))


def random_ball_point(rng: np.random.Generator, radius: float) -> np.ndarray:
    """Uniform in the Euclidean ball of the given radius."""
    direction = rng.normal(size=3)
    direction /= np.linalg.norm(direction)
    return direction * radius * rng.uniform() ** (1.0 / 3.0)


@dataclass(frozen=True, eq=False)
class Configuration:
    """Four distinct points of H^3."""

    points: Tuple[BallPoint, ...]
    min_sep: float = DEFAULT_TOLERANCES.min_sep
    r_max: float = DEFAULT_TOLERANCES.r_max

    def __post_init__(self):
        points = tuple(p if isinstance(p, BallPoint) else BallPoint(p) for p in self.points)
        if len(points) != N_POINTS:
            raise InvalidInputError(f"a configuration has exactly {N_POINTS} points, got {len(points)}")
        for k, p in enumerate(points):
            if p.norm > self.r_max:
                raise InvalidInputError(f"point {k + 1} has norm {p.norm!r} > r_max = {self.r_max}")
        for i, j in combinations(range(N_POINTS), 2):
            distance = hyperbolic_distance(points[i], points[j])
            if distance < self.min_sep:
                raise DistinctPointsError(
                    f"points {i + 1} and {j + 1} are {distance:.3e} apart, below min_sep = {self.min_sep}"
                )
        object.__setattr__(self, "points", points)

    @property
    def coords(self) -> np.ndarray:
        return np.array([p.coords for p in self.points])

    def replace_points(self, points: Sequence[BallPoint]) -> "Configuration":
        return Configuration(tuple(points), min_sep=self.min_sep, r_max=self.r_max)

    def permuted(self, order: Sequence[int]) -> "Configuration":
        return self.replace_points([self.points[k] for k in order])

    def to_json(self) -> dict:
        return {"points": [p.tolist() for p in self.points]}

    @classmethod
    def from_json(cls, data: dict, min_sep: float = DEFAULT_TOLERANCES.min_sep, r_max: float = DEFAULT_TOLERANCES.r_max):
        if not isinstance(data, dict) or not isinstance(data.get("points"), list):
            raise InvalidInputError('configuration JSON must be an object with a "points" array')
        return cls(tuple(BallPoint(p) for p in data["points"]), min_sep=min_sep, r_max=r_max)

    @classmethod
    def loads(cls, text: str, **limits) -> "Configuration":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidInputError(f"configuration is not valid JSON: {exc}") from exc
        return cls.from_json(data, **limits)


def ideal_endpoint(x_i: BallPoint, x_j: BallPoint, min_sep: float = DEFAULT_TOLERANCES.min_sep) -> IdealPoint:
    """Limit on the sphere at infinity of the geodesic ray from x_i through x_j."""
    if hyperbolic_distance(x_i, x_j) < min_sep:
        raise DistinctPointsError("ideal endpoint needs two distinct points")
    image = _translate(x_i.coords, x_j.coords)
    return IdealPoint(_translate(-x_i.coords, image / np.linalg.norm(image)))


def endpoint_oracle(x_i: BallPoint, x_j: BallPoint, min_sep: float = DEFAULT_TOLERANCES.min_sep) -> IdealPoint:
    """
    Same contract as ideal_endpoint, through the Euclidean circle orthogonal to the sphere.

    The geodesic lies in the plane spanned by the origin, x_i and x_j. In that plane its
    circle has center c with <x, c> = (|x|^2 + 1)/2 for both points, and meets the unit
    circle on the line <z, c> = 1. The endpoint is the intersection reached after x_j when
    moving along the arc from x_i.
    """
    if hyperbolic_distance(x_i, x_j) < min_sep:
        raise DistinctPointsError("endpoint oracle needs two distinct points")
    p, q = x_i.coords, x_j.coords
    cross = np.cross(p, q)
    if np.linalg.norm(cross) <= ORACLE_COLLINEAR * max(np.linalg.norm(p) * np.linalg.norm(q), 1e-300):
        direction = q - p
        return IdealPoint(direction / np.linalg.norm(direction))

    e1 = p / np.linalg.norm(p)
    e2 = q - (q @ e1) * e1
    e2 /= np.linalg.norm(e2)
    basis = np.vstack([e1, e2])
    p2, q2 = basis @ p, basis @ q
    center = np.linalg.solve(np.vstack([p2, q2]), 0.5 * np.array([p2 @ p2 + 1.0, q2 @ q2 + 1.0]))
    cc = center @ center
    foot = center / cc
    half_chord = np.sqrt(max(1.0 - 1.0 / cc, 0.0))
    normal = np.array([-center[1], center[0]]) / np.sqrt(cc)

    def angle_from_p(z: np.ndarray) -> float:
        a0 = np.arctan2(*(p2 - center)[::-1])
        a1 = np.arctan2(*(z - center)[::-1])
        return float(np.angle(np.exp(1j * (a1 - a0))))

    forward = np.sign(angle_from_p(q2))
    for candidate in (foot + half_chord * normal, foot - half_chord * normal):
        if np.sign(angle_from_p(candidate)) == forward:
            return IdealPoint(basis.T @ candidate)
    raise ConsistencyError("endpoint oracle found no intersection ahead of x_j")


def root_system(config: Configuration) -> RootSystem:
    """All twelve t_ij as points of CP^1, with their sphere preimages kept."""
    ideal = [[None] * N_POINTS for _ in range(N_POINTS)]
    roots = [[None] * N_POINTS for _ in range(N_POINTS)]
    for i in range(N_POINTS):
        for j in range(N_POINTS):
            if i != j:
                ideal[i][j] = ideal_endpoint(config.points[i], config.points[j], config.min_sep)
                roots[i][j] = stereographic(ideal[i][j])
    return RootSystem(tuple(map(tuple, roots)), tuple(map(tuple, ideal)))


def _centered_images(config: Configuration) -> np.ndarray:
    """All four points after translating x_1 to the origin (row 0 is the origin)."""
    anchor = config.points[0].coords
    return np.array([_translate(anchor, p.coords) for p in config.points])


def coplanarity_test(config: Configuration, tol_cop: float = DEFAULT_TOLERANCES.tol_cop) -> Tuple[bool, float]:
    """
    After moving x_1 to the origin every hyperbolic plane through it is a linear plane,
    so the configuration is coplanar iff the images of x_2, x_3, x_4 have rank two.
    """
    singular = np.linalg.svd(_centered_images(config)[1:], compute_uv=False)
    residual = float(singular[-1] / singular[0])
    return residual < tol_cop, residual


def to_klein(p: np.ndarray) -> np.ndarray:
    return 2.0 * p / (1.0 + p @ p)


def from_klein(k: np.ndarray) -> np.ndarray:
    return k / (1.0 + np.sqrt(max(1.0 - k @ k, 0.0)))


def _cross2(a: np.ndarray, b: np.ndarray) -> float:
    return float(a[0] * b[1] - a[1] * b[0])


def point_in_triangle(k: np.ndarray, a: np.ndarray, b: np.ndarray, c: np.ndarray, tol: float) -> bool:
    """Closed triangle test; a degenerate triangle is treated as the segment it spans."""
    area = _cross2(b - a, c - a)
    if abs(area) <= tol:
        ends = max(combinations((a, b, c), 2), key=lambda pair: np.linalg.norm(pair[1] - pair[0]))
        s0, s1 = ends
        span = s1 - s0
        length = float(np.linalg.norm(span))
        if length == 0.0:
            return bool(np.linalg.norm(k - s0) <= tol)
        along = float((k - s0) @ span) / length
        return abs(_cross2(span, k - s0)) / length <= tol and -tol <= along <= length + tol
    orientation = np.sign(area)
    return all(
        orientation * _cross2(end - start, k - start) >= -tol
        for start, end in ((a, b), (b, c), (c, a))
    )


def plane_chart(config: Configuration) -> np.ndarray:
    """Klein-model coordinates of the four points in their common plane (x_1 at the origin)."""
    images = _centered_images(config)
    _, _, vt = np.linalg.svd(images[1:])
    disk = images @ vt[:2].T
    return np.array([to_klein(p) for p in disk])


def hull_membership(
    config: Configuration,
    tol_cop: float = DEFAULT_TOLERANCES.tol_cop,
    tol_hull: float = DEFAULT_TOLERANCES.tol_hull,
) -> Optional[int]:
    """Zero-based index of a point lying in the hyperbolic hull of the other three, or None."""
    coplanar, residual = coplanarity_test(config, tol_cop)
    if not coplanar:
        raise NotCoplanarError(f"hull membership needs a coplanar configuration (residual {residual:.3e})")
    klein = plane_chart(config)
    for index in range(N_POINTS):
        others = [klein[k] for k in range(N_POINTS) if k != index]
        if point_in_triangle(klein[index], *others, tol_hull):
            return index
    return None


def theorem_case(config: Configuration, tolerances: Tolerances = DEFAULT_TOLERANCES) -> TheoremCase:
    coplanar, _ = coplanarity_test(config, tolerances.tol_cop)
    if not coplanar:
        return TheoremCase.NonCoplanar
    if hull_membership(config, tolerances.tol_cop, tolerances.tol_hull) is not None:
        return TheoremCase.CoplanarHull
    return TheoremCase.CoplanarOther


def geodesic_configuration(radii: Sequence[float], isometry: Optional[BallIsometry] = None, **limits) -> Configuration:
    """Points at signed positions along the x-axis diameter, optionally moved by an isometry."""
    points: List[BallPoint] = [BallPoint([r, 0.0, 0.0]) for r in radii]
    if isometry is not None:
        points = [isometry.apply(p) for p in points]
    return Configuration(tuple(points), **limits)
