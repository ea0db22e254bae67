"""
CP^1 in homogeneous coordinates.

A point is a pair (u, v) with affine coordinate t = v/u, so u = 0 is the point at
infinity. The sphere at infinity is identified with CP^1 by stereographic projection
from the north pole (0, 0, 1), which therefore maps to infinity.
"""

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from errors import ConsistencyError, DegenerateInputError, InvalidInputError
from points import IdealPoint

if TYPE_CHECKING:
    from ball_model import BallIsometry

logger = logging.getLogger(__name__)

TOL_PROJ = 1e-10
MOBIUS_DET_MIN = 1e-12
# swaps the roles of u and v; conjugating by it turns (a, b; c, d) into its action on (u, v)
_SWAP = np.array([[0, 1], [1, 0]], dtype=complex)


@dataclass(frozen=True, eq=False)
class ProjPoint:
    """A point of CP^1, stored normalized to max(|u|, |v|) = 1."""

    u: complex
    v: complex

    def __post_init__(self):
        u, v = complex(self.u), complex(self.v)
        if not (np.isfinite(u) and np.isfinite(v)):
            raise InvalidInputError(f"homogeneous coordinates must be finite, got ({u}, {v})")
        scale = max(abs(u), abs(v))
        if scale < 1e-300:
            raise DegenerateInputError("(0, 0) is not a point of CP^1")
        object.__setattr__(self, "u", u / scale)
        object.__setattr__(self, "v", v / scale)

    @classmethod
    def from_affine(cls, t: Optional[complex]) -> "ProjPoint":
        """None stands for the point at infinity."""
        if t is None:
            return INFINITY
        return cls(1.0, complex(t))

    @property
    def affine(self) -> Optional[complex]:
        if self.u == 0:
            return None
        return self.v / self.u

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.u, self.v], dtype=complex)

    def is_infinite(self, tol: float = TOL_PROJ) -> bool:
        return proj_distance(self, INFINITY) <= tol

    def equals(self, other: "ProjPoint", tol: float = TOL_PROJ) -> bool:
        return proj_distance(self, other) <= tol

    def to_json(self) -> Dict[str, List[float]]:
        return {"u": [self.u.real, self.u.imag], "v": [self.v.real, self.v.imag]}

    @classmethod
    def from_json(cls, data: Dict[str, Sequence[float]]) -> "ProjPoint":
        try:
            return cls(complex(*data["u"]), complex(*data["v"]))
        except (KeyError, TypeError) as exc:
            raise InvalidInputError(f"ProjPoint JSON needs 'u' and 'v' as [re, im], got {data!r}") from exc

    def __repr__(self) -> str:
        t = self.affine
        return "ProjPoint(t=inf)" if t is None else f"ProjPoint(t={t:.6g})"


ZERO = ProjPoint(1.0, 0.0)
ONE = ProjPoint(1.0, 1.0)
INFINITY = ProjPoint(0.0, 1.0)


def proj_distance(p: ProjPoint, q: ProjPoint) -> float:
    """|u1 v2 - u2 v1| / (|w1| |w2|): the sine of the Fubini-Study angle, 0 iff p = q."""
    cross = p.u * q.v - p.v * q.u
    return float(abs(cross) / (np.hypot(abs(p.u), abs(p.v)) * np.hypot(abs(q.u), abs(q.v))))


@dataclass(frozen=True, eq=False)
class MobiusMap:
    """t -> (a t + b) / (c t + d), stored with determinant 1 (sign is irrelevant in PSL)."""

    entries: np.ndarray

    def __post_init__(self):
        try:
            m = np.array(self.entries, dtype=complex).reshape(2, 2)
        except (TypeError, ValueError) as exc:
            raise InvalidInputError(f"MobiusMap needs a 2x2 complex matrix, got {self.entries!r}") from exc
        if not np.all(np.isfinite(m)):
            raise InvalidInputError("MobiusMap entries must be finite")
        scale = float(np.linalg.norm(m))
        det = np.linalg.det(m)
        if scale == 0 or abs(det) < MOBIUS_DET_MIN * scale**2:
            raise DegenerateInputError(f"Moebius matrix is singular, |det| = {abs(det):.3e}")
        m = m / np.sqrt(det)
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @classmethod
    def identity(cls) -> "MobiusMap":
        return cls(np.eye(2))

    @classmethod
    def from_homogeneous(cls, matrix: np.ndarray) -> "MobiusMap":
        """Build from the matrix acting on column vectors (u, v)."""
        return cls(_SWAP @ np.asarray(matrix, dtype=complex) @ _SWAP)

    @property
    def homogeneous(self) -> np.ndarray:
        """The action on (u, v): (u, v) -> (d u + c v, b u + a v)."""
        return _SWAP @ self.entries @ _SWAP

    def compose(self, other: "MobiusMap") -> "MobiusMap":
        """self after other."""
        return MobiusMap(self.entries @ other.entries)

    def inverse(self) -> "MobiusMap":
        (a, b), (c, d) = self.entries
        return MobiusMap(np.array([[d, -b], [-c, a]]))

    def isclose(self, other: "MobiusMap", tol: float = 1e-9) -> bool:
        diff = min(np.linalg.norm(self.entries - other.entries), np.linalg.norm(self.entries + other.entries))
        return bool(diff <= tol)

    def __call__(self, p: ProjPoint) -> ProjPoint:
        return apply_mobius(self, p)

    def to_json(self) -> List[List[List[float]]]:
        return [[[z.real, z.imag] for z in row] for row in self.entries]


def apply_mobius(m: MobiusMap, p: ProjPoint) -> ProjPoint:
    u, v = m.homogeneous @ p.vector
    return ProjPoint(u, v)


def _linear_form(p: ProjPoint) -> np.ndarray:
    """Row vector of the linear form (u, v) -> u_p v - v_p u, which vanishes exactly at p."""
    return np.array([-p.v, p.u], dtype=complex)


def _to_standard_frame(p1: ProjPoint, p2: ProjPoint, p3: ProjPoint) -> np.ndarray:
    """Homogeneous matrix sending p1 -> 0, p2 -> 1, p3 -> infinity."""
    l1, l3 = _linear_form(p1), _linear_form(p3)
    alpha = l1 @ p2.vector
    beta = l3 @ p2.vector
    return np.vstack([alpha * l3, beta * l1])


def mobius_from_three_points(
    p1: ProjPoint,
    p2: ProjPoint,
    p3: ProjPoint,
    q1: ProjPoint,
    q2: ProjPoint,
    q3: ProjPoint,
    tol: float = TOL_PROJ,
) -> MobiusMap:
    """The unique Moebius map with p_k -> q_k for k = 1, 2, 3."""
    for label, triple in (("source", (p1, p2, p3)), ("target", (q1, q2, q3))):
        a, b, c = triple
        if min(proj_distance(a, b), proj_distance(b, c), proj_distance(a, c)) <= tol:
            raise DegenerateInputError(f"{label} points of a three-point map must be pairwise distinct")
    forward = _to_standard_frame(p1, p2, p3)
    backward = _to_standard_frame(q1, q2, q3)
    # adjugate is the inverse up to scale, which is all CP^1 needs
    (a, b), (c, d) = backward
    m = MobiusMap.from_homogeneous(np.array([[d, -b], [-c, a]]) @ forward)
    for p, q in ((p1, q1), (p2, q2), (p3, q3)):
        miss = proj_distance(apply_mobius(m, p), q)
        if miss > 1e-10:
            logger.error(f"three-point map misses its target by {miss:.3e}")
            raise ConsistencyError(f"three-point Moebius map misses a target by {miss:.3e}")
    return m


def stereographic(p: IdealPoint) -> ProjPoint:
    """Projection from the north pole: t = (x + i y) / (1 - z)."""
    x, y, z = p.coords
    if z <= 0:
        return ProjPoint(1.0 - z, complex(x, y))
    # same point written as t = (1 + z) / (x - i y), stable near the pole
    return ProjPoint(complex(x, -y), 1.0 + z)


def inverse_stereographic(p: ProjPoint) -> IdealPoint:
    vu = p.v * p.u.conjugate()
    uu, vv = abs(p.u) ** 2, abs(p.v) ** 2
    return IdealPoint(np.array([2.0 * vu.real, 2.0 * vu.imag, vv - uu]) / (uu + vv))


_REFERENCE_POINTS = (
    IdealPoint([0.0, 0.0, -1.0]),
    IdealPoint([1.0, 0.0, 0.0]),
    IdealPoint([0.0, 0.0, 1.0]),
)
_CHECK_POINT = IdealPoint([0.0, 1.0, 0.0])


def boundary_action(g: "BallIsometry") -> MobiusMap:
    """The Moebius map induced on the sphere at infinity by a ball isometry."""
    sources = [stereographic(p) for p in _REFERENCE_POINTS]
    targets = [stereographic(g.apply(p)) for p in _REFERENCE_POINTS]
    m = mobius_from_three_points(*sources, *targets)
    miss = proj_distance(apply_mobius(m, stereographic(_CHECK_POINT)), stereographic(g.apply(_CHECK_POINT)))
    if miss > 1e-9:
        logger.error(f"boundary action fails its fourth-point check by {miss:.3e}")
        raise ConsistencyError(f"boundary action does not match the isometry: miss {miss:.3e}")
    return m


@dataclass(frozen=True, eq=False)
class RootSystem:
    """
    The roots t_ij (i != j) of the four polynomials, as points of CP^1.

    ideal keeps the unit-sphere preimages when the system comes from a configuration;
    synthetic and transported systems carry none.
    """

    roots: Tuple[Tuple[Optional[ProjPoint], ...], ...]
    ideal: Optional[Tuple[Tuple[Optional[IdealPoint], ...], ...]] = None

    @property
    def size(self) -> int:
        return len(self.roots)

    def root(self, i: int, j: int) -> ProjPoint:
        if i == j:
            raise InvalidInputError("the diagonal of a root system is unset")
        return self.roots[i][j]

    def triplet(self, i: int) -> Tuple[ProjPoint, ...]:
        return tuple(self.roots[i][j] for j in range(self.size) if j != i)

    def triplets(self) -> List[Tuple[ProjPoint, ...]]:
        return [self.triplet(i) for i in range(self.size)]

    def items(self) -> Iterator[Tuple[int, int, ProjPoint]]:
        for i in range(self.size):
            for j in range(self.size):
                if i != j:
                    yield i, j, self.roots[i][j]

    @classmethod
    def from_triplets(cls, triplets: Sequence[Sequence[ProjPoint]]) -> "RootSystem":
        n = len(triplets)
        rows = []
        for i, triplet in enumerate(triplets):
            if len(triplet) != n - 1:
                raise InvalidInputError(f"triplet {i} has {len(triplet)} roots, expected {n - 1}")
            others = iter(triplet)
            rows.append(tuple(None if j == i else next(others) for j in range(n)))
        return cls(tuple(rows))

    def transported(self, m: MobiusMap) -> "RootSystem":
        return RootSystem.from_triplets([[apply_mobius(m, w) for w in t] for t in self.triplets()])

    def to_json(self) -> List[Dict]:
        return [
            {"i": i + 1, "j": j + 1, "root": w.to_json(), "affine": _affine_json(w)}
            for i, j, w in self.items()
        ]


def _affine_json(p: ProjPoint) -> Optional[List[float]]:
    t = p.affine
    return None if t is None else [t.real, t.imag]


def random_proj_point(rng: np.random.Generator) -> ProjPoint:
    direction = rng.normal(size=3)
    return stereographic(IdealPoint(direction / np.linalg.norm(direction)))


def random_mobius(rng: np.random.Generator) -> MobiusMap:
    while True:
        m = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        if abs(np.linalg.det(m)) > 1e-2:
            return MobiusMap(m)
