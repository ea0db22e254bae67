"""Point types of the closed Poincare ball shared by every geometry module."""

from dataclasses import dataclass
from typing import List, Sequence, Union

import numpy as np

from errors import InvalidInputError

BALL_MARGIN = 1e-12
# computed ideal points drift off the sphere by rounding; anything farther is a bug upstream
SPHERE_SLACK = 1e-6


def _as_vector(coords: Union[Sequence[float], np.ndarray], kind: str) -> np.ndarray:
    try:
        vector = np.array(coords, dtype=float).reshape(3)
    except (TypeError, ValueError) as exc:
        raise InvalidInputError(f"{kind} needs three real coordinates, got {coords!r}") from exc
    if not np.all(np.isfinite(vector)):
        raise InvalidInputError(f"{kind} coordinates must be finite, got {vector.tolist()}")
    return vector


@dataclass(frozen=True, eq=False)
class BallPoint:
    """A point of H^3 in the open unit ball."""

    coords: np.ndarray

    def __post_init__(self):
        vector = _as_vector(self.coords, "BallPoint")
        norm = float(np.linalg.norm(vector))
        if norm > 1.0 - BALL_MARGIN:
            raise InvalidInputError(f"BallPoint must lie strictly inside the unit ball, norm = {norm!r}")
        vector.setflags(write=False)
        object.__setattr__(self, "coords", vector)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.coords))

    def tolist(self) -> List[float]:
        return [float(x) for x in self.coords]

    def isclose(self, other: "BallPoint", tol: float = 1e-12) -> bool:
        return bool(np.linalg.norm(self.coords - other.coords) <= tol)

    def __repr__(self) -> str:
        return f"BallPoint({self.tolist()})"


@dataclass(frozen=True, eq=False)
class IdealPoint:
    """A point of the sphere at infinity, stored with unit norm."""

    coords: np.ndarray

    def __post_init__(self):
        vector = _as_vector(self.coords, "IdealPoint")
        norm = float(np.linalg.norm(vector))
        if abs(norm - 1.0) > SPHERE_SLACK:
            raise InvalidInputError(f"IdealPoint must lie on the unit sphere, norm = {norm!r}")
        vector = vector / norm
        vector.setflags(write=False)
        object.__setattr__(self, "coords", vector)

    def tolist(self) -> List[float]:
        return [float(x) for x in self.coords]

    def isclose(self, other: "IdealPoint", tol: float = 1e-12) -> bool:
        return bool(np.linalg.norm(self.coords - other.coords) <= tol)

    def __repr__(self) -> str:
        return f"IdealPoint({self.tolist()})"
