import os
from typing import Dict, Optional

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field

ENV_PREFIX = "ATIYAH_"


class Tolerances(BaseModel):
    """Every numeric threshold used by the library, echoed into CLI output."""

    model_config = ConfigDict(frozen=True)

    min_sep: float = Field(
        default=1e-6, gt=0, description="Minimum pairwise hyperbolic distance of configuration points"
    )
    r_max: float = Field(
        default=0.999, gt=0, lt=1, description="Maximum Euclidean norm of a configuration point"
    )
    tol_cop: float = Field(
        default=1e-9, gt=0, description="Coplanarity threshold on the relative smallest singular value"
    )
    tol_hull: float = Field(
        default=1e-12, ge=0, description="Slack of the signed-area tests in hull membership"
    )
    tol_proj: float = Field(
        default=1e-10, gt=0, description="Projective equality threshold on |u1 v2 - u2 v1|"
    )
    tol_scen: float = Field(
        default=1e-8, ge=0, description="Relative discriminant threshold separating three distinct roots"
    )
    tol_root: float = Field(
        default=1e-8, ge=0, description="Relative Hessian threshold detecting a triple root"
    )
    tol_geo: float = Field(
        default=1e-10, ge=0, description="Margin of planar hull, disk and line predicates"
    )
    tol_residual: float = Field(
        default=1e-10, ge=0, description="Relative smallest singular value below which M counts as singular"
    )
    tol_measure: float = Field(
        default=1e-12, ge=0, description="Independence measure below which M counts as singular"
    )
    tol_incidence: float = Field(
        default=1e-8, gt=0, description="Distance from a root to a face plane counted as on-circle"
    )

    @classmethod
    def from_env(cls, overrides: Optional[Dict[str, float]] = None) -> "Tolerances":
        """Defaults, then ATIYAH_<FIELD> environment variables, then explicit overrides."""
        load_dotenv()
        values: Dict[str, float] = {}
        for name in cls.model_fields:
            raw = os.getenv(ENV_PREFIX + name.upper())
            if raw is not None:
                values[name] = float(raw)
        for name, value in (overrides or {}).items():
            if value is not None:
                values[name] = value
        return cls(**values)


def log_level() -> str:
    load_dotenv()
    return os.getenv(ENV_PREFIX + "LOG_LEVEL", "WARNING").upper()


DEFAULT_TOLERANCES = Tolerances()
